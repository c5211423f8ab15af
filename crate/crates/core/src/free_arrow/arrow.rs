//! Arrow terms over operations and their normal forms.

use std::fmt;

use crate::error::EvalError;
use crate::syntax::{OpName, Term, Ty};

use super::canon::{canonical, canonical_fun, INPUT};
use super::PureFun;

#[derive(Clone, Debug, PartialEq)]
pub enum ArrTerm {
    Arr(PureFun),
    Op { op: OpName, dom: Ty, cod: Ty },
    Seq(Box<ArrTerm>, Box<ArrTerm>),
    /// `first_Z(a) : X × Z → Y × Z`.
    First(Ty, Box<ArrTerm>),
}

impl ArrTerm {
    pub fn arr(f: PureFun) -> ArrTerm {
        ArrTerm::Arr(f)
    }

    pub fn op(op: OpName, dom: Ty, cod: Ty) -> ArrTerm {
        ArrTerm::Op { op, dom, cod }
    }

    pub fn seq(self, next: ArrTerm) -> ArrTerm {
        ArrTerm::Seq(Box::new(self), Box::new(next))
    }

    pub fn first(z: Ty, a: ArrTerm) -> ArrTerm {
        ArrTerm::First(z, Box::new(a))
    }

    pub fn dom(&self) -> Ty {
        match self {
            ArrTerm::Arr(f) => f.dom.clone(),
            ArrTerm::Op { dom, .. } => dom.clone(),
            ArrTerm::Seq(a, _) => a.dom(),
            ArrTerm::First(z, a) => Ty::pair(a.dom(), z.clone()),
        }
    }

    pub fn cod(&self) -> Ty {
        match self {
            ArrTerm::Arr(f) => f.cod.clone(),
            ArrTerm::Op { cod, .. } => cod.clone(),
            ArrTerm::Seq(_, b) => b.cod(),
            ArrTerm::First(z, a) => Ty::pair(a.cod(), z.clone()),
        }
    }

    /// Number of operation leaves.
    pub fn op_count(&self) -> usize {
        match self {
            ArrTerm::Arr(_) => 0,
            ArrTerm::Op { .. } => 1,
            ArrTerm::Seq(a, b) => a.op_count() + b.op_count(),
            ArrTerm::First(_, a) => a.op_count(),
        }
    }

    /// Checks that every composite lines up.
    pub fn well_formed(&self) -> Result<(), String> {
        match self {
            ArrTerm::Arr(_) | ArrTerm::Op { .. } => Ok(()),
            ArrTerm::Seq(a, b) => {
                a.well_formed()?;
                b.well_formed()?;
                if a.cod().equiv(&b.dom()) {
                    Ok(())
                } else {
                    Err(format!("composite of {} and {}", a.cod(), b.dom()))
                }
            }
            ArrTerm::First(_, a) => a.well_formed(),
        }
    }
}

impl fmt::Display for ArrTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrTerm::Arr(g) => write!(f, "arr({g})"),
            ArrTerm::Op { op, .. } => write!(f, "{op}"),
            ArrTerm::Seq(a, b) => write!(f, "({a} >>> {b})"),
            ArrTerm::First(z, a) => write!(f, "first[{z}]({a})"),
        }
    }
}

/// One operation of a normal form. Its argument is computed from the
/// environment holding the input and every earlier operation's output.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub arg: PureFun,
    pub op: OpName,
    pub op_dom: Ty,
    pub op_cod: Ty,
}

/// `arr(f0) >>> first[Z1](Op1) >>> arr(f1) >>> … >>> arr(fk)` kept in
/// environment-passing shape. After `i` operations the environment is the
/// input itself when `i = 0` and the tuple `(input, out1, …, outi)` otherwise,
/// so each context `Zi` is determined by the operations and nothing has to
/// be chosen when sliding pure maps past an operation.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    pub dom: Ty,
    pub steps: Vec<Step>,
    pub out: PureFun,
}

/// Term for the input component of environment `e` after `i` operations.
fn input_of(e: Term, i: usize) -> Term {
    if i == 0 {
        e
    } else {
        Term::proj(1, e)
    }
}

/// Term for the `j`-th operation output (1-based) held in environment `e`.
fn output_of(e: Term, j: usize) -> Term {
    Term::proj(j + 1, e)
}

/// Builds an environment from an input term and a list of output terms.
fn env_term(input: Term, outs: Vec<Term>) -> Term {
    if outs.is_empty() {
        input
    } else {
        let mut cs = vec![input];
        cs.extend(outs);
        Term::Tuple(cs)
    }
}

impl NormalForm {
    pub fn cod(&self) -> Ty {
        self.out.cod.clone()
    }

    /// Type of the environment after `i` operations.
    pub fn env_ty(&self, i: usize) -> Ty {
        if i == 0 {
            self.dom.clone()
        } else {
            let mut cs = vec![self.dom.clone()];
            cs.extend(self.steps[..i].iter().map(|s| s.op_cod.clone()));
            Ty::Prod(cs)
        }
    }

    /// The alternating segment list, all pure segments canonical.
    pub fn segments(&self) -> Result<Vec<ArrTerm>, EvalError> {
        let k = self.steps.len();
        if k == 0 {
            return Ok(vec![ArrTerm::Arr(self.out.clone())]);
        }
        let x = Term::var(INPUT);
        let mut segs = Vec::with_capacity(2 * k + 1);
        let f0 = Term::pair(self.steps[0].arg.apply_term(&x), x.clone());
        segs.push(ArrTerm::Arr(canonical_fun(INPUT, &f0, &self.dom)?));
        for i in 1..=k {
            let s = &self.steps[i - 1];
            segs.push(ArrTerm::first(self.env_ty(i - 1), ArrTerm::op(s.op.clone(), s.op_dom.clone(), s.op_cod.clone())));
            // (b, e) ↦ e' = e extended by b
            let prev = Term::proj(2, x.clone());
            let outs = (1..i).map(|j| output_of(prev.clone(), j)).chain([Term::proj(1, x.clone())]).collect();
            let env = env_term(input_of(prev.clone(), i - 1), outs);
            let dom = Ty::pair(s.op_cod.clone(), self.env_ty(i - 1));
            let e = "e#env";
            let body = if i < k {
                Term::pair(self.steps[i].arg.apply_term(&Term::var(e)), Term::var(e))
            } else {
                self.out.apply_term(&Term::var(e))
            };
            segs.push(ArrTerm::Arr(canonical_fun(INPUT, &Term::let_(e, env, body), &dom)?));
        }
        Ok(segs)
    }

    /// The segment list as one right-associated arrow term.
    pub fn to_arr(&self) -> Result<ArrTerm, EvalError> {
        let mut segs = self.segments()?;
        let mut acc = segs.pop().expect("at least one segment");
        while let Some(s) = segs.pop() {
            acc = s.seq(acc);
        }
        Ok(acc)
    }

    fn canonicalized(self) -> Result<NormalForm, EvalError> {
        let steps = self
            .steps
            .into_iter()
            .map(|s| Ok(Step { arg: canonical(&s.arg)?, ..s }))
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(NormalForm { dom: self.dom, steps, out: canonical(&self.out)? })
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let segs = self.segments().map_err(|_| fmt::Error)?;
        let parts: Vec<String> = segs
            .iter()
            .map(|s| match s {
                ArrTerm::First(z, a) => format!("first[{z}]({a})"),
                other => other.to_string(),
            })
            .collect();
        write!(f, "{}", parts.join(" >>> "))
    }
}

/// A function of environment `i` of a composite, given as a term over
/// the variable `e`.
fn over_env(dom: &Ty, body: Term) -> Result<PureFun, EvalError> {
    canonical_fun("e#env", &body, dom)
}

const E: &str = "e#env";

fn seq_nf(a: NormalForm, b: NormalForm) -> Result<NormalForm, EvalError> {
    let ka = a.steps.len();
    let mut steps = a.steps.clone();
    let mut all = NormalForm { dom: a.dom.clone(), steps: vec![], out: a.out.clone() };
    // environment of `a` after all its steps, and of `b` after `j` of its own,
    // both read off the combined environment `e` after `ka + j` steps
    let a_env = |j: usize| {
        let e = Term::var(E);
        let input = input_of(e.clone(), ka + j);
        env_term(input, (1..=ka).map(|i| output_of(e.clone(), i)).collect())
    };
    let b_env = |j: usize| {
        let e = Term::var(E);
        let y = a.out.apply_term(&a_env(j));
        env_term(y, (1..=j).map(|i| output_of(e.clone(), ka + i)).collect())
    };
    for (j, s) in b.steps.iter().enumerate() {
        all.steps = steps.clone();
        let arg = over_env(&all.env_ty(ka + j), s.arg.apply_term(&b_env(j)))?;
        steps.push(Step { arg, ..s.clone() });
    }
    all.steps = steps;
    let kb = b.steps.len();
    all.out = over_env(&all.env_ty(ka + kb), b.out.apply_term(&b_env(kb)))?;
    Ok(all)
}

fn first_nf(z: &Ty, a: NormalForm) -> Result<NormalForm, EvalError> {
    let dom = Ty::pair(a.dom.clone(), z.clone());
    let mut nf = NormalForm { dom, steps: vec![], out: a.out.clone() };
    let inner = |i: usize| {
        let e = Term::var(E);
        let input = Term::proj(1, input_of(e.clone(), i));
        env_term(input, (1..=i).map(|j| output_of(e.clone(), j)).collect())
    };
    for (i, s) in a.steps.iter().enumerate() {
        let arg = over_env(&nf.env_ty(i), s.arg.apply_term(&inner(i)))?;
        nf.steps.push(Step { arg, ..s.clone() });
    }
    let k = a.steps.len();
    let ctx = Term::proj(2, input_of(Term::var(E), k));
    nf.out = over_env(&nf.env_ty(k), Term::pair(a.out.apply_term(&inner(k)), ctx))?;
    Ok(nf)
}

/// The normal form of an arrow term modulo the congruence.
pub fn normalize(a: &ArrTerm) -> Result<NormalForm, EvalError> {
    match a {
        ArrTerm::Arr(f) => NormalForm { dom: f.dom.clone(), steps: vec![], out: f.clone() }.canonicalized(),
        ArrTerm::Op { op, dom, cod } => {
            let env = Ty::Prod(vec![dom.clone(), cod.clone()]);
            Ok(NormalForm {
                dom: dom.clone(),
                steps: vec![Step { arg: canonical(&PureFun::identity(dom))?, op: op.clone(), op_dom: dom.clone(), op_cod: cod.clone() }],
                out: canonical_fun(E, &Term::proj(2, Term::var(E)), &env)?,
            })
        }
        ArrTerm::Seq(x, y) => seq_nf(normalize(x)?, normalize(y)?),
        ArrTerm::First(z, x) => first_nf(z, normalize(x)?),
    }
}
