//! Commands as arrow terms, and reverse handlers as algebras over them.

use crate::error::{Error, EvalError};
use crate::signature::Signature;
use crate::syntax::names::all_names_term;
use crate::syntax::{fresh_name, Command, Handler, Term, Ty, TyEnv};
use crate::typecheck::Checker;
use crate::values::{Heap, TieBreak, Value};

use super::arrow::{normalize, ArrTerm, NormalForm};
use super::canon::canonical_fun;
use super::eval::evaluate_arr;

/// The type of an environment: its entries as a tuple, collapsed when
/// there is exactly one and the unit when there are none.
pub fn env_ty(delta: &TyEnv) -> Ty {
    if delta.is_empty() {
        Ty::unit()
    } else {
        Ty::prod(delta.types())
    }
}

/// Term for entry `i` of the environment tuple held in `p`.
fn entry(delta: &TyEnv, p: &str, i: usize) -> Term {
    if delta.len() == 1 {
        Term::var(p)
    } else {
        Term::proj(i + 1, Term::var(p))
    }
}

/// `Δ ⊢ body` as a one-variable function of the environment tuple.
fn env_fun(delta: &TyEnv, body: &Term) -> Result<ArrTerm, EvalError> {
    let mut avoid = all_names_term(body);
    avoid.extend(delta.names().map(str::to_string));
    let p = fresh_name(&avoid, "env");
    let mut t = body.clone();
    for (i, (x, _)) in delta.entries().iter().enumerate().rev() {
        t = Term::let_(x, entry(delta, &p, i), t);
    }
    Ok(ArrTerm::Arr(canonical_fun(&p, &t, &env_ty(delta))?))
}

fn pure(dom: &Ty, binder: &str, body: Term) -> Result<ArrTerm, EvalError> {
    Ok(ArrTerm::Arr(canonical_fun(binder, &body, dom)?))
}

pub struct Denoter<'c, 's> {
    checker: &'c Checker<'s>,
}

impl<'c, 's> Denoter<'c, 's> {
    pub fn new(checker: &'c Checker<'s>) -> Self {
        Denoter { checker }
    }

    /// `⟦Δ ⊢ p⟧ : env_ty(Δ) → A`.
    pub fn command(&self, delta: &TyEnv, p: &Command) -> Result<ArrTerm, Error> {
        match p {
            Command::Ret(m) => Ok(env_fun(delta, m)?),
            Command::Op(op, m) => {
                let s = self.checker.op_sig(op)?;
                Ok(env_fun(delta, m)?.seq(ArrTerm::op(op.clone(), s.coarity, s.arity)))
            }
            Command::Let(x, p1, q) => {
                let a = self.checker.check_command(&TyEnv::new(), delta, p1)?;
                let d = env_ty(delta);
                let inner = delta.extend_front(x, a.clone());
                let diag = pure(&d, "d", Term::pair(Term::var("d"), Term::var("d")))?;
                let run_p = ArrTerm::first(d.clone(), self.command(delta, p1)?);
                // (a, δ) ↦ the tuple of x : A, Δ with shadowed names dropped
                let kept: Vec<Term> = delta
                    .entries()
                    .iter()
                    .enumerate()
                    .filter(|(_, (n, _))| n != x)
                    .map(|(i, _)| entry(delta, "q#d", i))
                    .collect();
                let mut comps = vec![Term::proj(1, Term::var("q"))];
                comps.extend(kept);
                let body = Term::let_("q#d", Term::proj(2, Term::var("q")), Term::tuple_or_single(comps));
                let reshape = pure(&Ty::pair(a, d), "q", body)?;
                let rest = self.command(&inner, q)?;
                Ok(diag.seq(run_p).seq(reshape).seq(rest))
            }
            Command::Handle { seed, binders, body, handler } => {
                let st = self.checker.infer_term(delta, seed)?;
                let parts = st.split(binders.len()).ok_or_else(|| {
                    Error::Type(crate::error::TypeError::RevHandleSeedNotProduct {
                        command: p.to_string(),
                        ty: st.to_string(),
                        binders: binders.len(),
                    })
                })?;
                let inner = TyEnv::from_entries(binders.iter().cloned().zip(parts).collect());
                let r = normalize(&self.command(&inner, body)?)?;
                let alg = self.reverse_algebra_apply(handler, &r)?;
                Ok(env_fun(delta, seed)?.seq(alg))
            }
        }
    }

    /// Folds the normal form right to left through the handler's algebra,
    /// starting from the return clause. The result maps the body's input
    /// type to itself.
    pub fn reverse_algebra_apply(&self, h: &Handler, nf: &NormalForm) -> Result<ArrTerm, Error> {
        let k = self.command(&TyEnv::new().extend_front(&h.ret_binder, nf.cod()), &h.ret_clause)?;
        self.fold(h, nf, k)
    }

    /// `α(nf, k)` for an arbitrary `k` on the codomain of `nf`.
    pub fn fold(&self, h: &Handler, nf: &NormalForm, mut k: ArrTerm) -> Result<ArrTerm, Error> {
        for seg in nf.segments()?.into_iter().rev() {
            k = self.alpha(h, &seg, k)?;
        }
        Ok(k)
    }

    /// One algebra step `α(seg, k)` for a segment of a normal form.
    pub fn alpha(&self, h: &Handler, seg: &ArrTerm, k: ArrTerm) -> Result<ArrTerm, Error> {
        match seg {
            ArrTerm::Arr(f) => {
                let x = f.dom.clone();
                let pair = Term::pair(f.apply_term(&Term::var("a#x")), Term::var("a#x"));
                let fork = pure(&x, "a#x", pair)?;
                let back = ArrTerm::Arr(f.reverse_derivative()?);
                Ok(fork.seq(ArrTerm::first(x, k)).seq(back))
            }
            ArrTerm::First(z, inner) => match inner.as_ref() {
                ArrTerm::Op { op, dom, cod } => self.op_step(h, op, dom, cod, Some(z), k),
                _ => Err(not_segment(seg)),
            },
            ArrTerm::Op { op, dom, cod } => self.op_step(h, op, dom, cod, None, k),
            ArrTerm::Seq(..) => Err(not_segment(seg)),
        }
    }

    /// `first_Z(q^f) >>> shuffle >>> first_D(k) >>> shuffle >>> first_Z(q^b)`;
    /// without a context the shuffles vanish.
    fn op_step(
        &self,
        h: &Handler,
        op: &crate::syntax::OpName,
        a: &Ty,
        b: &Ty,
        z: Option<&Ty>,
        k: ArrTerm,
    ) -> Result<ArrTerm, Error> {
        let cl = self.checker.clause_for(h, op)?;
        let d = cl.aux_ty.clone();
        let qf = self.command(&TyEnv::new().extend_front(&cl.fwd_binder, a.clone()), &cl.fwd)?;
        let (y, zb) = &cl.bwd_binders;
        let qb = self.command(&TyEnv::from_entries(vec![(y.clone(), b.clone()), (zb.clone(), d.clone())]), &cl.bwd)?;
        let Some(z) = z else {
            return Ok(qf.seq(ArrTerm::first(d, k)).seq(qb));
        };
        let out = swap_inner(&Ty::pair(Ty::pair(b.clone(), d.clone()), z.clone()))?;
        let back = swap_inner(&Ty::pair(Ty::pair(b.clone(), z.clone()), d.clone()))?;
        Ok(ArrTerm::first(z.clone(), qf)
            .seq(out)
            .seq(ArrTerm::first(d, k))
            .seq(back)
            .seq(ArrTerm::first(z.clone(), qb)))
    }
}

/// `((p, q), r) ↦ ((p, r), q)`.
fn swap_inner(dom: &Ty) -> Result<ArrTerm, EvalError> {
    let s = Term::var("s");
    let pq = Term::proj(1, s.clone());
    let body = Term::pair(Term::pair(Term::proj(1, pq.clone()), Term::proj(2, s)), Term::proj(2, pq));
    pure(dom, "s", body)
}

fn not_segment(a: &ArrTerm) -> Error {
    Error::Eval(EvalError::UnhandledShape { detail: format!("{a} is not a normal-form segment") })
}

/// Denotes a closed command and runs it on the unit input.
pub fn run_arrow(sig: &Signature, heap: &Heap, command: &Command, tie: TieBreak) -> Result<(Heap, Value), Error> {
    let checker = Checker::new(sig);
    checker.check_command(&TyEnv::new(), &TyEnv::new(), command)?;
    let a = Denoter::new(&checker).command(&TyEnv::new(), command)?;
    Ok(evaluate_arr(&a, heap, &Value::unit(), tie)?)
}
