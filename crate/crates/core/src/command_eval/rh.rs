//! Reverse-handler rewriting `RH_V^H(⟨y1..ym⟩. P)`.
//!
//! `P` is decomposed into a let-spine (the command context) around a focus
//! command, which is classified into one of the four forms below.

use std::sync::Arc;

use crate::error::{EvalError, TypeError};
use crate::syntax::names::{free_vars_term, subst_command, subst_command1, subst_term};
use crate::syntax::sugar::let_tuple_command_with;
use crate::syntax::{zero_term, Command, Handler, Name, NameSupply, OpName, Subst, Term, Ty, TyEnv};
use crate::term_eval::sum_terms;
use crate::typecheck::Checker;

/// Where a non-variable term sits in the focus command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HoleKind {
    Ret,
    Op,
    HandleSeed,
}

/// The focus of a command under its let-spine.
#[derive(Clone, Debug, PartialEq)]
pub enum Form<'a> {
    /// `ret z`
    RetVar(&'a str),
    /// `Op(z)`
    OpVar(&'a OpName, &'a str),
    /// `rev handle(z) <..>. R with H`
    NestedHandle { seed: &'a str, binders: &'a [Name], body: &'a Command, handler: &'a Arc<Handler> },
    /// A non-variable term in a term position.
    TermHole(HoleKind, &'a Term),
}

/// `let x <= [] in Q` frames, outermost first.
pub type Frames<'a> = Vec<(&'a Name, &'a Command)>;

/// Splits `P` into its command context and focus.
pub fn decompose(p: &Command) -> (Frames<'_>, &Command) {
    let mut frames = Vec::new();
    let mut cur = p;
    while let Command::Let(x, first, rest) = cur {
        frames.push((x, rest.as_ref()));
        cur = first.as_ref();
    }
    (frames, cur)
}

pub fn classify(focus: &Command) -> Form<'_> {
    match focus {
        Command::Ret(Term::Var(z)) => Form::RetVar(z),
        Command::Ret(m) => Form::TermHole(HoleKind::Ret, m),
        Command::Op(op, Term::Var(z)) => Form::OpVar(op, z),
        Command::Op(_, m) => Form::TermHole(HoleKind::Op, m),
        Command::Handle { seed: Term::Var(z), binders, body, handler } => {
            Form::NestedHandle { seed: z, binders, body, handler }
        }
        Command::Handle { seed, .. } => Form::TermHole(HoleKind::HandleSeed, seed),
        Command::Let(..) => unreachable!("focus is never a let"),
    }
}

/// Rebuilds `F^c[c]` from frames.
pub fn plug(frames: &[(&Name, &Command)], c: Command) -> Command {
    frames.iter().rev().fold(c, |acc, (x, q)| Command::let_(x, acc, (*q).clone()))
}

/// The focus with its term replaced by `t`.
fn refill(focus: &Command, t: Term) -> Command {
    match focus {
        Command::Ret(_) => Command::Ret(t),
        Command::Op(op, _) => Command::Op(op.clone(), t),
        Command::Handle { binders, body, handler, .. } => Command::Handle {
            seed: t,
            binders: binders.clone(),
            body: body.clone(),
            handler: handler.clone(),
        },
        Command::Let(..) => unreachable!("focus is never a let"),
    }
}

fn shape(detail: String) -> EvalError {
    EvalError::UnhandledShape { detail }
}

fn type_err(e: TypeError) -> EvalError {
    shape(format!("ill-typed handler body: {e}"))
}

/// One environment slot `y_i : B_i` with its seed component `V_i`.
#[derive(Clone, Debug)]
pub struct Slot {
    pub name: Name,
    pub ty: Ty,
    pub seed: Term,
}

/// Seed components for `n` binders: the seed itself, a tuple's
/// components, or projections of a tuple-typed variable.
pub fn seed_components(seed: &Term, n: usize) -> Vec<Term> {
    match seed {
        _ if n == 1 => vec![seed.clone()],
        Term::Tuple(ts) if ts.len() == n => ts.clone(),
        _ => (1..=n).map(|k| Term::proj(k, seed.clone())).collect(),
    }
}

pub struct Rewriter<'c, 's> {
    checker: &'c Checker<'s>,
    supply: NameSupply,
}

impl<'c, 's> Rewriter<'c, 's> {
    /// `supply` must already avoid every name of the command being rewritten.
    pub fn new(checker: &'c Checker<'s>, supply: NameSupply) -> Self {
        Rewriter { checker, supply }
    }

    fn fresh(&mut self, hint: &str) -> Name {
        self.supply.fresh(hint)
    }

    fn tuple_let(&mut self, xs: &[Name], p: Command, q: Command) -> Command {
        if xs.len() == 1 {
            return Command::let_(&xs[0], p, q);
        }
        let t = self.fresh("t");
        let_tuple_command_with(&t, xs, p, q)
    }

    fn sum(&mut self, a: Term, b: Term, ty: &Ty) -> Term {
        sum_terms(a, b, ty, &mut self.supply)
    }

    /// `RH_V^H(⟨y_i⟩. P)`.
    pub fn rewrite(&mut self, h: &Arc<Handler>, slots: &[Slot], p: &Command) -> Result<Command, EvalError> {
        let (frames, focus) = decompose(p);
        match classify(focus) {
            Form::RetVar(z) => match frames.split_last() {
                None => self.ret_clause(h, slots, z),
                Some(((x, rest), outer)) => {
                    // F^c[let x <= ret z in R] = F^c[R[z/x]]
                    let next = plug(outer, subst_command1(rest, x, &Term::var(z)));
                    self.rewrite(h, slots, &next)
                }
            },
            Form::OpVar(op, z) => self.op_clause(h, slots, &frames, op, z),
            Form::NestedHandle { seed, binders, body, handler } => {
                let sty = slot_ty(slots, seed)?;
                let tys = sty
                    .split(binders.len())
                    .ok_or_else(|| shape(format!("seed {seed} : {sty} for {} binders", binders.len())))?;
                let inner: Vec<Slot> = binders
                    .iter()
                    .zip(tys)
                    .zip(seed_components(&Term::var(seed), binders.len()))
                    .map(|((name, ty), seed)| Slot { name: name.clone(), ty, seed })
                    .collect();
                let expanded = self.rewrite(handler, &inner, body)?;
                self.rewrite(h, slots, &plug(&frames, expanded))
            }
            Form::TermHole(_, m) => self.term_hole(h, slots, &frames, focus, m),
        }
    }

    fn ret_clause(&mut self, h: &Arc<Handler>, slots: &[Slot], z: &str) -> Result<Command, EvalError> {
        let k = slot_index(slots, z)?;
        let y = self.fresh("y");
        let body = subst_command1(&h.ret_clause, &h.ret_binder, &slots[k].seed);
        let out = slots
            .iter()
            .enumerate()
            .map(|(i, s)| if i == k { Term::var(&y) } else { zero_term(&s.ty) })
            .collect();
        Ok(Command::let_(&y, body, Command::ret(Term::tuple_or_single(out))))
    }

    fn op_clause(
        &mut self,
        h: &Arc<Handler>,
        slots: &[Slot],
        frames: &[(&Name, &Command)],
        op: &OpName,
        z: &str,
    ) -> Result<Command, EvalError> {
        let i = slot_index(slots, z)?;
        let clause = self.checker.clause_for(h, op).map_err(type_err)?;
        let arity = self.checker.op_sig(op).map_err(type_err)?.arity;
        let (y, zp) = (self.fresh("y"), self.fresh("z'"));
        let fwd = subst_command1(&clause.fwd, &clause.fwd_binder, &slots[i].seed);

        // continuation over the extended environment ⟨y, y_1..y_m⟩
        let mut ext = vec![Slot { name: y.clone(), ty: arity.clone(), seed: Term::var(&y) }];
        ext.extend(slots.iter().cloned());
        let cont = self.rewrite(h, &ext, &plug(frames, Command::ret(Term::var(&y))))?;

        let yb = self.fresh("y'");
        let ybs: Vec<Name> = slots.iter().map(|s| self.fresh(&format!("{}'", s.name))).collect();
        let ypp = self.fresh("y''");
        let mut bsub = Subst::new();
        bsub.insert(clause.bwd_binders.0.clone(), Term::var(&yb));
        bsub.insert(clause.bwd_binders.1.clone(), Term::var(&zp));
        let bwd = subst_command(&clause.bwd, &bsub);

        let mut outs: Vec<Term> = ybs.iter().map(|n| Term::var(n)).collect();
        outs[i] = self.sum(Term::var(&ybs[i]), Term::var(&ypp), &slots[i].ty);
        let tail = Command::let_(&ypp, bwd, Command::ret(Term::tuple_or_single(outs)));

        let mut names = vec![yb];
        names.extend(ybs);
        let middle = self.tuple_let(&names, cont, tail);
        Ok(self.tuple_let(&[y, zp], fwd, middle))
    }

    fn term_hole(
        &mut self,
        h: &Arc<Handler>,
        slots: &[Slot],
        frames: &[(&Name, &Command)],
        focus: &Command,
        m: &Term,
    ) -> Result<Command, EvalError> {
        let env = TyEnv::from_entries(slots.iter().map(|s| (s.name.clone(), s.ty.clone())).collect());
        let mty = self.checker.infer_term(&env, m).map_err(type_err)?;
        let all: Subst = slots.iter().map(|s| (s.name.clone(), s.seed.clone())).collect();
        let y = self.fresh("y");

        let mut ext = vec![Slot { name: y.clone(), ty: mty, seed: Term::var(&y) }];
        ext.extend(slots.iter().cloned());
        let cont = self.rewrite(h, &ext, &plug(frames, refill(focus, Term::var(&y))))?;

        let z = self.fresh("z");
        let ybs: Vec<Name> = slots.iter().map(|s| self.fresh(&format!("{}'", s.name))).collect();
        let mut outs = Vec::with_capacity(slots.len());
        for (i, s) in slots.iter().enumerate() {
            let mut others = all.clone();
            others.remove(&s.name);
            // keep the slot's own name as the binder unless another seed mentions it
            let clash = others.values().any(|t| free_vars_term(t).contains(&s.name));
            let binder = if clash { self.fresh(&s.name) } else { s.name.clone() };
            if clash {
                others.insert(s.name.clone(), Term::var(&binder));
            }
            let body = subst_term(m, &others);
            let rd = Term::rd(Term::var(&z), &binder, body, s.seed.clone());
            outs.push(self.sum(Term::var(&ybs[i]), rd, &s.ty));
        }
        let mut names = vec![z];
        names.extend(ybs);
        let tail = self.tuple_let(&names, cont, Command::ret(Term::tuple_or_single(outs)));
        Ok(Command::let_(&y, Command::ret(subst_term(m, &all)), tail))
    }
}

fn slot_index(slots: &[Slot], z: &str) -> Result<usize, EvalError> {
    slots
        .iter()
        .position(|s| s.name == z)
        .ok_or_else(|| shape(format!("variable {z} is not bound by the enclosing handler")))
}

fn slot_ty(slots: &[Slot], z: &str) -> Result<Ty, EvalError> {
    Ok(slots[slot_index(slots, z)?].ty.clone())
}
