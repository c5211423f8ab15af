//! Typing judgments for terms, commands and handlers.

use std::cell::RefCell;
use std::sync::Arc;

use crate::error::TypeError;
use crate::signature::{fun_sig, OpSig, Signature};
use crate::syntax::{
    command_size, default_clause, handler_size, term_size, Command, Handler, Name, OpClause, OpName, Term, Ty, TyEnv,
};

/// `RH(C)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandlerType {
    pub carrier: Ty,
}

impl std::fmt::Display for HandlerType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RH({})", self.carrier)
    }
}

fn mismatch(term: &impl ToString, expected: &Ty, found: &Ty) -> TypeError {
    TypeError::ArityMismatch { term: term.to_string(), expected: expected.to_string(), found: found.to_string() }
}

/// Type inference for terms. Function symbols carry their own signatures.
pub fn infer_term(env: &TyEnv, t: &Term) -> Result<Ty, TypeError> {
    match t {
        Term::Var(x) => env.lookup(x).cloned().ok_or_else(|| TypeError::UnboundVariable { name: x.clone() }),
        Term::Const(v) => Ok(Ty::Base(v.len())),
        Term::App(f, m) => {
            let s = fun_sig(f)?;
            let a = infer_term(env, m)?;
            if !a.equiv(&s.dom) {
                return Err(mismatch(t, &s.dom, &a));
            }
            Ok(s.cod)
        }
        Term::Plus(a, b) => {
            let ta = infer_term(env, a)?;
            let tb = infer_term(env, b)?;
            match (&ta, &tb) {
                (Ty::Base(n), Ty::Base(m)) if n == m => Ok(ta),
                _ => Err(TypeError::PlusOnNonBase { term: t.to_string(), left: ta.to_string(), right: tb.to_string() }),
            }
        }
        Term::Tuple(ts) => Ok(Ty::Prod(ts.iter().map(|m| infer_term(env, m)).collect::<Result<_, _>>()?)),
        Term::Proj(i, m) => {
            let tm = infer_term(env, m)?;
            match &tm {
                Ty::Prod(cs) if *i >= 1 && *i <= cs.len() => Ok(cs[*i - 1].clone()),
                _ => Err(TypeError::ProjOutOfRange { term: t.to_string(), index: *i, ty: tm.to_string() }),
            }
        }
        Term::Let(x, m, n) => {
            let a = infer_term(env, m)?;
            infer_term(&env.extend_front(x, a), n)
        }
        Term::Rd { seed, binder, body, point } => {
            let a = infer_term(env, point)?;
            let b = infer_term(&env.extend_front(binder, a.clone()), body)?;
            let bs = infer_term(env, seed)?;
            if !bs.equiv(&b) {
                return Err(TypeError::RdShapeMismatch {
                    term: t.to_string(),
                    detail: format!("seed has type {bs} but the body has type {b}"),
                });
            }
            Ok(a)
        }
    }
}

/// Checker for commands and handlers over a fixed signature.
pub struct Checker<'s> {
    sig: &'s Signature,
    verified: RefCell<Vec<(Arc<Handler>, Ty)>>,
}

impl<'s> Checker<'s> {
    pub fn new(sig: &'s Signature) -> Self {
        Checker { sig, verified: RefCell::new(Vec::new()) }
    }

    pub fn signature(&self) -> &Signature {
        self.sig
    }

    pub fn op_sig(&self, op: &OpName) -> Result<OpSig, TypeError> {
        self.sig.op_sig(op)
    }

    pub fn infer_term(&self, env: &TyEnv, t: &Term) -> Result<Ty, TypeError> {
        infer_term(env, t)
    }

    /// `Γ; Δ ⊢ P : A`. Names in `Δ` shadow names in `Γ`.
    pub fn check_command(&self, gamma: &TyEnv, delta: &TyEnv, p: &Command) -> Result<Ty, TypeError> {
        match p {
            Command::Ret(m) => infer_term(&gamma.concat(delta), m),
            Command::Op(op, m) => {
                let s = self.sig.op_sig(op)?;
                let a = infer_term(&gamma.concat(delta), m)?;
                if !a.equiv(&s.coarity) {
                    return Err(mismatch(p, &s.coarity, &a));
                }
                Ok(s.arity)
            }
            Command::Let(x, p1, q) => {
                let a = self.check_command(gamma, delta, p1)?;
                self.check_command(gamma, &delta.extend_front(x, a), q)
            }
            Command::Handle { seed, binders, body, handler } => {
                let distinct: std::collections::BTreeSet<&Name> = binders.iter().collect();
                if binders.is_empty() || distinct.len() != binders.len() {
                    return Err(TypeError::BinderCountMismatch { binders: binders.join(", ") });
                }
                let st = infer_term(&gamma.concat(delta), seed)?;
                let parts = st.split(binders.len()).ok_or_else(|| TypeError::RevHandleSeedNotProduct {
                    command: p.to_string(),
                    ty: st.to_string(),
                    binders: binders.len(),
                })?;
                let inner = TyEnv::from_entries(binders.iter().cloned().zip(parts).collect());
                let c = self.check_command(gamma, &inner, body)?;
                self.check_handler(handler, &c)?;
                Ok(st)
            }
        }
    }

    /// The clause used for `op`: the written one, or the forwarding default.
    pub fn clause_for(&self, h: &Handler, op: &OpName) -> Result<OpClause, TypeError> {
        if let Some(cl) = h.clauses.get(op) {
            return Ok(cl.clone());
        }
        let s = self.sig.op_sig(op)?;
        Ok(default_clause(op, &s.coarity))
    }

    /// `⊢ H : RH(C)` for the given carrier.
    pub fn check_handler(&self, h: &Arc<Handler>, carrier: &Ty) -> Result<HandlerType, TypeError> {
        let known = self
            .verified
            .borrow()
            .iter()
            .any(|(k, c)| Arc::ptr_eq(k, h) && c.equiv(carrier));
        if !known {
            self.check_handler_uncached(h, carrier)?;
            self.verified.borrow_mut().push((h.clone(), carrier.clone()));
        }
        Ok(HandlerType { carrier: carrier.clone() })
    }

    fn check_handler_uncached(&self, h: &Handler, carrier: &Ty) -> Result<(), TypeError> {
        let name = h.label.clone().unwrap_or_else(|| "handler".into());
        let empty = TyEnv::new();
        let ret_env = TyEnv::new().extend_front(&h.ret_binder, carrier.clone());
        let pt = self.check_command(&empty, &ret_env, &h.ret_clause)?;
        if !pt.equiv(carrier) {
            return Err(TypeError::RetClauseNotEndomorphic {
                handler: name,
                carrier: carrier.to_string(),
                found: pt.to_string(),
            });
        }
        for (op, cl) in &h.clauses {
            if op.is_heap_op() {
                return Err(TypeError::HeapOpInHandler { op: op.to_string() });
            }
            let s = self.sig.op_sig(op)?;
            let fenv = TyEnv::new().extend_front(&cl.fwd_binder, s.coarity.clone());
            let ft = self.check_command(&empty, &fenv, &cl.fwd)?;
            let expected = Ty::pair(s.arity.clone(), cl.aux_ty.clone());
            if !ft.equiv(&expected) {
                return Err(TypeError::ForwardClauseShape {
                    op: op.to_string(),
                    expected: expected.to_string(),
                    found: ft.to_string(),
                });
            }
            let (y, z) = &cl.bwd_binders;
            let benv = TyEnv::from_entries(vec![(y.clone(), s.arity.clone()), (z.clone(), cl.aux_ty.clone())]);
            let bt = self.check_command(&empty, &benv, &cl.bwd)?;
            if !bt.equiv(&s.coarity) {
                return Err(TypeError::BackwardClauseShape {
                    op: op.to_string(),
                    expected: s.coarity.to_string(),
                    found: bt.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Infers the auxiliary type of a clause from its forward part.
    pub fn infer_aux_ty(&self, op: &OpName, fwd_binder: &str, fwd: &Command) -> Result<Ty, TypeError> {
        let s = self.sig.op_sig(op)?;
        let env = TyEnv::new().extend_front(fwd_binder, s.coarity);
        let ft = self.check_command(&TyEnv::new(), &env, fwd)?;
        match ft {
            Ty::Prod(cs) if cs.len() == 2 && cs[0].equiv(&s.arity) => Ok(cs[1].clone()),
            other => Err(TypeError::ForwardClauseShape {
                op: op.to_string(),
                expected: format!("{} * D", s.arity),
                found: other.to_string(),
            }),
        }
    }

    /// Size of the derivation of `Γ; Δ ⊢ P : A`, failing when there is none.
    pub fn deriv_size_command(&self, gamma: &TyEnv, delta: &TyEnv, p: &Command) -> Result<usize, TypeError> {
        self.check_command(gamma, delta, p)?;
        Ok(command_size(p))
    }

    pub fn deriv_size_handler(&self, h: &Arc<Handler>, carrier: &Ty) -> Result<usize, TypeError> {
        self.check_handler(h, carrier)?;
        Ok(handler_size(h))
    }
}

pub fn deriv_size_term(env: &TyEnv, t: &Term) -> Result<usize, TypeError> {
    infer_term(env, t)?;
    Ok(term_size(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::{DimExpr, OpFamily, TyExpr};
    use crate::syntax::{FunSym, Prim};

    fn r(n: usize) -> Ty {
        Ty::Base(n)
    }

    fn sig() -> Signature {
        Signature::new().with_location("l", 4).with_family(OpFamily {
            name: "Op".into(),
            loc_params: vec![],
            dim_params: vec![],
            coarity: TyExpr::Real(DimExpr::Num(2)),
            arity: TyExpr::Real(DimExpr::Num(1)),
        })
    }

    #[test]
    fn terms() {
        let env = TyEnv::new().extend_front("x", r(3));
        assert_eq!(infer_term(&env, &Term::var("x")).unwrap(), r(3));
        let sw = FunSym::new(Prim::Swish, vec![2]);
        assert_eq!(infer_term(&TyEnv::new(), &Term::app(sw.clone(), Term::zeros(2))).unwrap(), r(2));
        let env = TyEnv::from_entries(vec![("w".into(), r(2)), ("v".into(), r(2))]);
        let t = Term::rd(Term::var("w"), "x", Term::app(sw, Term::var("x")), Term::var("v"));
        assert_eq!(infer_term(&env, &t).unwrap(), r(2));
    }

    #[test]
    fn term_errors() {
        let e = infer_term(&TyEnv::new(), &Term::var("q")).unwrap_err();
        assert!(matches!(e, TypeError::UnboundVariable { .. }));
        let t = Term::plus(Term::zeros(1), Term::zeros(2));
        assert!(matches!(infer_term(&TyEnv::new(), &t), Err(TypeError::PlusOnNonBase { .. })));
        let t = Term::proj(3, Term::pair(Term::zeros(1), Term::zeros(2)));
        assert!(matches!(infer_term(&TyEnv::new(), &t), Err(TypeError::ProjOutOfRange { .. })));
    }

    #[test]
    fn commands_and_handlers() {
        let s = sig();
        let ck = Checker::new(&s);
        let delta = TyEnv::new().extend_front("x", r(1));
        assert_eq!(ck.check_command(&TyEnv::new(), &delta, &Command::ret(Term::var("x"))).unwrap(), r(1));
        let op = OpName::new("Op", vec![], vec![]);
        let body = Command::op(op.clone(), Term::var("y"));
        let h = Arc::new(Handler::new("x", Command::ret(Term::var("x"))));
        let c = Command::handle(Term::zeros(2), vec!["y".into()], body, h.clone());
        assert_eq!(ck.check_command(&TyEnv::new(), &TyEnv::new(), &c).unwrap(), r(2));
        assert_eq!(ck.check_handler(&h, &r(7)).unwrap().carrier, r(7));
        // the default clause is well typed
        let d = ck.clause_for(&h, &op).unwrap();
        let h2 = Arc::new(Handler::new("x", Command::ret(Term::var("x"))).with_clause(op, d));
        ck.check_handler(&h2, &r(1)).unwrap();
    }

    #[test]
    fn heap_clauses_rejected() {
        let s = sig();
        let ck = Checker::new(&s);
        let g = OpName::get("l");
        let cl = default_clause(&g, &Ty::unit());
        let h = Arc::new(Handler::new("x", Command::ret(Term::var("x"))).with_clause(g, cl));
        assert!(matches!(ck.check_handler(&h, &r(1)), Err(TypeError::HeapOpInHandler { .. })));
    }

    #[test]
    fn sizes() {
        let s = sig();
        let ck = Checker::new(&s);
        let delta = TyEnv::new().extend_front("x", r(2));
        let op = OpName::new("Op", vec![], vec![]);
        assert_eq!(ck.deriv_size_command(&TyEnv::new(), &delta, &Command::op(op, Term::var("x"))).unwrap(), 3);
        assert!(deriv_size_term(&TyEnv::new(), &Term::var("x")).is_err());
    }
}
