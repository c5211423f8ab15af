//! Morphisms of the base category, represented as one-variable pure terms.

use std::fmt;

use crate::error::{EvalError, TypeError};
use crate::syntax::names::{all_names_term, subst_term1};
use crate::syntax::{fresh_name, Term, Ty, TyEnv};
use crate::term_eval::{eval_term, rewrite_rd};
use crate::typecheck::infer_term;
use crate::values::{TieBreak, Value};

/// `binder : dom ⊢ body : cod`, closed otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct PureFun {
    pub binder: String,
    pub body: Term,
    pub dom: Ty,
    pub cod: Ty,
}

impl PureFun {
    pub fn new(binder: &str, body: Term, dom: Ty) -> Result<PureFun, TypeError> {
        let cod = infer_term(&TyEnv::new().extend_front(binder, dom.clone()), &body)?;
        Ok(PureFun { binder: binder.to_string(), body, dom, cod })
    }

    pub fn identity(ty: &Ty) -> PureFun {
        PureFun { binder: "x".into(), body: Term::var("x"), dom: ty.clone(), cod: ty.clone() }
    }

    /// A constant map ignoring its input.
    pub fn constant(dom: &Ty, v: &Value) -> PureFun {
        PureFun { binder: "_x".into(), body: v.to_term(), dom: dom.clone(), cod: v.ty() }
    }

    pub fn is_identity(&self) -> bool {
        matches!(&self.body, Term::Var(y) if *y == self.binder)
    }

    /// `self ; g`, by let-chaining the bodies.
    pub fn then(&self, g: &PureFun) -> PureFun {
        if self.is_identity() {
            return PureFun { dom: self.dom.clone(), ..g.clone() };
        }
        if g.is_identity() {
            return PureFun { cod: g.cod.clone(), ..self.clone() };
        }
        let mut avoid = all_names_term(&self.body);
        avoid.extend(all_names_term(&g.body));
        avoid.insert(self.binder.clone());
        let y = fresh_name(&avoid, &g.binder);
        let g_body = if y == g.binder { g.body.clone() } else { subst_term1(&g.body, &g.binder, &Term::var(&y)) };
        PureFun {
            binder: self.binder.clone(),
            body: Term::let_(&y, self.body.clone(), g_body),
            dom: self.dom.clone(),
            cod: g.cod.clone(),
        }
    }

    /// The body with `t` in place of the binder.
    pub fn apply_term(&self, t: &Term) -> Term {
        Term::let_(&self.binder, t.clone(), self.body.clone())
    }

    pub fn apply(&self, v: &Value, tie: TieBreak) -> Result<Value, EvalError> {
        eval_term(&self.apply_term(&v.to_term()), tie)
    }

    /// `(u, x) ↦ RD_u^x(binder. body)`: the reverse derivative with its
    /// arguments in cotangent-then-point order.
    pub fn reverse_derivative(&self) -> Result<PureFun, EvalError> {
        let mut avoid = all_names_term(&self.body);
        avoid.insert(self.binder.clone());
        let p = fresh_name(&avoid, "p");
        let (u, x) = (Term::proj(1, Term::var(&p)), Term::proj(2, Term::var(&p)));
        let uvar = fresh_name(&avoid, "u");
        avoid.insert(uvar.clone());
        let xvar = fresh_name(&avoid, "v");
        let env = TyEnv::new().extend_front(&uvar, self.cod.clone()).extend_front(&xvar, self.dom.clone());
        let rd = rewrite_rd(&env, &Term::var(&uvar), &Term::var(&xvar), &self.binder, &self.body)?;
        let body = Term::let_(&uvar, u, Term::let_(&xvar, x, rd));
        Ok(PureFun { binder: p, body, dom: Ty::pair(self.cod.clone(), self.dom.clone()), cod: self.dom.clone() })
    }
}

impl fmt::Display for PureFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\\{} : {}. {}", self.binder, self.dom, self.body)
    }
}
