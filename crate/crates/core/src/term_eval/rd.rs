//! Reverse-derivative rewriting `RD_W^V(x.N)`.
//!
//! The output is a pure term computing the cotangent of `x` at the point `V`
//! given the cotangent `W` of `N`. `W` and `V` are values that may mention
//! variables; their types come from the supplied environment.

use crate::error::EvalError;
use crate::signature::fun_sig;
use crate::syntax::names::{free_vars_term, freshen_term, subst_term1};
use crate::syntax::sugar::let_tuple_term_with;
use crate::syntax::{zero_term, Name, NameSupply, Term, Ty, TyEnv};
use crate::typecheck::infer_term;

fn internal(detail: String) -> EvalError {
    EvalError::ShapeMismatch { detail }
}

fn ty_of(env: &TyEnv, t: &Term) -> Result<Ty, EvalError> {
    infer_term(env, t).map_err(|e| internal(format!("reverse derivative of an ill-typed term: {e}")))
}

fn is_zero_const(t: &Term) -> bool {
    match t {
        Term::Const(v) => v.iter().all(|x| *x == 0.0),
        Term::Tuple(ts) => ts.iter().all(is_zero_const),
        _ => false,
    }
}

/// A term for `a + b` at any type: `+` on base types, componentwise on products.
/// Literal zero summands are dropped.
pub fn sum_terms(a: Term, b: Term, ty: &Ty, supply: &mut NameSupply) -> Term {
    if is_zero_const(&a) {
        return b;
    }
    if is_zero_const(&b) {
        return a;
    }
    match ty {
        Ty::Base(_) => Term::plus(a, b),
        Ty::Prod(cs) => {
            let (p, q) = (supply.fresh("s"), supply.fresh("s"));
            let comps = cs
                .iter()
                .enumerate()
                .map(|(i, c)| sum_terms(Term::proj(i + 1, Term::var(&p)), Term::proj(i + 1, Term::var(&q)), c, supply))
                .collect();
            Term::let_(&p, a, Term::let_(&q, b, Term::Tuple(comps)))
        }
    }
}

fn sum_all(terms: Vec<Term>, ty: &Ty, supply: &mut NameSupply) -> Term {
    let mut it = terms.into_iter();
    match it.next() {
        None => zero_term(ty),
        Some(first) => it.fold(first, |acc, t| sum_terms(acc, t, ty, supply)),
    }
}

/// `RD_W^V(x.N)` where `env` types the free variables of `W`, `V` and `N`
/// other than `x`.
pub fn rewrite_rd(env: &TyEnv, w: &Term, v: &Term, x: &str, n: &Term) -> Result<Term, EvalError> {
    let mut supply = NameSupply::new();
    supply.reserve_term(w);
    supply.reserve_term(v);
    supply.reserve_term(n);
    supply.reserve(x);
    for name in env.names() {
        supply.reserve(name);
    }
    rewrite_rd_with(env, w, v, x, n, &mut supply)
}

/// As [`rewrite_rd`], drawing binders from a caller-owned supply that must
/// already avoid every name in scope.
pub fn rewrite_rd_with(
    env: &TyEnv,
    w: &Term,
    v: &Term,
    x: &str,
    n: &Term,
    supply: &mut NameSupply,
) -> Result<Term, EvalError> {
    let a = ty_of(env, v)?;
    // Rename the binder away from the values and make every binder of the
    // body unique, so the values can be placed under any of them.
    let mut fvs = free_vars_term(w);
    fvs.extend(free_vars_term(v));
    let (x, n): (Name, Term) = if fvs.contains(x) {
        let x2 = supply.fresh(x);
        (x2.clone(), subst_term1(n, x, &Term::var(&x2)))
    } else {
        (x.to_string(), n.clone())
    };
    let n = freshen_term(&n, supply);
    Rewriter { supply }.rd(env, w, v, &a, &x, &n)
}

struct Rewriter<'s> {
    supply: &'s mut NameSupply,
}

impl Rewriter<'_> {
    /// Invariant: `x` and the binders of `n` are free in neither `w` nor `v`.
    fn rd(&mut self, env: &TyEnv, w: &Term, v: &Term, a: &Ty, x: &Name, n: &Term) -> Result<Term, EvalError> {
        if !free_vars_term(n).contains(x.as_str()) {
            return Ok(zero_term(a));
        }
        let inner = env.extend_front(x, a.clone());
        match n {
            Term::Var(y) => Ok(if y == x { w.clone() } else { zero_term(a) }),
            Term::Const(_) => Ok(zero_term(a)),
            Term::App(f, m) => {
                if f.rd {
                    return Err(EvalError::MissingRdPartner { f: f.to_string() });
                }
                let sig = fun_sig(f).map_err(|e| internal(e.to_string()))?;
                let y = self.supply.fresh("y");
                let rest = self.rd(&env.extend_front(&y, sig.dom.clone()), &Term::var(&y), v, a, x, m)?;
                Ok(Term::let_(
                    x,
                    v.clone(),
                    Term::let_(&y, Term::app(f.rd_of(), Term::pair(w.clone(), (**m).clone())), rest),
                ))
            }
            Term::Plus(m1, m2) => {
                let r1 = self.rd(env, w, v, a, x, m1)?;
                let r2 = self.rd(env, w, v, a, x, m2)?;
                Ok(sum_terms(r1, r2, a, self.supply))
            }
            Term::Let(y, m, body) => {
                let ym = ty_of(&inner, m)?;
                // both summands see x and y
                let direct = self.rd(&env.extend_front(y, ym.clone()), w, v, a, x, body)?;
                let y2 = self.supply.fresh(y);
                let body2 = subst_term1(body, y, &Term::var(&y2));
                let through_y = self.rd(&inner.extend_front(y, ym.clone()), w, &Term::var(y), &ym, &y2, &body2)?;
                let yp = self.supply.fresh("y'");
                let back = self.rd(&env.extend_front(&yp, ym.clone()), &Term::var(&yp), v, a, x, m)?;
                let sum = sum_terms(direct, Term::let_(&yp, through_y, back), a, self.supply);
                Ok(Term::let_(x, v.clone(), Term::let_(y, (**m).clone(), sum)))
            }
            Term::Tuple(ms) => {
                let b = ty_of(env, w)?;
                let comps = match &b {
                    Ty::Prod(cs) if cs.len() == ms.len() => cs.clone(),
                    _ => return Err(internal(format!("tuple cotangent of type {b}"))),
                };
                let ys: Vec<Name> = ms.iter().map(|_| self.supply.fresh("y")).collect();
                let mut env2 = env.clone();
                for (y, c) in ys.iter().zip(&comps) {
                    env2 = env2.extend_front(y, c.clone());
                }
                let parts = ms
                    .iter()
                    .zip(&ys)
                    .map(|(m, y)| self.rd(&env2, &Term::var(y), v, a, x, m))
                    .collect::<Result<Vec<_>, _>>()?;
                let total = sum_all(parts, a, self.supply);
                if ms.is_empty() {
                    return Ok(total);
                }
                let t = self.supply.fresh("t");
                Ok(let_tuple_term_with(&t, &ys, w.clone(), total))
            }
            Term::Proj(i, m) => {
                let tm = ty_of(&inner, m)?;
                let comps = match &tm {
                    Ty::Prod(cs) if *i >= 1 && *i <= cs.len() => cs.clone(),
                    _ => return Err(internal(format!("projection {i} of {tm}"))),
                };
                let seed = Term::Tuple(
                    comps
                        .iter()
                        .enumerate()
                        .map(|(k, c)| if k + 1 == *i { w.clone() } else { zero_term(c) })
                        .collect(),
                );
                let y = self.supply.fresh("y");
                let rest = self.rd(env, &seed, v, a, x, m)?;
                Ok(Term::let_(x, v.clone(), Term::let_(&y, (**m).clone(), rest)))
            }
            Term::Rd { seed, binder, body, point } => {
                let b2 = ty_of(&inner, seed)?;
                let a2 = ty_of(&inner, point)?;
                let (z, wv) = (self.supply.fresh("z"), self.supply.fresh("w"));
                let env2 = inner.extend_front(&z, b2).extend_front(&wv, a2);
                let unfolded = rewrite_rd_with(&env2, &Term::var(&z), &Term::var(&wv), binder, body, self.supply)?;
                let expanded = Term::let_(&z, (**seed).clone(), Term::let_(&wv, (**point).clone(), unfolded));
                let expanded = freshen_term(&expanded, self.supply);
                self.rd(env, w, v, a, x, &expanded)
            }
        }
    }
}
