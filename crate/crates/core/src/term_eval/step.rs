//! Small-step reduction of closed terms.

use crate::error::EvalError;
use crate::syntax::names::subst_term1;
use crate::syntax::{Term, TyEnv};
use crate::values::{ev, TieBreak, Value};

use super::rd::rewrite_rd;

/// What a single step contracted.
#[derive(Clone, Debug, PartialEq)]
pub enum TermRedex {
    PrimApp(String),
    ConstPlus,
    ProjTuple(usize),
    LetValue(String),
    RdRedex(String),
}

fn stuck(t: &Term) -> EvalError {
    EvalError::Stuck { term: t.to_string() }
}

/// One reduction step; `None` when `t` is already a value.
pub fn step_term(t: &Term, tie: TieBreak) -> Result<Option<Term>, EvalError> {
    Ok(step_term_traced(t, tie)?.map(|(t, _)| t))
}

/// One step, also reporting the contracted redex.
pub fn step_term_traced(t: &Term, tie: TieBreak) -> Result<Option<(Term, TermRedex)>, EvalError> {
    if t.is_closed_value() {
        return Ok(None);
    }
    step_inner(t, tie).map(Some)
}

fn step_inner(t: &Term, tie: TieBreak) -> Result<(Term, TermRedex), EvalError> {
    match t {
        Term::Var(_) | Term::Const(_) => Err(stuck(t)),
        Term::Tuple(ts) => {
            // left to right
            let i = ts.iter().position(|m| !m.is_closed_value()).ok_or_else(|| stuck(t))?;
            let (m2, r) = step_inner(&ts[i], tie)?;
            let mut ts2 = ts.clone();
            ts2[i] = m2;
            Ok((Term::Tuple(ts2), r))
        }
        Term::App(f, m) => {
            if let Some(v) = Value::from_term(m) {
                let out = ev(f, &v, tie)?;
                Ok((out.to_term(), TermRedex::PrimApp(f.to_string())))
            } else {
                let (m2, r) = step_inner(m, tie)?;
                Ok((Term::App(f.clone(), Box::new(m2)), r))
            }
        }
        Term::Plus(a, b) => {
            if !a.is_closed_value() {
                let (a2, r) = step_inner(a, tie)?;
                return Ok((Term::Plus(Box::new(a2), b.clone()), r));
            }
            if !b.is_closed_value() {
                let (b2, r) = step_inner(b, tie)?;
                return Ok((Term::Plus(a.clone(), Box::new(b2)), r));
            }
            match (a.as_ref(), b.as_ref()) {
                (Term::Const(x), Term::Const(y)) if x.len() == y.len() => Ok((
                    Term::constant(x.iter().zip(y.iter()).map(|(p, q)| p + q).collect()),
                    TermRedex::ConstPlus,
                )),
                _ => Err(stuck(t)),
            }
        }
        Term::Proj(i, m) => {
            if m.is_closed_value() {
                match m.as_ref() {
                    Term::Tuple(vs) if *i >= 1 && *i <= vs.len() => Ok((vs[*i - 1].clone(), TermRedex::ProjTuple(*i))),
                    _ => Err(stuck(t)),
                }
            } else {
                let (m2, r) = step_inner(m, tie)?;
                Ok((Term::Proj(*i, Box::new(m2)), r))
            }
        }
        Term::Let(x, m, n) => {
            if m.is_closed_value() {
                Ok((subst_term1(n, x, m), TermRedex::LetValue(x.clone())))
            } else {
                let (m2, r) = step_inner(m, tie)?;
                Ok((Term::Let(x.clone(), Box::new(m2), n.clone()), r))
            }
        }
        Term::Rd { seed, binder, body, point } => {
            if !seed.is_closed_value() {
                let (s2, r) = step_inner(seed, tie)?;
                return Ok((
                    Term::Rd { seed: Box::new(s2), binder: binder.clone(), body: body.clone(), point: point.clone() },
                    r,
                ));
            }
            if !point.is_closed_value() {
                let (p2, r) = step_inner(point, tie)?;
                return Ok((
                    Term::Rd { seed: seed.clone(), binder: binder.clone(), body: body.clone(), point: Box::new(p2) },
                    r,
                ));
            }
            let out = rewrite_rd(&TyEnv::new(), seed, point, binder, body)?;
            Ok((out, TermRedex::RdRedex(binder.clone())))
        }
    }
}

/// Reduces to a value.
pub fn eval_term(t: &Term, tie: TieBreak) -> Result<Value, EvalError> {
    let mut cur = t.clone();
    while let Some(next) = step_term(&cur, tie)? {
        cur = next;
    }
    Value::from_term(&cur).ok_or_else(|| stuck(&cur))
}

/// Reduces to a value, reporting every intermediate term.
pub fn eval_term_traced(t: &Term, tie: TieBreak, mut on_step: impl FnMut(&Term)) -> Result<Value, EvalError> {
    let mut cur = t.clone();
    while let Some(next) = step_term(&cur, tie)? {
        on_step(&next);
        cur = next;
    }
    Value::from_term(&cur).ok_or_else(|| stuck(&cur))
}
