//! Executing arrow terms against a heap.

use crate::error::EvalError;
use crate::syntax::names::{free_vars_term, subst_term1};
use crate::syntax::{Term, TyEnv};
use crate::term_eval::rewrite_rd;
use crate::values::{ev, Heap, TieBreak, Value};

use super::arrow::{ArrTerm, NormalForm};
use super::PureFun;

fn eval_in(env: &mut Vec<(String, Value)>, t: &Term, tie: TieBreak) -> Result<Value, EvalError> {
    match t {
        Term::Var(x) => env
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| EvalError::Stuck { term: t.to_string() }),
        Term::Const(v) => Ok(Value::Vec(v.clone())),
        Term::App(f, m) => ev(f, &eval_in(env, m, tie)?, tie),
        Term::Plus(a, b) => {
            let (x, y) = (eval_in(env, a, tie)?, eval_in(env, b, tie)?);
            let (x, y) = (x.as_vec()?, y.as_vec()?);
            if x.len() != y.len() {
                return Err(EvalError::ShapeMismatch { detail: format!("sum of lengths {} and {}", x.len(), y.len()) });
            }
            Ok(Value::vec(x.iter().zip(y).map(|(p, q)| p + q).collect()))
        }
        Term::Tuple(ts) => Ok(Value::Tup(ts.iter().map(|m| eval_in(env, m, tie)).collect::<Result<_, _>>()?)),
        Term::Proj(i, m) => match eval_in(env, m, tie)? {
            Value::Tup(vs) if *i >= 1 && *i <= vs.len() => Ok(vs[*i - 1].clone()),
            v => Err(EvalError::ShapeMismatch { detail: format!("projection {i} of {v}") }),
        },
        Term::Let(x, m, n) => {
            let v = eval_in(env, m, tie)?;
            env.push((x.clone(), v));
            let out = eval_in(env, n, tie);
            env.pop();
            out
        }
        Term::Rd { seed, binder, body, point } => {
            let (w, v) = (eval_in(env, seed, tie)?, eval_in(env, point, tie)?);
            let mut closed = (**body).clone();
            for x in free_vars_term(body) {
                if x == *binder {
                    continue;
                }
                let val = env.iter().rev().find(|(n, _)| *n == x).map(|(_, v)| v.to_term());
                let val = val.ok_or_else(|| EvalError::Stuck { term: t.to_string() })?;
                closed = subst_term1(&closed, &x, &val);
            }
            let out = rewrite_rd(&TyEnv::new(), &w.to_term(), &v.to_term(), binder, &closed)?;
            eval_in(&mut Vec::new(), &out, tie)
        }
    }
}

/// Applies a pure function by direct evaluation.
pub fn apply_fun(f: &PureFun, v: &Value, tie: TieBreak) -> Result<Value, EvalError> {
    eval_in(&mut vec![(f.binder.clone(), v.clone())], &f.body, tie)
}

/// Runs `a` on `input` left to right, threading the heap. `get`/`put` act
/// on the heap; any other operation left in the term is an error.
pub fn evaluate_arr(a: &ArrTerm, heap: &Heap, input: &Value, tie: TieBreak) -> Result<(Heap, Value), EvalError> {
    match a {
        ArrTerm::Arr(f) => Ok((heap.clone(), apply_fun(f, input, tie)?)),
        ArrTerm::Op { op, dom, cod } => match op.family.as_str() {
            "get" if op.locs.len() == 1 => Ok((heap.clone(), heap.get(&op.locs[0], cod.flat_len()))),
            "put" if op.locs.len() == 1 => Ok((heap.put(&op.locs[0], dom.flat_len(), input)?, Value::unit())),
            _ => Err(EvalError::ResidualOperation { op: op.to_string() }),
        },
        ArrTerm::Seq(x, y) => {
            let (h, v) = evaluate_arr(x, heap, input, tie)?;
            evaluate_arr(y, &h, &v, tie)
        }
        ArrTerm::First(_, x) => {
            let parts = input.as_tuple(2)?;
            let (h, y) = evaluate_arr(x, heap, &parts[0], tie)?;
            Ok((h, Value::pair(y, parts[1].clone())))
        }
    }
}

pub fn evaluate_nf(nf: &NormalForm, heap: &Heap, input: &Value, tie: TieBreak) -> Result<(Heap, Value), EvalError> {
    evaluate_arr(&nf.to_arr()?, heap, input, tie)
}
