use std::fmt;
use std::sync::Arc;

use crate::error::EvalError;
use crate::syntax::pretty::fmt_vec;
use crate::syntax::{Term, Ty};

/// A closed value: a flat vector for `Real(n)` or a tuple.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Vec(Arc<[f64]>),
    Tup(Vec<Value>),
}

impl Value {
    pub fn vec(v: Vec<f64>) -> Value {
        Value::Vec(v.into())
    }

    pub fn unit() -> Value {
        Value::Vec(Arc::from(Vec::<f64>::new()))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Tup(vec![a, b])
    }

    pub fn as_vec(&self) -> Result<&[f64], EvalError> {
        match self {
            Value::Vec(v) => Ok(v),
            Value::Tup(_) => Err(EvalError::ShapeMismatch { detail: format!("expected a vector, found {self}") }),
        }
    }

    pub fn as_tuple(&self, n: usize) -> Result<&[Value], EvalError> {
        match self {
            Value::Tup(vs) if vs.len() == n => Ok(vs),
            _ => Err(EvalError::ShapeMismatch { detail: format!("expected a {n}-tuple, found {self}") }),
        }
    }

    /// Shape check against a type. `Real(0)` and the empty product both accept
    /// the empty vector and the empty tuple.
    pub fn has_type(&self, ty: &Ty) -> bool {
        match (self, ty) {
            (Value::Vec(v), Ty::Base(n)) => v.len() == *n,
            (Value::Vec(v), Ty::Prod(cs)) => cs.is_empty() && v.is_empty(),
            (Value::Tup(vs), Ty::Base(0)) => vs.is_empty(),
            (Value::Tup(vs), Ty::Prod(cs)) => vs.len() == cs.len() && vs.iter().zip(cs).all(|(v, c)| v.has_type(c)),
            _ => false,
        }
    }

    /// The type this value inhabits canonically.
    pub fn ty(&self) -> Ty {
        match self {
            Value::Vec(v) => Ty::Base(v.len()),
            Value::Tup(vs) => Ty::Prod(vs.iter().map(Value::ty).collect()),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Value::Vec(v) => Term::Const(v.clone()),
            Value::Tup(vs) => Term::Tuple(vs.iter().map(Value::to_term).collect()),
        }
    }

    pub fn from_term(t: &Term) -> Option<Value> {
        match t {
            Term::Const(v) => Some(Value::Vec(v.clone())),
            Term::Tuple(ts) => ts.iter().map(Value::from_term).collect::<Option<Vec<_>>>().map(Value::Tup),
            _ => None,
        }
    }

    /// Leaves in left-to-right order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    fn flatten_into(&self, out: &mut Vec<f64>) {
        match self {
            Value::Vec(v) => out.extend_from_slice(v),
            Value::Tup(vs) => vs.iter().for_each(|v| v.flatten_into(out)),
        }
    }

    /// Rebuilds a value of the given type from leaves; inverse of [`Value::flatten`].
    pub fn unflatten(ty: &Ty, leaves: &[f64]) -> Result<Value, EvalError> {
        let mut pos = 0;
        let v = Self::unflatten_at(ty, leaves, &mut pos)?;
        if pos != leaves.len() {
            return Err(EvalError::ShapeMismatch {
                detail: format!("{} leaves left over for {ty}", leaves.len() - pos),
            });
        }
        Ok(v)
    }

    fn unflatten_at(ty: &Ty, leaves: &[f64], pos: &mut usize) -> Result<Value, EvalError> {
        match ty {
            Ty::Base(n) => {
                let end = *pos + n;
                if end > leaves.len() {
                    return Err(EvalError::ShapeMismatch { detail: format!("too few leaves for {ty}") });
                }
                let v = Value::vec(leaves[*pos..end].to_vec());
                *pos = end;
                Ok(v)
            }
            Ty::Prod(cs) => Ok(Value::Tup(
                cs.iter().map(|c| Self::unflatten_at(c, leaves, pos)).collect::<Result<_, _>>()?,
            )),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Vec(v) => serde_json::Value::Array(v.iter().map(|x| serde_json::json!(x)).collect()),
            Value::Tup(vs) => serde_json::json!({ "tuple": vs.iter().map(Value::to_json).collect::<Vec<_>>() }),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Vec(v) => write!(f, "{}", fmt_vec(v)),
            Value::Tup(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

pub fn zero_of(ty: &Ty) -> Value {
    match ty {
        Ty::Base(n) => Value::vec(vec![0.0; *n]),
        Ty::Prod(cs) => Value::Tup(cs.iter().map(zero_of).collect()),
    }
}

pub fn add_values(a: &Value, b: &Value) -> Result<Value, EvalError> {
    match (a, b) {
        (Value::Vec(x), Value::Vec(y)) if x.len() == y.len() => {
            Ok(Value::vec(x.iter().zip(y.iter()).map(|(p, q)| p + q).collect()))
        }
        (Value::Tup(xs), Value::Tup(ys)) if xs.len() == ys.len() => Ok(Value::Tup(
            xs.iter().zip(ys).map(|(x, y)| add_values(x, y)).collect::<Result<_, _>>()?,
        )),
        _ => Err(EvalError::ShapeMismatch { detail: format!("cannot add {a} and {b}") }),
    }
}

/// Largest relative difference between leaves, with `floor` guarding small magnitudes.
pub fn max_rel_diff(a: &Value, b: &Value, floor: f64) -> Option<f64> {
    let (x, y) = (a.flatten(), b.flatten());
    if x.len() != y.len() || a.ty() != b.ty() {
        return None;
    }
    Some(
        x.iter()
            .zip(&y)
            .map(|(p, q)| (p - q).abs() / p.abs().max(q.abs()).max(floor))
            .fold(0.0, f64::max),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros() {
        assert_eq!(zero_of(&Ty::Base(3)), Value::vec(vec![0.0; 3]));
        assert_eq!(zero_of(&Ty::Base(0)), Value::unit());
        assert_eq!(
            zero_of(&Ty::pair(Ty::Base(2), Ty::Base(1))),
            Value::pair(Value::vec(vec![0.0, 0.0]), Value::vec(vec![0.0]))
        );
    }

    #[test]
    fn addition() {
        let a = Value::vec(vec![1.0, 2.0]);
        let b = Value::vec(vec![3.0, 4.0]);
        assert_eq!(add_values(&a, &b).unwrap(), Value::vec(vec![4.0, 6.0]));
        let t = Value::pair(Value::vec(vec![1.0]), Value::vec(vec![2.0]));
        let z = zero_of(&t.ty());
        assert_eq!(add_values(&t, &z).unwrap(), t);
        assert!(add_values(&a, &t).is_err());
    }

    #[test]
    fn flatten_round_trip() {
        let t = Value::pair(Value::vec(vec![1.0, 2.0]), Value::Tup(vec![Value::vec(vec![3.0]), Value::unit()]));
        let leaves = t.flatten();
        assert_eq!(leaves, vec![1.0, 2.0, 3.0]);
        assert_eq!(Value::unflatten(&t.ty(), &leaves).unwrap(), t);
    }

    #[test]
    fn unit_shapes_agree() {
        assert!(Value::unit().has_type(&Ty::Prod(vec![])));
        assert!(Value::Tup(vec![]).has_type(&Ty::Base(0)));
    }
}
