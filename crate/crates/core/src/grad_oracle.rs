//! Finite-difference differentiation oracle and comparison harness.
//!
//! Function evaluation here goes through a direct big-step interpreter over
//! environments, independent of the substitution-based small-step machine.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::EvalError;
use crate::free_arrow::PureFun;
use crate::syntax::{FunSym, Prim, Term, Ty};
use crate::values::{ev, sigmoid, TieBreak, Value};

/// Central-difference step for nonlinear functions.
pub const STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub const NONLINEAR: Tolerance = Tolerance { rel: 1e-4, abs: 1e-7 };
    pub const LINEAR: Tolerance = Tolerance { rel: 1e-12, abs: 1e-12 };
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradReport {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    /// Leaf index (in flattening order) of the largest relative error.
    pub worst_index: Option<usize>,
    pub pass: bool,
}

impl GradReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Pointwise comparison: a leaf passes when its absolute error is within
/// `abs_tol` or its error relative to the expectation is within `rel_tol`.
pub fn compare(expected: &Value, got: &Value, rel_tol: f64, abs_tol: f64) -> Result<GradReport, EvalError> {
    if !got.has_type(&expected.ty()) {
        return Err(EvalError::ShapeMismatch { detail: format!("cannot compare {expected} with {got}") });
    }
    let (e, g) = (expected.flatten(), got.flatten());
    let mut report = GradReport { max_rel_err: 0.0, max_abs_err: 0.0, worst_index: None, pass: true };
    for (i, (a, b)) in e.iter().zip(&g).enumerate() {
        let abs = (a - b).abs();
        let rel = if abs == 0.0 { 0.0 } else { abs / a.abs() };
        if !(abs <= abs_tol || rel <= rel_tol) {
            report.pass = false;
        }
        if abs > report.max_abs_err || abs.is_nan() {
            report.max_abs_err = abs;
        }
        if report.worst_index.is_none() || rel > report.max_rel_err || rel.is_nan() {
            report.max_rel_err = rel;
            report.worst_index = Some(i);
        }
    }
    Ok(report)
}

pub fn compare_with(expected: &Value, got: &Value, tol: Tolerance) -> Result<GradReport, EvalError> {
    compare(expected, got, tol.rel, tol.abs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Jf(x)ᵀ u` by central differences on each input leaf.
pub fn finite_diff_vjp_fn<F>(f: F, x: &Value, u: &Value, h: f64) -> Result<Value, EvalError>
where
    F: Fn(&Value) -> Result<Value, EvalError>,
{
    let ty = x.ty();
    let leaves = x.flatten();
    let uf = u.flatten();
    let mut out = Vec::with_capacity(leaves.len());
    let mut probe = leaves.clone();
    for i in 0..leaves.len() {
        probe[i] = leaves[i] + h;
        let plus = f(&Value::unflatten(&ty, &probe)?)?.flatten();
        probe[i] = leaves[i] - h;
        let minus = f(&Value::unflatten(&ty, &probe)?)?.flatten();
        probe[i] = leaves[i];
        if plus.len() != uf.len() {
            return Err(EvalError::ShapeMismatch {
                detail: format!("cotangent has {} leaves but the output has {}", uf.len(), plus.len()),
            });
        }
        out.push((dot(&plus, &uf) - dot(&minus, &uf)) / (2.0 * h));
    }
    Value::unflatten(&ty, &out)
}

pub fn finite_diff_vjp(f: &PureFun, x: &Value, u: &Value, h: f64, tie: TieBreak) -> Result<Value, EvalError> {
    finite_diff_vjp_fn(|p| eval_with(&f.body, &f.binder, p, tie), x, u, h)
}

/// Big-step evaluation of `body` with `binder` bound to `arg`.
pub fn eval_with(body: &Term, binder: &str, arg: &Value, tie: TieBreak) -> Result<Value, EvalError> {
    let mut env = BTreeMap::new();
    env.insert(binder.to_string(), arg.clone());
    big_step(&env, body, tie)
}

/// Direct evaluator over an environment. Reverse-derivative terms are
/// rejected: the oracle only evaluates forward programs.
pub fn big_step(env: &BTreeMap<String, Value>, t: &Term, tie: TieBreak) -> Result<Value, EvalError> {
    match t {
        Term::Var(x) => env.get(x).cloned().ok_or_else(|| EvalError::Stuck { term: t.to_string() }),
        Term::Const(v) => Ok(Value::Vec(v.clone())),
        Term::App(f, m) => ev(f, &big_step(env, m, tie)?, tie),
        Term::Plus(a, b) => {
            let (x, y) = (big_step(env, a, tie)?, big_step(env, b, tie)?);
            let (x, y) = (x.as_vec()?, y.as_vec()?);
            if x.len() != y.len() {
                return Err(EvalError::ShapeMismatch { detail: format!("sum of lengths {} and {}", x.len(), y.len()) });
            }
            Ok(Value::vec(x.iter().zip(y).map(|(p, q)| p + q).collect()))
        }
        Term::Tuple(ts) => Ok(Value::Tup(ts.iter().map(|m| big_step(env, m, tie)).collect::<Result<_, _>>()?)),
        Term::Proj(i, m) => match big_step(env, m, tie)? {
            Value::Tup(vs) if *i >= 1 && *i <= vs.len() => Ok(vs[*i - 1].clone()),
            v => Err(EvalError::ShapeMismatch { detail: format!("projection {i} of {v}") }),
        },
        Term::Let(x, m, n) => {
            let v = big_step(env, m, tie)?;
            let mut inner = env.clone();
            inner.insert(x.clone(), v);
            big_step(&inner, n, tie)
        }
        Term::Rd { .. } => Err(EvalError::Stuck { term: format!("oracle cannot evaluate {t}") }),
    }
}

/// Primitives whose central differences are exact: maps affine in every
/// single input coordinate.
pub fn is_multi_affine(p: Prim) -> bool {
    !matches!(p, Prim::Swish | Prim::Pool | Prim::Round)
}

/// Step size and tolerance used when checking a primitive.
pub fn primitive_regime(p: Prim) -> (f64, Tolerance) {
    if is_multi_affine(p) {
        (1.0, Tolerance::LINEAR)
    } else {
        (STEP, Tolerance::NONLINEAR)
    }
}

/// A value of the given type with leaves uniform in `[-2, 2]`.
pub fn random_value<R: Rng>(ty: &Ty, rng: &mut R) -> Value {
    match ty {
        Ty::Base(n) => Value::vec((0..*n).map(|_| rng.gen_range(-2.0..=2.0)).collect()),
        Ty::Prod(cs) => Value::Tup(cs.iter().map(|c| random_value(c, rng)).collect()),
    }
}

/// A representative instance of every primitive family.
pub fn sample_symbols() -> Vec<FunSym> {
    vec![
        FunSym::new(Prim::Swish, vec![3]),
        FunSym::new(Prim::Smul, vec![3]),
        FunSym::new(Prim::Minus, vec![3]),
        FunSym::new(Prim::Matmul, vec![2, 3]),
        FunSym::new(Prim::Transpose, vec![2, 3]),
        FunSym::new(Prim::Outer, vec![2, 3]),
        FunSym::new(Prim::Conv, vec![5, 2, 2, 3]),
        FunSym::new(Prim::Pool, vec![7, 2, 2]),
        FunSym::new(Prim::Padding, vec![2, 3, 6]),
        FunSym::new(Prim::Upscale, vec![2, 3, 5]),
        FunSym::new(Prim::Concat, vec![2, 1, 3]),
        FunSym::new(Prim::Round, vec![3]),
    ]
}

/// Compares `rd[f]` at `⟨u, x⟩` with the finite-difference VJP of `f`.
pub fn check_primitive(f: &FunSym, x: &Value, u: &Value, tie: TieBreak) -> Result<GradReport, EvalError> {
    let (h, tol) = primitive_regime(f.prim);
    let analytic = ev(&f.rd_of(), &Value::pair(u.clone(), x.clone()), tie)?;
    let numeric = finite_diff_vjp_fn(|p| ev(f, p, tie), x, u, h)?;
    compare_with(&numeric, &analytic, tol)
}

/// Runs [`check_primitive`] at `count` random points.
pub fn check_primitive_random<R: Rng>(f: &FunSym, count: usize, rng: &mut R) -> Result<GradReport, EvalError> {
    let sig = crate::signature::fun_sig(f).map_err(|e| EvalError::ShapeMismatch { detail: e.to_string() })?;
    let mut worst = GradReport { max_rel_err: 0.0, max_abs_err: 0.0, worst_index: None, pass: true };
    for _ in 0..count {
        let x = random_value(&sig.dom, rng);
        let u = random_value(&sig.cod, rng);
        let r = check_primitive(f, &x, &u, TieBreak::Strict)?;
        worst.pass &= r.pass;
        worst.max_abs_err = worst.max_abs_err.max(r.max_abs_err);
        if r.max_rel_err >= worst.max_rel_err {
            worst.max_rel_err = r.max_rel_err;
            worst.worst_index = r.worst_index;
        }
    }
    Ok(worst)
}

fn swish_grad(z: f64) -> f64 {
    let s = sigmoid(z);
    s + z * s * (1.0 - s)
}

/// Shapes of the two-layer perceptron: `m0` is `hid × inp`, `m1` is `out × hid`,
/// both row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MlpDims {
    pub inp: usize,
    pub hid: usize,
    pub out: usize,
}

fn matvec(w: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
    let cols = x.len();
    (0..rows).map(|i| (0..cols).map(|j| w[i * cols + j] * x[j]).sum()).collect()
}

fn matvec_t(w: &[f64], y: &[f64], cols: usize) -> Vec<f64> {
    let rows = y.len();
    (0..cols).map(|j| (0..rows).map(|i| w[i * cols + j] * y[i]).sum()).collect()
}

/// `½‖m1·swish(m0·v) − t‖²`.
pub fn mlp_loss(d: MlpDims, m0: &[f64], m1: &[f64], v: &[f64], t: &[f64]) -> f64 {
    let z = matvec(m0, v, d.hid);
    let v1: Vec<f64> = z.iter().map(|x| x * sigmoid(*x)).collect();
    let y = matvec(m1, &v1, d.out);
    0.5 * y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// Closed-form gradients `(∂L/∂m0, ∂L/∂m1)` of [`mlp_loss`].
pub fn mlp_loss_grad_reference(d: MlpDims, m0: &[f64], m1: &[f64], v: &[f64], t: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let z = matvec(m0, v, d.hid);
    let v1: Vec<f64> = z.iter().map(|x| x * sigmoid(*x)).collect();
    let resid: Vec<f64> = matvec(m1, &v1, d.out).iter().zip(t).map(|(a, b)| a - b).collect();
    let mut g1 = vec![0.0; d.out * d.hid];
    for i in 0..d.out {
        for j in 0..d.hid {
            g1[i * d.hid + j] = resid[i] * v1[j];
        }
    }
    let back = matvec_t(m1, &resid, d.hid);
    let mut g0 = vec![0.0; d.hid * d.inp];
    for i in 0..d.hid {
        let gi = back[i] * swish_grad(z[i]);
        for j in 0..d.inp {
            g0[i * d.inp + j] = gi * v[j];
        }
    }
    (g0, g1)
}

/// Expected outcome of one handled training step.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpStep {
    pub m0: Vec<f64>,
    pub m1: Vec<f64>,
    /// Cotangent reaching the network input.
    pub input_grad: Vec<f64>,
}

/// One gradient-descent step with learning rate `alpha`, plus the input
/// cotangent `m0ᵀ u'` that the handled program returns.
pub fn mlp_step_reference(d: MlpDims, m0: &[f64], m1: &[f64], v: &[f64], t: &[f64], alpha: f64) -> MlpStep {
    let (g0, g1) = mlp_loss_grad_reference(d, m0, m1, v, t);
    let z = matvec(m0, v, d.hid);
    let v1: Vec<f64> = z.iter().map(|x| x * sigmoid(*x)).collect();
    let resid: Vec<f64> = matvec(m1, &v1, d.out).iter().zip(t).map(|(a, b)| a - b).collect();
    let u: Vec<f64> = matvec_t(m1, &resid, d.hid).iter().map(|x| alpha * x).collect();
    let u_prime: Vec<f64> = u.iter().zip(&z).map(|(ui, zi)| ui * swish_grad(*zi)).collect();
    MlpStep {
        m0: m0.iter().zip(&g0).map(|(w, g)| w - alpha * g).collect(),
        m1: m1.iter().zip(&g1).map(|(w, g)| w - alpha * g).collect(),
        input_grad: matvec_t(m0, &u_prime, d.inp),
    }
}

/// Finite-difference gradients of [`mlp_loss`] on the flattened parameters.
pub fn mlp_loss_grad_fd(d: MlpDims, m0: &[f64], m1: &[f64], v: &[f64], t: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let params = Value::pair(Value::vec(m0.to_vec()), Value::vec(m1.to_vec()));
    let loss = |p: &Value| -> Result<Value, EvalError> {
        let ps = p.as_tuple(2)?;
        Ok(Value::vec(vec![mlp_loss(d, ps[0].as_vec()?, ps[1].as_vec()?, v, t)]))
    };
    let g = finite_diff_vjp_fn(loss, &params, &Value::vec(vec![1.0]), STEP).expect("shapes agree");
    let gs = g.as_tuple(2).expect("pair");
    (gs[0].flatten(), gs[1].flatten())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Value {
        Value::vec(xs.to_vec())
    }

    #[test]
    fn identity_vjp() {
        let f = PureFun::identity(&Ty::Base(2));
        let g = finite_diff_vjp(&f, &v(&[0.3, -1.0]), &v(&[1.0, 2.0]), 1.0, TieBreak::Strict).unwrap();
        assert_eq!(g, v(&[1.0, 2.0]));
    }

    #[test]
    fn matmul_vjp_is_transpose() {
        let w = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let body = Term::app(FunSym::new(Prim::Matmul, vec![3, 2]), Term::pair(Term::constant(w.clone()), Term::var("x")));
        let f = PureFun::new("x", body, Ty::Base(3)).unwrap();
        let u = v(&[1.0, -1.0]);
        let g = finite_diff_vjp(&f, &v(&[0.5, 0.1, 0.2]), &u, 1.0, TieBreak::Strict).unwrap();
        let wt = ev(&FunSym::new(Prim::Transpose, vec![3, 2]), &v(&w), TieBreak::Strict).unwrap();
        let expect = ev(&FunSym::new(Prim::Matmul, vec![2, 3]), &Value::pair(wt, u), TieBreak::Strict).unwrap();
        assert!(compare_with(&expect, &g, Tolerance::LINEAR).unwrap().pass);
    }

    #[test]
    fn swish_vjp_at_two() {
        let f = PureFun::new("x", Term::app(FunSym::new(Prim::Swish, vec![1]), Term::var("x")), Ty::Base(1)).unwrap();
        let g = finite_diff_vjp(&f, &v(&[2.0]), &v(&[1.0]), STEP, TieBreak::Strict).unwrap();
        assert!((g.flatten()[0] - 1.0908).abs() < 1e-4);
    }

    #[test]
    fn compare_examples() {
        assert!(compare(&v(&[1.0, 2.0]), &v(&[1.0, 2.0]), 1e-6, 1e-9).unwrap().pass);
        assert!(compare(&v(&[1.0]), &v(&[1.0 + 5e-5]), 1e-4, 0.0).unwrap().pass);
        assert!(!compare(&v(&[0.0]), &v(&[1e-8]), 1e-4, 1e-9).unwrap().pass);
        assert!(compare(&v(&[1.0]), &v(&[1.0, 2.0]), 1e-4, 0.0).is_err());
    }

    #[test]
    fn every_primitive_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in sample_symbols() {
            let r = check_primitive_random(&f, 50, &mut rng).unwrap();
            assert!(r.pass, "{f}: {r:?}");
        }
    }

    #[test]
    fn mlp_zero_residual() {
        let d = MlpDims { inp: 2, hid: 3, out: 2 };
        let m0 = [0.1, -0.2, 0.3, 0.4, -0.5, 0.6];
        let m1 = [0.7, -0.1, 0.2, 0.3, 0.5, -0.4];
        let v = [1.0, -1.5];
        let z = matvec(&m0, &v, 3);
        let v1: Vec<f64> = z.iter().map(|x| x * sigmoid(*x)).collect();
        let t = matvec(&m1, &v1, 2);
        let (g0, g1) = mlp_loss_grad_reference(d, &m0, &m1, &v, &t);
        assert!(g0.iter().chain(&g1).all(|x| *x == 0.0));
    }

    #[test]
    fn mlp_closed_form_matches_differences() {
        let d = MlpDims { inp: 2, hid: 3, out: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut draw = |n| random_value(&Ty::Base(n), &mut rng).flatten();
        let (m0, m1, v, t) = (draw(6), draw(6), draw(2), draw(2));
        let (g0, g1) = mlp_loss_grad_reference(d, &m0, &m1, &v, &t);
        let (f0, f1) = mlp_loss_grad_fd(d, &m0, &m1, &v, &t);
        let r = compare_with(&Value::vec(f0), &Value::vec(g0), Tolerance::NONLINEAR).unwrap();
        assert!(r.pass, "{r:?}");
        let r = compare_with(&Value::vec(f1), &Value::vec(g1), Tolerance::NONLINEAR).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
