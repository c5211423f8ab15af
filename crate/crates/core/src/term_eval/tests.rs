use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::gen::TermGen;
use crate::grad_oracle::{compare_with, eval_with, finite_diff_vjp_fn, random_value, Tolerance, STEP};
use crate::syntax::names::subst_term1;
use crate::syntax::{FunSym, Prim, Term, Ty, TyEnv};
use crate::typecheck::infer_term;
use crate::values::{sigmoid, TieBreak, Value};

fn c(xs: &[f64]) -> Term {
    Term::constant(xs.to_vec())
}

fn eval(t: &Term) -> Value {
    eval_term(t, TieBreak::Strict).unwrap_or_else(|e| panic!("{t}: {e}"))
}

fn swish(n: usize) -> FunSym {
    FunSym::new(Prim::Swish, vec![n])
}

#[test]
fn rd_of_variable_is_seed() {
    let out = rewrite_rd(&TyEnv::new(), &c(&[3.0]), &c(&[1.0]), "x", &Term::var("x")).unwrap();
    assert_eq!(out, c(&[3.0]));
}

#[test]
fn rd_of_constant_is_zero() {
    let out = rewrite_rd(&TyEnv::new(), &c(&[3.0]), &c(&[1.0, 2.0]), "x", &c(&[5.0])).unwrap();
    assert_eq!(out, Term::zeros(2));
}

#[test]
fn rd_of_swish_at_two() {
    let out = rewrite_rd(&TyEnv::new(), &c(&[1.0]), &c(&[2.0]), "x", &Term::app(swish(1), Term::var("x"))).unwrap();
    let s = sigmoid(2.0);
    let got = eval(&out).flatten()[0];
    assert!((got - (s + 2.0 * s * (1.0 - s))).abs() < 1e-15);
    assert!((got - 1.0908).abs() < 1e-4);
}

#[test]
fn rd_of_tuple_sums_components() {
    // x ↦ ⟨x, x⟩ has reverse derivative (u1, u2) ↦ u1 + u2
    let body = Term::pair(Term::var("x"), Term::var("x"));
    let seed = Term::pair(c(&[1.0, 2.0]), c(&[10.0, 20.0]));
    let out = rewrite_rd(&TyEnv::new(), &seed, &c(&[0.0, 0.0]), "x", &body).unwrap();
    assert_eq!(eval(&out), Value::vec(vec![11.0, 22.0]));
}

#[test]
fn rd_of_projection() {
    let env = TyEnv::new();
    let body = Term::proj(2, Term::var("x"));
    let point = Term::pair(c(&[1.0]), c(&[2.0, 3.0]));
    let out = rewrite_rd(&env, &c(&[5.0, 6.0]), &point, "x", &body).unwrap();
    assert_eq!(eval(&out), Value::pair(Value::vec(vec![0.0]), Value::vec(vec![5.0, 6.0])));
}

#[test]
fn rd_binder_clash_with_seed() {
    // the seed mentions `x`; the binder must be renamed
    let env = TyEnv::new().extend_front("x", Ty::Base(1));
    let out = rewrite_rd(&env, &Term::var("x"), &c(&[2.0]), "x", &Term::app(swish(1), Term::var("x"))).unwrap();
    let closed = Term::let_("x", c(&[1.0]), out);
    assert!((eval(&closed).flatten()[0] - 1.0908).abs() < 1e-4);
}

#[test]
fn steps() {
    let t = Term::proj(2, Term::pair(c(&[1.0]), c(&[2.0])));
    assert_eq!(step_term(&t, TieBreak::Strict).unwrap(), Some(c(&[2.0])));
    let t = Term::let_("x", c(&[1.0]), Term::plus(Term::var("x"), Term::var("x")));
    assert_eq!(step_term(&t, TieBreak::Strict).unwrap(), Some(Term::plus(c(&[1.0]), c(&[1.0]))));
    assert_eq!(eval(&t), Value::vec(vec![2.0]));
    assert_eq!(step_term(&c(&[1.0]), TieBreak::Strict).unwrap(), None);
}

#[test]
fn tuple_steps_left_to_right() {
    let t = Term::pair(Term::plus(c(&[1.0]), c(&[1.0])), Term::plus(c(&[2.0]), c(&[2.0])));
    let t1 = step_term(&t, TieBreak::Strict).unwrap().unwrap();
    assert_eq!(t1, Term::pair(c(&[2.0]), Term::plus(c(&[2.0]), c(&[2.0]))));
}

#[test]
fn open_terms_are_stuck() {
    assert!(step_term(&Term::plus(Term::var("x"), c(&[1.0])), TieBreak::Strict).is_err());
}

#[test]
fn rd_of_pure_let_is_seed() {
    let t = Term::rd(c(&[4.0, 5.0]), "x", Term::let_("y", Term::var("x"), Term::var("y")), c(&[1.0, 1.0]));
    assert_eq!(eval(&t), Value::vec(vec![4.0, 5.0]));
}

#[test]
fn nested_rd_is_unfolded() {
    // the inner derivative is 2x as a function of its seed x
    let inner = Term::rd(Term::var("x"), "z", Term::plus(Term::var("z"), Term::var("z")), c(&[7.0]));
    let outer = Term::rd(c(&[3.0]), "x", inner, c(&[0.5]));
    assert_eq!(eval(&outer), Value::vec(vec![6.0]));
}

#[test]
fn second_derivatives_of_primitives_are_unsupported() {
    let inner = Term::rd(c(&[1.0]), "z", Term::app(swish(1), Term::var("z")), Term::var("x"));
    let outer = Term::rd(c(&[1.0]), "x", inner, c(&[0.5]));
    assert!(matches!(
        eval_term(&outer, TieBreak::Strict),
        Err(crate::error::EvalError::MissingRdPartner { .. })
    ));
}

#[test]
fn partiality_surfaces() {
    let t = Term::app(FunSym::new(Prim::Pool, vec![2, 2, 1]), c(&[1.0, 1.0]));
    assert!(matches!(eval_term(&t, TieBreak::Strict), Err(crate::error::EvalError::Partiality { .. })));
    assert_eq!(eval_term(&t, TieBreak::First).unwrap(), Value::vec(vec![1.0]));
}

fn soundness_instance(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rand::Rng::gen_range(&mut rng, 1..=3);
    let k = rand::Rng::gen_range(&mut rng, 1..=3);
    let mut g = TermGen::new(rng);
    let env = vec![("x".to_string(), Ty::Base(n))];
    let body = g.term(&env, k, 4);
    let v = random_value(&Ty::Base(n), &mut g.rng);
    let w = random_value(&Ty::Base(k), &mut g.rng);
    let rd = Term::rd(w.to_term(), "x", body.clone(), v.to_term());
    let analytic = eval_term(&rd, TieBreak::Strict).map_err(|e| TestCaseError::fail(format!("{body}: {e}")))?;
    let numeric = finite_diff_vjp_fn(|p| eval_with(&body, "x", p, TieBreak::Strict), &v, &w, STEP)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let report = compare_with(&numeric, &analytic, Tolerance::NONLINEAR).unwrap();
    prop_assert!(report.pass, "{body} at {v} with {w}: {report:?} ({numeric} vs {analytic})");
    Ok(())
}

fn substitution_instance(seed: u64) -> Result<(), TestCaseError> {
    let mut g = TermGen::new(ChaCha8Rng::seed_from_u64(seed));
    let env = vec![("x".to_string(), Ty::Base(2)), ("y".to_string(), Ty::Base(1))];
    let body = g.term(&env, 2, 4);
    let replacement = g.term(&env[1..], 2, 2);
    let gamma = TyEnv::from_entries(env.clone());
    let before = infer_term(&gamma, &body).unwrap();
    let after = infer_term(&gamma, &subst_term1(&body, "x", &replacement)).unwrap();
    prop_assert_eq!(before, after);
    // evaluation agrees with let-binding
    let y = Value::vec(vec![0.25]);
    let closed = |t: Term| Term::let_("y", y.to_term(), t);
    let a = eval_term(&closed(Term::let_("x", replacement.clone(), body.clone())), TieBreak::Strict).unwrap();
    let b = eval_term(&closed(subst_term1(&body, "x", &replacement)), TieBreak::Strict).unwrap();
    prop_assert_eq!(a, b);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(160))]

    #[test]
    fn gradient_soundness(seed in any::<u64>()) {
        soundness_instance(seed)?;
    }

    #[test]
    fn substitution_preserves_types(seed in any::<u64>()) {
        substitution_instance(seed)?;
    }

    #[test]
    fn small_step_agrees_with_big_step(seed in any::<u64>()) {
        let mut g = TermGen::new(ChaCha8Rng::seed_from_u64(seed));
        let env = vec![("x".to_string(), Ty::Base(3))];
        let body = g.term(&env, 2, 4);
        let v = random_value(&Ty::Base(3), &mut g.rng);
        let small = eval_term(&Term::let_("x", v.to_term(), body.clone()), TieBreak::Strict).unwrap();
        let big = eval_with(&body, "x", &v, TieBreak::Strict).unwrap();
        prop_assert!(crate::values::max_rel_diff(&small, &big, 1e-12).unwrap() < 1e-12);
    }
}
