use proptest::prelude::*;

use super::laws::{self, *};
use super::*;
use crate::command_eval::{run_command, Config};
use crate::surface::Program;
use crate::syntax::{Handler, OpName, Term, Ty};
use crate::typecheck::Checker;
use crate::values::{Heap, TieBreak, Value};

fn g(seed: u64) -> LabGen {
    lab_gen(seed)
}

fn nf(a: &ArrTerm) -> NormalForm {
    laws::nf(a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn congruence_instances_normalize_identically(seed in any::<u64>()) {
        for k in 0..AXIOMS.len() {
            if let Err(e) = check_axiom(k, seed) {
                prop_assert!(false, "{}", e);
            }
        }
    }

    #[test]
    fn normalization_is_idempotent(seed in any::<u64>()) {
        let mut g = g(seed);
        let (x, y) = (g.ty(), g.ty());
        let a = g.arrow(&x, &y, 3, true);
        let n = nf(&a);
        prop_assert_eq!(&nf(&n.to_arr().unwrap()), &n);
    }

    #[test]
    fn normalization_preserves_meaning(seed in any::<u64>()) {
        prop_assert_eq!(check_meaning_preserved(seed, 1e-12), Ok(()));
    }
}

fn handler(p: &Program) -> &std::sync::Arc<Handler> {
    p.handler("H").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn algebra_unit_law(seed in any::<u64>()) {
        prop_assert_eq!(check_unit_law(seed, 1e-12), Ok(()));
    }

    #[test]
    fn algebra_respects_composition(seed in any::<u64>()) {
        prop_assert_eq!(check_composition_law(seed, 1e-12), Ok(()));
    }
}

#[test]
fn identity_arr_is_dropped() {
    let mut g = g(3);
    let a = g.arrow(&Ty::real(2), &Ty::real(3), 3, true);
    assert_eq!(nf(&ArrTerm::Arr(PureFun::identity(&Ty::real(2))).seq(a.clone())), nf(&a));
}

#[test]
fn first_of_arr_is_arr_of_product() {
    let mut g = g(4);
    let f = g.fun(&Ty::real(2), &Ty::real(3));
    let lhs = nf(&ArrTerm::first(Ty::real(1), ArrTerm::Arr(f.clone())));
    assert!(lhs.steps.is_empty());
    assert_eq!(lhs, nf(&ArrTerm::Arr(times_id(&f, &Ty::real(1)))));
}

#[test]
fn pure_maps_slide_past_operations() {
    let mut g = g(5);
    let f = g.fun(&Ty::real(1), &Ty::real(2));
    let lhs = ArrTerm::first(Ty::real(1), linear()).seq(ArrTerm::Arr(id_times(&f, &Ty::real(3))));
    let rhs = ArrTerm::Arr(id_times(&f, &Ty::real(2))).seq(ArrTerm::first(Ty::real(2), linear()));
    assert_eq!(nf(&lhs), nf(&rhs));
}

#[test]
fn normal_form_prints_as_segments() {
    let n = nf(&get().seq(ArrTerm::Arr(PureFun::identity(&Ty::real(6)))).seq(put()));
    let s = n.to_string();
    assert!(s.starts_with("arr("), "{s}");
    assert!(s.contains(">>> first[Real(0)](get<l>) >>> arr("), "{s}");
    assert!(s.contains("first[Real(0) * Real(6)](put<l>)"), "{s}");
    assert_eq!(n.segments().unwrap().len(), 5);
}

#[test]
fn mlp_body_has_two_operation_segments() {
    let p = crate::corpus::program("mlp").unwrap();
    let checker = Checker::new(&p.sig);
    let body = p.def("R_MLP").unwrap();
    let a = Denoter::new(&checker).command(&body.params, &body.body).unwrap();
    let n = nf(&a);
    let ops: Vec<String> = n.steps.iter().map(|s| s.op.to_string()).collect();
    assert_eq!(ops, ["Linear<l0:2,3>", "Linear<l1:3,2>"]);
    assert_eq!(n.segments().unwrap().len(), 5);
    assert_eq!(n.to_string().matches("first[").count(), 2);
}

#[test]
fn identity_handler_on_identity_is_its_return_clause() {
    let p = lab();
    let checker = Checker::new(&p.sig);
    let den = Denoter::new(&checker);
    let id = nf(&ArrTerm::Arr(PureFun::identity(&Ty::real(3))));
    let k0 = den.command(&crate::syntax::TyEnv::new().extend_front("x", Ty::real(3)), &handler(&p).ret_clause).unwrap();
    assert_eq!(nf(&den.reverse_algebra_apply(handler(&p), &id).unwrap()), nf(&k0));
}

#[test]
fn algebra_on_a_linear_map_is_its_transpose() {
    // α(arr f, k) = x ↦ fᵀ(k(f x)) for linear f
    let p = lab();
    let checker = Checker::new(&p.sig);
    let den = Denoter::new(&checker);
    let w = Term::constant(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let f = PureFun::new(
        "x",
        Term::app(crate::syntax::FunSym::new(crate::syntax::Prim::Matmul, vec![2, 3]), Term::pair(w, Term::var("x"))),
        Ty::real(2),
    )
    .unwrap();
    let k = ArrTerm::Arr(
        PureFun::new("y", Term::app(crate::syntax::FunSym::new(crate::syntax::Prim::Swish, vec![3]), Term::var("y")), Ty::real(3))
            .unwrap(),
    );
    let a = den.fold(handler(&p), &nf(&ArrTerm::Arr(f.clone())), k.clone()).unwrap();
    let x = Value::vec(vec![0.25, -0.5]);
    let (_, got) = evaluate_arr(&a, &Heap::new(), &x, TieBreak::Strict).unwrap();
    let fx = apply_fun(&f, &x, TieBreak::Strict).unwrap();
    let (_, kfx) = evaluate_arr(&k, &Heap::new(), &fx, TieBreak::Strict).unwrap();
    let u = kfx.flatten();
    // matmul<2,3>(w, x)_i = Σ_j w[i·2+j] x_j, so the transpose sums over i
    let expected: Vec<f64> = (0..2).map(|j| (0..3).map(|i| [1.0, 2.0, 3.0, 4.0, 5.0, 6.0][i * 2 + j] * u[i]).sum()).collect();
    for (g, e) in got.flatten().iter().zip(&expected) {
        assert!((g - e).abs() < 1e-12, "{got} vs {expected:?}");
    }
}

#[test]
fn evaluates_pure_and_heap_segments() {
    let t = Term::constant(vec![1.0, 1.0]);
    let minus = crate::syntax::FunSym::new(crate::syntax::Prim::Minus, vec![2]);
    let f = PureFun::new("x", Term::app(minus, Term::pair(Term::var("x"), t)), Ty::real(2)).unwrap();
    let heap = Heap::new();
    let (h, v) = evaluate_arr(&ArrTerm::Arr(f), &heap, &Value::vec(vec![1.0, 2.0]), TieBreak::Strict).unwrap();
    assert!(h.ptr_eq(&heap));
    assert_eq!(v, Value::vec(vec![0.0, 1.0]));

    let heap = Heap::from_slots([("l".to_string(), vec![7.0])]);
    let a = ArrTerm::Arr(PureFun::identity(&Ty::unit())).seq(ArrTerm::op(OpName::get("l"), Ty::unit(), Ty::real(1)));
    let (h, v) = evaluate_arr(&a, &heap, &Value::unit(), TieBreak::Strict).unwrap();
    assert_eq!(v, Value::vec(vec![7.0]));
    assert_eq!(h.slot("l"), Some(&[7.0][..]));
}

#[test]
fn residual_user_operations_are_errors() {
    let err = evaluate_arr(&linear(), &Heap::new(), &Value::vec(vec![1.0, 2.0]), TieBreak::Strict).unwrap_err();
    assert!(matches!(err, crate::error::EvalError::ResidualOperation { .. }));
}

fn machine(p: &Program) -> (Heap, Value) {
    let config = Config { check_types: false, ..Config::default() };
    run_command(&p.sig, p.initial_heap(0).unwrap(), p.main().unwrap().clone(), config).unwrap()
}

#[test]
fn corpus_backends_agree() {
    for (name, _) in crate::corpus::CORPUS {
        let p = crate::corpus::program(name).unwrap();
        let heap = p.initial_heap(0).unwrap();
        let expected = machine(&p);
        let got = run_arrow(&p.sig, &heap, p.main().unwrap(), TieBreak::Strict).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(close(&expected, &got, 1e-9), Ok(()));
        // the step must actually have moved some weights
        if heap.iter().next().is_some() {
            assert!(heap.iter().any(|(l, w)| w != got.0.slot(l).unwrap()), "{name}: heap unchanged");
        }
    }
}

#[test]
fn mlp_arrow_matches_closed_form() {
    let p = crate::corpus::program("mlp").unwrap();
    let heap = p.initial_heap(7).unwrap();
    let (h, _) = run_arrow(&p.sig, &heap, p.main().unwrap(), TieBreak::Strict).unwrap();
    let d = crate::grad_oracle::MlpDims { inp: 2, hid: 3, out: 2 };
    let step = crate::grad_oracle::mlp_step_reference(
        d,
        heap.slot("l0").unwrap(),
        heap.slot("l1").unwrap(),
        &[0.5, -1.0],
        &[1.0, 0.0],
        0.1,
    );
    for (got, want) in h.slot("l0").unwrap().iter().zip(&step.m0) {
        assert!((got - want).abs() < 1e-12);
    }
    for (got, want) in h.slot("l1").unwrap().iter().zip(&step.m1) {
        assert!((got - want).abs() < 1e-12);
    }
}
