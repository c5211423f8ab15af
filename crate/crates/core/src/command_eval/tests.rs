use std::sync::Arc;

use super::*;
use crate::error::EvalError;
use crate::signature::{OpFamily, Signature, TyExpr};
use crate::syntax::{Command, Handler, OpClause, OpName, Term, Ty};
use crate::values::{Heap, Value};

fn c(xs: &[f64]) -> Term {
    Term::constant(xs.to_vec())
}

fn cfg() -> Config {
    Config { check_types: true, ..Config::default() }
}

fn sig() -> Signature {
    Signature::new().with_location("l", 1).with_family(OpFamily {
        name: "double".into(),
        loc_params: vec![],
        dim_params: vec![],
        coarity: TyExpr::Real(crate::signature::DimExpr::Num(1)),
        arity: TyExpr::Real(crate::signature::DimExpr::Num(1)),
    })
}

fn double() -> OpName {
    OpName::new("double", vec![], vec![])
}

fn identity_handler() -> Arc<Handler> {
    Arc::new(Handler::new("y", Command::ret(Term::var("y"))))
}

fn double_handler() -> Arc<Handler> {
    let clause = OpClause {
        fwd_binder: "x".into(),
        fwd: Command::ret(Term::pair(Term::plus(Term::var("x"), Term::var("x")), Term::unit())),
        bwd_binders: ("y".into(), "z".into()),
        bwd: Command::ret(Term::plus(Term::var("y"), Term::var("y"))),
        aux_ty: Ty::unit(),
    };
    Arc::new(Handler::new("y", Command::ret(Term::var("y"))).with_clause(double(), clause))
}

fn run(sig: &Signature, heap: Heap, cmd: Command) -> (Heap, Value) {
    run_command(sig, heap, cmd, cfg()).unwrap_or_else(|e| panic!("{e}"))
}

#[test]
fn get_reads_heap() {
    let s = sig();
    let hp = Heap::from_slots([("l".to_string(), vec![7.0])]);
    let (h2, v) = run(&s, hp.clone(), Command::op(OpName::get("l"), Term::unit()));
    assert_eq!(v, Value::vec(vec![7.0]));
    assert!(h2.ptr_eq(&hp));
}

#[test]
fn put_writes_heap_and_returns_unit() {
    let s = sig();
    let (h2, v) = run(&s, Heap::new(), Command::op(OpName::put("l"), c(&[3.0])));
    assert_eq!(v, Value::unit());
    assert_eq!(h2.slot("l").unwrap(), &[3.0]);
}

#[test]
fn pure_let_substitutes() {
    let s = sig();
    let cmd = Command::let_("x", Command::ret(c(&[1.0, 2.0])), Command::ret(Term::var("x")));
    let mut m = Machine::new(&s, Heap::new(), cmd, cfg()).unwrap();
    assert_eq!(m.step().unwrap(), Some(StepKind::LetRet("x".into())));
    assert_eq!(m.command(), &Command::ret(c(&[1.0, 2.0])));
    assert_eq!(m.step().unwrap(), None);
}

#[test]
fn constant_program() {
    let (h, v) = run(&sig(), Heap::new(), Command::ret(c(&[4.0])));
    assert_eq!(v, Value::vec(vec![4.0]));
    assert_eq!(h, Heap::new());
}

#[test]
fn identity_handler_returns_seed() {
    let cmd = Command::handle(c(&[1.0, 2.0]), vec!["x".into()], Command::ret(Term::var("x")), identity_handler());
    let (_, v) = run(&sig(), Heap::new(), cmd);
    assert_eq!(v, Value::vec(vec![1.0, 2.0]));
}

#[test]
fn handled_operation_backpropagates() {
    // forward 3 -> 6; the return clause seeds the cotangent with the output
    let body = Command::let_("a", Command::op(double(), Term::var("x")), Command::ret(Term::var("a")));
    let cmd = Command::handle(c(&[3.0]), vec!["x".into()], body, double_handler());
    let (_, v) = run(&sig(), Heap::new(), cmd);
    assert_eq!(v, Value::vec(vec![12.0]));
}

#[test]
fn two_binders_route_cotangents() {
    // only the second binder reaches the output
    let body = Command::ret(Term::var("b"));
    let seed = Term::pair(c(&[1.0]), c(&[5.0]));
    let cmd = Command::handle(seed, vec!["a".into(), "b".into()], body, identity_handler());
    let (_, v) = run(&sig(), Heap::new(), cmd);
    assert_eq!(v, Value::pair(Value::vec(vec![0.0]), Value::vec(vec![5.0])));
}

#[test]
fn term_holes_differentiate() {
    // output a + a with the identity return clause: cotangent (a+a) flows back twice
    let body = Command::ret(Term::plus(Term::var("a"), Term::var("a")));
    let cmd = Command::handle(c(&[2.0]), vec!["a".into()], body, identity_handler());
    let (_, v) = run(&sig(), Heap::new(), cmd);
    assert_eq!(v, Value::vec(vec![8.0]));
}

#[test]
fn nested_handlers_compose() {
    let inner = Command::handle(
        Term::var("x"),
        vec!["w".into()],
        Command::let_("a", Command::op(double(), Term::var("w")), Command::ret(Term::var("a"))),
        double_handler(),
    );
    let cmd = Command::handle(c(&[3.0]), vec!["x".into()], inner, identity_handler());
    let s = sig();
    let mut m = Machine::new(&s, Heap::new(), cmd, cfg()).unwrap();
    let (_, v) = m.run().unwrap();
    // inner result is 12 (a function of x with slope 4); outer seeds with 12
    assert_eq!(v, Value::vec(vec![48.0]));
    assert_eq!(m.stats.firings, 1);
}

#[test]
fn unhandled_user_operation() {
    let err = run_command(&sig(), Heap::new(), Command::op(double(), c(&[1.0])), cfg()).unwrap_err();
    assert!(matches!(err, crate::error::Error::Eval(EvalError::UnhandledOperation { .. })));
}

#[test]
fn fuel_runs_out() {
    let cmd = Command::let_("x", Command::ret(c(&[1.0])), Command::ret(Term::var("x")));
    let cfg = Config { fuel: Some(0), ..cfg() };
    let err = run_command(&sig(), Heap::new(), cmd, cfg).unwrap_err();
    assert!(matches!(err, crate::error::Error::Eval(EvalError::FuelExhausted { .. })));
}

#[test]
fn classification() {
    let p = Command::let_("a", Command::op(double(), Term::var("x")), Command::ret(Term::var("a")));
    let (frames, focus) = decompose(&p);
    assert_eq!(frames.len(), 1);
    let op = double();
    assert_eq!(classify(focus), Form::OpVar(&op, "x"));
    let q = Command::ret(Term::plus(Term::var("x"), Term::var("x")));
    assert!(matches!(classify(&q), Form::TermHole(HoleKind::Ret, _)));
}
