use super::*;
use crate::command_eval::{run_command, Config};
use crate::error::Error;
use crate::grad_oracle::{mlp_step_reference, MlpDims};
use crate::syntax::Ty;

use crate::corpus::CORPUS;

fn corpus(name: &str) -> Program {
    crate::corpus::program(name).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for (name, src) in CORPUS {
        let m = parse_module(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = module_to_source(&m);
        let again = parse_module(&printed).unwrap_or_else(|e| panic!("{name} reprinted: {e}\n{printed}"));
        assert_eq!(m, again, "{name}");
    }
}

#[test]
fn lowered_commands_round_trip() {
    for (name, _) in CORPUS {
        let p = corpus(name);
        let main = p.main().unwrap();
        assert_eq!(&p.command(&main.to_string()).unwrap(), main, "{name}");
        for (d, def) in &p.defs {
            assert_eq!(p.command(&def.body.to_string()).unwrap(), def.body, "{name}/{d}");
        }
    }
}

#[test]
fn corpus_typechecks() {
    for (name, _) in CORPUS {
        let p = corpus(name);
        let lines = p.check().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(lines.iter().any(|l| l.kind == "main"), "{name}");
    }
}

#[test]
fn unet_types() {
    let p = corpus("unet");
    assert_eq!(p.main_type().unwrap(), Ty::Base(134));
    let lines: Vec<String> = p.check().unwrap().iter().map(|l| l.to_string()).collect();
    assert!(lines.contains(&"def R_Unet : Real(512)".to_string()), "{lines:?}");
    assert!(lines.contains(&"main : Real(134)".to_string()));
    // seven convolutions and two pools reach the outer handler
    assert_eq!(p.handler("H_CNN").unwrap().clauses.len(), 9);
}

#[test]
fn autoencoder_handler_type() {
    let p = corpus("autoencoder");
    let lines: Vec<String> = p.check().unwrap().iter().map(|l| l.to_string()).collect();
    assert!(lines.contains(&"handler H_AE : RH(Real(2))".to_string()), "{lines:?}");
}

#[test]
fn mlp_step_matches_reference() {
    let p = corpus("mlp");
    let heap = p.initial_heap(7).unwrap();
    let (m0, m1) = (heap.slot("l0").unwrap().to_vec(), heap.slot("l1").unwrap().to_vec());
    let cfg = Config { check_types: true, ..Config::default() };
    let (after, grad) = run_command(&p.sig, heap, p.main().unwrap().clone(), cfg).unwrap();
    let d = MlpDims { inp: 2, hid: 3, out: 2 };
    let r = mlp_step_reference(d, &m0, &m1, &[0.5, -1.0], &[1.0, 0.0], 0.1);
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()));
    assert!(close(after.slot("l0").unwrap(), &r.m0));
    assert!(close(after.slot("l1").unwrap(), &r.m1));
    assert!(close(&grad.flatten(), &r.input_grad));
}

#[test]
fn heap_init_is_seeded() {
    let p = corpus("mlp");
    assert_eq!(p.initial_heap(3).unwrap(), p.initial_heap(3).unwrap());
    assert_ne!(p.initial_heap(3).unwrap(), p.initial_heap(4).unwrap());
    assert!(p.initial_heap(3).unwrap().slot("l0").unwrap().iter().all(|x| (-1.0..1.0).contains(x)));
}

#[test]
fn forward_mode_runs_networks() {
    for name in ["mlp", "resnet", "cnn", "autoencoder", "ste"] {
        let p = corpus(name);
        let cfg = Config { forward_with: p.main_handler().cloned(), check_depth: false, ..Config::default() };
        let heap = p.initial_heap(1).unwrap();
        let (_, out) = run_command(&p.sig, heap, p.forward.clone().unwrap(), cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        if name == "ste" {
            assert_eq!(out.flatten(), vec![0.0, -2.0, 3.0, 0.0]);
        }
    }
}

#[test]
fn parse_errors_carry_positions() {
    match Program::parse("dim n = 2;\nmain = ret x +;") {
        Err(Error::Parse(e)) => assert_eq!((e.line, e.col), (2, 15)),
        other => panic!("{other:?}"),
    }
    assert!(matches!(Program::parse("main = rev handle(x) <>. ret x with H;"), Err(Error::Parse(_))));
}

#[test]
fn lowering_errors() {
    let unknown_handler = "main = rev handle([1.0]) <x>. ret x with H;";
    assert!(matches!(Program::parse(unknown_handler), Err(Error::Type(_))));
    let recursive = "def A = A; main = A;";
    assert!(Program::parse(recursive).is_err());
    let dup = "dim n = 1; dim n = 2;";
    assert!(Program::parse(dup).is_err());
    let bad_heap = "loc l : 2; heap { l = [1.0]; } main = ret [];";
    assert!(Program::parse(bad_heap).unwrap().initial_heap(0).is_err());
}

#[test]
fn constants_shadowed_by_binders() {
    let p = Program::parse("const x = [1.0]; main = let x <= ret [2.0] in ret x + x;").unwrap();
    let cfg = Config::default();
    let (_, v) = run_command(&p.sig, p.initial_heap(0).unwrap(), p.main().unwrap().clone(), cfg).unwrap();
    assert_eq!(v.flatten(), vec![4.0]);
}

#[test]
fn terms_parse_and_print() {
    for src in [
        "let (a, b) <- (x, [1.0, -2.5]) in a + b + c",
        "w.rd(x. swish<2>(x))(v)",
        "rd[matmul<2, 3>]((u, p), (q,))",
        "proj<2>(((), [], zeros<3>))",
        "(a + (b + c)).rd(y. let z <- y in z)(q)",
    ] {
        let t = parse_term(src).unwrap();
        assert_eq!(parse_term(&term_to_source(&t)).unwrap(), t, "{src}");
    }
}

#[test]
fn dims_and_types() {
    let t = parse_ty("Real(c * ceil((n - 2) / 2)) * (Real(1) * ())").unwrap();
    assert_eq!(parse_ty(&t.to_string()).unwrap(), t);
    assert!(parse_ty("Real(ceil(n))").is_err());
}

#[test]
fn every_main_runs() {
    for (name, _) in CORPUS {
        let p = corpus(name);
        let start = std::time::Instant::now();
        let mut m = crate::command_eval::Machine::new(&p.sig, p.initial_heap(0).unwrap(), p.main().unwrap().clone(), Config::default()).unwrap();
        m.run().unwrap_or_else(|e| panic!("{name}: {e}"));
        eprintln!("{name}: {} steps, {} firings, {:?}", m.stats.steps, m.stats.firings, start.elapsed());
    }
}
