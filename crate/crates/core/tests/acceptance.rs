//! Acceptance suite: one pass/fail line per criterion, exit status 1 if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rva::cli::{backend_diff, train};
use rva::command_eval::{run_command, Config, Machine};
use rva::corpus::{self, CORPUS};
use rva::free_arrow::laws::{self, AXIOMS};
use rva::free_arrow::run_arrow;
use rva::gen::{CommandGen, COMMAND_LAB};
use rva::grad_oracle::{check_primitive_random, mlp_loss_grad_fd, mlp_step_reference, sample_symbols, MlpDims};
use rva::surface::Program;
use rva::syntax::{Ty, TyEnv};
use rva::typecheck::{Checker, HandlerType};
use rva::values::{Heap, TieBreak};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rel_close(got: &[f64], want: &[f64], rel: f64, abs: f64) -> Result<(), String> {
    ensure(got.len() == want.len(), || format!("lengths {} and {}", got.len(), want.len()))?;
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        ensure((g - w).abs() <= rel * w.abs() + abs, || format!("index {i}: {g} vs {w}"))?;
    }
    Ok(())
}

fn fast() -> Config {
    Config { check_types: false, ..Config::default() }
}

fn mlp_step() -> Outcome {
    let src = corpus::source("mlp").ok_or("no mlp")?;
    let d = MlpDims { inp: 2, hid: 3, out: 2 };
    let alpha = 0.1;
    let mut slowest = Duration::ZERO;
    let runs = 25;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let (m0, m1, v, t) = (draw(6), draw(6), draw(2), draw(2));
        let src = src
            .replace("const v = [0.5, -1.0];", &format!("const v = [{:?}, {:?}];", v[0], v[1]))
            .replace("const t = [1.0, 0.0];", &format!("const t = [{:?}, {:?}];", t[0], t[1]));
        let p = Program::parse(&src).map_err(err)?;
        let heap = Heap::from_slots([("l0".to_string(), m0.clone()), ("l1".to_string(), m1.clone())]);
        let start = Instant::now();
        let (after, _) = run_command(&p.sig, heap, p.main().map_err(err)?.clone(), fast()).map_err(err)?;
        slowest = slowest.max(start.elapsed());
        let (n0, n1) = (after.slot("l0").ok_or("no l0")?, after.slot("l1").ok_or("no l1")?);
        let want = mlp_step_reference(d, &m0, &m1, &v, &t, alpha);
        rel_close(n0, &want.m0, 1e-9, 1e-12).map_err(|e| format!("seed {seed} closed form l0: {e}"))?;
        rel_close(n1, &want.m1, 1e-9, 1e-12).map_err(|e| format!("seed {seed} closed form l1: {e}"))?;
        // the implied gradient against finite differences
        let (g0, g1) = mlp_loss_grad_fd(d, &m0, &m1, &v, &t);
        let implied = |old: &[f64], new: &[f64]| -> Vec<f64> { old.iter().zip(new).map(|(a, b)| (a - b) / alpha).collect() };
        rel_close(&implied(&m0, n0), &g0, 1e-4, 1e-7).map_err(|e| format!("seed {seed} finite differences l0: {e}"))?;
        rel_close(&implied(&m1, n1), &g1, 1e-4, 1e-7).map_err(|e| format!("seed {seed} finite differences l1: {e}"))?;
    }
    ensure(slowest < Duration::from_secs(1), || format!("slowest step took {slowest:?}"))?;
    Ok(format!("{runs} random steps, slowest {slowest:?}"))
}

fn primitive_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let syms = sample_symbols();
    let mut worst = 0.0f64;
    for f in &syms {
        let r = check_primitive_random(f, 50, &mut rng).map_err(|e| format!("{f}: {e}"))?;
        ensure(r.pass, || format!("{f}: relative error {:e}", r.max_rel_err))?;
        worst = worst.max(r.max_rel_err);
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("{} primitives x 50 points, worst relative error {worst:.2e}, {took:?}", syms.len()))
}

/// Steps a machine to the end, returning its statistics.
fn run_counted(p: &Program, heap: Heap, config: Config) -> Result<rva::command_eval::Stats, String> {
    let mut m = Machine::new(&p.sig, heap, p.main().map_err(err)?.clone(), config).map_err(err)?;
    m.run().map_err(err)?;
    Ok(m.stats.clone())
}

fn command_lab(seed: u64) -> Result<(Program, CommandGen<ChaCha8Rng>), String> {
    let lab = Program::parse(COMMAND_LAB).map_err(err)?;
    let hs = ["H1", "H2", "H3", "H4"].iter().map(|h| lab.handler(h).cloned()).collect::<Result<_, _>>().map_err(err)?;
    Ok((lab, CommandGen::new(ChaCha8Rng::seed_from_u64(seed), hs)))
}

fn type_preservation() -> Outcome {
    let checked = Config { check_types: true, ..Config::default() };
    let mut corpus_steps = 0;
    for (name, _) in CORPUS {
        let p = corpus::program(name).map_err(err)?;
        let heap = p.initial_heap(0).map_err(err)?;
        corpus_steps += run_counted(&p, heap, checked.clone()).map_err(|e| format!("{name}: {e}"))?.steps;
    }
    let (lab, mut g) = command_lab(11)?;
    let (count, mut gen_steps) = (250, 0);
    for _ in 0..count {
        let c = g.closed(3);
        let mut m = Machine::new(&lab.sig, Heap::new().completed(&lab.sig), c.clone(), checked.clone()).map_err(err)?;
        m.run().map_err(|e| format!("{c}: {e}"))?;
        gen_steps += m.stats.steps;
    }
    ensure(corpus_steps >= 1000, || format!("only {corpus_steps} corpus steps"))?;
    Ok(format!("{corpus_steps} corpus steps, {count} generated commands ({gen_steps} steps) retyped after every step"))
}

fn depth_decreases() -> Outcome {
    let mut firings = 0;
    for (name, _) in CORPUS {
        let p = corpus::program(name).map_err(err)?;
        let config = Config { check_depth: true, fuel: Some(1_000_000), ..fast() };
        let s = run_counted(&p, p.initial_heap(0).map_err(err)?, config).map_err(|e| format!("{name}: {e}"))?;
        firings += s.firings;
    }
    let (lab, mut g) = command_lab(5)?;
    let mut gen_firings = 0;
    for _ in 0..250 {
        let c = g.closed(3);
        let config = Config { check_depth: true, ..fast() };
        let mut m = Machine::new(&lab.sig, Heap::new().completed(&lab.sig), c.clone(), config).map_err(err)?;
        m.run().map_err(|e| format!("{c}: {e}"))?;
        gen_firings += m.stats.firings;
    }
    Ok(format!("{firings} corpus and {gen_firings} generated firings, each shrinking its redex, all within fuel"))
}

fn backends_agree() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["mlp", "resnet", "autoencoder", "ste"] {
        let p = corpus::program(name).map_err(err)?;
        let heap = p.initial_heap(0).map_err(err)?;
        let main = p.main().map_err(err)?;
        let machine = run_command(&p.sig, heap.clone(), main.clone(), fast()).map_err(err)?;
        let arrow = run_arrow(&p.sig, &heap, main, TieBreak::Strict).map_err(err)?;
        let d = backend_diff(&machine, &arrow);
        ensure(d <= 1e-9, || format!("{name}: relative difference {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!("worst relative difference {worst:.2e}"))
}

fn straight_through() -> Outcome {
    let p = corpus::program("ste").map_err(err)?;
    let v = [0.3, -1.7, 2.5, 0.49];
    let t = [1.0, 0.0, -1.0, 0.25];
    let alpha = 0.5;
    let rounded: Vec<f64> = v.iter().map(|x: &f64| x.round()).collect();
    let config = Config { forward_with: p.main_handler().cloned(), ..fast() };
    let forward = p.forward.clone().ok_or("no forward")?;
    let (_, y) = run_command(&p.sig, Heap::new(), forward, config).map_err(err)?;
    ensure(y.flatten() == rounded, || format!("forward {y}, expected {rounded:?}"))?;
    // the gradient entering the operation is the return clause's output
    let incoming: Vec<f64> = rounded.iter().zip(&t).map(|(y, t)| alpha * (y - t)).collect();
    let (_, back) = run_command(&p.sig, Heap::new(), p.main().map_err(err)?.clone(), fast()).map_err(err)?;
    let back = back.flatten();
    let same_bits = back.len() == incoming.len() && back.iter().zip(&incoming).all(|(a, b)| a.to_bits() == b.to_bits());
    ensure(same_bits, || format!("backward {back:?}, incoming {incoming:?}"))?;
    Ok(format!("forward {rounded:?}, backward {back:?}"))
}

fn shapes() -> Outcome {
    let unet = corpus::program("unet").map_err(err)?;
    let main = unet.main_type().map_err(err)?;
    ensure(main == Ty::real(134), || format!("unet main : {main}"))?;
    let ck = Checker::new(&unet.sig);
    let def = unet.def("R_Unet").map_err(err)?;
    let body = ck.check_command(&TyEnv::new(), &def.params, &def.body).map_err(err)?;
    ensure(body == Ty::real(512), || format!("R_Unet : {body}"))?;

    let ae = corpus::program("autoencoder").map_err(err)?;
    let m = *ae.dims.get("m").ok_or("no dim m")?;
    let latent = Ty::real(m as usize);
    ensure(ae.carriers.get("H_AE") == Some(&latent), || "H_AE carrier".into())?;
    let ck = Checker::new(&ae.sig);
    let ht = ck.check_handler(ae.handler("H_AE").map_err(err)?, &latent).map_err(err)?;
    ensure(ht == HandlerType { carrier: Ty::real(2) }, || format!("H_AE : {ht}"))?;
    Ok(format!("main : {main}, R_Unet : {body}, H_AE : {ht}"))
}

fn training() -> Outcome {
    let p = corpus::program("mlp").map_err(err)?;
    let (losses, _) = train(&p, p.initial_heap(0).map_err(err)?, 50, &fast()).map_err(err)?;
    let (first, last) = (losses[0], *losses.last().ok_or("no losses")?);
    ensure(last < first, || format!("loss went from {first} to {last}"))?;
    Ok(format!("loss {first:.6} -> {last:.3e} over 50 epochs"))
}

fn laws_hold() -> Outcome {
    let n = 128u64;
    for seed in 0..n {
        for k in 0..AXIOMS.len() {
            laws::check_axiom(k, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        }
        laws::check_unit_law(seed, 1e-12).map_err(|e| format!("unit law, seed {seed}: {e}"))?;
        laws::check_composition_law(seed, 1e-12).map_err(|e| format!("composition law, seed {seed}: {e}"))?;
    }
    Ok(format!("{} axioms and 2 algebra laws, {n} instances each", AXIOMS.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("mlp gradient step", mlp_step),
        ("primitive reverse derivatives", primitive_suite),
        ("type preservation", type_preservation),
        ("handler depth decreases", depth_decreases),
        ("machine and arrow backends agree", backends_agree),
        ("straight-through estimator", straight_through),
        ("network shapes", shapes),
        ("training lowers the loss", training),
        ("congruence and algebra laws", laws_hold),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {}  {name}: {detail} [{took:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}  {name}: {why} [{took:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
