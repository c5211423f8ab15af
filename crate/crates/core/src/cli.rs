//! Command-line driver.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::command_eval::{trace_line, Config, Machine};
use crate::error::Error;
use crate::free_arrow::run_arrow;
use crate::grad_oracle::check_primitive_random;
use crate::surface::Program;
use crate::syntax::{Command, FunSym, Handler, Term};
use crate::values::{Heap, TieBreak, Value};

#[derive(Parser, Debug)]
#[command(name = "rva", version, about = "Run, check and differentiate reverse-handler programs")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Typecheck a program and print the types of its definitions.
    Check(Common),
    /// Run `main` and print its value and the final heap.
    Run(Common),
    /// Print every reduction state of `main`.
    Trace(Common),
    /// Compare the reverse derivatives of the program's primitives with finite differences.
    GradCheck(Common),
    /// Run `main` on both backends and compare the results.
    OracleCompare(Common),
    /// Repeat `main`, printing the loss of `forward` against `target` each epoch.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    pub file: PathBuf,
    /// JSON object of heap slots laid over the declared initial heap.
    #[arg(long)]
    pub heap: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Step budget for the reduction machine.
    #[arg(long, default_value_t = 1_000_000)]
    pub fuel: u64,
    #[arg(long = "tie-break", default_value = "strict")]
    pub tie_break: TieBreak,
    /// Also print the reduction trace.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub json: bool,
}

struct Ctx {
    program: Program,
    heap: Heap,
    common: Common,
}

impl Ctx {
    fn load(common: &Common) -> Result<Ctx, Error> {
        let program = Program::from_file(&common.file)?;
        let over = match &common.heap {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
                Some(serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?)
            }
            None => None,
        };
        let heap = program.heap_with_overrides(common.seed, over.as_ref())?;
        Ok(Ctx { program, heap, common: common.clone() })
    }

    fn config(&self) -> Config {
        Config { fuel: Some(self.common.fuel), tie: self.common.tie_break, check_types: false, ..Config::default() }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the exit status.
pub fn main_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli.cmd, out) {
        Ok(()) => 0,
        // a reader such as `head` went away; nothing left to report
        Err(Error::Input(m)) if m == BROKEN_PIPE => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}

const BROKEN_PIPE: &str = "output closed";

fn io(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        Error::Input(BROKEN_PIPE.into())
    } else {
        Error::Input(e.to_string())
    }
}

pub fn execute(cmd: &Cmd, out: &mut dyn Write) -> Result<(), Error> {
    match cmd {
        Cmd::Check(c) => check(&Ctx::load(c)?, out),
        Cmd::Run(c) => run(&Ctx::load(c)?, out),
        Cmd::Trace(c) => trace(&Ctx::load(c)?, out),
        Cmd::GradCheck(c) => grad_check(&Ctx::load(c)?, out),
        Cmd::OracleCompare(c) => oracle_compare(&Ctx::load(c)?, out),
        Cmd::Train { common, epochs } => {
            let ctx = Ctx::load(common)?;
            train_cmd(&ctx, *epochs, out)
        }
    }
}

fn check(ctx: &Ctx, out: &mut dyn Write) -> Result<(), Error> {
    let lines = ctx.program.check()?;
    if ctx.common.json {
        let items: Vec<_> = lines.iter().map(|l| json!({"kind": l.kind, "name": l.name, "type": l.ty})).collect();
        writeln!(out, "{}", serde_json::Value::Array(items)).map_err(io)?;
    } else {
        for l in lines {
            writeln!(out, "{l}").map_err(io)?;
        }
    }
    Ok(())
}

fn run(ctx: &Ctx, out: &mut dyn Write) -> Result<(), Error> {
    let mut m = Machine::new(&ctx.program.sig, ctx.heap.clone(), ctx.program.main()?.clone(), ctx.config())?;
    let mut lines = Vec::new();
    let (heap, v) = if ctx.common.trace {
        m.run_traced(|n, h, c| lines.push(trace_line(n, h, c)))?
    } else {
        m.run()?
    };
    if ctx.common.json {
        let doc = json!({
            "value": v.to_json(),
            "heap": heap.to_json(),
            "steps": m.stats.steps,
            "firings": m.stats.firings,
            "trace": if ctx.common.trace { Some(lines) } else { None },
        });
        writeln!(out, "{doc}").map_err(io)?;
    } else {
        for l in lines {
            writeln!(out, "{l}").map_err(io)?;
        }
        writeln!(out, "value: {v}").map_err(io)?;
        writeln!(out, "heap: {}", heap.to_json()).map_err(io)?;
    }
    Ok(())
}

fn trace(ctx: &Ctx, out: &mut dyn Write) -> Result<(), Error> {
    let mut m = Machine::new(&ctx.program.sig, ctx.heap.clone(), ctx.program.main()?.clone(), ctx.config())?;
    let mut res = Ok(());
    m.run_traced(|n, h, c| {
        if res.is_ok() {
            res = writeln!(out, "{}", trace_line(n, h, c));
        }
    })?;
    res.map_err(io)
}

fn collect_term(t: &Term, out: &mut BTreeSet<FunSym>) {
    match t {
        Term::Var(_) | Term::Const(_) => {}
        Term::App(f, m) => {
            out.insert(FunSym { rd: false, ..f.clone() });
            collect_term(m, out);
        }
        Term::Plus(a, b) | Term::Let(_, a, b) => {
            collect_term(a, out);
            collect_term(b, out);
        }
        Term::Tuple(ms) => ms.iter().for_each(|m| collect_term(m, out)),
        Term::Proj(_, m) => collect_term(m, out),
        Term::Rd { seed, body, point, .. } => {
            collect_term(seed, out);
            collect_term(body, out);
            collect_term(point, out);
        }
    }
}

fn collect_command(c: &Command, seen: &mut Vec<*const Handler>, out: &mut BTreeSet<FunSym>) {
    match c {
        Command::Ret(m) | Command::Op(_, m) => collect_term(m, out),
        Command::Let(_, p, q) => {
            collect_command(p, seen, out);
            collect_command(q, seen, out);
        }
        Command::Handle { seed, body, handler, .. } => {
            collect_term(seed, out);
            collect_command(body, seen, out);
            collect_handler(handler, seen, out);
        }
    }
}

fn collect_handler(h: &Arc<Handler>, seen: &mut Vec<*const Handler>, out: &mut BTreeSet<FunSym>) {
    if seen.contains(&Arc::as_ptr(h)) {
        return;
    }
    seen.push(Arc::as_ptr(h));
    collect_command(&h.ret_clause, seen, out);
    for cl in h.clauses.values() {
        collect_command(&cl.fwd, seen, out);
        collect_command(&cl.bwd, seen, out);
    }
}

/// Every primitive symbol used anywhere in the program.
pub fn program_symbols(p: &Program) -> BTreeSet<FunSym> {
    let mut out = BTreeSet::new();
    let mut seen = Vec::new();
    for c in p.main.iter().chain(p.forward.iter()).chain(p.defs.values().map(|d| &d.body)) {
        collect_command(c, &mut seen, &mut out);
    }
    for h in p.handlers.values() {
        collect_handler(h, &mut seen, &mut out);
    }
    if let Some(t) = &p.target {
        collect_term(t, &mut out);
    }
    out
}

fn grad_check(ctx: &Ctx, out: &mut dyn Write) -> Result<(), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.common.seed);
    let mut failed = Vec::new();
    let mut rows = Vec::new();
    for f in program_symbols(&ctx.program) {
        let r = check_primitive_random(&f, 50, &mut rng)?;
        if !r.pass {
            failed.push(f.to_string());
        }
        if ctx.common.json {
            rows.push(json!({"symbol": f.to_string(), "report": r.to_json()}));
        } else {
            let verdict = if r.pass { "ok" } else { "FAIL" };
            writeln!(out, "{verdict:4} {f}  max rel {:.3e}  max abs {:.3e}", r.max_rel_err, r.max_abs_err).map_err(io)?;
        }
    }
    if ctx.common.json {
        writeln!(out, "{}", serde_json::Value::Array(rows)).map_err(io)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::OracleMismatch(format!("finite differences disagree for {}", failed.join(", "))))
    }
}

/// Largest relative difference over the value and every heap slot.
pub fn backend_diff(a: &(Heap, Value), b: &(Heap, Value)) -> f64 {
    let rel = |x: &[f64], y: &[f64]| {
        if x.len() != y.len() {
            return f64::INFINITY;
        }
        x.iter().zip(y).map(|(p, q)| (p - q).abs() / p.abs().max(q.abs()).max(1e-300)).filter(|d| d.is_finite()).fold(0.0, f64::max)
    };
    let mut worst = rel(&a.1.flatten(), &b.1.flatten());
    for (loc, x) in a.0.iter() {
        worst = worst.max(b.0.slot(loc).map_or(f64::INFINITY, |y| rel(x, y)));
    }
    worst
}

/// Tolerance of `oracle-compare`.
pub const BACKEND_TOL: f64 = 1e-9;

fn oracle_compare(ctx: &Ctx, out: &mut dyn Write) -> Result<(), Error> {
    let main = ctx.program.main()?;
    let mut m = Machine::new(&ctx.program.sig, ctx.heap.clone(), main.clone(), ctx.config())?;
    let machine = m.run()?;
    let arrow = run_arrow(&ctx.program.sig, &ctx.heap, main, ctx.common.tie_break)?;
    let diff = backend_diff(&machine, &arrow);
    if ctx.common.json {
        writeln!(out, "{}", json!({"max_rel_diff": diff, "steps": m.stats.steps, "pass": diff <= BACKEND_TOL})).map_err(io)?;
    } else {
        writeln!(out, "machine: {} steps, value {}", m.stats.steps, machine.1).map_err(io)?;
        writeln!(out, "arrow:   value {}", arrow.1).map_err(io)?;
        writeln!(out, "max relative difference {diff:.3e}").map_err(io)?;
    }
    if diff <= BACKEND_TOL {
        Ok(())
    } else {
        Err(Error::OracleMismatch(format!("backends differ by {diff:e}")))
    }
}

/// `½‖forward − target‖²` on the given heap, running operations through
/// the forward clauses of `main`'s handler.
pub fn loss(p: &Program, heap: &Heap, config: &Config) -> Result<f64, Error> {
    let forward = p.forward.clone().ok_or_else(|| Error::Input("the program has no `forward`".into()))?;
    let target = p.target.as_ref().ok_or_else(|| Error::Input("the program has no `target`".into()))?;
    let target = crate::term_eval::eval_term(target, config.tie)?;
    let config = Config { forward_with: p.main_handler().cloned(), check_depth: false, ..config.clone() };
    let (_, y) = Machine::new(&p.sig, heap.clone(), forward, config)?.run()?;
    let (y, t) = (y.flatten(), target.flatten());
    if y.len() != t.len() {
        return Err(Error::Input(format!("forward has {} outputs but the target has {}", y.len(), t.len())));
    }
    Ok(0.5 * y.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
}

/// Runs `main` `epochs` times, threading the heap. Returns the losses
/// before each epoch followed by the final loss.
pub fn train(p: &Program, heap: Heap, epochs: usize, config: &Config) -> Result<(Vec<f64>, Heap), Error> {
    let main = p.main()?;
    let mut heap = heap;
    let mut losses = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        losses.push(loss(p, &heap, config)?);
        heap = Machine::new(&p.sig, heap, main.clone(), config.clone())?.run()?.0;
    }
    losses.push(loss(p, &heap, config)?);
    Ok((losses, heap))
}

fn train_cmd(ctx: &Ctx, epochs: usize, out: &mut dyn Write) -> Result<(), Error> {
    let (losses, heap) = train(&ctx.program, ctx.heap.clone(), epochs, &ctx.config())?;
    let last = *losses.last().expect("final loss");
    if ctx.common.json {
        writeln!(out, "{}", json!({"losses": losses, "final_loss": last, "heap": heap.to_json()})).map_err(io)?;
    } else {
        for (i, l) in losses[..epochs].iter().enumerate() {
            writeln!(out, "epoch {:>4}  loss {l:.9}", i + 1).map_err(io)?;
        }
        writeln!(out, "final      loss {last:.9}").map_err(io)?;
    }
    Ok(())
}
