//! Small-step reduction of closed commands over a heap.

use std::sync::Arc;

use crate::error::{Error, EvalError};
use crate::signature::{OpKind, Signature};
use crate::syntax::names::subst_command1;
use crate::syntax::{command_depth, Command, Handler, NameSupply, Term, Ty, TyEnv};
use crate::term_eval::{step_term_traced, TermRedex};
use crate::typecheck::Checker;
use crate::values::{Heap, TieBreak, Value};

use super::rh::{seed_components, Rewriter, Slot};

#[derive(Clone, Debug)]
pub struct Config {
    /// Step budget; `None` runs until a value is reached.
    pub fuel: Option<u64>,
    pub tie: TieBreak,
    /// Re-typecheck the whole command after every step.
    pub check_types: bool,
    /// Verify that depth never grows and that firings strictly shrink the redex.
    pub check_depth: bool,
    /// Run unhandled operations through the forward clauses of this handler,
    /// keeping only the primal output. Used to evaluate a network without
    /// differentiating it.
    pub forward_with: Option<Arc<Handler>>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            fuel: Some(1_000_000),
            tie: TieBreak::Strict,
            check_types: cfg!(debug_assertions),
            check_depth: true,
            forward_with: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepKind {
    Term(TermRedex),
    LetRet(String),
    /// A reverse handler fired; depths of the redex before and after.
    Fire { before: usize, after: usize },
    Get(String),
    Put(String),
    /// An operation replaced by its forward clause.
    Forward(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub steps: u64,
    pub firings: u64,
    pub type_checks: u64,
}

pub struct Machine<'s> {
    checker: Checker<'s>,
    config: Config,
    heap: Heap,
    command: Command,
    ty: Ty,
    depth: usize,
    pub stats: Stats,
}

struct Stepped {
    command: Command,
    kind: StepKind,
    heap: Option<Heap>,
}

fn stepped(command: Command, kind: StepKind) -> Stepped {
    Stepped { command, kind, heap: None }
}

impl<'s> Machine<'s> {
    /// Typechecks `command` as a closed command and loads it.
    pub fn new(sig: &'s Signature, heap: Heap, command: Command, config: Config) -> Result<Self, Error> {
        let checker = Checker::new(sig);
        let ty = checker.check_command(&TyEnv::new(), &TyEnv::new(), &command)?;
        let depth = command_depth(&command);
        Ok(Machine { checker, config, heap, command, ty, depth, stats: Stats::default() })
    }

    pub fn heap(&self) -> &Heap {
        &self.heap
    }

    pub fn command(&self) -> &Command {
        &self.command
    }

    /// The type of the loaded command.
    pub fn ty(&self) -> &Ty {
        &self.ty
    }

    pub fn result(&self) -> Option<Value> {
        match &self.command {
            Command::Ret(m) => Value::from_term(m),
            _ => None,
        }
    }

    /// One step; `None` once the command is `ret V`.
    pub fn step(&mut self) -> Result<Option<StepKind>, EvalError> {
        if self.result().is_some() {
            return Ok(None);
        }
        if let Some(fuel) = self.config.fuel {
            if self.stats.steps >= fuel {
                return Err(EvalError::FuelExhausted { steps: self.stats.steps });
            }
        }
        let s = self.step_at(&self.command)?;
        self.stats.steps += 1;
        let n = self.stats.steps;
        if let StepKind::Fire { before, after } = s.kind {
            self.stats.firings += 1;
            if self.config.check_depth && after >= before {
                return Err(EvalError::DepthIncrease { step: n, before, after });
            }
        }
        let depth = command_depth(&s.command);
        if self.config.check_depth && depth > self.depth {
            return Err(EvalError::DepthIncrease { step: n, before: self.depth, after: depth });
        }
        if self.config.check_types {
            self.stats.type_checks += 1;
            let ty = self
                .checker
                .check_command(&TyEnv::new(), &TyEnv::new(), &s.command)
                .map_err(|e| EvalError::IllTypedStep { step: n, detail: e.to_string() })?;
            if !ty.equiv(&self.ty) {
                return Err(EvalError::TypePreservation { step: n, before: self.ty.to_string(), after: ty.to_string() });
            }
        }
        self.command = s.command;
        self.depth = depth;
        if let Some(h) = s.heap {
            self.heap = h;
        }
        Ok(Some(s.kind))
    }

    pub fn run(&mut self) -> Result<(Heap, Value), EvalError> {
        self.run_traced(|_, _, _| {})
    }

    /// Runs to completion, calling `on_state` with the initial state and after every step.
    pub fn run_traced(&mut self, mut on_state: impl FnMut(u64, &Heap, &Command)) -> Result<(Heap, Value), EvalError> {
        on_state(self.stats.steps, &self.heap, &self.command);
        while self.step()?.is_some() {
            on_state(self.stats.steps, &self.heap, &self.command);
        }
        let v = self.result().ok_or_else(|| EvalError::StuckCommand { command: self.command.to_string() })?;
        Ok((self.heap.clone(), v))
    }

    fn term_step(&self, m: &Term) -> Result<Option<(Term, TermRedex)>, EvalError> {
        step_term_traced(m, self.config.tie)
    }

    fn step_at(&self, c: &Command) -> Result<Stepped, EvalError> {
        let stuck = || EvalError::StuckCommand { command: c.to_string() };
        match c {
            Command::Ret(m) => {
                let (m2, r) = self.term_step(m)?.ok_or_else(stuck)?;
                Ok(stepped(Command::Ret(m2), StepKind::Term(r)))
            }
            Command::Let(x, p, q) => {
                if let Command::Ret(v) = p.as_ref() {
                    if v.is_closed_value() {
                        return Ok(stepped(subst_command1(q, x, v), StepKind::LetRet(x.clone())));
                    }
                }
                let s = self.step_at(p)?;
                Ok(Stepped { command: Command::Let(x.clone(), Box::new(s.command), q.clone()), ..s })
            }
            Command::Op(op, m) => {
                if let Some((m2, r)) = self.term_step(m)? {
                    return Ok(stepped(Command::Op(op.clone(), m2), StepKind::Term(r)));
                }
                let sig = self.checker.op_sig(op).map_err(|e| EvalError::StuckCommand { command: e.to_string() })?;
                match &sig.kind {
                    OpKind::Get(loc) => {
                        let n = sig.arity.flat_len();
                        Ok(stepped(Command::Ret(self.heap.get(loc, n).to_term()), StepKind::Get(loc.clone())))
                    }
                    OpKind::Put(loc) => {
                        let n = sig.coarity.flat_len();
                        let v = Value::from_term(m).ok_or_else(stuck)?;
                        let heap = self.heap.put(loc, n, &v)?;
                        let cmd = Command::Ret(Term::unit());
                        Ok(Stepped { command: cmd, kind: StepKind::Put(loc.clone()), heap: Some(heap) })
                    }
                    OpKind::User => {
                        let h = self.config.forward_with.as_ref();
                        let cl = h
                            .and_then(|h| h.clauses.get(op))
                            .ok_or_else(|| EvalError::UnhandledOperation { op: op.to_string() })?;
                        let mut supply = NameSupply::new();
                        supply.reserve_command(&self.command);
                        let p = supply.fresh("p");
                        let cmd = Command::let_(
                            &p,
                            subst_command1(&cl.fwd, &cl.fwd_binder, m),
                            Command::ret(Term::proj(1, Term::var(&p))),
                        );
                        Ok(stepped(cmd, StepKind::Forward(op.to_string())))
                    }
                }
            }
            Command::Handle { seed, binders, body, handler } => {
                if let Some((s2, r)) = self.term_step(seed)? {
                    let cmd = Command::Handle {
                        seed: s2,
                        binders: binders.clone(),
                        body: body.clone(),
                        handler: handler.clone(),
                    };
                    return Ok(stepped(cmd, StepKind::Term(r)));
                }
                let sty = Value::from_term(seed).ok_or_else(stuck)?.ty();
                let tys = sty.split(binders.len()).ok_or_else(stuck)?;
                let slots: Vec<Slot> = binders
                    .iter()
                    .zip(tys)
                    .zip(seed_components(seed, binders.len()))
                    .map(|((name, ty), seed)| Slot { name: name.clone(), ty, seed })
                    .collect();
                let mut supply = NameSupply::new();
                supply.reserve_command(&self.command);
                let out = Rewriter::new(&self.checker, supply).rewrite(handler, &slots, body)?;
                let kind = StepKind::Fire { before: command_depth(c), after: command_depth(&out) };
                Ok(stepped(out, kind))
            }
        }
    }
}

/// Runs a closed command to a value.
pub fn run_command(sig: &Signature, heap: Heap, command: Command, config: Config) -> Result<(Heap, Value), Error> {
    let mut m = Machine::new(sig, heap, command, config)?;
    Ok(m.run()?)
}

/// One numbered trace line: step, heap digest and command.
pub fn trace_line(step: u64, heap: &Heap, command: &Command) -> String {
    format!("{step:>5} [{}] {command}", heap.digest())
}
