//! Command reduction: reverse-handler rewriting and the heap machine.

pub mod machine;
pub mod rh;

pub use machine::{run_command, trace_line, Config, Machine, Stats, StepKind};
pub use rh::{classify, decompose, plug, Form, HoleKind, Rewriter, Slot};

#[cfg(test)]
mod tests;
