//! Interpreter, type checker and gradient engine for a differentiable arrow
//! calculus with algebraic operations and reverse handlers.

pub mod error;
pub mod signature;
pub mod syntax;
pub mod typecheck;
pub mod values;
pub mod free_arrow;
pub mod gen;
pub mod grad_oracle;
pub mod term_eval;
pub mod command_eval;
pub mod surface;
pub mod corpus;
pub mod cli;
