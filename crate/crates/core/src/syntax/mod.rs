//! Abstract syntax of terms, commands and handlers, with binding utilities.

mod ast;
pub mod metrics;
pub mod names;
pub mod pretty;
pub mod sugar;

pub use ast::*;
pub use metrics::{command_depth, command_size, handler_depth, handler_size, term_size};
pub use names::{fresh_name, free_vars_command, free_vars_term, subst_command, subst_term, NameSupply, Subst};
