//! Concrete syntax of program files: lexing, parsing, printing and lowering.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
mod program;

pub use ast::{Item, Module, SCommand, STerm};
pub use parser::{parse_command, parse_module, parse_term, parse_ty};
pub use printer::{command_to_source, module_to_source, term_to_source};
pub use program::{CheckLine, Def, Program};

#[cfg(test)]
mod tests;
