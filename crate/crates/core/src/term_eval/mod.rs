//! Reduction of pure terms, including reverse derivatives by rewriting.

pub mod rd;
pub mod step;

pub use rd::{rewrite_rd, rewrite_rd_with, sum_terms};
pub use step::{eval_term, eval_term_traced, step_term, step_term_traced, TermRedex};

#[cfg(test)]
mod tests;
