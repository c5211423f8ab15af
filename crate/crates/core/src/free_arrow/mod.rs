//! Free-arrow oracle backend.

mod arrow;
mod canon;
mod denote;
mod eval;
pub mod laws;
mod pure;

pub use arrow::{normalize, ArrTerm, NormalForm, Step};
pub use canon::{canonical, canonical_fun};
pub use denote::{env_ty, run_arrow, Denoter};
pub use eval::{apply_fun, evaluate_arr, evaluate_nf};
pub use pure::PureFun;

#[cfg(test)]
mod tests;
