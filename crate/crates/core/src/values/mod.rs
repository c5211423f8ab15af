//! Closed values, primitive interpretations and the heap.

pub mod heap;
pub mod prims;
pub mod value;

pub use heap::Heap;
pub use prims::{ev, sigmoid, TieBreak};
pub use value::{add_values, max_rel_diff, zero_of, Value};
