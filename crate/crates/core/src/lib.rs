//! Exact tools for embeddings between regular rooted trees, their symbolic
//! Cantor boundaries and the treebolic spaces built from them.
//!
//! Heights of the form `c·log(b)` are compared without floating point, the
//! pebble sequence is computed with big integers, and the tree constructions
//! are measured by brute force on finite truncations.

pub mod cantor;
pub mod criteria;
pub mod error;
pub mod heights;
pub mod pebble;
pub mod seq;
pub mod tree;
pub mod treebolic;

pub use error::{Error, Result};
pub use heights::{cmp_heights, merged_events, Event, EventLine, EventTag, LogHeight, SignedHeight};
pub use seq::SeqSpec;
