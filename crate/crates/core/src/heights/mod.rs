//! Exact heights `c·log(b)` and the merged event line of two height sets.

mod basis;
mod events;
mod log_height;

pub use basis::{log2_enclosure, log2_enclosure_rational, multiplicative_relation, CoprimeBasis, LogSign};
pub use events::{
    approx_merged_events, merged_events, partial_sum, partial_sum_factors, Event, EventLine, EventStream, EventTag,
};
pub use log_height::{cmp_heights, combine, LogHeight, SignedHeight};
