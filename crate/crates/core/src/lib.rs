//! Demand estimation for differentiated products.

// Checks such as `!(x > 0.0)` are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Matrix code indexes several arrays with the same loop variables.
#![allow(clippy::needless_range_loop)]

pub mod calibration;
pub mod demand;
pub mod error;
pub mod estimator;
pub mod hedonic;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod panel;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
