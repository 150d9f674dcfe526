// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the tensor formulas
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod dual;
pub mod engine;
pub mod error;
pub mod families;
pub mod heatflow;
pub mod pinching;
pub mod warp;

pub use error::{Error, Result};
