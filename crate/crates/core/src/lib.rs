//! Numerical laboratory for two-parametric Weyl sums `Σ e(x n + y ω(n))`.
//!
//! * [`phase`]: integer phase polynomials and mod-1 phase recurrences.
//! * [`weyl`]: Weyl sums, partial maxima, completion sums.
//! * [`mean_value`]: exact solution counts and Monte-Carlo moments.
//! * [`bounds`]: exact exponent tables and theorem bounds.
//! * [`large_values`]: grid decomposition and large-value scans.
//! * [`curves`]: suprema along lines, circles and parametric curves.

pub mod accum;
pub mod bounds;
pub mod curves;
pub mod error;
pub mod large_values;
pub mod phase;
pub mod mean_value;
pub mod sampling;
pub mod weyl;

pub use error::{Error, Result};
