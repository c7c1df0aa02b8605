//! Rotationally symmetric Ricci flow on the disc in the conformal gauge.
//!
//! The flow of a metric `e^{2u}(ds² + dθ²)` is `u_t = e^{-2u} u_ss`. This crate
//! builds the glued cusp/cigar initial data, evolves it implicitly on a
//! two-chart grid, and checks the resulting trajectories against barriers and
//! closed-form solutions.

pub mod charts;
pub mod diagnostics;
pub mod closed_forms;
mod error;
pub mod grid;
pub mod initial_data;
pub mod report;
pub mod solver;
pub mod tridiag;
pub mod verify;

pub use charts::{Chart, CurvatureSample, RadialProfile};
pub use closed_forms::{make_barrier_pair, BarrierPair, ClosedFormMetric, ScaleFactor};
pub use error::{Error, Result};
pub use report::{ReportEntry, VerificationReport};
