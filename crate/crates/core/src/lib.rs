//! Solver and estimate laboratory for the degenerate fourth-order equation
//!
//! ```text
//! u_t = x^-beta ( -x^alpha u^n u_xx + 2 x^alpha u^(n-1) u_x^2 )_xx   on (0, L),
//! ```
//!
//! approached through its regularized, truncated approximations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod lab;
pub mod model;
pub mod params;
pub mod regularization;
pub mod stepper;

pub use error::{Error, Result};
pub use functionals::DiagnosticsRecord;
pub use grid::Grid;
pub use model::{FluxField, Model, Truncation};
pub use params::{DerivedConstants, Params, RawParams, ValidationError, Violation};
pub use regularization::{CutoffProfile, WeightTables};
pub use stepper::{StepControl, StopEvent, StopKind, Trajectory};
