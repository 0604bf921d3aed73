//! Verification of the weighted inequalities and of the stationary family.

pub mod inequalities;
pub mod steady;
pub mod testfn;

pub use inequalities::{
    check_inequality, check_pointwise_bounds, run_corpus, sharpness_probe, Bound, CorpusSpec, InequalityReport,
    LabParams, SharpnessProbe,
};
pub use steady::{exceptional_sigmas, steady_residual, SteadyReport};
pub use testfn::{random_test_function, TestFunction};
