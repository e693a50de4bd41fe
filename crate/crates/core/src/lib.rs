//! Generalized Landau–Pollak uncertainty bounds for observables given as
//! POVMs and states given as density operators, together with the random
//! generators and Monte Carlo harness used to check them.
//!
//! The main entry points are [`measure::PovmPair`], which caches the
//! overlaps of two POVMs and evaluates uncertainty sums against their
//! bounds, and the [`experiment`] runners that sweep random POVMs and
//! states and emit scatter data.

pub mod error;
pub mod experiment;
pub mod matcore;
pub mod measure;
pub mod metrics;
pub mod opfile;
pub mod randgen;
pub mod verify;

pub use error::{Error, Result};
pub use matcore::{CMatrix, HermitianMatrix};
pub use measure::{
    domain_contains, domain_spec, improved_bound, intrinsic_overlap, joint_overlap, lpi_check,
    max_prob, probabilities, uncertainty, validate_povm, DensityOperator, DomainSpec,
    OverlapReport, Povm, PovmPair, PovmValidation, TrialRecord,
};
pub use metrics::{builtin_kernel, BuiltinKernel, MetricKernel};
pub use num_complex::Complex64;
pub use randgen::{PureState, RngStream};
