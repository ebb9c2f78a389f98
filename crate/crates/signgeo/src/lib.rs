//! Monte Carlo experiment runner, report serialization, and matrix file
//! ingestion for sign-vs-magnitude weight-perturbation geometry.
//!
//! The closed-form side lives in `signgeo-core`; this crate adds everything
//! that needs `std`: the seeded parallel estimators ([`experiments`]), the
//! JSON/CSV report documents ([`report`]), and the binary weight-matrix file
//! format ([`matfile`]). The `signgeo` binary is a thin shell over these.

pub mod experiments;
pub mod matfile;
pub mod report;
pub mod suite;

pub use experiments::{ExperimentConfig, ExperimentError};
pub use report::{ExperimentReport, MetricReport};
