//! Heterogeneity scoring for compute clusters.
//!
//! A cluster that mixes machine types executes a mix of task types at
//! different speeds. This crate models that system as an *expected execution
//! time* (EET) matrix — one row per task type, one column per machine
//! instance — and reduces the matrix to a single score, HEET (homogeneous
//! equivalent execution time): the per-task execution time of a hypothetical
//! homogeneous system with the same throughput. From the score it predicts
//! makespan and throughput for a workload, and the predictions can be checked
//! against the bundled discrete-event simulator.
//!
//! The pieces:
//!
//! * [`eet`] — the EET matrix, speedup vectors, the HEET pipeline, baseline
//!   entry means, and makespan/throughput prediction. Generic over the
//!   scalar type via [`scalar::Scalar`].
//! * [`sim`] — a deterministic single-queue FCFS simulator with dispatch to
//!   free machines, optional multiplicative noise, and the measured
//!   true-speedup ratios the score is validated against.
//! * [`workload`] — bag-of-tasks and Poisson trace synthesis, plus EET
//!   construction from raw profiling samples.
//! * [`explorer`] — enumeration of machine configurations over a priced
//!   catalog, throughput/cost scoring, and min-cost search under a
//!   throughput target.
//! * [`io`] — the CSV/JSON/JSON-lines file formats shared by the CLI.

pub mod eet;
pub mod error;
pub mod explorer;
pub mod io;
pub mod scalar;
pub mod sim;
pub mod workload;

pub use error::Error;
pub use scalar::Scalar;

/// Convenience alias: `Result` with this crate's [`Error`].
pub type Result<T> = std::result::Result<T, Error>;

// Concrete aliases for the scalar-generic core types. Everything outside the
// math core (simulator, workload synthesis, explorer, file I/O) works with
// the f64 variants.
pub type EetMatrix32 = eet::EetMatrix<f32>;
pub type EetMatrix64 = eet::EetMatrix<f64>;
pub type WorkloadMix32 = eet::WorkloadMix<f32>;
pub type WorkloadMix64 = eet::WorkloadMix<f64>;
pub type SpeedupVector32 = eet::SpeedupVector<f32>;
pub type SpeedupVector64 = eet::SpeedupVector<f64>;
pub type HeetReport32 = eet::HeetReport<f32>;
pub type HeetReport64 = eet::HeetReport<f64>;
