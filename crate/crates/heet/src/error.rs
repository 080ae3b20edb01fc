//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid EET matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid workload mix: {0}")]
    InvalidMix(String),

    #[error("invalid speedup vector: {0}")]
    InvalidSpeedups(String),

    #[error("{axis} index {index} out of range for {len} {axis}s")]
    IndexOutOfRange {
        axis: &'static str,
        index: usize,
        len: usize,
    },

    #[error("weights length {weights} does not match vector length {values}")]
    WeightLengthMismatch { weights: usize, values: usize },

    #[error("all weights are zero")]
    AllZeroWeights,

    #[error("machine count {given} does not match the report's {expected}")]
    MachineCountMismatch { given: usize, expected: usize },

    #[error("invalid workload trace: {0}")]
    InvalidTrace(String),

    #[error("arrival times decrease at trace record {index}")]
    DecreasingArrivals { index: usize },

    #[error("unknown task type {label:?}")]
    UnknownTaskType { label: String },

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error(
        "instance too large for exhaustive search: n={machines}, c={tasks} (limits n <= {max_machines}, c <= {max_tasks})"
    )]
    InstanceTooLarge {
        machines: usize,
        tasks: u64,
        max_machines: usize,
        max_tasks: u64,
    },

    #[error("one-busy regime requires the task count to be a multiple of the machine count (c={tasks}, n={machines})")]
    IndivisibleTaskCount { tasks: u64, machines: usize },

    #[error("incomplete profile grid: no samples for task {task:?} on machine {machine:?}")]
    IncompleteProfileGrid { task: String, machine: String },

    #[error("invalid profile sample: {0}")]
    InvalidProfile(String),

    #[error("invalid machine catalog: {0}")]
    InvalidCatalog(String),

    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid sweep parameters: {0}")]
    InvalidSweep(String),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for malformed-input failures (file syntax, I/O); false for
    /// violations of the domain contracts. The CLI maps the former to exit
    /// code 2 and the latter to exit code 3.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io(_))
    }
}
