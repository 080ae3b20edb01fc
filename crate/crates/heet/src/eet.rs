//! EET matrices and the HEET score pipeline.
//!
//! An EET (expected execution time) matrix holds the expected time of each
//! task type on each machine instance: entry `(i, j)` is the seconds task
//! type `i` takes on machine `j`. Machine instances of the same type carry
//! identical columns.
//!
//! The HEET score collapses the matrix to one number in four steps:
//!
//! 1. per machine column, the speedup of each task type relative to the
//!    slowest type on that machine ([`EetMatrix::col_speedups`]);
//! 2. per column, the workload-weighted harmonic mean of those speedups
//!    (`beta_bar`), which turns the column into a single equivalent task
//!    time `e*_j = col_max / beta_bar_j` — algebraically the mix-weighted
//!    mean of the column;
//! 3. across the equivalent times, the speedup of each machine relative to
//!    the slowest one (`alpha_star`), averaged arithmetically;
//! 4. `HEET = max_j e*_j / mean(alpha_star)`, which works out to the
//!    harmonic mean of the equivalent times.
//!
//! HEET is in seconds; `n / HEET` predicts throughput and `(c / n) * HEET`
//! predicts the makespan of a `c`-task workload under high load.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::{approx_eq, Scalar};
use crate::Result;

/// Which axis of the matrix a speedup vector was taken along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Column,
}

/// Expected execution times for `m` task types on `n` machine instances.
///
/// Entries are strictly positive, finite seconds; labels are unique per
/// axis. Instances of one machine type are separate columns (with suffixed
/// labels such as `g4dn.xlarge#2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EetMatrix<S: Scalar> {
    task_labels: Vec<String>,
    machine_labels: Vec<String>,
    /// Row-major `m * n` grid.
    entries: Vec<S>,
}

fn check_labels(labels: &[String], axis: &str) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidMatrix(format!("no {axis} labels")));
    }
    for (i, label) in labels.iter().enumerate() {
        if label.is_empty() {
            return Err(Error::InvalidMatrix(format!(
                "empty {axis} label at index {i}"
            )));
        }
        if labels[..i].contains(label) {
            return Err(Error::InvalidMatrix(format!(
                "duplicate {axis} label {label:?}"
            )));
        }
    }
    Ok(())
}

impl<S: Scalar> EetMatrix<S> {
    /// Builds a matrix from row-major entries, validating the invariants.
    pub fn new(
        task_labels: Vec<String>,
        machine_labels: Vec<String>,
        entries: Vec<S>,
    ) -> Result<Self> {
        check_labels(&task_labels, "task")?;
        check_labels(&machine_labels, "machine")?;
        let (m, n) = (task_labels.len(), machine_labels.len());
        if entries.len() != m * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {m}x{n} = {} entries, got {}",
                m * n,
                entries.len()
            )));
        }
        for (k, &e) in entries.iter().enumerate() {
            if !(e.is_finite() && e > S::zero()) {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({}, {}) = {e} is not a positive finite time",
                    k / n,
                    k % n
                )));
            }
        }
        Ok(Self {
            task_labels,
            machine_labels,
            entries,
        })
    }

    /// Builds a matrix from rows, generating labels `T1..Tm` / `M1..Mn`.
    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        EetMatrix::new(
            (1..=m).map(|i| format!("T{i}")).collect(),
            (1..=n).map(|j| format!("M{j}")).collect(),
            rows.iter().flatten().copied().collect(),
        )
    }

    /// Number of task types (rows).
    pub fn tasks(&self) -> usize {
        self.task_labels.len()
    }

    /// Number of machine instances (columns).
    pub fn machines(&self) -> usize {
        self.machine_labels.len()
    }

    pub fn task_labels(&self) -> &[String] {
        &self.task_labels
    }

    pub fn machine_labels(&self) -> &[String] {
        &self.machine_labels
    }

    pub fn entry(&self, task: usize, machine: usize) -> S {
        self.entries[task * self.machines() + machine]
    }

    pub fn row(&self, task: usize) -> &[S] {
        let n = self.machines();
        &self.entries[task * n..(task + 1) * n]
    }

    pub fn col(&self, machine: usize) -> impl Iterator<Item = S> + '_ {
        let n = self.machines();
        self.entries[machine..].iter().step_by(n).copied()
    }

    /// Index of the task type with the given label.
    pub fn task_index(&self, label: &str) -> Option<usize> {
        self.task_labels.iter().position(|l| l == label)
    }

    pub fn min_entry(&self) -> S {
        self.entries.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn max_entry(&self) -> S {
        self.entries.iter().copied().fold(S::zero(), S::max)
    }

    /// Speedup of each machine on task `task_index`, relative to the slowest
    /// machine for that task: value `j = max_k e[task][k] / e[task][j]`.
    pub fn row_speedups(&self, task_index: usize) -> Result<SpeedupVector<S>> {
        if task_index >= self.tasks() {
            return Err(Error::IndexOutOfRange {
                axis: "task",
                index: task_index,
                len: self.tasks(),
            });
        }
        let row = self.row(task_index);
        let max = row.iter().copied().fold(S::zero(), S::max);
        let values = row.iter().map(|&e| max / e).collect();
        SpeedupVector::new(values, Axis::Row, task_index)
    }

    /// Speedup of each task type on machine `machine_index`, relative to the
    /// slowest task type on that machine: value `i = max_k e[k][m] / e[i][m]`.
    pub fn col_speedups(&self, machine_index: usize) -> Result<SpeedupVector<S>> {
        if machine_index >= self.machines() {
            return Err(Error::IndexOutOfRange {
                axis: "machine",
                index: machine_index,
                len: self.machines(),
            });
        }
        let max = self.col(machine_index).fold(S::zero(), S::max);
        let values = self.col(machine_index).map(|e| max / e).collect();
        SpeedupVector::new(values, Axis::Column, machine_index)
    }

    /// Same-shape matrix with every entry set to the global maximum: the
    /// slowest homogeneous system, the baseline that true speedups are
    /// measured against. Idempotent.
    pub fn homogeneous_counterpart(&self) -> EetMatrix<S> {
        let max = self.max_entry();
        EetMatrix {
            task_labels: self.task_labels.clone(),
            machine_labels: self.machine_labels.clone(),
            entries: vec![max; self.entries.len()],
        }
    }

    /// Per machine, the execution time of the mix-equivalent task:
    /// `e*_j = (max_i e[i][j]) / beta_bar_j` with `beta_bar_j` the
    /// mix-weighted harmonic mean of the column speedups. Equals the
    /// mix-weighted mean of the column.
    pub fn equivalent_task_times(&self, mix: &WorkloadMix<S>) -> Result<Vec<S>> {
        if mix.len() != self.tasks() {
            return Err(Error::InvalidMix(format!(
                "mix has {} weights for {} task types",
                mix.len(),
                self.tasks()
            )));
        }
        let mut times = Vec::with_capacity(self.machines());
        for j in 0..self.machines() {
            let col_max = self.col(j).fold(S::zero(), S::max);
            let beta_bar = self.col_speedups(j)?.harmonic_mean(Some(mix))?;
            let equivalent = col_max / beta_bar;
            debug_assert!(
                approx_eq(
                    equivalent,
                    self.col(j)
                        .zip(mix.weights())
                        .map(|(e, &w)| w * e)
                        .fold(S::zero(), |a, b| a + b),
                    S::IDENTITY_RTOL
                ),
                "equivalent time diverged from the weighted column mean"
            );
            times.push(equivalent);
        }
        Ok(times)
    }

    /// Runs the full pipeline and returns every intermediate plus the score.
    pub fn heet_score(&self, mix: &WorkloadMix<S>) -> Result<HeetReport<S>> {
        let beta_bar: Vec<S> = (0..self.machines())
            .map(|j| self.col_speedups(j)?.harmonic_mean(Some(mix)))
            .collect::<Result<_>>()?;
        let equiv_times = self.equivalent_task_times(mix)?;

        let equiv_max = equiv_times.iter().copied().fold(S::zero(), S::max);
        let alpha_star: Vec<S> = equiv_times.iter().map(|&e| equiv_max / e).collect();
        let n = S::from_usize_lossy(self.machines());
        let alpha_star_mean = alpha_star.iter().copied().fold(S::zero(), |a, b| a + b) / n;
        let heet = equiv_max / alpha_star_mean;
        let report = HeetReport {
            machines: self.machines(),
            task_types: self.tasks(),
            beta_bar,
            equiv_times,
            alpha_star,
            alpha_star_mean,
            heet,
            s_heet: heet / n,
            predicted_throughput: n / heet,
        };
        debug_assert!(report.check_consistency().is_ok());
        Ok(report)
    }

    /// Arithmetic, harmonic and geometric means over all `m * n` entries.
    /// Used as stand-ins for HEET when judging how much the pipeline buys.
    pub fn baseline_means(&self) -> BaselineMeans<S> {
        let count = S::from_usize_lossy(self.entries.len());
        let sum = self.entries.iter().copied().fold(S::zero(), |a, b| a + b);
        let inv_sum = self
            .entries
            .iter()
            .map(|&e| e.recip())
            .fold(S::zero(), |a, b| a + b);
        let ln_sum = self
            .entries
            .iter()
            .map(|&e| e.ln())
            .fold(S::zero(), |a, b| a + b);
        BaselineMeans {
            arithmetic: sum / count,
            harmonic: count / inv_sum,
            geometric: (ln_sum / count).exp(),
        }
    }

    /// Returns a copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: S) -> Result<EetMatrix<S>> {
        EetMatrix::new(
            self.task_labels.clone(),
            self.machine_labels.clone(),
            self.entries.iter().map(|&e| e * factor).collect(),
        )
    }
}

/// Per-task-type workload proportions; nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<S>", into = "Vec<S>")]
pub struct WorkloadMix<S: Scalar> {
    weights: Vec<S>,
}

impl<S: Scalar> WorkloadMix<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMix("no weights".into()));
        }
        if let Some(&w) = weights
            .iter()
            .find(|w| !(w.is_finite() && **w >= S::zero()))
        {
            return Err(Error::InvalidMix(format!(
                "weight {w} is not finite and nonnegative"
            )));
        }
        let sum = weights.iter().copied().fold(S::zero(), |a, b| a + b);
        if (sum - S::one()).abs() > S::UNIT_SUM_TOL {
            return Err(Error::InvalidMix(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Equal weights over `m` task types.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidMix("no task types".into()));
        }
        let w = S::one() / S::from_usize_lossy(m);
        // Rebuild the last weight from the rest so the sum is exactly one
        // even when 1/m is not representable.
        let mut weights = vec![w; m];
        let partial = weights[..m - 1]
            .iter()
            .copied()
            .fold(S::zero(), |a, b| a + b);
        weights[m - 1] = S::one() - partial;
        WorkloadMix::new(weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }
}

impl<S: Scalar> TryFrom<Vec<S>> for WorkloadMix<S> {
    type Error = Error;

    fn try_from(weights: Vec<S>) -> Result<Self> {
        WorkloadMix::new(weights)
    }
}

impl<S: Scalar> From<WorkloadMix<S>> for Vec<S> {
    fn from(mix: WorkloadMix<S>) -> Vec<S> {
        mix.weights
    }
}

/// Speedups of one row or column relative to its slowest element.
///
/// Every value is >= 1 and the slowest element maps to exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupVector<S: Scalar> {
    values: Vec<S>,
    axis: Axis,
    index: usize,
}

impl<S: Scalar> SpeedupVector<S> {
    pub fn new(values: Vec<S>, axis: Axis, index: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpeedups("empty vector".into()));
        }
        if let Some(&v) = values.iter().find(|v| !(v.is_finite() && **v >= S::one())) {
            return Err(Error::InvalidSpeedups(format!(
                "value {v} is below 1 or not finite"
            )));
        }
        if !values.iter().any(|&v| v == S::one()) {
            return Err(Error::InvalidSpeedups(
                "no element equals 1 (the slowest element is its own baseline)".into(),
            ));
        }
        Ok(Self {
            values,
            axis,
            index,
        })
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// Which row/column of the matrix this vector describes.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Plain average of the speedups. Matches the measured true speedup of a
    /// saturated system, where every machine always has work.
    pub fn arithmetic_mean(&self) -> S {
        let sum = self.values.iter().copied().fold(S::zero(), |a, b| a + b);
        sum / S::from_usize_lossy(self.values.len())
    }

    /// Harmonic mean `1 / sum_i (w_i / v_i)`, weighted by `weights` when
    /// given, otherwise uniform (which reduces to `n / sum(1/v)`). Matches
    /// the measured true speedup when work is serialized: one busy machine
    /// at a time (row vectors) or a task mix on a single machine (columns).
    pub fn harmonic_mean(&self, weights: Option<&WorkloadMix<S>>) -> Result<S> {
        match weights {
            None => {
                let inv_sum = self
                    .values
                    .iter()
                    .map(|&v| v.recip())
                    .fold(S::zero(), |a, b| a + b);
                Ok(S::from_usize_lossy(self.values.len()) / inv_sum)
            }
            Some(mix) => {
                if mix.len() != self.values.len() {
                    return Err(Error::WeightLengthMismatch {
                        weights: mix.len(),
                        values: self.values.len(),
                    });
                }
                if mix.weights().iter().all(|&w| w == S::zero()) {
                    return Err(Error::AllZeroWeights);
                }
                let inv_sum = self
                    .values
                    .iter()
                    .zip(mix.weights())
                    .map(|(&v, &w)| w / v)
                    .fold(S::zero(), |a, b| a + b);
                Ok(inv_sum.recip())
            }
        }
    }

    /// Upper bound on the relative gap between the arithmetic-mean speedup
    /// and the measured speedup of a saturated `c`-task run: `sum(v) / c`.
    /// Loose for tiny `c`, vanishing as `c` grows.
    pub fn error_bound(&self, c: u64) -> S {
        let sum = self.values.iter().copied().fold(S::zero(), |a, b| a + b);
        sum / S::from_f64(c as f64).unwrap()
    }
}

/// Arithmetic/harmonic/geometric means of all matrix entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineMeans<S: Scalar> {
    pub arithmetic: S,
    pub harmonic: S,
    pub geometric: S,
}

/// Every intermediate of the HEET pipeline plus the score itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeetReport<S: Scalar> {
    /// Number of machine instances the score was computed over.
    pub machines: usize,
    /// Number of task types.
    pub task_types: usize,
    /// Per machine, the mix-weighted harmonic mean of its column speedups.
    pub beta_bar: Vec<S>,
    /// Per machine, the execution time of the mix-equivalent task (seconds).
    pub equiv_times: Vec<S>,
    /// Speedup of each machine on the equivalent task, relative to the slowest.
    pub alpha_star: Vec<S>,
    /// Arithmetic mean of `alpha_star`.
    pub alpha_star_mean: S,
    /// The score: equivalent execution time of the whole system (seconds).
    pub heet: S,
    /// `heet / machines`; comparable across systems of different sizes.
    pub s_heet: S,
    /// `machines / heet` (tasks per second).
    pub predicted_throughput: S,
}

impl<S: Scalar> HeetReport<S> {
    /// Predicted makespan `(c / n) * HEET` of a `c`-task workload.
    ///
    /// `machines` must restate the machine count the report was built from.
    pub fn predict_makespan(&self, tasks: u64, machines: usize) -> Result<S> {
        if machines != self.machines {
            return Err(Error::MachineCountMismatch {
                given: machines,
                expected: self.machines,
            });
        }
        let c = S::from_f64(tasks as f64).unwrap();
        Ok(c / S::from_usize_lossy(self.machines) * self.heet)
    }

    /// Predicted throughput `n / HEET` in tasks per second.
    pub fn predict_throughput(&self, machines: usize) -> Result<S> {
        if machines != self.machines {
            return Err(Error::MachineCountMismatch {
                given: machines,
                expected: self.machines,
            });
        }
        Ok(S::from_usize_lossy(self.machines) / self.heet)
    }

    /// Verifies the report's internal identities: the score lies between the
    /// extreme equivalent times, equals their harmonic mean, and `s_heet`
    /// and `predicted_throughput` are exact derivations of it.
    pub fn check_consistency(&self) -> Result<()> {
        let min = self.equiv_times.iter().copied().fold(S::infinity(), S::min);
        let max = self.equiv_times.iter().copied().fold(S::zero(), S::max);
        let rtol = S::IDENTITY_RTOL;
        if self.heet < min * (S::one() - rtol) || self.heet > max * (S::one() + rtol) {
            return Err(Error::InvalidMatrix(format!(
                "HEET {} outside equivalent-time range [{min}, {max}]",
                self.heet
            )));
        }
        let inv_sum = self
            .equiv_times
            .iter()
            .map(|&e| e.recip())
            .fold(S::zero(), |a, b| a + b);
        let harmonic = S::from_usize_lossy(self.machines) / inv_sum;
        if !approx_eq(self.heet, harmonic, rtol) {
            return Err(Error::InvalidMatrix(format!(
                "HEET {} diverged from the harmonic mean of equivalent times {harmonic}",
                self.heet
            )));
        }
        if self.s_heet != self.heet / S::from_usize_lossy(self.machines) {
            return Err(Error::InvalidMatrix("s_heet is not heet / machines".into()));
        }
        Ok(())
    }
}
