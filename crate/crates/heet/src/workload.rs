//! Workload synthesis and profile ingestion.
//!
//! Traces are ordered `(arrival_time, task_type)` records. A bag of tasks is
//! the special case where every arrival is zero: all work is available up
//! front. Poisson traces draw exponential inter-arrival gaps. Profile
//! ingestion averages repeated execution-time measurements into an EET
//! matrix.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::eet::{EetMatrix, WorkloadMix};
use crate::error::Error;
use crate::Result;

/// One task arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Arrival time in seconds.
    #[serde(rename = "t")]
    pub arrival: f64,
    /// Task type label; must name a row of the EET matrix it is run against.
    #[serde(rename = "type")]
    pub task_type: String,
}

/// An ordered workload trace with nondecreasing arrival times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TraceRecord>", into = "Vec<TraceRecord>")]
pub struct WorkloadTrace {
    records: Vec<TraceRecord>,
}

impl WorkloadTrace {
    pub fn new(records: Vec<TraceRecord>) -> Result<Self> {
        for (index, rec) in records.iter().enumerate() {
            if !(rec.arrival.is_finite() && rec.arrival >= 0.0) {
                return Err(Error::InvalidTrace(format!(
                    "arrival time {} at record {index} is not a finite nonnegative time",
                    rec.arrival
                )));
            }
            if index > 0 && rec.arrival < records[index - 1].arrival {
                return Err(Error::DecreasingArrivals { index });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    /// Total task count `c`.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when every arrival is zero.
    pub fn is_bag(&self) -> bool {
        self.records.iter().all(|r| r.arrival == 0.0)
    }

    /// Number of records per task type label.
    pub fn type_counts(&self) -> HashMap<&str, usize> {
        let mut counts = HashMap::new();
        for rec in &self.records {
            *counts.entry(rec.task_type.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

impl TryFrom<Vec<TraceRecord>> for WorkloadTrace {
    type Error = Error;

    fn try_from(records: Vec<TraceRecord>) -> Result<Self> {
        WorkloadTrace::new(records)
    }
}

impl From<WorkloadTrace> for Vec<TraceRecord> {
    fn from(trace: WorkloadTrace) -> Vec<TraceRecord> {
        trace.records
    }
}

fn check_labels_against_mix(mix: &WorkloadMix<f64>, labels: &[String]) -> Result<()> {
    if mix.len() != labels.len() {
        return Err(Error::InvalidMix(format!(
            "mix has {} weights for {} task labels",
            mix.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Draws a `c`-task trace with i.i.d. exponential inter-arrival gaps of mean
/// `1 / rate` and task types drawn i.i.d. from `mix`. Deterministic for a
/// fixed seed.
pub fn synth_poisson_trace(
    rate: f64,
    c: u64,
    mix: &WorkloadMix<f64>,
    task_labels: &[String],
    seed: u64,
) -> Result<WorkloadTrace> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidTrace(format!(
            "arrival rate {rate} must be positive"
        )));
    }
    if c == 0 {
        return Err(Error::InvalidTrace("task count must be at least 1".into()));
    }
    check_labels_against_mix(mix, task_labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps = Exp::new(rate).expect("positive rate");
    let types = WeightedIndex::new(mix.weights())
        .map_err(|e| Error::InvalidMix(format!("unusable mix weights: {e}")))?;

    let mut t = 0.0;
    let mut records = Vec::with_capacity(c as usize);
    for _ in 0..c {
        t += gaps.sample(&mut rng);
        records.push(TraceRecord {
            arrival: t,
            task_type: task_labels[types.sample(&mut rng)].clone(),
        });
    }
    WorkloadTrace::new(records)
}

/// Per-type task counts for a `c`-task bag: `round(c * w_i)` by largest
/// remainder, ties to the lowest index, so the counts sum to exactly `c`.
pub fn bag_type_counts(c: u64, mix: &WorkloadMix<f64>) -> Vec<u64> {
    let exact: Vec<f64> = mix.weights().iter().map(|w| w * c as f64).collect();
    let mut counts: Vec<u64> = exact.iter().map(|&x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // Sort by descending remainder, then by index; `sort_by` is stable, so
    // equal remainders keep index order.
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap()
    });
    for &i in order.iter().take((c - assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Builds a `c`-task bag (all arrivals zero) whose type counts follow the
/// mix by largest-remainder rounding, in an order shuffled by `seed`.
pub fn synth_bag(
    c: u64,
    mix: &WorkloadMix<f64>,
    task_labels: &[String],
    seed: u64,
) -> Result<WorkloadTrace> {
    if c == 0 {
        return Err(Error::InvalidTrace("task count must be at least 1".into()));
    }
    check_labels_against_mix(mix, task_labels)?;
    let counts = bag_type_counts(c, mix);
    let mut records = Vec::with_capacity(c as usize);
    for (label, &count) in task_labels.iter().zip(&counts) {
        for _ in 0..count {
            records.push(TraceRecord {
                arrival: 0.0,
                task_type: label.clone(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
    WorkloadTrace::new(records)
}

/// Raw execution-time measurements per (task type, machine type) cell,
/// with labels kept in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSamples {
    task_labels: Vec<String>,
    machine_labels: Vec<String>,
    samples: HashMap<(usize, usize), Vec<f64>>,
}

impl ProfileSamples {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one measurement; registers unseen labels.
    pub fn push(&mut self, task: &str, machine: &str, seconds: f64) -> Result<()> {
        if !(seconds.is_finite() && seconds > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "sample {seconds} for ({task:?}, {machine:?}) is not a positive finite time"
            )));
        }
        let ti = index_of(&mut self.task_labels, task);
        let mi = index_of(&mut self.machine_labels, machine);
        self.samples.entry((ti, mi)).or_default().push(seconds);
        Ok(())
    }

    pub fn task_labels(&self) -> &[String] {
        &self.task_labels
    }

    pub fn machine_labels(&self) -> &[String] {
        &self.machine_labels
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn index_of(labels: &mut Vec<String>, label: &str) -> usize {
    match labels.iter().position(|l| l == label) {
        Some(i) => i,
        None => {
            labels.push(label.to_owned());
            labels.len() - 1
        }
    }
}

/// Averages profile samples into an EET matrix. Every (task, machine) cell
/// of the grid must have at least one sample.
pub fn ingest_profile(samples: &ProfileSamples) -> Result<EetMatrix<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidProfile("no samples".into()));
    }
    let m = samples.task_labels.len();
    let n = samples.machine_labels.len();
    let mut entries = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let cell = samples
                .samples
                .get(&(i, j))
                .filter(|v| !v.is_empty())
                .ok_or_else(|| Error::IncompleteProfileGrid {
                    task: samples.task_labels[i].clone(),
                    machine: samples.machine_labels[j].clone(),
                })?;
            entries.push(cell.iter().sum::<f64>() / cell.len() as f64);
        }
    }
    EetMatrix::new(
        samples.task_labels.clone(),
        samples.machine_labels.clone(),
        entries,
    )
}
