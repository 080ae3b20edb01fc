//! Deterministic discrete-event simulation of a single-queue cluster.
//!
//! Tasks join one unbounded FCFS queue at their arrival time. Whenever at
//! least one machine is free and the queue is nonempty, the head task is
//! dispatched to the free machine with the lowest index and occupies it for
//! its EET entry (optionally scaled by multiplicative noise). A task that
//! arrives while every machine is busy waits in the queue. Completions are
//! processed before arrivals at equal timestamps, so a machine freed at time
//! `t` can receive a task arriving at `t`.
//!
//! One run is single-threaded and bit-reproducible for fixed inputs and
//! seed. Independent runs own their PRNG streams and can execute
//! concurrently.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::eet::EetMatrix;
use crate::error::Error;
use crate::workload::WorkloadTrace;
use crate::Result;

/// Largest machine count accepted by [`exhaustive_min_makespan`].
pub const EXHAUSTIVE_MAX_MACHINES: usize = 4;
/// Largest task count accepted by [`exhaustive_min_makespan`].
pub const EXHAUSTIVE_MAX_TASKS: u64 = 12;

/// Execution-time noise applied on top of the EET entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    /// Coefficient of variation of the multiplicative factor.
    pub coefficient_of_variation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Durations equal the EET entries exactly; no randomness at all.
    None,
    /// Durations are scaled by i.i.d. mean-one lognormal factors.
    Multiplicative,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            mode: NoiseMode::None,
            coefficient_of_variation: 0.0,
            seed: 0,
        }
    }

    pub fn multiplicative(coefficient_of_variation: f64, seed: u64) -> Result<Self> {
        let spec = NoiseSpec {
            mode: NoiseMode::Multiplicative,
            coefficient_of_variation,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coefficient_of_variation.is_finite() && self.coefficient_of_variation >= 0.0) {
            return Err(Error::InvalidNoise(format!(
                "coefficient of variation {} must be finite and nonnegative",
                self.coefficient_of_variation
            )));
        }
        Ok(())
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::none()
    }
}

enum NoiseSampler {
    Exact,
    LogNormal(Box<(LogNormal<f64>, ChaCha8Rng)>),
}

impl NoiseSampler {
    fn new(spec: &NoiseSpec) -> Result<Self> {
        spec.validate()?;
        match spec.mode {
            NoiseMode::None => Ok(NoiseSampler::Exact),
            NoiseMode::Multiplicative => {
                let dist = LogNormal::from_mean_cv(1.0, spec.coefficient_of_variation)
                    .map_err(|e| Error::InvalidNoise(e.to_string()))?;
                Ok(NoiseSampler::LogNormal(Box::new((
                    dist,
                    ChaCha8Rng::seed_from_u64(spec.seed),
                ))))
            }
        }
    }

    fn factor(&mut self) -> f64 {
        match self {
            NoiseSampler::Exact => 1.0,
            NoiseSampler::LogNormal(state) => {
                let (dist, rng) = state.as_mut();
                dist.sample(rng)
            }
        }
    }
}

/// End-of-run statistics for one machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimMachine {
    pub machine_index: usize,
    /// Completion time of the machine's last task (0 if it never ran one).
    pub busy_until: f64,
    pub tasks_completed: u64,
    /// Total seconds spent executing tasks.
    pub busy_time: f64,
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Completion time of the last task (seconds).
    pub makespan: f64,
    /// `completed / makespan` (tasks per second).
    pub throughput: f64,
    pub completed: u64,
    pub per_machine: Vec<SimMachine>,
}

/// One line of the optional event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: f64,
    pub event: SimEventKind,
    pub task_id: usize,
    /// Absent for arrivals: the task is only queued, not placed.
    pub machine: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimEventKind {
    Arrive,
    Start,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Completion {
    time: f64,
    machine: usize,
    task: usize,
}

impl Eq for Completion {}

impl Ord for Completion {
    fn cmp(&self, other: &Self) -> Ordering {
        // Times are finite; ties resolve to the lowest machine index.
        self.time
            .total_cmp(&other.time)
            .then(self.machine.cmp(&other.machine))
    }
}

impl PartialOrd for Completion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs the trace against the matrix and returns the run statistics.
pub fn simulate(
    eet: &EetMatrix<f64>,
    trace: &WorkloadTrace,
    noise: &NoiseSpec,
) -> Result<SimResult> {
    run(eet, trace, noise, None)
}

/// Like [`simulate`], additionally returning the arrive/start/complete log.
pub fn simulate_traced(
    eet: &EetMatrix<f64>,
    trace: &WorkloadTrace,
    noise: &NoiseSpec,
) -> Result<(SimResult, Vec<SimEvent>)> {
    let mut events = Vec::with_capacity(trace.len() * 3);
    let result = run(eet, trace, noise, Some(&mut events))?;
    Ok((result, events))
}

fn run(
    eet: &EetMatrix<f64>,
    trace: &WorkloadTrace,
    noise: &NoiseSpec,
    mut events: Option<&mut Vec<SimEvent>>,
) -> Result<SimResult> {
    let records = trace.records();
    let task_rows: Vec<usize> = records
        .iter()
        .map(|r| {
            eet.task_index(&r.task_type)
                .ok_or_else(|| Error::UnknownTaskType {
                    label: r.task_type.clone(),
                })
        })
        .collect::<Result<_>>()?;
    let mut sampler = NoiseSampler::new(noise)?;

    let n = eet.machines();
    let mut machines: Vec<SimMachine> = (0..n)
        .map(|machine_index| SimMachine {
            machine_index,
            busy_until: 0.0,
            tasks_completed: 0,
            busy_time: 0.0,
        })
        .collect();
    let mut free: BTreeSet<usize> = (0..n).collect();
    let mut running: BinaryHeap<std::cmp::Reverse<Completion>> = BinaryHeap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut next_arrival = 0usize;
    let mut makespan = 0.0f64;

    loop {
        let due_completion = running.peek().map(|c| c.0.time);
        let due_arrival = (next_arrival < records.len()).then(|| records[next_arrival].arrival);
        let now = match (due_completion, due_arrival) {
            (None, None) => break,
            (Some(tc), None) => tc,
            (None, Some(ta)) => ta,
            (Some(tc), Some(ta)) => tc.min(ta),
        };

        // Completions strictly precede arrivals at the same timestamp.
        while running.peek().is_some_and(|c| c.0.time == now) {
            let done = running.pop().unwrap().0;
            free.insert(done.machine);
            if let Some(log) = events.as_deref_mut() {
                log.push(SimEvent {
                    t: now,
                    event: SimEventKind::Complete,
                    task_id: done.task,
                    machine: Some(done.machine),
                });
            }
        }
        while next_arrival < records.len() && records[next_arrival].arrival == now {
            queue.push_back(next_arrival);
            if let Some(log) = events.as_deref_mut() {
                log.push(SimEvent {
                    t: now,
                    event: SimEventKind::Arrive,
                    task_id: next_arrival,
                    machine: None,
                });
            }
            next_arrival += 1;
        }

        while !queue.is_empty() && !free.is_empty() {
            let task = queue.pop_front().unwrap();
            let machine = free.pop_first().unwrap();
            let duration = eet.entry(task_rows[task], machine) * sampler.factor();
            let finish = now + duration;
            let stats = &mut machines[machine];
            stats.busy_time += duration;
            stats.tasks_completed += 1;
            stats.busy_until = finish;
            makespan = makespan.max(finish);
            running.push(std::cmp::Reverse(Completion {
                time: finish,
                machine,
                task,
            }));
            if let Some(log) = events.as_deref_mut() {
                log.push(SimEvent {
                    t: now,
                    event: SimEventKind::Start,
                    task_id: task,
                    machine: Some(machine),
                });
            }
        }
        // Work conservation: dispatching drained the queue or the free set.
        debug_assert!(queue.is_empty() || free.is_empty());
    }

    let completed = records.len() as u64;
    Ok(SimResult {
        makespan,
        throughput: if makespan > 0.0 {
            completed as f64 / makespan
        } else {
            0.0
        },
        completed,
        per_machine: machines,
    })
}

/// Measured speedup of the system over its slowest homogeneous counterpart:
/// the ratio of the counterpart's makespan to the system's makespan for the
/// same trace, both simulated without noise.
pub fn true_speedup(eet: &EetMatrix<f64>, trace: &WorkloadTrace) -> Result<f64> {
    let noise = NoiseSpec::none();
    let homogeneous = simulate(&eet.homogeneous_counterpart(), trace, &noise)?;
    let heterogeneous = simulate(eet, trace, &noise)?;
    Ok(homogeneous.makespan / heterogeneous.makespan)
}

/// Measured speedup in the regime where exactly one machine is busy at a
/// time: arrivals are spaced so each task arrives as the previous one
/// completes, and tasks cycle through the machines in strict index order.
/// The homogeneous baseline runs the same construction, so its makespan is
/// `c * max(e)`. Requires a single task type and `c` divisible by `n`, which
/// makes the ratio exactly the harmonic mean of the row speedups.
pub fn one_busy_regime_speedup(eet: &EetMatrix<f64>, c: u64) -> Result<f64> {
    if eet.tasks() != 1 {
        return Err(Error::InvalidMatrix(format!(
            "one-busy regime requires a single task type, got {}",
            eet.tasks()
        )));
    }
    let n = eet.machines();
    if c == 0 || c % n as u64 != 0 {
        return Err(Error::IndivisibleTaskCount {
            tasks: c,
            machines: n,
        });
    }
    let row = eet.row(0);
    let mut heterogeneous_makespan = 0.0;
    for k in 0..c {
        heterogeneous_makespan += row[(k % n as u64) as usize];
    }
    let homogeneous_makespan = c as f64 * eet.max_entry();
    Ok(homogeneous_makespan / heterogeneous_makespan)
}

/// Minimum bag-of-tasks makespan over all static assignments of `c`
/// identical tasks to the `n` machines of a single-row matrix: the best
/// `max_j(count_j * e_j)` over every split of `c`. Combinatorial, so the
/// instance is capped at `n <= 4`, `c <= 12`.
pub fn exhaustive_min_makespan(eet: &EetMatrix<f64>, c: u64) -> Result<f64> {
    if eet.tasks() != 1 {
        return Err(Error::InvalidMatrix(format!(
            "exhaustive search requires a single task type, got {}",
            eet.tasks()
        )));
    }
    let n = eet.machines();
    if n > EXHAUSTIVE_MAX_MACHINES || c > EXHAUSTIVE_MAX_TASKS {
        return Err(Error::InstanceTooLarge {
            machines: n,
            tasks: c,
            max_machines: EXHAUSTIVE_MAX_MACHINES,
            max_tasks: EXHAUSTIVE_MAX_TASKS,
        });
    }
    let row = eet.row(0);

    fn best_split(row: &[f64], remaining: u64, current_max: f64) -> f64 {
        match row {
            [last] => current_max.max(remaining as f64 * last),
            [first, rest @ ..] => (0..=remaining)
                .map(|k| best_split(rest, remaining - k, current_max.max(k as f64 * first)))
                .fold(f64::INFINITY, f64::min),
            [] => unreachable!("matrix has at least one machine"),
        }
    }

    Ok(best_split(row, c, 0.0))
}
