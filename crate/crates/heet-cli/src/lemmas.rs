//! The four mean-aggregation checks behind `heet validate-lemmas`.
//!
//! Each check simulates randomized small instances and compares the measured
//! true speedup against the mean that should reproduce it:
//!
//! 1. saturated bags — arithmetic mean of the row speedups, within the
//!    `sum(speedups)/c` bound;
//! 2. round-robin dispatch — simulated bag makespan against the exhaustive
//!    static-assignment minimum, exact;
//! 3. one-busy-machine regime — unweighted harmonic mean, exact;
//! 4. single-machine task mixes — mix-weighted harmonic mean, within `1/c`.

use heet::eet::{EetMatrix, WorkloadMix};
use heet::sim::{
    exhaustive_min_makespan, one_busy_regime_speedup, simulate, true_speedup, NoiseSpec,
};
use heet::workload::{synth_bag, TraceRecord, WorkloadTrace};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub tolerance: &'static str,
    pub trials: u64,
    pub failures: u64,
    /// Largest relative gap observed across all trials.
    pub worst_gap: f64,
    /// Human-readable description of the worst failing instance, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn random_row(rng: &mut ChaCha8Rng, n: usize) -> EetMatrix<f64> {
    let row: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..=20.0)).collect();
    EetMatrix::from_rows(&[row]).unwrap()
}

fn bag(c: u64) -> WorkloadTrace {
    WorkloadTrace::new(
        (0..c)
            .map(|_| TraceRecord {
                arrival: 0.0,
                task_type: "T1".into(),
            })
            .collect(),
    )
    .unwrap()
}

/// Saturated single-type bags: measured speedup vs the arithmetic mean,
/// within the `sum(alpha)/c` bound.
pub fn check_saturation(trials: u64, seed: u64, tasks: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcome = CheckOutcome {
        name: "saturated bag vs arithmetic mean",
        tolerance: "relative gap <= sum(speedups)/c",
        trials,
        failures: 0,
        worst_gap: 0.0,
        example: None,
    };
    for _ in 0..trials {
        let n = rng.random_range(2..=6usize);
        let eet = random_row(&mut rng, n);
        let gamma = true_speedup(&eet, &bag(tasks)).unwrap();
        let alphas = eet.row_speedups(0).unwrap();
        let gap = (gamma - alphas.arithmetic_mean()).abs() / gamma;
        let bound = alphas.error_bound(tasks);
        outcome.worst_gap = outcome.worst_gap.max(gap);
        if gap > bound {
            outcome.failures += 1;
            outcome.example.get_or_insert_with(|| {
                format!(
                    "row {:?}, c={tasks}: gap {gap:.3e} > bound {bound:.3e}",
                    eet.row(0)
                )
            });
        }
    }
    outcome
}

/// Round-robin dispatch vs the exhaustive static optimum on every bag size
/// up to the oracle's limit.
pub fn check_round_robin(trials: u64, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcome = CheckOutcome {
        name: "round-robin vs exhaustive optimum",
        tolerance: "exact makespan equality",
        trials: 0,
        failures: 0,
        worst_gap: 0.0,
        example: None,
    };
    for _ in 0..trials {
        let n = rng.random_range(1..=4usize);
        let eet = random_row(&mut rng, n);
        for c in 1..=12u64 {
            outcome.trials += 1;
            let simulated = simulate(&eet, &bag(c), &NoiseSpec::none())
                .unwrap()
                .makespan;
            let optimal = exhaustive_min_makespan(&eet, c).unwrap();
            let gap = (simulated - optimal) / optimal;
            if gap > 1e-9 {
                outcome.failures += 1;
                if gap > outcome.worst_gap {
                    outcome.worst_gap = gap;
                    outcome.example = Some(format!(
                        "row {:?}, c={c}: simulated {simulated:.4} vs optimal {optimal:.4}",
                        eet.row(0)
                    ));
                }
            }
        }
    }
    outcome
}

/// One-busy-machine regime vs the unweighted harmonic mean, exact.
pub fn check_one_busy(trials: u64, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcome = CheckOutcome {
        name: "one-busy regime vs harmonic mean",
        tolerance: "relative gap <= 1e-9",
        trials,
        failures: 0,
        worst_gap: 0.0,
        example: None,
    };
    for _ in 0..trials {
        let n = rng.random_range(1..=6usize);
        let eet = random_row(&mut rng, n);
        let c = n as u64 * rng.random_range(1..=50u64);
        let gamma = one_busy_regime_speedup(&eet, c).unwrap();
        let harmonic = eet.row_speedups(0).unwrap().harmonic_mean(None).unwrap();
        let gap = (gamma - harmonic).abs() / harmonic;
        outcome.worst_gap = outcome.worst_gap.max(gap);
        if gap > 1e-9 {
            outcome.failures += 1;
            outcome.example.get_or_insert_with(|| {
                format!(
                    "row {:?}, c={c}: gamma {gamma} vs harmonic {harmonic}",
                    eet.row(0)
                )
            });
        }
    }
    outcome
}

/// Single-machine task mixes vs the weighted harmonic mean, within 1/c.
pub fn check_weighted_mix(trials: u64, seed: u64, tasks: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcome = CheckOutcome {
        name: "task mix vs weighted harmonic mean",
        tolerance: "relative gap <= 1/c",
        trials,
        failures: 0,
        worst_gap: 0.0,
        example: None,
    };
    for _ in 0..trials {
        let m = rng.random_range(2..=5usize);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random_range(0.5..=20.0)]).collect();
        let eet = EetMatrix::from_rows(&rows).unwrap();

        // integer task counts so the bag realizes the mix exactly
        let mut cuts: Vec<u64> = (0..m - 1).map(|_| rng.random_range(0..=tasks)).collect();
        cuts.extend([0, tasks]);
        cuts.sort_unstable();
        let weights: Vec<f64> = cuts
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 / tasks as f64)
            .collect();
        let mix = WorkloadMix::new(weights).unwrap();

        let trace = synth_bag(tasks, &mix, eet.task_labels(), seed ^ 0xbee5).unwrap();
        let gamma = true_speedup(&eet, &trace).unwrap();
        let weighted = eet
            .col_speedups(0)
            .unwrap()
            .harmonic_mean(Some(&mix))
            .unwrap();
        let gap = (gamma - weighted).abs() / weighted;
        outcome.worst_gap = outcome.worst_gap.max(gap);
        if gap > 1.0 / tasks as f64 {
            outcome.failures += 1;
            outcome.example.get_or_insert_with(|| {
                format!(
                    "column {:?}, c={tasks}: gamma {gamma} vs weighted mean {weighted}",
                    rows
                )
            });
        }
    }
    outcome
}

/// Runs all four checks.
pub fn run_all(trials: u64, seed: u64, tasks: u64) -> Vec<CheckOutcome> {
    vec![
        check_saturation(trials, seed, tasks),
        check_round_robin(trials, seed.wrapping_add(1)),
        check_one_busy(trials, seed.wrapping_add(2)),
        check_weighted_mix(trials, seed.wrapping_add(3), tasks),
    ]
}
