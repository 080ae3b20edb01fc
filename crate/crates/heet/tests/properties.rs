//! Property-based checks of the module invariants.

use heet::eet::{EetMatrix, WorkloadMix};
use heet::explorer::{
    expand_config, optimize, sweep, CatalogMachine, MachineCatalog, SystemConfig,
};
use heet::sim::{simulate, simulate_traced, NoiseSpec, SimEventKind};
use heet::workload::{bag_type_counts, synth_bag, synth_poisson_trace, WorkloadTrace};
use proptest::collection::vec;
use proptest::prelude::*;

fn gen_labels(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

fn build_mix(raw: Vec<f64>) -> WorkloadMix<f64> {
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let partial: f64 = weights[..weights.len() - 1].iter().sum();
    let last = weights.len() - 1;
    weights[last] = 1.0 - partial;
    WorkloadMix::new(weights).unwrap()
}

fn matrix_and_mix() -> impl Strategy<Value = (EetMatrix<f64>, WorkloadMix<f64>)> {
    (1usize..=5, 1usize..=6).prop_flat_map(|(m, n)| {
        (vec(0.5f64..20.0, m * n), vec(0.01f64..1.0, m)).prop_map(move |(entries, raw)| {
            let eet = EetMatrix::new(gen_labels("T", m), gen_labels("M", n), entries).unwrap();
            (eet, build_mix(raw))
        })
    })
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn permuted_matrix(eet: &EetMatrix<f64>, row_perm: &[usize], col_perm: &[usize]) -> EetMatrix<f64> {
    let mut entries = Vec::with_capacity(eet.tasks() * eet.machines());
    for &i in row_perm {
        for &j in col_perm {
            entries.push(eet.entry(i, j));
        }
    }
    EetMatrix::new(
        row_perm
            .iter()
            .map(|&i| eet.task_labels()[i].clone())
            .collect(),
        col_perm
            .iter()
            .map(|&j| eet.machine_labels()[j].clone())
            .collect(),
        entries,
    )
    .unwrap()
}

proptest! {
    /// The beta-bar route to the equivalent times agrees with the weighted
    /// column mean, and the score is their harmonic mean.
    #[test]
    fn equivalent_time_identity_and_harmonic_closed_form((eet, mix) in matrix_and_mix()) {
        let report = eet.heet_score(&mix).unwrap();
        for (j, &e_star) in report.equiv_times.iter().enumerate() {
            let weighted: f64 = eet.col(j).zip(mix.weights()).map(|(e, &w)| w * e).sum();
            prop_assert!(rel_err(e_star, weighted) < 1e-9);
        }
        let inv_sum: f64 = report.equiv_times.iter().map(|e| 1.0 / e).sum();
        let harmonic = eet.machines() as f64 / inv_sum;
        prop_assert!(rel_err(report.heet, harmonic) < 1e-9);
        report.check_consistency().unwrap();
    }

    /// The score lies within the entry range of the matrix.
    #[test]
    fn score_bounded_by_entries((eet, mix) in matrix_and_mix()) {
        let report = eet.heet_score(&mix).unwrap();
        prop_assert!(report.heet >= eet.min_entry() * (1.0 - 1e-12));
        prop_assert!(report.heet <= eet.max_entry() * (1.0 + 1e-12));
    }

    /// Scaling every entry by k scales HEET, e*, tau by k and theta by 1/k;
    /// speedup vectors are scale-free.
    #[test]
    fn scale_equivariance((eet, mix) in matrix_and_mix(), k in 0.001f64..1000.0) {
        let base = eet.heet_score(&mix).unwrap();
        let scaled = eet.scaled(k).unwrap().heet_score(&mix).unwrap();
        prop_assert!(rel_err(scaled.heet, k * base.heet) < 1e-9);
        prop_assert!(rel_err(scaled.s_heet, k * base.s_heet) < 1e-9);
        for (a, b) in scaled.equiv_times.iter().zip(&base.equiv_times) {
            prop_assert!(rel_err(*a, k * b) < 1e-9);
        }
        let n = eet.machines();
        let (t0, t1) = (base.predict_throughput(n).unwrap(), scaled.predict_throughput(n).unwrap());
        prop_assert!(rel_err(t1, t0 / k) < 1e-9);
        let (m0, m1) = (base.predict_makespan(100, n).unwrap(), scaled.predict_makespan(100, n).unwrap());
        prop_assert!(rel_err(m1, k * m0) < 1e-9);

        for i in 0..eet.tasks() {
            let a = eet.row_speedups(i).unwrap();
            let b = eet.scaled(k).unwrap().row_speedups(i).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!(rel_err(*x, *y) < 1e-12);
            }
        }
    }

    /// Permuting machine columns, or task rows together with the mix,
    /// leaves the score unchanged.
    #[test]
    fn permutation_invariance(
        (eet, mix) in matrix_and_mix(),
        perm_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
        let mut rows: Vec<usize> = (0..eet.tasks()).collect();
        let mut cols: Vec<usize> = (0..eet.machines()).collect();
        rows.shuffle(&mut rng);
        cols.shuffle(&mut rng);

        let permuted = permuted_matrix(&eet, &rows, &cols);
        let permuted_mix =
            WorkloadMix::new(rows.iter().map(|&i| mix.weights()[i]).collect()).unwrap();

        let a = eet.heet_score(&mix).unwrap();
        let b = permuted.heet_score(&permuted_mix).unwrap();
        prop_assert!(rel_err(a.heet, b.heet) < 1e-9);
        prop_assert!(rel_err(a.s_heet, b.s_heet) < 1e-9);
    }

    /// For a system whose columns are all copies of one machine type,
    /// appending one more copy keeps HEET fixed and scales throughput by
    /// (n+1)/n, i.e. s_heet shrinks by n/(n+1).
    #[test]
    fn duplicated_column_scaling(
        column in vec(0.5f64..20.0, 1..5),
        copies in 1usize..6,
        raw_mix in vec(0.01f64..1.0, 1..5),
    ) {
        let m = column.len();
        let raw = raw_mix.into_iter().cycle().take(m).collect::<Vec<_>>();
        let mix = build_mix(raw);

        let build = |n: usize| {
            let rows: Vec<Vec<f64>> = (0..m).map(|i| vec![column[i]; n]).collect();
            EetMatrix::from_rows(&rows).unwrap()
        };
        let base = build(copies).heet_score(&mix).unwrap();
        let extended = build(copies + 1).heet_score(&mix).unwrap();

        prop_assert!(rel_err(base.heet, extended.heet) < 1e-9);
        let t0 = base.predict_throughput(copies).unwrap();
        let t1 = extended.predict_throughput(copies + 1).unwrap();
        prop_assert!(rel_err(t1, t0 * (copies as f64 + 1.0) / copies as f64) < 1e-9);
    }

    /// The homogeneous counterpart is a projection: applying it twice is
    /// the same as applying it once.
    #[test]
    fn homogenization_is_idempotent((eet, _) in matrix_and_mix()) {
        let once = eet.homogeneous_counterpart();
        prop_assert_eq!(once.homogeneous_counterpart(), once);
    }

    /// Bag synthesis reproduces the mix within 1/c per task type.
    #[test]
    fn bag_counts_track_the_mix(
        raw in vec(0.01f64..1.0, 1..6),
        c in 1u64..2000,
        seed in any::<u64>(),
    ) {
        let mix = build_mix(raw);
        let labels = gen_labels("T", mix.len());
        let trace = synth_bag(c, &mix, &labels, seed).unwrap();
        prop_assert_eq!(trace.len() as u64, c);
        prop_assert!(trace.is_bag());
        let counts = trace.type_counts();
        for (label, &w) in labels.iter().zip(mix.weights()) {
            let observed = *counts.get(label.as_str()).unwrap_or(&0) as f64 / c as f64;
            prop_assert!((observed - w).abs() <= 1.0 / c as f64);
        }
        let planned: u64 = bag_type_counts(c, &mix).iter().sum();
        prop_assert_eq!(planned, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Event-log replay: work conservation at every timestamp, FCFS starts,
    /// per-machine busy accounting, and exact durations with noise off.
    #[test]
    fn simulation_event_log_invariants(
        (eet, mix) in matrix_and_mix(),
        c in 1u64..150,
        arrivals_poisson in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let labels: Vec<String> = eet.task_labels().to_vec();
        let trace = if arrivals_poisson {
            synth_poisson_trace(2.0, c, &mix, &labels, seed).unwrap()
        } else {
            synth_bag(c, &mix, &labels, seed).unwrap()
        };
        let (result, events) = simulate_traced(&eet, &trace, &NoiseSpec::none()).unwrap();
        replay_and_check(&eet, &trace, &events, &result)?;
    }

    /// Identical inputs and seed give bit-identical results; different seeds
    /// perturb noisy runs.
    #[test]
    fn simulation_is_deterministic(
        (eet, mix) in matrix_and_mix(),
        c in 1u64..100,
        seed in any::<u64>(),
        cov in 0.05f64..1.0,
    ) {
        let labels: Vec<String> = eet.task_labels().to_vec();
        let trace = synth_bag(c, &mix, &labels, seed).unwrap();
        let noise = NoiseSpec::multiplicative(cov, seed ^ 0x5eed).unwrap();
        let a = simulate(&eet, &trace, &noise).unwrap();
        let b = simulate(&eet, &trace, &noise).unwrap();
        prop_assert_eq!(a, b);
    }
}

fn replay_and_check(
    eet: &EetMatrix<f64>,
    trace: &WorkloadTrace,
    events: &[heet::sim::SimEvent],
    result: &heet::sim::SimResult,
) -> Result<(), TestCaseError> {
    let n = eet.machines();
    let mut free = n as i64;
    let mut queued = 0i64;
    let mut machine_of = vec![usize::MAX; trace.len()];
    let mut last_start_id: Option<usize> = None;

    let mut i = 0;
    while i < events.len() {
        let t = events[i].t;
        let mut j = i;
        while j < events.len() && events[j].t == t {
            let e = &events[j];
            match e.event {
                SimEventKind::Arrive => queued += 1,
                SimEventKind::Start => {
                    queued -= 1;
                    free -= 1;
                    machine_of[e.task_id] = e.machine.unwrap();
                    // FCFS: only the queue head is ever dispatched
                    if let Some(prev) = last_start_id {
                        prop_assert!(e.task_id > prev, "start order {prev} -> {}", e.task_id);
                    }
                    last_start_id = Some(e.task_id);
                }
                SimEventKind::Complete => free += 1,
            }
            j += 1;
        }
        // Work conservation: between timestamps no machine sits free while
        // tasks queue.
        prop_assert!(
            !(free > 0 && queued > 0),
            "at t={t}: {free} free machines with {queued} queued tasks"
        );
        i = j;
    }
    prop_assert_eq!(queued, 0);
    prop_assert_eq!(free, n as i64);

    // Busy accounting: with noise off, each machine's busy time is the sum
    // of its tasks' entries, accumulated in start order.
    let mut busy = vec![0.0f64; n];
    for e in events {
        if e.event == SimEventKind::Start {
            let row = eet
                .task_index(&trace.records()[e.task_id].task_type)
                .unwrap();
            busy[e.machine.unwrap()] += eet.entry(row, e.machine.unwrap());
        }
    }
    for (machine, expected) in result.per_machine.iter().zip(&busy) {
        prop_assert_eq!(
            machine.busy_time,
            *expected,
            "machine {}",
            machine.machine_index
        );
    }
    let total: u64 = result.per_machine.iter().map(|m| m.tasks_completed).sum();
    prop_assert_eq!(total, trace.len() as u64);
    Ok(())
}

fn catalog_strategy() -> impl Strategy<Value = MachineCatalog> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(types, m)| {
        vec((1u32..=20, vec(0.5f64..20.0, m), 0usize..=3), types).prop_filter_map(
            "at least one allocatable type",
            move |specs| {
                if specs.iter().all(|(_, _, max)| *max == 0) {
                    return None;
                }
                let machines = specs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (cost_steps, eet_column, max_count))| CatalogMachine {
                        label: format!("type-{}", i + 1),
                        // coarse price grid so cost ties actually occur
                        unit_cost: cost_steps as f64 * 0.5,
                        eet_column,
                        max_count,
                    })
                    .collect();
                MachineCatalog::new(gen_labels("T", m), machines).ok()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The optimizer agrees with a brute-force argmin over qualifying rows.
    #[test]
    fn optimizer_matches_brute_force(
        catalog in catalog_strategy(),
        raw in vec(0.01f64..1.0, 1..4),
        target_steps in 1u32..40,
    ) {
        let m = catalog.task_labels().len();
        let mix = build_mix(raw.into_iter().cycle().take(m).collect());
        let target = target_steps as f64 * 0.05;
        let rows = sweep(&catalog, &mix, target, 100).unwrap();
        prop_assert_eq!(rows.len() as u64, catalog.config_count());

        let chosen = optimize(&rows, target);

        let mut best: Option<&heet::explorer::SweepRow> = None;
        for row in &rows {
            if row.predicted_throughput < target {
                continue;
            }
            best = match best {
                None => Some(row),
                Some(cur) => {
                    let better = row.cost < cur.cost
                        || (row.cost == cur.cost
                            && (row.predicted_throughput > cur.predicted_throughput
                                || (row.predicted_throughput == cur.predicted_throughput
                                    && row.config.counts < cur.config.counts)));
                    Some(if better { row } else { cur })
                }
            };
        }
        match (chosen, best) {
            (None, None) => {}
            (Some(c), Some(b)) => prop_assert_eq!(&c.config.counts, &b.config.counts),
            (c, b) => prop_assert!(false, "optimizer {:?} vs oracle {:?}", c.map(|r| r.config.counts), b.map(|r| r.config.counts.clone())),
        }

        // meets_target is exactly the target comparison
        for row in &rows {
            prop_assert_eq!(row.meets_target, row.predicted_throughput >= target);
        }
    }

    /// Adding one machine instance never lowers predicted throughput.
    #[test]
    fn throughput_monotone_in_added_machines(
        catalog in catalog_strategy(),
        raw in vec(0.01f64..1.0, 1..4),
    ) {
        let m = catalog.task_labels().len();
        let mix = build_mix(raw.into_iter().cycle().take(m).collect());
        let rows = sweep(&catalog, &mix, 1.0, 100).unwrap();
        let theta_of = |counts: &[usize]| {
            rows.iter()
                .find(|r| r.config.counts == counts)
                .map(|r| r.predicted_throughput)
        };
        for row in &rows {
            for (t, machine) in catalog.machines().iter().enumerate() {
                if row.config.counts[t] < machine.max_count {
                    let mut grown = row.config.counts.clone();
                    grown[t] += 1;
                    let theta = theta_of(&grown).unwrap();
                    prop_assert!(theta >= row.predicted_throughput * (1.0 - 1e-12));
                }
            }
        }
    }

    /// Raising every max_count keeps the previous optimum feasible and can
    /// only lower the optimal cost.
    #[test]
    fn doubled_bounds_keep_the_optimum_qualifying(
        catalog in catalog_strategy(),
        raw in vec(0.01f64..1.0, 1..4),
        target_steps in 1u32..40,
    ) {
        let m = catalog.task_labels().len();
        let mix = build_mix(raw.into_iter().cycle().take(m).collect());
        let target = target_steps as f64 * 0.05;
        let rows = sweep(&catalog, &mix, target, 100).unwrap();
        let Some(best) = optimize(&rows, target) else { return Ok(()) };

        let doubled = MachineCatalog::new(
            catalog.task_labels().to_vec(),
            catalog
                .machines()
                .iter()
                .map(|mch| CatalogMachine { max_count: mch.max_count * 2, ..mch.clone() })
                .collect(),
        )
        .unwrap();
        let rows2 = sweep(&doubled, &mix, target, 100).unwrap();
        let old = rows2
            .iter()
            .find(|r| r.config.counts == best.config.counts)
            .expect("previous optimum still enumerated");
        prop_assert!(old.meets_target);
        let best2 = optimize(&rows2, target).expect("still solvable");
        prop_assert!(best2.cost <= best.cost);
    }

    /// Expansion duplicates the catalog columns entry for entry.
    #[test]
    fn expansion_duplicates_columns(catalog in catalog_strategy(), seed in any::<u64>()) {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let counts: Vec<usize> = catalog
            .machines()
            .iter()
            .map(|m| rng.random_range(0..=m.max_count))
            .collect();
        if counts.iter().sum::<usize>() == 0 {
            return Ok(());
        }
        let config = SystemConfig::new(counts.clone());
        let eet = expand_config(&catalog, &config).unwrap();
        prop_assert_eq!(eet.machines(), config.total());
        let mut col = 0;
        for (machine, &count) in catalog.machines().iter().zip(&counts) {
            for _ in 0..count {
                for (i, &expected) in machine.eet_column.iter().enumerate() {
                    prop_assert_eq!(eet.entry(i, col), expected);
                }
                col += 1;
            }
        }
    }
}
