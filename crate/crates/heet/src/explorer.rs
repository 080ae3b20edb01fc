//! Configuration search over a priced machine catalog.
//!
//! A catalog lists the machine types available to a deployment: a label, an
//! hourly unit cost, the per-task-type EET column, and how many instances
//! may be allocated. A system configuration picks a count for each type;
//! expanding it duplicates the catalog columns into a concrete EET matrix.
//! [`sweep`] scores every feasible configuration with the HEET pipeline and
//! [`optimize`] returns the cheapest one whose predicted throughput meets a
//! target.

use serde::{Deserialize, Serialize};

use crate::eet::{EetMatrix, WorkloadMix};
use crate::error::Error;
use crate::sim::{simulate, NoiseSpec};
use crate::workload::synth_bag;
use crate::Result;

/// One allocatable machine type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogMachine {
    pub label: String,
    /// Steady-state price in currency per hour.
    pub unit_cost: f64,
    /// Expected execution time of each task type on this machine (seconds),
    /// in the order of the catalog's task labels.
    pub eet_column: Vec<f64>,
    /// Most instances of this type a configuration may allocate.
    pub max_count: usize,
}

/// The machine types a deployment can be assembled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogRepr", into = "CatalogRepr")]
pub struct MachineCatalog {
    task_labels: Vec<String>,
    machines: Vec<CatalogMachine>,
}

/// Serialized form, revalidated on the way in.
#[derive(Serialize, Deserialize)]
struct CatalogRepr {
    task_labels: Vec<String>,
    machines: Vec<CatalogMachine>,
}

impl TryFrom<CatalogRepr> for MachineCatalog {
    type Error = Error;

    fn try_from(repr: CatalogRepr) -> Result<Self> {
        MachineCatalog::new(repr.task_labels, repr.machines)
    }
}

impl From<MachineCatalog> for CatalogRepr {
    fn from(catalog: MachineCatalog) -> CatalogRepr {
        CatalogRepr {
            task_labels: catalog.task_labels,
            machines: catalog.machines,
        }
    }
}

impl MachineCatalog {
    pub fn new(task_labels: Vec<String>, machines: Vec<CatalogMachine>) -> Result<Self> {
        if task_labels.is_empty() {
            return Err(Error::InvalidCatalog("no task labels".into()));
        }
        if machines.is_empty() {
            return Err(Error::InvalidCatalog("no machine types".into()));
        }
        for (i, label) in task_labels.iter().enumerate() {
            if label.is_empty() || task_labels[..i].contains(label) {
                return Err(Error::InvalidCatalog(format!(
                    "empty or duplicate task label {label:?}"
                )));
            }
        }
        for (i, machine) in machines.iter().enumerate() {
            if machine.label.is_empty()
                || machines[..i]
                    .iter()
                    .any(|other| other.label == machine.label)
            {
                return Err(Error::InvalidCatalog(format!(
                    "empty or duplicate machine label {:?}",
                    machine.label
                )));
            }
            if machine.eet_column.len() != task_labels.len() {
                return Err(Error::InvalidCatalog(format!(
                    "machine {:?} has {} execution times for {} task types",
                    machine.label,
                    machine.eet_column.len(),
                    task_labels.len()
                )));
            }
            if machine
                .eet_column
                .iter()
                .any(|&e| !(e.is_finite() && e > 0.0))
            {
                return Err(Error::InvalidCatalog(format!(
                    "machine {:?} has a non-positive execution time",
                    machine.label
                )));
            }
            if !(machine.unit_cost.is_finite() && machine.unit_cost >= 0.0) {
                return Err(Error::InvalidCatalog(format!(
                    "machine {:?} has unit cost {}",
                    machine.label, machine.unit_cost
                )));
            }
        }
        if machines.iter().all(|m| m.max_count == 0) {
            return Err(Error::InvalidCatalog(
                "every machine type has max_count 0".into(),
            ));
        }
        Ok(Self {
            task_labels,
            machines,
        })
    }

    pub fn task_labels(&self) -> &[String] {
        &self.task_labels
    }

    pub fn machines(&self) -> &[CatalogMachine] {
        &self.machines
    }

    pub fn machine_labels(&self) -> Vec<String> {
        self.machines.iter().map(|m| m.label.clone()).collect()
    }

    /// Number of feasible configurations: the full count grid minus the
    /// empty one.
    pub fn config_count(&self) -> u64 {
        self.machines
            .iter()
            .map(|m| m.max_count as u64 + 1)
            .product::<u64>()
            - 1
    }
}

/// Instance counts per catalog type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub counts: Vec<usize>,
}

impl SystemConfig {
    pub fn new(counts: Vec<usize>) -> Self {
        SystemConfig { counts }
    }

    /// Total number of machine instances.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn validate_against(&self, catalog: &MachineCatalog) -> Result<()> {
        if self.counts.len() != catalog.machines().len() {
            return Err(Error::InvalidConfig(format!(
                "{} counts for {} machine types",
                self.counts.len(),
                catalog.machines().len()
            )));
        }
        for (count, machine) in self.counts.iter().zip(catalog.machines()) {
            if *count > machine.max_count {
                return Err(Error::InvalidConfig(format!(
                    "{} instances of {:?} exceed max_count {}",
                    count, machine.label, machine.max_count
                )));
            }
        }
        if self.total() == 0 {
            return Err(Error::InvalidConfig("no machine instances".into()));
        }
        Ok(())
    }
}

/// Builds the concrete EET matrix of a configuration by duplicating catalog
/// columns, one column per instance. Repeated instances get `#k` suffixes.
pub fn expand_config(catalog: &MachineCatalog, config: &SystemConfig) -> Result<EetMatrix<f64>> {
    config.validate_against(catalog)?;
    let m = catalog.task_labels().len();
    let mut labels = Vec::with_capacity(config.total());
    let mut columns: Vec<&[f64]> = Vec::with_capacity(config.total());
    for (machine, &count) in catalog.machines().iter().zip(&config.counts) {
        for k in 1..=count {
            if count == 1 {
                labels.push(machine.label.clone());
            } else {
                labels.push(format!("{}#{k}", machine.label));
            }
            columns.push(&machine.eet_column);
        }
    }
    let n = columns.len();
    let mut entries = Vec::with_capacity(m * n);
    for i in 0..m {
        for col in &columns {
            entries.push(col[i]);
        }
    }
    EetMatrix::new(catalog.task_labels().to_vec(), labels, entries)
}

/// One scored configuration of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config: SystemConfig,
    /// Total instance count.
    pub n: usize,
    pub heet: f64,
    pub s_heet: f64,
    /// `n / HEET`, tasks per second.
    pub predicted_throughput: f64,
    /// `(c / n) * HEET` for the sweep's task count, seconds.
    pub predicted_makespan: f64,
    /// Currency per hour.
    pub cost: f64,
    /// Whether `predicted_throughput >= target`.
    pub meets_target: bool,
    /// Simulated makespan, when the sweep was run with simulation attached.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sim_makespan: Option<f64>,
    /// Simulated throughput, when available.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sim_throughput: Option<f64>,
}

/// Scores every feasible configuration (counts `0..=max_count` per type,
/// excluding the empty one) in lexicographic count order.
pub fn sweep(
    catalog: &MachineCatalog,
    mix: &WorkloadMix<f64>,
    target_throughput: f64,
    tasks: u64,
) -> Result<Vec<SweepRow>> {
    if !(target_throughput.is_finite() && target_throughput > 0.0) {
        return Err(Error::InvalidSweep(format!(
            "target throughput {target_throughput} must be positive"
        )));
    }
    if tasks == 0 {
        return Err(Error::InvalidSweep("task count must be at least 1".into()));
    }
    if mix.len() != catalog.task_labels().len() {
        return Err(Error::InvalidMix(format!(
            "mix has {} weights for {} task types",
            mix.len(),
            catalog.task_labels().len()
        )));
    }

    let maxes: Vec<usize> = catalog.machines().iter().map(|m| m.max_count).collect();
    let mut counts = vec![0usize; maxes.len()];
    let mut rows = Vec::with_capacity(catalog.config_count() as usize);
    loop {
        // advance the odometer; the all-zero configuration is skipped below
        let mut pos = counts.len();
        loop {
            if pos == 0 {
                return Ok(rows);
            }
            pos -= 1;
            if counts[pos] < maxes[pos] {
                counts[pos] += 1;
                break;
            }
            counts[pos] = 0;
        }

        let config = SystemConfig::new(counts.clone());
        let eet = expand_config(catalog, &config)?;
        let report = eet.heet_score(mix)?;
        let n = config.total();
        let cost = catalog
            .machines()
            .iter()
            .zip(&config.counts)
            .map(|(m, &k)| m.unit_cost * k as f64)
            .sum();
        let predicted_throughput = report.predict_throughput(n)?;
        rows.push(SweepRow {
            n,
            heet: report.heet,
            s_heet: report.s_heet,
            predicted_throughput,
            predicted_makespan: report.predict_makespan(tasks, n)?,
            cost,
            meets_target: predicted_throughput >= target_throughput,
            sim_makespan: None,
            sim_throughput: None,
            config,
        });
    }
}

/// Fills the `sim_*` fields of each row by running a `tasks`-sized bag with
/// the given mix through the simulator. Every row uses the same seed, so all
/// configurations face the same task ordering.
pub fn attach_simulation(
    catalog: &MachineCatalog,
    rows: &mut [SweepRow],
    mix: &WorkloadMix<f64>,
    tasks: u64,
    seed: u64,
    noise: &NoiseSpec,
) -> Result<()> {
    let trace = synth_bag(tasks, mix, catalog.task_labels(), seed)?;
    for row in rows {
        let eet = expand_config(catalog, &row.config)?;
        let result = simulate(&eet, &trace, noise)?;
        row.sim_makespan = Some(result.makespan);
        row.sim_throughput = Some(result.throughput);
    }
    Ok(())
}

/// The cheapest row whose predicted throughput meets the target; ties break
/// to higher predicted throughput, then lexicographically smaller counts.
/// `None` when no configuration qualifies.
pub fn optimize(rows: &[SweepRow], target_throughput: f64) -> Option<SweepRow> {
    rows.iter()
        .filter(|row| row.predicted_throughput >= target_throughput)
        .min_by(|a, b| {
            a.cost
                .total_cmp(&b.cost)
                .then(b.predicted_throughput.total_cmp(&a.predicted_throughput))
                .then(a.config.counts.cmp(&b.config.counts))
        })
        .cloned()
}
