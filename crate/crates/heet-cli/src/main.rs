//! `heet` — command-line front end for the heterogeneity toolkit.
//!
//! Exit codes: 0 on success, 2 on malformed input (file syntax, I/O, bad
//! flags), 3 on domain-contract violations (negative execution times,
//! unknown task types, mismatched dimensions), 1 when `validate-lemmas`
//! finds a failing check.

mod lemmas;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use heet::eet::{HeetReport, WorkloadMix};
use heet::explorer::{attach_simulation, optimize, sweep, SweepRow};
use heet::io;
use heet::sim::{simulate, simulate_traced, NoiseSpec};
use heet::workload::{ingest_profile, synth_bag, synth_poisson_trace};
use heet::{EetMatrix64, Error};

/// Seed used whenever `--seed` is absent, so every run is reproducible.
const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "heet",
    version,
    about = "Score, simulate and search heterogeneous cluster configurations"
)]
struct Cli {
    /// Optional TOML config supplying defaults for mix/target/tasks/seed/
    /// noise-cov/rate; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the HEET report of an EET matrix.
    Heet(HeetArgs),
    /// Predict makespan and throughput from an EET matrix.
    Predict(PredictArgs),
    /// Run a workload trace through the discrete-event simulator.
    Simulate(SimulateArgs),
    /// Check the four mean-aggregation identities on random instances.
    ValidateLemmas(ValidateArgs),
    /// Score every feasible configuration of a machine catalog.
    Sweep(SweepArgs),
    /// Find the cheapest configuration meeting a throughput target.
    Optimize(SweepArgs),
    /// Generate a bag-of-tasks or Poisson workload trace.
    SynthWorkload(SynthArgs),
    /// Average raw profiling samples into an EET matrix.
    IngestProfile(IngestArgs),
}

#[derive(Args)]
struct HeetArgs {
    /// EET matrix CSV (`task,<machine>,...`).
    #[arg(long, value_name = "FILE")]
    eet: PathBuf,
    /// Per-task-type workload weights, e.g. `0.5,0.3,0.2`; uniform when absent.
    #[arg(long, value_delimiter = ',', value_name = "W,..")]
    mix: Option<Vec<f64>>,
    /// Task count for the optional makespan prediction.
    #[arg(long)]
    tasks: Option<u64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    eet: PathBuf,
    #[arg(long, value_delimiter = ',', value_name = "W,..")]
    mix: Option<Vec<f64>>,
    /// Workload size the makespan prediction is for.
    #[arg(long)]
    tasks: Option<u64>,
    /// Throughput target to judge the system against (tasks/second).
    #[arg(long)]
    target: Option<f64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_name = "FILE")]
    eet: PathBuf,
    /// Workload trace (JSON lines of `{"t": .., "type": ".."}`).
    #[arg(long, value_name = "FILE")]
    trace: PathBuf,
    /// Coefficient of variation of multiplicative execution-time noise;
    /// omit for exact EET durations.
    #[arg(long, value_name = "COV")]
    noise_cov: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the full JSON result here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write a per-event log (JSON lines) to this path.
    #[arg(long, value_name = "FILE")]
    events: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Randomized instances per check.
    #[arg(long, default_value_t = 25)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Bag size for the saturation and task-mix checks.
    #[arg(long)]
    tasks: Option<u64>,
    /// Write the outcomes as JSON here as well.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Machine catalog JSON.
    #[arg(long, value_name = "FILE")]
    catalog: PathBuf,
    #[arg(long, value_delimiter = ',', value_name = "W,..")]
    mix: Option<Vec<f64>>,
    /// Throughput target (tasks/second).
    #[arg(long)]
    target: Option<f64>,
    /// Workload size used for makespan predictions (and `--simulate`).
    #[arg(long)]
    tasks: Option<u64>,
    /// Also measure each configuration with the simulator.
    #[arg(long)]
    simulate: bool,
    #[arg(long, value_name = "COV")]
    noise_cov: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Arrival process.
    #[arg(long, value_enum, default_value_t = ArrivalMode::Bag)]
    mode: ArrivalMode,
    #[arg(long)]
    tasks: Option<u64>,
    #[arg(long, value_delimiter = ',', value_name = "W,..")]
    mix: Option<Vec<f64>>,
    /// Task type labels, e.g. `img,ocr,asr`; alternatively take them from
    /// an EET file via --eet.
    #[arg(long, value_delimiter = ',', value_name = "L,..")]
    labels: Option<Vec<String>>,
    /// EET matrix to borrow task labels from.
    #[arg(long, value_name = "FILE")]
    eet: Option<PathBuf>,
    /// Mean arrival rate for Poisson traces (tasks/second).
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArrivalMode {
    /// Every task available at time zero.
    Bag,
    /// Exponential inter-arrival gaps.
    Poisson,
}

#[derive(Args)]
struct IngestArgs {
    /// Profile samples CSV (`task,machine,sample_seconds`).
    #[arg(long, value_name = "FILE")]
    profile: PathBuf,
    /// Write the EET matrix CSV here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Optional defaults, overridden by explicit flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    mix: Option<Vec<f64>>,
    target: Option<f64>,
    tasks: Option<u64>,
    seed: Option<u64>,
    noise_cov: Option<f64>,
    rate: Option<f64>,
}

impl FileConfig {
    fn load(path: Option<&PathBuf>) -> Result<Self, Error> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].lines().count() as u64),
            message: e.message().to_string(),
        })
    }
}

/// The `heet`/`predict` report document: the full pipeline report plus the
/// optional workload-specific prediction.
#[derive(Serialize, Deserialize)]
struct ReportDocument {
    #[serde(flatten)]
    report: HeetReport<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tasks: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_makespan: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_throughput: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meets_target: Option<bool>,
}

#[derive(Serialize)]
struct OptimizeDocument {
    target_throughput: f64,
    machine_labels: Vec<String>,
    optimum: Option<SweepRow>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_parse() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let defaults = FileConfig::load(cli.config.as_ref())?;
    match cli.command {
        Command::Heet(args) => cmd_heet(args, &defaults),
        Command::Predict(args) => cmd_predict(args, &defaults),
        Command::Simulate(args) => cmd_simulate(args, &defaults),
        Command::ValidateLemmas(args) => cmd_validate_lemmas(args, &defaults),
        Command::Sweep(args) => cmd_sweep(args, &defaults),
        Command::Optimize(args) => cmd_optimize(args, &defaults),
        Command::SynthWorkload(args) => cmd_synth_workload(args, &defaults),
        Command::IngestProfile(args) => cmd_ingest_profile(args),
    }
}

fn resolve_mix(
    flag: Option<Vec<f64>>,
    defaults: &FileConfig,
    task_types: usize,
) -> Result<WorkloadMix<f64>, Error> {
    match flag.or_else(|| defaults.mix.clone()) {
        Some(weights) => WorkloadMix::new(weights),
        None => WorkloadMix::uniform(task_types),
    }
}

fn resolve_seed(flag: Option<u64>, defaults: &FileConfig) -> u64 {
    flag.or(defaults.seed).unwrap_or(DEFAULT_SEED)
}

fn resolve_noise(flag: Option<f64>, defaults: &FileConfig, seed: u64) -> Result<NoiseSpec, Error> {
    // zero cov degenerates to exact durations; negatives are rejected by
    // the noise validation
    let cov = flag.or(defaults.noise_cov).unwrap_or(0.0);
    if cov == 0.0 {
        Ok(NoiseSpec::none())
    } else {
        NoiseSpec::multiplicative(cov, seed)
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => io::write_json_pretty(value, path),
        None => {
            let text = serde_json::to_string_pretty(value)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn build_report_document(
    eet: &EetMatrix64,
    mix: &WorkloadMix<f64>,
    tasks: Option<u64>,
    target: Option<f64>,
) -> Result<ReportDocument, Error> {
    let report = eet.heet_score(mix)?;
    let predicted_makespan = tasks
        .map(|c| report.predict_makespan(c, eet.machines()))
        .transpose()?;
    let meets_target = target.map(|t| report.predicted_throughput >= t);
    Ok(ReportDocument {
        report,
        tasks,
        predicted_makespan,
        target_throughput: target,
        meets_target,
    })
}

fn cmd_heet(args: HeetArgs, defaults: &FileConfig) -> Result<ExitCode, Error> {
    let eet = io::read_eet_csv(&args.eet)?;
    let mix = resolve_mix(args.mix, defaults, eet.tasks())?;
    let tasks = args.tasks.or(defaults.tasks);
    let document = build_report_document(&eet, &mix, tasks, None)?;
    if args.out.is_some() {
        println!("heet: {} s", document.report.heet);
        println!("s_heet: {} s", document.report.s_heet);
        println!(
            "throughput: {} tasks/s",
            document.report.predicted_throughput
        );
        if let Some(tau) = document.predicted_makespan {
            println!("makespan({}): {} s", tasks.unwrap(), tau);
        }
    }
    emit_json(&document, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_predict(args: PredictArgs, defaults: &FileConfig) -> Result<ExitCode, Error> {
    let eet = io::read_eet_csv(&args.eet)?;
    let mix = resolve_mix(args.mix, defaults, eet.tasks())?;
    let tasks = args.tasks.or(defaults.tasks);
    let target = args.target.or(defaults.target);
    let document = build_report_document(&eet, &mix, tasks, target)?;
    emit_json(&document, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs, defaults: &FileConfig) -> Result<ExitCode, Error> {
    let eet = io::read_eet_csv(&args.eet)?;
    let trace = io::read_trace_jsonl(&args.trace)?;
    let seed = resolve_seed(args.seed, defaults);
    let noise = resolve_noise(args.noise_cov, defaults, seed)?;

    let result = if let Some(events_path) = &args.events {
        let (result, events) = simulate_traced(&eet, &trace, &noise)?;
        io::write_events_jsonl(&events, events_path)?;
        result
    } else {
        simulate(&eet, &trace, &noise)?
    };

    println!("makespan: {} s", result.makespan);
    println!("throughput: {} tasks/s", result.throughput);
    emit_json(&result, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate_lemmas(args: ValidateArgs, defaults: &FileConfig) -> Result<ExitCode, Error> {
    let seed = resolve_seed(args.seed, defaults);
    let tasks = args.tasks.or(defaults.tasks).unwrap_or(1000);
    let outcomes = lemmas::run_all(args.trials, seed, tasks);

    for outcome in &outcomes {
        println!(
            "{:<38} {:>6}/{:<6} ok  worst gap {:.3e}  [{}]  {}",
            outcome.name,
            outcome.trials - outcome.failures,
            outcome.trials,
            outcome.worst_gap,
            outcome.tolerance,
            if outcome.passed() { "PASS" } else { "FAIL" },
        );
        if let Some(example) = &outcome.example {
            println!("    e.g. {example}");
        }
    }
    if let Some(out) = &args.out {
        io::write_json_pretty(&outcomes, out)?;
    }
    if outcomes.iter().all(|o| o.passed()) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn sweep_rows(
    args: &SweepArgs,
    defaults: &FileConfig,
) -> Result<(Vec<SweepRow>, Vec<String>, f64), Error> {
    let catalog = io::read_catalog_json(&args.catalog)?;
    let mix = resolve_mix(args.mix.clone(), defaults, catalog.task_labels().len())?;
    let target = args
        .target
        .or(defaults.target)
        .ok_or_else(|| Error::InvalidSweep("a throughput --target is required".into()))?;
    let tasks = args.tasks.or(defaults.tasks).unwrap_or(1000);
    let mut rows = sweep(&catalog, &mix, target, tasks)?;
    if args.simulate {
        let seed = resolve_seed(args.seed, defaults);
        let noise = resolve_noise(args.noise_cov, defaults, seed)?;
        attach_simulation(&catalog, &mut rows, &mix, tasks, seed, &noise)?;
    }
    Ok((rows, catalog.machine_labels(), target))
}

fn cmd_sweep(args: SweepArgs, defaults: &FileConfig) -> Result<ExitCode, Error> {
    let (rows, machine_labels, target) = sweep_rows(&args, defaults)?;
    let qualifying = rows.iter().filter(|r| r.meets_target).count();
    match &args.out {
        Some(path) => {
            io::write_sweep_csv(&rows, &machine_labels, path)?;
            println!(
                "wrote {} configurations ({qualifying} meet target {target} tasks/s) to {}",
                rows.len(),
                path.display()
            );
        }
        None => {
            let stdout = std::io::stdout();
            io::write_sweep(&rows, &machine_labels, stdout.lock())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(args: SweepArgs, defaults: &FileConfig) -> Result<ExitCode, Error> {
    let out = args.out.clone();
    let (rows, machine_labels, target) = sweep_rows(&args, defaults)?;
    let document = OptimizeDocument {
        target_throughput: target,
        machine_labels,
        optimum: optimize(&rows, target),
    };
    match &document.optimum {
        Some(row) => println!(
            "optimum: counts {:?}, cost {}, predicted throughput {} tasks/s",
            row.config.counts, row.cost, row.predicted_throughput
        ),
        None => println!("optimum: none (target {target} tasks/s is unreachable)"),
    }
    emit_json(&document, out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth_workload(args: SynthArgs, defaults: &FileConfig) -> Result<ExitCode, Error> {
    let labels: Vec<String> = match (&args.labels, &args.eet) {
        (Some(labels), _) => labels.clone(),
        (None, Some(path)) => io::read_eet_csv(path)?.task_labels().to_vec(),
        (None, None) => {
            return Err(Error::InvalidTrace(
                "task labels required: pass --labels or --eet".into(),
            ))
        }
    };
    let mix = resolve_mix(args.mix, defaults, labels.len())?;
    let tasks = args.tasks.or(defaults.tasks).unwrap_or(1000);
    let seed = resolve_seed(args.seed, defaults);
    let trace = match args.mode {
        ArrivalMode::Bag => synth_bag(tasks, &mix, &labels, seed)?,
        ArrivalMode::Poisson => {
            let rate = args.rate.or(defaults.rate).ok_or_else(|| {
                Error::InvalidTrace("--rate is required for poisson arrivals".into())
            })?;
            synth_poisson_trace(rate, tasks, &mix, &labels, seed)?
        }
    };
    match &args.out {
        Some(path) => {
            io::write_trace_jsonl(&trace, path)?;
            println!("wrote {} tasks to {}", trace.len(), path.display());
        }
        None => {
            for record in trace.records() {
                println!(
                    "{}",
                    serde_json::to_string(record)
                        .map_err(|e| Error::Io(std::io::Error::other(e)))?
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_ingest_profile(args: IngestArgs) -> Result<ExitCode, Error> {
    let samples = io::read_profile_csv(&args.profile)?;
    let eet = ingest_profile(&samples)?;
    match &args.out {
        Some(path) => {
            io::write_eet_csv(&eet, path)?;
            println!(
                "wrote {} task types x {} machines to {}",
                eet.tasks(),
                eet.machines(),
                path.display()
            );
        }
        None => {
            print!("task");
            for label in eet.machine_labels() {
                print!(",{label}");
            }
            println!();
            for (i, label) in eet.task_labels().iter().enumerate() {
                print!("{label}");
                for v in eet.row(i) {
                    print!(",{v}");
                }
                println!();
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
