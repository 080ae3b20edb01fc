//! File formats: EET CSV, trace JSON-lines, profile CSV, catalog JSON,
//! sweep CSV, and event-log JSON-lines.
//!
//! EET CSV: header `task,<machine label>,...`, one row per task type,
//! execution times in seconds as decimal numbers:
//!
//! ```csv
//! task,t2.large,g4dn.xlarge
//! image-classification,4.0,2.0
//! speech-recognition,8.0,4.0
//! ```
//!
//! Traces are JSON-lines of `{"t": <seconds>, "type": "<task label>"}`.
//! Profile samples are CSV rows `task,machine,sample_seconds`. Catalogs are
//! a single JSON object. Sweep output is CSV with one row per
//! configuration.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::eet::EetMatrix;
use crate::error::Error;
use crate::explorer::{MachineCatalog, SweepRow};
use crate::sim::SimEvent;
use crate::workload::{ProfileSamples, TraceRecord, WorkloadTrace};
use crate::Result;

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads an EET matrix from `task,<machine>,...` CSV.
pub fn read_eet_csv(path: impl AsRef<Path>) -> Result<EetMatrix<f64>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_error(path, 1, e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let mut fields = headers.iter();
    match fields.next() {
        Some("task") => {}
        other => {
            return Err(parse_error(
                path,
                1,
                format!("first header field must be \"task\", got {other:?}"),
            ))
        }
    }
    let machine_labels: Vec<String> = fields.map(str::to_owned).collect();
    if machine_labels.is_empty() {
        return Err(parse_error(path, 1, "no machine columns"));
    }

    let mut task_labels = Vec::new();
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        if record.len() != machine_labels.len() + 1 {
            return Err(parse_error(
                path,
                line,
                format!(
                    "expected {} fields, got {}",
                    machine_labels.len() + 1,
                    record.len()
                ),
            ));
        }
        task_labels.push(record[0].to_owned());
        for field in record.iter().skip(1) {
            let value: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, format!("invalid number {field:?}")))?;
            entries.push(value);
        }
    }
    EetMatrix::new(task_labels, machine_labels, entries)
}

/// Writes a matrix in the same CSV layout `read_eet_csv` accepts.
pub fn write_eet_csv(eet: &EetMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(csv_io)?;
    let mut header = vec!["task".to_owned()];
    header.extend_from_slice(eet.machine_labels());
    writer.write_record(&header).map_err(csv_io)?;
    for (i, label) in eet.task_labels().iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(eet.row(i).iter().map(|e| format_seconds(*e)));
        writer.write_record(&row).map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn format_seconds(v: f64) -> String {
    // shortest representation that round-trips
    let mut buf = ryu_format(v);
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_format(v: f64) -> String {
    // serde_json's float formatting is shortest-roundtrip
    serde_json::to_string(&v).expect("finite float")
}

/// Reads a workload trace from JSON-lines.
pub fn read_trace_jsonl(path: impl AsRef<Path>) -> Result<WorkloadTrace> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| parse_error(path, i as u64 + 1, e.to_string()))?;
        records.push(record);
    }
    WorkloadTrace::new(records)
}

/// Writes a workload trace as JSON-lines.
pub fn write_trace_jsonl(trace: &WorkloadTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path.as_ref())?);
    for record in trace.records() {
        serde_json::to_writer(&mut writer, record).map_err(json_io)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

fn json_io(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads `task,machine,sample_seconds` CSV into profile samples.
pub fn read_profile_csv(path: impl AsRef<Path>) -> Result<ProfileSamples> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    let expected = ["task", "machine", "sample_seconds"];
    if headers.iter().ne(expected) {
        return Err(parse_error(
            path,
            1,
            format!(
                "expected header {expected:?}, got {:?}",
                headers.iter().collect::<Vec<_>>()
            ),
        ));
    }
    let mut samples = ProfileSamples::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        if record.len() != 3 {
            return Err(parse_error(
                path,
                line,
                format!("expected 3 fields, got {}", record.len()),
            ));
        }
        let seconds: f64 = record[2]
            .parse()
            .map_err(|_| parse_error(path, line, format!("invalid number {:?}", &record[2])))?;
        samples.push(&record[0], &record[1], seconds)?;
    }
    Ok(samples)
}

/// Reads a machine catalog from its JSON form.
pub fn read_catalog_json(path: impl AsRef<Path>) -> Result<MachineCatalog> {
    let path = path.as_ref();
    let mut contents = String::new();
    File::open(path)?.read_to_string(&mut contents)?;
    serde_json::from_str(&contents).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => {
            // shape was valid JSON but violated the catalog invariants
            Error::InvalidCatalog(e.to_string())
        }
        _ => parse_error(path, e.line() as u64, e.to_string()),
    })
}

/// Writes sweep rows as CSV: one count column per catalog machine type,
/// then `n,heet,s_heet,theta,tau,cost,meets_target` and, when simulation
/// was attached, `sim_makespan,sim_throughput`.
pub fn write_sweep_csv(
    rows: &[SweepRow],
    machine_labels: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    write_sweep(rows, machine_labels, File::create(path.as_ref())?)
}

/// [`write_sweep_csv`] into any writer (e.g. standard output).
pub fn write_sweep(rows: &[SweepRow], machine_labels: &[String], out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let with_sim = rows.iter().any(|r| r.sim_makespan.is_some());
    let mut header: Vec<String> = machine_labels.to_vec();
    header.extend(
        [
            "n",
            "heet",
            "s_heet",
            "theta",
            "tau",
            "cost",
            "meets_target",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    if with_sim {
        header.push("sim_makespan".into());
        header.push("sim_throughput".into());
    }
    writer.write_record(&header).map_err(csv_io)?;
    for row in rows {
        let mut fields: Vec<String> = row.config.counts.iter().map(usize::to_string).collect();
        fields.push(row.n.to_string());
        fields.push(format_seconds(row.heet));
        fields.push(format_seconds(row.s_heet));
        fields.push(format_seconds(row.predicted_throughput));
        fields.push(format_seconds(row.predicted_makespan));
        fields.push(format_seconds(row.cost));
        fields.push(row.meets_target.to_string());
        if with_sim {
            fields.push(row.sim_makespan.map_or_else(String::new, format_seconds));
            fields.push(row.sim_throughput.map_or_else(String::new, format_seconds));
        }
        writer.write_record(&fields).map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the per-event simulation log as JSON-lines.
pub fn write_events_jsonl(events: &[SimEvent], path: impl AsRef<Path>) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path.as_ref())?);
    for event in events {
        serde_json::to_writer(&mut writer, event).map_err(json_io)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Pretty-prints any serializable report to a file.
pub fn write_json_pretty<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path.as_ref())?);
    serde_json::to_writer_pretty(&mut writer, value).map_err(json_io)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}
