//! CSV and JSON output of a report.
//!
//! Floats use Rust's shortest round-trip formatting and lines end in `\n`,
//! so identical runs produce byte-identical files on every platform.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::report::{Report, SYSTEMS};

fn writer(path: &Path) -> io::Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn day(tick: usize, tick_per_day: u64) -> String {
    format!("{}", tick as f64 / tick_per_day as f64)
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Long-format rows `tick,day,scope,metric,value` for every series.
pub fn metrics_csv(report: &Report, variant: &str, path: &Path) -> io::Result<()> {
    let run = report
        .get(variant)
        .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, variant.to_string()))?;
    let mut w = writer(path)?;
    w.write_record(["tick", "day", "scope", "metric", "value"])?;
    for t in 0..run.series.ticks() {
        let (tick, d) = (t.to_string(), day(t, report.tick_per_day));
        for (scope, metric, values) in run.series.iter() {
            w.write_record([tick.as_str(), &d, scope, metric, &num(values[t])])?;
        }
    }
    w.flush()
}

/// Service levels, city-wide and per district.
pub fn sl_csv(report: &Report, variant: &str, path: &Path) -> io::Result<()> {
    let run = report
        .get(variant)
        .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, variant.to_string()))?;
    let mut w = writer(path)?;
    w.write_record(["tick", "day", "scope", "metric", "value"])?;
    let n = run.deaths.len();
    for t in 0..n {
        let (tick, d) = (t.to_string(), day(t, report.tick_per_day));
        for (scope, values) in &run.sl {
            w.write_record([tick.as_str(), &d, scope, "sl", &num(values[t])])?;
        }
        w.write_record([tick.as_str(), &d, "city", "deaths", &num(run.deaths[t])])?;
    }
    w.flush()
}

/// One column of cumulative deaths per variant.
pub fn deaths_csv(report: &Report, path: &Path) -> io::Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["tick".to_string(), "day".to_string()];
    header.extend(report.runs.iter().map(|r| r.name.clone()));
    w.write_record(&header)?;
    let n = report.runs.first().map_or(0, |r| r.deaths.len());
    for t in 0..n {
        let mut row = vec![t.to_string(), day(t, report.tick_per_day)];
        row.extend(report.runs.iter().map(|r| num(r.deaths[t])));
        w.write_record(&row)?;
    }
    w.flush()
}

/// Wide city-level table for plotting: one row per variant and tick.
pub fn plot_csv(report: &Report, path: &Path) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["variant", "tick", "day", "sl_ict", "sl_healthcare", "sl_mobility", "deaths"])?;
    for r in &report.runs {
        for t in 0..r.deaths.len() {
            let mut row = vec![r.name.clone(), t.to_string(), day(t, report.tick_per_day)];
            for s in SYSTEMS {
                row.push(r.sl(s).get(t).map_or(String::new(), |v| num(*v)));
            }
            row.push(num(r.deaths[t]));
            w.write_record(&row)?;
        }
    }
    w.flush()
}

fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    seed: u64,
    tick_per_day: u64,
    horizon_ticks: u64,
    variants: Vec<crate::report::VariantSummary>,
    hazards: Vec<(String, Vec<(u64, String)>)>,
}

/// Writes every output file except the manifest. Returns the file names,
/// sorted.
pub fn write_report(report: &Report, dir: &Path) -> io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for r in &report.runs {
        let m = format!("{}_metrics.csv", r.name);
        metrics_csv(report, &r.name, &dir.join(&m))?;
        let s = format!("{}_sl.csv", r.name);
        sl_csv(report, &r.name, &dir.join(&s))?;
        files.push(m);
        files.push(s);
    }
    deaths_csv(report, &dir.join("deaths.csv"))?;
    plot_csv(report, &dir.join("plot.csv"))?;
    let summary = Summary {
        scenario: &report.scenario,
        seed: report.seed,
        tick_per_day: report.tick_per_day,
        horizon_ticks: report.horizon,
        variants: report.summaries(),
        hazards: report
            .runs
            .iter()
            .map(|r| (r.name.clone(), r.applied.clone()))
            .collect(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    files.extend(["deaths.csv", "plot.csv", "summary.json"].map(String::from));
    files.sort();
    Ok(files)
}

/// Run provenance, written next to the outputs.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub config_sha256: String,
    pub seed: u64,
    /// `file`, `env` or `flag`.
    pub seed_source: String,
    pub version: String,
    pub wall_seconds: f64,
    pub variants: Vec<String>,
    pub files: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `manifest.json`, hashing every listed output file.
pub fn write_manifest(
    dir: &Path,
    mut manifest: Manifest,
    files: &[String],
) -> io::Result<()> {
    manifest.files = files
        .iter()
        .map(|f| Ok((f.clone(), sha256_hex(&fs::read(dir.join(f))?))))
        .collect::<io::Result<_>>()?;
    write_json(&dir.join("manifest.json"), &manifest)
}
