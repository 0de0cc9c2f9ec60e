//! Paired runs of scenario variants and their service-level summaries.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::metrics::{mobility_levels, ObservationPolicy, Series, CITY};
use crate::invariants::Invariants;
use crate::run::{run_with, RunError, RunResult};
use crate::scenario::{prepare, Prepared, ScenarioConfig, ScenarioError, Variant};

pub const SYSTEMS: [&str; 3] = ["ict", "healthcare", "mobility"];

/// Service levels below this count as degraded.
pub const FULL_SERVICE: f64 = 1.0 - 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("variant `{variant}`: {source}")]
    Run { variant: String, source: Box<RunError> },
    #[error("variant `{variant}`: {message}")]
    Metrics { variant: String, message: String },
}

impl ReportError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Scenario(e) => e.exit_code(),
            _ => 4,
        }
    }
}

/// One finished variant.
pub struct VariantRun {
    pub name: String,
    /// Whether the variant was asked for, as opposed to added as reference.
    pub requested: bool,
    pub series: Series,
    pub applied: Vec<(u64, String)>,
    /// Service level per tick, keyed `system` or `system.district`.
    pub sl: BTreeMap<String, Vec<f64>>,
    pub deaths: Vec<f64>,
    /// Ticks where no mobility station had a usable baseline.
    pub flagged: Vec<usize>,
    /// Ticks that passed the invariant checks.
    pub checked_ticks: u64,
}

impl VariantRun {
    pub fn sl(&self, system: &str) -> &[f64] {
        self.sl.get(system).map_or(&[], Vec::as_slice)
    }

    pub fn final_deaths(&self) -> f64 {
        self.deaths.last().copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlSummary {
    pub min: f64,
    pub min_tick: usize,
    pub mean: f64,
    pub ticks_below: usize,
    pub first_below: Option<usize>,
    pub last_below: Option<usize>,
    /// First tick back at full service after the last degraded one.
    pub recovered_at: Option<usize>,
}

pub fn summarize(values: &[f64]) -> SlSummary {
    let mut min = f64::INFINITY;
    let mut min_tick = 0;
    for (t, v) in values.iter().enumerate() {
        if *v < min {
            min = *v;
            min_tick = t;
        }
    }
    let below: Vec<usize> = (0..values.len()).filter(|&t| values[t] < FULL_SERVICE).collect();
    let last_below = below.last().copied();
    SlSummary {
        min: if values.is_empty() { 1.0 } else { min },
        min_tick,
        mean: values.iter().sum::<f64>() / values.len().max(1) as f64,
        ticks_below: below.len(),
        first_below: below.first().copied(),
        last_below,
        recovered_at: last_below.map(|t| t + 1).filter(|t| *t < values.len()),
    }
}

/// Degraded stretches `(first, last)` of a service-level series. Stretches
/// separated by at most `merge` full-service ticks count as one.
pub fn dips(values: &[f64], merge: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (t, v) in values.iter().enumerate() {
        if *v >= FULL_SERVICE {
            continue;
        }
        match out.last_mut() {
            Some(last) if t - last.1 - 1 <= merge => last.1 = t,
            _ => out.push((t, t)),
        }
    }
    out
}

/// Number of peaks that rise and fall by more than `prominence`.
pub fn count_peaks(values: &[f64], prominence: f64) -> usize {
    let Some(&first) = values.first() else {
        return 0;
    };
    let (mut peaks, mut rising, mut hi, mut lo) = (0, true, first, first);
    for &x in values {
        if rising {
            if x > hi {
                hi = x;
            } else if hi - x > prominence && hi - lo > prominence {
                peaks += 1;
                rising = false;
                lo = x;
            }
        } else if x < lo {
            lo = x;
        } else if x - lo > prominence {
            rising = true;
            hi = x;
        }
    }
    if rising && hi - lo > prominence {
        peaks += 1;
    }
    peaks
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariantSummary {
    pub variant: String,
    pub final_deaths: f64,
    pub systems: BTreeMap<String, SlSummary>,
    /// Difference to the risk variant, when one was run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vs_risk: Option<Delta>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Delta {
    pub deaths: f64,
    pub ticks_below: BTreeMap<String, i64>,
    pub mean_sl: BTreeMap<String, f64>,
}

pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub tick_per_day: u64,
    pub horizon: u64,
    pub runs: Vec<VariantRun>,
}

impl Report {
    pub fn get(&self, name: &str) -> Option<&VariantRun> {
        self.runs.iter().find(|r| r.name == name)
    }

    pub fn summaries(&self) -> Vec<VariantSummary> {
        let risk = self.get(crate::scenario::RISK);
        self.runs
            .iter()
            .map(|r| {
                let systems: BTreeMap<String, SlSummary> = SYSTEMS
                    .iter()
                    .map(|s| (s.to_string(), summarize(r.sl(s))))
                    .collect();
                let vs_risk = risk.filter(|k| k.name != r.name).map(|k| Delta {
                    deaths: r.final_deaths() - k.final_deaths(),
                    ticks_below: SYSTEMS
                        .iter()
                        .map(|s| {
                            let d = summarize(r.sl(s)).ticks_below as i64
                                - summarize(k.sl(s)).ticks_below as i64;
                            (s.to_string(), d)
                        })
                        .collect(),
                    mean_sl: SYSTEMS
                        .iter()
                        .map(|s| (s.to_string(), summarize(r.sl(s)).mean - summarize(k.sl(s)).mean))
                        .collect(),
                });
                VariantSummary {
                    variant: r.name.clone(),
                    final_deaths: r.final_deaths(),
                    systems,
                    vs_risk,
                }
            })
            .collect()
    }
}

/// Runs one variant with the invariant checks after every tick. Returns
/// the run and the number of ticks checked.
fn run_one(p: Prepared, policy: &ObservationPolicy) -> Result<(RunResult, u64), ReportError> {
    let variant = p.variant.clone();
    let mut checks = Invariants::new();
    let r = run_with(p.world, &p.schedule, p.horizon, policy, |w, s| checks.check(w, s))
        .map_err(|e| ReportError::Run { variant, source: Box::new(e) })?;
    Ok((r, checks.ticks))
}

#[cfg(not(target_arch = "wasm32"))]
fn run_all(
    prepared: Vec<Prepared>,
    policy: &ObservationPolicy,
) -> Vec<Result<(RunResult, u64), ReportError>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = prepared
            .into_iter()
            .map(|p| s.spawn(move || run_one(p, policy)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("variant thread panicked"))
            .collect()
    })
}

#[cfg(target_arch = "wasm32")]
fn run_all(
    prepared: Vec<Prepared>,
    policy: &ObservationPolicy,
) -> Vec<Result<(RunResult, u64), ReportError>> {
    prepared.into_iter().map(|p| run_one(p, policy)).collect()
}

/// Runs the variants side by side. The baseline is always run, since
/// mobility service is measured against it.
pub fn run_variants(config: &ScenarioConfig, variants: &[Variant]) -> Result<Report, ReportError> {
    let mut list: Vec<(Variant, bool)> = Vec::new();
    let baseline = Variant::baseline();
    if !variants.contains(&baseline) {
        list.push((baseline, false));
    }
    for v in variants {
        if !list.iter().any(|(x, _)| x.name == v.name) {
            list.push((v.clone(), true));
        }
    }
    let mut prepared = Vec::with_capacity(list.len());
    let mut stations = Vec::new();
    for (v, _) in &list {
        let p = prepare(config, v)?;
        stations = p.stations.clone();
        prepared.push(p);
    }
    let policy = ObservationPolicy::default();
    let results = run_all(prepared, &policy);

    let mut finished = Vec::with_capacity(list.len());
    for ((v, requested), r) in list.into_iter().zip(results) {
        let (r, checked) = r?;
        finished.push((v, requested, r, checked));
    }
    let base_idx = finished
        .iter()
        .position(|(v, _, _, _)| v.name == crate::scenario::BASELINE)
        .expect("baseline is always run");
    let base_series = finished[base_idx].2.series.clone();

    let mut runs = Vec::with_capacity(finished.len());
    for (v, requested, r, checked_ticks) in finished {
        let fail = |message: String| ReportError::Metrics {
            variant: v.name.clone(),
            message,
        };
        let mut sl = BTreeMap::new();
        for system in ["ict", "healthcare"] {
            for (scope, metric, values) in r.series.iter().filter(|(s, _, _)| *s == system) {
                if metric == "sl" {
                    sl.insert(system.to_string(), values.to_vec());
                } else if let Some(d) = metric.strip_prefix("sl.") {
                    sl.insert(format!("{scope}.{d}"), values.to_vec());
                }
            }
        }
        let mob = mobility_levels(&r.series, &base_series, &stations).map_err(fail)?;
        if !mob.flagged.is_empty() {
            log::warn!(
                "variant `{}`: {} ticks without a usable mobility baseline, recorded as full service",
                v.name,
                mob.flagged.len()
            );
        }
        sl.insert("mobility".to_string(), mob.city);
        for (d, values) in mob.by_district {
            sl.insert(format!("mobility.{d}"), values);
        }
        let deaths = r
            .series
            .get(CITY, "deaths")
            .map_or_else(|| vec![0.0; r.series.ticks()], <[f64]>::to_vec);
        runs.push(VariantRun {
            name: v.name,
            requested,
            series: r.series,
            applied: r.applied,
            sl,
            deaths,
            flagged: mob.flagged,
            checked_ticks,
        });
    }
    Ok(Report {
        scenario: config.name.clone(),
        seed: config.seed,
        tick_per_day: config.tick_per_day,
        horizon: config.horizon_ticks(),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dips_merge_short_gaps() {
        let v = [1.0, 0.5, 0.5, 1.0, 0.9, 1.0, 1.0, 1.0, 0.2];
        assert_eq!(dips(&v, 1), vec![(1, 4), (8, 8)]);
        assert_eq!(dips(&v, 0), vec![(1, 2), (4, 4), (8, 8)]);
        assert!(dips(&[1.0; 4], 3).is_empty());
    }

    #[test]
    fn peaks_ignore_small_wiggles() {
        let one = [0.0, 2.0, 5.0, 4.8, 5.1, 3.0, 1.0];
        assert_eq!(count_peaks(&one, 0.5), 1);
        let two = [0.0, 5.0, 1.0, 5.0, 0.0];
        assert_eq!(count_peaks(&two, 0.5), 2);
        assert_eq!(count_peaks(&[0.0, 1.0, 2.0], 0.5), 1);
        assert_eq!(count_peaks(&[3.0, 3.0], 0.5), 0);
    }

    #[test]
    fn summary_of_a_single_dip() {
        let s = summarize(&[1.0, 1.0, 0.5, 0.25, 1.0, 1.0]);
        assert_eq!(s.min, 0.25);
        assert_eq!(s.min_tick, 3);
        assert_eq!(s.ticks_below, 2);
        assert_eq!(s.first_below, Some(2));
        assert_eq!(s.recovered_at, Some(4));
        assert!((s.mean - 4.75 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn unrecovered_dip_has_no_recovery_tick() {
        let s = summarize(&[1.0, 0.5]);
        assert_eq!(s.recovered_at, None);
        assert_eq!(s.last_below, Some(1));
    }
}
