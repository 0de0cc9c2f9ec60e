//! Browser front end for the simulator. Every operation takes plain
//! numbers or scenario text and returns a JSON string, so the page only
//! needs `JSON.parse`.

use std::collections::BTreeMap;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use citysim::oracle;
use citysim::report::{run_variants, VariantSummary, SYSTEMS};
use citysim::scenario::{self, prepare, Variant};
use citysim::toy::{self, SirToy};

pub const DEMO_TOWN: &str = include_str!("../www/demo-town.json");

const STAR_LEAVES: [&str; 4] = ["l1", "l2", "l3", "l4"];

#[derive(Debug, Serialize)]
pub struct AttackOutcome {
    pub runs: u64,
    /// How often each leaf count (0..=4) came up.
    pub histogram: [u64; 5],
    pub simulated_mean: f64,
    pub monte_carlo_mean: f64,
    pub analytic_mean: f64,
}

/// Attacks the hub of a four-leaf star `runs` times and counts the
/// compromised leaves.
pub fn attack_propagation(propagation: f64, vulnerability: f64, runs: u64) -> Result<AttackOutcome, String> {
    for (name, v) in [("propagation", propagation), ("vulnerability", vulnerability)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("{name} must lie in [0, 1], got {v}"));
        }
    }
    if runs == 0 || runs > 5000 {
        return Err(format!("runs must be between 1 and 5000, got {runs}"));
    }
    let mut histogram = [0u64; 5];
    for seed in 0..runs {
        let config = toy::attack_config(toy::STAR, "hub", vulnerability, propagation, 0, 3, seed);
        let p = prepare(&config, &Variant::risk()).map_err(|e| e.to_string())?;
        let r = toy::run_checked(p).map_err(|e| e.to_string())?;
        let hit = toy::compromise_ticks(&r.series, &STAR_LEAVES)
            .values()
            .filter(|t| t.is_some())
            .count();
        histogram[hit] += 1;
    }
    let total: u64 = histogram.iter().enumerate().map(|(k, n)| k as u64 * n).sum();
    Ok(AttackOutcome {
        runs,
        histogram,
        simulated_mean: total as f64 / runs as f64,
        monte_carlo_mean: oracle::star_leaves_monte_carlo(4, vulnerability, propagation, runs as usize, 1),
        analytic_mean: 4.0 * vulnerability * propagation,
    })
}

#[derive(Debug, Serialize)]
pub struct SirOutcome {
    /// Prevalence per day, averaged over seeds.
    pub simulated: Vec<f64>,
    pub reference: Vec<f64>,
    pub sup_error: f64,
}

pub fn sir_compare(toy: SirToy, seeds: u64) -> Result<SirOutcome, String> {
    if toy.n == 0 || toy.n > 5000 || toy.i0 > toy.n {
        return Err(format!("need 0 < n <= 5000 and i0 <= n, got n={} i0={}", toy.n, toy.i0));
    }
    if toy.days == 0 || toy.days > 120 || seeds == 0 || seeds > 50 {
        return Err("days must be in 1..=120 and seeds in 1..=50".into());
    }
    let c = toy::sir_comparison(&toy, 0..seeds)?;
    let daily = |v: &[f64]| v.iter().step_by(24).copied().collect();
    Ok(SirOutcome {
        simulated: daily(&c.simulated),
        reference: daily(&c.reference),
        sup_error: c.sup_error,
    })
}

#[derive(Debug, Serialize)]
pub struct VariantCurves {
    pub name: String,
    /// System service levels per tick.
    pub sl: BTreeMap<String, Vec<f64>>,
    pub deaths: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ScenarioOutcome {
    pub scenario: String,
    pub tick_per_day: u64,
    pub variants: Vec<VariantCurves>,
    pub summaries: Vec<VariantSummary>,
}

/// Runs `variants` (comma separated, empty for all declared ones) of the
/// scenario in `text`.
pub fn run_scenario(text: &str, variants: &str) -> Result<ScenarioOutcome, String> {
    let config = scenario::parse(text).map_err(|e| e.to_string())?;
    let errors = scenario::validate(&config);
    if !errors.is_empty() {
        return Err(errors.join("\n"));
    }
    let list = if variants.trim().is_empty() {
        Variant::all(&config)
    } else {
        variants
            .split(',')
            .map(|v| Variant::parse(v.trim(), &config).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?
    };
    let report = run_variants(&config, &list).map_err(|e| e.to_string())?;
    let curves = report
        .runs
        .iter()
        .map(|r| VariantCurves {
            name: r.name.clone(),
            sl: SYSTEMS
                .iter()
                .map(|s| (s.to_string(), r.sl(s).to_vec()))
                .collect(),
            deaths: r.deaths.clone(),
        })
        .collect();
    Ok(ScenarioOutcome {
        scenario: report.scenario.clone(),
        tick_per_day: report.tick_per_day,
        variants: curves,
        summaries: report.summaries(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = attackPropagation)]
pub fn attack_propagation_js(propagation: f64, vulnerability: f64, runs: u32) -> Result<String, JsError> {
    to_js(attack_propagation(propagation, vulnerability, runs as u64))
}

#[wasm_bindgen(js_name = sirCompare)]
#[allow(clippy::too_many_arguments)]
pub fn sir_compare_js(n: u32, i0: u32, beta: f64, k: f64, gamma: f64, days: u32, seeds: u32) -> Result<String, JsError> {
    let toy = SirToy {
        n: n as usize,
        i0: i0 as usize,
        beta,
        k,
        gamma,
        days: days as u64,
    };
    to_js(sir_compare(toy, seeds as u64))
}

#[wasm_bindgen(js_name = runScenario)]
pub fn run_scenario_js(text: &str, variants: &str) -> Result<String, JsError> {
    to_js(run_scenario(text, variants))
}

#[wasm_bindgen(js_name = demoTown)]
pub fn demo_town() -> String {
    DEMO_TOWN.to_string()
}
