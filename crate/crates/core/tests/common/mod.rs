#![allow(dead_code)]

use std::path::PathBuf;

use serde_json::{json, Value};

use citysim::kernel::World;
use citysim::metrics::{ObservationPolicy, Series};
use citysim::run::{run_with, RunResult};
use citysim::invariants::Invariants;
use citysim::scenario::{self, prepare, ScenarioConfig, Variant};

pub fn casestudy_path() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/casestudy.json"))
}

pub fn casestudy() -> ScenarioConfig {
    scenario::load(&casestudy_path()).expect("shipped scenario loads").0
}

/// Two districts, a commuter timetable, one hospital per district, a
/// two-level ICT tree and three measured roadways, one behind a light.
/// No hazards.
pub fn town() -> Value {
    json!({
        "name": "town",
        "seed": 11,
        "horizon_days": 2,
        "landscape": {
            "districts": ["c", "o"],
            "nodes": [
                {"id": "c0", "x": 0.0, "y": 0.0, "district": "c"},
                {"id": "c1", "x": 400.0, "y": 0.0, "district": "c"},
                {"id": "o0", "x": 1400.0, "y": 0.0, "district": "o"}
            ],
            "streets": [
                {"id": "s-c", "from": "c0", "to": "c1", "length": 400.0},
                {"id": "s-co", "from": "c1", "to": "o0", "length": 1000.0}
            ],
            "places": [
                {"id": "home-c", "kind": "home", "node": "c0", "capacity": 2000},
                {"id": "home-o", "kind": "home", "node": "o0", "capacity": 2000},
                {"id": "work", "kind": "work", "node": "c1", "capacity": 2000}
            ]
        },
        "population": {
            "contacts_k": 2.0,
            "districts": [{"district": "c", "citizens": 20}, {"district": "o", "citizens": 10}],
            "templates": [{"name": "commuter", "weight": 1.0, "slots": [
                {"start": 0, "activity": "home", "place": "home"},
                {"start": 8, "activity": "work", "place": "work"},
                {"start": 17, "activity": "home", "place": "home"}]}]
        },
        "ict": {
            "nodes": [
                {"id": "ict-city", "vulnerability": 1.0, "recovery_ticks": 10},
                {"id": "ict-c", "district": "c", "vulnerability": 1.0, "recovery_ticks": 10, "depends_on": ["ict-city"]},
                {"id": "ict-o", "district": "o", "vulnerability": 1.0, "recovery_ticks": 10, "depends_on": ["ict-city"]},
                {"id": "ict-hosp-c", "host": "hosp-c", "vulnerability": 1.0, "recovery_ticks": 10, "depends_on": ["ict-c"]},
                {"id": "ict-light", "host": "light-c", "vulnerability": 1.0, "recovery_ticks": 10, "depends_on": ["ict-c"]}
            ],
            "attackers": [{"id": "attacker"}, {"id": "attacker-2"}],
            "attack_types": {"botnet": {"propagation": 1.0, "recovery_scale": 1.0}}
        },
        "health": {
            "disease": {
                "beta": 0.0, "mild_ticks": 1.0, "severe_ticks": 1.0e6, "critical_ticks": 1.0e6,
                "p_severe": 1.0, "p_critical": 0.0, "p_die_treated": 0.0, "p_die_untreated": 0.0
            },
            "hospitals": [
                {"id": "hosp-c", "district": "c", "general_capacity": 20, "icu_capacity": 0,
                 "care_quality": 0.9, "referral_peers": ["hosp-o"]},
                {"id": "hosp-o", "district": "o", "general_capacity": 5, "icu_capacity": 0,
                 "care_quality": 0.9, "referral_peers": ["hosp-c"]}
            ]
        },
        "mobility": {
            "roadway_defaults": {"free_flow_speed": 13.9, "capacity": 60.0, "background_flow": 300.0},
            "roadways": [
                {"id": "r-c", "street": "s-c", "station": true, "light": "light-c"},
                {"id": "r-c-back", "street": "s-c", "reverse": true, "station": true},
                {"id": "r-co", "street": "s-co", "station": true},
                {"id": "r-co-back", "street": "s-co", "reverse": true}
            ],
            "lights": [{"id": "light-c", "district": "c"}]
        },
        "hazards": []
    })
}

pub fn attack(id: &str, tick: i64, target: &str, attacker: &str) -> Value {
    json!({"id": id, "tick": tick, "kind": "cyberattack", "target": {"id": target},
           "attacker": attacker, "attack_type": "botnet"})
}

pub fn outbreak(tick: i64, count: usize, district: Option<&str>) -> Value {
    let mut target = json!({"role": "patient"});
    if let Some(d) = district {
        target["district"] = json!(d);
    }
    json!({"id": format!("outbreak-{tick}"), "tick": tick, "kind": "disease_seed",
           "target": target, "count": count})
}

pub fn config(v: Value) -> ScenarioConfig {
    serde_json::from_value(v).expect("test scenario deserializes")
}

/// Runs one variant with the invariant checks on, calling `inspect` after
/// every tick.
pub fn run_inspect(
    config: &ScenarioConfig,
    variant: &Variant,
    mut inspect: impl FnMut(&World, &Series),
) -> RunResult {
    let errs = scenario::validate(config);
    assert!(errs.is_empty(), "scenario invalid: {errs:?}");
    let p = prepare(config, variant).expect("scenario builds");
    let mut checks = Invariants::new();
    run_with(p.world, &p.schedule, p.horizon, &ObservationPolicy::default(), |w, s| {
        inspect(w, s);
        checks.check(w, s)
    })
    .expect("run completes with invariants intact")
}

pub fn run(config: &ScenarioConfig, variant: &Variant) -> RunResult {
    run_inspect(config, variant, |_, _| {})
}

pub fn series<'a>(r: &'a RunResult, scope: &str, metric: &str) -> &'a [f64] {
    r.series
        .get(scope, metric)
        .unwrap_or_else(|| panic!("no series {scope}.{metric}"))
}
