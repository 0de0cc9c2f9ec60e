//! Small worlds for oracle comparisons, tests and the browser demo.

use std::collections::BTreeMap;

use serde_json::json;

use crate::health::{self, INFECTED, NONE, SEVERE, SUSCEPTIBLE};
use crate::kernel::{
    BuildError, InternalCtx, InternalRule, Params, Role, RuleBook, RuleError, State, SubAgentDecl,
    Value, World, WorldBuilder, IDENTITY,
};
use crate::metrics::{ObservationPolicy, Series};
use crate::oracle;
use crate::invariants::Invariants;
use crate::run::{run_with, RunError, RunResult};
use crate::scenario::{prepare, Prepared, ScenarioConfig, Variant};

/// Runs a prepared toy with the invariant checks after every tick.
pub fn run_checked(p: Prepared) -> Result<RunResult, RunError> {
    let mut checks = Invariants::new();
    run_with(p.world, &p.schedule, p.horizon, &ObservationPolicy::default(), |w, s| {
        checks.check(w, s)
    })
}

/// Fully mixed epidemic: `n` citizens spend the whole day in one hall,
/// `i0` of them seeded at tick 0, mild illness only.
pub fn sir_config(n: usize, i0: usize, beta: f64, k: f64, gamma: f64, days: u64, seed: u64) -> ScenarioConfig {
    serde_json::from_value(json!({
        "name": "sir-toy",
        "seed": seed,
        "horizon_days": days,
        "landscape": {
            "districts": ["d"],
            "nodes": [{"id": "n0", "x": 0.0, "y": 0.0, "district": "d"}],
            "places": [
                {"id": "homes", "kind": "home", "node": "n0", "capacity": n},
                {"id": "hall", "kind": "hall", "node": "n0", "capacity": n}
            ]
        },
        "population": {
            "contacts_k": k,
            "jitter_hours": 0,
            "household_sizes": [{"size": 1, "weight": 1.0}],
            "districts": [{"district": "d", "citizens": n}],
            "templates": [{"name": "mixing", "weight": 1.0,
                "slots": [{"start": 0, "activity": "mix", "place": "hall"}]}]
        },
        "health": {
            "disease": {
                "beta": beta, "mild_ticks": 1.0 / gamma, "severe_ticks": 1.0,
                "critical_ticks": 1.0, "p_severe": 0.0, "p_critical": 0.0,
                "p_die_treated": 0.0, "p_die_untreated": 0.0
            }
        },
        "hazards": [{"id": "seed", "tick": 0, "kind": "disease_seed",
            "target": {"role": "patient"}, "count": i0}]
    }))
    .expect("toy scenario is well-formed")
}

/// ICT-only scenario: `nodes` maps node id to the ids it depends on; one
/// attacker hits `target` at `arm_tick`.
pub fn attack_config(
    nodes: &[(&str, &[&str])],
    target: &str,
    vulnerability: f64,
    propagation: f64,
    arm_tick: i64,
    horizon_ticks: u64,
    seed: u64,
) -> ScenarioConfig {
    let nodes: Vec<_> = nodes
        .iter()
        .map(|(id, deps)| {
            json!({"id": id, "vulnerability": vulnerability, "recovery_ticks": 1000,
                   "depends_on": deps})
        })
        .collect();
    serde_json::from_value(json!({
        "name": "attack-toy",
        "seed": seed,
        "horizon_days": 1,
        "tick_per_day": horizon_ticks,
        "ict": {
            "nodes": nodes,
            "attackers": [{"id": "attacker"}],
            "attack_types": {"botnet": {"propagation": propagation, "recovery_scale": 1.0}}
        },
        "hazards": [{"id": "attack", "tick": arm_tick, "kind": "cyberattack",
            "target": {"id": target}, "attacker": "attacker", "attack_type": "botnet"}]
    }))
    .expect("toy scenario is well-formed")
}

/// First tick each listed node reports itself compromised.
pub fn compromise_ticks(series: &Series, ids: &[&str]) -> BTreeMap<String, Option<u64>> {
    ids.iter()
        .map(|id| {
            let first = series
                .get(id, "compromised")
                .and_then(|v| v.iter().position(|&x| x > 0.5))
                .map(|t| t as u64);
            (id.to_string(), first)
        })
        .collect()
}

/// Patients that turn severe with probability `a` per tick while well and
/// get well with probability `mu` per tick, independently of each other.
pub struct OnOffIllness {
    pub a: f64,
    pub mu: f64,
}

impl InternalRule for OnOffIllness {
    fn apply(&self, cx: &InternalCtx<'_>) -> Result<Option<State>, RuleError> {
        let u = cx.rng("onoff").uniform();
        let ill = cx.state.str("infection")? == INFECTED;
        if ill && u < self.mu {
            Ok(Some(
                cx.state
                    .clone()
                    .with("infection", Value::Tag(SUSCEPTIBLE))
                    .with("severity", Value::Tag(NONE))
                    .with("located_in", Value::Null)
                    .with("bed", Value::Tag(NONE))
                    .with("waiting", Value::Int(0)),
            ))
        } else if !ill && u < self.a {
            Ok(Some(
                cx.state
                    .clone()
                    .with("infection", Value::Tag(INFECTED))
                    .with("severity", Value::Tag(SEVERE)),
            ))
        } else {
            Ok(None)
        }
    }
}

/// One hospital with `beds` general beds serving `n` on/off patients.
pub fn queue_world(n: usize, a: f64, mu: f64, beds: i64, seed: u64) -> Result<World, BuildError> {
    let disease: health::Disease = serde_json::from_value(json!({
        "beta": 0.0, "mild_ticks": 1.0, "severe_ticks": 1.0, "critical_ticks": 1.0,
        "p_severe": 0.0, "p_critical": 0.0, "p_die_treated": 0.0, "p_die_untreated": 0.0
    }))
    .expect("valid disease");
    let mut b = WorldBuilder::new(seed);
    let decl = |id: &str, role: Role, ir: &str, ob: &str| SubAgentDecl {
        id: id.to_string(),
        agent: id.to_string(),
        role,
        district: None,
        ir: ir.into(),
        sr: "health.network".into(),
        ob: ob.into(),
    };
    b.agent("hospital", "hospital", IDENTITY);
    b.subagent(decl("hospital", Role::Hospital, "health.care", "health.hospital"));
    for i in 0..n {
        let id = format!("p{i:04}");
        b.agent(&id, "patient", IDENTITY);
        b.subagent(decl(&id, Role::Patient, "toy.onoff", "health.patient"));
    }
    let mut layout = b.layout()?;
    let h = layout.ix("hospital").expect("declared");
    let spec = health::HospitalSpec {
        general_capacity: beds,
        icu_capacity: 0,
        care_quality: 1.0,
        referral_peers: Vec::new(),
        capacity_degradation_factor: 0.5,
        quality_degradation_factor: 0.75,
    };
    let params: Params = health::hospital_params(&spec);
    let state = health::hospital_state(&params).expect("complete params");
    layout.set_params(h, params);
    layout.set_state(h, state);
    for i in 0..n {
        let ix = layout.ix(&format!("p{i:04}")).expect("declared");
        layout.set_params(ix, health::patient_params(Some(h), false));
        layout.set_state(ix, health::patient_state());
    }
    let mut book = RuleBook::new();
    book.internal("toy.onoff", OnOffIllness { a, mu })
        .internal("health.care", health::Care)
        .system("health.network", health::HealthNetwork { disease })
        .observer("health.hospital", health::HospitalMetrics)
        .observer("health.patient", health::PatientMetrics);
    layout.build(&book)
}

/// Parameters of the fully mixed toy epidemic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SirToy {
    pub n: usize,
    pub i0: usize,
    pub beta: f64,
    pub k: f64,
    pub gamma: f64,
    pub days: u64,
}

impl Default for SirToy {
    fn default() -> Self {
        SirToy {
            n: 500,
            i0: 10,
            beta: 0.025,
            k: 5.0,
            gamma: 0.05,
            days: 25,
        }
    }
}

pub struct SirComparison {
    /// Prevalence averaged over the seeds.
    pub simulated: Vec<f64>,
    pub reference: Vec<f64>,
    /// Largest absolute gap over the horizon, relative to the reference peak.
    pub sup_error: f64,
}

/// Runs the toy once per seed and compares the mean prevalence with the
/// difference-equation integrator.
pub fn sir_comparison(toy: &SirToy, seeds: std::ops::Range<u64>) -> Result<SirComparison, String> {
    let ticks = (toy.days * 24) as usize;
    let mut simulated = vec![0.0; ticks + 1];
    let runs = seeds.end.saturating_sub(seeds.start).max(1) as f64;
    for seed in seeds {
        let config = sir_config(toy.n, toy.i0, toy.beta, toy.k, toy.gamma, toy.days, seed);
        let p = prepare(&config, &Variant::risk()).map_err(|e| e.to_string())?;
        let r = run_checked(p).map_err(|e| e.to_string())?;
        let prevalence = r
            .series
            .get("healthcare", "total_infected")
            .ok_or("no prevalence series")?;
        for (m, v) in simulated.iter_mut().zip(prevalence) {
            *m += v / runs;
        }
    }
    let reference = oracle::sir_prevalence(toy.n as f64, toy.i0 as f64, toy.beta, toy.k, toy.gamma, ticks);
    let peak = reference.iter().cloned().fold(0.0, f64::max);
    let gap = simulated
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SirComparison {
        simulated,
        reference,
        sup_error: gap / peak,
    })
}

pub const STAR: &[(&str, &[&str])] = &[
    ("hub", &[]),
    ("l1", &["hub"]),
    ("l2", &["hub"]),
    ("l3", &["hub"]),
    ("l4", &["hub"]),
];

/// Mean compromised leaves of the 4-leaf star (vulnerability 1) over
/// seeds `0..runs`.
pub fn star_mean(propagation: f64, runs: u64) -> Result<f64, String> {
    let mut total = 0usize;
    for seed in 0..runs {
        let config = attack_config(STAR, "hub", 1.0, propagation, 0, 3, seed);
        let p = prepare(&config, &Variant::risk()).map_err(|e| e.to_string())?;
        let r = run_checked(p).map_err(|e| e.to_string())?;
        let t = compromise_ticks(&r.series, &["l1", "l2", "l3", "l4"]);
        total += t.values().filter(|v| v.is_some()).count();
    }
    Ok(total as f64 / runs.max(1) as f64)
}

pub const TREE: &[(&str, &[&str])] = &[
    ("root", &[]),
    ("a", &["root"]),
    ("b", &["root"]),
    ("a1", &["a"]),
    ("a2", &["a"]),
    ("b1", &["b"]),
    ("x", &["a1", "b1"]),
];

/// Simulated and brute-force compromise ticks for a deterministic attack
/// (vulnerability and propagation 1) on `target`, armed at tick 3.
pub fn attack_timing(
    nodes: &[(&str, &[&str])],
    target: &str,
) -> Result<(BTreeMap<String, Option<u64>>, BTreeMap<String, Option<u64>>), String> {
    let arm = 3;
    let config = attack_config(nodes, target, 1.0, 1.0, arm, 16, 1);
    let p = prepare(&config, &Variant::risk()).map_err(|e| e.to_string())?;
    let r = run_checked(p).map_err(|e| e.to_string())?;
    let ids: Vec<&str> = nodes.iter().map(|(k, _)| *k).collect();
    let deps = nodes
        .iter()
        .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
        .collect();
    Ok((
        compromise_ticks(&r.series, &ids),
        oracle::attack_times(&deps, target, arm as u64 + 1),
    ))
}

/// Small two-district city with every system present. Parameters, sizes
/// and hazard timing are drawn from `seed`; the run lasts three days.
pub fn mini_city(seed: u64) -> ScenarioConfig {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    let mut rng = StdRng::seed_from_u64(seed);
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    let citizens = |x: f64| (x.round() as usize).max(1);
    let vul = [u(0.0, 1.0), u(0.0, 1.0), u(0.0, 1.0), u(0.0, 1.0)];
    let recovery = [u(1.0, 30.0) as i64, u(1.0, 30.0) as i64];
    let (n_a, n_b) = (citizens(u(5.0, 40.0)), citizens(u(5.0, 40.0)));
    let caps = [u(0.0, 6.0) as i64, u(0.0, 6.0) as i64, u(0.0, 3.0) as i64];
    let beta = u(0.0, 0.4);
    let p = [u(0.0, 1.0), u(0.0, 1.0), u(0.0, 1.0), u(0.0, 1.0)];
    let (attack, outbreak, propagation) = (u(0.0, 60.0) as i64, u(0.0, 10.0) as i64, u(0.0, 1.0));
    let (flow, off) = (u(0.0, 800.0), u(0.05, 1.0));
    serde_json::from_value(json!({
        "name": "mini-city",
        "seed": seed,
        "horizon_days": 3,
        "landscape": {
            "districts": ["a", "b"],
            "nodes": [
                {"id": "a0", "x": 0.0, "y": 0.0, "district": "a"},
                {"id": "a1", "x": 500.0, "y": 0.0, "district": "a"},
                {"id": "b0", "x": 1500.0, "y": 0.0, "district": "b"}
            ],
            "streets": [
                {"id": "s1", "from": "a0", "to": "a1", "length": 500.0},
                {"id": "s2", "from": "a1", "to": "b0", "length": 1000.0}
            ],
            "places": [
                {"id": "home-a", "kind": "home", "node": "a0", "capacity": 100},
                {"id": "home-b", "kind": "home", "node": "b0", "capacity": 100},
                {"id": "work", "kind": "work", "node": "a1", "capacity": 100}
            ]
        },
        "population": {
            "contacts_k": u(1.0, 6.0),
            "districts": [{"district": "a", "citizens": n_a}, {"district": "b", "citizens": n_b}],
            "templates": [{"name": "commuter", "weight": 1.0, "slots": [
                {"start": 0, "activity": "home", "place": "home"},
                {"start": 8, "activity": "work", "place": "work"},
                {"start": 17, "activity": "home", "place": "home"}]}]
        },
        "ict": {
            "nodes": [
                {"id": "core", "district": "a", "vulnerability": vul[0], "recovery_ticks": recovery[0]},
                {"id": "edge-b", "district": "b", "vulnerability": vul[1], "recovery_ticks": recovery[1], "depends_on": ["core"]},
                {"id": "ict-h-a", "host": "h-a", "vulnerability": vul[2], "recovery_ticks": recovery[0], "depends_on": ["core"]},
                {"id": "ict-light", "host": "light", "vulnerability": vul[3], "recovery_ticks": recovery[1], "depends_on": ["core"]}
            ],
            "attackers": [{"id": "attacker"}],
            "attack_types": {"botnet": {"propagation": propagation, "recovery_scale": 1.0}}
        },
        "health": {
            "disease": {
                "beta": beta, "mild_ticks": 6.0, "severe_ticks": 8.0, "critical_ticks": 6.0,
                "p_severe": p[0], "p_critical": p[1], "p_die_treated": p[2] * 0.3,
                "p_die_untreated": p[3]
            },
            "hospitals": [
                {"id": "h-a", "district": "a", "general_capacity": caps[0], "icu_capacity": caps[2],
                 "care_quality": 0.9, "referral_peers": ["h-b"]},
                {"id": "h-b", "district": "b", "general_capacity": caps[1], "icu_capacity": 1,
                 "care_quality": 0.8}
            ]
        },
        "mobility": {
            "light_off_factor": off,
            "roadway_defaults": {"free_flow_speed": 13.9, "capacity": 150.0, "background_flow": flow},
            "roadways": [
                {"id": "r1", "street": "s1", "station": true, "light": "light"},
                {"id": "r1-back", "street": "s1", "reverse": true, "station": true},
                {"id": "r2", "street": "s2", "station": true},
                {"id": "r2-back", "street": "s2", "reverse": true, "station": true}
            ],
            "lights": [{"id": "light", "district": "a"}]
        },
        "hazards": [
            {"id": "outbreak", "tick": outbreak, "kind": "disease_seed",
             "target": {"role": "patient"}, "count": 3},
            {"id": "attack", "tick": attack, "kind": "cyberattack", "target": {"id": "core"},
             "attacker": "attacker", "attack_type": "botnet"}
        ],
        "mitigations": {
            "hardened": [{"target": {"role": "cyber-infrastructure"},
                          "overrides": {"vulnerability": {"scale": 0.0}}}]
        }
    }))
    .expect("mini city is well-formed")
}
