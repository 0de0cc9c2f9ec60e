mod common;

use std::collections::BTreeSet;

use serde_json::json;

use citysim::hazard::HazardSchedule;
use citysim::kernel::{Role, SystemId};
use citysim::report::run_variants;
use citysim::scenario::{self, prepare, ScenarioError, Variant};
use common::{attack, casestudy, config, outbreak, run, run_inspect, town};

#[test]
fn shipped_case_study_is_valid_and_hierarchical() {
    let c = casestudy();
    assert_eq!(scenario::validate(&c), Vec::<String>::new());
    assert_eq!(c.landscape.districts, ["center", "outskirts"]);
    assert_eq!(c.health.as_ref().unwrap().hospitals.len(), 2);
    assert_eq!((c.horizon_days, c.tick_per_day), (60, 24));
    for d in &c.landscape.districts {
        let node = c.ict.nodes.iter().find(|n| n.id == format!("ict-{d}")).unwrap();
        assert_eq!(node.district.as_deref(), Some(d.as_str()));
        assert_eq!(node.depends_on, ["ict-city"], "{d}");
    }
    let attack = c.hazards.iter().find(|h| h.kind == "cyberattack").unwrap();
    assert_eq!(attack.day.map(|d| d * c.tick_per_day as i64).or(attack.tick), Some(480));
    assert_eq!(attack.target.id.as_deref(), Some("ict-center"));
    for m in ["beds", "cybersecurity"] {
        assert!(c.mitigations.contains_key(m));
    }
}

#[test]
fn case_study_healthcare_layer_holds_hospitals_and_patients() {
    let c = casestudy();
    let p = prepare(&c, &Variant::risk()).unwrap();
    let w = &p.world;
    let members = w.system_members(SystemId::Healthcare);
    let roles: Vec<Role> = members.iter().map(|&ix| w.record(ix).role).collect();
    let hospitals = roles.iter().filter(|r| **r == Role::Hospital).count();
    let patients = roles.iter().filter(|r| **r == Role::Patient).count();
    assert_eq!(hospitals, 2);
    assert_eq!(patients, 500);
    assert_eq!(members.len(), hospitals + patients);
    assert!(w.system_members_by_name("power-grid").is_err());
}

#[test]
fn unknown_sections_and_missing_seeds_are_rejected() {
    let mut t = town();
    t["power_grid"] = json!({});
    let err = scenario::parse(&t.to_string()).unwrap_err();
    assert!(err.to_string().contains("power_grid"), "{err}");
    assert_eq!(err.exit_code(), 2);

    let mut t = town();
    t.as_object_mut().unwrap().remove("seed");
    let err = scenario::parse(&t.to_string()).unwrap_err();
    assert!(err.to_string().contains("seed"), "{err}");
}

#[test]
fn bad_events_are_listed_not_thrown() {
    let mut t = town();
    t["hazards"] = json!([
        {"id": "plant", "tick": 3, "kind": "generic_override", "target": {"role": "power-plant"},
         "overrides": {"vulnerability": {"set": 1.0}}}
    ]);
    let errs = scenario::validate(&config(t));
    assert!(errs.iter().any(|e| e.contains("power-plant")), "{errs:?}");

    let mut t = town();
    t["hazards"] = json!([attack("early", -4, "ict-c", "attacker")]);
    let errs = scenario::validate(&config(t));
    assert!(errs.iter().any(|e| e.contains("early") && e.contains("negative")), "{errs:?}");

    let mut t = town();
    t["hazards"] = json!([{"id": "ghost", "tick": 3, "kind": "generic_override",
        "target": {"id": "hosp-c"}, "overrides": {"wings": {"set": 2}}}]);
    let errs = scenario::validate(&config(t));
    assert!(errs.iter().any(|e| e.contains("wings")), "{errs:?}");
}

#[test]
fn a_scenario_without_agents_is_a_valid_idle_world() {
    let c = config(json!({"name": "empty", "seed": 1, "horizon_days": 1}));
    let p = prepare(&c, &Variant::risk()).unwrap();
    assert!(p.world.is_empty());
    let r = citysim::run::run(p.world, &HazardSchedule::empty(), 5, &Default::default()).unwrap();
    assert_eq!(r.world.tick(), 5);
}

#[test]
fn hazards_never_change_membership() {
    let mut t = town();
    t["hazards"] = json!([attack("a", 3, "ict-city", "attacker"), outbreak(0, 5, None)]);
    let c = config(t);
    let before = prepare(&c, &Variant::risk()).unwrap();
    let layers = |w: &citysim::kernel::World| -> Vec<Vec<String>> {
        SystemId::ALL
            .iter()
            .map(|s| w.system_members(*s).iter().map(|&ix| w.record(ix).id.clone()).collect())
            .collect()
    };
    let expected = layers(&before.world);
    run_inspect(&c, &Variant::risk(), |w, _| assert_eq!(layers(w), expected));
}

#[test]
fn same_seed_gives_identical_trajectories() {
    let mut t = town();
    t["population"]["contacts_k"] = json!(4.0);
    t["health"]["disease"]["beta"] = json!(0.2);
    t["health"]["disease"]["p_severe"] = json!(0.3);
    t["health"]["disease"]["severe_ticks"] = json!(10.0);
    t["hazards"] = json!([attack("a", 30, "ict-city", "attacker"), outbreak(0, 5, None)]);
    let c = config(t);
    let trajectory = || {
        let mut states = Vec::new();
        let r = run_inspect(&c, &Variant::risk(), |w, _| {
            states.push(w.records().map(|(ix, _)| w.state(ix).clone()).collect::<Vec<_>>());
        });
        (r.series, states)
    };
    let (a, b) = (trajectory(), trajectory());
    assert!(a.1.len() > 40);
    assert_eq!(a.0, b.0);
    assert!(a.1 == b.1);

    let mut other = c.clone();
    other.seed += 1;
    assert_ne!(run(&other, &Variant::risk()).series, a.0);
}

#[test]
fn paired_runs_agree_until_the_first_hazard() {
    let mut t = town();
    t["hazards"] = json!([attack("a", 30, "ict-c", "attacker")]);
    let c = config(t);
    let (base, risk) = (run(&c, &Variant::baseline()), run(&c, &Variant::risk()));
    let ticks = base.series.ticks();
    let differs = |tick: usize| {
        base.series
            .iter()
            .any(|(s, m, v)| risk.series.get(s, m).map(|r| r[tick]) != Some(v[tick]))
    };
    let first = (0..ticks).find(|&t| differs(t));
    assert!(first.is_some_and(|t| t >= 30), "{first:?}");

    let empty = run(&c, &Variant { hazards: false, ..Variant::risk() });
    assert_eq!(empty.series, base.series);
}

#[test]
fn baseline_alone_is_full_service() {
    let mut t = town();
    t["hazards"] = json!([attack("a", 3, "ict-city", "attacker"), outbreak(0, 20, None)]);
    let report = run_variants(&config(t), &[Variant::baseline()]).unwrap();
    let b = report.get("baseline").unwrap();
    assert!(!b.sl.is_empty());
    for (k, v) in &b.sl {
        assert!(v.iter().all(|x| *x == 1.0), "{k}");
    }
}

#[test]
fn beds_leave_ict_alone() {
    let mut t = town();
    t["hazards"] = json!([attack("a", 3, "ict-city", "attacker"), outbreak(0, 20, None)]);
    t["mitigations"] = json!({"beds": [{"target": {"role": "hospital"},
        "overrides": {"nominal_general_capacity": {"scale": 1.5}}}]});
    let c = config(t);
    let report = run_variants(&c, &[Variant::risk(), Variant::parse("beds", &c).unwrap()]).unwrap();
    assert_eq!(report.get("beds").unwrap().sl("ict"), report.get("risk").unwrap().sl("ict"));
    assert!(matches!(Variant::parse("moat", &c), Err(ScenarioError::UnknownVariant(_))));
}

#[test]
fn set_overrides_are_idempotent() {
    let set = |id: &str, tick: i64| {
        json!({"id": id, "tick": tick, "kind": "generic_override", "target": {"id": "hosp-c"},
               "overrides": {"nominal_general_capacity": {"set": 3}}})
    };
    let mut once = town();
    once["hazards"] = json!([outbreak(0, 20, Some("c")), set("x", 2)]);
    let mut twice = town();
    twice["hazards"] = json!([outbreak(0, 20, Some("c")), set("x", 2), set("y", 2), set("z", 9)]);
    let (a, b) = (run(&config(once), &Variant::risk()), run(&config(twice), &Variant::risk()));
    assert_eq!(a.series, b.series);
    let ids: BTreeSet<_> = b.applied.iter().map(|(_, id)| id.as_str()).collect();
    assert!(ids.contains("z"));
}
