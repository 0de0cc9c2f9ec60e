use serde_json::Value;

use citysim::toy::SirToy;
use citysim_wasm_demo::{attack_propagation, run_scenario, sir_compare, DEMO_TOWN};

#[test]
fn star_attack_histogram_adds_up_and_tracks_the_analytic_mean() {
    let out = attack_propagation(0.5, 1.0, 400).unwrap();
    assert_eq!(out.histogram.iter().sum::<u64>(), 400);
    assert!((out.simulated_mean - 2.0).abs() < 0.15, "{out:?}");
    assert!((out.monte_carlo_mean - 2.0).abs() < 0.15, "{out:?}");
    assert_eq!(out.analytic_mean, 2.0);

    let none = attack_propagation(0.0, 1.0, 20).unwrap();
    assert_eq!(none.histogram, [20, 0, 0, 0, 0]);
    assert!(attack_propagation(1.5, 1.0, 10).is_err());
    assert!(attack_propagation(0.5, 1.0, 0).is_err());
}

#[test]
fn sir_comparison_returns_daily_curves() {
    let toy = SirToy { days: 10, ..SirToy::default() };
    let out = sir_compare(toy, 4).unwrap();
    assert_eq!(out.simulated.len(), 11);
    assert_eq!(out.reference.len(), 11);
    assert_eq!(out.simulated[0], 10.0);
    assert!(out.sup_error < 0.5, "{}", out.sup_error);
    assert!(sir_compare(SirToy { i0: 600, ..toy }, 1).is_err());
}

#[test]
fn demo_town_runs_every_variant_with_full_service_baseline() {
    let out = run_scenario(DEMO_TOWN, "").unwrap();
    let names: Vec<&str> = out.variants.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, ["baseline", "risk", "beds", "cybersecurity"]);
    let base = &out.variants[0];
    for (system, values) in &base.sl {
        assert!(values.iter().all(|v| *v == 1.0), "{system}");
    }
    let risk = &out.variants[1];
    for system in ["ict", "healthcare", "mobility"] {
        assert!(risk.sl[system].iter().any(|v| *v < 1.0), "{system}");
    }

    let json: Value = serde_json::to_value(&out).unwrap();
    assert_eq!(json["summaries"].as_array().unwrap().len(), 4);
    assert_eq!(json["tick_per_day"], 24);
}

#[test]
fn scenario_errors_come_back_as_messages() {
    let err = run_scenario("{", "").unwrap_err();
    assert!(err.contains("scenario"), "{err}");
    let err = run_scenario(DEMO_TOWN, "risk, moat").unwrap_err();
    assert!(err.contains("moat"), "{err}");

    let mut broken: Value = serde_json::from_str(DEMO_TOWN).unwrap();
    broken["hazards"][1]["target"]["id"] = "ict-nowhere".into();
    let err = run_scenario(&broken.to_string(), "risk").unwrap_err();
    assert!(err.contains("ict-nowhere"), "{err}");
}

#[test]
fn requesting_one_variant_still_runs_the_baseline() {
    let out = run_scenario(DEMO_TOWN, "cybersecurity").unwrap();
    let names: Vec<&str> = out.variants.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, ["baseline", "cybersecurity"]);
}
