mod common;

use serde_json::json;

use citysim::kernel::Role;
use citysim::oracle;
use citysim::scenario::Variant;
use common::{attack, config, outbreak, run, run_inspect, series, town};

/// Town where `seeded` centre patients fall severely ill at tick 1 and stay
/// severe, with the given general capacities.
fn ward(seeded: usize, center_beds: i64, outskirts_beds: i64) -> citysim::scenario::ScenarioConfig {
    let mut t = town();
    t["horizon_days"] = json!(1);
    t["population"]["districts"] = json!([{"district": "c", "citizens": 40}, {"district": "o", "citizens": 5}]);
    t["health"]["hospitals"][0]["general_capacity"] = json!(center_beds);
    t["health"]["hospitals"][1]["general_capacity"] = json!(outskirts_beds);
    t["hazards"] = json!([outbreak(0, seeded, Some("c"))]);
    config(t)
}

#[test]
fn one_severe_patient_is_admitted_locally() {
    let r = run(&ward(1, 20, 5), &Variant::risk());
    assert_eq!(series(&r, "hosp-c", "general_occupancy")[1], 1.0);
    assert_eq!(series(&r, "hosp-o", "general_occupancy")[1], 0.0);
    assert!(series(&r, "hosp-c", "unattended").iter().all(|u| *u == 0.0));
}

#[test]
fn a_full_hospital_refers_to_its_peer() {
    let r = run(&ward(3, 1, 5), &Variant::risk());
    assert_eq!(series(&r, "hosp-c", "general_occupancy")[1], 1.0);
    assert_eq!(series(&r, "hosp-o", "general_occupancy")[1], 2.0);
    assert_eq!(series(&r, "hosp-c", "referrals")[1], 2.0);
    assert_eq!(series(&r, "hosp-c", "unattended")[1], 0.0);
}

#[test]
fn overflow_beyond_both_hospitals_is_unattended_at_the_first_one() {
    let r = run(&ward(35, 20, 5), &Variant::risk());
    assert_eq!(series(&r, "hosp-c", "general_occupancy")[1], 20.0);
    assert_eq!(series(&r, "hosp-o", "general_occupancy")[1], 5.0);
    assert_eq!(series(&r, "hosp-c", "unattended")[1], 10.0);
    assert_eq!(series(&r, "hosp-o", "unattended")[1], 0.0);
    // 1 - 10/20 at the centre, full service at the outskirts.
    assert_eq!(series(&r, "healthcare", "sl.c")[1], 0.5);
    assert_eq!(series(&r, "healthcare", "sl")[1], 0.75);
}

#[test]
fn untreated_critical_patients_all_die_when_forced() {
    let mut t = town();
    t["horizon_days"] = json!(1);
    t["health"]["disease"] = json!({
        "beta": 0.0, "mild_ticks": 1.0, "severe_ticks": 1.0, "critical_ticks": 1.0,
        "p_severe": 1.0, "p_critical": 1.0, "p_die_treated": 0.0, "p_die_untreated": 1.0
    });
    t["hazards"] = json!([outbreak(0, 12, None)]);
    let r = run(&config(t), &Variant::risk());
    assert_eq!(*series(&r, "city", "deaths").last().unwrap(), 12.0);
    assert_eq!(*series(&r, "healthcare", "total_dead").last().unwrap(), 12.0);
}

#[test]
fn severe_fraction_of_a_cohort_matches_the_binomial() {
    let (n, p) = (1000usize, 0.3);
    let mut t = town();
    t["horizon_days"] = json!(1);
    t["population"]["districts"] = json!([{"district": "c", "citizens": n}]);
    t["health"]["disease"]["p_severe"] = json!(p);
    t["hazards"] = json!([outbreak(0, n, None)]);
    let r = run(&config(t), &Variant::risk());
    let fraction = series(&r, "healthcare", "severe")[1] / n as f64;
    let (mean, sd) = oracle::binomial_band(n as u64, p);
    assert!((fraction - mean).abs() <= 3.0 * sd, "{fraction} vs {mean} ± 3 × {sd}");
}

#[test]
fn no_transmission_without_beta() {
    let mut t = town();
    t["population"]["contacts_k"] = json!(8.0);
    t["health"]["disease"]["severe_ticks"] = json!(5.0);
    t["health"]["disease"]["p_severe"] = json!(0.0);
    t["health"]["disease"]["mild_ticks"] = json!(30.0);
    t["hazards"] = json!([outbreak(0, 4, None)]);
    let r = run(&config(t), &Variant::risk());
    let susceptible = series(&r, "healthcare", "total_susceptible");
    assert!(susceptible.iter().all(|s| *s == 26.0), "{susceptible:?}");
}

#[test]
fn patients_never_infected_stay_susceptible() {
    let mut t = town();
    t["hazards"] = json!([]);
    let r = run_inspect(&config(t), &Variant::risk(), |w, _| {
        for ix in w.with_role(Role::Patient) {
            assert_eq!(w.state(ix).str("infection").unwrap(), "susceptible");
        }
    });
    assert!(series(&r, "healthcare", "total_infected").iter().all(|v| *v == 0.0));
}

#[test]
fn capacity_follows_the_hospital_ict_node() {
    let mut t = town();
    t["hazards"] = json!([attack("a", 5, "ict-hosp-c", "attacker")]);
    let r = run(&config(t), &Variant::risk());
    let cap = series(&r, "hosp-c", "general_capacity");
    let down = series(&r, "ict-hosp-c", "availability");
    for tick in 0..cap.len() {
        let want = if down[tick] < 0.5 { 10.0 } else { 20.0 };
        assert_eq!(cap[tick], want, "tick {tick}");
    }
    assert!(cap.contains(&10.0));
    assert!(series(&r, "hosp-o", "general_capacity").iter().all(|c| *c == 5.0));

    let quiet = run(&config(town()), &Variant::risk());
    assert!(series(&quiet, "hosp-c", "general_capacity").iter().all(|c| *c == 20.0));
}

#[test]
fn degradation_never_evicts_admitted_patients() {
    let mut t = town();
    t["horizon_days"] = json!(1);
    t["population"]["districts"] = json!([{"district": "c", "citizens": 40}, {"district": "o", "citizens": 5}]);
    t["health"]["hospitals"][1]["general_capacity"] = json!(0);
    t["hazards"] = json!([outbreak(0, 16, Some("c")), attack("a", 3, "ict-hosp-c", "attacker")]);
    let r = run(&config(t), &Variant::risk());
    let occ = series(&r, "hosp-c", "general_occupancy");
    let cap = series(&r, "hosp-c", "general_capacity");
    assert_eq!(occ[1], 16.0);
    let degraded: Vec<usize> = (0..cap.len()).filter(|&t| cap[t] == 10.0).collect();
    assert!(!degraded.is_empty());
    assert!(degraded.iter().all(|&t| occ[t] == 16.0));
}
