mod common;

use serde_json::json;

use citysim::scenario::Variant;
use common::{attack, config, run, series, town};

fn ticks_where(values: &[f64], pred: impl Fn(f64) -> bool) -> Vec<usize> {
    (0..values.len()).filter(|&t| pred(values[t])).collect()
}

#[test]
fn attack_armed_at_a_tick_compromises_its_target_on_the_next() {
    let mut t = town();
    t["hazards"] = json!([attack("a", 20, "ict-c", "attacker")]);
    let r = run(&config(t), &Variant::risk());
    let down = ticks_where(series(&r, "ict-c", "compromised"), |v| v > 0.5);
    assert_eq!(down.first(), Some(&21));
    assert_eq!(r.applied, vec![(20, "a".to_string())]);
}

#[test]
fn recovery_takes_exactly_recovery_ticks() {
    for ticks in [1, 10, 48] {
        let mut t = town();
        t["horizon_days"] = json!(3);
        t["ict"]["nodes"][1]["recovery_ticks"] = json!(ticks);
        t["ict"]["attack_types"]["botnet"]["propagation"] = json!(0.0);
        t["hazards"] = json!([attack("a", 20, "ict-c", "attacker")]);
        let r = run(&config(t), &Variant::risk());
        let down = ticks_where(series(&r, "ict-c", "compromised"), |v| v > 0.5);
        assert_eq!(down.len(), ticks as usize, "recovery_ticks {ticks}");
        assert_eq!(down, (21..21 + ticks as usize).collect::<Vec<_>>());
    }
}

#[test]
fn central_outage_cascades_to_both_districts_the_tick_after_the_attack() {
    let mut t = town();
    for i in 1..5 {
        t["ict"]["nodes"][i]["vulnerability"] = json!(0.0);
    }
    t["hazards"] = json!([attack("a", 20, "ict-city", "attacker")]);
    let r = run(&config(t), &Variant::risk());
    let city = ticks_where(series(&r, "ict-city", "availability"), |v| v < 0.5);
    assert_eq!(city.first(), Some(&21));
    for node in ["ict-c", "ict-o"] {
        assert!(series(&r, node, "compromised").iter().all(|v| *v == 0.0));
        let out = ticks_where(series(&r, node, "availability"), |v| v < 0.5);
        assert_eq!(out.first(), Some(&21), "{node}");
        assert_eq!(out.len(), city.len(), "{node} comes back once the city node does");
    }
}

#[test]
fn district_outage_leaves_the_other_district_alone() {
    let mut t = town();
    t["hazards"] = json!([attack("a", 20, "ict-c", "attacker")]);
    let r = run(&config(t), &Variant::risk());
    assert!(series(&r, "ict-c", "availability").contains(&0.0));
    for node in ["ict-city", "ict-o"] {
        assert!(series(&r, node, "availability").iter().all(|v| *v == 1.0), "{node}");
    }
    let sl = series(&r, "ict", "sl");
    assert!(sl.iter().any(|v| *v > 0.0 && *v < 1.0));
    assert!(series(&r, "ict", "sl.o").iter().all(|v| *v == 1.0));
}

#[test]
fn zero_vulnerability_stops_transmission() {
    let mut t = town();
    t["ict"]["nodes"][1]["vulnerability"] = json!(0.0);
    t["ict"]["nodes"][3]["depends_on"] = json!(["ict-c"]);
    t["hazards"] = json!([attack("a", 20, "ict-city", "attacker")]);
    let r = run(&config(t), &Variant::risk());
    assert!(series(&r, "ict-city", "compromised").contains(&1.0));
    for node in ["ict-c", "ict-hosp-c", "ict-light"] {
        assert!(series(&r, node, "compromised").iter().all(|v| *v == 0.0), "{node}");
    }
    assert!(series(&r, "ict-o", "compromised").contains(&1.0));
}

#[test]
fn without_propagation_only_the_target_falls() {
    let mut t = town();
    t["ict"]["attack_types"]["botnet"]["propagation"] = json!(0.0);
    t["hazards"] = json!([attack("a", 20, "ict-city", "attacker")]);
    let r = run(&config(t), &Variant::risk());
    let peak = series(&r, "ict", "compromised_count").iter().cloned().fold(0.0, f64::max);
    assert_eq!(peak, 1.0);
}

#[test]
fn an_idle_attacker_never_attacks() {
    let r = run(&config(town()), &Variant::risk());
    assert!(series(&r, "attacker", "attacks").iter().all(|v| *v == 0.0));
    assert!(series(&r, "ict", "sl").iter().all(|v| *v == 1.0));
}

#[test]
fn simultaneous_attacks_apply_in_either_order() {
    let a = attack("a", 20, "ict-c", "attacker");
    let b = attack("b", 20, "ict-o", "attacker-2");
    let mut one = town();
    one["hazards"] = json!([a.clone(), b.clone()]);
    let mut two = town();
    two["hazards"] = json!([b, a]);
    let (r1, r2) = (run(&config(one), &Variant::risk()), run(&config(two), &Variant::risk()));
    assert!(series(&r1, "ict-c", "compromised").contains(&1.0));
    assert!(series(&r1, "ict-o", "compromised").contains(&1.0));
    assert_eq!(r1.series, r2.series);
}

#[test]
fn cybersecurity_shortens_the_outage() {
    let mut t = town();
    t["horizon_days"] = json!(3);
    for i in 0..5 {
        t["ict"]["nodes"][i]["vulnerability"] = json!(0.8);
        t["ict"]["nodes"][i]["recovery_ticks"] = json!(30);
    }
    t["hazards"] = json!([attack("a", 20, "ict-city", "attacker")]);
    t["mitigations"] = json!({"cybersecurity": [{"target": {"role": "cyber-infrastructure"},
        "overrides": {"recovery_ticks": {"scale": 0.5}, "vulnerability": {"scale": 0.5}}}]});
    let c = config(t);
    let risk = run(&c, &Variant::risk());
    let cyber = run(&c, &Variant::parse("cybersecurity", &c).unwrap());
    for node in ["ict-city", "ict-c", "ict-o", "ict-hosp-c", "ict-light"] {
        let last = |r| ticks_where(series(r, node, "compromised"), |v| v > 0.5).last().copied();
        if let Some(l) = last(&risk) {
            assert!(last(&cyber).is_none_or(|c| c < l), "{node}");
        } else {
            assert_eq!(last(&cyber), None, "{node}");
        }
    }
    let total = |r| series(r, "ict", "compromised_count").iter().cloned().fold(0.0, f64::max);
    assert!(total(&cyber) <= total(&risk));
}
