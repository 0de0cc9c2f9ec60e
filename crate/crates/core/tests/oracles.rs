use citysim::hazard::HazardSchedule;
use citysim::metrics::ObservationPolicy;
use citysim::oracle;
use citysim::run::run;
use citysim::scenario::{prepare, Variant};
use citysim::toy;

#[test]
fn toy_epidemic_tracks_the_sir_integrator() {
    let c = toy::sir_comparison(&toy::SirToy::default(), 100..110).unwrap();
    println!("sup error {:.3}", c.sup_error);
    assert!(c.sup_error < 0.15);
}

#[test]
fn seeded_infections_are_exact_and_reproducible() {
    let config = toy::sir_config(50, 5, 0.0, 4.0, 0.05, 1, 3);
    let seeded = |config| {
        let p = prepare(config, &Variant::risk()).unwrap();
        let r = run(p.world, &p.schedule, 0, &ObservationPolicy::default()).unwrap();
        assert_eq!(r.series.get("healthcare", "total_infected").unwrap(), &[5.0]);
        r.world
            .records()
            .filter(|(ix, rec)| {
                rec.role == citysim::kernel::Role::Patient
                    && r.world.state(*ix).str("infection").unwrap() == "infected"
            })
            .map(|(_, rec)| rec.id.clone())
            .collect::<Vec<_>>()
    };
    assert_eq!(seeded(&config), seeded(&config));
}

#[test]
fn tree_compromise_times_match_relaxation() {
    for target in ["root", "a", "b1"] {
        let (got, want) = toy::attack_timing(toy::TREE, target).unwrap();
        assert_eq!(got, want, "target {target}");
    }
}

#[test]
fn chain_with_a_hardened_middle_stops_the_attack() {
    let chain: &[(&str, &[&str])] = &[("a", &[]), ("b", &["a"]), ("c", &["b"])];
    let (got, _) = toy::attack_timing(chain, "a").unwrap();
    assert_eq!(got["a"], Some(4));
    assert_eq!(got["b"], Some(5));
    assert_eq!(got["c"], Some(6));

    let mut config = toy::attack_config(chain, "a", 1.0, 1.0, 3, 16, 1);
    config.ict.nodes[1].vulnerability = 0.0;
    let p = prepare(&config, &Variant::risk()).unwrap();
    let r = run(p.world, &p.schedule, p.horizon, &ObservationPolicy::default()).unwrap();
    let t = toy::compromise_ticks(&r.series, &["a", "b", "c"]);
    assert_eq!(t["a"], Some(4));
    assert_eq!(t["b"], None);
    assert_eq!(t["c"], None);
}

#[test]
fn no_propagation_contains_the_attack() {
    for seed in 0..20 {
        let config = toy::attack_config(toy::TREE, "root", 1.0, 0.0, 0, 10, seed);
        let p = prepare(&config, &Variant::risk()).unwrap();
        let r = run(p.world, &p.schedule, p.horizon, &ObservationPolicy::default()).unwrap();
        let ids: Vec<&str> = toy::TREE.iter().map(|(k, _)| *k).collect();
        let hit = toy::compromise_ticks(&r.series, &ids);
        assert_eq!(hit.values().filter(|t| t.is_some()).count(), 1);
    }
}

#[test]
fn star_leaves_average_two() {
    let mean = toy::star_mean(0.5, 1000).unwrap();
    let mc = oracle::star_leaves_monte_carlo(4, 1.0, 0.5, 1000, 99);
    println!("sim {mean} oracle mc {mc}");
    assert!((mean - 2.0).abs() <= 0.1);
    assert!((mc - 2.0).abs() <= 0.1);
}

#[test]
fn hospital_occupancy_matches_the_queue_oracle() {
    let (n, a, mu, beds) = (200, 0.01, 0.05, 30);
    let world = toy::queue_world(n, a, mu, beds, 5).unwrap();
    let r = run(world, &HazardSchedule::empty(), 6000, &ObservationPolicy::default()).unwrap();
    let occ = r.series.get("hospital", "general_occupancy").unwrap();
    let tail = &occ[1000..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let want = oracle::queue_occupancy(n as u64, a, mu, beds as u64);
    println!("sim {mean:.3} oracle {want:.3}");
    assert!((mean - want).abs() / want < 0.1);
    assert!(occ.iter().all(|&o| o <= beds as f64));
}
