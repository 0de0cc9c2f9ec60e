use proptest::prelude::*;

use citysim::metrics::{sl_healthcare, sl_ict, sl_mobility};
use citysim::report::run_variants;
use citysim::scenario::Variant;
use citysim::toy;

fn hospitals() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0u32..60, 0u32..40).prop_map(|(u, c)| (u as f64, c as f64)), 1..8)
}

fn stations() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..30.0, 0.1f64..30.0), 1..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ict_level_is_bounded_and_grows_with_availability(
        up in prop::collection::vec(any::<bool>(), 1..20),
        pick in any::<prop::sample::Index>(),
    ) {
        let before = sl_ict(&up).unwrap();
        prop_assert!((0.0..=1.0).contains(&before));
        let mut more = up.clone();
        more[pick.index(up.len())] = true;
        prop_assert!(sl_ict(&more).unwrap() >= before);
    }

    #[test]
    fn healthcare_level_is_bounded_and_monotone(
        hs in hospitals(),
        pick in any::<prop::sample::Index>(),
        extra in 1u32..20,
    ) {
        let i = pick.index(hs.len());
        let before = sl_healthcare(&hs).unwrap();
        prop_assert!((0.0..=1.0).contains(&before));

        let mut worse = hs.clone();
        worse[i].0 += extra as f64;
        prop_assert!(sl_healthcare(&worse).unwrap() <= before);

        let mut roomier = hs.clone();
        roomier[i].1 += extra as f64;
        prop_assert!(sl_healthcare(&roomier).unwrap() >= before);
    }

    #[test]
    fn mobility_level_is_bounded_and_grows_with_risk_speed(
        st in stations(),
        pick in any::<prop::sample::Index>(),
        faster in 0.0f64..10.0,
    ) {
        let before = sl_mobility(&st).unwrap();
        prop_assert!((0.0..=1.0).contains(&before));
        let mut more = st.clone();
        more[pick.index(st.len())].0 += faster;
        prop_assert!(sl_mobility(&more).unwrap() >= before);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn every_service_level_of_a_random_city_stays_in_bounds(seed in any::<u64>()) {
        let config = toy::mini_city(seed);
        let variants = [Variant::baseline(), Variant::risk(), Variant::parse("hardened", &config).unwrap()];
        let report = run_variants(&config, &variants).unwrap();
        for run in &report.runs {
            prop_assert!(run.checked_ticks > 0);
            for (key, values) in &run.sl {
                for v in values {
                    prop_assert!((0.0..=1.0).contains(v), "{} {key} = {v}", run.name);
                }
            }
        }
        let risk = report.get("risk").unwrap().sl("ict");
        let hardened = report.get("hardened").unwrap().sl("ict");
        prop_assert!(hardened.iter().zip(risk).all(|(h, r)| h >= r));
    }
}
