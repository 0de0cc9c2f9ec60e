mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::json;

use citysim::export::{self, Manifest};
use citysim::report::{run_variants, Report};
use citysim::scenario::{ScenarioConfig, Variant};
use common::{attack, config, outbreak, town};

fn troubled_town() -> ScenarioConfig {
    let mut t = town();
    t["population"]["districts"] = json!([{"district": "c", "citizens": 60}, {"district": "o", "citizens": 20}]);
    t["population"]["contacts_k"] = json!(4.0);
    t["health"]["disease"] = json!({
        "beta": 0.15, "mild_ticks": 6.0, "severe_ticks": 12.0, "critical_ticks": 8.0,
        "p_severe": 0.6, "p_critical": 0.3, "p_die_treated": 0.1, "p_die_untreated": 0.6
    });
    t["health"]["hospitals"][0]["general_capacity"] = json!(6);
    t["health"]["hospitals"][1]["general_capacity"] = json!(2);
    t["health"]["hospitals"][0]["icu_capacity"] = json!(1);
    t["hazards"] = json!([outbreak(0, 6, Some("c")), attack("a", 20, "ict-c", "attacker")]);
    t["mitigations"] = json!({
        "beds": [{"target": {"role": "hospital"}, "overrides": {"nominal_general_capacity": {"scale": 1.5}}}],
        "cybersecurity": [{"target": {"role": "cyber-infrastructure"},
            "overrides": {"recovery_ticks": {"scale": 0.5}, "vulnerability": {"scale": 0.5}}}]
    });
    config(t)
}

fn report() -> (ScenarioConfig, Report) {
    let c = troubled_town();
    let r = run_variants(&c, &Variant::all(&c)).unwrap();
    (c, r)
}

fn write(report: &Report, dir: &Path) -> Vec<String> {
    let files = export::write_report(report, dir).unwrap();
    let manifest = Manifest {
        scenario: report.scenario.clone(),
        config_sha256: export::sha256_hex(b"{}"),
        seed: report.seed,
        seed_source: "file".into(),
        version: "test".into(),
        wall_seconds: 0.0,
        variants: report.runs.iter().map(|r| r.name.clone()).collect(),
        files: Vec::new(),
    };
    export::write_manifest(dir, manifest, &files).unwrap();
    files
}

/// `(scope, metric) -> values by tick` from a long-format CSV.
fn read_long(path: &Path) -> BTreeMap<(String, String), Vec<f64>> {
    let mut out: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut r = csv::Reader::from_path(path).unwrap();
    for row in r.records() {
        let row = row.unwrap();
        let tick: usize = row[0].parse().unwrap();
        let v = out.entry((row[2].to_string(), row[3].to_string())).or_default();
        assert_eq!(v.len(), tick, "rows out of tick order");
        v.push(row[4].parse().unwrap());
    }
    out
}

#[test]
fn a_four_run_report_writes_the_expected_files() {
    let (_, r) = report();
    let dir = tempfile::tempdir().unwrap();
    let files = write(&r, dir.path());
    let mut on_disk: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    let sl: Vec<_> = on_disk.iter().filter(|f| f.ends_with("_sl.csv")).collect();
    assert_eq!(sl, ["baseline_sl.csv", "beds_sl.csv", "cybersecurity_sl.csv", "risk_sl.csv"]);
    assert!(on_disk.contains(&"deaths.csv".to_string()));
    assert!(on_disk.contains(&"manifest.json".to_string()));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let hashed = manifest["files"].as_array().unwrap();
    assert_eq!(hashed.len(), files.len());
    for entry in hashed {
        let name = entry[0].as_str().unwrap();
        let bytes = fs::read(dir.path().join(name)).unwrap();
        assert_eq!(entry[1].as_str().unwrap(), export::sha256_hex(&bytes), "{name}");
    }
}

#[test]
fn exporting_twice_gives_identical_bytes() {
    let (_, r) = report();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let files = write(&r, a.path());
    write(&r, b.path());
    for f in files.iter().chain(std::iter::once(&"manifest.json".to_string())) {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn service_levels_recompute_from_the_exported_metrics() {
    let (c, r) = report();
    let dir = tempfile::tempdir().unwrap();
    write(&r, dir.path());
    let base = read_long(&dir.path().join("baseline_metrics.csv"));
    let hospital_district: BTreeMap<&str, &str> = c
        .health
        .as_ref()
        .unwrap()
        .hospitals
        .iter()
        .map(|h| (h.id.as_str(), h.district.as_str()))
        .collect();

    let mut checked = 0;
    for run in &r.runs {
        let m = read_long(&dir.path().join(format!("{}_metrics.csv", run.name)));
        let sl = read_long(&dir.path().join(format!("{}_sl.csv", run.name)));
        let exported = |scope: &str| &sl[&(scope.to_string(), "sl".to_string())];
        let ticks = exported("ict").len();
        let by_metric = |metric: &str| -> Vec<(&String, &Vec<f64>)> {
            m.iter().filter(|((_, k), _)| k == metric).map(|((s, _), v)| (s, v)).collect()
        };

        let nodes = by_metric("availability");
        assert_eq!(nodes.len(), c.ict.nodes.len());
        let stations = by_metric("mean_speed");
        for t in 0..ticks {
            let ict = nodes.iter().map(|(_, v)| v[t]).sum::<f64>() / nodes.len() as f64;
            assert!((ict - exported("ict")[t]).abs() < 1e-12, "{} ict tick {t}", run.name);

            let mut per_district: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for (h, d) in &hospital_district {
                let u = m[&(h.to_string(), "unattended".to_string())][t];
                let cap = m[&(h.to_string(), "general_capacity".to_string())][t];
                per_district.entry(d).or_default().push((1.0 - u / cap).max(0.0));
            }
            let all: Vec<f64> = per_district.values().flatten().copied().collect();
            let hc = all.iter().sum::<f64>() / all.len() as f64;
            assert!((hc - exported("healthcare")[t]).abs() < 1e-12, "{} healthcare tick {t}", run.name);
            for (d, terms) in &per_district {
                let v = terms.iter().sum::<f64>() / terms.len() as f64;
                assert!((v - exported(&format!("healthcare.{d}"))[t]).abs() < 1e-12);
            }

            let mob = stations
                .iter()
                .map(|(s, v)| (v[t] / base[&((*s).clone(), "mean_speed".to_string())][t]).min(1.0))
                .sum::<f64>()
                / stations.len() as f64;
            assert!((mob - exported("mobility")[t]).abs() < 1e-12, "{} mobility tick {t}", run.name);
            checked += 1;
        }
    }
    assert_eq!(checked, 4 * r.runs[0].deaths.len());
    let risk = r.get("risk").unwrap();
    for s in ["ict", "healthcare", "mobility"] {
        assert!(risk.sl(s).iter().any(|v| *v < 1.0), "{s} never degraded, the check is vacuous");
    }
}
