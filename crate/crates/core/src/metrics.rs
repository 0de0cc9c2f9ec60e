//! Observation: subagent metrics, system aggregates, service levels and
//! the city-level deaths count, recorded as per-tick series.

use std::collections::{BTreeMap, BTreeSet};

use crate::health;
use crate::kernel::{MetricValue, Role, SimError, SystemId, World};

pub const CITY: &str = "city";

/// Share of available infrastructures. Attackers are not passed in.
pub fn sl_ict(available: &[bool]) -> Option<f64> {
    if available.is_empty() {
        return None;
    }
    let up = available.iter().filter(|a| **a).count();
    Some(up as f64 / available.len() as f64)
}

/// Mean over hospitals of `max(0, 1 - unattended / capacity)`, with
/// `(unattended, capacity)` pairs. A hospital without capacity counts as
/// fully degraded.
pub fn sl_healthcare(hospitals: &[(f64, f64)]) -> Option<f64> {
    if hospitals.is_empty() {
        return None;
    }
    let sum: f64 = hospitals
        .iter()
        .map(|&(unattended, capacity)| {
            if capacity <= 0.0 {
                log::warn!("hospital without general capacity, service term set to 0");
                0.0
            } else {
                (1.0 - unattended / capacity).max(0.0)
            }
        })
        .sum();
    Some(sum / hospitals.len() as f64)
}

/// Mean over stations of `min(risk / baseline, 1)`, from
/// `(risk_speed, baseline_speed)` pairs. Stations with a non-positive
/// baseline speed are skipped; `None` when no station is usable.
pub fn sl_mobility(stations: &[(f64, f64)]) -> Option<f64> {
    let ratios: Vec<f64> = stations
        .iter()
        .filter(|(_, b)| *b > 0.0)
        .map(|(r, b)| (r / b).min(1.0))
        .collect();
    if ratios.len() < stations.len() {
        log::debug!(
            "{} station(s) skipped for a zero baseline speed",
            stations.len() - ratios.len()
        );
    }
    if ratios.is_empty() {
        return None;
    }
    Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Per-tick values keyed by `(scope, metric)`. Every series starts at
/// tick 0 and has one value per tick.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Series {
    ticks: usize,
    data: BTreeMap<(String, String), Vec<f64>>,
}

impl Series {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of ticks recorded so far.
    pub fn ticks(&self) -> usize {
        self.ticks
    }

    pub fn get(&self, scope: &str, metric: &str) -> Option<&[f64]> {
        self.data
            .get(&(scope.to_string(), metric.to_string()))
            .map(Vec::as_slice)
    }

    pub fn keys(&self) -> impl Iterator<Item = (&str, &str)> {
        self.data.keys().map(|(s, m)| (s.as_str(), m.as_str()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &[f64])> {
        self.data
            .iter()
            .map(|((s, m), v)| (s.as_str(), m.as_str(), v.as_slice()))
    }

    pub fn scopes_with(&self, metric: &str) -> Vec<&str> {
        self.data
            .keys()
            .filter(|(_, m)| m == metric)
            .map(|(s, _)| s.as_str())
            .collect()
    }

    /// Appends one tick of samples. Keys must be unique and identical
    /// to those of earlier ticks.
    pub fn record(&mut self, tick: usize, samples: Vec<Sample>) -> Result<(), String> {
        if tick != self.ticks {
            return Err(format!("recording tick {tick}, expected {}", self.ticks));
        }
        let mut seen = BTreeSet::new();
        for s in samples {
            if !s.value.is_finite() {
                return Err(format!("{}/{} is not finite: {}", s.scope, s.metric, s.value));
            }
            let key = (s.scope, s.metric);
            if !seen.insert(key.clone()) {
                return Err(format!("duplicate sample {}/{} at tick {tick}", key.0, key.1));
            }
            let v = self.data.entry(key.clone()).or_default();
            if v.len() != tick {
                return Err(format!("{}/{} first appears at tick {tick}", key.0, key.1));
            }
            v.push(s.value);
        }
        if let Some(((s, m), _)) = self.data.iter().find(|(_, v)| v.len() != tick + 1) {
            return Err(format!("{s}/{m} missing at tick {tick}"));
        }
        self.ticks += 1;
        Ok(())
    }

    /// Inserts a whole series computed after the run.
    pub fn insert(&mut self, scope: &str, metric: &str, values: Vec<f64>) -> Result<(), String> {
        if values.len() != self.ticks {
            return Err(format!(
                "{scope}/{metric} has {} values, series has {} ticks",
                values.len(),
                self.ticks
            ));
        }
        self.data
            .insert((scope.to_string(), metric.to_string()), values);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub scope: String,
    pub metric: String,
    pub value: f64,
}

impl Sample {
    pub fn new(scope: impl Into<String>, metric: impl Into<String>, value: f64) -> Self {
        Sample {
            scope: scope.into(),
            metric: metric.into(),
            value,
        }
    }
}

/// Which subagents get their own series. Everything is aggregated.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationPolicy {
    pub roles: BTreeSet<Role>,
    /// Only roadways with a measurement station are exported.
    pub stations_only: bool,
}

impl Default for ObservationPolicy {
    fn default() -> Self {
        ObservationPolicy {
            roles: [
                Role::CyberAttacker,
                Role::CyberInfrastructure,
                Role::Hospital,
                Role::Roadway,
                Role::TrafficLight,
                Role::Place,
            ]
            .into_iter()
            .collect(),
            stations_only: true,
        }
    }
}

#[derive(Default)]
struct Tally {
    sum: BTreeMap<String, f64>,
    count: BTreeMap<String, f64>,
}

impl Tally {
    fn add(&mut self, key: String, v: f64) {
        *self.sum.entry(key.clone()).or_default() += v;
        *self.count.entry(key).or_default() += 1.0;
    }

    fn bump(&mut self, key: String) {
        *self.sum.entry(key).or_default() += 1.0;
    }

    fn mean(&self, key: &str) -> Option<f64> {
        Some(self.sum.get(key)? / self.count.get(key)?)
    }
}

/// Observes the world at its current tick.
pub fn observe(world: &World, policy: &ObservationPolicy) -> Result<Vec<Sample>, SimError> {
    let tick = world.tick();
    let mut out = Vec::new();
    let mut buf = Vec::new();

    let mut ict_nodes: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    let mut hospitals: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut ict = Tally::default();
    let mut hc = Tally::default();
    let mut mob = Tally::default();
    let mut soc = Tally::default();
    let mut land = Tally::default();
    let (mut population, mut dead) = (0.0, 0.0);

    for (ix, rec) in world.records() {
        buf.clear();
        rec.observer()
            .observe(&rec.params, world.state(ix), &mut buf)
            .map_err(|source| SimError::Observe {
                tick,
                subject: rec.id.clone(),
                source,
            })?;
        let num = |key: &str| {
            buf.iter().find_map(|(k, v)| match v {
                MetricValue::Number(x) if *k == key => Some(*x),
                _ => None,
            })
        };
        let label = |key: &str| {
            buf.iter().find_map(|(k, v)| match v {
                MetricValue::Label(x) if *k == key => Some(*x),
                _ => None,
            })
        };
        let station = rec.params.get("station").and_then(|v| match v {
            crate::kernel::Value::Bool(b) => Some(*b),
            _ => None,
        }) == Some(true);
        let district = rec.district.as_deref();
        let scoped = |base: &str| district.map(|d| format!("{base}.{d}"));

        match rec.role {
            Role::CyberInfrastructure => {
                if let Some(a) = num("availability") {
                    let up = a > 0.5;
                    ict_nodes.entry(String::new()).or_default().push(up);
                    if let Some(d) = district {
                        ict_nodes.entry(d.to_string()).or_default().push(up);
                    }
                    if up {
                        ict.bump("available_count".into());
                    }
                }
                if num("compromised").is_some_and(|c| c > 0.5) {
                    ict.bump("compromised_count".into());
                }
            }
            Role::Hospital => {
                if let (Some(u), Some(c)) = (num("unattended"), num("general_capacity")) {
                    hospitals.entry(String::new()).or_default().push((u, c));
                    if let Some(d) = district {
                        hospitals.entry(d.to_string()).or_default().push((u, c));
                    }
                    hc.add("total_unattended".into(), u);
                    hc.add("general_capacity".into(), c);
                }
                let occ = num("general_occupancy").unwrap_or(0.0) + num("icu_occupancy").unwrap_or(0.0);
                hc.add("total_occupancy".into(), occ);
                if let Some(d) = district {
                    hc.add(format!("occupancy.{d}"), occ);
                }
            }
            Role::Patient => {
                population += 1.0;
                if let Some(s) = label("infection_status") {
                    hc.bump(format!("total_{s}"));
                    if s == health::DEAD {
                        dead += 1.0;
                    }
                    if s == health::INFECTED {
                        if let Some(k) = scoped("infected") {
                            hc.bump(k);
                        }
                    }
                }
                if let Some(s) = label("severity").filter(|s| *s != health::NONE) {
                    hc.bump(s.to_string());
                }
            }
            Role::Roadway if station => {
                if let Some(v) = num("mean_speed") {
                    mob.add("mean_station_speed".into(), v);
                    if let Some(k) = scoped("mean_station_speed") {
                        mob.add(k, v);
                    }
                }
            }
            Role::TrafficLight => {
                if num("operating").is_some_and(|o| o < 0.5) {
                    mob.bump("lights_off".into());
                }
            }
            Role::Citizen => {
                if let Some(s) = label("status") {
                    soc.bump(s.to_string());
                }
                if let Some(t) = num("trips") {
                    soc.add("trips".into(), t);
                }
            }
            Role::Place => {
                if let Some(o) = num("occupancy") {
                    land.add("place_occupancy".into(), o);
                }
            }
            _ => {}
        }

        let export = policy.roles.contains(&rec.role)
            && !(rec.role == Role::Roadway && policy.stations_only && !station);
        if export {
            for (k, v) in &buf {
                if let MetricValue::Number(x) = v {
                    out.push(Sample::new(rec.id.as_str(), *k, *x));
                }
            }
        }
    }

    let sys = SystemId::Ict.as_str();
    for (d, nodes) in &ict_nodes {
        let sl = sl_ict(nodes).expect("non-empty by construction");
        out.push(Sample::new(sys, metric_name("sl", d), sl));
    }
    if !ict_nodes.is_empty() {
        for k in ["available_count", "compromised_count"] {
            out.push(Sample::new(sys, k, ict.sum.get(k).copied().unwrap_or(0.0)));
        }
    }

    let sys = SystemId::Healthcare.as_str();
    for (d, hs) in &hospitals {
        let sl = sl_healthcare(hs).expect("non-empty by construction");
        out.push(Sample::new(sys, metric_name("sl", d), sl));
    }
    if population > 0.0 {
        for s in [health::SUSCEPTIBLE, health::INFECTED, health::RECOVERED, health::DEAD] {
            let k = format!("total_{s}");
            out.push(Sample::new(sys, &k, hc.sum.get(&k).copied().unwrap_or(0.0)));
        }
        for s in [health::MILD, health::SEVERE, health::CRITICAL] {
            out.push(Sample::new(sys, s, hc.sum.get(s).copied().unwrap_or(0.0)));
        }
        for d in districts(world) {
            let k = format!("infected.{d}");
            out.push(Sample::new(sys, &k, hc.sum.get(&k).copied().unwrap_or(0.0)));
        }
    }
    for (k, v) in &hc.sum {
        if k.starts_with("total_unattended")
            || k.starts_with("total_occupancy")
            || k.starts_with("occupancy.")
            || k == "general_capacity"
        {
            out.push(Sample::new(sys, k.as_str(), *v));
        }
    }

    let sys = SystemId::Mobility.as_str();
    for k in mob.count.keys() {
        out.push(Sample::new(sys, k.as_str(), mob.mean(k).expect("counted")));
    }
    if world.with_role(Role::TrafficLight).next().is_some() {
        out.push(Sample::new(sys, "lights_off", mob.sum.get("lights_off").copied().unwrap_or(0.0)));
    }

    let sys = SystemId::Social.as_str();
    if world.with_role(Role::Citizen).next().is_some() {
        for s in [
            crate::social::ACTIVE,
            crate::social::ISOLATING,
            crate::social::HOSPITALIZED,
            crate::social::DEAD,
        ] {
            out.push(Sample::new(sys, s, soc.sum.get(s).copied().unwrap_or(0.0)));
        }
        out.push(Sample::new(sys, "trips", soc.sum.get("trips").copied().unwrap_or(0.0)));
    }
    if let Some(v) = land.sum.get("place_occupancy") {
        out.push(Sample::new(SystemId::UrbanLandscape.as_str(), "place_occupancy", *v));
    }

    if population > 0.0 {
        out.push(Sample::new(CITY, "deaths", dead));
        out.push(Sample::new(CITY, "population", population));
    }
    Ok(out)
}

fn metric_name(base: &str, district: &str) -> String {
    if district.is_empty() {
        base.to_string()
    } else {
        format!("{base}.{district}")
    }
}

fn districts(world: &World) -> BTreeSet<&str> {
    world
        .records()
        .filter(|(_, r)| r.role == Role::Patient)
        .filter_map(|(_, r)| r.district.as_deref())
        .collect()
}

/// Mobility service level of a run against its baseline, per tick.
/// `stations` pairs each station id with its district. Ticks without any
/// usable station are recorded as 1.0 and flagged.
#[derive(Clone, Debug, PartialEq)]
pub struct MobilityLevels {
    pub city: Vec<f64>,
    pub by_district: BTreeMap<String, Vec<f64>>,
    pub flagged: Vec<usize>,
}

pub fn mobility_levels(
    risk: &Series,
    baseline: &Series,
    stations: &[(String, Option<String>)],
) -> Result<MobilityLevels, String> {
    let n = risk.ticks();
    if baseline.ticks() != n {
        return Err(format!(
            "runs are not tick-aligned: {n} vs {} ticks",
            baseline.ticks()
        ));
    }
    let mut groups: BTreeMap<String, Vec<(&[f64], &[f64])>> = BTreeMap::new();
    for (id, district) in stations {
        let r = risk
            .get(id, "mean_speed")
            .ok_or_else(|| format!("station `{id}` missing from the run"))?;
        let b = baseline
            .get(id, "mean_speed")
            .ok_or_else(|| format!("station `{id}` missing from the baseline"))?;
        groups.entry(String::new()).or_default().push((r, b));
        if let Some(d) = district {
            groups.entry(d.clone()).or_default().push((r, b));
        }
    }
    let mut out = MobilityLevels {
        city: vec![1.0; n],
        by_district: BTreeMap::new(),
        flagged: Vec::new(),
    };
    for (d, members) in &groups {
        let mut values = Vec::with_capacity(n);
        for t in 0..n {
            let pairs: Vec<(f64, f64)> = members.iter().map(|(r, b)| (r[t], b[t])).collect();
            match sl_mobility(&pairs) {
                Some(v) => values.push(v),
                None => {
                    if d.is_empty() {
                        out.flagged.push(t);
                    }
                    values.push(1.0);
                }
            }
        }
        if d.is_empty() {
            out.city = values;
        } else {
            out.by_district.insert(d.clone(), values);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ict_level_is_the_available_share() {
        assert_eq!(sl_ict(&[true; 7]), Some(1.0));
        let v = sl_ict(&[true, true, true, true, false, false, false]).unwrap();
        assert!((v - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(sl_ict(&[]), None);
    }

    #[test]
    fn healthcare_level_clamps_and_handles_zero_capacity() {
        assert_eq!(sl_healthcare(&[(0.0, 10.0)]), Some(1.0));
        assert_eq!(sl_healthcare(&[(30.0, 10.0)]), Some(0.0));
        assert_eq!(sl_healthcare(&[(0.0, 0.0), (0.0, 10.0)]), Some(0.5));
    }

    #[test]
    fn mobility_level_skips_zero_baselines() {
        assert_eq!(sl_mobility(&[(5.0, 0.0), (1.0, 2.0)]), Some(0.5));
        assert_eq!(sl_mobility(&[(5.0, 0.0)]), None);
        assert_eq!(sl_mobility(&[(3.0, 3.0), (4.0, 4.0)]), Some(1.0));
    }

    #[test]
    fn series_rejects_gaps_and_duplicates() {
        let mut s = Series::new();
        s.record(0, vec![Sample::new("a", "x", 1.0)]).unwrap();
        assert!(s.record(0, vec![Sample::new("a", "x", 1.0)]).is_err());
        let mut t = s.clone();
        assert!(t
            .record(1, vec![Sample::new("a", "x", 1.0), Sample::new("a", "x", 2.0)])
            .is_err());
        let mut t = s.clone();
        assert!(t.record(1, vec![]).is_err());
        let mut t = s.clone();
        assert!(t
            .record(1, vec![Sample::new("a", "x", 2.0), Sample::new("b", "x", 2.0)])
            .is_err());
        assert!(s.record(1, vec![Sample::new("a", "x", f64::NAN)]).is_err());
        s.record(1, vec![Sample::new("a", "x", 2.0)]).unwrap();
        assert_eq!(s.get("a", "x"), Some(&[1.0, 2.0][..]));
    }

    #[test]
    fn self_comparison_is_full_service() {
        let mut s = Series::new();
        for t in 0..3 {
            s.record(t, vec![Sample::new("r1", "mean_speed", 3.0 + t as f64)])
                .unwrap();
        }
        let st = vec![("r1".to_string(), Some("c".to_string()))];
        let m = mobility_levels(&s, &s, &st).unwrap();
        assert_eq!(m.city, vec![1.0; 3]);
        assert_eq!(m.by_district["c"], vec![1.0; 3]);
    }
}
