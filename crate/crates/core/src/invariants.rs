//! Conservation and bound checks, run after every observation.

use std::collections::BTreeMap;

use crate::health;
use crate::kernel::{Ix, Role, RuleError, World};
use crate::metrics::{Series, CITY};
use crate::social;

/// Carries the previous tick's values for the monotonicity checks.
#[derive(Default)]
pub struct Invariants {
    deaths: f64,
    recovered: usize,
    /// `(occupancy, capacity)` per hospital and bed class.
    beds: BTreeMap<(Ix, usize), (i64, i64)>,
    /// Ticks checked so far.
    pub ticks: u64,
}

fn fail(world: &World, ix: Ix, what: impl std::fmt::Display) -> String {
    format!("{}: {what}", world.record(ix).id)
}

impl Invariants {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, world: &World, series: &Series) -> Result<(), String> {
        self.check_world(world).map_err(|e| format!("invariant violated: {e}"))?;
        self.check_series(series).map_err(|e| format!("invariant violated: {e}"))?;
        self.ticks += 1;
        Ok(())
    }

    fn check_world(&mut self, world: &World) -> Result<(), String> {
        let err = |ix: Ix| move |e: RuleError| fail(world, ix, e);

        let mut patients = 0usize;
        let mut by_state: BTreeMap<&str, usize> = BTreeMap::new();
        let mut admitted = 0i64;
        for p in world.with_role(Role::Patient) {
            let st = world.state(p);
            let infection = st.str("infection").map_err(err(p))?;
            *by_state.entry(infection).or_default() += 1;
            patients += 1;
            if st.opt_ref("located_in").map_err(err(p))?.is_some() {
                if infection != health::INFECTED {
                    return Err(fail(world, p, format!("{infection} patient holds a bed")));
                }
                admitted += 1;
            }
        }
        let known: usize = [health::SUSCEPTIBLE, health::INFECTED, health::RECOVERED, health::DEAD]
            .iter()
            .map(|s| by_state.get(s).copied().unwrap_or(0))
            .sum();
        if known != patients {
            return Err(format!("{patients} patients but {known} in S, I, R or D"));
        }
        let recovered = by_state.get(health::RECOVERED).copied().unwrap_or(0);
        if recovered < self.recovered {
            return Err(format!("recovered fell from {} to {recovered}", self.recovered));
        }
        self.recovered = recovered;

        let mut occupied = 0i64;
        for h in world.with_role(Role::Hospital) {
            let (st, p) = (world.state(h), &world.record(h).params);
            for (i, (occ, cap, nominal)) in [
                ("general_occupancy", "general_capacity", "nominal_general_capacity"),
                ("icu_occupancy", "icu_capacity", "nominal_icu_capacity"),
            ]
            .into_iter()
            .enumerate()
            {
                let o = st.i64(occ).map_err(err(h))?;
                let c = st.i64(cap).map_err(err(h))?;
                let n = p.i64(nominal).map_err(err(h))?;
                // Admissions see the capacity left by the previous tick.
                // Neither degradation nor a lowered nominal capacity evicts,
                // so occupancy may sit above nominal but not grow there.
                let (before, limit) = self.beds.get(&(h, i)).copied().unwrap_or((0, n));
                if o < 0 || (o > n && o > before) {
                    return Err(fail(world, h, format!("{occ} {o} outside 0..={n}")));
                }
                if o > before && o > limit {
                    return Err(fail(world, h, format!("{occ} grew to {o} above {cap} {limit}")));
                }
                self.beds.insert((h, i), (o, c));
                occupied += o;
            }
        }
        if occupied != admitted {
            return Err(format!("{admitted} admitted patients but {occupied} occupied beds"));
        }

        let mut hospitalized = 0i64;
        for c in world.with_role(Role::Citizen) {
            let st = world.state(c);
            let status = st.str("status").map_err(err(c))?;
            let placed = st.opt_ref("place").map_err(err(c))?.is_some();
            let moving = st.bool("in_transit").map_err(err(c))?;
            let ok = match status {
                social::DEAD | social::HOSPITALIZED => !placed && !moving,
                _ => placed != moving,
            };
            if !ok {
                return Err(fail(
                    world,
                    c,
                    format!("{status} citizen with place={placed} in_transit={moving}"),
                ));
            }
            hospitalized += i64::from(status == social::HOSPITALIZED);
        }
        if world.with_role(Role::Citizen).next().is_some() && patients > 0 && hospitalized != admitted {
            return Err(format!("{hospitalized} hospitalized citizens, {admitted} admitted patients"));
        }

        for pl in world.with_role(Role::Place) {
            let st = world.state(pl);
            let occ = st.i64("occupancy").map_err(err(pl))?;
            let cap = world.record(pl).params.i64("capacity").map_err(err(pl))?;
            if occ < 0 || occ > cap || occ as usize != st.refs("occupants").map_err(err(pl))?.len() {
                return Err(fail(world, pl, format!("occupancy {occ} with capacity {cap}")));
            }
        }
        Ok(())
    }

    fn check_series(&mut self, series: &Series) -> Result<(), String> {
        let Some(t) = series.ticks().checked_sub(1) else {
            return Ok(());
        };
        for (scope, metric, values) in series.iter() {
            let v = values[t];
            if !v.is_finite() {
                return Err(format!("{scope}.{metric} = {v}"));
            }
            if (metric == "sl" || metric.starts_with("sl.")) && !(0.0..=1.0).contains(&v) {
                return Err(format!("{scope}.{metric} = {v} outside [0, 1]"));
            }
        }
        if let Some(d) = series.get(CITY, "deaths") {
            let d = d[t];
            let n = series.get(CITY, "population").map_or(f64::INFINITY, |p| p[t]);
            if d < self.deaths || d > n {
                return Err(format!("city deaths {d} after {}, population {n}", self.deaths));
            }
            self.deaths = d;
        }
        Ok(())
    }
}
