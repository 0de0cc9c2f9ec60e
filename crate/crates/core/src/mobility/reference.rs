//! Built-in mesoscopic traffic simulator.
//!
//! Each tick, every roadway carries a flow `q` (vehicles per hour): its
//! background flow plus one vehicle per injected route crossing it. Speed
//! follows a linear speed-density law `v = vf * (1 - n / (c * f))`, where
//! `n = q * L / v` is the number of vehicles present, `c` the jam capacity
//! and `f` the throughput factor (`light_off_factor` while the controlling
//! light is off). Solving for the stationary speed gives
//! `v = (vf + sqrt(vf^2 - 4 vf q L / (c f))) / 2`, floored at
//! `v_min_frac * vf`. The model is deterministic.

use std::collections::BTreeMap;

use super::adapter::{AdapterError, Command, NetworkSpec, Observables, RoadwayObs, TrafficAdapter};

/// Speed at a given number of vehicles present.
pub fn speed_at_occupancy(occupancy: f64, capacity: f64, vf: f64, v_min_frac: f64) -> f64 {
    vf * (1.0 - occupancy / capacity).max(v_min_frac)
}

/// Stationary speed for `flow` vehicles per `tick_seconds`.
pub fn equilibrium_speed(
    flow: f64,
    length: f64,
    vf: f64,
    capacity: f64,
    throughput: f64,
    v_min_frac: f64,
    tick_seconds: f64,
) -> f64 {
    if flow <= 0.0 {
        return vf;
    }
    let a = flow * length / (tick_seconds * capacity * throughput);
    let disc = vf * vf - 4.0 * vf * a;
    let floor = v_min_frac * vf;
    if disc < 0.0 {
        floor
    } else {
        ((vf + disc.sqrt()) / 2.0).max(floor)
    }
}

#[derive(Default)]
pub struct ReferenceTraffic {
    network: Option<NetworkSpec>,
    index: BTreeMap<String, usize>,
    lights: BTreeMap<String, bool>,
    pending: Vec<Vec<usize>>,
    tick: u64,
    last: Observables,
}

impl ReferenceTraffic {
    pub fn new() -> Self {
        Self::default()
    }

    fn compute(&mut self, tick: u64, routes: &[Vec<usize>]) {
        let net = self.network.as_ref().expect("initialized");
        let mut flow: Vec<f64> = net
            .roadways
            .iter()
            .map(|r| r.background_flow * net.tick_seconds / 3600.0)
            .collect();
        for route in routes {
            for &r in route {
                flow[r] += 1.0;
            }
        }
        let mut roadways = BTreeMap::new();
        for (r, q) in net.roadways.iter().zip(flow) {
            let on = r
                .light
                .as_ref()
                .is_none_or(|l| self.lights.get(l).copied().unwrap_or(true));
            let f = if on { 1.0 } else { net.light_off_factor };
            let v = equilibrium_speed(
                q,
                r.length,
                r.free_flow_speed,
                r.capacity,
                f,
                net.v_min_frac,
                net.tick_seconds,
            );
            roadways.insert(
                r.id.clone(),
                RoadwayObs {
                    mean_speed: v,
                    intensity: q * 3600.0 / net.tick_seconds,
                    occupancy: q * r.length / (net.tick_seconds * v),
                },
            );
        }
        self.last = Observables {
            tick,
            roadways,
            lights: self.lights.clone(),
        };
    }
}

impl TrafficAdapter for ReferenceTraffic {
    fn initialize(&mut self, network: &NetworkSpec, _seed: u64) -> Result<(), AdapterError> {
        let mut index = BTreeMap::new();
        for (i, r) in network.roadways.iter().enumerate() {
            if !(r.length > 0.0 && r.free_flow_speed > 0.0 && r.capacity > 0.0) {
                return Err(AdapterError::Invalid(format!(
                    "roadway `{}` needs positive length, speed and capacity",
                    r.id
                )));
            }
            if let Some(l) = &r.light {
                if !network.lights.contains(l) {
                    return Err(AdapterError::Unknown {
                        kind: "light",
                        id: l.clone(),
                    });
                }
            }
            if index.insert(r.id.clone(), i).is_some() {
                return Err(AdapterError::Invalid(format!("duplicate roadway `{}`", r.id)));
            }
        }
        if !(network.light_off_factor > 0.0 && network.light_off_factor <= 1.0) {
            return Err(AdapterError::Invalid("light_off_factor must be in (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&network.v_min_frac) || network.v_min_frac <= 0.0 {
            return Err(AdapterError::Invalid("v_min_frac must be in (0, 1)".into()));
        }
        self.lights = network.lights.iter().map(|l| (l.clone(), true)).collect();
        self.index = index;
        self.network = Some(network.clone());
        self.pending.clear();
        self.tick = 0;
        self.compute(0, &[]);
        Ok(())
    }

    fn inject(&mut self, commands: &[Command]) -> Result<(), AdapterError> {
        if self.network.is_none() {
            return Err(AdapterError::NotInitialized);
        }
        for c in commands {
            match c {
                Command::InsertRoute { route, .. } => {
                    let ixs = route
                        .iter()
                        .map(|id| {
                            self.index.get(id).copied().ok_or_else(|| AdapterError::Unknown {
                                kind: "roadway",
                                id: id.clone(),
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    self.pending.push(ixs);
                }
                Command::SetLight { light, on } => {
                    let slot = self.lights.get_mut(light).ok_or_else(|| AdapterError::Unknown {
                        kind: "light",
                        id: light.clone(),
                    })?;
                    *slot = *on;
                }
            }
        }
        Ok(())
    }

    fn advance(&mut self, to: u64) -> Result<(), AdapterError> {
        if self.network.is_none() {
            return Err(AdapterError::NotInitialized);
        }
        if to <= self.tick {
            return Err(AdapterError::Lockstep {
                at: self.tick,
                requested: to,
            });
        }
        let routes = std::mem::take(&mut self.pending);
        self.compute(self.tick + 1, &routes);
        for t in self.tick + 2..=to {
            self.compute(t, &[]);
        }
        self.tick = to;
        Ok(())
    }

    fn query(&self) -> Result<Observables, AdapterError> {
        if self.network.is_none() {
            return Err(AdapterError::NotInitialized);
        }
        Ok(self.last.clone())
    }

    fn tick(&self) -> u64 {
        self.tick
    }
}

#[cfg(test)]
mod tests {
    use super::super::adapter::RoadwaySpec;
    use super::*;

    fn road(id: &str, light: Option<&str>) -> RoadwaySpec {
        RoadwaySpec {
            id: id.into(),
            length: 500.0,
            free_flow_speed: 14.0,
            capacity: 20.0,
            background_flow: 0.0,
            light: light.map(Into::into),
            station: true,
        }
    }

    fn net(background: f64) -> NetworkSpec {
        let mut r = road("r1", Some("tl"));
        r.background_flow = background;
        NetworkSpec {
            roadways: vec![r],
            lights: vec!["tl".into()],
            light_off_factor: 0.4,
            v_min_frac: 0.1,
            tick_seconds: 3600.0,
        }
    }

    #[test]
    fn empty_roads_run_at_free_flow() {
        let mut t = ReferenceTraffic::new();
        t.initialize(&net(0.0), 1).unwrap();
        t.advance(1).unwrap();
        assert_eq!(t.query().unwrap().roadways["r1"].mean_speed, 14.0);
    }

    #[test]
    fn full_roadway_runs_at_the_floor() {
        assert!((speed_at_occupancy(20.0, 20.0, 14.0, 0.1) - 1.4).abs() < 1e-12);
        assert!((speed_at_occupancy(40.0, 20.0, 14.0, 0.1) - 1.4).abs() < 1e-12);
        assert_eq!(speed_at_occupancy(0.0, 20.0, 14.0, 0.1), 14.0);
    }

    #[test]
    fn equilibrium_speed_satisfies_the_speed_density_law() {
        let (q, l, vf, c) = (300.0, 500.0, 14.0, 20.0);
        let v = equilibrium_speed(q, l, vf, c, 1.0, 0.1, 3600.0);
        let n = q * l / (3600.0 * v);
        assert!((v - speed_at_occupancy(n, c, vf, 0.1)).abs() < 1e-9);
        let mut last = vf;
        for q in (0..2000).step_by(50) {
            let v = equilibrium_speed(q as f64, l, vf, c, 1.0, 0.1, 3600.0);
            assert!(v <= last + 1e-12);
            assert!((1.4..=14.0).contains(&v));
            last = v;
        }
    }

    #[test]
    fn light_off_slows_the_controlled_roadway() {
        let mut on = ReferenceTraffic::new();
        let mut off = ReferenceTraffic::new();
        on.initialize(&net(300.0), 1).unwrap();
        off.initialize(&net(300.0), 1).unwrap();
        off.inject(&[Command::SetLight {
            light: "tl".into(),
            on: false,
        }])
        .unwrap();
        on.advance(1).unwrap();
        off.advance(1).unwrap();
        let a = on.query().unwrap().roadways["r1"].mean_speed;
        let b = off.query().unwrap().roadways["r1"].mean_speed;
        assert!(b < a, "{b} !< {a}");
    }

    #[test]
    fn lockstep_is_enforced() {
        let mut t = ReferenceTraffic::new();
        assert_eq!(t.advance(1), Err(AdapterError::NotInitialized));
        t.initialize(&net(0.0), 1).unwrap();
        t.advance(1).unwrap();
        assert!(matches!(t.advance(1), Err(AdapterError::Lockstep { .. })));
        assert!(t
            .inject(&[Command::InsertRoute {
                vehicle: "v".into(),
                route: vec!["nope".into()]
            }])
            .is_err());
    }

    #[test]
    fn routes_add_flow_for_one_tick() {
        let mut t = ReferenceTraffic::new();
        t.initialize(&net(0.0), 1).unwrap();
        let cmds: Vec<Command> = (0..10)
            .map(|i| Command::InsertRoute {
                vehicle: format!("v{i}"),
                route: vec!["r1".into()],
            })
            .collect();
        t.inject(&cmds).unwrap();
        t.advance(1).unwrap();
        let o = t.query().unwrap();
        assert_eq!(o.roadways["r1"].intensity, 10.0);
        assert!(o.roadways["r1"].mean_speed < 14.0);
        t.advance(2).unwrap();
        assert_eq!(t.query().unwrap().roadways["r1"].intensity, 0.0);
    }
}
