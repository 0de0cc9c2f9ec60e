//! Passengers, roadways and traffic lights, federated with a traffic
//! simulator through [`TrafficAdapter`].
//!
//! Roadways and lights are meta-subagents: their state mirrors what the
//! simulator reports after each advance. Passengers turn trip requests into
//! routes, which the federate injects as vehicles.

pub mod adapter;
pub mod reference;
pub mod routing;

use std::collections::BTreeMap;

pub use adapter::{
    AdapterError, Command, NetworkSpec, Observables, RoadwayObs, RoadwaySpec, TrafficAdapter,
};
pub use reference::ReferenceTraffic;
pub use routing::{Link, StreetGraph};

use crate::kernel::{
    AgentCtx, AgentRule, Federate, FederateCtx, Ix, MetricValue, Observer, Params, Role,
    RuleError, State, SystemCtx, SystemId, SystemRule, Value,
};

pub const ON: &str = "on";
pub const OFF: &str = "off";

pub fn roadway_params(spec: &RoadwaySpec, light: Option<Ix>) -> Params {
    Params::new()
        .with("length", Value::Float(spec.length))
        .with("free_flow_speed", Value::Float(spec.free_flow_speed))
        .with("capacity", Value::Float(spec.capacity))
        .with("background_flow", Value::Float(spec.background_flow))
        .with("station", Value::Bool(spec.station))
        .with("light", light.map_or(Value::Null, Value::Ref))
}

pub fn roadway_state(free_flow_speed: f64) -> State {
    State::new()
        .with("mean_speed", Value::Float(free_flow_speed))
        .with("intensity", Value::Float(0.0))
        .with("occupancy", Value::Float(0.0))
}

pub fn light_state() -> State {
    State::new()
        .with("commanded", Value::Tag(ON))
        .with("operation_status", Value::Tag(ON))
}

/// Routes pending trip requests over the street graph.
pub struct Routing {
    routes: BTreeMap<(usize, usize), Option<Vec<Ix>>>,
    place_node: BTreeMap<Ix, usize>,
}

impl Routing {
    /// Precomputes routes between every pair of nodes that host places.
    pub fn new(graph: &StreetGraph<Ix>, place_node: BTreeMap<Ix, usize>) -> Self {
        let mut nodes: Vec<usize> = place_node.values().copied().collect();
        nodes.sort();
        nodes.dedup();
        let mut routes = BTreeMap::new();
        for &a in &nodes {
            for &b in &nodes {
                routes.insert((a, b), graph.shortest_path(a, b));
            }
        }
        Routing { routes, place_node }
    }

    fn node(&self, place: Ix) -> Result<usize, RuleError> {
        self.place_node
            .get(&place)
            .copied()
            .ok_or_else(|| RuleError::domain(format!("place {place} is not on the street graph")))
    }
}

impl SystemRule for Routing {
    fn roles(&self) -> &[Role] {
        &[Role::Passenger]
    }

    fn apply(&self, cx: &mut SystemCtx<'_>) -> Result<(), RuleError> {
        for &p in cx.subjects() {
            let st = cx.state(p)?;
            if !st.bool("pending")? {
                continue;
            }
            let mut next = st.clone().with("pending", Value::Bool(false));
            let (Some(o), Some(d)) = (st.opt_ref("origin")?, st.opt_ref("dest")?) else {
                return Err(RuleError::domain("trip request without endpoints").at(p));
            };
            let (a, b) = (self.node(o).map_err(|e| e.at(p))?, self.node(d).map_err(|e| e.at(p))?);
            match self.routes.get(&(a, b)).cloned().flatten() {
                Some(route) if route.is_empty() => {}
                Some(route) => {
                    let n = st.i64("routed")? + 1;
                    next.set("route", Value::Refs(route));
                    next.set("queued", Value::Bool(true));
                    next.set("routed", Value::Int(n));
                }
                None => {
                    log::warn!(
                        "tick {}: {} has no route between {} and {}, trip dropped",
                        cx.tick,
                        cx.id(p),
                        cx.topology().id(o),
                        cx.topology().id(d)
                    );
                    let n = st.i64("dropped")? + 1;
                    next.set("dropped", Value::Int(n));
                }
            }
            cx.write(p, next)?;
        }
        Ok(())
    }
}

/// Traffic light follows the effective availability of its controller.
pub struct LightCoupling;

impl AgentRule for LightCoupling {
    fn apply(&self, cx: &mut AgentCtx<'_>) -> Result<(), RuleError> {
        let Some(l) = cx.member(SystemId::Mobility) else {
            return Ok(());
        };
        let ok = match cx.member(SystemId::Ict) {
            Some(n) => cx.state(n)?.bool("effective")?,
            None => true,
        };
        let st = cx.state(l)?;
        let mut next = st.clone();
        if next.update("commanded", Value::Tag(if ok { ON } else { OFF })) {
            cx.write(l, next)?;
        }
        Ok(())
    }
}

/// Kernel-side end of the traffic federation.
pub struct MobilityFederate {
    adapter: Box<dyn TrafficAdapter>,
    settings: FederationSettings,
    roadways: Vec<(Ix, String)>,
    lights: Vec<(Ix, String)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FederationSettings {
    pub light_off_factor: f64,
    pub v_min_frac: f64,
    pub tick_seconds: f64,
    pub seed: u64,
}

impl MobilityFederate {
    pub fn new(adapter: Box<dyn TrafficAdapter>, settings: FederationSettings) -> Self {
        MobilityFederate {
            adapter,
            settings,
            roadways: Vec::new(),
            lights: Vec::new(),
        }
    }

    fn mirror(&self, cx: &mut FederateCtx<'_>, obs: &Observables) -> Result<(), String> {
        if obs.tick != cx.tick {
            return Err(format!(
                "observables are for tick {}, expected {}",
                obs.tick, cx.tick
            ));
        }
        for (ix, id) in &self.roadways {
            let o = obs
                .roadways
                .get(id)
                .ok_or_else(|| format!("simulator reported nothing for roadway `{id}`"))?;
            let mut st = cx.state(*ix)?.clone();
            let mut changed = st.update("mean_speed", Value::Float(o.mean_speed));
            changed |= st.update("intensity", Value::Float(o.intensity));
            changed |= st.update("occupancy", Value::Float(o.occupancy));
            if changed {
                cx.write(*ix, st)?;
            }
        }
        for (ix, id) in &self.lights {
            let on = *obs
                .lights
                .get(id)
                .ok_or_else(|| format!("simulator reported nothing for light `{id}`"))?;
            let mut st = cx.state(*ix)?.clone();
            if st.update("operation_status", Value::Tag(if on { ON } else { OFF })) {
                cx.write(*ix, st)?;
            }
        }
        Ok(())
    }
}

fn param_err(e: RuleError) -> String {
    e.to_string()
}

impl Federate for MobilityFederate {
    fn system(&self) -> SystemId {
        SystemId::Mobility
    }

    fn federated_tick(&self) -> u64 {
        self.adapter.tick()
    }

    fn initialize(&mut self, cx: &mut FederateCtx<'_>) -> Result<(), String> {
        let mut roadways = Vec::new();
        let mut lights = Vec::new();
        for &ix in cx.members() {
            match cx.role(ix) {
                Role::Roadway => roadways.push((ix, cx.id(ix).to_string())),
                Role::TrafficLight => lights.push((ix, cx.id(ix).to_string())),
                _ => {}
            }
        }
        let mut specs = Vec::with_capacity(roadways.len());
        for (ix, id) in &roadways {
            let p = cx.params(*ix)?;
            let light = p
                .opt_ref("light")
                .map_err(param_err)?
                .map(|l| cx.id(l).to_string());
            specs.push(RoadwaySpec {
                id: id.clone(),
                length: p.f64("length").map_err(param_err)?,
                free_flow_speed: p.f64("free_flow_speed").map_err(param_err)?,
                capacity: p.f64("capacity").map_err(param_err)?,
                background_flow: p.f64("background_flow").map_err(param_err)?,
                light,
                station: p.bool("station").map_err(param_err)?,
            });
        }
        let network = NetworkSpec {
            roadways: specs,
            lights: lights.iter().map(|(_, id)| id.clone()).collect(),
            light_off_factor: self.settings.light_off_factor,
            v_min_frac: self.settings.v_min_frac,
            tick_seconds: self.settings.tick_seconds,
        };
        self.adapter
            .initialize(&network, self.settings.seed)
            .map_err(|e| e.to_string())?;
        self.roadways = roadways;
        self.lights = lights;
        let obs = self.adapter.query().map_err(|e| e.to_string())?;
        self.mirror(cx, &obs)
    }

    fn sync(&mut self, cx: &mut FederateCtx<'_>) -> Result<(), String> {
        let mut commands = Vec::new();
        for &ix in cx.members() {
            if cx.role(ix) != Role::Passenger {
                continue;
            }
            let st = cx.state(ix)?;
            if !st.bool("queued").map_err(param_err)? {
                continue;
            }
            let route = st
                .refs("route")
                .map_err(param_err)?
                .iter()
                .map(|r| cx.id(*r).to_string())
                .collect();
            commands.push(Command::InsertRoute {
                vehicle: format!("{}@{}", cx.id(ix), cx.tick),
                route,
            });
            let next = st.clone().with("queued", Value::Bool(false));
            cx.write(ix, next)?;
        }
        for (ix, id) in &self.lights {
            let on = cx.state(*ix)?.str("commanded").map_err(param_err)? == ON;
            commands.push(Command::SetLight {
                light: id.clone(),
                on,
            });
        }
        self.adapter.inject(&commands).map_err(|e| e.to_string())?;
        self.adapter.advance(cx.tick).map_err(|e| e.to_string())?;
        let obs = self.adapter.query().map_err(|e| e.to_string())?;
        self.mirror(cx, &obs)
    }
}

pub struct RoadwayMetrics;

impl Observer for RoadwayMetrics {
    fn keys(&self) -> &[&'static str] {
        &["mean_speed", "intensity", "occupancy"]
    }

    fn observe(
        &self,
        _: &Params,
        state: &State,
        out: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError> {
        for &k in self.keys() {
            out.push((k, MetricValue::Number(state.f64(k)?)));
        }
        Ok(())
    }
}

pub struct LightMetrics;

impl Observer for LightMetrics {
    fn keys(&self) -> &[&'static str] {
        &["operation_status"]
    }

    fn observe(
        &self,
        _: &Params,
        state: &State,
        out: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError> {
        let on = state.str("operation_status")? == ON;
        out.push(("operating", MetricValue::Number(if on { 1.0 } else { 0.0 })));
        Ok(())
    }
}
