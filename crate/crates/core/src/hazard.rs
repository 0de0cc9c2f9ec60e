//! Scheduled hazardous events, applied as parameter variations on target
//! subagents plus kind-specific payloads.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::health;
use crate::ict::{self, AttackType};
use crate::kernel::{Ix, Params, Role, SimError, Stage, Value, World};

/// Which subagents an event or mitigation touches. All given criteria must
/// match; at least one must be given.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub district: Option<String>,
}

impl Selector {
    pub fn id(id: &str) -> Self {
        Selector {
            id: Some(id.to_string()),
            ..Self::default()
        }
    }

    pub fn role(role: Role) -> Self {
        Selector {
            role: Some(role.to_string()),
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.id.is_none() && self.role.is_none() && self.district.is_none() {
            return Err("selector names no id, role or district".into());
        }
        if let Some(r) = &self.role {
            r.parse::<Role>().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn matches(&self, id: &str, role: Role, district: Option<&str>) -> bool {
        self.id.as_deref().is_none_or(|x| x == id)
            && self.role.as_deref().is_none_or(|r| r == role.as_str())
            && self
                .district
                .as_deref()
                .is_none_or(|d| district == Some(d))
    }

    pub fn resolve(&self, world: &World) -> Vec<Ix> {
        world
            .records()
            .filter(|(_, r)| self.matches(&r.id, r.role, r.district.as_deref()))
            .map(|(ix, _)| ix)
            .collect()
    }
}

impl std::fmt::Display for Selector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if let Some(x) = &self.id {
            parts.push(format!("id={x}"));
        }
        if let Some(x) = &self.role {
            parts.push(format!("role={x}"));
        }
        if let Some(x) = &self.district {
            parts.push(format!("district={x}"));
        }
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum OverrideOp {
    Set(serde_json::Value),
    Scale(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Override {
    pub param: String,
    pub op: OverrideOp,
}

/// Applies overrides to one parameter map. Every named parameter must
/// already exist.
pub fn apply_overrides(params: &mut Params, overrides: &[Override]) -> Result<(), String> {
    for o in overrides {
        let current = params
            .get(&o.param)
            .ok_or_else(|| format!("unknown parameter `{}`", o.param))?;
        let next = match &o.op {
            OverrideOp::Set(v) => Value::from_json(v)
                .ok_or_else(|| format!("`{}`: nested objects are not parameter values", o.param))?,
            OverrideOp::Scale(k) => match current {
                Value::Int(n) => Value::Int(((*n as f64) * k).round() as i64),
                Value::Float(x) => Value::Float(x * k),
                other => {
                    return Err(format!(
                        "cannot scale `{}` holding a {}",
                        o.param,
                        other.kind()
                    ))
                }
            },
        };
        params.set(&o.param, next);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum HazardKind {
    /// Arms `attacker` against every matched cyber-infrastructure.
    Cyberattack {
        attacker: String,
        attack_type: AttackType,
    },
    /// Infects `count` susceptible patients among the matched ones.
    DiseaseSeed { count: usize },
    GenericOverride,
}

impl HazardKind {
    pub fn name(&self) -> &'static str {
        match self {
            HazardKind::Cyberattack { .. } => "cyberattack",
            HazardKind::DiseaseSeed { .. } => "disease_seed",
            HazardKind::GenericOverride => "generic_override",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HazardEvent {
    pub id: String,
    pub trigger_tick: i64,
    pub kind: HazardKind,
    pub target: Selector,
    pub overrides: Vec<Override>,
}

/// Events in trigger order; ties keep their declaration order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HazardSchedule {
    events: Vec<HazardEvent>,
}

impl HazardSchedule {
    pub fn new(mut events: Vec<HazardEvent>) -> Self {
        events.sort_by_key(|e| e.trigger_tick);
        HazardSchedule { events }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[HazardEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_trigger(&self) -> Option<i64> {
        self.events.first().map(|e| e.trigger_tick)
    }

    /// Checks every event against a built world. Never fails; returns the
    /// list of problems.
    pub fn validate(&self, world: &World) -> Vec<String> {
        let mut errs = Vec::new();
        let mut seen = BTreeSet::new();
        for e in &self.events {
            let at = format!("hazard `{}`", e.id);
            if !seen.insert(&e.id) {
                errs.push(format!("{at}: duplicate event id"));
            }
            if e.trigger_tick < 0 {
                errs.push(format!("{at}: negative trigger tick {}", e.trigger_tick));
            }
            if let Err(m) = e.target.check() {
                errs.push(format!("{at}: {m}"));
                continue;
            }
            let targets = e.target.resolve(world);
            if targets.is_empty() {
                errs.push(format!("{at}: selector {} matches no subagent", e.target));
                continue;
            }
            for o in &e.overrides {
                if let Some(ix) = targets
                    .iter()
                    .find(|ix| world.record(**ix).params.get(&o.param).is_none())
                {
                    errs.push(format!(
                        "{at}: parameter `{}` does not exist on `{}`",
                        o.param,
                        world.record(*ix).id
                    ));
                }
            }
            match &e.kind {
                HazardKind::Cyberattack { attacker, .. } => {
                    match world.lookup(attacker) {
                        Some(a) if world.record(a).role == Role::CyberAttacker => {}
                        _ => errs.push(format!("{at}: `{attacker}` is not a cyber-attacker")),
                    }
                    if let Some(ix) = targets
                        .iter()
                        .find(|ix| world.record(**ix).role != Role::CyberInfrastructure)
                    {
                        errs.push(format!(
                            "{at}: target `{}` is not a cyber-infrastructure",
                            world.record(*ix).id
                        ));
                    }
                }
                HazardKind::DiseaseSeed { count } => {
                    let patients = targets
                        .iter()
                        .filter(|ix| world.record(**ix).role == Role::Patient)
                        .count();
                    if patients < *count {
                        errs.push(format!(
                            "{at}: asks for {count} patients, selector matches {patients}"
                        ));
                    }
                }
                HazardKind::GenericOverride => {
                    if e.overrides.is_empty() {
                        errs.push(format!("{at}: generic override without overrides"));
                    }
                }
            }
        }
        errs
    }
}

/// Applies every event due at `tick`. Returns the ids of applied events.
pub fn apply_due(
    world: &mut World,
    tick: u64,
    schedule: &HazardSchedule,
) -> Result<Vec<String>, SimError> {
    let mut applied = Vec::new();
    for e in schedule
        .events
        .iter()
        .filter(|e| e.trigger_tick == tick as i64)
    {
        let fail = |message: String| SimError::Hazard {
            tick,
            event: e.id.clone(),
            message,
        };
        let targets = e.target.resolve(world);
        if targets.is_empty() {
            return Err(fail(format!("selector {} matches no subagent", e.target)));
        }
        for &ix in &targets {
            let id = world.record(ix).id.clone();
            apply_overrides(world.params_mut(ix), &e.overrides)
                .map_err(|m| fail(format!("`{id}`: {m}")))?;
        }
        match &e.kind {
            HazardKind::Cyberattack {
                attacker,
                attack_type,
            } => {
                let a = world
                    .lookup(attacker)
                    .filter(|a| world.record(*a).role == Role::CyberAttacker)
                    .ok_or_else(|| fail(format!("`{attacker}` is not a cyber-attacker")))?;
                let armed = ict::arm(world.state(a), targets, *attack_type);
                world.set_state(a, armed);
            }
            HazardKind::DiseaseSeed { count } => {
                let purpose = format!("seed:{}", e.id);
                let mut ranked: Vec<(f64, Ix)> = Vec::new();
                for &ix in &targets {
                    if world.record(ix).role != Role::Patient {
                        continue;
                    }
                    let st = world.state(ix);
                    if st.str("infection").map_err(|m| fail(m.to_string()))? == health::SUSCEPTIBLE {
                        ranked.push((world.rng(ix, Stage::Hazard, &purpose).uniform(), ix));
                    }
                }
                if ranked.len() < *count {
                    log::warn!(
                        "hazard `{}`: only {} susceptible patients for {} seeds",
                        e.id,
                        ranked.len(),
                        count
                    );
                }
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(_, ix) in ranked.iter().take(*count) {
                    let next = health::infect(world.state(ix))
                        .map_err(|m| fail(m.to_string()))?
                        .expect("susceptible patients can be infected");
                    world.set_state(ix, next);
                }
            }
            HazardKind::GenericOverride => {}
        }
        log::info!("tick {tick}: applied {} `{}`", e.kind.name(), e.id);
        applied.push(e.id.clone());
    }
    Ok(applied)
}
