//! Cyber-attackers and cyber-infrastructures.
//!
//! Dependency edges point from a dependent node to the node it depends on.
//! Attacks travel the other way: a compromised node re-transmits to the
//! nodes that depend on it, one hop per tick.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::kernel::{
    InternalCtx, InternalRule, Ix, MetricValue, Observer, Params, Role, RuleError, State,
    SystemCtx, SystemRule, Value,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackType {
    Botnet,
    Ddos,
    Ransomware,
}

impl AttackType {
    pub const ALL: [AttackType; 3] = [AttackType::Botnet, AttackType::Ddos, AttackType::Ransomware];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackType::Botnet => "botnet",
            AttackType::Ddos => "ddos",
            AttackType::Ransomware => "ransomware",
        }
    }
}

impl fmt::Display for AttackType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown attack type `{s}`"))
    }
}

/// Per-type propagation probability and recovery-time multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackProfile {
    pub propagation: f64,
    pub recovery_scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackProfiles(BTreeMap<AttackType, AttackProfile>);

impl Default for AttackProfiles {
    fn default() -> Self {
        let p = |propagation, recovery_scale| AttackProfile {
            propagation,
            recovery_scale,
        };
        AttackProfiles(BTreeMap::from([
            (AttackType::Ddos, p(0.9, 0.5)),
            (AttackType::Botnet, p(0.6, 1.0)),
            (AttackType::Ransomware, p(0.3, 2.0)),
        ]))
    }
}

impl AttackProfiles {
    pub fn get(&self, t: AttackType) -> AttackProfile {
        self.0[&t]
    }

    pub fn set(&mut self, t: AttackType, profile: AttackProfile) {
        self.0.insert(t, profile);
    }

    /// Every type with the same profile. Handy for toy worlds.
    pub fn uniform(profile: AttackProfile) -> Self {
        AttackProfiles(AttackType::ALL.into_iter().map(|t| (t, profile)).collect())
    }
}

pub fn attacker_state() -> State {
    State::new()
        .with("active", Value::Bool(false))
        .with("targets", Value::Refs(Vec::new()))
        .with("attack_type", Value::Null)
        .with("emitting", Value::Bool(false))
        .with("attacks", Value::Int(0))
}

pub fn infrastructure_params(vulnerability: f64, recovery_ticks: i64, service_capacity: f64) -> Params {
    Params::new()
        .with("vulnerability", Value::Float(vulnerability))
        .with("recovery_ticks", Value::Int(recovery_ticks))
        .with("service_capacity", Value::Float(service_capacity))
}

pub fn infrastructure_state() -> State {
    State::new()
        .with("available", Value::Bool(true))
        .with("effective", Value::Bool(true))
        .with("down_since", Value::Null)
        .with("recovery_due", Value::Int(0))
        .with("outbound", Value::Refs(Vec::new()))
        .with("outbound_type", Value::Null)
        .with("compromised", Value::Int(0))
}

/// Arms an attacker. Its IR emits on the next tick.
pub fn arm(state: &State, targets: Vec<Ix>, attack: AttackType) -> State {
    state
        .clone()
        .with("active", Value::Bool(true))
        .with("targets", Value::Refs(targets))
        .with("attack_type", Value::Tag(attack.as_str()))
}

fn attack_tag(v: &Value) -> Result<AttackType, RuleError> {
    v.as_str()
        .ok_or_else(|| RuleError::domain("attack type missing"))?
        .parse()
        .map_err(RuleError::Domain)
}

/// Attack generation: an armed attacker emits once and disarms.
pub struct AttackGeneration;

impl InternalRule for AttackGeneration {
    fn apply(&self, cx: &InternalCtx<'_>) -> Result<Option<State>, RuleError> {
        if !cx.state.bool("active")? {
            return Ok(None);
        }
        let attacks = cx.state.i64("attacks")? + 1;
        Ok(Some(
            cx.state
                .clone()
                .with("active", Value::Bool(false))
                .with("emitting", Value::Bool(true))
                .with("attacks", Value::Int(attacks)),
        ))
    }
}

/// Nominal operation and recovery of a compromised node.
pub struct Recovery;

impl InternalRule for Recovery {
    fn apply(&self, cx: &InternalCtx<'_>) -> Result<Option<State>, RuleError> {
        let v = cx.params.f64("vulnerability")?;
        if !(0.0..=1.0).contains(&v) {
            return Err(RuleError::domain(format!("vulnerability {v} outside [0,1]")));
        }
        if cx.params.i64("recovery_ticks")? < 1 {
            return Err(RuleError::domain("recovery_ticks below 1"));
        }
        if cx.state.bool("available")? {
            return Ok(None);
        }
        let since = cx.state.i64("down_since")?;
        let due = cx.state.i64("recovery_due")?;
        if (cx.tick as i64) - since < due {
            return Ok(None);
        }
        Ok(Some(
            cx.state
                .clone()
                .with("available", Value::Bool(true))
                .with("down_since", Value::Null),
        ))
    }
}

/// Attack defense, re-transmission and the effective-availability cascade.
pub struct Network {
    pub profiles: AttackProfiles,
}

impl SystemRule for Network {
    fn roles(&self) -> &[Role] {
        &[Role::CyberAttacker, Role::CyberInfrastructure]
    }

    fn apply(&self, cx: &mut SystemCtx<'_>) -> Result<(), RuleError> {
        let tick = cx.tick as i64;
        let mut tokens: BTreeMap<Ix, Vec<AttackType>> = BTreeMap::new();
        let mut next: BTreeMap<Ix, State> = BTreeMap::new();

        for &ix in cx.subjects() {
            let st = cx.state(ix)?;
            match cx.role(ix) {
                Role::CyberAttacker if st.bool("emitting")? => {
                    let t = attack_tag(st.value("attack_type")?).map_err(|e| e.at(ix))?;
                    for &target in st.refs("targets")? {
                        if cx.topology().role(target) != Role::CyberInfrastructure
                            || cx.topology().system(target) != cx.system
                        {
                            return Err(RuleError::domain(format!(
                                "attack target `{}` is not a cyber-infrastructure",
                                cx.id(target)
                            ))
                            .at(ix));
                        }
                        tokens.entry(target).or_default().push(t);
                    }
                    next.insert(ix, st.clone().with("emitting", Value::Bool(false)));
                }
                Role::CyberInfrastructure if !st.refs("outbound")?.is_empty() => {
                    let t = attack_tag(st.value("outbound_type")?).map_err(|e| e.at(ix))?;
                    for &d in st.refs("outbound")? {
                        tokens.entry(d).or_default().push(t);
                    }
                    next.insert(
                        ix,
                        st.clone()
                            .with("outbound", Value::Refs(Vec::new()))
                            .with("outbound_type", Value::Null),
                    );
                }
                _ => {}
            }
        }

        for (&ix, kinds) in &tokens {
            let current = next.get(&ix).cloned().map_or_else(|| cx.state(ix).cloned(), Ok)?;
            if !current.bool("available")? {
                continue;
            }
            let params = cx.params(ix)?;
            let vulnerability = params.f64("vulnerability")?;
            if cx.rng(ix, "defense").uniform() >= vulnerability {
                continue;
            }
            let profile = self.profiles.get(kinds[0]);
            let due = ((params.f64("recovery_ticks")? * profile.recovery_scale).round() as i64).max(1);
            let mut rng = cx.rng(ix, "propagate");
            let outbound: Vec<Ix> = cx
                .in_neighbors(ix)
                .iter()
                .copied()
                .filter(|_| rng.uniform() < profile.propagation)
                .collect();
            let n = current.i64("compromised")?;
            let has_outbound = !outbound.is_empty();
            next.insert(
                ix,
                current
                    .with("available", Value::Bool(false))
                    .with("down_since", Value::Int(tick))
                    .with("recovery_due", Value::Int(due))
                    .with("compromised", Value::Int(n + 1))
                    .with("outbound", Value::Refs(outbound))
                    .with(
                        "outbound_type",
                        if has_outbound {
                            Value::Tag(kinds[0].as_str())
                        } else {
                            Value::Null
                        },
                    ),
            );
        }

        let mut own: BTreeMap<Ix, bool> = BTreeMap::new();
        for &ix in cx.subjects() {
            if cx.role(ix) == Role::CyberInfrastructure {
                let st = next.get(&ix).map_or_else(|| cx.state(ix).cloned(), |s| Ok(s.clone()))?;
                own.insert(ix, st.bool("available")?);
            }
        }
        let effective = cascade(&own, |ix| cx.out_neighbors(ix)).map_err(RuleError::Domain)?;
        for (&ix, &eff) in &effective {
            let mut st = next.remove(&ix).map_or_else(|| cx.state(ix).cloned(), Ok)?;
            st.set("effective", Value::Bool(eff));
            next.insert(ix, st);
        }

        for (ix, st) in next {
            if *cx.state(ix)? != st {
                cx.write(ix, st)?;
            }
        }
        Ok(())
    }
}

/// Effective availability: a node serves only if it and every node it
/// depends on, transitively, are available. Errors on a dependency cycle.
pub fn cascade<'a>(
    own: &BTreeMap<Ix, bool>,
    upstream: impl Fn(Ix) -> &'a [Ix],
) -> Result<BTreeMap<Ix, bool>, String> {
    fn visit<'a>(
        ix: Ix,
        own: &BTreeMap<Ix, bool>,
        upstream: &impl Fn(Ix) -> &'a [Ix],
        done: &mut BTreeMap<Ix, bool>,
        path: &mut BTreeSet<Ix>,
    ) -> Result<bool, String> {
        if let Some(&v) = done.get(&ix) {
            return Ok(v);
        }
        if !path.insert(ix) {
            return Err(format!("dependency cycle through subagent {ix}"));
        }
        let mut ok = own.get(&ix).copied().unwrap_or(true);
        for &u in upstream(ix) {
            ok &= visit(u, own, upstream, done, path)?;
        }
        path.remove(&ix);
        done.insert(ix, ok);
        Ok(ok)
    }
    let mut done = BTreeMap::new();
    let mut path = BTreeSet::new();
    for &ix in own.keys() {
        visit(ix, own, &upstream, &mut done, &mut path)?;
    }
    done.retain(|k, _| own.contains_key(k));
    Ok(done)
}

pub struct InfrastructureMetrics;

impl Observer for InfrastructureMetrics {
    fn keys(&self) -> &[&'static str] {
        &["available", "effective"]
    }

    fn observe(
        &self,
        _: &Params,
        state: &State,
        out: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError> {
        let flag = |b: bool| MetricValue::Number(if b { 1.0 } else { 0.0 });
        out.push(("availability", flag(state.bool("effective")?)));
        out.push(("compromised", flag(!state.bool("available")?)));
        Ok(())
    }
}

pub struct AttackerMetrics;

impl Observer for AttackerMetrics {
    fn keys(&self) -> &[&'static str] {
        &["attacks"]
    }

    fn observe(
        &self,
        _: &Params,
        state: &State,
        out: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError> {
        out.push(("attacks", MetricValue::Number(state.i64("attacks")? as f64)));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cascade_follows_dependencies() {
        // 0 is the city node, 1 and 2 depend on it, 3 depends on 1.
        let deps: Vec<Vec<Ix>> = vec![vec![], vec![Ix(0)], vec![Ix(0)], vec![Ix(1)]];
        let up = |ix: Ix| deps[ix.index()].as_slice();
        let all_up: BTreeMap<Ix, bool> = (0..4).map(|i| (Ix(i), true)).collect();
        assert!(cascade(&all_up, up).unwrap().values().all(|v| *v));

        let mut own = all_up.clone();
        own.insert(Ix(1), false);
        let eff = cascade(&own, up).unwrap();
        assert_eq!(
            eff.values().copied().collect::<Vec<_>>(),
            vec![true, false, true, false]
        );

        let mut own = all_up;
        own.insert(Ix(0), false);
        assert!(cascade(&own, up).unwrap().values().all(|v| !*v));
    }

    #[test]
    fn cycles_are_reported() {
        let deps: Vec<Vec<Ix>> = vec![vec![Ix(1)], vec![Ix(0)]];
        let own: BTreeMap<Ix, bool> = (0..2).map(|i| (Ix(i), true)).collect();
        assert!(cascade(&own, |ix| deps[ix.index()].as_slice()).is_err());
    }

    #[test]
    fn attack_types_parse() {
        assert_eq!("ddos".parse::<AttackType>().unwrap(), AttackType::Ddos);
        assert!("worm".parse::<AttackType>().is_err());
        let p = AttackProfiles::default();
        assert!(p.get(AttackType::Ddos).propagation > p.get(AttackType::Ransomware).propagation);
        assert!(p.get(AttackType::Ddos).recovery_scale < p.get(AttackType::Ransomware).recovery_scale);
    }
}
