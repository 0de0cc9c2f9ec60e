//! Rule traits and the contexts they run in.
//!
//! A tick evaluates three stages: internal rules (IR) see only their own
//! subagent, system rules (SR) see one layer, agent rules (AR) see the
//! members of one agent. Every stage reads the completed snapshot of the
//! previous stage. Contexts enforce these read and write scopes and report
//! violations as [`RuleError::Closure`].

use std::collections::BTreeMap;
use std::sync::Arc;

use super::error::RuleError;
use super::ids::{AgentIx, Ix, Role, SystemId};
use super::rng::{stream_key, Stage, StreamRng};
use super::value::{Params, State};
use super::world::{Agent, Edge, Structure};

/// A value exported by an observability function.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricValue {
    Number(f64),
    Label(&'static str),
}

pub trait InternalRule: Send + Sync {
    /// Returns the new state, or `None` when nothing changed.
    fn apply(&self, cx: &InternalCtx<'_>) -> Result<Option<State>, RuleError>;
}

pub trait SystemRule: Send + Sync {
    /// Roles this rule may govern inside its layer.
    fn roles(&self) -> &[Role];
    fn apply(&self, cx: &mut SystemCtx<'_>) -> Result<(), RuleError>;
}

pub trait AgentRule: Send + Sync {
    fn apply(&self, cx: &mut AgentCtx<'_>) -> Result<(), RuleError>;
}

/// Observability function of a role.
pub trait Observer: Send + Sync {
    /// State keys the observer reads. Checked against initial states at build.
    fn keys(&self) -> &[&'static str];
    fn observe(
        &self,
        params: &Params,
        state: &State,
        out: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError>;
}

/// Observer exporting nothing, for roles without metrics.
pub struct NoMetrics;

impl Observer for NoMetrics {
    fn keys(&self) -> &[&'static str] {
        &[]
    }

    fn observe(
        &self,
        _: &Params,
        _: &State,
        _: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError> {
        Ok(())
    }
}

pub const IDENTITY: &str = "identity";
pub const NO_METRICS: &str = "none";

/// Named rule registry. Scenarios select rules by name.
#[derive(Clone)]
pub struct RuleBook {
    pub(crate) internal: BTreeMap<String, Arc<dyn InternalRule>>,
    pub(crate) system: BTreeMap<String, Arc<dyn SystemRule>>,
    pub(crate) agent: BTreeMap<String, Arc<dyn AgentRule>>,
    pub(crate) observers: BTreeMap<String, Arc<dyn Observer>>,
}

impl Default for RuleBook {
    fn default() -> Self {
        let mut book = RuleBook {
            internal: BTreeMap::new(),
            system: BTreeMap::new(),
            agent: BTreeMap::new(),
            observers: BTreeMap::new(),
        };
        book.observers.insert(NO_METRICS.to_string(), Arc::new(NoMetrics));
        book
    }
}

impl RuleBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn internal(&mut self, name: &str, rule: impl InternalRule + 'static) -> &mut Self {
        self.internal.insert(name.to_string(), Arc::new(rule));
        self
    }

    pub fn system(&mut self, name: &str, rule: impl SystemRule + 'static) -> &mut Self {
        self.system.insert(name.to_string(), Arc::new(rule));
        self
    }

    pub fn agent(&mut self, name: &str, rule: impl AgentRule + 'static) -> &mut Self {
        self.agent.insert(name.to_string(), Arc::new(rule));
        self
    }

    pub fn observer(&mut self, name: &str, ob: impl Observer + 'static) -> &mut Self {
        self.observers.insert(name.to_string(), Arc::new(ob));
        self
    }

    pub fn names(&self) -> impl Iterator<Item = (&'static str, &str)> {
        self.internal
            .keys()
            .map(|k| ("ir", k.as_str()))
            .chain(self.system.keys().map(|k| ("sr", k.as_str())))
            .chain(self.agent.keys().map(|k| ("ar", k.as_str())))
            .chain(self.observers.keys().map(|k| ("ob", k.as_str())))
    }
}

/// Static structure lookups that carry no state: ids, roles and agent
/// membership. Available to every rule.
#[derive(Clone, Copy)]
pub struct Topology<'a> {
    pub(crate) structure: &'a Structure,
}

impl<'a> Topology<'a> {
    pub fn id(&self, ix: Ix) -> &'a str {
        &self.structure.records[ix.index()].id
    }

    pub fn role(&self, ix: Ix) -> Role {
        self.structure.records[ix.index()].role
    }

    pub fn system(&self, ix: Ix) -> SystemId {
        self.structure.records[ix.index()].system
    }

    pub fn agent_of(&self, ix: Ix) -> AgentIx {
        self.structure.records[ix.index()].agent
    }

    /// Member of `ix`'s agent that lives in `system`.
    pub fn sibling(&self, ix: Ix, system: SystemId) -> Option<Ix> {
        let agent = &self.structure.agents[self.agent_of(ix).index()];
        agent
            .members
            .iter()
            .copied()
            .find(|m| self.system(*m) == system)
    }

    pub fn lookup(&self, id: &str) -> Option<Ix> {
        self.structure.lookup(id)
    }
}

pub struct InternalCtx<'a> {
    pub tick: u64,
    pub ix: Ix,
    pub id: &'a str,
    pub params: &'a Params,
    pub state: &'a State,
    pub(crate) key: u64,
}

impl InternalCtx<'_> {
    pub fn rng(&self, purpose: &str) -> StreamRng {
        StreamRng::new(self.key, self.tick, Stage::Internal, purpose)
    }
}

pub struct SystemCtx<'a> {
    pub tick: u64,
    pub system: SystemId,
    pub(crate) structure: &'a Structure,
    pub(crate) snapshot: &'a [Arc<State>],
    pub(crate) subjects: &'a [Ix],
    pub(crate) writes: BTreeMap<Ix, State>,
}

impl<'a> SystemCtx<'a> {
    pub fn topology(&self) -> Topology<'a> {
        Topology {
            structure: self.structure,
        }
    }

    /// Members of the whole layer, in id order.
    pub fn members(&self) -> &'a [Ix] {
        &self.structure.layers[self.system.slot()].members
    }

    /// Subagents this rule governs and may write, in id order.
    pub fn subjects(&self) -> &'a [Ix] {
        self.subjects
    }

    pub fn edges(&self) -> &'a [Edge] {
        &self.structure.layers[self.system.slot()].edges
    }

    /// Targets of edges leaving `ix`.
    pub fn out_neighbors(&self, ix: Ix) -> &'a [Ix] {
        self.structure.layers[self.system.slot()].outgoing(ix)
    }

    /// Sources of edges entering `ix`.
    pub fn in_neighbors(&self, ix: Ix) -> &'a [Ix] {
        self.structure.layers[self.system.slot()].incoming(ix)
    }

    fn check_layer(&self, ix: Ix) -> Result<(), RuleError> {
        match self.structure.records.get(ix.index()) {
            Some(r) if r.system == self.system => Ok(()),
            Some(r) => Err(RuleError::Closure(format!(
                "{} rule read `{}` in layer {}",
                self.system, r.id, r.system
            ))),
            None => Err(RuleError::Closure(format!("no subagent {ix}"))),
        }
    }

    /// Post-IR state of a layer member.
    pub fn state(&self, ix: Ix) -> Result<&'a State, RuleError> {
        self.check_layer(ix)?;
        Ok(&self.snapshot[ix.index()])
    }

    pub fn params(&self, ix: Ix) -> Result<&'a Params, RuleError> {
        self.check_layer(ix)?;
        Ok(&self.structure.records[ix.index()].params)
    }

    pub fn role(&self, ix: Ix) -> Role {
        self.structure.records[ix.index()].role
    }

    pub fn id(&self, ix: Ix) -> &'a str {
        &self.structure.records[ix.index()].id
    }

    /// Pending write if any, else the snapshot state.
    pub fn current(&self, ix: Ix) -> Result<&State, RuleError> {
        match self.writes.get(&ix) {
            Some(s) => Ok(s),
            None => self.state(ix),
        }
    }

    pub fn write(&mut self, ix: Ix, state: State) -> Result<(), RuleError> {
        if self.subjects.binary_search(&ix).is_err() {
            return Err(RuleError::Closure(format!(
                "{} rule wrote `{}` which it does not govern",
                self.system,
                self.id(ix)
            )));
        }
        self.writes.insert(ix, state);
        Ok(())
    }

    pub fn rng(&self, ix: Ix, purpose: &str) -> StreamRng {
        StreamRng::new(
            self.structure.records[ix.index()].rng_key,
            self.tick,
            Stage::System,
            purpose,
        )
    }

    /// Stream keyed by an arbitrary name, e.g. a place where contacts happen.
    pub fn keyed_rng(&self, name: &str, purpose: &str) -> StreamRng {
        StreamRng::new(
            stream_key(self.structure.seed, name),
            self.tick,
            Stage::System,
            purpose,
        )
    }
}

pub struct AgentCtx<'a> {
    pub tick: u64,
    pub(crate) agent: &'a Agent,
    pub(crate) structure: &'a Structure,
    pub(crate) snapshot: &'a [Arc<State>],
    pub(crate) writes: BTreeMap<Ix, State>,
}

impl<'a> AgentCtx<'a> {
    pub fn topology(&self) -> Topology<'a> {
        Topology {
            structure: self.structure,
        }
    }

    pub fn agent_id(&self) -> &'a str {
        &self.agent.id
    }

    pub fn members(&self) -> &'a [Ix] {
        &self.agent.members
    }

    pub fn member(&self, system: SystemId) -> Option<Ix> {
        self.agent
            .members
            .iter()
            .copied()
            .find(|m| self.structure.records[m.index()].system == system)
    }

    fn check_member(&self, ix: Ix) -> Result<(), RuleError> {
        if self.agent.members.contains(&ix) {
            Ok(())
        } else {
            Err(RuleError::Closure(format!(
                "agent `{}` rule touched non-member `{}`",
                self.agent.id,
                self.structure
                    .records
                    .get(ix.index())
                    .map_or("?", |r| r.id.as_str())
            )))
        }
    }

    /// Post-SR state of a member.
    pub fn state(&self, ix: Ix) -> Result<&'a State, RuleError> {
        self.check_member(ix)?;
        Ok(&self.snapshot[ix.index()])
    }

    pub fn params(&self, ix: Ix) -> Result<&'a Params, RuleError> {
        self.check_member(ix)?;
        Ok(&self.structure.records[ix.index()].params)
    }

    pub fn write(&mut self, ix: Ix, state: State) -> Result<(), RuleError> {
        self.check_member(ix)?;
        self.writes.insert(ix, state);
        Ok(())
    }

    pub fn rng(&self, ix: Ix, purpose: &str) -> StreamRng {
        StreamRng::new(
            self.structure.records[ix.index()].rng_key,
            self.tick,
            Stage::Agent,
            purpose,
        )
    }
}

/// Bridge to an external (federated) simulator. Called once per tick after
/// the AR stage; the federate must end the call advanced to `tick`.
pub trait Federate: Send {
    fn system(&self) -> SystemId;
    /// Tick the external simulator currently reflects.
    fn federated_tick(&self) -> u64;
    /// Fills meta-subagent states at tick 0.
    fn initialize(&mut self, cx: &mut FederateCtx<'_>) -> Result<(), String>;
    fn sync(&mut self, cx: &mut FederateCtx<'_>) -> Result<(), String>;
}

pub struct FederateCtx<'a> {
    pub tick: u64,
    pub system: SystemId,
    pub(crate) structure: &'a Structure,
    pub(crate) snapshot: &'a [Arc<State>],
    pub(crate) writes: BTreeMap<Ix, State>,
}

impl<'a> FederateCtx<'a> {
    pub fn members(&self) -> &'a [Ix] {
        &self.structure.layers[self.system.slot()].members
    }

    pub fn role(&self, ix: Ix) -> Role {
        self.structure.records[ix.index()].role
    }

    pub fn id(&self, ix: Ix) -> &'a str {
        &self.structure.records[ix.index()].id
    }

    fn check_layer(&self, ix: Ix) -> Result<(), String> {
        if self.structure.records[ix.index()].system == self.system {
            Ok(())
        } else {
            Err(format!(
                "federate touched `{}` outside layer {}",
                self.id(ix),
                self.system
            ))
        }
    }

    pub fn state(&self, ix: Ix) -> Result<&'a State, String> {
        self.check_layer(ix)?;
        Ok(&self.snapshot[ix.index()])
    }

    pub fn params(&self, ix: Ix) -> Result<&'a Params, String> {
        self.check_layer(ix)?;
        Ok(&self.structure.records[ix.index()].params)
    }

    pub fn write(&mut self, ix: Ix, state: State) -> Result<(), String> {
        self.check_layer(ix)?;
        self.writes.insert(ix, state);
        Ok(())
    }
}
