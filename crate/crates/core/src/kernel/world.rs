use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::error::{BuildError, RuleError, SimError};
use super::ids::{AgentIx, Ix, Role, SystemId, UnknownSystem};
use super::rng::{stream_key, Stage, StreamRng};
use super::rules::{
    AgentCtx, AgentRule, Federate, FederateCtx, InternalCtx, InternalRule, Observer, RuleBook,
    SystemCtx, SystemRule, Topology, IDENTITY,
};
use super::value::{Params, State};

pub struct SubAgentRecord {
    pub id: String,
    pub system: SystemId,
    pub role: Role,
    pub agent: AgentIx,
    pub district: Option<String>,
    pub params: Params,
    pub ir_binding: String,
    pub sr_binding: String,
    pub ob_binding: String,
    pub(crate) rng_key: u64,
    pub(crate) ir: Option<Arc<dyn InternalRule>>,
    pub(crate) observer: Arc<dyn Observer>,
}

impl SubAgentRecord {
    pub fn observer(&self) -> &dyn Observer {
        self.observer.as_ref()
    }
}

pub struct Agent {
    pub id: String,
    pub kind: String,
    pub members: Vec<Ix>,
    pub ar_binding: String,
    pub(crate) ar: Option<Arc<dyn AgentRule>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: Ix,
    pub to: Ix,
    pub label: String,
}

pub struct SystemLayer {
    pub system: SystemId,
    pub members: Vec<Ix>,
    pub edges: Vec<Edge>,
    out: BTreeMap<Ix, Vec<Ix>>,
    inc: BTreeMap<Ix, Vec<Ix>>,
}

impl SystemLayer {
    fn new(system: SystemId) -> Self {
        SystemLayer {
            system,
            members: Vec::new(),
            edges: Vec::new(),
            out: BTreeMap::new(),
            inc: BTreeMap::new(),
        }
    }

    pub fn outgoing(&self, ix: Ix) -> &[Ix] {
        self.out.get(&ix).map_or(&[], Vec::as_slice)
    }

    pub fn incoming(&self, ix: Ix) -> &[Ix] {
        self.inc.get(&ix).map_or(&[], Vec::as_slice)
    }
}

pub(crate) struct SrGroup {
    name: String,
    system: SystemId,
    rule: Arc<dyn SystemRule>,
    subjects: Vec<Ix>,
}

/// Everything about a world except subagent states.
pub struct Structure {
    pub(crate) seed: u64,
    pub(crate) records: Vec<SubAgentRecord>,
    pub(crate) agents: Vec<Agent>,
    pub(crate) layers: Vec<SystemLayer>,
    pub(crate) sr_groups: Vec<SrGroup>,
    by_id: BTreeMap<String, Ix>,
}

impl Structure {
    pub fn lookup(&self, id: &str) -> Option<Ix> {
        self.by_id.get(id).copied()
    }
}

/// Immutable copy of all subagent states at one tick.
#[derive(Clone)]
pub struct WorldSnapshot {
    pub tick: u64,
    pub states: Vec<Arc<State>>,
}

impl WorldSnapshot {
    pub fn state(&self, ix: Ix) -> &State {
        &self.states[ix.index()]
    }
}

/// Declaration of a subagent before indices are assigned.
#[derive(Clone, Debug)]
pub struct SubAgentDecl {
    pub id: String,
    pub agent: String,
    pub role: Role,
    pub district: Option<String>,
    pub ir: String,
    pub sr: String,
    pub ob: String,
}

#[derive(Clone, Debug)]
struct AgentDecl {
    id: String,
    kind: String,
    ar: String,
}

/// First phase of world construction: declare agents and subagents.
pub struct WorldBuilder {
    seed: u64,
    agents: Vec<AgentDecl>,
    subagents: Vec<SubAgentDecl>,
}

impl WorldBuilder {
    pub fn new(seed: u64) -> Self {
        WorldBuilder {
            seed,
            agents: Vec::new(),
            subagents: Vec::new(),
        }
    }

    pub fn agent(&mut self, id: &str, kind: &str, ar: &str) -> &mut Self {
        self.agents.push(AgentDecl {
            id: id.to_string(),
            kind: kind.to_string(),
            ar: ar.to_string(),
        });
        self
    }

    pub fn subagent(&mut self, decl: SubAgentDecl) -> &mut Self {
        self.subagents.push(decl);
        self
    }

    /// Assigns indices in id order and checks membership invariants.
    pub fn layout(mut self) -> Result<Layout, BuildError> {
        self.agents.sort_by(|a, b| a.id.cmp(&b.id));
        for w in self.agents.windows(2) {
            if w[0].id == w[1].id {
                return Err(BuildError::DuplicateAgent(w[0].id.clone()));
            }
        }
        self.subagents.sort_by(|a, b| a.id.cmp(&b.id));
        for w in self.subagents.windows(2) {
            if w[0].id == w[1].id {
                return Err(BuildError::DuplicateSubAgent(w[0].id.clone()));
            }
        }
        let agent_ix: BTreeMap<&str, AgentIx> = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.as_str(), AgentIx(i as u32)))
            .collect();
        let mut members: Vec<Vec<Ix>> = vec![Vec::new(); self.agents.len()];
        let mut owner = Vec::with_capacity(self.subagents.len());
        for (i, s) in self.subagents.iter().enumerate() {
            let ax = *agent_ix
                .get(s.agent.as_str())
                .ok_or_else(|| BuildError::UnknownAgent {
                    subagent: s.id.clone(),
                    agent: s.agent.clone(),
                })?;
            let list = &mut members[ax.index()];
            if let Some(&clash) = list
                .iter()
                .find(|m: &&Ix| self.subagents[m.index()].role.system() == s.role.system())
            {
                let _ = clash;
                return Err(BuildError::SystemClash {
                    agent: s.agent.clone(),
                    system: s.role.system(),
                });
            }
            list.push(Ix(i as u32));
            owner.push(ax);
        }
        for (a, m) in self.agents.iter().zip(&members) {
            if m.is_empty() {
                return Err(BuildError::EmptyAgent(a.id.clone()));
            }
        }
        let by_id = self
            .subagents
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), Ix(i as u32)))
            .collect();
        let n = self.subagents.len();
        Ok(Layout {
            seed: self.seed,
            agents: self.agents,
            members,
            subagents: self.subagents,
            owner,
            by_id,
            params: vec![Params::new(); n],
            states: vec![State::new(); n],
            edges: Vec::new(),
        })
    }
}

/// Second phase: indices are fixed; fill parameters, states and edges.
pub struct Layout {
    seed: u64,
    agents: Vec<AgentDecl>,
    members: Vec<Vec<Ix>>,
    subagents: Vec<SubAgentDecl>,
    owner: Vec<AgentIx>,
    by_id: BTreeMap<String, Ix>,
    params: Vec<Params>,
    states: Vec<State>,
    edges: Vec<(String, String, String)>,
}

impl Layout {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ix(&self, id: &str) -> Option<Ix> {
        self.by_id.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.subagents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subagents.is_empty()
    }

    pub fn decl(&self, ix: Ix) -> &SubAgentDecl {
        &self.subagents[ix.index()]
    }

    pub fn set_params(&mut self, ix: Ix, params: Params) {
        self.params[ix.index()] = params;
    }

    pub fn set_state(&mut self, ix: Ix, state: State) {
        self.states[ix.index()] = state;
    }

    pub fn params_mut(&mut self, ix: Ix) -> &mut Params {
        &mut self.params[ix.index()]
    }

    /// Seeded stream for build-time draws of subagent `ix`.
    pub fn init_rng(&self, ix: Ix, purpose: &str) -> StreamRng {
        StreamRng::new(
            stream_key(self.seed, &self.subagents[ix.index()].id),
            0,
            Stage::Init,
            purpose,
        )
    }

    /// Directed intra-layer edge by subagent id.
    pub fn edge(&mut self, from: &str, to: &str, label: &str) {
        self.edges
            .push((from.to_string(), to.to_string(), label.to_string()));
    }

    pub fn build(self, book: &RuleBook) -> Result<World, BuildError> {
        let mut layers: Vec<SystemLayer> = SystemId::ALL.iter().map(|s| SystemLayer::new(*s)).collect();
        let mut records = Vec::with_capacity(self.subagents.len());
        for (i, ((decl, params), state)) in self
            .subagents
            .iter()
            .zip(self.params)
            .zip(&self.states)
            .enumerate()
        {
            let ix = Ix(i as u32);
            let system = decl.role.system();
            layers[system.slot()].members.push(ix);
            let ir = if decl.ir == IDENTITY {
                None
            } else {
                Some(book.internal.get(&decl.ir).cloned().ok_or_else(|| {
                    BuildError::UnknownRule {
                        stage: "ir",
                        name: decl.ir.clone(),
                        subject: decl.id.clone(),
                    }
                })?)
            };
            let observer = book.observers.get(&decl.ob).cloned().ok_or_else(|| {
                BuildError::UnknownRule {
                    stage: "ob",
                    name: decl.ob.clone(),
                    subject: decl.id.clone(),
                }
            })?;
            for key in observer.keys() {
                if !state.contains(key) {
                    return Err(BuildError::ObserverKey {
                        observer: decl.ob.clone(),
                        subagent: decl.id.clone(),
                        key: key.to_string(),
                    });
                }
            }
            records.push(SubAgentRecord {
                id: decl.id.clone(),
                system,
                role: decl.role,
                agent: self.owner[i],
                district: decl.district.clone(),
                params,
                ir_binding: decl.ir.clone(),
                sr_binding: decl.sr.clone(),
                ob_binding: decl.ob.clone(),
                rng_key: stream_key(self.seed, &decl.id),
                ir,
                observer,
            });
        }

        for (from, to, label) in &self.edges {
            let lookup = |id: &str| {
                self.by_id
                    .get(id)
                    .copied()
                    .ok_or_else(|| BuildError::UnknownEdgeEndpoint {
                        from: from.clone(),
                        to: to.clone(),
                        missing: id.to_string(),
                    })
            };
            let (a, b) = (lookup(from)?, lookup(to)?);
            let system = records[a.index()].system;
            if records[b.index()].system != system {
                return Err(BuildError::CrossLayerEdge {
                    from: from.clone(),
                    to: to.clone(),
                    system,
                });
            }
            let layer = &mut layers[system.slot()];
            layer.edges.push(Edge {
                from: a,
                to: b,
                label: label.clone(),
            });
            layer.out.entry(a).or_default().push(b);
            layer.inc.entry(b).or_default().push(a);
        }
        for layer in &mut layers {
            layer.edges.sort_by(|x, y| (x.from, x.to, &x.label).cmp(&(y.from, y.to, &y.label)));
            for v in layer.out.values_mut().chain(layer.inc.values_mut()) {
                v.sort();
                v.dedup();
            }
        }

        let mut groups: BTreeMap<(SystemId, String), Vec<Ix>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if r.sr_binding != IDENTITY {
                groups
                    .entry((r.system, r.sr_binding.clone()))
                    .or_default()
                    .push(Ix(i as u32));
            }
        }
        let mut sr_groups = Vec::new();
        for ((system, name), subjects) in groups {
            let rule = book.system.get(&name).cloned().ok_or_else(|| BuildError::UnknownRule {
                stage: "sr",
                name: name.clone(),
                subject: records[subjects[0].index()].id.clone(),
            })?;
            for s in &subjects {
                let role = records[s.index()].role;
                if !rule.roles().contains(&role) {
                    return Err(BuildError::RoleMismatch {
                        rule: name.clone(),
                        role: role.to_string(),
                    });
                }
            }
            sr_groups.push(SrGroup {
                name,
                system,
                rule,
                subjects,
            });
        }

        let mut agents = Vec::with_capacity(self.agents.len());
        for (decl, members) in self.agents.into_iter().zip(self.members) {
            let ar = if decl.ar == IDENTITY {
                None
            } else {
                Some(book.agent.get(&decl.ar).cloned().ok_or_else(|| {
                    BuildError::UnknownRule {
                        stage: "ar",
                        name: decl.ar.clone(),
                        subject: decl.id.clone(),
                    }
                })?)
            };
            agents.push(Agent {
                id: decl.id,
                kind: decl.kind,
                members,
                ar_binding: decl.ar,
                ar,
            });
        }

        Ok(World {
            structure: Structure {
                seed: self.seed,
                records,
                agents,
                layers,
                sr_groups,
                by_id: self.by_id,
            },
            states: self.states.into_iter().map(Arc::new).collect(),
            tick: 0,
            federate: None,
        })
    }
}

/// The simulated city: structure plus double-buffered subagent states.
pub struct World {
    structure: Structure,
    states: Vec<Arc<State>>,
    tick: u64,
    federate: Option<Box<dyn Federate>>,
}

impl World {
    /// A world with no agents. Stepping it only advances the clock.
    pub fn empty(seed: u64) -> World {
        WorldBuilder::new(seed)
            .layout()
            .and_then(|l| l.build(&RuleBook::new()))
            .expect("empty world always builds")
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn seed(&self) -> u64 {
        self.structure.seed
    }

    pub fn len(&self) -> usize {
        self.structure.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structure.records.is_empty()
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn topology(&self) -> Topology<'_> {
        Topology {
            structure: &self.structure,
        }
    }

    pub fn lookup(&self, id: &str) -> Option<Ix> {
        self.structure.lookup(id)
    }

    pub fn record(&self, ix: Ix) -> &SubAgentRecord {
        &self.structure.records[ix.index()]
    }

    pub fn records(&self) -> impl Iterator<Item = (Ix, &SubAgentRecord)> {
        self.structure
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| (Ix(i as u32), r))
    }

    pub fn state(&self, ix: Ix) -> &State {
        &self.states[ix.index()]
    }

    pub fn agents(&self) -> &[Agent] {
        &self.structure.agents
    }

    pub fn agent(&self, ax: AgentIx) -> &Agent {
        &self.structure.agents[ax.index()]
    }

    pub fn layer(&self, system: SystemId) -> &SystemLayer {
        &self.structure.layers[system.slot()]
    }

    /// Membership of one system layer, in id order.
    pub fn system_members(&self, system: SystemId) -> &[Ix] {
        &self.layer(system).members
    }

    pub fn system_members_by_name(&self, name: &str) -> Result<&[Ix], UnknownSystem> {
        Ok(self.system_members(name.parse()?))
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = Ix> + '_ {
        self.layer(role.system())
            .members
            .iter()
            .copied()
            .filter(move |ix| self.structure.records[ix.index()].role == role)
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            tick: self.tick,
            states: self.states.clone(),
        }
    }

    /// Parameter access for hazard and mitigation application between steps.
    pub fn params_mut(&mut self, ix: Ix) -> &mut Params {
        &mut self.structure.records[ix.index()].params
    }

    /// Overwrites a state between steps (hazard payload dispatch).
    pub fn set_state(&mut self, ix: Ix, state: State) {
        self.states[ix.index()] = Arc::new(state);
    }

    pub fn rng(&self, ix: Ix, stage: Stage, purpose: &str) -> StreamRng {
        StreamRng::new(
            self.structure.records[ix.index()].rng_key,
            self.tick,
            stage,
            purpose,
        )
    }

    pub fn federate(&self) -> Option<&dyn Federate> {
        self.federate.as_deref()
    }

    /// Attaches an external simulator and lets it fill its meta-subagents.
    pub fn attach_federate(&mut self, mut federate: Box<dyn Federate>) -> Result<(), BuildError> {
        let mut cx = FederateCtx {
            tick: self.tick,
            system: federate.system(),
            structure: &self.structure,
            snapshot: &self.states,
            writes: BTreeMap::new(),
        };
        federate
            .initialize(&mut cx)
            .map_err(BuildError::Federation)?;
        let writes = std::mem::take(&mut cx.writes);
        for (ix, st) in writes {
            self.states[ix.index()] = Arc::new(st);
        }
        if federate.federated_tick() != self.tick {
            return Err(BuildError::Federation(format!(
                "federate at tick {} after initialize, world at {}",
                federate.federated_tick(),
                self.tick
            )));
        }
        self.federate = Some(federate);
        Ok(())
    }

    /// Advances one tick: IR, then SR, then AR, then federation sync.
    /// Each stage reads only the completed output of the previous one.
    pub fn step(&mut self) -> Result<(), SimError> {
        let tick = self.tick + 1;
        let s = &self.structure;

        let mut post_ir = Vec::with_capacity(self.states.len());
        for (i, rec) in s.records.iter().enumerate() {
            let prev = &self.states[i];
            let next = match &rec.ir {
                None => prev.clone(),
                Some(rule) => {
                    let cx = InternalCtx {
                        tick,
                        ix: Ix(i as u32),
                        id: &rec.id,
                        params: &rec.params,
                        state: prev,
                        key: rec.rng_key,
                    };
                    match rule.apply(&cx) {
                        Ok(Some(st)) => Arc::new(st),
                        Ok(None) => prev.clone(),
                        Err(e) => {
                            return Err(SimError::Rule {
                                tick,
                                rule: rec.ir_binding.clone(),
                                subject: rec.id.clone(),
                                source: e,
                            })
                        }
                    }
                }
            };
            post_ir.push(next);
        }

        let mut post_sr = post_ir.clone();
        for g in &s.sr_groups {
            let mut cx = SystemCtx {
                tick,
                system: g.system,
                structure: s,
                snapshot: &post_ir,
                subjects: &g.subjects,
                writes: BTreeMap::new(),
            };
            g.rule
                .apply(&mut cx)
                .map_err(|e| rule_failure(s, tick, &g.name, g.system.as_str(), e))?;
            for (ix, st) in cx.writes {
                post_sr[ix.index()] = Arc::new(st);
            }
        }

        let mut post_ar = post_sr.clone();
        for agent in &s.agents {
            let Some(rule) = &agent.ar else { continue };
            let mut cx = AgentCtx {
                tick,
                agent,
                structure: s,
                snapshot: &post_sr,
                writes: BTreeMap::new(),
            };
            rule.apply(&mut cx)
                .map_err(|e| rule_failure(s, tick, &agent.ar_binding, &agent.id, e))?;
            for (ix, st) in cx.writes {
                post_ar[ix.index()] = Arc::new(st);
            }
        }

        if let Some(fed) = self.federate.as_mut() {
            let mut cx = FederateCtx {
                tick,
                system: fed.system(),
                structure: s,
                snapshot: &post_ar,
                writes: BTreeMap::new(),
            };
            fed.sync(&mut cx)
                .map_err(|message| SimError::Federation { tick, message })?;
            let writes = std::mem::take(&mut cx.writes);
            for (ix, st) in writes {
                post_ar[ix.index()] = Arc::new(st);
            }
            if fed.federated_tick() != tick {
                return Err(SimError::Federation {
                    tick,
                    message: format!(
                        "lockstep violated: federate at {}, kernel at {tick}",
                        fed.federated_tick()
                    ),
                });
            }
        }

        self.states = post_ar;
        self.tick = tick;
        Ok(())
    }

    /// Ids of every subagent whose state differs between two snapshots.
    pub fn diff(&self, a: &WorldSnapshot, b: &WorldSnapshot) -> BTreeSet<String> {
        a.states
            .iter()
            .zip(&b.states)
            .enumerate()
            .filter(|(_, (x, y))| x != y)
            .map(|(i, _)| self.structure.records[i].id.clone())
            .collect()
    }
}

fn rule_failure(s: &Structure, tick: u64, rule: &str, scope: &str, e: RuleError) -> SimError {
    let subject = match &e {
        RuleError::At(ix, _) => s
            .records
            .get(ix.index())
            .map_or_else(|| scope.to_string(), |r| r.id.clone()),
        _ => scope.to_string(),
    };
    SimError::Rule {
        tick,
        rule: rule.to_string(),
        subject,
        source: e,
    }
}
