//! Discrete-time engine: agents, subagents, system layers and the staged
//! IR → SR → AR update loop.

mod error;
mod ids;
mod rng;
mod rules;
mod value;
mod world;

pub use error::{BuildError, RuleError, SimError};
pub use ids::{AgentIx, Ix, Role, SystemId, UnknownRole, UnknownSystem};
pub use rng::{hash_str, mix64, stream_key, Stage, StreamRng};
pub use rules::{
    AgentCtx, AgentRule, Federate, FederateCtx, InternalCtx, InternalRule, MetricValue, NoMetrics,
    Observer, RuleBook, SystemCtx, SystemRule, Topology, IDENTITY, NO_METRICS,
};
pub use value::{Params, State, Value};
pub use world::{
    Agent, Edge, Layout, Structure, SubAgentDecl, SubAgentRecord, SystemLayer, World,
    WorldBuilder, WorldSnapshot,
};

/// One simulated hour.
pub const TICKS_PER_DAY: u64 = 24;
