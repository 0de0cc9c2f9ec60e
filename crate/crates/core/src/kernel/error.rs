use super::ids::{Ix, SystemId};

/// Failure raised inside a rule or an observer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuleError {
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("key `{key}`: expected {expected}, found {found}")]
    TypeMismatch {
        key: String,
        expected: &'static str,
        found: &'static str,
    },
    /// A rule tried to read or write outside the subagents it may touch.
    #[error("closure violation: {0}")]
    Closure(String),
    #[error("{0}")]
    Domain(String),
    /// Error attributed to a specific subagent.
    #[error("{1}")]
    At(Ix, Box<RuleError>),
}

impl RuleError {
    pub fn domain(msg: impl Into<String>) -> Self {
        RuleError::Domain(msg.into())
    }

    /// Attributes this error to subagent `ix`.
    pub fn at(self, ix: Ix) -> Self {
        match self {
            RuleError::At(..) => self,
            other => RuleError::At(ix, Box::new(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("duplicate subagent id `{0}`")]
    DuplicateSubAgent(String),
    #[error("duplicate agent id `{0}`")]
    DuplicateAgent(String),
    #[error("subagent `{subagent}` references unknown agent `{agent}`")]
    UnknownAgent { subagent: String, agent: String },
    #[error("agent `{agent}` has two subagents in system {system}")]
    SystemClash { agent: String, system: SystemId },
    #[error("agent `{0}` has no subagents")]
    EmptyAgent(String),
    #[error("edge {from} -> {to} references unknown subagent `{missing}`")]
    UnknownEdgeEndpoint {
        from: String,
        to: String,
        missing: String,
    },
    #[error("edge {from} -> {to} crosses layers or is not in layer {system}")]
    CrossLayerEdge {
        from: String,
        to: String,
        system: SystemId,
    },
    #[error("unknown {stage} rule `{name}` for `{subject}`")]
    UnknownRule {
        stage: &'static str,
        name: String,
        subject: String,
    },
    #[error("rule `{rule}` cannot govern role {role}")]
    RoleMismatch { rule: String, role: String },
    #[error("observer `{observer}` for `{subagent}` exports key `{key}` absent from its initial state")]
    ObserverKey {
        observer: String,
        subagent: String,
        key: String,
    },
    #[error("federation: {0}")]
    Federation(String),
    #[error("{0}")]
    Invalid(String),
}

/// Failure that aborts a run.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("tick {tick}: rule `{rule}` failed on `{subject}`: {source}")]
    Rule {
        tick: u64,
        rule: String,
        subject: String,
        #[source]
        source: RuleError,
    },
    #[error("tick {tick}: hazard `{event}`: {message}")]
    Hazard {
        tick: u64,
        event: String,
        message: String,
    },
    #[error("tick {tick}: federation: {message}")]
    Federation { tick: u64, message: String },
    #[error("tick {tick}: observation of `{subject}` failed: {source}")]
    Observe {
        tick: u64,
        subject: String,
        #[source]
        source: RuleError,
    },
}
