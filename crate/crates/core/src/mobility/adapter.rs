//! Contract between the engine and an external traffic simulator.

use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct RoadwaySpec {
    pub id: String,
    /// Metres.
    pub length: f64,
    /// Metres per second.
    pub free_flow_speed: f64,
    /// Vehicles the roadway holds at jam density.
    pub capacity: f64,
    /// Vehicles per hour not generated by citizens.
    pub background_flow: f64,
    /// Light controlling the roadway's downstream junction.
    pub light: Option<String>,
    pub station: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub roadways: Vec<RoadwaySpec>,
    pub lights: Vec<String>,
    /// Throughput multiplier on roadways whose light is off.
    pub light_off_factor: f64,
    /// Speed floor as a fraction of free-flow speed.
    pub v_min_frac: f64,
    /// Length of one tick in seconds.
    pub tick_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    InsertRoute { vehicle: String, route: Vec<String> },
    SetLight { light: String, on: bool },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoadwayObs {
    pub mean_speed: f64,
    /// Vehicles per hour.
    pub intensity: f64,
    /// Vehicles on the roadway on average.
    pub occupancy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observables {
    pub tick: u64,
    pub roadways: BTreeMap<String, RoadwayObs>,
    pub lights: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdapterError {
    #[error("adapter used before initialize")]
    NotInitialized,
    #[error("lockstep violation: at tick {at}, asked to advance to {requested}")]
    Lockstep { at: u64, requested: u64 },
    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },
    #[error("invalid network: {0}")]
    Invalid(String),
}

/// Synchronous, lockstep interface to a traffic simulator. `query`
/// reflects exactly the last tick passed to `advance`.
pub trait TrafficAdapter: Send {
    fn initialize(&mut self, network: &NetworkSpec, seed: u64) -> Result<(), AdapterError>;
    /// Commands take effect during the next `advance`.
    fn inject(&mut self, commands: &[Command]) -> Result<(), AdapterError>;
    fn advance(&mut self, to: u64) -> Result<(), AdapterError>;
    fn query(&self) -> Result<Observables, AdapterError>;
    fn tick(&self) -> u64;
}
