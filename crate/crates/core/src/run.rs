//! The simulation loop: step, apply due hazards, observe.

use crate::hazard::{self, HazardSchedule};
use crate::kernel::{SimError, World};
use crate::metrics::{observe, ObservationPolicy, Series};

pub struct RunResult {
    pub series: Series,
    pub world: World,
    /// `(tick, event id)` for every hazard applied.
    pub applied: Vec<(u64, String)>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("tick {tick}: {message}")]
    Check { tick: u64, message: String },
}

pub fn run(
    world: World,
    schedule: &HazardSchedule,
    horizon: u64,
    policy: &ObservationPolicy,
) -> Result<RunResult, RunError> {
    run_with(world, schedule, horizon, policy, |_, _| Ok(()))
}

/// Like [`run`], calling `inspect` after every observation. An error from
/// `inspect` aborts the run.
pub fn run_with(
    mut world: World,
    schedule: &HazardSchedule,
    horizon: u64,
    policy: &ObservationPolicy,
    mut inspect: impl FnMut(&World, &Series) -> Result<(), String>,
) -> Result<RunResult, RunError> {
    let mut series = Series::new();
    let mut applied = Vec::new();
    loop {
        let tick = world.tick();
        for id in hazard::apply_due(&mut world, tick, schedule)? {
            applied.push((tick, id));
        }
        let samples = observe(&world, policy)?;
        series
            .record(tick as usize, samples)
            .map_err(|message| RunError::Check { tick, message })?;
        inspect(&world, &series).map_err(|message| RunError::Check { tick, message })?;
        if tick >= horizon {
            break;
        }
        world.step()?;
    }
    Ok(RunResult {
        series,
        world,
        applied,
    })
}
