//! Brownian propagation of the moving particle relative to the fixed one.
//!
//! A trajectory is a loop of *propose* (Brownian displacement, optional
//! force drift) and *detect* (did the step reach the reaction sphere or the
//! escape sphere?). Step size control and detection are swappable per
//! [`SimulatorConfig`](crate::geometry::SimulatorConfig).

mod detect;
mod engine;
mod stepper;
mod stepsize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConfigError, Vec3};
use crate::stochastics::SamplingError;

pub use detect::{bridge_crossing, detect_event_triggered, detect_time_stepped, segment_sphere_entry, segment_sphere_exit};
pub use engine::{run_trajectory, TraceRecord, TrajectoryEngine, DEFAULT_STEP_CAP};
pub use stepper::{apply_drift, brownian_step};
pub use stepsize::{adaptive_stepsize, fixed_stepsize, select_stepsize};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("trajectory exceeded the step cap of {cap} steps")]
    StepLimitExceeded { cap: u64 },
    #[error("potential of mean force is not finite at r = {radius}")]
    SingularPotential { radius: f64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Position of the moving particle (fixed particle at the origin) and the
/// model time at which it was committed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub position: Vec3,
    pub time: f64,
}

impl ParticleState {
    pub fn new(position: Vec3, time: f64) -> Self {
        ParticleState { position, time }
    }

    pub fn distance(&self) -> f64 {
        self.position.norm()
    }
}

/// A displacement to be traversed over `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepProposal {
    pub displacement: Vec3,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionOutcome {
    Continue(ParticleState),
    Reaction { hit_time: f64, position: Vec3 },
    Escape { exit_time: f64, position: Vec3 },
}

impl DetectionOutcome {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, DetectionOutcome::Continue(_))
    }
}
