use serde::{Deserialize, Serialize};

use super::detect::bridge_crossing_with_distances;
use super::{
    apply_drift, brownian_step, detect_event_triggered, detect_time_stepped, select_stepsize,
    DetectionOutcome, DynamicsError, ParticleState,
};
use crate::geometry::{DetectorKind, EndState, NamGeometry, SimulatorConfig, TrajectoryResult, Vec3};
use crate::rates::PotentialOfMeanForce;
use crate::stochastics::{sample_uniform_on_sphere, RandomStream};

pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

/// One committed step of a traced trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub time: f64,
    pub position: Vec3,
    pub distance: f64,
}

/// Runs trajectories for one geometry under one simulator configuration.
#[derive(Debug, Clone)]
pub struct TrajectoryEngine {
    geometry: NamGeometry,
    config: SimulatorConfig,
    pmf: PotentialOfMeanForce,
    step_cap: u64,
}

impl TrajectoryEngine {
    pub fn new(geometry: NamGeometry, config: SimulatorConfig) -> Result<Self, DynamicsError> {
        config.validate()?;
        Ok(TrajectoryEngine {
            geometry,
            config,
            pmf: PotentialOfMeanForce::Zero,
            step_cap: DEFAULT_STEP_CAP,
        })
    }

    /// Enables force drift from `pmf`.
    pub fn with_potential(mut self, pmf: PotentialOfMeanForce) -> Self {
        self.pmf = pmf;
        self
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn geometry(&self) -> &NamGeometry {
        &self.geometry
    }

    pub fn config(&self) -> &SimulatorConfig {
        &self.config
    }

    /// Starts on a uniformly random point of the `b` sphere.
    pub fn run(&self, stream: &mut RandomStream) -> Result<TrajectoryResult, DynamicsError> {
        self.run_traced(stream, None, None)
    }

    /// Starts at `start` instead of the `b` sphere.
    pub fn run_from(&self, stream: &mut RandomStream, start: Vec3) -> Result<TrajectoryResult, DynamicsError> {
        self.run_traced(stream, Some(start), None)
    }

    pub fn run_traced(
        &self,
        stream: &mut RandomStream,
        start: Option<Vec3>,
        mut trace: Option<&mut dyn FnMut(TraceRecord)>,
    ) -> Result<TrajectoryResult, DynamicsError> {
        let g = &self.geometry;
        let a = g.reaction_radius();
        let q = g.escape_radius();
        let diffusion = g.diffusion();
        let start = match start {
            Some(p) => p,
            None => sample_uniform_on_sphere(stream, g.start_radius())?,
        };
        let mut state = ParticleState::new(start, 0.0);
        if let Some(t) = trace.as_deref_mut() {
            t(TraceRecord { step: 0, time: 0.0, position: start, distance: start.norm() });
        }

        // A start on or beyond a boundary terminates at the first check.
        let d0 = start.norm();
        if d0 <= a || d0 >= q {
            let end_state = if d0 <= a { EndState::Reacted } else { EndState::Escaped };
            return Ok(TrajectoryResult {
                end_state,
                steps: 1,
                model_time: select_stepsize(&self.config, &state, g),
                final_distance: d0,
            });
        }

        let drift = !self.pmf.is_zero();
        let event = self.config.detector == DetectorKind::EventTriggered;
        let bridge = event && self.config.bridge_crossing;
        let mut steps: u64 = 0;
        let mut distance = d0;
        loop {
            if steps >= self.step_cap {
                return Err(DynamicsError::StepLimitExceeded { cap: self.step_cap });
            }
            let dt = select_stepsize(&self.config, &state, g);
            let mut proposal = brownian_step(&state, dt, diffusion, stream);
            if drift {
                proposal = apply_drift(proposal, &state, &self.pmf, dt, diffusion)?;
            }
            steps += 1;
            let mut outcome = if event {
                detect_event_triggered(&state, &proposal, g)
            } else {
                detect_time_stepped(&state, &proposal, g)
            };
            let mut next_distance = 0.0;
            if let DetectionOutcome::Continue(next) = &outcome {
                next_distance = next.distance();
                if bridge {
                    if let Some(hit) = bridge_crossing_with_distances(&state, next, distance, next_distance, g, stream) {
                        outcome = hit;
                    }
                }
            }
            let (end_state, time, position) = match outcome {
                DetectionOutcome::Continue(next) => {
                    state = next;
                    distance = next_distance;
                    if let Some(t) = trace.as_deref_mut() {
                        t(TraceRecord { step: steps, time: state.time, position: state.position, distance });
                    }
                    continue;
                }
                DetectionOutcome::Reaction { hit_time, position } => (EndState::Reacted, hit_time, position),
                DetectionOutcome::Escape { exit_time, position } => (EndState::Escaped, exit_time, position),
            };
            let final_distance = position.norm();
            if let Some(t) = trace.as_deref_mut() {
                t(TraceRecord { step: steps, time, position, distance: final_distance });
            }
            return Ok(TrajectoryResult {
                end_state,
                steps,
                model_time: time,
                final_distance,
            });
        }
    }
}

/// One trajectory from the `b` sphere with drift disabled.
pub fn run_trajectory(
    geometry: &NamGeometry,
    config: &SimulatorConfig,
    stream: &mut RandomStream,
) -> Result<TrajectoryResult, DynamicsError> {
    TrajectoryEngine::new(*geometry, *config)?.run(stream)
}
