use super::ParticleState;
use crate::geometry::{DetectorKind, NamGeometry, SimulatorConfig, StepsizePolicy};

/// Constant step, independent of the state.
pub fn fixed_stepsize(policy: &StepsizePolicy, _state: &ParticleState) -> f64 {
    policy.base_dt()
}

/// Distance-dependent step: the RMS displacement `√(6·D·dt)` is held to at
/// most `safety_fraction` of the gap to the nearer boundary, then clamped to
/// `[min, max]`. For a fixed policy this returns the fixed step.
pub fn adaptive_stepsize(policy: &StepsizePolicy, state: &ParticleState, geometry: &NamGeometry) -> f64 {
    match *policy {
        StepsizePolicy::Fixed(dt) => dt,
        StepsizePolicy::Adaptive { max, min, safety_fraction } => {
            let d = state.distance();
            let gap = (d - geometry.reaction_radius()).min(geometry.escape_radius() - d);
            if gap <= 0.0 {
                return min;
            }
            let reach = safety_fraction * gap;
            let dt = reach * reach / (6.0 * geometry.diffusion());
            dt.clamp(min, max)
        }
    }
}

/// Step for the next proposal under `config`. Event-triggered detection
/// always runs at the policy's base step.
#[inline]
pub fn select_stepsize(config: &SimulatorConfig, state: &ParticleState, geometry: &NamGeometry) -> f64 {
    match (config.detector, &config.stepsize) {
        (DetectorKind::EventTriggered, p) => p.base_dt(),
        (DetectorKind::TimeStepped, p @ StepsizePolicy::Fixed(_)) => fixed_stepsize(p, state),
        (DetectorKind::TimeStepped, p) => adaptive_stepsize(p, state, geometry),
    }
}
