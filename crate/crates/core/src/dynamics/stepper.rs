use super::{DynamicsError, ParticleState, StepProposal};
use crate::rates::PotentialOfMeanForce;
use crate::stochastics::RandomStream;

/// Free Brownian displacement: each component ~ N(0, 2·D·dt).
///
/// Consumes exactly three standard normals from `stream`.
#[inline]
pub fn brownian_step(_state: &ParticleState, dt: f64, diffusion: f64, stream: &mut RandomStream) -> StepProposal {
    let sigma = (2.0 * diffusion * dt).sqrt();
    StepProposal {
        displacement: stream.next_normal_vec3().scale(sigma),
        dt,
    }
}

/// Adds the deterministic force term `D · F · dt` (energies in k_BT) along
/// the radial direction, with `F = −dE/dr`.
///
/// A zero force leaves the proposal bit-for-bit unchanged.
pub fn apply_drift(
    proposal: StepProposal,
    state: &ParticleState,
    pmf: &PotentialOfMeanForce,
    dt: f64,
    diffusion: f64,
) -> Result<StepProposal, DynamicsError> {
    if pmf.is_zero() {
        return Ok(proposal);
    }
    let r = state.distance();
    let energy = pmf.energy(r);
    let slope = pmf.radial_derivative(r);
    if !energy.is_finite() || !slope.is_finite() || r == 0.0 {
        return Err(DynamicsError::SingularPotential { radius: r });
    }
    let force = -slope;
    if force == 0.0 {
        return Ok(proposal);
    }
    let drift = state.position.scale(diffusion * force * dt / r);
    Ok(StepProposal {
        displacement: proposal.displacement + drift,
        dt: proposal.dt,
    })
}
