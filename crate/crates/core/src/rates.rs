//! Analytic and semi-analytic NAM rate formulas, plus the replication
//! statistics used to size experiments.
//!
//! Rates are in length³/time model units; energies are in units of k_BT.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::geometry::EndState;
use crate::quadrature::{adaptive_simpson, QuadratureError, DEFAULT_MAX_DEPTH};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RatesError {
    #[error("input `{name}` must be positive (got {value})")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("radii must satisfy 0 < a < b < q (got a={a}, b={b}, q={q})")]
    OrderingViolation { a: f64, b: f64, q: f64 },
    #[error("Ω = k_b/k_q must lie in (0, 1] (k_b={k_b}, k_q={k_q})")]
    OmegaOutOfRange { k_b: f64, k_q: f64 },
    #[error("probability `{name}` outside [0, 1] (got {value})")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("rate integral diverges: potential grows without bound at large r")]
    DivergentIntegral,
    #[error("quadrature failed: {0}")]
    QuadratureNonConvergence(#[from] QuadratureError),
    #[error("cannot estimate β from an empty sample")]
    EmptySample,
}

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Centrosymmetric interaction energy E(r)/k_BT.
#[derive(Clone, Default)]
pub enum PotentialOfMeanForce {
    /// Non-interacting particles.
    #[default]
    Zero,
    /// Uniform offset `c`; useful as a quadrature check.
    Constant(f64),
    /// Screened Coulomb `E(r) = charge_product · exp(-kappa·r) / r`.
    DebyeHuckel { charge_product: f64, kappa: f64 },
    /// Arbitrary energy with optional analytic derivative; the derivative
    /// falls back to a central difference.
    Custom { energy: RadialFn, derivative: Option<RadialFn> },
}

impl fmt::Debug for PotentialOfMeanForce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialOfMeanForce::Zero => f.write_str("Zero"),
            PotentialOfMeanForce::Constant(c) => write!(f, "Constant({c})"),
            PotentialOfMeanForce::DebyeHuckel { charge_product, kappa } => {
                write!(f, "DebyeHuckel {{ charge_product: {charge_product}, kappa: {kappa} }}")
            }
            PotentialOfMeanForce::Custom { derivative, .. } => {
                write!(f, "Custom {{ analytic_derivative: {} }}", derivative.is_some())
            }
        }
    }
}

impl PotentialOfMeanForce {
    pub fn custom<F>(energy: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        PotentialOfMeanForce::Custom { energy: Arc::new(energy), derivative: None }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PotentialOfMeanForce::Zero)
    }

    pub fn energy(&self, r: f64) -> f64 {
        match self {
            PotentialOfMeanForce::Zero => 0.0,
            PotentialOfMeanForce::Constant(c) => *c,
            PotentialOfMeanForce::DebyeHuckel { charge_product, kappa } => {
                charge_product * (-kappa * r).exp() / r
            }
            PotentialOfMeanForce::Custom { energy, .. } => energy(r),
        }
    }

    /// dE/dr in k_BT per length.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        match self {
            PotentialOfMeanForce::Zero | PotentialOfMeanForce::Constant(_) => 0.0,
            PotentialOfMeanForce::DebyeHuckel { charge_product, kappa } => {
                -charge_product * (-kappa * r).exp() * (kappa * r + 1.0) / (r * r)
            }
            PotentialOfMeanForce::Custom { energy, derivative } => match derivative {
                Some(d) => d(r),
                None => {
                    let h = 1e-6 * r.abs().max(1.0);
                    (energy(r + h) - energy(r - h)) / (2.0 * h)
                }
            },
        }
    }

    fn energy_at_infinity(&self) -> f64 {
        match self {
            PotentialOfMeanForce::Zero | PotentialOfMeanForce::DebyeHuckel { .. } => 0.0,
            PotentialOfMeanForce::Constant(c) => *c,
            PotentialOfMeanForce::Custom { energy, .. } => {
                let e = energy(f64::INFINITY);
                if e.is_finite() {
                    e
                } else {
                    energy(1e15)
                }
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PotentialRepr {
    Zero,
    Constant { value: f64 },
    DebyeHuckel { charge_product: f64, kappa: f64 },
}

impl Serialize for PotentialOfMeanForce {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            PotentialOfMeanForce::Zero => PotentialRepr::Zero,
            PotentialOfMeanForce::Constant(value) => PotentialRepr::Constant { value: *value },
            PotentialOfMeanForce::DebyeHuckel { charge_product, kappa } => PotentialRepr::DebyeHuckel {
                charge_product: *charge_product,
                kappa: *kappa,
            },
            PotentialOfMeanForce::Custom { .. } => {
                return Err(serde::ser::Error::custom("custom potentials cannot be serialized"))
            }
        };
        repr.serialize(serializer)
    }
}

/// Accepts `{kind = "zero"}`, `{kind = "constant", value}` and
/// `{kind = "debye_huckel", charge_product, kappa}`.
impl<'de> Deserialize<'de> for PotentialOfMeanForce {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match PotentialRepr::deserialize(deserializer)? {
            PotentialRepr::Zero => PotentialOfMeanForce::Zero,
            PotentialRepr::Constant { value } => PotentialOfMeanForce::Constant(value),
            PotentialRepr::DebyeHuckel { charge_product, kappa } => {
                PotentialOfMeanForce::DebyeHuckel { charge_product, kappa }
            }
        })
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<(), RatesError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(RatesError::NonPositiveInput { name, value })
    }
}

fn require_probability(name: &'static str, value: f64) -> Result<(), RatesError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(RatesError::ProbabilityOutOfRange { name, value })
    }
}

/// Diffusion-limited flux onto a sphere of radius `b`: 4πDb.
pub fn smoluchowski_rate(diffusion: f64, b: f64) -> Result<f64, RatesError> {
    require_positive("D", diffusion)?;
    require_positive("b", b)?;
    Ok(4.0 * PI * diffusion * b)
}

/// `4π [∫_b^∞ exp(E(r)) / (r² D) dr]⁻¹`.
///
/// With `u = 1/r` the integral becomes `(1/D) ∫_0^{1/b} exp(E(1/u)) du`, a
/// finite interval on which the integrand tends to `exp(E(∞))` at `u = 0`.
pub fn rate_with_potential(
    diffusion: f64,
    b: f64,
    pmf: &PotentialOfMeanForce,
    quad_tol: f64,
) -> Result<f64, RatesError> {
    require_positive("D", diffusion)?;
    require_positive("b", b)?;
    require_positive("quad_tol", quad_tol)?;

    // Growth by ln(1000) over three decades of r is the r¹ threshold at which
    // ∫ exp(E)/r² stops converging.
    let near = pmf.energy(1e6 * b);
    let far = pmf.energy(1e9 * b);
    if !near.is_finite() || !far.is_finite() || far - near >= 1000f64.ln() {
        return Err(RatesError::DivergentIntegral);
    }

    let e_inf = pmf.energy_at_infinity();
    let integrand = |u: f64| {
        if u == 0.0 {
            e_inf.exp()
        } else {
            pmf.energy(1.0 / u).exp()
        }
    };
    let integral = adaptive_simpson(integrand, 0.0, 1.0 / b, quad_tol, DEFAULT_MAX_DEPTH)? / diffusion;
    if !(integral.is_finite() && integral > 0.0) {
        return Err(RatesError::DivergentIntegral);
    }
    Ok(4.0 * PI / integral)
}

/// Reaction probability corrected to an untruncated domain:
/// `β / (1 − (1 − β)·Ω)` with `Ω = k_b / k_q`.
pub fn beta_infinity(beta: f64, k_b: f64, k_q: f64) -> Result<f64, RatesError> {
    require_probability("beta", beta)?;
    require_positive("k_b", k_b)?;
    require_positive("k_q", k_q)?;
    if k_b > k_q {
        return Err(RatesError::OmegaOutOfRange { k_b, k_q });
    }
    let omega = k_b / k_q;
    let denom = 1.0 - (1.0 - beta) * omega;
    if denom <= 0.0 {
        // β = 0 and Ω = 1: the b and q surfaces coincide.
        return Ok(0.0);
    }
    Ok((beta / denom).clamp(beta, 1.0))
}

/// `k = k_D(b) · β∞`.
pub fn association_rate(k_b: f64, beta_inf: f64) -> Result<f64, RatesError> {
    require_positive("k_b", k_b)?;
    require_probability("beta_inf", beta_inf)?;
    Ok(k_b * beta_inf)
}

fn check_order(a: f64, b: f64, q: f64) -> Result<(), RatesError> {
    if a > 0.0 && a < b && b < q && q.is_finite() {
        Ok(())
    } else {
        Err(RatesError::OrderingViolation { a, b, q })
    }
}

/// Reaction probability under drift from `pmf`:
/// `∫_b^q exp(E)/r² dr / ∫_a^q exp(E)/r² dr`.
pub fn beta_with_potential(
    a: f64,
    b: f64,
    q: f64,
    pmf: &PotentialOfMeanForce,
    quad_tol: f64,
) -> Result<f64, RatesError> {
    check_order(a, b, q)?;
    require_positive("quad_tol", quad_tol)?;
    let w = |r: f64| pmf.energy(r).exp() / (r * r);
    let inner = adaptive_simpson(w, a, b, quad_tol, DEFAULT_MAX_DEPTH)?;
    let outer = adaptive_simpson(w, b, q, quad_tol, DEFAULT_MAX_DEPTH)?;
    let beta = outer / (inner + outer);
    if !beta.is_finite() {
        return Err(RatesError::DivergentIntegral);
    }
    Ok(beta)
}

/// Probability that free diffusion started on the `b` sphere reaches `a`
/// before `q`: `(a/b)·(q−b)/(q−a)`.
pub fn analytic_beta(a: f64, b: f64, q: f64) -> Result<f64, RatesError> {
    check_order(a, b, q)?;
    Ok(a / b * (q - b) / (q - a))
}

/// [`analytic_beta`] for an arbitrary start radius `a ≤ r0 ≤ q`.
pub fn hitting_probability(a: f64, r0: f64, q: f64) -> Result<f64, RatesError> {
    if !(a > 0.0 && a < q && a <= r0 && r0 <= q && q.is_finite()) {
        return Err(RatesError::OrderingViolation { a, b: r0, q });
    }
    Ok(a / r0 * (q - r0) / (q - a))
}

/// Standard-normal quantile at `(1 + c)/2`.
pub fn two_sided_z(confidence: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    n.inverse_cdf(0.5 * (1.0 + confidence))
}

/// Replications needed so a Bernoulli mean lands within `e` of its
/// expectation with confidence `c`: `⌈(z·σ̂/e)²⌉`, never fewer than 2.
pub fn required_replications(beta_pilot: f64, e: f64, c: f64) -> u64 {
    let p = beta_pilot.clamp(0.0, 1.0);
    if !(e > 0.0) || !(c > 0.0 && c < 1.0) {
        return 2;
    }
    let sigma = (p * (1.0 - p)).sqrt();
    let n = (two_sided_z(c) * sigma / e).powi(2).ceil();
    if n.is_finite() {
        (n as u64).max(2)
    } else {
        2
    }
}

/// Monte Carlo estimate of β with the raw end states retained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta_hat: f64,
    pub std_error: f64,
    pub n: u64,
    pub reacted: u64,
    #[serde(skip)]
    pub per_run_end_states: Vec<EndState>,
}

impl BetaEstimate {
    /// Half-width of the normal-approximation confidence interval.
    pub fn ci_half_width(&self, confidence: f64) -> f64 {
        two_sided_z(confidence) * self.std_error
    }
}

pub fn estimate_beta(end_states: &[EndState]) -> Result<BetaEstimate, RatesError> {
    if end_states.is_empty() {
        return Err(RatesError::EmptySample);
    }
    let n = end_states.len() as u64;
    let reacted = end_states.iter().filter(|s| **s == EndState::Reacted).count() as u64;
    let beta_hat = reacted as f64 / n as f64;
    let std_error = (beta_hat * (1.0 - beta_hat) / n as f64).sqrt();
    Ok(BetaEstimate {
        beta_hat,
        std_error,
        n,
        reacted,
        per_run_end_states: end_states.to_vec(),
    })
}
