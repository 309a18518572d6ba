//! Domain types shared by every stage of the simulation: the relative
//! position vector, the NAM shell geometry, simulator configuration and
//! trajectory outcomes.
//!
//! Units are abstract. Lengths are read as Ångström-equivalents and time as
//! the model time unit; every validation quantity (β) is dimensionless.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("radii must satisfy 0 < a < b < q (got a={a}, b={b}, q={q})")]
    OrderingViolation { a: f64, b: f64, q: f64 },
    #[error("diffusion coefficient must be positive (got {0})")]
    NonPositiveDiffusion(f64),
    #[error("non-finite geometry parameter `{0}`")]
    NonFinite(&'static str),
}

/// Cartesian vector in model length units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn is_zero(self) -> bool {
        self.x == 0.0 && self.y == 0.0 && self.z == 0.0
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// The NAM shell: reaction sphere `a`, start sphere `b`, escape sphere `q`.
///
/// The fixed particle sits at the origin; all distances are center to
/// center. `particle_radius` is carried as metadata and never enters the
/// termination tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct NamGeometry {
    reaction_radius: f64,
    start_radius: f64,
    escape_radius: f64,
    diffusion: f64,
    particle_radius: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    a: f64,
    b: f64,
    q: f64,
    #[serde(rename = "D")]
    d: f64,
    #[serde(default)]
    particle_radius: f64,
}

impl TryFrom<RawGeometry> for NamGeometry {
    type Error = GeometryError;
    fn try_from(r: RawGeometry) -> Result<Self, Self::Error> {
        make_geometry(r.a, r.b, r.q, r.d, r.particle_radius)
    }
}

impl From<NamGeometry> for RawGeometry {
    fn from(g: NamGeometry) -> Self {
        RawGeometry {
            a: g.reaction_radius,
            b: g.start_radius,
            q: g.escape_radius,
            d: g.diffusion,
            particle_radius: g.particle_radius,
        }
    }
}

/// Validates and builds a geometry.
pub fn make_geometry(
    a: f64,
    b: f64,
    q: f64,
    diffusion: f64,
    particle_radius: f64,
) -> Result<NamGeometry, GeometryError> {
    for (name, v) in [("a", a), ("b", b), ("q", q), ("D", diffusion), ("radius", particle_radius)] {
        if !v.is_finite() {
            return Err(GeometryError::NonFinite(name));
        }
    }
    if !(0.0 < a && a < b && b < q) {
        return Err(GeometryError::OrderingViolation { a, b, q });
    }
    if diffusion <= 0.0 {
        return Err(GeometryError::NonPositiveDiffusion(diffusion));
    }
    Ok(NamGeometry {
        reaction_radius: a,
        start_radius: b,
        escape_radius: q,
        diffusion,
        particle_radius,
    })
}

impl NamGeometry {
    pub fn new(a: f64, b: f64, q: f64, diffusion: f64) -> Result<Self, GeometryError> {
        make_geometry(a, b, q, diffusion, 0.0)
    }

    pub fn reaction_radius(&self) -> f64 {
        self.reaction_radius
    }
    pub fn start_radius(&self) -> f64 {
        self.start_radius
    }
    pub fn escape_radius(&self) -> f64 {
        self.escape_radius
    }
    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }
    pub fn particle_radius(&self) -> f64 {
        self.particle_radius
    }

    /// Same shell with a different diffusion coefficient.
    pub fn with_diffusion(&self, diffusion: f64) -> Result<Self, GeometryError> {
        make_geometry(
            self.reaction_radius,
            self.start_radius,
            self.escape_radius,
            diffusion,
            self.particle_radius,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndState {
    Reacted,
    Escaped,
}

impl fmt::Display for EndState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EndState::Reacted => "reacted",
            EndState::Escaped => "escaped",
        })
    }
}

/// Terminal record of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub end_state: EndState,
    pub steps: u64,
    pub model_time: f64,
    pub final_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RngKind {
    MersenneTwister,
    /// 48-bit linear congruential generator with the `java.util.Random`
    /// constants.
    BaselineLcg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Distance test at step endpoints only.
    TimeStepped,
    /// Exact crossing time along each step segment.
    EventTriggered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepsizePolicy {
    Fixed(f64),
    Adaptive {
        max: f64,
        min: f64,
        safety_fraction: f64,
    },
}

impl StepsizePolicy {
    pub const DEFAULT_ADAPTIVE: StepsizePolicy = StepsizePolicy::Adaptive {
        max: 0.1,
        min: 1e-4,
        safety_fraction: 0.1,
    };

    /// The largest step the policy can produce.
    pub fn base_dt(&self) -> f64 {
        match *self {
            StepsizePolicy::Fixed(dt) => dt,
            StepsizePolicy::Adaptive { max, .. } => max,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            StepsizePolicy::Fixed(dt) => {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(ConfigError::NonPositiveStep(dt));
                }
            }
            StepsizePolicy::Adaptive { max, min, safety_fraction } => {
                if !(min.is_finite() && min > 0.0) {
                    return Err(ConfigError::NonPositiveStep(min));
                }
                if !(max.is_finite() && max > 0.0) {
                    return Err(ConfigError::NonPositiveStep(max));
                }
                if min > max {
                    return Err(ConfigError::InvertedStepBounds { min, max });
                }
                if !(safety_fraction > 0.0 && safety_fraction < 1.0) {
                    return Err(ConfigError::SafetyFraction(safety_fraction));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for StepsizePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StepsizePolicy::Fixed(dt) => write!(f, "fixed({dt})"),
            StepsizePolicy::Adaptive { max, min, safety_fraction } => {
                write!(f, "adaptive({max},{min},{safety_fraction})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("step size must be positive and finite (got {0})")]
    NonPositiveStep(f64),
    #[error("minimum step {min} exceeds maximum step {max}")]
    InvertedStepBounds { min: f64, max: f64 },
    #[error("safety fraction must lie in (0, 1) (got {0})")]
    SafetyFraction(f64),
}

fn default_bridge() -> bool {
    true
}

/// Selects one execution engine: random stream, detector and step control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatorConfig {
    pub rng: RngKind,
    pub detector: DetectorKind,
    pub stepsize: StepsizePolicy,
    #[serde(default)]
    pub seed: u64,
    /// Event-triggered only: also test the Brownian bridge between step
    /// endpoints for a boundary crossing the straight segment misses.
    #[serde(default = "default_bridge")]
    pub bridge_crossing: bool,
}

impl SimulatorConfig {
    pub fn new(rng: RngKind, detector: DetectorKind, stepsize: StepsizePolicy) -> Self {
        SimulatorConfig {
            rng,
            detector,
            stepsize,
            seed: 0,
            bridge_crossing: true,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.stepsize.validate()
    }

    /// Short label such as `mt/event/fixed(0.1)`.
    pub fn label(&self) -> String {
        let rng = match self.rng {
            RngKind::MersenneTwister => "mt",
            RngKind::BaselineLcg => "lcg",
        };
        let det = match self.detector {
            DetectorKind::TimeStepped => "time",
            DetectorKind::EventTriggered if self.bridge_crossing => "event",
            DetectorKind::EventTriggered => "event-linear",
        };
        format!("{rng}/{det}/{}", self.stepsize)
    }
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig::new(
            RngKind::MersenneTwister,
            DetectorKind::EventTriggered,
            StepsizePolicy::Fixed(0.1),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_geometry_is_accepted() {
        let g = make_geometry(10.0, 50.0, 100.0, 1.0, 4.0).unwrap();
        assert_eq!(g.reaction_radius(), 10.0);
        assert_eq!(g.start_radius(), 50.0);
        assert_eq!(g.escape_radius(), 100.0);
        assert_eq!(g.particle_radius(), 4.0);
    }

    #[test]
    fn equal_radii_violate_ordering() {
        assert!(matches!(
            make_geometry(50.0, 50.0, 100.0, 1.0, 4.0),
            Err(GeometryError::OrderingViolation { .. })
        ));
        assert!(matches!(
            make_geometry(10.0, 100.0, 100.0, 1.0, 4.0),
            Err(GeometryError::OrderingViolation { .. })
        ));
        assert!(matches!(
            make_geometry(0.0, 50.0, 100.0, 1.0, 4.0),
            Err(GeometryError::OrderingViolation { .. })
        ));
    }

    #[test]
    fn zero_diffusion_rejected() {
        assert_eq!(
            make_geometry(10.0, 50.0, 100.0, 0.0, 4.0),
            Err(GeometryError::NonPositiveDiffusion(0.0))
        );
    }

    #[test]
    fn nan_rejected() {
        assert_eq!(
            make_geometry(f64::NAN, 50.0, 100.0, 1.0, 4.0),
            Err(GeometryError::NonFinite("a"))
        );
    }

    #[test]
    fn geometry_serde_validates() {
        let ok: NamGeometry = serde_json::from_str(r#"{"a":10,"b":50,"q":100,"D":1}"#).unwrap();
        assert_eq!(ok.diffusion(), 1.0);
        let bad = serde_json::from_str::<NamGeometry>(r#"{"a":60,"b":50,"q":100,"D":1}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn stepsize_validation() {
        assert!(StepsizePolicy::Fixed(0.1).validate().is_ok());
        assert!(StepsizePolicy::Fixed(0.0).validate().is_err());
        assert!(StepsizePolicy::DEFAULT_ADAPTIVE.validate().is_ok());
        let inverted = StepsizePolicy::Adaptive { max: 0.01, min: 0.1, safety_fraction: 0.1 };
        assert!(matches!(inverted.validate(), Err(ConfigError::InvertedStepBounds { .. })));
        let bad_f = StepsizePolicy::Adaptive { max: 0.1, min: 0.01, safety_fraction: 1.0 };
        assert!(matches!(bad_f.validate(), Err(ConfigError::SafetyFraction(_))));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn norm_is_homogeneous(x in -1e3..1e3f64, y in -1e3..1e3f64, z in -1e3..1e3f64, s in -1e6..1e6f64) {
                let v = Vec3::new(x, y, z);
                let lhs = v.scale(s).norm();
                let rhs = s.abs() * v.norm();
                prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs.max(f64::MIN_POSITIVE));
            }

            #[test]
            fn construction_is_total(a in 1e-3..1e3f64, db in 1e-3..1e3f64, dq in 1e-3..1e3f64, d in 1e-6..1e3f64) {
                let g = make_geometry(a, a + db, a + db + dq, d, 0.0);
                prop_assert!(g.is_ok());
            }

            #[test]
            fn invalid_ordering_is_an_error(a in 0.0..1e3f64, b in 0.0..1e3f64, q in 0.0..1e3f64) {
                prop_assume!(!(a > 0.0 && a < b && b < q));
                let is_ordering_violation = matches!(
                    make_geometry(a, b, q, 1.0, 0.0),
                    Err(GeometryError::OrderingViolation { .. })
                );
                prop_assert!(is_ordering_violation);
            }
        }
    }
}
