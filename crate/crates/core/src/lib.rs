//! Brownian-dynamics estimation of diffusional association rates with the
//! Northrup–Allison–McCammon (NAM) scheme.
//!
//! The crate is organised by stage:
//!
//! * [`geometry`] – shell radii, simulator configuration, trajectory outcomes
//! * [`stochastics`] – reproducible random streams and samplers
//! * [`dynamics`] – Brownian stepper, step control, collision detection
//! * [`rates`] – Smoluchowski and potential-of-mean-force rates, β∞, statistics
//! * [`spacepi`] – the model description language front end
//! * [`experiment`] – validation experiments over configuration grids
//! * [`io`] – experiment files, reports and manifests for the CLI

pub mod dynamics;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod rates;
pub mod spacepi;
pub mod stochastics;

pub use geometry::{
    make_geometry, DetectorKind, EndState, NamGeometry, RngKind, SimulatorConfig, StepsizePolicy, TrajectoryResult,
    Vec3,
};
