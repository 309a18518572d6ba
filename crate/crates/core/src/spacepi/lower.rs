use thiserror::Error;

use super::{Action, ModelDocument, PositionExpr, Process, ProcessDef};
use crate::geometry::{GeometryError, NamGeometry, SimulatorConfig};
use crate::rates::PotentialOfMeanForce;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LowerError {
    #[error("model is not NAM-shaped: {0}")]
    NotNamShaped(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Executable form of a model.
#[derive(Debug, Clone)]
pub struct LoweredModel {
    pub geometry: NamGeometry,
    pub config: SimulatorConfig,
    /// `None` when the model declares no potential.
    pub pmf: Option<PotentialOfMeanForce>,
}

impl LoweredModel {
    pub fn potential(&self) -> PotentialOfMeanForce {
        self.pmf.clone().unwrap_or_default()
    }
}

fn shape(msg: impl Into<String>) -> LowerError {
    LowerError::NotNamShaped(msg.into())
}

fn initial_names(p: &Process) -> Result<Vec<&str>, LowerError> {
    match p {
        Process::Call(n) => Ok(vec![n.as_str()]),
        Process::Par(items) => {
            let mut names = Vec::new();
            for item in items {
                names.extend(initial_names(item)?);
            }
            Ok(names)
        }
        _ => Err(shape("initial process must be a parallel composition of process names")),
    }
}

/// The single action of a body of the form `ch!(~, r).0`.
fn single_action(def: &ProcessDef) -> Result<&Action, LowerError> {
    match &def.body {
        Process::Prefix(a, cont) if **cont == Process::Nil => Ok(a),
        _ => Err(shape(format!(
            "process `{}` must consist of one channel action followed by 0",
            def.name
        ))),
    }
}

fn complementary(doc: &ModelDocument, x: &Action, y: &Action) -> bool {
    x.channel == y.channel && x.direction == y.direction.complement() && doc.resolve(&x.radius) == doc.resolve(&y.radius)
}

fn sphere_radius(doc: &ModelDocument, def: &ProcessDef) -> Result<Option<f64>, LowerError> {
    match doc.position(&def.position) {
        Some(PositionExpr::Sphere { radius }) => Ok(doc.resolve(radius)),
        _ => Ok(None),
    }
}

fn at_origin(doc: &ModelDocument, def: &ProcessDef) -> bool {
    match doc.position(&def.position) {
        Some(PositionExpr::Fixed { x, y, z }) => [x, y, z].iter().all(|v| doc.resolve(v) == Some(0.0)),
        _ => false,
    }
}

fn lower_pmf(doc: &ModelDocument) -> Result<Option<PotentialOfMeanForce>, LowerError> {
    let Some(decl) = doc.pmf() else { return Ok(None) };
    let pmf = match (decl.function.as_str(), decl.args.as_slice()) {
        ("zero", []) => PotentialOfMeanForce::Zero,
        ("constant", [c]) => PotentialOfMeanForce::Constant(*c),
        ("debye_huckel", [charge_product, kappa]) if *kappa >= 0.0 => PotentialOfMeanForce::DebyeHuckel {
            charge_product: *charge_product,
            kappa: *kappa,
        },
        (f, args) => {
            return Err(shape(format!(
                "potential `{}: {f}` with {} argument(s) is not supported; use zero(), constant(c) or debye_huckel(Q, kappa >= 0)",
                decl.name,
                args.len()
            )))
        }
    };
    Ok(Some(pmf))
}

/// Extracts the NAM geometry from a parsed model; `diffusion` is supplied
/// by the caller because models carry no diffusion coefficient.
///
/// The model must consist of three processes: one moving process on a
/// sphere of radius `b`, one fixed process at the origin and one exit
/// process on a sphere of radius `q`, each a single channel action. The
/// reaction radius `a` is the radius of the moving process's action.
pub fn lower_to_nam(doc: &ModelDocument, diffusion: f64) -> Result<LoweredModel, LowerError> {
    let names = initial_names(doc.initial())?;
    let mut defs = Vec::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(shape(format!("process `{n}` is instantiated more than once")));
        }
        let def = doc
            .process(n)
            .ok_or_else(|| shape(format!("process `{n}` is not defined")))?;
        defs.push(def);
    }
    if defs.len() != 3 {
        return Err(shape(format!("expected 3 processes in the initial process, found {}", defs.len())));
    }

    let moving: Vec<_> = defs.iter().filter(|d| d.motion.is_some()).collect();
    let [moving] = moving.as_slice() else {
        return Err(shape(format!(
            "exactly one process must carry a movement function, found {}",
            moving.len()
        )));
    };
    let fixed: Vec<_> = defs.iter().filter(|d| d.motion.is_none() && at_origin(doc, d)).collect();
    let [fixed] = fixed.as_slice() else {
        return Err(shape(format!("exactly one resting process must sit at the origin, found {}", fixed.len())));
    };
    let exit = defs
        .iter()
        .find(|d| d.name != moving.name && d.name != fixed.name)
        .expect("three distinct processes");

    let b = sphere_radius(doc, moving)?
        .ok_or_else(|| shape(format!("moving process `{}` must start on a sphere", moving.name)))?;
    let q = sphere_radius(doc, exit)?
        .ok_or_else(|| shape(format!("exit process `{}` must sit on a sphere", exit.name)))?;

    let move_action = single_action(moving)?;
    let fixed_action = single_action(fixed)?;
    let exit_action = single_action(exit)?;
    if !complementary(doc, move_action, fixed_action) {
        return Err(shape(format!(
            "processes `{}` and `{}` do not communicate on complementary actions",
            moving.name, fixed.name
        )));
    }
    if !complementary(doc, move_action, exit_action) {
        return Err(shape(format!(
            "processes `{}` and `{}` do not communicate on complementary actions",
            moving.name, exit.name
        )));
    }
    let a = doc.resolve(&move_action.radius).expect("validated radius");

    let motion_name = moving.motion.as_deref().unwrap_or_default();
    let motion = doc
        .motions()
        .iter()
        .find(|m| m.name == motion_name)
        .ok_or_else(|| shape(format!("movement function `{motion_name}` is not declared")))?;
    if let Some(target) = &motion.escape_target {
        if *target != exit.position {
            return Err(shape(format!(
                "movement function `{}` must send the particle to the exit position `{}`, not `{target}`",
                motion.name, exit.position
            )));
        }
    }

    let pmf = lower_pmf(doc)?;
    let geometry = NamGeometry::new(a, b, q, diffusion)?;
    Ok(LoweredModel { geometry, config: SimulatorConfig::default(), pmf })
}

#[cfg(test)]
mod tests {
    use super::super::parse_model;
    use super::*;

    const NAM_MODEL: &str = include_str!("../../models/nam.spi");

    fn lower(text: &str) -> Result<LoweredModel, LowerError> {
        lower_to_nam(&parse_model(text).unwrap(), 1.0)
    }

    #[test]
    fn bundled_model_lowers() {
        let m = lower(NAM_MODEL).unwrap();
        assert_eq!(m.geometry, NamGeometry::new(10.0, 50.0, 100.0, 1.0).unwrap());
        assert_eq!(m.config, SimulatorConfig::default());
        assert!(m.pmf.is_none());
    }

    #[test]
    fn exit_inside_start_sphere_is_ordering_violation() {
        let text = NAM_MODEL.replace("q = 100", "q = 40");
        assert!(matches!(lower(&text), Err(LowerError::Geometry(GeometryError::OrderingViolation { .. }))));
    }

    #[test]
    fn two_moving_processes() {
        let text = NAM_MODEL.replace("ExitParticle = ", "ExitParticle[bMove] = ");
        assert!(matches!(lower(&text), Err(LowerError::NotNamShaped(m)) if m.contains("movement function")));
    }

    #[test]
    fn unsupported_pmf() {
        let text = NAM_MODEL.replace("f_pmf: not defined", "f_pmf: lennard_jones(1, 2)");
        let err = lower(&text).unwrap_err();
        assert!(matches!(&err, LowerError::NotNamShaped(m) if m.contains("lennard_jones")), "{err}");
    }

    #[test]
    fn supported_pmf() {
        let text = NAM_MODEL.replace("f_pmf: not defined", "f_pmf: debye_huckel(-20, 0.1)");
        let m = lower(&text).unwrap();
        assert!(matches!(m.pmf, Some(PotentialOfMeanForce::DebyeHuckel { charge_product, kappa }) if charge_product == -20.0 && kappa == 0.1));
    }

    #[test]
    fn restriction_and_choice_rejected() {
        let text = NAM_MODEL.replace(
            "FixedParticle = coll?(∼, r_react).0",
            "FixedParticle = (new z) coll?(∼, r_react).0",
        );
        assert!(matches!(lower(&text), Err(LowerError::NotNamShaped(_))));
        let text = NAM_MODEL.replace(
            "FixedParticle = coll?(∼, r_react).0",
            "FixedParticle = coll?(∼, r_react).0 + coll?(∼, r_react).0",
        );
        assert!(matches!(lower(&text), Err(LowerError::NotNamShaped(_))));
    }

    #[test]
    fn wrong_escape_target() {
        let text = NAM_MODEL
            .replace("pos_E(x) ∧ y = pos_E(y) ∧ z = pos_E(z)", "pos_M(x) ∧ y = pos_M(y) ∧ z = pos_M(z)");
        assert!(matches!(lower(&text), Err(LowerError::NotNamShaped(m)) if m.contains("exit position")));
    }

    #[test]
    fn reaction_radius_comes_from_channel() {
        let text = NAM_MODEL.replace("r_react = 10", "r_react = 7.5");
        assert_eq!(lower(&text).unwrap().geometry.reaction_radius(), 7.5);
    }
}
