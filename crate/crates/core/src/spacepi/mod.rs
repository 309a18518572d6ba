//! Front end for the NAM-shaped fragment of SpacePi, a π-calculus with
//! positions, movement functions and radius-limited channels.
//!
//! A model file (`.spi`, UTF-8) has six sections introduced by literal
//! header lines:
//!
//! ```text
//! Position declarations
//! pos_F := x = 0 /\ y = 0 /\ z = 0
//! pos_M := rand(x,y,z) s.t. (x^2 + y^2 + z^2) = b
//! pos_E := rand(x,y,z) s.t. (x^2 + y^2 + z^2) = q
//!
//! Radius declarations
//! r_react = 10
//! b = 50
//! q = 100
//!
//! Potential of mean force declarations
//! f_pmf: not defined
//!
//! Motion declarations
//! bMove(): xdot^2 + ydot^2 + zdot^2 < q, x = pos_E(x) /\ y = pos_E(y) /\ z = pos_E(z) otherwise
//!
//! Process definitions
//! FixedParticle = coll?(~, r_react).0
//! MovingParticle[bMove] = coll!(~, r_react).0
//! ExitParticle = coll?(~, r_react).0
//!
//! Initial process
//! FixedParticle | MovingParticle | ExitParticle
//! ```
//!
//! One declaration per line; `#` starts a comment. A process binds its
//! position with `Name^pos_X`; without it, `pos_<first letter of Name>` is
//! used. The sphere constraint's right-hand side is read as the sphere
//! radius. Unicode spellings (`∧`, `∼`, `ẋ`, `²`, `≔`) are accepted.
//!
//! Sections may appear in any order; [`format_model`] emits them in the
//! order above with every declaration list sorted by name.

mod format;
mod lexer;
mod lower;
mod parser;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use format::format_model;
pub use lower::{lower_to_nam, LowerError, LoweredModel};
pub use parser::parse_model;

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{loc}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        loc: Location,
        expected: Vec<String>,
        found: String,
    },
    #[error("{loc}: undeclared {kind} `{name}`")]
    UndeclaredName {
        loc: Location,
        kind: &'static str,
        name: String,
    },
    #[error("{loc}: duplicate declaration of `{name}` (first declared at {previous})")]
    DuplicateDeclaration {
        loc: Location,
        name: String,
        previous: Location,
    },
    #[error("{loc}: missing section `{section}`")]
    MissingSection { loc: Location, section: &'static str },
    #[error("{loc}: channel action `{channel}{}(~, {radius})` has no complementary action", direction.symbol())]
    UnmatchedChannel {
        loc: Location,
        channel: String,
        direction: Direction,
        radius: String,
    },
}

impl ParseError {
    pub fn location(&self) -> Location {
        match self {
            ParseError::Syntax { loc, .. }
            | ParseError::UndeclaredName { loc, .. }
            | ParseError::DuplicateDeclaration { loc, .. }
            | ParseError::MissingSection { loc, .. }
            | ParseError::UnmatchedChannel { loc, .. } => *loc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Section {
    Positions,
    Radii,
    Potential,
    Motions,
    Processes,
    Initial,
}

impl Section {
    pub const ALL: [Section; 6] = [
        Section::Positions,
        Section::Radii,
        Section::Potential,
        Section::Motions,
        Section::Processes,
        Section::Initial,
    ];

    pub fn header(self) -> &'static str {
        match self {
            Section::Positions => "Position declarations",
            Section::Radii => "Radius declarations",
            Section::Potential => "Potential of mean force declarations",
            Section::Motions => "Motion declarations",
            Section::Processes => "Process definitions",
            Section::Initial => "Initial process",
        }
    }
}

/// Numeric literal or reference to a radius declaration.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Name(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PositionExpr {
    /// `x = vx /\ y = vy /\ z = vz`
    Fixed { x: Value, y: Value, z: Value },
    /// `rand(x,y,z) s.t. (x^2 + y^2 + z^2) = radius`
    Sphere { radius: Value },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionDecl {
    pub name: String,
    pub expr: PositionExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusDecl {
    pub name: String,
    pub value: f64,
}

/// `name: function(arg, ...)`. A `not defined` declaration is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfDecl {
    pub name: String,
    pub function: String,
    pub args: Vec<f64>,
}

/// Brownian movement with a speed guard and an `otherwise` teleport.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionDecl {
    pub name: String,
    /// Right-hand side of `xdot^2 + ydot^2 + zdot^2 < bound`.
    pub guard_bound: Value,
    /// Position the process is moved to when the guard fails.
    pub escape_target: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Send,
    Receive,
}

impl Direction {
    pub fn symbol(self) -> char {
        match self {
            Direction::Send => '!',
            Direction::Receive => '?',
        }
    }

    pub fn complement(self) -> Direction {
        match self {
            Direction::Send => Direction::Receive,
            Direction::Receive => Direction::Send,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// `~`, the empty message.
    Empty,
    Name(String),
}

/// `channel!(payload, radius)` or `channel?(payload, radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub channel: String,
    pub direction: Direction,
    pub payload: Payload,
    pub radius: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Process {
    /// `0` or `nil`.
    Nil,
    Prefix(Action, Box<Process>),
    /// Guarded choice with two or more summands.
    Sum(Vec<Process>),
    /// Parallel composition of two or more processes.
    Par(Vec<Process>),
    /// `(new x) P`
    New(String, Box<Process>),
    /// Reference to a defined process.
    Call(String),
}

impl Process {
    /// Visits every action in the term.
    pub fn for_each_action<'a>(&'a self, f: &mut impl FnMut(&'a Action)) {
        match self {
            Process::Nil | Process::Call(_) => {}
            Process::Prefix(a, p) => {
                f(a);
                p.for_each_action(f);
            }
            Process::Sum(ps) | Process::Par(ps) => ps.iter().for_each(|p| p.for_each_action(f)),
            Process::New(_, p) => p.for_each_action(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessDef {
    pub name: String,
    pub motion: Option<String>,
    pub position: String,
    pub body: Process,
}

/// A validated model. Declaration lists are kept sorted by name, so two
/// documents that differ only in declaration order compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    positions: Vec<PositionDecl>,
    radii: Vec<RadiusDecl>,
    pmf: Option<PmfDecl>,
    motions: Vec<MotionDecl>,
    processes: Vec<ProcessDef>,
    initial: Process,
}

impl ModelDocument {
    pub fn new(
        mut positions: Vec<PositionDecl>,
        mut radii: Vec<RadiusDecl>,
        pmf: Option<PmfDecl>,
        mut motions: Vec<MotionDecl>,
        mut processes: Vec<ProcessDef>,
        initial: Process,
    ) -> Self {
        positions.sort_by(|a, b| a.name.cmp(&b.name));
        radii.sort_by(|a, b| a.name.cmp(&b.name));
        motions.sort_by(|a, b| a.name.cmp(&b.name));
        processes.sort_by(|a, b| a.name.cmp(&b.name));
        ModelDocument { positions, radii, pmf, motions, processes, initial }
    }

    pub fn positions(&self) -> &[PositionDecl] {
        &self.positions
    }
    pub fn radii(&self) -> &[RadiusDecl] {
        &self.radii
    }
    pub fn pmf(&self) -> Option<&PmfDecl> {
        self.pmf.as_ref()
    }
    pub fn motions(&self) -> &[MotionDecl] {
        &self.motions
    }
    pub fn processes(&self) -> &[ProcessDef] {
        &self.processes
    }
    pub fn initial(&self) -> &Process {
        &self.initial
    }

    pub fn position(&self, name: &str) -> Option<&PositionExpr> {
        self.positions.iter().find(|p| p.name == name).map(|p| &p.expr)
    }

    pub fn radius(&self, name: &str) -> Option<f64> {
        self.radii.iter().find(|r| r.name == name).map(|r| r.value)
    }

    pub fn process(&self, name: &str) -> Option<&ProcessDef> {
        self.processes.iter().find(|p| p.name == name)
    }

    /// Numeric value of `v`, looking names up among the radius declarations.
    pub fn resolve(&self, v: &Value) -> Option<f64> {
        match v {
            Value::Number(x) => Some(*x),
            Value::Name(n) => self.radius(n),
        }
    }
}
