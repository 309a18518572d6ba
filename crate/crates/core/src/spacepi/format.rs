use std::fmt::Write;

use super::{Action, ModelDocument, Payload, PositionExpr, Process, Section, Value};

fn number(x: f64) -> String {
    // Display gives the shortest text that parses back to the same value.
    format!("{x}")
}

fn value(v: &Value) -> String {
    match v {
        Value::Number(x) => number(*x),
        Value::Name(n) => n.clone(),
    }
}

fn action(a: &Action) -> String {
    let payload = match &a.payload {
        Payload::Empty => "~",
        Payload::Name(n) => n.as_str(),
    };
    format!("{}{}({}, {})", a.channel, a.direction.symbol(), payload, value(&a.radius))
}

fn precedence(p: &Process) -> u8 {
    match p {
        Process::Par(_) => 0,
        Process::Sum(_) => 1,
        _ => 2,
    }
}

/// Writes `p`, parenthesized when it binds looser than `min`.
fn process(out: &mut String, p: &Process, min: u8) {
    let paren = precedence(p) < min;
    if paren {
        out.push('(');
    }
    match p {
        Process::Nil => out.push('0'),
        Process::Call(n) => out.push_str(n),
        Process::Prefix(a, cont) => {
            out.push_str(&action(a));
            out.push('.');
            process(out, cont, 2);
        }
        Process::New(n, body) => {
            let _ = write!(out, "(new {n}) ");
            process(out, body, 2);
        }
        Process::Sum(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                process(out, item, 2);
            }
        }
        Process::Par(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                process(out, item, 1);
            }
        }
    }
    if paren {
        out.push(')');
    }
}

/// Prints `doc` in canonical form: sections in standard order, declarations
/// sorted by name, every process position written explicitly.
pub fn format_model(doc: &ModelDocument) -> String {
    let mut out = String::new();
    for (i, section) in Section::ALL.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(section.header());
        out.push('\n');
        match section {
            Section::Positions => {
                for p in doc.positions() {
                    let _ = match &p.expr {
                        PositionExpr::Fixed { x, y, z } => writeln!(
                            out,
                            "{} := x = {} /\\ y = {} /\\ z = {}",
                            p.name,
                            value(x),
                            value(y),
                            value(z)
                        ),
                        PositionExpr::Sphere { radius } => {
                            writeln!(out, "{} := rand(x,y,z) s.t. (x^2 + y^2 + z^2) = {}", p.name, value(radius))
                        }
                    };
                }
            }
            Section::Radii => {
                for r in doc.radii() {
                    let _ = writeln!(out, "{} = {}", r.name, number(r.value));
                }
            }
            Section::Potential => {
                if let Some(p) = doc.pmf() {
                    let args: Vec<String> = p.args.iter().map(|&a| number(a)).collect();
                    let _ = writeln!(out, "{}: {}({})", p.name, p.function, args.join(", "));
                }
            }
            Section::Motions => {
                for m in doc.motions() {
                    let _ = write!(out, "{}(): xdot^2 + ydot^2 + zdot^2 < {}", m.name, value(&m.guard_bound));
                    if let Some(t) = &m.escape_target {
                        let _ = write!(out, ", x = {t}(x) /\\ y = {t}(y) /\\ z = {t}(z) otherwise");
                    }
                    out.push('\n');
                }
            }
            Section::Processes => {
                for d in doc.processes() {
                    out.push_str(&d.name);
                    if let Some(m) = &d.motion {
                        let _ = write!(out, "[{m}]");
                    }
                    let _ = write!(out, "^{} = ", d.position);
                    process(&mut out, &d.body, 0);
                    out.push('\n');
                }
            }
            Section::Initial => {
                process(&mut out, doc.initial(), 0);
                out.push('\n');
            }
        }
    }
    out
}
