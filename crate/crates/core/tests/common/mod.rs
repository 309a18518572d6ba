#![allow(dead_code)]

use nambd::geometry::RngKind;
use nambd::spacepi::{
    Action, Direction, ModelDocument, MotionDecl, Payload, PmfDecl, PositionDecl, PositionExpr, Process,
    ProcessDef, RadiusDecl, Value,
};
use nambd::stochastics::RandomStream;

/// Small random integer in `0..n`.
fn pick(s: &mut RandomStream, n: usize) -> usize {
    ((s.next_uniform() * n as f64) as usize).min(n - 1)
}

fn coin(s: &mut RandomStream, p: f64) -> bool {
    s.next_uniform() < p
}

fn number(s: &mut RandomStream) -> f64 {
    match pick(s, 5) {
        0 => pick(s, 200) as f64,
        1 => s.next_uniform() * 1000.0,
        2 => -(s.next_uniform() * 50.0),
        3 => s.next_uniform() * 1e-6,
        _ => (s.next_uniform() * 1e4).round() / 100.0,
    }
}

fn value(s: &mut RandomStream, radii: &[RadiusDecl]) -> Value {
    if coin(s, 0.5) {
        Value::Name(radii[pick(s, radii.len())].name.clone())
    } else {
        Value::Number(number(s))
    }
}

struct Ctx<'a> {
    radii: &'a [RadiusDecl],
    processes: &'a [String],
    actions: Vec<Action>,
}

fn action(s: &mut RandomStream, ctx: &mut Ctx) -> Action {
    let a = Action {
        channel: format!("ch{}", pick(s, 3)),
        direction: if coin(s, 0.5) { Direction::Send } else { Direction::Receive },
        payload: if coin(s, 0.6) { Payload::Empty } else { Payload::Name(format!("m{}", pick(s, 3))) },
        radius: value(s, ctx.radii),
    };
    ctx.actions.push(a.clone());
    a
}

fn process(s: &mut RandomStream, ctx: &mut Ctx, depth: u32) -> Process {
    let leaf = depth == 0;
    match if leaf { pick(s, 3) } else { pick(s, 7) } {
        0 => Process::Nil,
        1 => Process::Call(ctx.processes[pick(s, ctx.processes.len())].clone()),
        2 => {
            let a = action(s, ctx);
            Process::Prefix(a, Box::new(Process::Nil))
        }
        3 => {
            let a = action(s, ctx);
            Process::Prefix(a, Box::new(process(s, ctx, depth - 1)))
        }
        4 => Process::Sum((0..2 + pick(s, 2)).map(|_| process(s, ctx, depth - 1)).collect()),
        5 => Process::Par((0..2 + pick(s, 2)).map(|_| process(s, ctx, depth - 1)).collect()),
        _ => Process::New(format!("n{}", pick(s, 3)), Box::new(process(s, ctx, depth - 1))),
    }
}

/// A valid document: every referenced name is declared and every action
/// has a complement (a final `Sink` process supplies the missing ones).
pub fn random_document(s: &mut RandomStream) -> ModelDocument {
    let radii: Vec<RadiusDecl> = (0..1 + pick(s, 4))
        .map(|i| RadiusDecl { name: format!("r_{i}"), value: number(s) })
        .collect();
    let positions: Vec<PositionDecl> = (0..1 + pick(s, 4))
        .map(|i| PositionDecl {
            name: format!("pos_{i}"),
            expr: if coin(s, 0.5) {
                PositionExpr::Sphere { radius: value(s, &radii) }
            } else {
                PositionExpr::Fixed { x: value(s, &radii), y: value(s, &radii), z: value(s, &radii) }
            },
        })
        .collect();
    let pmf = coin(s, 0.5).then(|| PmfDecl {
        name: "f_pmf".into(),
        function: ["debye_huckel", "constant", "custom_fn"][pick(s, 3)].into(),
        args: (0..pick(s, 4)).map(|_| number(s)).collect(),
    });
    let motions: Vec<MotionDecl> = (0..pick(s, 3))
        .map(|i| MotionDecl {
            name: format!("move{i}"),
            guard_bound: value(s, &radii),
            escape_target: coin(s, 0.7).then(|| positions[pick(s, positions.len())].name.clone()),
        })
        .collect();

    let count = 1 + pick(s, 4);
    let mut names: Vec<String> = (0..count).map(|i| format!("P{i}")).collect();
    names.push("Sink".into());
    let mut ctx = Ctx { radii: &radii, processes: &names, actions: Vec::new() };
    let mut defs: Vec<ProcessDef> = (0..count)
        .map(|i| ProcessDef {
            name: names[i].clone(),
            motion: (!motions.is_empty() && coin(s, 0.5)).then(|| motions[pick(s, motions.len())].name.clone()),
            position: positions[pick(s, positions.len())].name.clone(),
            body: process(s, &mut ctx, 3),
        })
        .collect();
    let mut complements: Vec<Process> = ctx
        .actions
        .iter()
        .map(|a| {
            let mut c = a.clone();
            c.direction = a.direction.complement();
            Process::Prefix(c, Box::new(Process::Nil))
        })
        .collect();
    let sink_body = match complements.len() {
        0 => Process::Nil,
        1 => complements.pop().unwrap(),
        _ => Process::Sum(complements),
    };
    defs.push(ProcessDef {
        name: "Sink".into(),
        motion: None,
        position: positions[0].name.clone(),
        body: sink_body,
    });
    let initial = if coin(s, 0.3) {
        Process::Call(names[pick(s, names.len())].clone())
    } else {
        Process::Par(names.iter().map(|n| Process::Call(n.clone())).collect())
    };
    ModelDocument::new(positions, radii, pmf, motions, defs, initial)
}

pub fn document_for_seed(seed: u64) -> ModelDocument {
    random_document(&mut RandomStream::new(RngKind::MersenneTwister, seed))
}
