//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset.

#[path = "common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::time::Instant;

use nambd::dynamics::{brownian_step, ParticleState, TrajectoryEngine};
use nambd::experiment::{run_experiment, run_experiment_with_threads, summarize, ExperimentSpec, RunOptions};
use nambd::geometry::{DetectorKind, EndState, NamGeometry, RngKind, SimulatorConfig, StepsizePolicy, Vec3};
use nambd::io::to_json;
use nambd::rates::{
    analytic_beta, association_rate, beta_infinity, hitting_probability, rate_with_potential, required_replications,
    smoluchowski_rate, PotentialOfMeanForce, DEFAULT_QUAD_TOL,
};
use nambd::spacepi::{format_model, lower_to_nam, parse_model};
use nambd::stochastics::{derive_replication_stream, RandomStream};
use rayon::prelude::*;

const NAM_MODEL: &str = include_str!("../models/nam.spi");
const BETA_REFERENCE: f64 = 0.111;

struct Estimate {
    beta: f64,
    se: f64,
}

impl Estimate {
    fn combined_se(&self, other: &Estimate) -> f64 {
        (self.se * self.se + other.se * other.se).sqrt()
    }
}

fn reference(d: f64) -> NamGeometry {
    NamGeometry::new(10.0, 50.0, 100.0, d).unwrap()
}

fn config(rng: RngKind, detector: DetectorKind, stepsize: StepsizePolicy) -> SimulatorConfig {
    SimulatorConfig::new(rng, detector, stepsize)
}

fn event(rng: RngKind) -> SimulatorConfig {
    config(rng, DetectorKind::EventTriggered, StepsizePolicy::Fixed(0.1))
}

fn estimate(engine: &TrajectoryEngine, seed: u64, n: u64, start: Option<Vec3>) -> Estimate {
    let kind = engine.config().rng;
    let reacted: u64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = derive_replication_stream(seed, i, kind);
            let r = match start {
                Some(p) => engine.run_from(&mut s, p),
                None => engine.run(&mut s),
            }
            .expect("trajectory");
            (r.end_state == EndState::Reacted) as u64
        })
        .sum();
    let beta = reacted as f64 / n as f64;
    Estimate { beta, se: (beta * (1.0 - beta) / (n - 1) as f64).sqrt() }
}

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn beta_reproduction() -> Outcome {
    let n = required_replications(BETA_REFERENCE, 0.05, 0.99) * 4;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, d) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let engine = TrajectoryEngine::new(reference(d), event(RngKind::MersenneTwister)).unwrap();
        let e = estimate(&engine, 1000 + k as u64, n, None);
        ok &= (e.beta - BETA_REFERENCE).abs() <= 0.02;
        parts.push(format!("D={d}: {:.4}", e.beta));
    }
    (ok, format!("n={n}, {}", parts.join(", ")))
}

fn detector_bias() -> Outcome {
    let ds = [32.0, 64.0, 128.0, 256.0, 512.0];
    let n = 20_000;
    let fixed = config(RngKind::MersenneTwister, DetectorKind::TimeStepped, StepsizePolicy::Fixed(0.1));
    let adaptive_policy = StepsizePolicy::Adaptive { max: 0.1, min: 0.01, safety_fraction: 0.1 };
    let adaptive = config(RngKind::MersenneTwister, DetectorKind::TimeStepped, adaptive_policy);
    let ev = event(RngKind::MersenneTwister);
    let sweep = |cfg: SimulatorConfig, seed: u64| -> Vec<Estimate> {
        ds.iter()
            .enumerate()
            .map(|(k, &d)| estimate(&TrajectoryEngine::new(reference(d), cfg).unwrap(), seed + k as u64, n, None))
            .collect()
    };
    let f = sweep(fixed, 2000);
    let e = sweep(ev, 3000);
    let last = ds.len() - 1;
    let a = estimate(&TrajectoryEngine::new(reference(ds[last]), adaptive).unwrap(), 4000, n, None);

    let monotone = f.windows(2).all(|w| w[1].beta <= w[0].beta + 2.0 * w[0].combined_se(&w[1]));
    let falls = f[0].beta - f[last].beta > 3.0 * f[0].combined_se(&f[last]);
    let flat = e.iter().all(|x| e.iter().all(|y| (x.beta - y.beta).abs() <= 3.0 * x.combined_se(y)));
    let between = a.beta - f[last].beta > 2.0 * a.combined_se(&f[last])
        && e[last].beta - a.beta > 2.0 * a.combined_se(&e[last]);
    let fmt = |v: &[Estimate]| v.iter().map(|x| format!("{:.4}", x.beta)).collect::<Vec<_>>().join(" ");
    (
        monotone && falls && flat && between,
        format!(
            "D={ds:?}; fixed [{}] event [{}] adaptive@{}={:.4}; monotone={monotone} flat={flat} between={between}",
            fmt(&f),
            fmt(&e),
            ds[last],
            a.beta
        ),
    )
}

fn rng_insensitivity() -> Outcome {
    let n = 10_000;
    let g = reference(1.0);
    let mt = estimate(&TrajectoryEngine::new(g, event(RngKind::MersenneTwister)).unwrap(), 5000, n, None);
    let lcg = estimate(&TrajectoryEngine::new(g, event(RngKind::BaselineLcg)).unwrap(), 5000, n, None);
    let diff = (mt.beta - lcg.beta).abs();
    let bound = 3.0 * mt.combined_se(&lcg);
    (diff < bound, format!("MT {:.4}, LCG {:.4}, |diff| {diff:.4} < {bound:.4}", mt.beta, lcg.beta))
}

fn identity_chain() -> Outcome {
    let mut s = RandomStream::new(RngKind::MersenneTwister, 6000);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = 0.01 + 1000.0 * s.next_uniform();
        let b = a * (1.001 + 50.0 * s.next_uniform());
        let q = b * (1.001 + 50.0 * s.next_uniform());
        let d = 1e-3 + 1e3 * s.next_uniform();
        let beta = analytic_beta(a, b, q).unwrap();
        let kb = smoluchowski_rate(d, b).unwrap();
        let kq = smoluchowski_rate(d, q).unwrap();
        let k = association_rate(kb, beta_infinity(beta, kb, kq).unwrap()).unwrap();
        worst = worst.max((k / (4.0 * PI * d * a) - 1.0).abs());
    }
    (worst <= 1e-12, format!("1000 cases, max relative error {worst:.2e}"))
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        sum += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn potential_reduction() -> Outcome {
    let mut s = RandomStream::new(RngKind::MersenneTwister, 7000);
    let mut zero_worst = 0.0f64;
    for _ in 0..100 {
        let d = 1e-3 + 1e3 * s.next_uniform();
        let b = 1e-2 + 1e4 * s.next_uniform();
        let k = rate_with_potential(d, b, &PotentialOfMeanForce::Zero, DEFAULT_QUAD_TOL).unwrap();
        zero_worst = zero_worst.max((k / smoluchowski_rate(d, b).unwrap() - 1.0).abs());
    }
    let mut dh_worst = 0.0f64;
    for (q, kappa, d, b) in [(-20.0, 0.1, 1.0, 50.0), (20.0, 0.1, 1.0, 50.0), (-5.0, 0.0, 4.0, 10.0), (8.0, 0.02, 0.5, 30.0)] {
        let pmf = PotentialOfMeanForce::DebyeHuckel { charge_product: q, kappa };
        let got = rate_with_potential(d, b, &pmf, DEFAULT_QUAD_TOL).unwrap();
        let tail = simpson(
            |t| {
                let r = b * f64::exp(t);
                (q * (-kappa * r).exp() / r).exp_m1() / r
            },
            0.0,
            45.0,
            400_000,
        );
        let want = 4.0 * PI * d / (1.0 / b + tail);
        dh_worst = dh_worst.max((got / want - 1.0).abs());
    }
    (
        zero_worst <= 1e-8 && dh_worst <= 1e-6,
        format!("zero potential max {zero_worst:.2e}; Debye-Huckel vs Simpson max {dh_worst:.2e}"),
    )
}

fn hitting_law() -> Outcome {
    let engine = TrajectoryEngine::new(reference(4.0), event(RngKind::MersenneTwister)).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, r0) in [15.0, 30.0, 50.0, 80.0].into_iter().enumerate() {
        let want = hitting_probability(10.0, r0, 100.0).unwrap();
        let e = estimate(&engine, 8000 + k as u64, 20_000, Some(Vec3::new(0.0, 0.0, r0)));
        let z = (e.beta - want) / e.se;
        ok &= z.abs() < 3.0;
        parts.push(format!("r0={r0}: {:.4} vs {want:.4} ({z:+.2} se)", e.beta));
    }
    (ok, parts.join(", "))
}

fn stepper_statistics() -> Outcome {
    let (d, dt) = (1.0, 0.1);
    let state = ParticleState::new(Vec3::new(50.0, 0.0, 0.0), 0.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [RngKind::MersenneTwister, RngKind::BaselineLcg] {
        let mut s = RandomStream::new(kind, 9000);
        let n = 1_000_000;
        let mut sq = [0.0f64; 3];
        for _ in 0..n {
            let p = brownian_step(&state, dt, d, &mut s).displacement;
            sq[0] += p.x * p.x;
            sq[1] += p.y * p.y;
            sq[2] += p.z * p.z;
        }
        let var = sq.map(|v| v / n as f64 / (2.0 * d * dt) - 1.0);
        let msd = sq.iter().sum::<f64>() / n as f64 / (6.0 * d * dt) - 1.0;
        ok &= var.iter().all(|v| v.abs() <= 0.005) && msd.abs() <= 0.02;
        let worst = var.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        parts.push(format!("{kind:?}: variance off by {:.3}%, MSD by {:.3}%", 100.0 * worst, 100.0 * msd.abs()));
    }
    (ok, parts.join("; "))
}

fn coverage() -> Outcome {
    let seeds = 200;
    let hits = (0..seeds)
        .filter(|&seed| {
            let mut spec = ExperimentSpec::new(
                vec![reference(4.0).into()],
                vec![event(RngKind::MersenneTwister)],
                0.05,
                0.99,
                10_000 + seed,
            );
            spec.reference = nambd::experiment::Reference::Fixed(BETA_REFERENCE);
            let out = run_experiment(&spec, RunOptions::default()).unwrap();
            out.verdicts[0].valid
        })
        .count();
    let frac = hits as f64 / seeds as f64;
    (frac >= 0.98, format!("{hits}/{seeds} experiments within 0.05"))
}

fn parser_fidelity() -> Outcome {
    let doc = match parse_model(NAM_MODEL) {
        Ok(d) => d,
        Err(e) => return (false, format!("bundled model: {e}")),
    };
    let lowered = lower_to_nam(&doc, 1.0).map(|l| l.geometry);
    let lowers = lowered.as_ref().ok() == Some(&reference(1.0));
    let model_round = parse_model(&format_model(&doc)).as_ref() == Ok(&doc);
    let generated = (0..1000u64)
        .filter(|&seed| {
            let d = common::document_for_seed(seed);
            let text = format_model(&d);
            parse_model(&text).as_ref() == Ok(&d)
        })
        .count();
    (
        lowers && model_round && generated == 1000,
        format!("model lowers={lowers}, round trip={model_round}, generated {generated}/1000"),
    )
}

fn determinism() -> Outcome {
    let spec = ExperimentSpec::new(
        vec![reference(16.0).into(), reference(64.0).into()],
        vec![event(RngKind::MersenneTwister), config(RngKind::BaselineLcg, DetectorKind::TimeStepped, StepsizePolicy::Fixed(0.1))],
        0.03,
        0.99,
        12_345,
    );
    let run = |threads| {
        let out = run_experiment_with_threads(&spec, RunOptions::default(), threads).unwrap();
        to_json(&summarize(&out.verdicts, spec.tolerance, spec.confidence).unwrap())
    };
    let one = run(1);
    let many = run(4);
    (one == many, format!("{} byte report, 1 vs 4 threads identical={}", one.len(), one == many))
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 10] = [
        ("beta reproduction", beta_reproduction),
        ("detector-bias trend", detector_bias),
        ("RNG insensitivity", rng_insensitivity),
        ("analytic identity chain", identity_chain),
        ("potential reduction", potential_reduction),
        ("hitting-probability law", hitting_law),
        ("stepper statistics", stepper_statistics),
        ("replication-count coverage", coverage),
        ("parser fidelity", parser_fidelity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let clock = Instant::now();
        let (pass, detail) = check();
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {number:>2} {name}: {verdict} ({detail}) [{:.1}s]", clock.elapsed().as_secs_f64());
        failed += (!pass) as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
