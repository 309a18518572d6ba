//! Reaction fraction against D for the three engine variants.
//!
//! ```text
//! cargo run --release --example detector_sweep -- [replications]
//! ```

use nambd::dynamics::TrajectoryEngine;
use nambd::stochastics::derive_replication_stream;
use nambd::{DetectorKind, EndState, NamGeometry, RngKind, SimulatorConfig, StepsizePolicy};
use rayon::prelude::*;

fn main() {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5_000);
    let engines = [
        ("time/fixed", DetectorKind::TimeStepped, StepsizePolicy::Fixed(0.1)),
        (
            "time/adaptive",
            DetectorKind::TimeStepped,
            StepsizePolicy::Adaptive { max: 0.1, min: 0.01, safety_fraction: 0.1 },
        ),
        ("event/fixed", DetectorKind::EventTriggered, StepsizePolicy::Fixed(0.1)),
    ];
    println!("{:>6} {:>14} {:>14} {:>14}", "D", engines[0].0, engines[1].0, engines[2].0);
    for d in [4.0, 16.0, 64.0, 256.0, 512.0] {
        let g = NamGeometry::new(10.0, 50.0, 100.0, d).expect("geometry");
        let cols: Vec<String> = engines
            .iter()
            .map(|&(_, detector, stepsize)| {
                let cfg = SimulatorConfig::new(RngKind::MersenneTwister, detector, stepsize);
                let engine = TrajectoryEngine::new(g, cfg).expect("engine");
                let reacted: u64 = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut s = derive_replication_stream(1, i, RngKind::MersenneTwister);
                        (engine.run(&mut s).expect("trajectory").end_state == EndState::Reacted) as u64
                    })
                    .sum();
                let beta = reacted as f64 / n as f64;
                format!("{beta:.4}±{:.4}", (beta * (1.0 - beta) / n as f64).sqrt())
            })
            .collect();
        println!("{d:>6} {:>14} {:>14} {:>14}", cols[0], cols[1], cols[2]);
    }
    println!("analytic: {:.4}", 1.0 / 9.0);
}
