//! Barzilai-Borwein baseline: per-sensor gradient steps whose step size comes
//! from `T` rounds of average consensus. Compares consensus depths against
//! exact network-wide sums.

use mmnetloc::baseline_bb::{bb_solve, comm_per_iteration, BBConfig, ConsensusMode};
use mmnetloc::graph::{corner_anchors, generate_measurements, generate_with_target_degree};
use mmnetloc::Initializer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (net, _) = generate_with_target_degree(50, 2, 6.0, &corner_anchors(2), 0.65, 21)?;
    let meas = generate_measurements(&net, 0.01, 22)?;
    let x0 = Initializer::PerturbedTruth { std: 0.1 }.draw(&net, 23)?;

    let runs = [
        (
            "T = 5",
            BBConfig {
                rounds: 5,
                ..BBConfig::default()
            },
        ),
        ("T = 20", BBConfig::default()),
        (
            "exact sums",
            BBConfig {
                consensus: ConsensusMode::Exact,
                ..BBConfig::default()
            },
        ),
    ];
    for (label, cfg) in runs {
        let cfg = BBConfig {
            max_iters: 300,
            ..cfg
        };
        let out = bb_solve(&net, &meas, &x0, &cfg)?;
        let last = out.trace.last().unwrap();
        println!(
            "{label:>10}: cost/n {:.6e}  MPE {:.5}  fallbacks {}  scalars/iter {}",
            last.cost_per_sensor,
            last.mpe.unwrap_or(f64::NAN),
            out.fallback_steps,
            comm_per_iteration(&net, cfg.rounds)
        );
    }
    Ok(())
}
