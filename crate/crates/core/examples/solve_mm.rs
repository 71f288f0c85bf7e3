//! Localize one network with the centralized MM solver and print the
//! progress every few hundred iterations.

use mmnetloc::graph::{corner_anchors, generate_measurements, generate_with_target_degree};
use mmnetloc::mm::{self, SolverConfig};
use mmnetloc::Initializer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (net, _) = generate_with_target_degree(50, 2, 6.0, &corner_anchors(2), 0.65, 11)?;
    let meas = generate_measurements(&net, 0.01, 12)?;
    let x0 = Initializer::PerturbedTruth { std: 0.1 }.draw(&net, 13)?;

    let cfg = SolverConfig {
        max_iters: 5000,
        ..SolverConfig::default()
    };
    let sol = mm::solve(&net, &meas, &x0, &cfg)?;
    println!("L = {}", sol.lipschitz);
    for e in sol.trace.entries.iter().step_by(500) {
        println!(
            "iter {:>5}  cost/n {:.6e}  MPE {:.5}",
            e.iter,
            e.cost_per_sensor,
            e.mpe.unwrap_or(f64::NAN)
        );
    }
    let last = sol.trace.last().unwrap();
    println!(
        "stopped after {} iterations: cost/n {:.6e}, MPE {:.5}, monotone: {}",
        last.iter,
        last.cost_per_sensor,
        last.mpe.unwrap_or(f64::NAN),
        sol.trace.is_monotone(1e-12)
    );
    Ok(())
}
