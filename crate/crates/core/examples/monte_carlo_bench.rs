//! Monte-Carlo comparison of MM and BB on the reference network, written as
//! summary and curve CSVs.
//!
//! `cargo run --release --example monte_carlo_bench -- [trials] [out_dir]`
//! The full reference run uses 100 trials.

use std::path::PathBuf;

use mmnetloc::bench::{communication_advantage, run_experiment, write_outputs, ExperimentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().map_or(Ok(10), |s| s.parse())?;
    let out = PathBuf::from(args.next().unwrap_or_else(|| "bench_out".into()));

    let spec = ExperimentSpec {
        trials,
        ..ExperimentSpec::reference(1)
    };
    let result = run_experiment(&spec)?;
    println!("sigma   method  MPE      cost/n       iterations");
    for row in result.summary() {
        println!(
            "{:<7} {:<7} {:.5}  {:.5e}  {:.0}",
            row.sigma,
            row.method.name(),
            row.mpe,
            row.final_cost_per_sensor,
            row.iters
        );
    }
    for s in &result.per_sigma {
        println!(
            "sigma {}: {:?}",
            s.sigma,
            communication_advantage(&s.mm.curve, &s.bb.curve, 0.05)
        );
    }
    for path in write_outputs(&result, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
