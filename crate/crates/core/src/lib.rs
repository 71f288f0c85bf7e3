//! Distributed majorization-minimization for maximum-likelihood sensor
//! network localization.
//!
//! The range-based ML cost is nonconvex and has no Lipschitz gradient. Lifting
//! every edge difference `x_i − x_j` and anchor offset `x_i − a_k` to its own
//! variable constrained to a sphere of the measured radius turns it into a
//! quadratic over a product of spheres. Its gradient is Lipschitz with a
//! constant that each sensor can bound from degree information alone, so a
//! projected-gradient step with step `1/L` is a majorization-minimization step:
//! the cost never increases, there is nothing to tune, and every update only
//! needs neighbor positions.
//!
//! - [`graph`]: network generation, ranges, incidence bookkeeping, JSON files.
//! - [`cost`]: the original cost and its quadratic reformulation.
//! - [`projections`]: sphere projection.
//! - [`mm`]: centralized reference solver.
//! - [`node_sim`]: per-sensor message-passing simulation of the same recursion.
//! - [`baseline_bb`]: Barzilai-Borwein gradient descent with consensus steps.
//! - [`bench`]: Monte-Carlo experiment harness.
//! - [`cli`]: the `mmnetloc` command line.

pub mod baseline_bb;
pub mod bench;
pub mod cli;
pub mod cost;
pub mod graph;
pub mod init;
pub mod metrics;
pub mod mm;
pub mod node_sim;
pub mod projections;
pub mod seed;
mod vecops;

pub use cost::StateZ;
pub use graph::{Measurements, Network};
pub use init::Initializer;
pub use metrics::{mpe, RunTrace, TraceEntry};
pub use mm::SolverConfig;
