//! Centralized majorization-minimization: projected gradient on the
//! reformulated quadratic with step `1/L`, where `L = 2δ_max + max|𝒜_i| + 2`
//! upper-bounds `λ_max(M)` and is computable from local degree information.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{cost_original, cost_z, grad_z, project_z, reduce_to_x, ShapeError, StateZ};
use crate::graph::{degree_stats, Measurements, Network};
use crate::metrics::{mpe, RunTrace, StallDetector, TraceEntry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("initial positions have {got} entries, expected {expected}")]
    InitShape { expected: usize, got: usize },
    #[error("max_iters must be at least 1")]
    NoIterations,
    #[error("tol_rel_cost must be finite and nonnegative, got {0}")]
    Tolerance(f64),
    #[error("Lipschitz override {given} is below the safe bound {bound}")]
    UnsafeLipschitz { given: f64, bound: f64 },
    #[error("Lipschitz constant must be positive and finite, got {0}")]
    BadLipschitz(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative `cost_z` decrease under which a run counts as stalled; ten
    /// stalled iterations in a row stop the run.
    pub tol_rel_cost: f64,
    pub lipschitz_override: Option<f64>,
    /// Accept an override below [`lipschitz_bound`]; descent is no longer
    /// guaranteed.
    pub allow_unsafe_lipschitz: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol_rel_cost: 1e-9,
            lipschitz_override: None,
            allow_unsafe_lipschitz: false,
        }
    }
}

impl SolverConfig {
    /// Checks the config against `net` and returns the step constant to use.
    pub fn resolve_lipschitz(&self, net: &Network) -> Result<f64, SolveError> {
        if self.max_iters == 0 {
            return Err(SolveError::NoIterations);
        }
        if !(self.tol_rel_cost.is_finite() && self.tol_rel_cost >= 0.0) {
            return Err(SolveError::Tolerance(self.tol_rel_cost));
        }
        let bound = lipschitz_bound(net);
        match self.lipschitz_override {
            None => Ok(bound),
            Some(l) if !(l.is_finite() && l > 0.0) => Err(SolveError::BadLipschitz(l)),
            Some(l) if l < bound && !self.allow_unsafe_lipschitz => {
                Err(SolveError::UnsafeLipschitz { given: l, bound })
            }
            Some(l) => Ok(l),
        }
    }
}

/// `2δ_max + max_i |𝒜_i| + 2`.
pub fn lipschitz_bound(net: &Network) -> f64 {
    let (delta_max, anchors_max) = degree_stats(net);
    (2 * delta_max + anchors_max + 2) as f64
}

/// One projected-gradient step `P_𝒵(z − (Mz − b)/L)`.
///
/// Blockwise this is
/// `x⁺ = (I − B/L)x + Aᵀy/L + Eᵀ(w + α)/L`,
/// `y⁺ = P_𝒴((L−1)/L·y + Ax/L)`,
/// `w⁺ = P_𝒲((L−1)/L·w + (Ex − α)/L)`; `x` is unconstrained.
pub fn mm_step(
    net: &Network,
    meas: &Measurements,
    z: &StateZ,
    lipschitz: f64,
) -> Result<StateZ, SolveError> {
    z.check_shape(net)?;
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(SolveError::BadLipschitz(lipschitz));
    }
    Ok(step_unchecked(net, meas, z, lipschitz))
}

fn step_unchecked(net: &Network, meas: &Measurements, z: &StateZ, lipschitz: f64) -> StateZ {
    let g = grad_z(net, z);
    let inv = 1.0 / lipschitz;
    let descend = |v: &[f64], gv: &[f64]| -> Vec<f64> {
        v.iter().zip(gv).map(|(a, b)| a - inv * b).collect()
    };
    let mut next = StateZ {
        x: descend(&z.x, &g.x),
        y: descend(&z.y, &g.y),
        w: descend(&z.w, &g.w),
    };
    project_z(net, meas, &mut next);
    next
}

fn trace_entry(
    net: &Network,
    meas: &Measurements,
    z: &StateZ,
    iter: usize,
    comm_scalars: u64,
) -> TraceEntry {
    let n = net.n();
    TraceEntry {
        iter,
        cost_per_sensor: cost_original(net, meas, &z.x) / n as f64,
        cost_z: cost_z(net, z),
        comm_scalars,
        mpe: net
            .true_positions()
            .map(|truth| mpe(std::slice::from_ref(&z.x), truth, net.p())),
    }
}

/// Scalars one MM iteration puts on the air: every sensor broadcasts `x_i`.
pub fn comm_per_iteration(net: &Network) -> u64 {
    (net.p() * net.n()) as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub z: StateZ,
    pub trace: RunTrace,
    pub lipschitz: f64,
}

/// Runs MM from `x0`: `z⁰ = reduce_to_x(x0)`, then [`mm_step`] until the
/// stall rule or `max_iters` fires.
pub fn solve(
    net: &Network,
    meas: &Measurements,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<Solution, SolveError> {
    let expected = net.n() * net.p();
    if x0.len() != expected {
        return Err(SolveError::InitShape {
            expected,
            got: x0.len(),
        });
    }
    let lipschitz = cfg.resolve_lipschitz(net)?;
    let per_iter = comm_per_iteration(net);
    let mut z = reduce_to_x(net, meas, x0);
    let mut trace = RunTrace::default();
    trace.push(trace_entry(net, meas, &z, 0, 0));
    let mut stall = StallDetector::new(cfg.tol_rel_cost);
    for t in 1..=cfg.max_iters {
        z = step_unchecked(net, meas, &z, lipschitz);
        let prev = trace.last().map_or(f64::INFINITY, |e| e.cost_z);
        let entry = trace_entry(net, meas, &z, t, t as u64 * per_iter);
        trace.push(entry);
        if stall.update(prev, entry.cost_z) {
            break;
        }
    }
    Ok(Solution {
        x: z.x.clone(),
        z,
        trace,
        lipschitz,
    })
}
