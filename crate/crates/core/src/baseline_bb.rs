//! Comparison method: parallel gradient descent on the original cost with a
//! Barzilai-Borwein step whose two inner products are estimated by `T`
//! rounds of Metropolis-weighted average consensus.
//!
//! No line search or other globalization is applied, so the cost is not
//! monotone. One iteration costs `n(2T + p)` scalars: two consensus scalars
//! per sensor per round plus the broadcast of `x_i`.

use serde::{Deserialize, Serialize};

use crate::cost::cost_original;
use crate::graph::{Measurements, Network};
use crate::metrics::{mpe, RunTrace, TraceEntry};
use crate::mm::{lipschitz_bound, SolveError};
use crate::vecops::{block, dot};

/// Ratio of the degenerate-denominator guard: `⟨s, q⟩ ≤ 1e-12·‖s‖²`.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BbVariant {
    /// `⟨s, s⟩ / ⟨s, q⟩`.
    #[default]
    Long,
    /// `⟨s, q⟩ / ⟨q, q⟩`.
    Short,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsensusMode {
    /// `T` rounds of Metropolis averaging; each sensor uses its own estimate.
    #[default]
    Metropolis,
    /// Exact network-wide sums (the `T → ∞` limit); accounting still charges
    /// `T` rounds.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BBConfig {
    /// Consensus rounds per iteration.
    pub rounds: usize,
    pub max_iters: usize,
    /// Step used on the first iteration and whenever the BB ratio is
    /// unusable. `None` means `1 / lipschitz_bound(net)`.
    pub fallback_step: Option<f64>,
    /// Edges or anchor links shorter than this contribute no gradient.
    pub epsilon_guard: f64,
    pub variant: BbVariant,
    pub consensus: ConsensusMode,
}

impl Default for BBConfig {
    fn default() -> Self {
        Self {
            rounds: 20,
            max_iters: 100,
            fallback_step: None,
            epsilon_guard: 1e-12,
            variant: BbVariant::Long,
            consensus: ConsensusMode::Metropolis,
        }
    }
}

/// Gradient of the original cost. The term of an edge `(i, j)` adds
/// `(1 − d_ij/‖x_i − x_j‖)(x_i − x_j)` to `∇_{x_i}` and subtracts it from
/// `∇_{x_j}`; anchor terms add `(1 − r_ik/‖x_i − a_k‖)(x_i − a_k)`.
pub fn grad_original(
    net: &Network,
    meas: &Measurements,
    x: &[f64],
    epsilon_guard: f64,
) -> Vec<f64> {
    let p = net.p();
    assert_eq!(x.len(), net.n() * p, "position vector length");
    let mut g = vec![0.0; x.len()];
    let mut diff = [0.0; 3];
    let diff = &mut diff[..p];
    for (&(i, j), &d) in net.edges().iter().zip(&meas.d) {
        for k in 0..p {
            diff[k] = x[i * p + k] - x[j * p + k];
        }
        let len = dot(diff, diff).sqrt();
        if len < epsilon_guard {
            continue;
        }
        let coef = 1.0 - d / len;
        for k in 0..p {
            g[i * p + k] += coef * diff[k];
            g[j * p + k] -= coef * diff[k];
        }
    }
    for ((i, a), &r) in net.links().map(|(i, k)| (i, net.anchor(k))).zip(&meas.r) {
        for k in 0..p {
            diff[k] = x[i * p + k] - a[k];
        }
        let len = dot(diff, diff).sqrt();
        if len < epsilon_guard {
            continue;
        }
        let coef = 1.0 - r / len;
        for k in 0..p {
            g[i * p + k] += coef * diff[k];
        }
    }
    g
}

/// Metropolis weight `1 / (1 + max(δ_i, δ_j))` of every incident edge.
fn metropolis_weights(net: &Network) -> Vec<Vec<(usize, f64)>> {
    (0..net.n())
        .map(|i| {
            net.incident(i)
                .iter()
                .map(|inc| {
                    let j = inc.neighbor;
                    (j, 1.0 / (1.0 + net.degree(i).max(net.degree(j)) as f64))
                })
                .collect()
        })
        .collect()
}

/// `rounds` synchronous averaging steps on pairs of local values.
pub fn metropolis_consensus(net: &Network, values: &[[f64; 2]], rounds: usize) -> Vec<[f64; 2]> {
    let weights = metropolis_weights(net);
    let mut cur = values.to_vec();
    for _ in 0..rounds {
        let prev = cur.clone();
        for (i, out) in cur.iter_mut().enumerate() {
            let mut acc = prev[i];
            for &(j, wij) in &weights[i] {
                acc[0] += wij * (prev[j][0] - prev[i][0]);
                acc[1] += wij * (prev[j][1] - prev[i][1]);
            }
            *out = acc;
        }
    }
    cur
}

/// Scalars one BB iteration costs: `n(2T + p)`.
pub fn comm_per_iteration(net: &Network, rounds: usize) -> u64 {
    (net.n() * (2 * rounds + net.p())) as u64
}

#[derive(Debug, Clone)]
pub struct BbOutput {
    pub x: Vec<f64>,
    pub trace: RunTrace,
    /// Node-iterations that fell back to `fallback_step`, excluding the
    /// first iteration.
    pub fallback_steps: usize,
}

fn entry(net: &Network, meas: &Measurements, x: &[f64], iter: usize, comm: u64) -> TraceEntry {
    let cost = cost_original(net, meas, x);
    TraceEntry {
        iter,
        cost_per_sensor: cost / net.n() as f64,
        cost_z: cost,
        comm_scalars: comm,
        mpe: net
            .true_positions()
            .map(|truth| mpe(&[x.to_vec()], truth, net.p())),
    }
}

/// Runs `max_iters` BB iterations from `x0`.
pub fn bb_solve(
    net: &Network,
    meas: &Measurements,
    x0: &[f64],
    cfg: &BBConfig,
) -> Result<BbOutput, SolveError> {
    let n = net.n();
    let p = net.p();
    if x0.len() != n * p {
        return Err(SolveError::InitShape {
            expected: n * p,
            got: x0.len(),
        });
    }
    if cfg.max_iters == 0 || cfg.rounds == 0 {
        return Err(SolveError::NoIterations);
    }
    let fallback = cfg
        .fallback_step
        .unwrap_or_else(|| 1.0 / lipschitz_bound(net));
    if !(fallback.is_finite() && fallback > 0.0) {
        return Err(SolveError::BadLipschitz(fallback));
    }
    let per_iter = comm_per_iteration(net, cfg.rounds);

    let mut x = x0.to_vec();
    let mut g = grad_original(net, meas, &x, cfg.epsilon_guard);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut trace = RunTrace::default();
    trace.push(entry(net, meas, &x, 0, 0));
    let mut fallback_steps = 0;

    for t in 1..=cfg.max_iters {
        let steps = match &prev {
            None => vec![fallback; n],
            Some((x_prev, g_prev)) => {
                let partials: Vec<[f64; 2]> = (0..n)
                    .map(|i| {
                        let s: Vec<f64> = block(&x, i, p)
                            .iter()
                            .zip(block(x_prev, i, p))
                            .map(|(a, b)| a - b)
                            .collect();
                        let q: Vec<f64> = block(&g, i, p)
                            .iter()
                            .zip(block(g_prev, i, p))
                            .map(|(a, b)| a - b)
                            .collect();
                        match cfg.variant {
                            BbVariant::Long => [dot(&s, &s), dot(&s, &q)],
                            BbVariant::Short => [dot(&s, &q), dot(&q, &q)],
                        }
                    })
                    .collect();
                let estimates = match cfg.consensus {
                    ConsensusMode::Metropolis => metropolis_consensus(net, &partials, cfg.rounds),
                    ConsensusMode::Exact => {
                        let total = partials
                            .iter()
                            .fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
                        vec![[total[0] / n as f64, total[1] / n as f64]; n]
                    }
                };
                estimates
                    .iter()
                    .map(|&[a, b]| {
                        // Long: a = ⟨s,s⟩, b = ⟨s,q⟩; Short: a = ⟨s,q⟩, b = ⟨q,q⟩
                        let (curvature, scale) = match cfg.variant {
                            BbVariant::Long => (b, a),
                            BbVariant::Short => (a, b),
                        };
                        let step = a / b;
                        if curvature > DENOMINATOR_GUARD * scale && step.is_finite() && step > 0.0 {
                            step
                        } else {
                            fallback_steps += 1;
                            fallback
                        }
                    })
                    .collect()
            }
        };
        let mut x_next = x.clone();
        for i in 0..n {
            for k in 0..p {
                x_next[i * p + k] -= steps[i] * g[i * p + k];
            }
        }
        let g_next = grad_original(net, meas, &x_next, cfg.epsilon_guard);
        prev = Some((
            std::mem::replace(&mut x, x_next),
            std::mem::replace(&mut g, g_next),
        ));
        trace.push(entry(net, meas, &x, t, t as u64 * per_iter));
    }
    Ok(BbOutput {
        x,
        trace,
        fallback_steps,
    })
}
