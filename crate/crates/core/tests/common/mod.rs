//! Shared fixtures and dense oracles for the integration tests.

#![allow(dead_code)]

use mmnetloc::graph::{corner_anchors, generate_geometric_network, generate_measurements};
use mmnetloc::{Measurements, Network, StateZ};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A connected graph on `n` nodes built from a random spanning tree plus
/// extra edges, random anchors with random links, and random ranges.
/// Positions are not tied to the ranges.
pub fn random_instance(seed: u64, n: usize, p: usize) -> (Network, Measurements) {
    let mut rng = rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        edges.push(ordered(order[k], parent));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.3) && !edges.contains(&(i, j)) {
                edges.push((i, j));
            }
        }
    }
    let num_anchors = rng.random_range(if n == 1 { 1 } else { 0 }..=3);
    let anchors: Vec<Vec<f64>> = (0..num_anchors)
        .map(|_| (0..p).map(|_| rng.random_range(-1.0..2.0)).collect())
        .collect();
    let links: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..num_anchors).filter(|_| rng.random_bool(0.5)).collect())
        .collect();
    let truth: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>()).collect();
    let net = Network::new(n, p, edges, &anchors, links, Some(truth)).expect("valid instance");
    let d = (0..net.num_edges())
        .map(|_| rng.random_range(0.0..1.5))
        .collect();
    let r = (0..net.num_links())
        .map(|_| rng.random_range(0.0..1.5))
        .collect();
    let meas = Measurements::new(&net, d, r, 0.0).expect("valid ranges");
    (net, meas)
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Geometric network in the unit square or cube with corner anchors and
/// noisy ranges drawn from the true positions.
pub fn geometric_instance(seed: u64, n: usize, p: usize, sigma: f64) -> (Network, Measurements) {
    let anchors = corner_anchors(p);
    let radius = if n < 10 { 0.9 } else { 0.6 };
    let net = generate_geometric_network(n, p, radius, &anchors, 0.7, seed).expect("network");
    let meas = generate_measurements(&net, sigma, seed ^ 0x5eed).expect("ranges");
    (net, meas)
}

pub fn random_positions(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_z(rng: &mut ChaCha8Rng, net: &Network, scale: f64) -> StateZ {
    let len = StateZ::zeros(net).len();
    StateZ::from_flat(net, &random_positions(rng, len, scale))
}

/// Dense `M`, `b` and constant `c` with `cost_z(z) = ½zᵀMz − bᵀz + c`,
/// assembled block by block from the graph.
pub struct DenseQuadratic {
    pub m: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

pub fn dense_quadratic(net: &Network) -> DenseQuadratic {
    let n = net.n();
    let p = net.p();
    let ne = net.num_edges();
    let nl = net.num_links();
    let y0 = n * p;
    let w0 = y0 + ne * p;
    let dim = w0 + nl * p;
    let mut m = DMatrix::zeros(dim, dim);
    let mut b = DVector::zeros(dim);
    let mut c = 0.0;

    // x-x block: Laplacian plus anchor-link counts on the diagonal.
    for i in 0..n {
        let diag = (net.degree(i) + net.anchor_links()[i].len()) as f64;
        for d in 0..p {
            m[(i * p + d, i * p + d)] = diag;
        }
    }
    for &(i, j) in net.edges() {
        for d in 0..p {
            m[(i * p + d, j * p + d)] = -1.0;
            m[(j * p + d, i * p + d)] = -1.0;
        }
    }
    // x-y coupling: −Aᵀ with +1 at the smaller endpoint.
    let inc = net.incidence();
    for (e, &(i, j)) in net.edges().iter().enumerate() {
        for node in [i, j] {
            let s = inc.sign(e, node);
            for d in 0..p {
                m[(node * p + d, y0 + e * p + d)] = -s;
                m[(y0 + e * p + d, node * p + d)] = -s;
            }
        }
        for d in 0..p {
            m[(y0 + e * p + d, y0 + e * p + d)] = 1.0;
        }
    }
    // x-w coupling and the anchor terms of b.
    for (l, (i, k)) in net.links().enumerate() {
        let a = net.anchor(k);
        for d in 0..p {
            m[(i * p + d, w0 + l * p + d)] = -1.0;
            m[(w0 + l * p + d, i * p + d)] = -1.0;
            m[(w0 + l * p + d, w0 + l * p + d)] = 1.0;
            b[i * p + d] += a[d];
            b[w0 + l * p + d] -= a[d];
            c += 0.5 * a[d] * a[d];
        }
    }
    DenseQuadratic { m, b, c }
}

impl DenseQuadratic {
    pub fn cost(&self, z: &StateZ) -> f64 {
        let v = DVector::from_vec(z.to_flat());
        0.5 * v.dot(&(&self.m * &v)) - self.b.dot(&v) + self.c
    }

    pub fn grad(&self, z: &StateZ) -> Vec<f64> {
        let v = DVector::from_vec(z.to_flat());
        (&self.m * v - &self.b).as_slice().to_vec()
    }

    /// Largest eigenvalue by power iteration from a seeded random start.
    pub fn lambda_max_power(&self, iters: usize) -> f64 {
        let dim = self.m.nrows();
        let mut r = rng(dim as u64);
        let mut v = DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0));
        v /= v.norm();
        let mut lambda = 0.0;
        for _ in 0..iters {
            let w = &self.m * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = v.dot(&w);
            v = w / norm;
        }
        lambda
    }

    pub fn lambda_max_exact(&self) -> f64 {
        self.m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Central differences of `f` at `v`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, v: &[f64], h: f64) -> Vec<f64> {
    let mut probe = v.to_vec();
    (0..v.len())
        .map(|k| {
            let orig = probe[k];
            probe[k] = orig + h;
            let up = f(&probe);
            probe[k] = orig - h;
            let down = f(&probe);
            probe[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Centralized BB with exact inner products, written out independently.
/// Returns the iterates `x⁰ … x^iters`.
pub fn centralized_bb(
    net: &Network,
    meas: &Measurements,
    x0: &[f64],
    iters: usize,
    first_step: f64,
) -> Vec<Vec<f64>> {
    let grad = |x: &[f64]| -> Vec<f64> {
        let p = net.p();
        let mut g = vec![0.0; x.len()];
        for (e, &(i, j)) in net.edges().iter().enumerate() {
            let diff: Vec<f64> = (0..p).map(|d| x[i * p + d] - x[j * p + d]).collect();
            let dist = norm(&diff);
            if dist < 1e-12 {
                continue;
            }
            let scale = (dist - meas.d[e]) / dist;
            for d in 0..p {
                g[i * p + d] += scale * diff[d];
                g[j * p + d] -= scale * diff[d];
            }
        }
        for (l, (i, k)) in net.links().enumerate() {
            let a = net.anchor(k);
            let diff: Vec<f64> = (0..p).map(|d| x[i * p + d] - a[d]).collect();
            let dist = norm(&diff);
            if dist < 1e-12 {
                continue;
            }
            let scale = (dist - meas.r[l]) / dist;
            for d in 0..p {
                g[i * p + d] += scale * diff[d];
            }
        }
        g
    };
    let mut xs = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    let mut g = grad(&x);
    let mut step = first_step;
    for _ in 0..iters {
        let next: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let g_next = grad(&next);
        let s: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let q: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sq: f64 = s.iter().zip(&q).map(|(a, b)| a * b).sum();
        step = if sq > 1e-12 * ss && ss > 0.0 {
            ss / sq
        } else {
            first_step
        };
        x = next;
        g = g_next;
        xs.push(x.clone());
    }
    xs
}
