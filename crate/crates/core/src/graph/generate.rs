use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{GraphError, Measurements, Network};
use crate::seed;
use crate::vecops::{block, dist};

/// Connectivity is enforced by redrawing positions from a fresh sub-seed.
pub const MAX_CONNECTIVITY_ATTEMPTS: usize = 1000;

/// Vertices of the unit square (p = 2) or cube (p = 3).
pub fn corner_anchors(p: usize) -> Vec<Vec<f64>> {
    (0..1usize << p)
        .map(|mask| (0..p).map(|d| ((mask >> d) & 1) as f64).collect())
        .collect()
}

fn draw_positions(n: usize, p: usize, master: u64, attempt: usize) -> Vec<f64> {
    let mut rng = seed::rng(master, &[seed::TAG_NETWORK, attempt as u64]);
    (0..n * p).map(|_| rng.random::<f64>()).collect()
}

fn build(
    positions: Vec<f64>,
    p: usize,
    radius: f64,
    anchors: &[Vec<f64>],
    anchor_range: f64,
) -> Result<Network, GraphError> {
    let n = positions.len() / p;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if dist(block(&positions, i, p), block(&positions, j, p)) <= radius {
                edges.push((i, j));
            }
        }
    }
    let anchor_links = (0..n)
        .map(|i| {
            anchors
                .iter()
                .enumerate()
                .filter(|(_, a)| a.len() == p && dist(block(&positions, i, p), a) <= anchor_range)
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    Network::new(n, p, edges, anchors, anchor_links, Some(positions))
}

fn validate_args(n: usize, p: usize) -> Result<(), GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if !(2..=3).contains(&p) {
        return Err(GraphError::Dimension(p));
    }
    Ok(())
}

/// Random geometric network: sensors uniform in `[0,1]^p`, an edge whenever
/// two sensors are within `radius`, an anchor link whenever a sensor is
/// within `anchor_range` of the anchor. Redraws until connected.
pub fn generate_geometric_network(
    n: usize,
    p: usize,
    radius: f64,
    anchors: &[Vec<f64>],
    anchor_range: f64,
    rng_seed: u64,
) -> Result<Network, GraphError> {
    validate_args(n, p)?;
    if radius.is_nan() || radius <= 0.0 {
        return Err(GraphError::BadValue {
            what: "radius",
            index: 0,
            value: radius,
        });
    }
    for attempt in 0..MAX_CONNECTIVITY_ATTEMPTS {
        match build(
            draw_positions(n, p, rng_seed, attempt),
            p,
            radius,
            anchors,
            anchor_range,
        ) {
            Ok(net) => return Ok(net),
            Err(GraphError::NotConnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::ConnectivityRetries {
        attempts: MAX_CONNECTIVITY_ATTEMPTS,
        radius,
    })
}

/// Radius giving exactly `round(target * n / 2)` edges for these positions.
///
/// Mean degree is a step function of the radius, so instead of bisecting we
/// pick the midpoint between the k-th and (k+1)-th smallest pair distances.
pub fn radius_for_mean_degree(positions: &[f64], p: usize, target: f64) -> f64 {
    let n = positions.len() / p;
    let mut pairs: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| dist(block(positions, i, p), block(positions, j, p)))
        .collect();
    if pairs.is_empty() {
        return 1.0;
    }
    pairs.sort_by(f64::total_cmp);
    let k = ((target * n as f64 / 2.0).round() as usize).min(pairs.len());
    match k {
        0 => 0.5 * pairs[0],
        k if k == pairs.len() => pairs[k - 1] * 1.01,
        k => 0.5 * (pairs[k - 1] + pairs[k]),
    }
}

/// Like [`generate_geometric_network`], but the radius is re-fit on every draw
/// so that the mean degree hits `target_degree` as closely as the discrete
/// pair distances allow. Returns the network and the radius used.
pub fn generate_with_target_degree(
    n: usize,
    p: usize,
    target_degree: f64,
    anchors: &[Vec<f64>],
    anchor_range: f64,
    rng_seed: u64,
) -> Result<(Network, f64), GraphError> {
    validate_args(n, p)?;
    let mut radius = f64::NAN;
    for attempt in 0..MAX_CONNECTIVITY_ATTEMPTS {
        let positions = draw_positions(n, p, rng_seed, attempt);
        radius = radius_for_mean_degree(&positions, p, target_degree);
        match build(positions, p, radius, anchors, anchor_range) {
            Ok(net) => return Ok((net, radius)),
            Err(GraphError::NotConnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::ConnectivityRetries {
        attempts: MAX_CONNECTIVITY_ATTEMPTS,
        radius,
    })
}

/// Range model: the absolute value of the exact distance plus noise.
#[inline]
pub fn noisy_range(distance: f64, noise: f64) -> f64 {
    (distance + noise).abs()
}

/// `d_ij = |‖x_i★ − x_j★‖ + ν_ij|`, `r_ik = |‖x_i★ − a_k‖ + η_ik|` with
/// i.i.d. `N(0, sigma²)` draws.
pub fn generate_measurements(
    net: &Network,
    sigma: f64,
    rng_seed: u64,
) -> Result<Measurements, GraphError> {
    let truth = net.true_positions().ok_or(GraphError::MissingTruth)?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(GraphError::BadValue {
            what: "sigma",
            index: 0,
            value: sigma,
        });
    }
    let p = net.p();
    let mut rng = seed::rng(rng_seed, &[seed::TAG_MEASUREMENTS]);
    let noise = Normal::new(0.0, sigma).expect("sigma validated");
    let mut draw = || {
        if sigma > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        }
    };
    let d = net
        .edges()
        .iter()
        .map(|&(i, j)| noisy_range(dist(block(truth, i, p), block(truth, j, p)), draw()))
        .collect();
    let r = net
        .links()
        .map(|(i, k)| noisy_range(dist(block(truth, i, p), net.anchor(k)), draw()))
        .collect();
    Measurements::new(net, d, r, sigma)
}
