//! Maximum-likelihood cost and its quadratic reformulation.
//!
//! The reformulated cost over `z = (x, y, w)` is
//!
//! ```text
//! f(z) = ½ Σ_{i∼j} ‖x_i − x_j − y_ij‖² + ½ Σ_i Σ_{k∈𝒜_i} ‖x_i − a_k − w_ik‖²
//!      = ½ zᵀMz − bᵀz + ½‖α‖²
//! ```
//!
//! Everything here iterates edges and anchor links directly; `M` is never
//! formed.

use thiserror::Error;

use crate::graph::{Measurements, Network};
use crate::projections::project_sphere_in_place;
use crate::vecops::{block, block_mut, dist, dot};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{block} block has {got} entries, expected {expected}")]
pub struct ShapeError {
    pub block: &'static str,
    pub expected: usize,
    pub got: usize,
}

/// Stacked variable: `x` holds `n·p` sensor coordinates, `y` one `p`-vector
/// per edge (canonical orientation), `w` one `p`-vector per anchor link.
///
/// Sphere feasibility of `y` and `w` is not a type invariant; the solvers
/// maintain it through projection.
#[derive(Debug, Clone, PartialEq)]
pub struct StateZ {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

impl StateZ {
    pub fn zeros(net: &Network) -> Self {
        let p = net.p();
        Self {
            x: vec![0.0; net.n() * p],
            y: vec![0.0; net.num_edges() * p],
            w: vec![0.0; net.num_links() * p],
        }
    }

    pub fn check_shape(&self, net: &Network) -> Result<(), ShapeError> {
        let p = net.p();
        for (block, expected, got) in [
            ("x", net.n() * p, self.x.len()),
            ("y", net.num_edges() * p, self.y.len()),
            ("w", net.num_links() * p, self.w.len()),
        ] {
            if expected != got {
                return Err(ShapeError {
                    block,
                    expected,
                    got,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len() + self.y.len() + self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(x, y, w)` concatenated.
    pub fn to_flat(&self) -> Vec<f64> {
        [&self.x[..], &self.y, &self.w].concat()
    }

    pub fn from_flat(net: &Network, v: &[f64]) -> Self {
        let p = net.p();
        let nx = net.n() * p;
        let ny = net.num_edges() * p;
        assert_eq!(v.len(), nx + ny + net.num_links() * p, "flat length");
        Self {
            x: v[..nx].to_vec(),
            y: v[nx..nx + ny].to_vec(),
            w: v[nx + ny..].to_vec(),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        dot(&self.x, &other.x) + dot(&self.y, &other.y) + dot(&self.w, &other.w)
    }
}

fn assert_positions(net: &Network, x: &[f64]) {
    assert_eq!(x.len(), net.n() * net.p(), "position vector length");
}

/// `Σ_{i∼j} ½(‖x_i − x_j‖ − d_ij)² + Σ_i Σ_{k∈𝒜_i} ½(‖x_i − a_k‖ − r_ik)²`.
pub fn cost_original(net: &Network, meas: &Measurements, x: &[f64]) -> f64 {
    assert_positions(net, x);
    let p = net.p();
    let edges: f64 = net
        .edges()
        .iter()
        .zip(&meas.d)
        .map(|(&(i, j), &d)| {
            let r = dist(block(x, i, p), block(x, j, p)) - d;
            0.5 * r * r
        })
        .sum();
    let anchors: f64 = net
        .links()
        .zip(&meas.r)
        .map(|((i, k), &r_ik)| {
            let r = dist(block(x, i, p), net.anchor(k)) - r_ik;
            0.5 * r * r
        })
        .sum();
    edges + anchors
}

/// Residual `x_i − x_j − y_e` for edge `e = (i, j)`, written into `out`.
#[inline]
fn edge_residual(x: &[f64], y: &[f64], i: usize, j: usize, e: usize, p: usize, out: &mut [f64]) {
    let (xi, xj, ye) = (block(x, i, p), block(x, j, p), block(y, e, p));
    for d in 0..p {
        out[d] = xi[d] - xj[d] - ye[d];
    }
}

/// Residual `x_i − a_k − w_l` for link `l = (i, k)`.
#[inline]
fn link_residual(x: &[f64], a: &[f64], w: &[f64], i: usize, l: usize, p: usize, out: &mut [f64]) {
    let (xi, wl) = (block(x, i, p), block(w, l, p));
    for d in 0..p {
        out[d] = xi[d] - a[d] - wl[d];
    }
}

/// Reformulated cost, including the constant `½‖α‖²` so that it agrees with
/// [`cost_original`] at `reduce_to_x(x)`.
pub fn cost_z(net: &Network, z: &StateZ) -> f64 {
    let p = net.p();
    let mut res = [0.0; 3];
    let res = &mut res[..p];
    let mut total = 0.0;
    for (e, &(i, j)) in net.edges().iter().enumerate() {
        edge_residual(&z.x, &z.y, i, j, e, p, res);
        total += 0.5 * dot(res, res);
    }
    for (l, (i, k)) in net.links().enumerate() {
        link_residual(&z.x, net.anchor(k), &z.w, i, l, p, res);
        total += 0.5 * dot(res, res);
    }
    total
}

/// `∇f(z) = Mz − b`, assembled edge by edge and link by link.
pub fn grad_z(net: &Network, z: &StateZ) -> StateZ {
    let p = net.p();
    let mut g = StateZ::zeros(net);
    let mut res = [0.0; 3];
    let res = &mut res[..p];
    for (e, &(i, j)) in net.edges().iter().enumerate() {
        edge_residual(&z.x, &z.y, i, j, e, p, res);
        for (d, &rd) in res.iter().enumerate() {
            g.x[i * p + d] += rd;
            g.x[j * p + d] -= rd;
            g.y[e * p + d] = -rd;
        }
    }
    for (l, (i, k)) in net.links().enumerate() {
        link_residual(&z.x, net.anchor(k), &z.w, i, l, p, res);
        for (d, &rd) in res.iter().enumerate() {
            g.x[i * p + d] += rd;
            g.w[l * p + d] = -rd;
        }
    }
    g
}

/// Completes positions `x` to the best feasible `z`: each `y_ij` is the
/// projection of `x_i − x_j` onto the sphere of radius `d_ij`, each `w_ik`
/// the projection of `x_i − a_k` onto the sphere of radius `r_ik`.
pub fn reduce_to_x(net: &Network, meas: &Measurements, x: &[f64]) -> StateZ {
    assert_positions(net, x);
    let p = net.p();
    let mut z = StateZ::zeros(net);
    z.x.copy_from_slice(x);
    for (e, &(i, j)) in net.edges().iter().enumerate() {
        let ye = block_mut(&mut z.y, e, p);
        for d in 0..p {
            ye[d] = x[i * p + d] - x[j * p + d];
        }
        project_sphere_in_place(ye, meas.d[e]);
    }
    for (l, (i, k)) in net.links().enumerate() {
        let a = net.anchor(k);
        let wl = block_mut(&mut z.w, l, p);
        for d in 0..p {
            wl[d] = x[i * p + d] - a[d];
        }
        project_sphere_in_place(wl, meas.r[l]);
    }
    z
}

/// Projection onto `𝒵`: `x` is left alone, `y` and `w` go to their spheres.
pub fn project_z(net: &Network, meas: &Measurements, z: &mut StateZ) {
    let p = net.p();
    for (e, &d) in meas.d.iter().enumerate() {
        project_sphere_in_place(block_mut(&mut z.y, e, p), d);
    }
    for (l, &r) in meas.r.iter().enumerate() {
        project_sphere_in_place(block_mut(&mut z.w, l, p), r);
    }
    debug_assert_eq!(meas.d.len(), net.num_edges());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{corner_anchors, generate_geometric_network, generate_measurements};

    fn two_sensors(d: f64) -> (Network, Measurements) {
        let net = Network::new(2, 2, vec![(0, 1)], &[], vec![vec![]; 2], None).unwrap();
        let meas = Measurements::new(&net, vec![d], vec![], 0.0).unwrap();
        (net, meas)
    }

    #[test]
    fn exact_ranges_cost_nothing() {
        let net = generate_geometric_network(12, 2, 0.5, &corner_anchors(2), 0.6, 1).unwrap();
        let meas = generate_measurements(&net, 0.0, 2).unwrap();
        let truth = net.true_positions().unwrap();
        assert!(cost_original(&net, &meas, truth) < 1e-30);
    }

    #[test]
    fn hand_evaluated_edge_cost() {
        let (net, meas) = two_sensors(0.8);
        let c = cost_original(&net, &meas, &[0.0, 0.0, 1.0, 0.0]);
        assert!((c - 0.02).abs() < 1e-15);
    }

    #[test]
    fn consistent_z_costs_nothing() {
        let (net, _) = two_sensors(1.0);
        let z = StateZ {
            x: vec![0.5, 0.5, 0.0, 1.0],
            y: vec![0.5, -0.5],
            w: vec![],
        };
        assert_eq!(cost_z(&net, &z), 0.0);
    }

    #[test]
    fn zero_y_single_edge() {
        let (net, _) = two_sensors(1.0);
        let z = StateZ {
            x: vec![1.0, 0.0, 0.0, 0.0],
            y: vec![0.0, 0.0],
            w: vec![],
        };
        assert_eq!(cost_z(&net, &z), 0.5);
    }

    #[test]
    fn gradient_vanishes_at_origin_without_anchors() {
        let (net, _) = two_sensors(1.0);
        let g = grad_z(&net, &StateZ::zeros(&net));
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reduce_projects_edge_difference() {
        let (net, meas) = two_sensors(1.0);
        let z = reduce_to_x(&net, &meas, &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(z.y, vec![1.0, 0.0]);
        // coincident sensors fall back to e₁
        let z = reduce_to_x(&net, &meas, &[0.3, 0.3, 0.3, 0.3]);
        assert_eq!(z.y, vec![1.0, 0.0]);
    }

    #[test]
    fn shape_check_names_block() {
        let (net, _) = two_sensors(1.0);
        let mut z = StateZ::zeros(&net);
        z.w.push(1.0);
        assert_eq!(
            z.check_shape(&net),
            Err(ShapeError {
                block: "w",
                expected: 0,
                got: 1
            })
        );
    }
}
