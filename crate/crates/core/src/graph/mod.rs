//! Sensor network topology, anchors, range measurements and the oriented
//! incidence structure used by the reformulated cost.
//!
//! Positions are stored flat: sensor `i` occupies `[i * p, (i + 1) * p)`.
//! Anchor links are flattened in sensor order, then in the order of
//! `anchor_links[i]`; that flat index addresses both `r` and the `w` block of
//! the optimization variable.

mod generate;
mod io;

pub use generate::{
    corner_anchors, generate_geometric_network, generate_measurements, generate_with_target_degree,
    noisy_range, radius_for_mean_degree, MAX_CONNECTIVITY_ATTEMPTS,
};
pub use io::{load_network, parse_network, save_network, to_json_string, FileError, NetworkFile};

use std::collections::VecDeque;

use thiserror::Error;

use crate::vecops::block;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("spatial dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("edge {index} = ({i}, {j}) must satisfy i < j < n = {n}")]
    BadEdge {
        index: usize,
        i: usize,
        j: usize,
        n: usize,
    },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("sensor {sensor} links to anchor {anchor}, but only {m} anchors exist")]
    BadAnchorLink {
        sensor: usize,
        anchor: usize,
        m: usize,
    },
    #[error("sensor {0} has unsorted or duplicate anchor links")]
    UnsortedAnchorLinks(usize),
    #[error("expected {expected} {what}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} must be finite and nonnegative, got {value} at index {index}")]
    BadValue {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("graph is not connected ({reached} of {n} sensors reachable from sensor 0)")]
    NotConnected { reached: usize, n: usize },
    #[error("no connected network after {attempts} draws with radius {radius}; radius too small")]
    ConnectivityRetries { attempts: usize, radius: f64 },
    #[error("true sensor positions are required")]
    MissingTruth,
    #[error("network needs at least one sensor")]
    Empty,
}

/// One endpoint view of an edge, as seen from a sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incidence {
    pub edge: usize,
    pub neighbor: usize,
    /// Entry of the arc-node incidence matrix for (edge, this sensor).
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n: usize,
    p: usize,
    edges: Vec<(usize, usize)>,
    anchors: Vec<f64>,
    anchor_links: Vec<Vec<usize>>,
    true_positions: Option<Vec<f64>>,
    incident: Vec<Vec<Incidence>>,
    link_offset: Vec<usize>,
}

impl Network {
    /// Builds and validates a network. Anchors are given as points in `ℝ^p`.
    pub fn new(
        n: usize,
        p: usize,
        edges: Vec<(usize, usize)>,
        anchors: &[Vec<f64>],
        anchor_links: Vec<Vec<usize>>,
        true_positions: Option<Vec<f64>>,
    ) -> Result<Self, GraphError> {
        if !(2..=3).contains(&p) {
            return Err(GraphError::Dimension(p));
        }
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for (index, &(i, j)) in edges.iter().enumerate() {
            if i >= j || j >= n {
                return Err(GraphError::BadEdge { index, i, j, n });
            }
            if !seen.insert((i, j)) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
        }
        let m = anchors.len();
        let mut flat_anchors = Vec::with_capacity(m * p);
        for a in anchors {
            if a.len() != p {
                return Err(GraphError::Shape {
                    what: "anchor coordinates",
                    expected: p,
                    got: a.len(),
                });
            }
            flat_anchors.extend_from_slice(a);
        }
        if anchor_links.len() != n {
            return Err(GraphError::Shape {
                what: "anchor link lists",
                expected: n,
                got: anchor_links.len(),
            });
        }
        for (sensor, links) in anchor_links.iter().enumerate() {
            if let Some(&anchor) = links.iter().find(|&&k| k >= m) {
                return Err(GraphError::BadAnchorLink { sensor, anchor, m });
            }
            if links.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::UnsortedAnchorLinks(sensor));
            }
        }
        if let Some(x) = &true_positions {
            if x.len() != n * p {
                return Err(GraphError::Shape {
                    what: "true position coordinates",
                    expected: n * p,
                    got: x.len(),
                });
            }
        }

        let mut incident = vec![Vec::new(); n];
        for (edge, &(i, j)) in edges.iter().enumerate() {
            incident[i].push(Incidence {
                edge,
                neighbor: j,
                sign: 1.0,
            });
            incident[j].push(Incidence {
                edge,
                neighbor: i,
                sign: -1.0,
            });
        }
        let mut link_offset = Vec::with_capacity(n + 1);
        link_offset.push(0);
        for links in &anchor_links {
            link_offset.push(link_offset.last().unwrap() + links.len());
        }

        let net = Self {
            n,
            p,
            edges,
            anchors: flat_anchors,
            anchor_links,
            true_positions,
            incident,
            link_offset,
        };
        let reached = net.reachable_from_zero();
        if reached != n {
            return Err(GraphError::NotConnected { reached, n });
        }
        Ok(net)
    }

    fn reachable_from_zero(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for inc in &self.incident[i] {
                if !seen[inc.neighbor] {
                    seen[inc.neighbor] = true;
                    count += 1;
                    queue.push_back(inc.neighbor);
                }
            }
        }
        count
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_anchors(&self) -> usize {
        self.anchors.len() / self.p
    }

    pub fn anchor(&self, k: usize) -> &[f64] {
        block(&self.anchors, k, self.p)
    }

    pub fn anchors(&self) -> Vec<Vec<f64>> {
        self.anchors.chunks(self.p).map(<[f64]>::to_vec).collect()
    }

    pub fn anchor_links(&self) -> &[Vec<usize>] {
        &self.anchor_links
    }

    /// Total number of sensor–anchor links, i.e. `Σ_i |𝒜_i|`.
    pub fn num_links(&self) -> usize {
        self.link_offset[self.n]
    }

    /// Flat link indices owned by sensor `i`, paired with the anchor index.
    pub fn links_of(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let start = self.link_offset[i];
        self.anchor_links[i]
            .iter()
            .enumerate()
            .map(move |(o, &k)| (start + o, k))
    }

    /// `(sensor, anchor)` for every flat link index, in order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.anchor_links[i].iter().map(move |&k| (i, k)))
    }

    pub fn incident(&self, i: usize) -> &[Incidence] {
        &self.incident[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.incident[i].len()
    }

    pub fn is_neighbor(&self, i: usize, j: usize) -> bool {
        self.incident[i].iter().any(|inc| inc.neighbor == j)
    }

    pub fn true_positions(&self) -> Option<&[f64]> {
        self.true_positions.as_deref()
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    pub fn incidence(&self) -> IncidenceMap<'_> {
        IncidenceMap { net: self }
    }

    /// Hop diameter of the communication graph.
    pub fn diameter(&self) -> usize {
        (0..self.n)
            .map(|s| {
                let mut dist = vec![usize::MAX; self.n];
                dist[s] = 0;
                let mut queue = VecDeque::from([s]);
                let mut far = 0;
                while let Some(i) = queue.pop_front() {
                    far = far.max(dist[i]);
                    for inc in &self.incident[i] {
                        if dist[inc.neighbor] == usize::MAX {
                            dist[inc.neighbor] = dist[i] + 1;
                            queue.push_back(inc.neighbor);
                        }
                    }
                }
                far
            })
            .max()
            .unwrap_or(0)
    }
}

/// Oriented edge bookkeeping: edge `(i, j)` with `i < j` has `+1` at `i` and
/// `-1` at `j`. Row `e` of the implied matrix `C` is edge `e`.
#[derive(Debug, Clone, Copy)]
pub struct IncidenceMap<'a> {
    net: &'a Network,
}

impl IncidenceMap<'_> {
    /// `C[e, node]`; zero when `node` is not an endpoint of `e`.
    pub fn sign(&self, edge: usize, node: usize) -> f64 {
        let (i, j) = self.net.edges[edge];
        if node == i {
            1.0
        } else if node == j {
            -1.0
        } else {
            0.0
        }
    }

    pub fn rows(&self) -> usize {
        self.net.edges.len()
    }

    pub fn cols(&self) -> usize {
        self.net.n
    }

    /// Row-major dense `C`, for inspection on small graphs.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|e| (0..self.cols()).map(|v| self.sign(e, v)).collect())
            .collect()
    }
}

/// `(δ_max, max_i |𝒜_i|)`.
pub fn degree_stats(net: &Network) -> (usize, usize) {
    let delta_max = (0..net.n).map(|i| net.degree(i)).max().unwrap_or(0);
    let anchors_max = net.anchor_links.iter().map(Vec::len).max().unwrap_or(0);
    (delta_max, anchors_max)
}

/// Noisy ranges. `d[e]` belongs to edge `e`; `r[l]` to flat link `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub d: Vec<f64>,
    pub r: Vec<f64>,
    pub sigma: f64,
}

impl Measurements {
    pub fn new(net: &Network, d: Vec<f64>, r: Vec<f64>, sigma: f64) -> Result<Self, GraphError> {
        if d.len() != net.num_edges() {
            return Err(GraphError::Shape {
                what: "edge ranges",
                expected: net.num_edges(),
                got: d.len(),
            });
        }
        if r.len() != net.num_links() {
            return Err(GraphError::Shape {
                what: "anchor ranges",
                expected: net.num_links(),
                got: r.len(),
            });
        }
        check_ranges("d", &d)?;
        check_ranges("r", &r)?;
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(GraphError::BadValue {
                what: "sigma",
                index: 0,
                value: sigma,
            });
        }
        Ok(Self { d, r, sigma })
    }
}

fn check_ranges(what: &'static str, v: &[f64]) -> Result<(), GraphError> {
    match v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        Some(index) => Err(GraphError::BadValue {
            what,
            index,
            value: v[index],
        }),
        None => Ok(()),
    }
}
