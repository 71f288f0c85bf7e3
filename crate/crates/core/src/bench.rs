//! Monte-Carlo harness: one fixed network, fresh noise and a fresh starting
//! point per trial, both solvers run from the same start.
//!
//! Outputs `summary.csv` and one `curve_<method>_<sigma>.csv` per method and
//! noise level. Curves are averaged at matched iteration index; a run that
//! stopped early holds its last value.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline_bb::{self, bb_solve, BBConfig};
use crate::graph::{
    corner_anchors, generate_geometric_network, generate_measurements, generate_with_target_degree,
    GraphError, Network,
};
use crate::init::Initializer;
use crate::metrics::{RunTrace, TraceEntry};
use crate::mm::{self, SolveError, SolverConfig};
use crate::seed;

pub use crate::metrics::mpe;

/// Environment variable capping trial parallelism.
pub const THREADS_ENV: &str = "MMNETLOC_THREADS";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorLayout {
    /// Vertices of the unit square or cube.
    Corners,
    None,
    Points(Vec<Vec<f64>>),
}

impl AnchorLayout {
    pub fn positions(&self, p: usize) -> Vec<Vec<f64>> {
        match self {
            AnchorLayout::Corners => corner_anchors(p),
            AnchorLayout::None => Vec::new(),
            AnchorLayout::Points(pts) => pts.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub n: usize,
    #[serde(default = "default_p")]
    pub p: usize,
    /// Connection radius. Exactly one of `radius` and `target_degree`.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub target_degree: Option<f64>,
    #[serde(default = "default_anchors")]
    pub anchors: AnchorLayout,
    pub anchor_range: f64,
}

fn default_p() -> usize {
    2
}

fn default_anchors() -> AnchorLayout {
    AnchorLayout::Corners
}

/// Range within which a sensor hears a corner anchor in the reference setup.
///
/// With mean degree 6 this yields roughly 60 anchor links for 50 sensors.
pub const REFERENCE_ANCHOR_RANGE: f64 = 0.65;

pub const REFERENCE_MM_ITERS: usize = 10_000;
pub const REFERENCE_BB_ITERS: usize = 1000;

impl NetworkConfig {
    /// 50 sensors in the unit square, mean degree 6, four corner anchors.
    pub fn reference() -> Self {
        Self {
            n: 50,
            p: 2,
            radius: None,
            target_degree: Some(6.0),
            anchors: AnchorLayout::Corners,
            anchor_range: REFERENCE_ANCHOR_RANGE,
        }
    }

    pub fn build(&self, rng_seed: u64) -> Result<Network, BenchError> {
        let anchors = self.anchors.positions(self.p);
        match (self.radius, self.target_degree) {
            (Some(r), None) => Ok(generate_geometric_network(
                self.n,
                self.p,
                r,
                &anchors,
                self.anchor_range,
                rng_seed,
            )?),
            (None, Some(deg)) => Ok(generate_with_target_degree(
                self.n,
                self.p,
                deg,
                &anchors,
                self.anchor_range,
                rng_seed,
            )?
            .0),
            _ => Err(BenchError::Spec(
                "give exactly one of `radius` and `target_degree`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub network: NetworkConfig,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_init")]
    pub init: Initializer,
    #[serde(default)]
    pub mm: SolverConfig,
    #[serde(default)]
    pub bb: BBConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

fn default_sigmas() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}

fn default_trials() -> usize {
    100
}

fn default_init() -> Initializer {
    Initializer::PerturbedTruth { std: 0.1 }
}

impl ExperimentSpec {
    /// The headline setup: reference network, σ ∈ {0.01, 0.05, 0.1}, 100
    /// trials, perturbed-truth start with std 0.1. Budgets are large enough for
    /// both methods to level off: up to 10000 MM iterations (the stall rule
    /// usually ends runs earlier) and 1000 BB iterations.
    pub fn reference(seed: u64) -> Self {
        Self {
            network: NetworkConfig::reference(),
            sigmas: default_sigmas(),
            trials: default_trials(),
            init: default_init(),
            mm: SolverConfig {
                max_iters: REFERENCE_MM_ITERS,
                ..SolverConfig::default()
            },
            bb: BBConfig {
                max_iters: REFERENCE_BB_ITERS,
                ..BBConfig::default()
            },
            output_dir: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(BenchError::Spec("trials must be at least 1".into()));
        }
        if self.sigmas.is_empty() {
            return Err(BenchError::Spec("sigma list is empty".into()));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(BenchError::Spec(format!(
                "sigma must be nonnegative, got {s}"
            )));
        }
        if self.bb.max_iters == 0 || self.bb.rounds == 0 {
            return Err(BenchError::Spec(
                "bb needs max_iters ≥ 1 and rounds ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mm,
    Bb,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Mm, Method::Bb];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mm => "mm",
            Method::Bb => "bb",
        }
    }
}

/// Trial-averaged progress of one method at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub iter: usize,
    pub comm_scalars: u64,
    pub mean_cost_per_sensor: f64,
    pub mean_mpe: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sigma: f64,
    pub method: Method,
    pub mpe: f64,
    pub final_cost_per_sensor: f64,
    /// Mean iteration count over trials.
    pub iters: f64,
    /// Mean cumulative scalars over trials.
    pub comm_scalars: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub summary: SummaryRow,
    pub curve: Vec<CurvePoint>,
    pub estimates: Vec<Vec<f64>>,
    pub traces: Vec<RunTrace>,
}

#[derive(Debug, Clone)]
pub struct SigmaResult {
    pub sigma: f64,
    pub mm: MethodResult,
    pub bb: MethodResult,
}

impl SigmaResult {
    pub fn method(&self, m: Method) -> &MethodResult {
        match m {
            Method::Mm => &self.mm,
            Method::Bb => &self.bb,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub network: Network,
    pub per_sigma: Vec<SigmaResult>,
}

impl ExperimentResult {
    pub fn summary(&self) -> impl Iterator<Item = &SummaryRow> {
        self.per_sigma
            .iter()
            .flat_map(|s| [&s.mm.summary, &s.bb.summary])
    }
}

struct TrialOutcome {
    mm: (Vec<f64>, RunTrace),
    bb: (Vec<f64>, RunTrace),
}

fn run_trial(
    spec: &ExperimentSpec,
    net: &Network,
    sigma_index: usize,
    trial: usize,
) -> Result<TrialOutcome, BenchError> {
    let sigma = spec.sigmas[sigma_index];
    let path = [sigma_index as u64, trial as u64];
    let meas = generate_measurements(
        net,
        sigma,
        seed::derive(spec.seed, &[seed::TAG_MEASUREMENTS, path[0], path[1]]),
    )?;
    let x0 = spec.init.draw(
        net,
        seed::derive(spec.seed, &[seed::TAG_INIT, path[0], path[1]]),
    )?;
    let mm = mm::solve(net, &meas, &x0, &spec.mm)?;
    let bb = bb_solve(net, &meas, &x0, &spec.bb)?;
    Ok(TrialOutcome {
        mm: (mm.x, mm.trace),
        bb: (bb.x, bb.trace),
    })
}

fn average_curve(traces: &[RunTrace], per_iter: u64) -> Vec<CurvePoint> {
    let len = traces.iter().map(|t| t.entries.len()).max().unwrap_or(0);
    let k = traces.len() as f64;
    (0..len)
        .map(|it| {
            let at = |t: &RunTrace| -> TraceEntry {
                *t.entries
                    .get(it)
                    .unwrap_or_else(|| t.entries.last().expect("nonempty trace"))
            };
            let cost = traces.iter().map(|t| at(t).cost_per_sensor).sum::<f64>() / k;
            let err = traces
                .iter()
                .map(|t| at(t).mpe.unwrap_or(f64::NAN))
                .sum::<f64>()
                / k;
            CurvePoint {
                iter: it,
                comm_scalars: it as u64 * per_iter,
                mean_cost_per_sensor: cost,
                mean_mpe: err,
            }
        })
        .collect()
}

fn collect_method(
    net: &Network,
    sigma: f64,
    method: Method,
    runs: Vec<(Vec<f64>, RunTrace)>,
    per_iter: u64,
) -> MethodResult {
    let (estimates, traces): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let k = traces.len() as f64;
    let truth = net
        .true_positions()
        .expect("generated networks carry truth");
    let last = |t: &RunTrace| *t.last().expect("nonempty trace");
    let summary = SummaryRow {
        sigma,
        method,
        mpe: mpe(&estimates, truth, net.p()),
        final_cost_per_sensor: traces.iter().map(|t| last(t).cost_per_sensor).sum::<f64>() / k,
        iters: traces.iter().map(|t| last(t).iter as f64).sum::<f64>() / k,
        comm_scalars: traces
            .iter()
            .map(|t| last(t).comm_scalars as f64)
            .sum::<f64>()
            / k,
    };
    MethodResult {
        summary,
        curve: average_curve(&traces, per_iter),
        estimates,
        traces,
    }
}

/// Thread count from [`THREADS_ENV`], defaulting to the machine's parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every (σ, trial) pair, in parallel, merging results in trial order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, BenchError> {
    spec.validate()?;
    let net = spec
        .network
        .build(seed::derive(spec.seed, &[seed::TAG_NETWORK]))?;
    let jobs: Vec<(usize, usize)> = (0..spec.sigmas.len())
        .flat_map(|s| (0..spec.trials).map(move |t| (s, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| BenchError::Spec(format!("thread pool: {e}")))?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, t)| run_trial(spec, &net, s, t))
            .collect::<Result<_, _>>()
    })?;

    let mm_per_iter = mm::comm_per_iteration(&net);
    let bb_per_iter = baseline_bb::comm_per_iteration(&net, spec.bb.rounds);
    let mut outcomes = outcomes.into_iter();
    let per_sigma = spec
        .sigmas
        .iter()
        .map(|&sigma| {
            let (mm_runs, bb_runs): (Vec<_>, Vec<_>) = outcomes
                .by_ref()
                .take(spec.trials)
                .map(|o| (o.mm, o.bb))
                .unzip();
            SigmaResult {
                sigma,
                mm: collect_method(&net, sigma, Method::Mm, mm_runs, mm_per_iter),
                bb: collect_method(&net, sigma, Method::Bb, bb_runs, bb_per_iter),
            }
        })
        .collect();
    Ok(ExperimentResult {
        network: net,
        per_sigma,
    })
}

/// Name of the curve file for `method` at `sigma`.
pub fn curve_file_name(method: Method, sigma: f64) -> String {
    format!("curve_{}_{}.csv", method.name(), sigma)
}

pub fn write_summary<W: Write>(result: &ExperimentResult, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "sigma,method,mpe,final_cost_per_sensor,iters,comm_scalars"
    )?;
    for row in result.summary() {
        writeln!(
            out,
            "{},{},{:.9e},{:.9e},{},{}",
            row.sigma,
            row.method.name(),
            row.mpe,
            row.final_cost_per_sensor,
            row.iters,
            row.comm_scalars
        )?;
    }
    Ok(())
}

pub fn write_curve<W: Write>(curve: &[CurvePoint], mut out: W) -> io::Result<()> {
    writeln!(out, "iter,comm_scalars,mean_cost_per_sensor,mean_mpe")?;
    for pt in curve {
        writeln!(
            out,
            "{},{},{:.9e},{:.9e}",
            pt.iter, pt.comm_scalars, pt.mean_cost_per_sensor, pt.mean_mpe
        )?;
    }
    Ok(())
}

/// Writes `summary.csv` and all curve files into `dir`; returns the paths.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source| BenchError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let path = dir.join("summary.csv");
    let mut buf = Vec::new();
    write_summary(result, &mut buf).expect("in-memory write");
    fs::write(&path, buf).map_err(io_err(&path))?;
    written.push(path);
    for s in &result.per_sigma {
        for m in Method::ALL {
            let path = dir.join(curve_file_name(m, s.sigma));
            let mut buf = Vec::new();
            write_curve(&s.method(m).curve, &mut buf).expect("in-memory write");
            fs::write(&path, buf).map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// First communication count at which a curve's mean cost is at or below
/// `level`.
pub fn comm_to_reach(curve: &[CurvePoint], level: f64) -> Option<u64> {
    curve
        .iter()
        .find(|pt| pt.mean_cost_per_sensor <= level)
        .map(|pt| pt.comm_scalars)
}

/// How much less communication MM needs than BB to get within `slack` of
/// MM's final cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommAdvantage {
    /// `bb_comm / mm_comm`.
    Ratio {
        mm_comm: u64,
        bb_comm: u64,
        ratio: f64,
    },
    /// BB never reached the level within its budget; `lower_bound` is
    /// `bb_budget / mm_comm`.
    BbNeverReached { mm_comm: u64, lower_bound: f64 },
}

impl CommAdvantage {
    pub fn at_least(&self, factor: f64) -> bool {
        match *self {
            CommAdvantage::Ratio { ratio, .. } => ratio >= factor,
            CommAdvantage::BbNeverReached { lower_bound, .. } => lower_bound >= factor,
        }
    }
}

pub fn communication_advantage(mm: &[CurvePoint], bb: &[CurvePoint], slack: f64) -> CommAdvantage {
    let final_cost = mm.last().map_or(0.0, |pt| pt.mean_cost_per_sensor);
    let level = final_cost * (1.0 + slack);
    let mm_comm = comm_to_reach(mm, level).unwrap_or(0).max(1);
    match comm_to_reach(bb, level) {
        Some(bb_comm) => CommAdvantage::Ratio {
            mm_comm,
            bb_comm,
            ratio: bb_comm as f64 / mm_comm as f64,
        },
        None => CommAdvantage::BbNeverReached {
            mm_comm,
            lower_bound: bb.last().map_or(0, |pt| pt.comm_scalars) as f64 / mm_comm as f64,
        },
    }
}
