//! `mmnetloc` command line: `generate`, `solve`, `bench`.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
//! runtime failures.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::baseline_bb::{bb_solve, BBConfig, BbVariant};
use crate::bench::{self, AnchorLayout, ExperimentSpec, NetworkConfig};
use crate::graph::{self, generate_measurements, FileError};
use crate::init::Initializer;
use crate::metrics::RunTrace;
use crate::mm::{self, SolverConfig};
use crate::node_sim;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad spec or network file contents.
    Usage(String),
    /// I/O or solver failure.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        match e {
            FileError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<bench::BenchError> for CliError {
    fn from(e: bench::BenchError) -> Self {
        match e {
            bench::BenchError::Spec(_) | bench::BenchError::Graph(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mmnetloc",
    version,
    about = "Distributed MM sensor network localization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random geometric network with noisy ranges and write it as JSON.
    Generate(GenerateArgs),
    /// Localize the sensors of a network file with one method.
    Solve(SolveArgs),
    /// Run the Monte-Carlo comparison and write summary and curve CSVs.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AnchorChoice {
    /// Vertices of the unit square (cube for --p 3).
    Corners,
    /// No anchors.
    None,
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    /// Number of sensors.
    #[arg(long)]
    pub n: usize,
    /// Spatial dimension, 2 or 3.
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Connection radius; conflicts with --target-degree.
    #[arg(long, conflicts_with = "target_degree")]
    pub radius: Option<f64>,
    /// Fit the radius so the mean node degree hits this value.
    #[arg(long)]
    pub target_degree: Option<f64>,
    /// Anchor layout.
    #[arg(long, value_enum, default_value_t = AnchorChoice::Corners)]
    pub anchors: AnchorChoice,
    /// Distance within which a sensor measures its range to an anchor.
    #[arg(long, default_value_t = bench::REFERENCE_ANCHOR_RANGE)]
    pub anchor_range: f64,
    /// Standard deviation of the range noise.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    /// Master seed for positions and noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output network file.
    #[arg(long, default_value = "network.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    /// Centralized majorization-minimization.
    Mm,
    /// Per-sensor message-passing simulation of the same algorithm.
    MmSim,
    /// Barzilai-Borwein gradient descent with consensus step sizes.
    Bb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantChoice {
    Long,
    Short,
}

/// `--init` value: an [`Initializer`] or `file:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitChoice {
    Draw(Initializer),
    File(PathBuf),
}

fn parse_init(s: &str) -> Result<InitChoice, String> {
    match s.strip_prefix("file:") {
        Some(path) if !path.is_empty() => Ok(InitChoice::File(PathBuf::from(path))),
        Some(_) => Err("file: needs a path".into()),
        None => s.parse().map(InitChoice::Draw),
    }
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// Network file written by `generate`.
    #[arg(long)]
    pub network: PathBuf,
    /// Algorithm to run.
    #[arg(long, value_enum, default_value_t = MethodChoice::Mm)]
    pub method: MethodChoice,
    /// Starting point: random, truth, perturbed-truth:<std> or file:<path>
    /// (an estimate.csv from a previous run).
    #[arg(long, value_parser = parse_init, default_value = "perturbed-truth:0.1")]
    pub init: InitChoice,
    /// Redraw the ranges from the true positions with this noise level.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Seed for the starting point and any redrawn ranges.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for trace.csv, estimate.csv (and messages.csv).
    #[arg(long, default_value = "solve_out")]
    pub out: PathBuf,
    /// Iteration cap.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// MM stall tolerance on the relative cost decrease.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Consensus rounds per BB iteration.
    #[arg(long = "T", default_value_t = 20)]
    pub rounds: usize,
    /// BB step formula.
    #[arg(long, value_enum, default_value_t = VariantChoice::Long)]
    pub bb_variant: VariantChoice,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    /// Experiment spec (JSON). Without it the reference experiment is used.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Monte-Carlo trials per noise level.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Noise levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Starting point: random, truth or perturbed-truth:<std>.
    #[arg(long)]
    pub init: Option<Initializer>,
    /// Number of sensors.
    #[arg(long)]
    pub n: Option<usize>,
    /// MM iteration cap.
    #[arg(long)]
    pub mm_iters: Option<usize>,
    /// BB iteration cap.
    #[arg(long)]
    pub bb_iters: Option<usize>,
    /// Output directory; defaults to the spec's, then `bench_out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let res = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let cfg = NetworkConfig {
        n: a.n,
        p: a.p,
        radius: a.radius,
        target_degree: match (a.radius, a.target_degree) {
            (None, None) => Some(6.0),
            (_, d) => d,
        },
        anchors: match a.anchors {
            AnchorChoice::Corners => AnchorLayout::Corners,
            AnchorChoice::None => AnchorLayout::None,
        },
        anchor_range: a.anchor_range,
    };
    let net = cfg.build(a.seed)?;
    let meas =
        generate_measurements(&net, a.sigma, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    graph::save_network(&a.out, &net, &meas, Some(a.seed))?;
    println!(
        "wrote {}: {} sensors, {} edges (mean degree {:.2}), {} anchor links",
        a.out.display(),
        net.n(),
        net.num_edges(),
        net.mean_degree(),
        net.num_links()
    );
    Ok(())
}

/// Positions as `sensor,x0,x1[,x2]` rows.
pub fn write_estimate(x: &[f64], p: usize) -> String {
    let mut out = String::from("sensor");
    for d in 0..p {
        out.push_str(&format!(",x{d}"));
    }
    out.push('\n');
    for (i, row) in x.chunks(p).enumerate() {
        out.push_str(&i.to_string());
        for v in row {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

pub fn read_estimate(text: &str, n: usize, p: usize) -> Result<Vec<f64>, String> {
    let mut x = vec![f64::NAN; n * p];
    let mut seen = vec![false; n];
    for (line_no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != p + 1 {
            return Err(format!("line {}: expected {} fields", line_no + 1, p + 1));
        }
        let i: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| format!("line {}: bad sensor index", line_no + 1))?;
        if i >= n || seen[i] {
            return Err(format!(
                "line {}: sensor {i} out of range or repeated",
                line_no + 1
            ));
        }
        seen[i] = true;
        for d in 0..p {
            x[i * p + d] = fields[d + 1]
                .trim()
                .parse()
                .map_err(|_| format!("line {}: bad coordinate", line_no + 1))?;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(format!("sensor {i} missing"));
    }
    Ok(x)
}

fn trace_csv(trace: &RunTrace) -> Vec<u8> {
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).expect("in-memory write");
    buf
}

pub fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let (net, mut meas, _) = graph::load_network(&a.network)?;
    if let Some(sigma) = a.sigma {
        meas = generate_measurements(&net, sigma, a.seed)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let x0 = match &a.init {
        InitChoice::Draw(init) => init
            .draw(&net, a.seed)
            .map_err(|e| CliError::Usage(e.to_string()))?,
        InitChoice::File(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            read_estimate(&text, net.n(), net.p())
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
    };
    create_dir(&a.out)?;
    let mm_cfg = SolverConfig {
        max_iters: a.max_iters.unwrap_or(SolverConfig::default().max_iters),
        tol_rel_cost: a.tol,
        ..SolverConfig::default()
    };
    let usage = |e: mm::SolveError| CliError::Usage(e.to_string());
    let (x, trace) = match a.method {
        MethodChoice::Mm => {
            let sol = mm::solve(&net, &meas, &x0, &mm_cfg).map_err(usage)?;
            (sol.x, sol.trace)
        }
        MethodChoice::MmSim => {
            let out = node_sim::simulate(&net, &meas, &x0, &mm_cfg)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let mut buf = Vec::new();
            out.log.write_csv(&mut buf).expect("in-memory write");
            write_file(&a.out.join("messages.csv"), &buf)?;
            (out.x, out.trace)
        }
        MethodChoice::Bb => {
            let cfg = BBConfig {
                rounds: a.rounds,
                max_iters: a.max_iters.unwrap_or(BBConfig::default().max_iters),
                variant: match a.bb_variant {
                    VariantChoice::Long => BbVariant::Long,
                    VariantChoice::Short => BbVariant::Short,
                },
                ..BBConfig::default()
            };
            let out = bb_solve(&net, &meas, &x0, &cfg).map_err(usage)?;
            (out.x, out.trace)
        }
    };
    write_file(&a.out.join("trace.csv"), &trace_csv(&trace))?;
    write_file(
        &a.out.join("estimate.csv"),
        write_estimate(&x, net.p()).as_bytes(),
    )?;
    if let Some(last) = trace.last() {
        println!(
            "{} iterations, cost per sensor {:.6e}, {} scalars communicated{}",
            last.iter,
            last.cost_per_sensor,
            last.comm_scalars,
            last.mpe
                .map(|m| format!(", MPE {m:.6e}"))
                .unwrap_or_default()
        );
    }
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let mut spec = match &a.spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentSpec>(&text).map_err(|e| {
                CliError::Usage(format!(
                    "{}: line {}, column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?
        }
        None => ExperimentSpec::reference(a.seed.unwrap_or(1)),
    };
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(s) = &a.sigma {
        spec.sigmas = s.clone();
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(i) = a.init {
        spec.init = i;
    }
    if let Some(n) = a.n {
        spec.network.n = n;
    }
    if let Some(m) = a.mm_iters {
        spec.mm.max_iters = m;
    }
    if let Some(b) = a.bb_iters {
        spec.bb.max_iters = b;
    }
    let out = a
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bench_out"));
    let result = bench::run_experiment(&spec)?;
    bench::write_outputs(&result, &out)?;
    let mut table = Vec::new();
    bench::write_summary(&result, &mut table).expect("in-memory write");
    print!("{}", String::from_utf8_lossy(&table));
    println!("outputs in {}", out.display());
    Ok(())
}
