//! Accuracy metrics and per-run traces shared by every solver.

use std::io::{self, Write};

use crate::vecops::{block, dist};

/// Mean positioning error per sensor over a set of Monte-Carlo estimates:
/// `(1 / (n·MC)) Σ_mc Σ_i ‖x̂_i(mc) − x_i★‖`.
pub fn mpe(estimates: &[Vec<f64>], truth: &[f64], p: usize) -> f64 {
    let n = truth.len() / p;
    if estimates.is_empty() || n == 0 {
        return 0.0;
    }
    let total: f64 = estimates
        .iter()
        .map(|x| {
            assert_eq!(x.len(), truth.len(), "estimate length");
            (0..n)
                .map(|i| dist(block(x, i, p), block(truth, i, p)))
                .sum::<f64>()
        })
        .sum();
    total / (n * estimates.len()) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    /// `cost_original(x) / n`.
    pub cost_per_sensor: f64,
    /// Reformulated cost of the full iterate; equals `cost_original` for
    /// methods that only carry positions.
    pub cost_z: f64,
    /// Cumulative scalars communicated up to and including this iteration.
    pub comm_scalars: u64,
    pub mpe: Option<f64>,
}

/// Per-iteration record of a run; entry 0 is the initial point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub entries: Vec<TraceEntry>,
}

impl RunTrace {
    pub fn push(&mut self, entry: TraceEntry) {
        self.entries.push(entry);
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }

    pub fn iterations(&self) -> usize {
        self.entries.last().map_or(0, |e| e.iter)
    }

    /// True when `cost_z` never rises by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].cost_z <= w[0].cost_z + slack)
    }

    /// CSV with header `iter,comm_scalars,cost_per_sensor,cost_z,mpe`.
    /// Floats use ten significant digits; an absent MPE is an empty field.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "iter,comm_scalars,cost_per_sensor,cost_z,mpe")?;
        for e in &self.entries {
            write!(
                out,
                "{},{},{:.9e},{:.9e},",
                e.iter, e.comm_scalars, e.cost_per_sensor, e.cost_z
            )?;
            if let Some(m) = e.mpe {
                write!(out, "{m:.9e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Stops once the relative decrease of the tracked cost stays below `tol`
/// for `window` consecutive iterations.
#[derive(Debug, Clone)]
pub struct StallDetector {
    tol: f64,
    window: usize,
    streak: usize,
}

impl StallDetector {
    pub const WINDOW: usize = 10;

    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            window: Self::WINDOW,
            streak: 0,
        }
    }

    /// Feeds one transition `prev → cur`; returns true when the run should stop.
    pub fn update(&mut self, prev: f64, cur: f64) -> bool {
        let rel = if prev > 0.0 { (prev - cur) / prev } else { 0.0 };
        if rel < self.tol {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.window
    }
}
