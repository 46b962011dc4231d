//! End-to-end run: filter, learn the consensus graph, cluster, evaluate,
//! and assemble the machine-readable report.

use crate::error::Result;
use crate::metrics::{self, MetricReport};
use crate::model::MultiViewDataset;
use crate::solver::{self, SolverConfig};
use crate::spectral;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Config echo embedded in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub alpha: f64,
    pub m: usize,
    pub s: f64,
    pub k: usize,
    pub gamma: f64,
    pub lr: f64,
    pub max_epochs: usize,
    pub tol: f64,
    pub inner_steps: usize,
    pub seed: u64,
}

impl From<&SolverConfig> for ConfigEcho {
    fn from(c: &SolverConfig) -> Self {
        Self {
            alpha: c.alpha,
            m: c.filter.order,
            s: c.filter.strength,
            k: c.k,
            gamma: c.gamma,
            lr: c.learning_rate,
            max_epochs: c.max_epochs,
            tol: c.tol,
            inner_steps: c.inner_steps,
            seed: c.seed,
        }
    }
}

/// Wall-clock seconds per phase. Excluded from determinism comparisons.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub solve_seconds: f64,
    pub cluster_seconds: f64,
}

/// One run's full output: config echo, objective trace, final weights,
/// timings, predicted labels, and metrics when ground truth exists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: String,
    pub config: ConfigEcho,
    pub objective_trace: Vec<f64>,
    pub lambda: Vec<f64>,
    pub labels: Vec<usize>,
    pub timing: Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Runs the whole pipeline on an in-memory dataset.
pub fn run(dataset: &MultiViewDataset, config: &SolverConfig) -> Result<RunReport> {
    let solve_start = Instant::now();
    let state = solver::solve(dataset, config)?;
    let solve_seconds = solve_start.elapsed().as_secs_f64();

    let cluster_start = Instant::now();
    let affinity = spectral::symmetrize(&state.s_matrix);
    let labels = spectral::spectral_cluster(&affinity, dataset.num_clusters, config.seed)?;
    let cluster_seconds = cluster_start.elapsed().as_secs_f64();

    let metrics = match &dataset.labels {
        Some(truth) => Some(metrics::evaluate(truth, &labels)?),
        None => None,
    };

    Ok(RunReport {
        variant: config.variant.name(),
        config: ConfigEcho::from(config),
        objective_trace: state.objective_trace,
        lambda: state.weights,
        labels,
        timing: Timings {
            solve_seconds,
            cluster_seconds,
        },
        metrics,
        error: None,
    })
}

/// Trace CSV: epoch, objective, lambda_1..lambda_V (final weights echoed
/// on each row for plotting convenience).
pub fn trace_csv(report: &RunReport) -> String {
    let mut out = String::from("epoch,objective");
    for v in 1..=report.lambda.len() {
        out.push_str(&format!(",lambda_{v}"));
    }
    out.push('\n');
    for (epoch, obj) in report.objective_trace.iter().enumerate() {
        out.push_str(&format!("{epoch},{obj}"));
        for w in &report.lambda {
            out.push_str(&format!(",{w}"));
        }
        out.push('\n');
    }
    out
}
