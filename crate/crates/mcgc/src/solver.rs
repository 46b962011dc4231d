//! Consensus-graph learning: alternating optimization of the learned graph S
//! and adaptive view weights, with a graph-level contrastive regularizer.

use crate::error::{McgcError, Result};
use crate::graph::{self, NeighborIndex, SmoothedViews};
use crate::model::{validate_dataset, Mat, MultiViewDataset};
use crate::parallel;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

const LAMBDA_LOSS_FLOOR: f64 = 1e-12;

/// Solver mode: the full model or one of its ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Full model: filtering, per-view kNN contrastive term, adaptive weights.
    Full,
    /// Contrastive term restricted to neighbors shared by all views.
    SharedNeighbors,
    /// Contrastive term replaced by a Frobenius penalty; S solved in closed form.
    NoContrastive,
    /// No graph filtering: raw features enter the objective directly.
    NoFilter,
    /// Single-view model on view v, fixed unit weight.
    SingleView(usize),
}

impl Variant {
    pub fn name(&self) -> String {
        match self {
            Variant::Full => "full".into(),
            Variant::SharedNeighbors => "shared_neighbors".into(),
            Variant::NoContrastive => "no_contrastive".into(),
            Variant::NoFilter => "no_filter".into(),
            Variant::SingleView(v) => format!("single_view_{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Trade-off between reconstruction and the regularizer.
    pub alpha: f64,
    /// Weight-smoothing exponent; must be negative.
    pub gamma: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Relative-objective-change stopping tolerance.
    pub tol: f64,
    /// Adam steps per outer epoch.
    pub inner_steps: usize,
    pub seed: u64,
    pub variant: Variant,
    pub filter: graph::FilterParams,
    /// Neighbor count for the contrastive term.
    pub k: usize,
}

impl SolverConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            gamma: -4.0,
            learning_rate: 0.01,
            max_epochs: 200,
            tol: 1e-4,
            inner_steps: 50,
            seed: 0,
            variant: Variant::Full,
            filter: graph::FilterParams::default(),
            k: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha <= 0.0 {
            return Err(McgcError::Config("alpha must be positive".into()));
        }
        if self.gamma >= 0.0 {
            return Err(McgcError::Config("gamma must be negative".into()));
        }
        if self.learning_rate <= 0.0 || self.tol <= 0.0 {
            return Err(McgcError::Config(
                "learning_rate and tol must be positive".into(),
            ));
        }
        if self.max_epochs == 0 || self.inner_steps == 0 || self.k == 0 {
            return Err(McgcError::Config(
                "max_epochs, inner_steps and k must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Adam accumulators for the entries of S.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first_moment: Mat,
    pub second_moment: Mat,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            first_moment: Mat::zeros(n, n),
            second_moment: Mat::zeros(n, n),
            step_count: 0,
        }
    }

    /// One bias-corrected Adam step on every entry of `s`.
    pub fn step(&mut self, s: &mut Mat, grad: &Mat, lr: f64) {
        self.step_count += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.step_count as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.step_count as i32);
        for (idx, g) in grad.iter().enumerate() {
            let m = ADAM_BETA1 * self.first_moment[idx] + (1.0 - ADAM_BETA1) * g;
            let v = ADAM_BETA2 * self.second_moment[idx] + (1.0 - ADAM_BETA2) * g * g;
            self.first_moment[idx] = m;
            self.second_moment[idx] = v;
            s[idx] -= lr * (m / bc1) / ((v / bc2).sqrt() + ADAM_EPS);
        }
    }
}

/// Solver output: the learned graph, view weights, losses and trace.
#[derive(Debug, Clone)]
pub struct ConsensusState {
    pub s_matrix: Mat,
    /// One weight per active view (a single entry in single-view mode).
    pub weights: Vec<f64>,
    /// M^v: per-view reconstruction-plus-regularizer loss.
    pub per_view_loss: Vec<f64>,
    /// Final value of the contrastive regularizer summed over active views.
    pub contrastive_loss: f64,
    /// Total objective per outer epoch, starting at the initial point.
    pub objective_trace: Vec<f64>,
    pub adam: AdamState,
}

// A variant resolved against a concrete dataset: which views are active,
// which neighbor table each active view uses, and how S is regularized.
struct Resolved<'a> {
    h: Vec<&'a Mat>,
    nbrs: Vec<&'a Vec<Vec<usize>>>,
    frobenius: bool,
}

fn resolve<'a>(
    smoothed: &'a SmoothedViews,
    neighbors: &'a NeighborIndex,
    variant: Variant,
) -> Result<Resolved<'a>> {
    let v_count = smoothed.num_views();
    match variant {
        Variant::SingleView(v) => {
            if v >= v_count {
                return Err(McgcError::Config(format!(
                    "single_view index {v} out of range for {v_count} views"
                )));
            }
            Ok(Resolved {
                h: vec![&smoothed.representations[v]],
                nbrs: vec![&neighbors.per_view[v]],
                frobenius: false,
            })
        }
        Variant::SharedNeighbors => Ok(Resolved {
            h: smoothed.representations.iter().collect(),
            nbrs: vec![&neighbors.shared; v_count],
            frobenius: false,
        }),
        Variant::NoContrastive => Ok(Resolved {
            h: smoothed.representations.iter().collect(),
            nbrs: neighbors.per_view.iter().collect(),
            frobenius: true,
        }),
        Variant::Full | Variant::NoFilter => Ok(Resolved {
            h: smoothed.representations.iter().collect(),
            nbrs: neighbors.per_view.iter().collect(),
            frobenius: false,
        }),
    }
}

/// Closed-form minimizer of the weighted self-expression objective with a
/// Frobenius penalty: (sum_v w_v (H H^T + alpha I))^{-1} (sum_v w_v H H^T),
/// via a Cholesky solve of the SPD system.
pub fn init_closed_form(smoothed: &SmoothedViews, weights: &[f64], alpha: f64) -> Result<Mat> {
    assert_eq!(smoothed.num_views(), weights.len());
    let n = smoothed.num_nodes();
    let mut lhs = Mat::zeros(n, n);
    let mut rhs = Mat::zeros(n, n);
    let mut weight_sum = 0.0;
    for (h, &w) in smoothed.representations.iter().zip(weights) {
        let gram = h * h.transpose();
        lhs += w * &gram;
        rhs += w * gram;
        weight_sum += w;
    }
    for i in 0..n {
        lhs[(i, i)] += alpha * weight_sum;
    }
    let chol = lhs
        .cholesky()
        .ok_or_else(|| McgcError::Numerical("SPD solve failed in closed-form init".into()))?;
    Ok(chol.solve(&rhs))
}

// Row-wise max-shifted log-sum-exp over off-diagonal entries, plus the
// shifted partition data needed by the gradient.
fn row_softmax_stats(s: &Mat, parallel: bool) -> Vec<(f64, Vec<f64>)> {
    let n = s.nrows();
    parallel::map_indexed(n, parallel, |i| {
        let mut max = f64::NEG_INFINITY;
        for p in 0..n {
            if p != i && s[(i, p)] > max {
                max = s[(i, p)];
            }
        }
        let mut exps = vec![0.0; n];
        let mut sum = 0.0;
        for p in 0..n {
            if p != i {
                let e = (s[(i, p)] - max).exp();
                exps[p] = e;
                sum += e;
            }
        }
        // log-sum-exp of the row; exps left unnormalized, sum carried along
        let lse = max + sum.ln();
        exps.push(sum); // stash the partition sum at index n
        (lse, exps)
    })
}

pub fn contrastive_loss(s: &Mat, neighbors: &NeighborIndex, variant: Variant) -> Result<Vec<f64>> {
    contrastive_loss_with(s, neighbors, variant, parallel::default_parallel())
}

/// Per-view contrastive losses J^v (overflow-safe log-sum-exp). In the
/// Frobenius ablation this is the squared Frobenius norm of S for each view;
/// in single-view mode the result has a single entry.
pub fn contrastive_loss_with(
    s: &Mat,
    neighbors: &NeighborIndex,
    variant: Variant,
    parallel: bool,
) -> Result<Vec<f64>> {
    let nbrs = resolve_nbrs(neighbors, variant)?;
    if let Variant::NoContrastive = variant {
        let f2 = s.norm_squared();
        return Ok(vec![f2; nbrs.len()]);
    }
    let stats = row_softmax_stats(s, parallel);
    Ok(nbrs
        .iter()
        .map(|table| {
            let mut total = 0.0;
            for (i, row) in table.iter().enumerate() {
                for &j in row {
                    total += stats[i].0 - s[(i, j)];
                }
            }
            total
        })
        .collect())
}

fn resolve_nbrs<'a>(
    neighbors: &'a NeighborIndex,
    variant: Variant,
) -> Result<Vec<&'a Vec<Vec<usize>>>> {
    let v_count = neighbors.per_view.len();
    match variant {
        Variant::SingleView(v) => {
            if v >= v_count {
                return Err(McgcError::Config(format!(
                    "single_view index {v} out of range for {v_count} views"
                )));
            }
            Ok(vec![&neighbors.per_view[v]])
        }
        Variant::SharedNeighbors => Ok(vec![&neighbors.shared; v_count]),
        _ => Ok(neighbors.per_view.iter().collect()),
    }
}

pub fn gradient_s(
    s: &Mat,
    smoothed: &SmoothedViews,
    neighbors: &NeighborIndex,
    weights: &[f64],
    alpha: f64,
    variant: Variant,
) -> Result<Mat> {
    let resolved = resolve(smoothed, neighbors, variant)?;
    let grams: Vec<Mat> = resolved.h.iter().map(|h| *h * h.transpose()).collect();
    Ok(gradient_resolved(
        s,
        &grams,
        &resolved,
        weights,
        alpha,
        parallel::default_parallel(),
    ))
}

// Exact analytic gradient of the S-dependent part of the objective.
fn gradient_resolved(
    s: &Mat,
    grams: &[Mat],
    resolved: &Resolved<'_>,
    weights: &[f64],
    alpha: f64,
    parallel: bool,
) -> Mat {
    assert_eq!(grams.len(), weights.len());
    let n = s.nrows();

    // reconstruction term: 2 sum_v w_v (G_v S - G_v)
    let mut weighted_gram = Mat::zeros(n, n);
    for (g, &w) in grams.iter().zip(weights) {
        weighted_gram += w * g;
    }
    let mut grad = 2.0 * (&weighted_gram * s - weighted_gram);

    if resolved.frobenius {
        let weight_sum: f64 = weights.iter().sum();
        grad += (2.0 * alpha * weight_sum) * s;
        return grad;
    }

    let stats = row_softmax_stats(s, parallel);
    let reg_rows = parallel::map_indexed(n, parallel, |i| {
        let exps = &stats[i].1;
        let partition = exps[n];
        let mut row = vec![0.0; n];
        for (table, &w) in resolved.nbrs.iter().zip(weights) {
            let count = table[i].len() as f64;
            for p in 0..n {
                if p != i {
                    row[p] += w * count * exps[p] / partition;
                }
            }
            for &j in &table[i] {
                row[j] -= w;
            }
        }
        row
    });
    for (i, row) in reg_rows.iter().enumerate() {
        for p in 0..n {
            grad[(i, p)] += alpha * row[p];
        }
    }
    grad
}

/// S-dependent part of the objective: sum_v w_v (||H^T - H^T S||_F^2 + alpha reg_v).
pub fn objective_s(
    s: &Mat,
    smoothed: &SmoothedViews,
    neighbors: &NeighborIndex,
    weights: &[f64],
    alpha: f64,
    variant: Variant,
) -> Result<f64> {
    let resolved = resolve(smoothed, neighbors, variant)?;
    let rec = reconstruction_losses(s, &resolved.h);
    let reg = contrastive_loss(s, neighbors, variant)?;
    Ok(rec
        .iter()
        .zip(&reg)
        .zip(weights)
        .map(|((r, j), w)| w * (r + alpha * j))
        .sum())
}

fn reconstruction_losses(s: &Mat, h: &[&Mat]) -> Vec<f64> {
    h.iter()
        .map(|h| {
            let ht = h.transpose();
            (&ht - &ht * s).norm_squared()
        })
        .collect()
}

/// Stationary view weights for fixed per-view losses: w = (-M/gamma)^{1/(gamma-1)}.
/// Losses are floored at 1e-12 to keep the weight finite on a perfectly fit view.
pub fn update_lambda(per_view_loss: &[f64], gamma: f64) -> Vec<f64> {
    per_view_loss
        .iter()
        .map(|&m| {
            let m = if m < LAMBDA_LOSS_FLOOR {
                log::warn!("per-view loss {m:.3e} clamped to {LAMBDA_LOSS_FLOOR:.0e} for the weight update");
                LAMBDA_LOSS_FLOOR
            } else {
                m
            };
            (m / (-gamma)).powf(1.0 / (gamma - 1.0))
        })
        .collect()
}

/// Runs `inner_steps` Adam iterations on S against the current gradient.
pub fn update_s(
    s: &mut Mat,
    adam: &mut AdamState,
    smoothed: &SmoothedViews,
    neighbors: &NeighborIndex,
    weights: &[f64],
    alpha: f64,
    variant: Variant,
    lr: f64,
    inner_steps: usize,
) -> Result<()> {
    let resolved = resolve(smoothed, neighbors, variant)?;
    let grams: Vec<Mat> = resolved.h.iter().map(|h| *h * h.transpose()).collect();
    let parallel = parallel::default_parallel();
    for _ in 0..inner_steps {
        let grad = gradient_resolved(s, &grams, &resolved, weights, alpha, parallel);
        adam.step(s, &grad, lr);
    }
    Ok(())
}

/// Full alternating optimization (weights start at 1, S at the closed-form
/// initializer, then Adam-on-S / closed-form-weights until the relative
/// objective change drops below `tol`).
pub fn solve(dataset: &MultiViewDataset, config: &SolverConfig) -> Result<ConsensusState> {
    config.validate()?;
    let violations = validate_dataset(dataset);
    if !violations.is_empty() {
        return Err(McgcError::InvalidDataset(violations));
    }
    if let Variant::SingleView(v) = config.variant {
        if v >= dataset.num_views() {
            return Err(McgcError::Config(format!(
                "single_view index {v} out of range for {} views",
                dataset.num_views()
            )));
        }
    }

    let smoothed_all = match config.variant {
        Variant::NoFilter => SmoothedViews {
            representations: dataset
                .views
                .iter()
                .map(|v| v.features.as_ref().clone())
                .collect(),
        },
        _ => graph::smooth_views(dataset, &config.filter)?,
    };

    // Restrict to the active view in single-view mode, then treat the
    // subproblem uniformly.
    let (smoothed, variant, adaptive_weights) = match config.variant {
        Variant::SingleView(v) => (
            SmoothedViews {
                representations: vec![smoothed_all.representations[v].clone()],
            },
            Variant::Full,
            false,
        ),
        other => (smoothed_all, other, true),
    };

    let neighbors = graph::build_neighbors(&smoothed, config.k);
    let resolved = resolve(&smoothed, &neighbors, variant)?;
    let grams: Vec<Mat> = resolved.h.iter().map(|h| *h * h.transpose()).collect();
    let v_count = resolved.h.len();
    let parallel = parallel::default_parallel();

    let mut weights = vec![1.0; v_count];
    let mut s = init_closed_form(&smoothed, &weights, config.alpha)?;
    let mut adam = AdamState::new(dataset.num_nodes);

    let losses = |s: &Mat, reg: &[f64]| -> Vec<f64> {
        reconstruction_losses(s, &resolved.h)
            .iter()
            .zip(reg)
            .map(|(r, j)| r + config.alpha * j)
            .collect()
    };
    let total = |m: &[f64], w: &[f64]| -> f64 {
        let fit: f64 = m.iter().zip(w).map(|(m, w)| w * m).sum();
        if adaptive_weights {
            fit + w.iter().map(|w| w.powf(config.gamma)).sum::<f64>()
        } else {
            fit
        }
    };

    let mut reg = contrastive_loss_with(&s, &neighbors, variant, parallel)?;
    let mut per_view_loss = losses(&s, &reg);
    let mut objective = total(&per_view_loss, &weights);
    if !objective.is_finite() {
        return Err(McgcError::Divergence { epoch: 0 });
    }
    let mut trace = vec![objective];

    for epoch in 1..=config.max_epochs {
        if resolved.frobenius {
            s = init_closed_form(&smoothed, &weights, config.alpha)?;
        } else {
            for _ in 0..config.inner_steps {
                let grad = gradient_resolved(&s, &grams, &resolved, &weights, config.alpha, parallel);
                adam.step(&mut s, &grad, config.learning_rate);
            }
        }

        reg = contrastive_loss_with(&s, &neighbors, variant, parallel)?;
        per_view_loss = losses(&s, &reg);
        if adaptive_weights {
            weights = update_lambda(&per_view_loss, config.gamma);
        }

        let prev = objective;
        objective = total(&per_view_loss, &weights);
        if !objective.is_finite() {
            return Err(McgcError::Divergence { epoch });
        }
        trace.push(objective);
        log::debug!("epoch {epoch}: objective {objective:.6e}");

        if (objective - prev).abs() / prev.abs().max(f64::MIN_POSITIVE) < config.tol {
            break;
        }
    }

    let contrastive_total = if resolved.frobenius {
        0.0
    } else {
        reg.iter().sum()
    };
    Ok(ConsensusState {
        s_matrix: s,
        weights,
        per_view_loss,
        contrastive_loss: contrastive_total,
        objective_trace: trace,
        adam,
    })
}
