//! Graph operations: normalization, Laplacian low-pass filtering, and
//! k-nearest-neighbor index construction.

use crate::error::{McgcError, Result};
use crate::model::{Mat, MultiViewDataset, NormalizedView, Vec64, View};
use crate::parallel;

/// Low-pass filter parameters: H = (I - sL)^m X.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    /// Filter order m (number of applications of I - sL).
    pub order: usize,
    /// Filter strength s.
    pub strength: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            order: 2,
            strength: 0.5,
        }
    }
}

/// Per-view smoothed node representations H^v.
#[derive(Debug, Clone)]
pub struct SmoothedViews {
    pub representations: Vec<Mat>,
}

impl SmoothedViews {
    pub fn num_views(&self) -> usize {
        self.representations.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.representations.first().map_or(0, |h| h.nrows())
    }
}

/// Per-view kNN sets and their all-view intersection.
///
/// `per_view[v][i]` is the sorted list of node i's neighbors in view v,
/// self excluded; `shared[i]` is the intersection over views.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    pub per_view: Vec<Vec<Vec<usize>>>,
    pub shared: Vec<Vec<usize>>,
    pub k: usize,
}

/// Builds A = D^{-1/2} (adj + I) D^{-1/2} and L = I - A, with degrees taken
/// from the self-loop-augmented adjacency so every degree is positive.
pub fn normalize(view: &View) -> Result<NormalizedView> {
    let adj = view.adjacency.as_ref();
    let n = adj.nrows();

    let mut degree = Vec64::zeros(n);
    for i in 0..n {
        let d = adj.row(i).sum() + 1.0;
        if d <= 0.0 {
            return Err(McgcError::IsolatedNode { node: i });
        }
        degree[i] = d;
    }

    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut norm_adjacency = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let a = adj[(i, j)] + if i == j { 1.0 } else { 0.0 };
            norm_adjacency[(i, j)] = inv_sqrt[i] * a * inv_sqrt[j];
        }
    }

    let mut laplacian = -norm_adjacency.clone();
    for i in 0..n {
        laplacian[(i, i)] = 1.0 - norm_adjacency[(i, i)];
    }

    Ok(NormalizedView {
        norm_adjacency,
        laplacian,
        degree,
    })
}

/// Applies the m-th order low-pass filter H = (I - sL)^m X by m repeated
/// multiplications; the matrix power is never formed explicitly.
pub fn graph_filter(norm: &NormalizedView, features: &Mat, params: &FilterParams) -> Result<Mat> {
    let n = norm.laplacian.nrows();
    if features.nrows() != n {
        return Err(McgcError::Shape(format!(
            "features have {} rows but the graph has {n} nodes",
            features.nrows()
        )));
    }
    let mut h = features.clone();
    for _ in 0..params.order {
        h = &h - params.strength * (&norm.laplacian * &h);
    }
    Ok(h)
}

/// Normalizes and filters every view of a dataset.
pub fn smooth_views(dataset: &MultiViewDataset, params: &FilterParams) -> Result<SmoothedViews> {
    let mut representations = Vec::with_capacity(dataset.views.len());
    for view in &dataset.views {
        let norm = normalize(view)?;
        representations.push(graph_filter(&norm, view.features.as_ref(), params)?);
    }
    Ok(SmoothedViews { representations })
}

pub fn build_neighbors(smoothed: &SmoothedViews, k: usize) -> NeighborIndex {
    build_neighbors_with(smoothed, k, parallel::default_parallel())
}

/// kNN under Euclidean distance on rows of each H^v, ties broken by smaller
/// node index; `shared` is the exact per-node intersection across views.
pub fn build_neighbors_with(smoothed: &SmoothedViews, k: usize, parallel: bool) -> NeighborIndex {
    let n = smoothed.num_nodes();
    let per_view: Vec<Vec<Vec<usize>>> = smoothed
        .representations
        .iter()
        .map(|h| knn_rows(h, k, parallel))
        .collect();

    let shared: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut acc: Vec<usize> = per_view[0][i].clone();
            for view in &per_view[1..] {
                let set = &view[i];
                acc.retain(|x| set.binary_search(x).is_ok());
            }
            acc
        })
        .collect();

    NeighborIndex {
        per_view,
        shared,
        k,
    }
}

fn knn_rows(h: &Mat, k: usize, parallel: bool) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let eff_k = k.min(n.saturating_sub(1));
    parallel::map_indexed(n, parallel, |i| {
        let mut dist: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let d = (h.row(i) - h.row(j)).norm_squared();
                (d, j)
            })
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut ids: Vec<usize> = dist[..eff_k].iter().map(|&(_, j)| j).collect();
        ids.sort_unstable();
        ids
    })
}
