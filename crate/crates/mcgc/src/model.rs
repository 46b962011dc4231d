//! Shared data model: multi-view attributed graphs and their normalized forms.

use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

pub type Mat = DMatrix<f64>;
pub type Vec64 = DVector<f64>;

/// One (graph, feature-matrix) pair over the shared node set.
///
/// Matrices sit behind `Arc` so views may share a graph or a feature matrix
/// by reference, as some datasets do.
#[derive(Debug, Clone)]
pub struct View {
    /// Symmetric nonnegative adjacency with zero diagonal; self-loops are
    /// added during normalization, never stored.
    pub adjacency: Arc<Mat>,
    /// Dense N x d feature matrix, row i = node i.
    pub features: Arc<Mat>,
}

impl View {
    pub fn new(adjacency: Mat, features: Mat) -> Self {
        Self {
            adjacency: Arc::new(adjacency),
            features: Arc::new(features),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Multi-view attributed graph dataset: V views over N shared nodes,
/// optional ground-truth labels, and the target cluster count.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    pub num_nodes: usize,
    pub views: Vec<View>,
    pub labels: Option<Vec<usize>>,
    pub num_clusters: usize,
}

impl MultiViewDataset {
    pub fn num_views(&self) -> usize {
        self.views.len()
    }
}

/// Normalized form of one view: A = D^{-1/2} (adj + I) D^{-1/2}, L = I - A.
#[derive(Debug, Clone)]
pub struct NormalizedView {
    pub norm_adjacency: Mat,
    pub laplacian: Mat,
    /// Diagonal of the self-loop-augmented degree matrix.
    pub degree: Vec64,
}

/// One broken invariant, with the offending view when applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub view: Option<usize>,
    pub reason: String,
}

impl Violation {
    fn global(reason: impl Into<String>) -> Self {
        Self {
            view: None,
            reason: reason.into(),
        }
    }

    fn in_view(view: usize, reason: impl Into<String>) -> Self {
        Self {
            view: Some(view),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.view {
            Some(v) => write!(f, "view {}: {}", v, self.reason),
            None => write!(f, "{}", self.reason),
        }
    }
}

/// Checks every structural invariant and returns the full list of
/// violations; an empty list means the dataset is well formed.
pub fn validate_dataset(dataset: &MultiViewDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = dataset.num_nodes;
    let c = dataset.num_clusters;

    if dataset.views.is_empty() {
        out.push(Violation::global("dataset has no views (V >= 1 required)"));
    }
    if c < 2 {
        out.push(Violation::global(format!(
            "num_clusters must be >= 2, got {c}"
        )));
    }
    if n < c {
        out.push(Violation::global(format!(
            "num_nodes {n} is smaller than num_clusters {c}"
        )));
    }

    for (v, view) in dataset.views.iter().enumerate() {
        let adj = view.adjacency.as_ref();
        if adj.nrows() != n || adj.ncols() != n {
            out.push(Violation::in_view(
                v,
                format!(
                    "adjacency is {}x{}, expected {n}x{n}",
                    adj.nrows(),
                    adj.ncols()
                ),
            ));
            continue;
        }
        let mut asymmetric = false;
        let mut negative = false;
        let mut nonzero_diag = false;
        for i in 0..n {
            if adj[(i, i)] != 0.0 {
                nonzero_diag = true;
            }
            for j in (i + 1)..n {
                if adj[(i, j)] != adj[(j, i)] {
                    asymmetric = true;
                }
                if adj[(i, j)] < 0.0 || adj[(j, i)] < 0.0 {
                    negative = true;
                }
            }
        }
        if asymmetric {
            out.push(Violation::in_view(v, "asymmetric adjacency"));
        }
        if negative {
            out.push(Violation::in_view(v, "negative adjacency entry"));
        }
        if nonzero_diag {
            out.push(Violation::in_view(v, "nonzero diagonal (self-loop stored)"));
        }

        let feats = view.features.as_ref();
        if feats.nrows() != n {
            out.push(Violation::in_view(
                v,
                format!("feature matrix has {} rows, expected {n}", feats.nrows()),
            ));
        }
        if feats.iter().any(|x| !x.is_finite()) {
            out.push(Violation::in_view(v, "non-finite feature entry"));
        }
    }

    if let Some(labels) = &dataset.labels {
        if labels.len() != n {
            out.push(Violation::global(format!(
                "labels have length {}, expected {n}",
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y >= c) {
            out.push(Violation::global("label out of range"));
        }
    }

    out
}
