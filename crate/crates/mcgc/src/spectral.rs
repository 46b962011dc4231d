//! Spectral clustering on the learned graph: symmetrization, normalized-cut
//! embedding, and seeded k-means.

use crate::error::{McgcError, Result};
use crate::model::Mat;
use crate::parallel;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const DEGREE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct KMeansParams {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iter: 300,
        }
    }
}

/// Final clustering output: affinity, spectral embedding and labels.
#[derive(Debug, Clone)]
pub struct ClusterResult {
    pub affinity: Mat,
    pub embedding: Mat,
    pub labels: Vec<usize>,
}

/// C = (|S| + |S|^T) / 2, symmetric nonnegative by construction.
pub fn symmetrize(s: &Mat) -> Mat {
    let n = s.nrows();
    Mat::from_fn(n, n, |i, j| (s[(i, j)].abs() + s[(j, i)].abs()) / 2.0)
}

pub fn spectral_cluster(affinity: &Mat, num_clusters: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(cluster_with(affinity, num_clusters, seed, KMeansParams::default())?.labels)
}

/// Normalized-cut pipeline: symmetric normalized Laplacian, eigenvectors of
/// the `num_clusters` smallest eigenvalues, unit row normalization, k-means
/// with k-means++ seeding and best-inertia restart selection.
pub fn cluster_with(
    affinity: &Mat,
    num_clusters: usize,
    seed: u64,
    params: KMeansParams,
) -> Result<ClusterResult> {
    let n = affinity.nrows();
    if num_clusters < 2 {
        return Err(McgcError::Config("need at least 2 clusters".into()));
    }
    if n < num_clusters {
        return Err(McgcError::Config(format!(
            "cannot split {n} nodes into {num_clusters} clusters"
        )));
    }

    let embedding = embed(affinity, num_clusters)?;
    let labels = kmeans(&embedding, num_clusters, seed, params, parallel::default_parallel());
    Ok(ClusterResult {
        affinity: affinity.clone(),
        embedding,
        labels,
    })
}

fn embed(affinity: &Mat, num_clusters: usize) -> Result<Mat> {
    let n = affinity.nrows();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| 1.0 / affinity.row(i).sum().max(DEGREE_FLOOR).sqrt())
        .collect();
    let l_sym = Mat::from_fn(n, n, |i, j| {
        let norm = inv_sqrt_deg[i] * affinity[(i, j)] * inv_sqrt_deg[j];
        if i == j {
            1.0 - norm
        } else {
            -norm
        }
    });
    // exact symmetrization guards against roundoff drift before the eigensolve
    let l_sym = (&l_sym + l_sym.transpose()) * 0.5;

    let eig = l_sym
        .try_symmetric_eigen(1e-12, 10_000)
        .ok_or_else(|| McgcError::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut embedding = Mat::zeros(n, num_clusters);
    for (col, &idx) in order[..num_clusters].iter().enumerate() {
        embedding.set_column(col, &eig.eigenvectors.column(idx));
    }
    // unit row norms; all-zero rows stay zero
    for i in 0..n {
        let norm = embedding.row(i).norm();
        if norm > 0.0 {
            for c in 0..num_clusters {
                embedding[(i, c)] /= norm;
            }
        }
    }
    Ok(embedding)
}

fn kmeans(points: &Mat, k: usize, seed: u64, params: KMeansParams, parallel: bool) -> Vec<usize> {
    let runs = parallel::map_indexed(params.restarts, parallel, |restart| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        lloyd(points, k, &mut rng, params.max_iter)
    });
    // best inertia wins; ties go to the lower restart index
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 < runs[best].1 {
            best = i;
        }
    }
    runs[best].0.clone()
}

fn lloyd(points: &Mat, k: usize, rng: &mut ChaCha8Rng, max_iter: usize) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let d = points.ncols();
    let mut centers = kmeanspp_init(points, k, rng);
    let mut labels = vec![0usize; n];

    for _ in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = (points.row(i) - centers.row(c)).norm_squared();
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }

        let mut sums = Mat::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for c in 0..d {
                sums[(labels[i], c)] += points[(i, c)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for col in 0..d {
                    centers[(c, col)] = sums[(c, col)] / counts[c] as f64;
                }
            } else {
                // re-seed an empty cluster at the point farthest from its center
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = (points.row(a) - centers.row(labels[a])).norm_squared();
                        let db = (points.row(b) - centers.row(labels[b])).norm_squared();
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .unwrap();
                centers.set_row(c, &points.row(far));
            }
        }
        if !changed {
            break;
        }
    }

    let inertia: f64 = (0..n)
        .map(|i| (points.row(i) - centers.row(labels[i])).norm_squared())
        .sum();
    (labels, inertia)
}

fn kmeanspp_init(points: &Mat, k: usize, rng: &mut ChaCha8Rng) -> Mat {
    let n = points.nrows();
    let d = points.ncols();
    let mut centers = Mat::zeros(k, d);
    let first = rng.random_range(0..n);
    centers.set_row(0, &points.row(first));

    let mut dist2: Vec<f64> = (0..n)
        .map(|i| (points.row(i) - centers.row(0)).norm_squared())
        .collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.set_row(c, &points.row(pick));
        for i in 0..n {
            let dnew = (points.row(i) - centers.row(c)).norm_squared();
            if dnew < dist2[i] {
                dist2[i] = dnew;
            }
        }
    }
    centers
}
