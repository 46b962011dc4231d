//! External clustering validity indices: ACC, NMI, ARI and macro-F1, all
//! under optimal label matching where relevant.

use crate::error::{McgcError, Result};
use serde::{Deserialize, Serialize};

/// Joint label-count table between two partitions.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub row_marginals: Vec<usize>,
    pub col_marginals: Vec<usize>,
    pub total: usize,
}

impl ContingencyTable {
    pub fn from_labels(y_true: &[usize], y_pred: &[usize]) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(McgcError::LengthMismatch {
                left: y_true.len(),
                right: y_pred.len(),
            });
        }
        let rows = y_true.iter().max().map_or(0, |&m| m + 1);
        let cols = y_pred.iter().max().map_or(0, |&m| m + 1);
        let mut counts = vec![vec![0usize; cols]; rows];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            counts[t][p] += 1;
        }
        let row_marginals: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_marginals: Vec<usize> = (0..cols).map(|c| counts.iter().map(|r| r[c]).sum()).collect();
        Ok(Self {
            counts,
            row_marginals,
            col_marginals,
            total: y_true.len(),
        })
    }
}

/// Minimum-cost assignment on a square cost matrix (Hungarian algorithm with
/// row/column potentials, O(n^3)). Returns, for each row, its assigned column.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(cost.iter().all(|r| r.len() == n));

    // 1-based potentials over rows (u) and columns (v); way[j] remembers the
    // column from which column j was reached in the augmenting search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut assignment = vec![0usize; n + 1]; // column -> row
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        assignment[0] = row;
        let mut current_col = 0usize;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[current_col] = true;
            let row_here = assignment[current_col];
            let mut delta = f64::INFINITY;
            let mut next_col = 0usize;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[row_here - 1][col - 1] - u[row_here] - v[col];
                if reduced < min_to[col] {
                    min_to[col] = reduced;
                    way[col] = current_col;
                }
                if min_to[col] < delta {
                    delta = min_to[col];
                    next_col = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[assignment[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_to[col] -= delta;
                }
            }
            current_col = next_col;
            if assignment[current_col] == 0 {
                break;
            }
        }
        // unwind the augmenting path
        while current_col != 0 {
            let prev = way[current_col];
            assignment[current_col] = assignment[prev];
            current_col = prev;
        }
    }

    let mut row_to_col = vec![0usize; n];
    for col in 1..=n {
        if assignment[col] != 0 {
            row_to_col[assignment[col] - 1] = col - 1;
        }
    }
    row_to_col
}

// Optimal matching of predicted labels onto true labels, maximizing matched
// counts. Returns pred label -> Some(true label) for matched columns.
fn optimal_alignment(table: &ContingencyTable) -> Vec<Option<usize>> {
    let rows = table.counts.len();
    let cols = table.col_marginals.len();
    let dim = rows.max(cols);
    let cost: Vec<Vec<f64>> = (0..dim)
        .map(|r| {
            (0..dim)
                .map(|c| {
                    if r < rows && c < cols {
                        -(table.counts[r][c] as f64)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let row_to_col = hungarian(&cost);
    let mut pred_to_true = vec![None; cols];
    for (r, &c) in row_to_col.iter().enumerate() {
        if r < rows && c < cols {
            pred_to_true[c] = Some(r);
        }
    }
    pred_to_true
}

/// Clustering accuracy: the matched fraction under the best one-to-one
/// relabeling of predictions, found exactly by the Hungarian algorithm.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::from_labels(y_true, y_pred)?;
    if table.total == 0 {
        return Ok(1.0);
    }
    let alignment = optimal_alignment(&table);
    let matched: usize = alignment
        .iter()
        .enumerate()
        .filter_map(|(p, t)| t.map(|t| table.counts[t][p]))
        .sum();
    Ok(matched as f64 / table.total as f64)
}

fn entropy(marginals: &[usize], total: f64) -> f64 {
    marginals
        .iter()
        .filter(|&&m| m > 0)
        .map(|&m| {
            let p = m as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization and
/// natural logs. Identical partitions score 1 (including the all-one-cluster
/// case); a zero-entropy partition against a different one scores 0.
pub fn nmi(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::from_labels(y_true, y_pred)?;
    let n = table.total as f64;
    if table.total == 0 {
        return Ok(1.0);
    }
    let h_true = entropy(&table.row_marginals, n);
    let h_pred = entropy(&table.col_marginals, n);
    if h_true == 0.0 && h_pred == 0.0 {
        return Ok(1.0);
    }
    if h_true == 0.0 || h_pred == 0.0 {
        return Ok(0.0);
    }
    let mut mutual = 0.0;
    for (t, row) in table.counts.iter().enumerate() {
        for (p, &count) in row.iter().enumerate() {
            if count > 0 {
                let pij = count as f64 / n;
                let pi = table.row_marginals[t] as f64 / n;
                let pj = table.col_marginals[p] as f64 / n;
                mutual += pij * (pij / (pi * pj)).ln();
            }
        }
    }
    Ok(mutual / ((h_true + h_pred) / 2.0))
}

fn choose2(x: usize) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index from pair counts; the degenerate 0/0 case (both
/// partitions trivial) scores 1 by convention.
pub fn ari(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::from_labels(y_true, y_pred)?;
    let sum_ij: f64 = table
        .counts
        .iter()
        .flat_map(|r| r.iter())
        .map(|&c| choose2(c))
        .sum();
    let sum_rows: f64 = table.row_marginals.iter().map(|&m| choose2(m)).sum();
    let sum_cols: f64 = table.col_marginals.iter().map(|&m| choose2(m)).sum();
    let pairs = choose2(table.total);
    if pairs == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_rows * sum_cols / pairs;
    let max_term = (sum_rows + sum_cols) / 2.0;
    if (max_term - expected).abs() == 0.0 {
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max_term - expected))
}

// Reorder columns by content so the assignment cannot depend on the arbitrary
// numbering of predicted labels: when the optimal matching is tied, different
// relabelings of the same prediction would otherwise align differently and
// change the macro-F1. Sorting makes the table itself relabeling-invariant
// (identical columns are interchangeable in the F1).
fn canonical_columns(table: ContingencyTable) -> ContingencyTable {
    let cols = table.col_marginals.len();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| {
        let column = |c: usize| table.counts.iter().map(move |row| row[c]);
        column(b).cmp(column(a))
    });
    let counts: Vec<Vec<usize>> = table
        .counts
        .iter()
        .map(|row| order.iter().map(|&c| row[c]).collect())
        .collect();
    let col_marginals: Vec<usize> = order.iter().map(|&c| table.col_marginals[c]).collect();
    ContingencyTable {
        counts,
        row_marginals: table.row_marginals,
        col_marginals,
        total: table.total,
    }
}

/// Macro-F1 over true classes after Hungarian alignment of predictions.
/// Classes with no aligned predictions contribute an F1 of 0.
pub fn f1(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = canonical_columns(ContingencyTable::from_labels(y_true, y_pred)?);
    if table.total == 0 {
        return Ok(1.0);
    }
    let alignment = optimal_alignment(&table);
    let num_true = table.counts.len();

    // per true class t: TP / predicted-as-t and TP / actually-t
    let mut score_sum = 0.0;
    for t in 0..num_true {
        let mut tp = 0usize;
        let mut predicted = 0usize;
        for (p, mapped) in alignment.iter().enumerate() {
            if *mapped == Some(t) {
                tp += table.counts[t][p];
                predicted += table.col_marginals[p];
            }
        }
        let actual = table.row_marginals[t];
        if tp == 0 {
            continue;
        }
        let precision = tp as f64 / predicted as f64;
        let recall = tp as f64 / actual as f64;
        score_sum += 2.0 * precision * recall / (precision + recall);
    }
    Ok(score_sum / num_true as f64)
}

/// All four indices in one report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub f1: f64,
}

pub fn evaluate(y_true: &[usize], y_pred: &[usize]) -> Result<MetricReport> {
    Ok(MetricReport {
        acc: accuracy(y_true, y_pred)?,
        nmi: nmi(y_true, y_pred)?,
        ari: ari(y_true, y_pred)?,
        f1: f1(y_true, y_pred)?,
    })
}
