//! On-disk dataset format: JSON manifest, MatrixMarket graph/feature files,
//! plain-text labels, and a synthetic attributed-SBM generator.

use crate::error::{McgcError, Result};
use crate::model::{validate_dataset, Mat, MultiViewDataset, View};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// `manifest.json` layout. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub num_clusters: usize,
    pub views: Vec<ViewPaths>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewPaths {
    pub graph: String,
    pub features: String,
}

fn parse_err(file: &Path, line: usize, reason: impl Into<String>) -> McgcError {
    McgcError::Parse {
        file: file.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

// ---------------------------------------------------------------------------
// MatrixMarket

/// Reads a `coordinate symmetric` MatrixMarket graph (1-based, `pattern`,
/// `real` or `integer` entries) into a dense symmetric matrix.
pub fn read_graph_mm(path: &Path) -> Result<Mat> {
    let file = fs::File::open(path).map_err(|e| parse_err(path, 0, e.to_string()))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 5 || tokens[0] != "%%MatrixMarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, 1, "expected a %%MatrixMarket matrix header"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(path, 1, "graph files must use coordinate format"));
    }
    let pattern = match tokens[3] {
        "pattern" => true,
        "real" | "integer" => false,
        other => return Err(parse_err(path, 1, format!("unsupported field type {other}"))),
    };
    if tokens[4] != "symmetric" {
        return Err(parse_err(path, 1, "graph files must carry the symmetric qualifier"));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut matrix = Mat::zeros(0, 0);
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(path, lineno, "size line must be `rows cols nnz`"));
                }
                let rows: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad row count"))?;
                let cols: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad column count"))?;
                let nnz: usize = fields[2]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad entry count"))?;
                if rows != cols {
                    return Err(parse_err(path, lineno, "graph must be square"));
                }
                matrix = Mat::zeros(rows, rows);
                size = Some((rows, cols, nnz));
            }
            Some((rows, _, _)) => {
                let want = if pattern { 2 } else { 3 };
                if fields.len() != want {
                    return Err(parse_err(path, lineno, format!("expected {want} fields")));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad row index"))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad column index"))?;
                if i == 0 || j == 0 || i > rows || j > rows {
                    return Err(parse_err(path, lineno, "index out of range (1-based)"));
                }
                let value = if pattern {
                    1.0
                } else {
                    fields[2]
                        .parse::<f64>()
                        .map_err(|_| parse_err(path, lineno, "bad value"))?
                };
                matrix[(i - 1, j - 1)] = value;
                matrix[(j - 1, i - 1)] = value;
                seen += 1;
            }
        }
    }
    match size {
        None => Err(parse_err(path, 0, "missing size line")),
        Some((_, _, nnz)) if nnz != seen => Err(parse_err(
            path,
            0,
            format!("header promised {nnz} entries, found {seen}"),
        )),
        _ => Ok(matrix),
    }
}

/// Writes the lower triangle of a symmetric matrix as `coordinate real
/// symmetric`, full-precision shortest round-trip decimals.
pub fn write_graph_mm(matrix: &Mat, path: &Path) -> Result<()> {
    let n = matrix.nrows();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            if matrix[(i, j)] != 0.0 {
                entries.push((i + 1, j + 1, matrix[(i, j)]));
            }
        }
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{n} {n} {}", entries.len())?;
    for (i, j, value) in entries {
        writeln!(out, "{i} {j} {value}")?;
    }
    Ok(())
}

/// Reads a dense feature matrix, sniffing MatrixMarket `array` format versus
/// headerless CSV from the first line.
pub fn read_features(path: &Path) -> Result<Mat> {
    let content = fs::read_to_string(path).map_err(|e| parse_err(path, 0, e.to_string()))?;
    if content.starts_with("%%MatrixMarket") {
        read_features_mm(path, &content)
    } else {
        read_features_csv(path, &content)
    }
}

fn read_features_mm(path: &Path, content: &str) -> Result<Mat> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().unwrap();
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 5 || tokens[2] != "array" || tokens[3] != "real" || tokens[4] != "general" {
        return Err(parse_err(path, 1, "features must be `array real general`"));
    }
    let mut dims: Option<(usize, usize)> = None;
    let mut values = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        match dims {
            None => {
                let fields: Vec<&str> = trimmed.split_whitespace().collect();
                if fields.len() != 2 {
                    return Err(parse_err(path, lineno, "size line must be `rows cols`"));
                }
                let rows = fields[0]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad row count"))?;
                let cols = fields[1]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad column count"))?;
                dims = Some((rows, cols));
            }
            Some(_) => {
                values.push(
                    trimmed
                        .parse::<f64>()
                        .map_err(|_| parse_err(path, lineno, "bad value"))?,
                );
            }
        }
    }
    let (rows, cols) = dims.ok_or_else(|| parse_err(path, 0, "missing size line"))?;
    if values.len() != rows * cols {
        return Err(parse_err(
            path,
            0,
            format!("expected {} values, found {}", rows * cols, values.len()),
        ));
    }
    // array format is column-major
    Ok(Mat::from_column_slice(rows, cols, &values))
}

fn read_features_csv(path: &Path, content: &str) -> Result<Mat> {
    let mut rows = Vec::new();
    let mut width = None;
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(path, idx + 1, format!("bad value `{}`", f.trim())))
            })
            .collect::<Result<_>>()?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(parse_err(path, idx + 1, "ragged CSV row"));
            }
        }
        width = Some(row.len());
        rows.push(row);
    }
    let width = width.ok_or_else(|| parse_err(path, 0, "empty feature file"))?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Mat::from_row_slice(flat.len() / width, width, &flat))
}

/// Writes features as MatrixMarket `array real general` (column-major).
pub fn write_features_mm(matrix: &Mat, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", matrix.nrows(), matrix.ncols())?;
    for col in 0..matrix.ncols() {
        for row in 0..matrix.nrows() {
            writeln!(out, "{}", matrix[(row, col)])?;
        }
    }
    Ok(())
}

/// Reads one integer per line and remaps the label alphabet onto 0-based
/// contiguous ids, preserving the value order.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let content = fs::read_to_string(path).map_err(|e| parse_err(path, 0, e.to_string()))?;
    let raw: Vec<i64> = content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            l.trim()
                .parse::<i64>()
                .map_err(|_| parse_err(path, idx + 1, "bad label"))
        })
        .collect::<Result<_>>()?;
    let mut alphabet: Vec<i64> = raw.clone();
    alphabet.sort_unstable();
    alphabet.dedup();
    let remap: HashMap<i64, usize> = alphabet.into_iter().enumerate().map(|(i, v)| (v, i)).collect();
    Ok(raw.into_iter().map(|v| remap[&v]).collect())
}

pub fn write_labels(labels: &[usize], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for y in labels {
        writeln!(out, "{y}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dataset load / save

pub fn load_dataset(manifest_path: &Path) -> Result<MultiViewDataset> {
    let manifest_path = if manifest_path.is_dir() {
        manifest_path.join("manifest.json")
    } else {
        manifest_path.to_path_buf()
    };
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| McgcError::Manifest(format!("{}: {e}", manifest_path.display())))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| McgcError::Manifest(e.to_string()))?;
    if manifest.views.is_empty() {
        return Err(McgcError::Manifest("manifest lists no views".into()));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    // duplicate paths load once and share the matrix by reference
    let mut graph_cache: HashMap<PathBuf, Arc<Mat>> = HashMap::new();
    let mut feature_cache: HashMap<PathBuf, Arc<Mat>> = HashMap::new();
    let mut views = Vec::with_capacity(manifest.views.len());
    for paths in &manifest.views {
        let graph_path = base.join(&paths.graph);
        let features_path = base.join(&paths.features);
        let adjacency = match graph_cache.get(&graph_path) {
            Some(m) => m.clone(),
            None => {
                let m = Arc::new(read_graph_mm(&graph_path)?);
                graph_cache.insert(graph_path, m.clone());
                m
            }
        };
        let features = match feature_cache.get(&features_path) {
            Some(m) => m.clone(),
            None => {
                let m = Arc::new(read_features(&features_path)?);
                feature_cache.insert(features_path, m.clone());
                m
            }
        };
        views.push(View {
            adjacency,
            features,
        });
    }

    let num_nodes = views[0].adjacency.nrows();
    for (v, view) in views.iter().enumerate() {
        if view.adjacency.nrows() != num_nodes {
            return Err(McgcError::Shape(format!(
                "view {v} graph has {} nodes, view 0 has {num_nodes}",
                view.adjacency.nrows()
            )));
        }
        if view.features.nrows() != num_nodes {
            return Err(McgcError::Shape(format!(
                "view {v} features have {} rows but the graph has {num_nodes} nodes",
                view.features.nrows()
            )));
        }
    }

    let labels = match &manifest.labels {
        Some(rel) => {
            let labels = read_labels(&base.join(rel))?;
            if labels.len() != num_nodes {
                return Err(McgcError::Shape(format!(
                    "labels have {} entries but the graph has {num_nodes} nodes",
                    labels.len()
                )));
            }
            Some(labels)
        }
        None => None,
    };

    let dataset = MultiViewDataset {
        num_nodes,
        views,
        labels,
        num_clusters: manifest.num_clusters,
    };
    let violations = validate_dataset(&dataset);
    if !violations.is_empty() {
        return Err(McgcError::InvalidDataset(violations));
    }
    Ok(dataset)
}

/// Writes the dataset plus a manifest into `directory`; views sharing a
/// matrix by reference share the file. Returns the manifest path.
pub fn save_dataset(dataset: &MultiViewDataset, directory: &Path) -> Result<PathBuf> {
    fs::create_dir_all(directory)?;
    let mut graph_files: Vec<(Arc<Mat>, String)> = Vec::new();
    let mut feature_files: Vec<(Arc<Mat>, String)> = Vec::new();
    let mut views = Vec::new();

    for (v, view) in dataset.views.iter().enumerate() {
        let graph = match graph_files
            .iter()
            .find(|(m, _)| Arc::ptr_eq(m, &view.adjacency))
        {
            Some((_, name)) => name.clone(),
            None => {
                let name = format!("view{v}.graph.mtx");
                write_graph_mm(view.adjacency.as_ref(), &directory.join(&name))?;
                graph_files.push((view.adjacency.clone(), name.clone()));
                name
            }
        };
        let features = match feature_files
            .iter()
            .find(|(m, _)| Arc::ptr_eq(m, &view.features))
        {
            Some((_, name)) => name.clone(),
            None => {
                let name = format!("view{v}.features.mtx");
                write_features_mm(view.features.as_ref(), &directory.join(&name))?;
                feature_files.push((view.features.clone(), name.clone()));
                name
            }
        };
        views.push(ViewPaths { graph, features });
    }

    let labels = match &dataset.labels {
        Some(labels) => {
            write_labels(labels, &directory.join("labels.txt"))?;
            Some("labels.txt".to_string())
        }
        None => None,
    };

    let manifest = DatasetManifest {
        name: directory
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into()),
        num_clusters: dataset.num_clusters,
        views,
        labels,
    };
    let manifest_path = directory.join("manifest.json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest_path)
}

// ---------------------------------------------------------------------------
// Synthetic attributed SBM

/// Planted-partition generator config. One (p_in, p_out) pair and one
/// feature dimension per view; features are Gaussian around block means
/// separated by `separation`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SbmConfig {
    pub blocks: Vec<usize>,
    pub edge_probs: Vec<(f64, f64)>,
    pub feature_dims: Vec<usize>,
    pub separation: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.iter().any(|&b| b == 0) {
            return Err(McgcError::Config("block sizes must all be >= 1".into()));
        }
        if self.blocks.len() < 2 {
            return Err(McgcError::Config("need at least 2 blocks".into()));
        }
        if self.edge_probs.is_empty() || self.edge_probs.len() != self.feature_dims.len() {
            return Err(McgcError::Config(
                "edge_probs and feature_dims must list one entry per view".into(),
            ));
        }
        for &(p_in, p_out) in &self.edge_probs {
            if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out > p_in {
                return Err(McgcError::Config(format!(
                    "need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}"
                )));
            }
        }
        if self.feature_dims.iter().any(|&d| d < self.blocks.len()) {
            return Err(McgcError::Config(
                "feature_dim must be >= the number of blocks".into(),
            ));
        }
        if self.separation < 0.0 || self.noise_std < 0.0 {
            return Err(McgcError::Config(
                "separation and noise_std must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Samples a multi-view attributed SBM; deterministic given the seed.
pub fn generate_sbm(config: &SbmConfig) -> Result<MultiViewDataset> {
    config.validate()?;
    let num_blocks = config.blocks.len();
    let n: usize = config.blocks.iter().sum();
    let mut labels = Vec::with_capacity(n);
    for (b, &size) in config.blocks.iter().enumerate() {
        labels.extend(std::iter::repeat_n(b, size));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut views = Vec::with_capacity(config.edge_probs.len());
    for (&(p_in, p_out), &dim) in config.edge_probs.iter().zip(&config.feature_dims) {
        let mut adjacency = Mat::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let p = if labels[i] == labels[j] { p_in } else { p_out };
                if rng.random::<f64>() < p {
                    adjacency[(i, j)] = 1.0;
                    adjacency[(j, i)] = 1.0;
                }
            }
        }

        // block means on scaled one-hot axes: pairwise distance = separation
        let axis_scale = config.separation / f64::sqrt(2.0);
        let mut features = Mat::zeros(n, dim);
        for i in 0..n {
            for c in 0..dim {
                let mean = if c == labels[i] { axis_scale } else { 0.0 };
                let noise: f64 = rng.sample(StandardNormal);
                features[(i, c)] = mean + config.noise_std * noise;
            }
        }
        views.push(View::new(adjacency, features));
    }

    Ok(MultiViewDataset {
        num_nodes: n,
        views,
        labels: Some(labels),
        num_clusters: num_blocks,
    })
}
