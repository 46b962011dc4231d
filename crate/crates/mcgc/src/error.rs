use crate::model::Violation;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McgcError {
    #[error("node {node} has zero degree after self-loop augmentation")]
    IsolatedNode { node: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("objective became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("label vectors have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("parse error in {file} at line {line}: {reason}")]
    Parse {
        file: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("bad manifest: {0}")]
    Manifest(String),

    #[error("dataset failed validation: {}", format_violations(.0))]
    InvalidDataset(Vec<Violation>),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, McgcError>;
