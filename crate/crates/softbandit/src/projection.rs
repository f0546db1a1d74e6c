//! Random projection from the optimized latent z' (dimension d') to the full
//! soft prompt z = A z' (dimension d), entries drawn Uniform(-1, 1).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RngStream;

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("projection dimensions must be nonzero (d = {d}, d_prime = {d_prime})")]
    ZeroDimension { d: usize, d_prime: usize },
    #[error("latent length {got} does not match projection input dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// The low-dimensional vector actually optimized by the bandit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftPromptLatent(pub Vec<f64>);

impl SoftPromptLatent {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Full-dimensional soft prompt, reshapeable to N_z rows of token_dim.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPrompt(pub Vec<f64>);

impl SoftPrompt {
    pub fn zeros(len: usize) -> Self {
        SoftPrompt(vec![0.0; len])
    }

    /// View as N_z rows of token_dim entries, for the wire format.
    pub fn rows(&self, token_dim: usize) -> Vec<&[f64]> {
        self.0.chunks(token_dim).collect()
    }
}

/// Fixed projection matrix A (d rows, d' columns), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSpec {
    matrix: Vec<f64>,
    input_dim: usize,
    output_dim: usize,
}

impl ProjectionSpec {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.input_dim + col]
    }

    /// Build a projection from an explicit row-major matrix. Test and demo
    /// convenience; entries are not range-checked here.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let output_dim = rows.len();
        let input_dim = rows.first().map_or(0, |r| r.len());
        ProjectionSpec {
            matrix: rows.into_iter().flatten().collect(),
            input_dim,
            output_dim,
        }
    }
}

/// Sample A with i.i.d. Uniform(-1, 1) entries, row-major from `stream`.
pub fn make_projection(
    d: usize,
    d_prime: usize,
    stream: &RngStream,
) -> Result<ProjectionSpec, ProjectionError> {
    if d == 0 || d_prime == 0 {
        return Err(ProjectionError::ZeroDimension { d, d_prime });
    }
    let mut rng = stream.rng();
    let matrix = (0..d * d_prime).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Ok(ProjectionSpec {
        matrix,
        input_dim: d_prime,
        output_dim: d,
    })
}

/// z = A z', exact matrix-vector product.
pub fn project(
    spec: &ProjectionSpec,
    latent: &SoftPromptLatent,
) -> Result<SoftPrompt, ProjectionError> {
    if latent.dim() != spec.input_dim {
        return Err(ProjectionError::DimensionMismatch {
            expected: spec.input_dim,
            got: latent.dim(),
        });
    }
    let out = spec
        .matrix
        .chunks(spec.input_dim)
        .map(|row| row.iter().zip(&latent.0).map(|(a, z)| a * z).sum())
        .collect();
    Ok(SoftPrompt(out))
}
