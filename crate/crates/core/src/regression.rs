//! Bayesian ridge regression from per-video audio embeddings to memorability,
//! with evidence-approximation (MacKay) updates of the noise precision `alpha`
//! and the weight precision `lambda`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{io_err, parse_predictions, DataError};

/// Embedding width per second of audio.
pub const SECOND_DIM: usize = 128;
/// Seconds of audio concatenated per video.
pub const SECONDS: usize = 3;
pub const EMBEDDING_DIM: usize = SECOND_DIM * SECONDS;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("X has {rows} rows but y has {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("target has zero variance")]
    DegenerateTarget,
    #[error("non-finite input at row {0}")]
    NonFinite(usize),
    #[error("model expects {expected} columns, input has {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid option: {0}")]
    Options(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Row-major `n × d` embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Self {
        Self { ids: Vec::new(), dim, data: Vec::new() }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, RegressionError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut m = Self::new(dim);
        for (i, r) in rows.iter().enumerate() {
            m.push(format!("row{i}"), r)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, id: impl Into<String>, row: &[f64]) -> Result<(), RegressionError> {
        if row.len() != self.dim {
            return Err(RegressionError::Dimension { expected: self.dim, found: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(RegressionError::NonFinite(self.ids.len()));
        }
        self.ids.push(id.into());
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_rows(), self.dim, &self.data)
    }
}

/// Concatenates the first three per-second embeddings, zero-padding short clips.
pub fn embedding_from_seconds(per_second: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; EMBEDDING_DIM];
    for (s, emb) in per_second.iter().take(SECONDS).enumerate() {
        let n = emb.len().min(SECOND_DIM);
        out[s * SECOND_DIM..s * SECOND_DIM + n].copy_from_slice(&emb[..n]);
    }
    out
}

/// Reads an embedding CSV `video_id,e0,...`; every row must be complete.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix, RegressionError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let table = parse_predictions(&text)?;
    let mut m = EmbeddingMatrix::new(table.components().len());
    for id in table.ids() {
        let row: Option<Vec<f64>> = table.row(id).expect("own id").iter().copied().collect();
        let row = row.ok_or_else(|| DataError::Config(format!("embedding row `{id}` has empty cells")))?;
        m.push(id.clone(), &row)?;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Initial noise precision; `None` means `1 / var(y)`.
    pub alpha_init: Option<f64>,
    pub lambda_init: f64,
    /// Skip evidence updates and solve once at the initial precisions.
    pub freeze: bool,
    /// Gamma hyperprior shape/rate on alpha and lambda; keeps the updates
    /// finite for exact fits and all-zero designs.
    pub prior: f64,
}

impl Default for RidgeOptions {
    fn default() -> Self {
        Self { max_iter: 300, tol: 1e-4, alpha_init: None, lambda_init: 1.0, freeze: false, prior: 1e-6 }
    }
}

impl RidgeOptions {
    pub fn frozen(alpha: f64, lambda: f64) -> Self {
        Self { alpha_init: Some(alpha), lambda_init: lambda, freeze: true, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub n_iterations_run: usize,
}

pub fn fit_bayesian_ridge(
    x: &EmbeddingMatrix,
    y: &[f64],
    opts: &RidgeOptions,
) -> Result<RidgeModel, RegressionError> {
    let n = x.n_rows();
    if n != y.len() {
        return Err(RegressionError::LengthMismatch { rows: n, targets: y.len() });
    }
    if n < 2 {
        return Err(RegressionError::TooFewSamples(n));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(RegressionError::NonFinite(i));
    }
    if opts.max_iter == 0 || !(opts.tol > 0.0) || !(opts.lambda_init > 0.0) || opts.prior < 0.0 {
        return Err(RegressionError::Options(format!("{opts:?}")));
    }
    let d = x.dim();
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let var_y = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / nf;
    if var_y == 0.0 {
        return Err(RegressionError::DegenerateTarget);
    }

    let mut xm = x.to_matrix();
    let x_mean: Vec<f64> = (0..d).map(|j| xm.column(j).sum() / nf).collect();
    for (j, mean) in x_mean.iter().enumerate() {
        xm.column_mut(j).add_scalar_mut(-mean);
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let gram = xm.transpose() * &xm;
    let eig = SymmetricEigen::new(gram);
    let s: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    // Xᵀy projected onto the eigenbasis
    let proj = eig.eigenvectors.transpose() * (xm.transpose() * &yc);

    let mut alpha = opts.alpha_init.unwrap_or(1.0 / var_y);
    let mut lambda = opts.lambda_init;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(RegressionError::Options(format!("alpha {alpha} must be positive")));
    }

    let coef_for = |alpha: f64, lambda: f64| -> DVector<f64> {
        let scaled =
            DVector::from_iterator(d, (0..d).map(|i| alpha * proj[i] / (lambda + alpha * s[i])));
        &eig.eigenvectors * scaled
    };

    let mut w = coef_for(alpha, lambda);
    let mut iterations = 0;
    if !opts.freeze {
        let a0 = opts.prior;
        for _ in 0..opts.max_iter {
            iterations += 1;
            let gamma: f64 = s.iter().map(|&si| alpha * si / (lambda + alpha * si)).sum();
            let resid = &yc - &xm * &w;
            let rss = resid.norm_squared();
            let new_lambda = (gamma + 2.0 * a0) / (w.norm_squared() + 2.0 * a0);
            let new_alpha = (nf - gamma + 2.0 * a0) / (rss + 2.0 * a0);
            let change = ((new_alpha - alpha).abs() / alpha).max((new_lambda - lambda).abs() / lambda);
            alpha = new_alpha;
            lambda = new_lambda;
            w = coef_for(alpha, lambda);
            if !(alpha.is_finite() && lambda.is_finite() && alpha > 0.0 && lambda > 0.0) {
                return Err(RegressionError::Options(format!("evidence updates diverged (alpha {alpha}, lambda {lambda})")));
            }
            if change < opts.tol {
                break;
            }
        }
    }

    let coefficients: Vec<f64> = w.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(c, m)| c * m).sum::<f64>();
    Ok(RidgeModel { coefficients, intercept, alpha, lambda, n_iterations_run: iterations })
}

pub fn predict_ridge(model: &RidgeModel, x: &EmbeddingMatrix) -> Result<Vec<f64>, RegressionError> {
    if x.dim() != model.coefficients.len() {
        return Err(RegressionError::Dimension { expected: model.coefficients.len(), found: x.dim() });
    }
    Ok((0..x.n_rows())
        .map(|i| model.intercept + x.row(i).iter().zip(&model.coefficients).map(|(a, b)| a * b).sum::<f64>())
        .collect())
}

impl RidgeModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RegressionError> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).map_err(DataError::from)?;
        fs::write(path, json).map_err(io_err(path))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RegressionError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text).map_err(DataError::from)?)
    }
}
