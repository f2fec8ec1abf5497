//! Ordinary least squares: Householder QR for full-rank designs, the
//! Moore–Penrose pseudoinverse (minimum-norm solution) otherwise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `weights[0]` is the intercept, followed by one weight per feature.
    pub weights: Vec<f64>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::param(format!(
                "linear model expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(self.weights[0] + self.weights[1..].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }
}

pub(crate) fn check_design(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::param(format!(
            "{} feature rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    let dim = x.first().map(Vec::len).unwrap_or(0);
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::param("feature rows have unequal lengths"));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::param("features and targets must be finite"));
    }
    Ok(dim)
}

/// Minimum-norm least-squares fit of `y ~ w0 + X w`. An intercept column is
/// prepended internally.
pub fn train_linear(x: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
    let dim = check_design(x, y)?;
    if x.is_empty() {
        return Err(Error::param("no training rows"));
    }
    let m = x.len();
    let a = DMatrix::from_fn(m, dim + 1, |r, c| if c == 0 { 1.0 } else { x[r][c - 1] });
    let b = DVector::from_column_slice(y);
    let sigma = a.singular_values();
    let sigma_max = sigma.max();
    let cutoff = f64::EPSILON * (m.max(dim + 1) as f64) * sigma_max;
    let full_rank = m > dim && sigma.min() > cutoff;
    let w = if full_rank {
        // Householder QR is markedly more accurate than the SVD route here
        let qr = a.qr();
        let rhs = qr.q().transpose() * &b;
        qr.r()
            .solve_upper_triangular(&rhs)
            .ok_or_else(|| Error::param("triangular solve failed"))?
    } else {
        a.svd(true, true)
            .pseudo_inverse(cutoff)
            .map_err(|e| Error::param(format!("pseudoinverse failed: {e}")))?
            * b
    };
    Ok(LinearModel {
        weights: w.iter().copied().collect(),
    })
}
