use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CompensatedSum;
use crate::error::{Error, Result};

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

/// Least-squares line through `(xs, ys)`.
///
/// Points are sorted before summation so the result does not depend on
/// their order.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateFit(format!(
            "{} x values and {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite input".into()));
    }
    let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let x_min = pts.first().map_or(0.0, |p| p.0);
    let x_max = pts.last().map_or(0.0, |p| p.0);
    if pts.len() < 2 || x_min == x_max {
        return Err(Error::DegenerateFit("need at least two distinct x values".into()));
    }
    let n = pts.len() as f64;
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let mut s = CompensatedSum::default();
        pts.iter().for_each(|p| s.add(f(p)));
        s.value() / n
    };
    let mx = mean(&|p| p.0);
    let my = mean(&|p| p.1);
    let sxy = mean(&|p| (p.0 - mx) * (p.1 - my));
    let sxx = mean(&|p| (p.0 - mx) * (p.0 - mx));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = mean(&|p| (p.1 - slope * p.0 - intercept).powi(2)).sqrt();
    Ok(FitResult {
        slope,
        intercept,
        residual_rms: rms,
        x_min,
        x_max,
        points: pts.len(),
    })
}

/// Coefficients of `y ≈ Σ_k c_k x_k (+ c_0)` by least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiFit {
    /// Covariate coefficients in column order.
    pub coefficients: Vec<f64>,
    pub intercept: Option<f64>,
    pub residual_rms: f64,
}

/// Least squares over rows of covariates, optionally with an intercept.
pub fn multi_linear_fit(rows: &[Vec<f64>], ys: &[f64], intercept: bool) -> Result<MultiFit> {
    let n = rows.len();
    if n != ys.len() || n == 0 {
        return Err(Error::DegenerateFit(format!("{n} rows and {} values", ys.len())));
    }
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::DegenerateFit("ragged covariate rows".into()));
    }
    let cols = k + usize::from(intercept);
    if n < cols {
        return Err(Error::DegenerateFit(format!("{n} rows for {cols} unknowns")));
    }
    let design = DMatrix::from_fn(n, cols, |i, j| if j < k { rows[i][j] } else { 1.0 });
    let y = DVector::from_column_slice(ys);
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * max_sv.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateFit("collinear covariates".into()));
    }
    let beta = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let resid = &y - &design * &beta;
    Ok(MultiFit {
        coefficients: beta.iter().take(k).copied().collect(),
        intercept: intercept.then(|| beta[k]),
        residual_rms: (resid.norm_squared() / n as f64).sqrt(),
    })
}

/// Log-log least-squares slope of `errors` against `epsilons`.
pub fn convergence_order(epsilons: &[f64], errors: &[f64]) -> Result<f64> {
    if epsilons.len() < 3 || epsilons.len() != errors.len() {
        return Err(Error::InvalidInput(
            "need at least three (epsilon, error) pairs".into(),
        ));
    }
    if let Some(e) = epsilons.iter().chain(errors).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("non-positive value {e}")));
    }
    let lx: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.slope)
}
