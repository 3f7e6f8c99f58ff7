use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_slow, ReducedModel};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::noise::lagged_moment_series;
use crate::spectral::{sine_product_integral, SpectralField};

const SYMMETRY_TOL: f64 = 1e-12;
const NEGATIVE_TOL: f64 = 1e-12;

/// Symmetric positive semidefinite `N × N` matrix with its symmetric square
/// root.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    sqrt: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Checks symmetry, clamps eigenvalues in `[−1e-12·scale, 0)` to zero
    /// and forms `V diag(√λ) Vᵀ`.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Covariance("matrix is not square".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix(m)
    }

    fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Covariance("non-finite entry".into()));
        }
        let scale = m.amax().max(1.0);
        let n = m.nrows();
        for i in 0..n {
            for j in i + 1..n {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Covariance(format!(
                        "asymmetric entries ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        let sym = (&m + m.transpose()) * 0.5;
        let eigen = SymmetricEigen::new(sym.clone());
        let mut roots = eigen.eigenvalues.clone();
        for r in roots.iter_mut() {
            if *r < -NEGATIVE_TOL * scale {
                return Err(Error::Covariance(format!("negative eigenvalue {r}")));
            }
            *r = r.max(0.0).sqrt();
        }
        let v = &eigen.eigenvectors;
        let sqrt = v * DMatrix::from_diagonal(&roots) * v.transpose();
        Ok(Self { matrix: sym, sqrt })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn sqrt_get(&self, i: usize, j: usize) -> f64 {
        self.sqrt[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Row-major symmetric square root.
    pub fn sqrt_flat(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n * n).map(|k| self.sqrt[(k / n, k % n)]).collect()
    }
}

/// One monomial of the fluctuating nonlinearity for output mode `out`:
/// `weight · Π u[slow] · Π η_f^{fast_exp[f]}`.
#[derive(Debug, Clone)]
struct Term {
    out: usize,
    slow: Vec<usize>,
    exponent: usize,
    weight: f64,
}

/// Exact evaluator of `B(u) = 2∫₀^∞ E[F(t) ⊗ F(0)] dt` with
/// `F = −c₀ P_N[(u+η)³ − E(u+η)³]` and `η` the stationary fast OU process.
///
/// `F` is a polynomial in the independent fast components. Each pair of
/// monomials has a lagged moment that factorises over components into sums
/// of `e^{−k α_f t}`, so the lag integral is a sum of `coef / Σ k_f α_f`.
/// Terms with zero total rate are products of means and cancel the
/// centering.
#[derive(Debug, Clone)]
pub(crate) struct CovarianceModel {
    slow: usize,
    terms: Vec<Term>,
    exponents: usize,
    /// `∫₀^∞` of the centred lagged moment for each pair of exponents.
    kernel: Vec<f64>,
}

impl CovarianceModel {
    pub fn new(model: &ReducedModel) -> Self {
        let n = model.slow_modes();
        let fast = model.fast_modes();
        let nf = fast.len();
        // Variables 0..n are slow coefficients, n..n+nf fast components.
        let mode_of = |v: usize| if v < n { v + 1 } else { fast[v - n].mode };
        let vars = n + nf;

        let mut exponent_index: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut merged: BTreeMap<(usize, Vec<usize>, usize), f64> = BTreeMap::new();
        for out in 0..n {
            for a in 0..vars {
                for b in 0..vars {
                    for c in 0..vars {
                        let triple = [a, b, c];
                        if triple.iter().all(|&v| v < n) {
                            continue;
                        }
                        let value = sine_product_integral(&[
                            out + 1,
                            mode_of(a),
                            mode_of(b),
                            mode_of(c),
                        ]);
                        if value == 0.0 {
                            continue;
                        }
                        let mut slow: Vec<usize> = triple.iter().copied().filter(|&v| v < n).collect();
                        slow.sort_unstable();
                        let mut exp = vec![0u8; nf];
                        for &v in triple.iter().filter(|&&v| v >= n) {
                            exp[v - n] += 1;
                        }
                        let next = exponent_index.len();
                        let e = *exponent_index.entry(exp).or_insert(next);
                        *merged.entry((out, slow, e)).or_insert(0.0) -= model.c0() * value;
                    }
                }
            }
        }
        let terms = merged
            .into_iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|((out, slow, exponent), weight)| Term {
                out,
                slow,
                exponent,
                weight,
            })
            .collect();

        let mut by_index: Vec<Vec<u8>> = vec![Vec::new(); exponent_index.len()];
        for (exp, idx) in exponent_index {
            by_index[idx] = exp;
        }
        let ne = by_index.len();
        let mut kernel = vec![0.0; ne * ne];
        for p in 0..ne {
            for q in 0..ne {
                kernel[p * ne + q] = lag_integral(&by_index[p], &by_index[q], fast);
            }
        }
        Self {
            slow: n,
            terms,
            exponents: ne,
            kernel,
        }
    }

    /// `B(u)` as a row-major `N²` vector.
    pub fn eval_flat(&self, u: &[f64]) -> Vec<f64> {
        let n = self.slow;
        let ne = self.exponents;
        let mut coef = vec![0.0; n * ne];
        for t in &self.terms {
            let prod: f64 = t.slow.iter().map(|&s| u[s]).product();
            coef[t.out * ne + t.exponent] += t.weight * prod;
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for p in 0..ne {
                    let ci = coef[i * ne + p];
                    if ci == 0.0 {
                        continue;
                    }
                    for q in 0..ne {
                        acc += ci * coef[j * ne + q] * self.kernel[p * ne + q];
                    }
                }
                out[i * n + j] = 2.0 * acc;
            }
        }
        out
    }

    pub fn eval(&self, u: &[f64]) -> Result<CovarianceMatrix> {
        let n = self.slow;
        let flat = self.eval_flat(u);
        CovarianceMatrix::from_matrix(DMatrix::from_row_slice(n, n, &flat))
    }
}

/// `∫₀^∞ (E[η^p(t) η^q(0)] − E[η^p] E[η^q]) dt` for independent stationary
/// OU components with the given exponent vectors.
fn lag_integral(p: &[u8], q: &[u8], fast: &[super::FastMode]) -> f64 {
    // Per component: (variance factor, series c_k).
    let factors: Vec<(f64, Vec<f64>, f64)> = p
        .iter()
        .zip(q)
        .zip(fast)
        .map(|((&a, &b), f)| {
            let (a, b) = (usize::from(a), usize::from(b));
            let scale = f.variance.powf((a + b) as f64 / 2.0);
            (scale, lagged_moment_series(a, b), f.alpha)
        })
        .collect();

    fn rec(factors: &[(f64, Vec<f64>, f64)], coef: f64, rate: f64) -> f64 {
        let Some(((scale, series, alpha), rest)) = factors.split_first() else {
            return if rate > 0.0 { coef / rate } else { 0.0 };
        };
        let mut total = 0.0;
        for (k, c) in series.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            total += rec(rest, coef * scale * c, rate + k as f64 * alpha);
        }
        total
    }
    rec(&factors, 1.0, 0.0)
}

/// `B(u_N)` evaluated with closed-form lag integrals.
pub fn covariance_b_quadrature(u: &SpectralField, params: &ModelParams) -> Result<CovarianceMatrix> {
    check_slow(u, params)?;
    let model = ReducedModel::new(params)?;
    CovarianceModel::new(&model).eval(u.coeffs())
}

/// `σ⁴ A² / 24`, the deviation covariance of the single-mode example.
pub fn covariance_b_closed_example(amplitude: f64, sigma: f64) -> f64 {
    sigma.powi(4) * amplitude * amplitude / 24.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSpectrum;
    use crate::spectral::{Basis, SlowCutoff};

    fn scalar(a: f64) -> SpectralField {
        SpectralField::from_coeffs(vec![a])
    }

    #[test]
    fn matches_closed_form_on_example_grid() {
        for sigma in [0.0, 0.5, 1.0, 1.5] {
            let p = ModelParams::mode2_forced(0.1, 1.0, sigma).unwrap();
            for a in [0.0, 0.3, 0.5, 1.0, 2.0] {
                let b = covariance_b_quadrature(&scalar(a), &p).unwrap().get(0, 0);
                let exact = covariance_b_closed_example(a, sigma);
                assert!(
                    (b - exact).abs() <= 1e-12 * exact.max(1e-300) || (b - exact).abs() < 1e-15,
                    "A={a} sigma={sigma}: {b} vs {exact}"
                );
            }
        }
        assert_eq!(covariance_b_closed_example(1.0, 1.0), 1.0 / 24.0);
    }

    #[test]
    fn two_slow_modes_is_symmetric_psd() {
        let basis = Basis::new(6, 1.0).unwrap();
        let cut = SlowCutoff::new(2, &basis).unwrap();
        let spec = NoiseSpectrum::new(vec![0.0, 0.0, 1.0, 0.5, 0.0, 0.2], cut).unwrap();
        let p = ModelParams::new(0.1, 1.0, 1.0, 1.0, basis, cut, spec).unwrap();
        let u = SpectralField::from_coeffs(vec![0.7, -0.4]);
        let b = covariance_b_quadrature(&u, &p).unwrap();
        assert!((b.get(0, 1) - b.get(1, 0)).abs() < 1e-14);
        assert!(b.get(0, 0) > 0.0 && b.get(1, 1) > 0.0);
        assert!(b.get(0, 0) * b.get(1, 1) >= b.get(0, 1).powi(2) - 1e-14);
        // sqrt squared gives back B
        let s = b.sqrt_flat();
        for i in 0..2 {
            for j in 0..2 {
                let sq: f64 = (0..2).map(|k| s[i * 2 + k] * s[k * 2 + j]).sum();
                assert!((sq - b.get(i, j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn covariance_matrix_validation() {
        assert!(CovarianceMatrix::new(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(CovarianceMatrix::new(&[vec![-1.0]]).is_err());
        let tiny = CovarianceMatrix::new(&[vec![-1e-14]]).unwrap();
        assert_eq!(tiny.sqrt_get(0, 0), 0.0);
        let b = CovarianceMatrix::new(&[vec![4.0, 0.0], vec![0.0, 9.0]]).unwrap();
        assert!((b.sqrt_get(0, 0) - 2.0).abs() < 1e-14);
        assert!((b.sqrt_get(1, 1) - 3.0).abs() < 1e-14);
    }
}
