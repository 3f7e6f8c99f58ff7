use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Largest total degree accepted by [`isserlis_moment`].
const MAX_DEGREE: usize = 12;

/// Mixed moment `E[Π X_i^{p_i}]` of a zero-mean Gaussian vector with
/// covariance `cov`.
///
/// Uses the moment generating function: for total degree `2m`,
/// `E[X^p] = (Π p_i!) / (m! 2^m) · [t^p] (tᵀ Σ t)^m`. The power of the
/// quadratic form is expanded with exponents capped at `p`, so no
/// partition is ever enumerated. Odd total degree gives zero.
pub fn isserlis_moment(cov: &[Vec<f64>], powers: &[usize]) -> Result<f64> {
    let n = powers.len();
    if cov.len() != n || cov.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput(format!(
            "covariance must be {n}x{n} to match the powers"
        )));
    }
    let degree: usize = powers.iter().sum();
    if degree > MAX_DEGREE {
        return Err(Error::InvalidInput(format!(
            "total degree {degree} exceeds {MAX_DEGREE}"
        )));
    }
    if degree % 2 == 1 {
        return Ok(0.0);
    }
    let m = degree / 2;

    // Quadratic form tᵀΣt as (exponent vector, coefficient).
    let mut quadratic: Vec<(Vec<u8>, f64)> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let c = if i == j { cov[i][i] } else { cov[i][j] + cov[j][i] };
            if c == 0.0 {
                continue;
            }
            let mut e = vec![0u8; n];
            e[i] += 1;
            e[j] += 1;
            quadratic.push((e, c));
        }
    }

    let mut poly: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    poly.insert(vec![0u8; n], 1.0);
    for _ in 0..m {
        let mut next: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        for (exp, c) in &poly {
            'terms: for (qe, qc) in &quadratic {
                let mut e = exp.clone();
                for k in 0..n {
                    e[k] += qe[k];
                    if usize::from(e[k]) > powers[k] {
                        continue 'terms;
                    }
                }
                *next.entry(e).or_insert(0.0) += c * qc;
            }
        }
        poly = next;
    }
    let target: Vec<u8> = powers.iter().map(|&p| p as u8).collect();
    let coeff = poly.get(&target).copied().unwrap_or(0.0);
    let numerator: f64 = powers.iter().map(|&p| factorial(p)).product();
    Ok(coeff * numerator / (factorial(m) * 2f64.powi(m as i32)))
}

/// Coefficients `c_k` with `E[X^a Y^b] = v^{(a+b)/2} Σ_k c_k ρ^k` for a
/// stationary Gaussian pair of common variance `v` and correlation `ρ`.
///
/// `c_k` counts the pairings with exactly `k` cross pairs:
/// `C(a,k) C(b,k) k! (a−k−1)!! (b−k−1)!!` when `a−k` and `b−k` are even.
/// With `ρ = e^{−α t}` each term integrates over the lag in closed form.
pub fn lagged_moment_series(a: usize, b: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.min(b) + 1];
    for (k, slot) in out.iter_mut().enumerate() {
        if (a - k) % 2 == 1 || (b - k) % 2 == 1 {
            continue;
        }
        *slot = binomial(a, k)
            * binomial(b, k)
            * factorial(k)
            * double_factorial_odd(a - k)
            * double_factorial_odd(b - k);
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `(n−1)!!` for even `n`: the number of perfect matchings of `n` items.
fn double_factorial_odd(n: usize) -> f64 {
    debug_assert!(n.is_multiple_of(2));
    (1..n).step_by(2).map(|k| k as f64).product()
}
