//! Sine eigenbasis on `(0, π)`.
//!
//! Fields are stored as coefficient vectors in the basis `e_i(x) = sin(i x)`,
//! `i = 1..=M`, with coefficient `i` at index `i - 1`. The inner product
//! carries the weight `2/π`, which makes the basis orthonormal, so inner
//! products of fields are plain dot products of their coefficients.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncated Dirichlet eigenbasis of `∂xx + shift`.
///
/// Mode `i` has decay rate `α_i = i² - shift`. `shift = 0` is the plain
/// Laplacian; `shift = 1` gives the operator with a neutral fundamental mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    total_modes: usize,
    shift: f64,
}

impl Basis {
    pub fn new(total_modes: usize, shift: f64) -> Result<Self> {
        if total_modes == 0 {
            return Err(Error::InvalidParams("basis needs at least one mode".into()));
        }
        if !shift.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite basis shift {shift}")));
        }
        Ok(Self { total_modes, shift })
    }

    pub fn total_modes(&self) -> usize {
        self.total_modes
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Decay rate `α_i` of the 1-based `mode`.
    pub fn eigenvalue(&self, mode: usize) -> f64 {
        let i = mode as f64;
        i * i - self.shift
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.total_modes).map(|i| self.eigenvalue(i)).collect()
    }
}

/// Coefficients of a field on `(0, π)` in the sine basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField(Vec<f64>);

impl SpectralField {
    pub fn zeros(modes: usize) -> Self {
        Self(vec![0.0; modes])
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    /// `amplitude · e_mode` in a basis of `modes` modes.
    pub fn mode(modes: usize, mode: usize, amplitude: f64) -> Self {
        let mut field = Self::zeros(modes);
        field.0[mode - 1] = amplitude;
        field
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.0
    }

    /// Coefficient of the 1-based `mode`; zero beyond the truncation.
    pub fn coeff(&self, mode: usize) -> f64 {
        self.0.get(mode - 1).copied().unwrap_or(0.0)
    }

    /// Weighted inner product `(2/π) ∫ u v dx`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Point value `Σ c_i sin(i x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * x).sin())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|c| c * factor).collect())
    }
}

/// Number of slow modes `N`; slow space is `span{e_1, …, e_N}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlowCutoff(usize);

impl SlowCutoff {
    pub fn new(slow: usize, basis: &Basis) -> Result<Self> {
        if slow == 0 || slow >= basis.total_modes() {
            return Err(Error::InvalidCutoff {
                slow,
                total: basis.total_modes(),
            });
        }
        Ok(Self(slow))
    }

    pub fn get(self) -> usize {
        self.0
    }

    fn check(self, modes: usize) -> Result<()> {
        if self.0 == 0 || self.0 >= modes {
            return Err(Error::InvalidCutoff {
                slow: self.0,
                total: modes,
            });
        }
        Ok(())
    }
}

/// `P_N w`: keeps modes `1..=N`.
pub fn project_slow(w: &SpectralField, cutoff: SlowCutoff) -> Result<SpectralField> {
    cutoff.check(w.len())?;
    let mut out = w.clone();
    out.0[cutoff.get()..].iter_mut().for_each(|c| *c = 0.0);
    Ok(out)
}

/// `Q_N w = w - P_N w`: keeps modes `N+1..=M`.
pub fn project_fast(w: &SpectralField, cutoff: SlowCutoff) -> Result<SpectralField> {
    cutoff.check(w.len())?;
    let mut out = w.clone();
    out.0[..cutoff.get()].iter_mut().for_each(|c| *c = 0.0);
    Ok(out)
}

/// Diagonal rate of `A_N = (Q_N + ε P_N)(∂xx + shift)` on the 1-based `mode`.
pub fn an_rate(basis: &Basis, cutoff: SlowCutoff, eps: f64, mode: usize) -> f64 {
    let alpha = basis.eigenvalue(mode);
    if mode <= cutoff.get() {
        -eps * alpha
    } else {
        -alpha
    }
}

/// Applies the high-pass operator `A_N`.
pub fn apply_an(
    w: &SpectralField,
    eps: f64,
    cutoff: SlowCutoff,
    basis: &Basis,
) -> Result<SpectralField> {
    cutoff.check(w.len())?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParams(format!("eps={eps} outside [0, 1]")));
    }
    Ok(SpectralField(
        w.0.iter()
            .enumerate()
            .map(|(k, c)| an_rate(basis, cutoff, eps, k + 1) * c)
            .collect(),
    ))
}

/// Exact `(2/π) ∫₀^π Π sin(i_k x) dx`.
///
/// Expands the product into exponentials `e^{±i i_k x}` and integrates each
/// term in closed form, so the result carries only rounding error.
pub fn sine_product_integral(indices: &[usize]) -> f64 {
    let n = indices.len();
    assert!(n < 24, "too many factors in sine product");
    let mut acc = 0.0;
    for mask in 0u32..(1u32 << n) {
        let mut omega: i64 = 0;
        let mut sign = 1.0;
        for (k, &a) in indices.iter().enumerate() {
            if mask & (1 << k) == 0 {
                omega += a as i64;
            } else {
                omega -= a as i64;
                sign = -sign;
            }
        }
        if n.is_multiple_of(2) {
            if omega == 0 {
                acc += sign * PI;
            }
        } else if omega % 2 != 0 {
            // ∫₀^π sin(ωx) dx = (1 - (-1)^ω)/ω, nonzero only for odd ω.
            acc += sign * 2.0 / omega as f64;
        }
    }
    let half = (n / 2) as i32;
    let parity = if half % 2 == 0 { 1.0 } else { -1.0 };
    2.0 / PI * parity * acc / f64::from(1u32 << n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CubicBackend {
    /// Sums over the mode-coupling tensor `⟨e_i e_j e_k e_l⟩`.
    ModeCoupling,
    /// Transform to a padded grid, cube pointwise, transform back.
    Collocation,
}

/// Galerkin projection of `-c₀ w³` onto the truncated basis.
#[derive(Debug, Clone)]
pub struct CubicNonlinearity {
    modes: usize,
    backend: CubicBackend,
    // Collocation: sin((i+1) x_j) on the interior of a grid with `intervals`
    // cells, row-major by grid point.
    sines: Vec<f64>,
    intervals: usize,
    // Mode coupling: nonzero entries (i, j, k, l, value) with j <= k <= l,
    // value already multiplied by the number of distinct orderings.
    couplings: Vec<(usize, usize, usize, usize, f64)>,
}

impl CubicNonlinearity {
    pub fn new(modes: usize, backend: CubicBackend) -> Self {
        let mut this = Self {
            modes,
            backend,
            sines: Vec::new(),
            intervals: 0,
            couplings: Vec::new(),
        };
        match backend {
            CubicBackend::Collocation => {
                // Products of three modes reach wavenumber 3M; projecting onto
                // mode M needs the trapezoid rule to be exact up to 4M < 2K.
                let intervals = 2 * (modes + 1);
                let h = PI / intervals as f64;
                let mut sines = Vec::with_capacity((intervals - 1) * modes);
                for j in 1..intervals {
                    let x = j as f64 * h;
                    sines.extend((1..=modes).map(|i| (i as f64 * x).sin()));
                }
                this.sines = sines;
                this.intervals = intervals;
            }
            CubicBackend::ModeCoupling => {
                for i in 0..modes {
                    for j in 0..modes {
                        for k in j..modes {
                            for l in k..modes {
                                let value = sine_product_integral(&[i + 1, j + 1, k + 1, l + 1]);
                                if value.abs() < 1e-14 {
                                    continue;
                                }
                                let orderings = if j == l {
                                    1.0
                                } else if j == k || k == l {
                                    3.0
                                } else {
                                    6.0
                                };
                                this.couplings.push((i, j, k, l, value * orderings));
                            }
                        }
                    }
                }
            }
        }
        this
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn backend(&self) -> CubicBackend {
        self.backend
    }

    /// Writes the coefficients of `-c₀ P_M(w³)` into `out`.
    ///
    /// `scratch` is resized as needed and can be reused between calls.
    pub fn eval_into(&self, w: &[f64], c0: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
        debug_assert_eq!(w.len(), self.modes);
        debug_assert_eq!(out.len(), self.modes);
        out.iter_mut().for_each(|c| *c = 0.0);
        match self.backend {
            CubicBackend::Collocation => {
                let points = self.intervals - 1;
                scratch.resize(points, 0.0);
                for (value, row) in scratch.iter_mut().zip(self.sines.chunks_exact(self.modes)) {
                    let u: f64 = row.iter().zip(w).map(|(s, c)| s * c).sum();
                    *value = u * u * u;
                }
                for (value, row) in scratch.iter().zip(self.sines.chunks_exact(self.modes)) {
                    for (o, s) in out.iter_mut().zip(row) {
                        *o += value * s;
                    }
                }
                let scale = -c0 * 2.0 / self.intervals as f64;
                out.iter_mut().for_each(|o| *o *= scale);
            }
            CubicBackend::ModeCoupling => {
                for &(i, j, k, l, value) in &self.couplings {
                    out[i] += value * w[j] * w[k] * w[l];
                }
                out.iter_mut().for_each(|o| *o *= -c0);
            }
        }
    }

    pub fn eval(&self, w: &SpectralField, c0: f64) -> SpectralField {
        let mut out = vec![0.0; self.modes];
        let mut scratch = Vec::new();
        self.eval_into(w.coeffs(), c0, &mut out, &mut scratch);
        SpectralField(out)
    }
}

/// Coefficients of `-c₀ w³` projected onto the modes of `w`.
pub fn cubic_galerkin(w: &SpectralField, c0: f64, backend: CubicBackend) -> SpectralField {
    CubicNonlinearity::new(w.len(), backend).eval(w, c0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simpson(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
        let h = PI / intervals as f64;
        let mut s = f(0.0) + f(PI);
        for j in 1..intervals {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(j as f64 * h);
        }
        s * h / 3.0
    }

    fn weighted_quadrature(indices: &[usize]) -> f64 {
        2.0 / PI
            * simpson(
                |x| indices.iter().map(|&i| (i as f64 * x).sin()).product(),
                10_000,
            )
    }

    fn basis8() -> Basis {
        Basis::new(8, 0.0).unwrap()
    }

    #[test]
    fn eigenvalues_follow_shift() {
        let b = Basis::new(4, 1.0).unwrap();
        assert_eq!(b.eigenvalues(), vec![0.0, 3.0, 8.0, 15.0]);
        let plain = Basis::new(3, 0.0).unwrap();
        assert_eq!(plain.eigenvalues(), vec![1.0, 4.0, 9.0]);
        assert!(Basis::new(0, 0.0).is_err());
    }

    #[test]
    fn cutoff_must_be_below_truncation() {
        let b = Basis::new(3, 0.0).unwrap();
        assert!(SlowCutoff::new(2, &b).is_ok());
        assert_eq!(
            SlowCutoff::new(3, &b),
            Err(Error::InvalidCutoff { slow: 3, total: 3 })
        );
        assert!(SlowCutoff::new(0, &b).is_err());
    }

    #[test]
    fn projection_examples() {
        let b = Basis::new(2, 0.0).unwrap();
        let n = SlowCutoff::new(1, &b).unwrap();
        let w = SpectralField::from_coeffs(vec![1.0, 1.0]);
        assert_eq!(project_slow(&w, n).unwrap().coeffs(), &[1.0, 0.0]);
        assert_eq!(project_fast(&w, n).unwrap().coeffs(), &[0.0, 1.0]);
        let zero = SpectralField::zeros(2);
        assert_eq!(project_slow(&zero, n).unwrap(), zero);
    }

    #[test]
    fn projection_rejects_short_fields() {
        let b = basis8();
        let n = SlowCutoff::new(3, &b).unwrap();
        let w = SpectralField::zeros(3);
        assert!(matches!(
            project_slow(&w, n),
            Err(Error::InvalidCutoff { slow: 3, total: 3 })
        ));
        assert!(project_fast(&w, n).is_err());
    }

    #[test]
    fn high_pass_operator_examples() {
        let b = basis8();
        let n = SlowCutoff::new(1, &b).unwrap();
        let w = SpectralField::from_coeffs((1..=8).map(|i| i as f64 * 0.3 - 1.0).collect());
        let full = apply_an(&w, 1.0, n, &b).unwrap();
        for (k, (a, c)) in full.coeffs().iter().zip(w.coeffs()).enumerate() {
            assert_eq!(*a, -b.eigenvalue(k + 1) * c);
        }
        let filtered = apply_an(&w, 0.0, n, &b).unwrap();
        assert_eq!(filtered.coeff(1), 0.0);

        let e1 = SpectralField::mode(8, 1, 1.0);
        assert_eq!(apply_an(&e1, 0.5, n, &b).unwrap().coeff(1), -0.5);
        assert!(apply_an(&e1, 1.5, n, &b).is_err());
    }

    #[test]
    fn sine_products_known_values() {
        assert!((sine_product_integral(&[1, 1]) - 1.0).abs() < 1e-15);
        assert!(sine_product_integral(&[1, 2]).abs() < 1e-15);
        assert!((sine_product_integral(&[1, 1, 2, 2]) - 0.5).abs() < 1e-15);
        assert!((sine_product_integral(&[1, 1, 1, 1]) - 0.75).abs() < 1e-15);
        assert!((sine_product_integral(&[1, 1, 1, 3]) + 0.25).abs() < 1e-15);
        assert!((sine_product_integral(&[1]) - 4.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn sine_products_match_simpson_exhaustively() {
        let mut worst: f64 = 0.0;
        for len in 2..=4 {
            let mut idx = vec![1usize; len];
            loop {
                let exact = sine_product_integral(&idx);
                worst = worst.max((exact - weighted_quadrature(&idx)).abs());
                // odometer over {1..6}^len
                let mut k = 0;
                while k < len {
                    idx[k] += 1;
                    if idx[k] <= 6 {
                        break;
                    }
                    idx[k] = 1;
                    k += 1;
                }
                if k == len {
                    break;
                }
            }
        }
        assert!(worst <= 1e-10, "worst deviation {worst:e}");
    }

    #[test]
    fn cubic_of_fundamental() {
        let amp = 0.7;
        let w = SpectralField::mode(8, 1, amp);
        for backend in [CubicBackend::Collocation, CubicBackend::ModeCoupling] {
            let out = cubic_galerkin(&w, 1.0, backend);
            assert!((out.coeff(1) + 0.75 * amp.powi(3)).abs() < 1e-14);
            assert!((out.coeff(3) - 0.25 * amp.powi(3)).abs() < 1e-14);
            assert!(out.coeff(2).abs() < 1e-14);
        }
        let zero = SpectralField::zeros(8);
        assert_eq!(
            cubic_galerkin(&zero, 1.0, CubicBackend::Collocation).norm(),
            0.0
        );
    }

    #[test]
    fn cubic_matches_quadrature_for_two_modes() {
        let w = SpectralField::from_coeffs(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        for backend in [CubicBackend::Collocation, CubicBackend::ModeCoupling] {
            let out = cubic_galerkin(&w, 1.0, backend);
            for i in 1..=8 {
                let oracle = 2.0 / PI
                    * simpson(
                        |x| -(x.sin() + (2.0 * x).sin()).powi(3) * (i as f64 * x).sin(),
                        10_000,
                    );
                assert!((out.coeff(i) - oracle).abs() < 1e-10, "mode {i}");
            }
        }
    }

    fn field(m: usize) -> impl Strategy<Value = SpectralField> {
        proptest::collection::vec(-2.0f64..2.0, m).prop_map(SpectralField::from_coeffs)
    }

    proptest! {
        #[test]
        fn projections_partition_the_field(w in field(8), n in 1usize..8) {
            let cut = SlowCutoff::new(n, &basis8()).unwrap();
            let p = project_slow(&w, cut).unwrap();
            let q = project_fast(&w, cut).unwrap();
            prop_assert_eq!(p.add(&q), w.clone());
            prop_assert_eq!(project_slow(&p, cut).unwrap(), p.clone());
            prop_assert_eq!(project_fast(&q, cut).unwrap(), q.clone());
            prop_assert_eq!(p.inner(&q), 0.0);
        }

        #[test]
        fn cubic_backends_agree(w in field(8), c0 in 0.1f64..3.0) {
            let a = cubic_galerkin(&w, c0, CubicBackend::Collocation);
            let b = cubic_galerkin(&w, c0, CubicBackend::ModeCoupling);
            let scale = a.norm().max(1e-300);
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn parseval_holds_on_point_values(w in field(6)) {
            let quad = 2.0 / PI * simpson(|x| w.eval(x).powi(2), 4_000);
            prop_assert!((quad - w.inner(&w)).abs() < 1e-9);
        }

        #[test]
        fn high_pass_is_linear(u in field(8), v in field(8), eps in 0.0f64..=1.0) {
            let b = basis8();
            let cut = SlowCutoff::new(2, &b).unwrap();
            let lhs = apply_an(&u.add(&v.scale(2.0)), eps, cut, &b).unwrap();
            let rhs = apply_an(&u, eps, cut, &b).unwrap()
                .add(&apply_an(&v, eps, cut, &b).unwrap().scale(2.0));
            for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
