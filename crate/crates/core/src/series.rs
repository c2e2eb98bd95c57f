//! Truncated series in `z^{-1}`, `u(z) = c_0 + c_1/z + ... + c_N/z^N`, and
//! the expansion `S'(u(z) + u_0) = S'(u_0) + Σ_k z^{-k} B'_k(u_0)/k` that
//! defines the hydrodynamic speeds `φ_k = B'_k/S'`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{s_pole_distance, EllipticFns};
use crate::error::{Error, Result};

/// Default truncation order and number of speeds.
pub const DEFAULT_ORDER: usize = 12;
pub const DEFAULT_SPEEDS: usize = 6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coefficients `c_0..c_N`; everything beyond `z^{-N}` is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

impl TruncatedSeries {
    /// Series with constant term `c0` and `tail = [c_1, ..., c_N]`.
    pub fn new(c0: Complex64, tail: &[Complex64]) -> Self {
        let mut coeffs = Vec::with_capacity(tail.len() + 1);
        coeffs.push(c0);
        coeffs.extend_from_slice(tail);
        Self { coeffs }
    }

    /// From the full coefficient vector `[c_0, ..., c_N]`.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::OrderMismatch("a series needs at least the constant term".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![ZERO; order + 1] }
    }

    pub fn constant(c0: Complex64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c0;
        s
    }

    /// `z^{-k}` truncated at `order`.
    pub fn monomial(k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = Complex64::new(1.0, 0.0);
        }
        s
    }

    /// The seed `u(z) = c_1/z` with `c_1 = γ/π`.
    pub fn seed(gamma: Complex64, order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = gamma / std::f64::consts::PI;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn c0(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn set_coeff(&mut self, k: usize, v: Complex64) {
        if k <= self.order() {
            self.coeffs[k] = v;
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs: Vec<Complex64> = self.coeffs.iter().take(order + 1).copied().collect();
        coeffs.resize(order + 1, ZERO);
        Self { coeffs }
    }

    /// Same coefficients with `c_0` removed.
    pub fn without_constant(&self) -> Self {
        let mut s = self.clone();
        s.coeffs[0] = ZERO;
        s
    }

    /// `Σ c_k z^{-k}` by Horner's rule in `1/z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let x = 1.0 / z;
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&c| c * k).collect() }
    }

    /// Cauchy product truncated at the smaller of the two orders. Terms are
    /// summed in symmetric pairs, so `a·b` and `b·a` agree bit for bit.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let (a, b) = (&self.coeffs, &other.coeffs);
        let out = (0..=n)
            .map(|k| {
                let mut acc = ZERO;
                for i in 0..k.div_ceil(2) {
                    acc += a[i] * b[k - i] + a[k - i] * b[i];
                }
                if k % 2 == 0 {
                    acc += a[k / 2] * b[k / 2];
                }
                acc
            })
            .collect();
        Self { coeffs: out }
    }

    pub fn powi(&self, exp: u32) -> Self {
        let mut acc = Self::constant(Complex64::new(1.0, 0.0), self.order());
        for _ in 0..exp {
            acc = acc.mul(self);
        }
        acc
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let n = self.order().min(other.order());
        Self { coeffs: (0..=n).map(|k| f(self.coeffs[k], other.coeffs[k])).collect() }
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        TruncatedSeries::mul(self, rhs)
    }
}

/// `a·b` truncated at the common order.
pub fn series_mul(a: &TruncatedSeries, b: &TruncatedSeries) -> TruncatedSeries {
    a.mul(b)
}

/// `f(u_0 + s(z)) = Σ_j f_j s(z)^j` for Taylor data `f_j` around `u_0`.
/// `s` must have zero constant term.
pub fn compose_analytic(f_taylor: &[Complex64], s: &TruncatedSeries) -> Result<TruncatedSeries> {
    if s.c0() != ZERO {
        return Err(Error::OrderMismatch(format!(
            "composition needs a series vanishing at z = infinity, got c0 = {}",
            s.c0()
        )));
    }
    let n = s.order();
    // s^j starts at z^{-j}, so only j <= n can contribute
    let used = f_taylor.len().min(n + 1);
    let mut acc = TruncatedSeries::zero(n);
    for &f in f_taylor[..used].iter().rev() {
        acc = acc.mul(s);
        acc.coeffs[0] += f;
    }
    Ok(acc)
}

/// `B'_k = k·[z^{-k}] Σ_{j≥1} t_j s^j` for Taylor data `t_j` of `S'`.
pub fn b_prime_from_taylor(taylor: &[Complex64], s: &TruncatedSeries, k_max: usize) -> Result<Vec<Complex64>> {
    if k_max > s.order() {
        return Err(Error::OrderMismatch(format!(
            "{k_max} speeds requested from a series of order {}",
            s.order()
        )));
    }
    if taylor.len() < k_max + 1 {
        return Err(Error::OrderMismatch(format!(
            "{} Taylor coefficients cannot resolve order {k_max}",
            taylor.len()
        )));
    }
    let composed = compose_analytic(&taylor[..=k_max], &s.truncate(k_max))?;
    Ok((1..=k_max).map(|k| composed.coeff(k) * k as f64).collect())
}

/// `B'_k(u_0)`, `k = 1..=k_max`, for the series `s` at the modular
/// parameter held by `fns`.
pub fn b_prime_coeffs(u0: Complex64, s: &TruncatedSeries, fns: &EllipticFns, k_max: usize) -> Result<Vec<Complex64>> {
    if k_max > s.order() {
        return Err(Error::OrderMismatch(format!(
            "{k_max} speeds requested from a series of order {}",
            s.order()
        )));
    }
    let taylor = fns.s_prime_taylor(u0, k_max)?;
    b_prime_from_taylor(&taylor, s, k_max)
}

/// Hydrodynamic speeds `φ_k = B'_k(u_0)/S'(u_0)`, `k = 1..=k_max`.
pub fn phi_k(u0: Complex64, s: &TruncatedSeries, fns: &EllipticFns, k_max: usize) -> Result<Vec<Complex64>> {
    let sp = fns.s_prime(u0)?;
    if sp.norm() < 1e-12 {
        return Err(Error::ZeroDenominator("S'(u0) in phi_k"));
    }
    Ok(b_prime_coeffs(u0, s, fns, k_max)?.into_iter().map(|b| b / sp).collect())
}

/// Independent check of [`b_prime_coeffs`]: sample `S'(u_0 + s(z))` at
/// `points` equispaced points on `|z| = ρ` and invert the discrete Fourier
/// transform. `ρ` starts at `10·max_k |c_k|^{1/k}` (so `|c_1|/ρ ≤ 0.1`) and
/// is doubled until `|s(z)|` on the circle stays within half the distance
/// from `u_0` to the nearest pole of `S'`; otherwise the contour would
/// enclose a pole and return Laurent rather than Taylor coefficients.
pub fn b_prime_sampling_oracle(
    u0: Complex64,
    s: &TruncatedSeries,
    fns: &EllipticFns,
    k_max: usize,
    points: usize,
) -> Result<Vec<Complex64>> {
    if s.c0() != ZERO {
        return Err(Error::OrderMismatch("sampling oracle needs c0 = 0".into()));
    }
    if points <= 2 * k_max {
        return Err(Error::OrderMismatch(format!("{points} samples cannot resolve order {k_max}")));
    }
    let scale = (1..=s.order())
        .map(|k| s.coeff(k).norm().powf(1.0 / k as f64))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(vec![ZERO; k_max]);
    }
    let reach = 0.5 * s_pole_distance(fns, u0);
    let circle = |rho: f64| {
        (0..points).map(move |j| Complex64::from_polar(rho, std::f64::consts::TAU * j as f64 / points as f64))
    };
    let mut rho = 10.0 * scale;
    while circle(rho).any(|z| s.eval(z).norm() > reach) {
        rho *= 2.0;
    }
    let samples = circle(rho).map(|z| fns.s_prime(u0 + s.eval(z))).collect::<Result<Vec<_>>>()?;
    Ok((1..=k_max)
        .map(|k| {
            // [z^{-k}] f = (ρ^k / M) Σ_j f(z_j) e^{+ikθ_j}
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(j, &f)| f * Complex64::from_polar(1.0, std::f64::consts::TAU * (k * j) as f64 / points as f64))
                .sum();
            sum * rho.powi(k as i32) / points as f64 * k as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn complex() -> impl Strategy<Value = Complex64> {
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b))
    }

    fn series(order: usize) -> impl Strategy<Value = TruncatedSeries> {
        prop::collection::vec(complex(), order + 1).prop_map(|v| TruncatedSeries::from_coeffs(v).unwrap())
    }

    #[test]
    fn monomial_product() {
        let a = TruncatedSeries::monomial(1, 5);
        let p = a.mul(&a);
        assert_eq!(p, TruncatedSeries::monomial(2, 5));
    }

    #[test]
    fn hand_expansion() {
        let s = TruncatedSeries::new(ZERO, &[c(1.0, 0.0), c(1.0, 0.0), ZERO, ZERO]);
        let sq = s.mul(&s);
        let expect = [0.0, 0.0, 1.0, 2.0, 1.0];
        for (k, e) in expect.iter().enumerate() {
            assert_eq!(sq.coeff(k), c(*e, 0.0));
        }
    }

    #[test]
    fn compose_identity_and_square() {
        let s = TruncatedSeries::new(ZERO, &[c(0.3, 0.1), c(-0.2, 0.05), c(0.1, 0.0)]);
        let u0 = c(0.4, 0.2);
        let id = compose_analytic(&[u0, c(1.0, 0.0)], &s).unwrap();
        assert_eq!(id.c0(), u0);
        for k in 1..=3 {
            assert_eq!(id.coeff(k), s.coeff(k));
        }
        let c1 = c(0.7, -0.2);
        let lin = TruncatedSeries::new(ZERO, &[c1, ZERO, ZERO]);
        // f(x) = x² around u0: [u0², 2u0, 1]
        let sq = compose_analytic(&[u0 * u0, u0 * 2.0, c(1.0, 0.0)], &lin).unwrap();
        assert!((sq.coeff(0) - u0 * u0).norm() < 1e-15);
        assert!((sq.coeff(1) - u0 * c1 * 2.0).norm() < 1e-15);
        assert!((sq.coeff(2) - c1 * c1).norm() < 1e-15);
        assert!(compose_analytic(&[u0], &TruncatedSeries::constant(c(1.0, 0.0), 3)).is_err());
    }

    /// Expand f(s) for a cubic f by explicit powers.
    fn brute_compose(f: &[Complex64; 4], s: &TruncatedSeries) -> TruncatedSeries {
        let mut acc = TruncatedSeries::zero(s.order());
        let mut power = TruncatedSeries::constant(c(1.0, 0.0), s.order());
        for &fj in f {
            acc = &acc + &power.scale(fj);
            power = power.mul(s);
        }
        acc
    }

    #[test]
    fn zero_series_gives_zero_b_prime() {
        let fns = EllipticFns::from_tau(c(0.0, 1.1)).unwrap();
        let b = b_prime_coeffs(c(0.5, 0.0), &TruncatedSeries::zero(8), &fns, 4).unwrap();
        assert!(b.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn leading_b_prime() {
        let fns = EllipticFns::from_tau(c(0.0, 1.1)).unwrap();
        let u0 = c(0.37, 0.1);
        let s = TruncatedSeries::new(ZERO, &[c(0.3, 0.0), c(0.1, 0.02), c(0.05, 0.0), ZERO]);
        let b = b_prime_coeffs(u0, &s, &fns, 3).unwrap();
        let jet = fns.s_prime_jet(u0).unwrap();
        assert!((b[0] - s.coeff(1) * jet[1]).norm() < 1e-13);
        let phi = phi_k(u0, &s, &fns, 3).unwrap();
        assert!((phi[0] - s.coeff(1) * jet[1] / jet[0]).norm() < 1e-12);
        assert!(b_prime_coeffs(u0, &s, &fns, 5).is_err());
    }

    #[test]
    fn sampling_oracle_matches_composition() {
        let fns = EllipticFns::from_tau(c(0.2, 1.3)).unwrap();
        let u0 = c(0.21, 0.17);
        let s = TruncatedSeries::new(ZERO, &[c(0.4, -0.1), c(0.2, 0.3), c(-0.1, 0.05), c(0.02, 0.0), c(0.01, 0.01)]);
        let exact = b_prime_coeffs(u0, &s, &fns, 4).unwrap();
        let oracle = b_prime_sampling_oracle(u0, &s, &fns, 4, 32).unwrap();
        for (a, b) in exact.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()), "{a} vs {b}");
        }
    }

    #[test]
    fn phi_rejects_zero_of_s_prime() {
        let fns = EllipticFns::from_tau(c(0.0, 1.1)).unwrap();
        let w2 = (1.0 + fns.tau()) * 0.5;
        let s = TruncatedSeries::seed(c(1.0, 0.0), 6);
        assert!(matches!(phi_k(w2, &s, &fns, 3), Err(Error::ZeroDenominator(_))));
    }

    proptest! {
        #[test]
        fn product_commutes(a in series(6), b in series(6)) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
        }

        #[test]
        fn truncation_commutes_with_product(a in series(8), b in series(8)) {
            let full = a.mul(&b).truncate(5);
            let early = a.truncate(5).mul(&b.truncate(5));
            for k in 0..=5 {
                prop_assert!((full.coeff(k) - early.coeff(k)).norm() < 1e-13);
            }
        }

        #[test]
        fn compose_matches_brute_expansion(f0 in complex(), f1 in complex(), f2 in complex(), f3 in complex(), s in series(6)) {
            let s = s.without_constant();
            let f = [f0, f1, f2, f3];
            let fast = compose_analytic(&f, &s).unwrap();
            let slow = brute_compose(&f, &s);
            for k in 0..=6 {
                prop_assert!((fast.coeff(k) - slow.coeff(k)).norm() < 1e-12);
            }
        }

        #[test]
        fn composition_is_associative(f in prop::collection::vec(complex(), 4), g in prop::collection::vec(complex(), 4), s in series(6)) {
            // f(g(s)) with g(0) = 0, versus (f∘g)(s)
            let s = s.without_constant();
            let mut g = g;
            g[0] = ZERO;
            let inner = compose_analytic(&g, &s).unwrap();
            let nested = compose_analytic(&f, &inner).unwrap();
            let g_as_series = TruncatedSeries::from_coeffs(g.clone()).unwrap().truncate(6);
            let fg = compose_analytic(&f, &g_as_series).unwrap();
            let direct = compose_analytic(fg.coeffs(), &s).unwrap();
            for k in 0..=6 {
                prop_assert!((nested.coeff(k) - direct.coeff(k)).norm() < 1e-12);
            }
        }

        #[test]
        fn b_prime_is_linear_in_taylor_data(t in prop::collection::vec(complex(), 5), s in series(6)) {
            let s = s.without_constant();
            let b = b_prime_from_taylor(&t, &s, 4).unwrap();
            let doubled: Vec<Complex64> = t.iter().map(|v| v * 2.0).collect();
            let b2 = b_prime_from_taylor(&doubled, &s, 4).unwrap();
            for (x, y) in b.iter().zip(&b2) {
                prop_assert_eq!(*x * 2.0, *y);
            }
        }
    }
}
