//! Jacobi theta functions `θ_a(u|τ)`, `a = 1..4`, with the conventions
//!
//! ```text
//! θ_1(u) = -Σ_k exp(πiτ(k+½)² + 2πi(u+½)(k+½))
//! θ_2(u) =  Σ_k exp(πiτ(k+½)² + 2πi u (k+½))
//! θ_3(u) =  Σ_k exp(πiτ k²     + 2πi u k)
//! θ_4(u) =  Σ_k exp(πiτ k²     + 2πi(u+½) k)
//! ```
//!
//! so that `θ_1` is odd, the others even, and `θ_a` vanishes on
//! `ω_{a-1} + ℤ + ℤτ`. Values and the first three `u`-derivatives are
//! produced together by term-wise differentiation of the series.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Modular parameter `τ` (Im τ > 0) together with its nome `q = exp(iπτ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModularParam {
    tau: Complex64,
    #[serde(skip)]
    nome: Complex64,
    #[serde(skip)]
    nome_sq: Complex64,
}

impl ModularParam {
    /// Largest admissible `|q|`.
    pub const MAX_NOME: f64 = 0.95;

    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.re.is_finite() && tau.im.is_finite()) {
            return Err(Error::InvalidModulus { tau, reason: "non-finite" });
        }
        if tau.im <= 0.0 {
            return Err(Error::InvalidModulus { tau, reason: "Im tau must be positive" });
        }
        let nome = (I * PI * tau).exp();
        if nome.norm() > Self::MAX_NOME {
            return Err(Error::InvalidModulus { tau, reason: "|q| exceeds 0.95" });
        }
        Ok(Self { tau, nome, nome_sq: nome * nome })
    }

    /// `τ = i·y`.
    pub fn imaginary(y: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, y))
    }

    /// Smallest `Im τ` accepted on the imaginary axis.
    pub fn min_imaginary() -> f64 {
        -Self::MAX_NOME.ln() / PI
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn nome(&self) -> Complex64 {
        self.nome
    }

    /// The parameter `τ/2`.
    pub fn half(&self) -> Result<Self> {
        Self::new(self.tau * 0.5)
    }

    /// The parameter `2τ`.
    pub fn double(&self) -> Result<Self> {
        Self::new(self.tau * 2.0)
    }

    pub fn half_period(&self, hp: HalfPeriod) -> Complex64 {
        hp.value(self.tau)
    }
}

impl<'de> Deserialize<'de> for ModularParam {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            tau: Complex64,
        }
        let raw = Raw::deserialize(d)?;
        ModularParam::new(raw.tau).map_err(serde::de::Error::custom)
    }
}

/// Theta label, taken modulo 4 (`θ_a ≡ θ_{a+4}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThetaIndex(u8);

impl ThetaIndex {
    pub const ONE: Self = Self(1);
    pub const TWO: Self = Self(2);
    pub const THREE: Self = Self(3);
    pub const FOUR: Self = Self(4);
    pub const ALL: [Self; 4] = [Self::ONE, Self::TWO, Self::THREE, Self::FOUR];

    pub fn new(a: i64) -> Self {
        Self((a - 1).rem_euclid(4) as u8 + 1)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// The half period on whose lattice translate `θ_a` vanishes.
    pub fn zero_half_period(self) -> HalfPeriod {
        match self.0 {
            1 => HalfPeriod::Omega0,
            2 => HalfPeriod::Omega1,
            3 => HalfPeriod::Omega2,
            _ => HalfPeriod::Omega3,
        }
    }

    /// Sign picked up under `u → u + 1`.
    fn unit_shift_sign(self) -> f64 {
        match self.0 {
            1 | 2 => -1.0,
            _ => 1.0,
        }
    }

    /// Sign in front of `exp(-πiτ - 2πiu)` under `u → u + τ`.
    fn tau_shift_sign(self) -> f64 {
        match self.0 {
            1 | 4 => -1.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for ThetaIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "theta_{}", self.0)
    }
}

/// `ω_0 = 0`, `ω_1 = 1/2`, `ω_2 = (1+τ)/2`, `ω_3 = τ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HalfPeriod {
    Omega0,
    Omega1,
    Omega2,
    Omega3,
}

impl HalfPeriod {
    pub const ALL: [Self; 4] = [Self::Omega0, Self::Omega1, Self::Omega2, Self::Omega3];

    pub fn label(self) -> u8 {
        match self {
            Self::Omega0 => 0,
            Self::Omega1 => 1,
            Self::Omega2 => 2,
            Self::Omega3 => 3,
        }
    }

    pub fn value(self, tau: Complex64) -> Complex64 {
        match self {
            Self::Omega0 => Complex64::new(0.0, 0.0),
            Self::Omega1 => Complex64::new(0.5, 0.0),
            Self::Omega2 => (1.0 + tau) * 0.5,
            Self::Omega3 => tau * 0.5,
        }
    }
}

/// Stopping rule for the theta series and the product formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub eps: f64,
    /// Cap on series terms per summation direction.
    pub max_terms: usize,
    /// Cap on factors of the product formula, which only converges geometrically.
    pub max_factors: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { eps: 1e-16, max_terms: 64, max_factors: 4096 }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) || self.max_terms < 2 || self.max_factors < 1 {
            return Err(Error::InvalidInput(format!("invalid truncation policy {self:?}")));
        }
        Ok(())
    }
}

/// `θ_a(u|τ)` and its first three `u`-derivatives.
pub type ThetaJet = [Complex64; 4];

/// Distance from `u` to the lattice `offset + ℤ + ℤτ`.
pub fn lattice_distance(u: Complex64, offset: Complex64, tau: Complex64) -> f64 {
    let mut w = u - offset;
    let n = (w.im / tau.im).round();
    w -= tau * n;
    w.re -= w.re.round();
    let mut best = f64::INFINITY;
    for i in -1..=1 {
        for j in -1..=1 {
            let d = (w - i as f64 - tau * j as f64).norm();
            best = best.min(d);
        }
    }
    best
}

/// Distance from `u` to the zero set of `θ_a`.
pub fn zero_distance(a: ThetaIndex, u: Complex64, m: &ModularParam) -> f64 {
    lattice_distance(u, a.zero_half_period().value(m.tau), m.tau)
}

/// `θ_a(u|τ)` from the defining series.
pub fn theta(a: ThetaIndex, u: Complex64, m: &ModularParam, tp: &TruncationPolicy) -> Result<Complex64> {
    Ok(theta_jet(a, u, m, tp)?[0])
}

/// `order`-th `u`-derivative of `θ_a`, `order ∈ {0, 1, 2, 3}`.
pub fn theta_du(
    a: ThetaIndex,
    u: Complex64,
    m: &ModularParam,
    tp: &TruncationPolicy,
    order: usize,
) -> Result<Complex64> {
    if order > 3 {
        return Err(Error::InvalidInput(format!("theta derivative order {order} > 3")));
    }
    Ok(theta_jet(a, u, m, tp)?[order])
}

/// `θ_a(0|τ)`.
pub fn theta_const(a: ThetaIndex, m: &ModularParam, tp: &TruncationPolicy) -> Result<Complex64> {
    theta(a, Complex64::new(0.0, 0.0), m, tp)
}

/// Value and derivatives up to order three.
///
/// When `|Im u| > Im τ` the argument is first moved back towards the real
/// axis by a lattice translation; the quasi-periodicity multiplier
/// `C·exp(-2πinu)` is then folded into the derivatives by the Leibniz rule.
pub fn theta_jet(a: ThetaIndex, u: Complex64, m: &ModularParam, tp: &TruncationPolicy) -> Result<ThetaJet> {
    let y = m.tau.im;
    let n = if u.im.abs() > y { (u.im / y).round() } else { 0.0 };
    let w = u - m.tau * n;
    let n1 = w.re.round();
    let v = w - n1;

    let base = series_jet(a, v, m, tp)?;
    if n == 0.0 && n1 == 0.0 {
        return Ok(base);
    }

    // θ(v + n1 + nτ) = s^n σ^{n1} exp(-πi n² τ - 2πi n v) θ(v)
    let sign = a.tau_shift_sign().powi(n as i32) * a.unit_shift_sign().powi(n1 as i32);
    let factor = (-I * PI * n * n * m.tau - 2.0 * PI * I * n * v).exp() * sign;
    let lam = -2.0 * PI * I * n;
    let lam2 = lam * lam;
    let lam3 = lam2 * lam;
    Ok([
        factor * base[0],
        factor * (base[1] + lam * base[0]),
        factor * (base[2] + 2.0 * lam * base[1] + lam2 * base[0]),
        factor * (base[3] + 3.0 * lam * base[2] + 3.0 * lam2 * base[1] + lam3 * base[0]),
    ])
}

/// Value and derivatives from the defining series at `u` itself, with no
/// lattice reduction; meant for `|Im u|` up to a few `Im τ`.
pub fn theta_jet_unreduced(a: ThetaIndex, u: Complex64, m: &ModularParam, tp: &TruncationPolicy) -> Result<ThetaJet> {
    series_jet(a, u, m, tp)
}

/// Raw bilateral sum, walking outwards from the central index with
/// multiplicative term recurrences.
fn series_jet(a: ThetaIndex, u: Complex64, m: &ModularParam, tp: &TruncationPolicy) -> Result<ThetaJet> {
    let (delta, eta, overall) = match a.get() {
        1 => (0.5, 0.5, -1.0),
        2 => (0.5, 0.0, 1.0),
        3 => (0.0, 0.0, 1.0),
        _ => (0.0, 0.5, 1.0),
    };
    let x = u + eta;
    let tau = m.tau;
    let two_pi_i = 2.0 * PI * I;

    let mut sums = [Complex64::new(0.0, 0.0); 4];
    let accumulate = |sums: &mut [Complex64; 4], mm: f64, t: Complex64| -> f64 {
        let k = two_pi_i * mm;
        let t1 = t * k;
        let t2 = t1 * k;
        let t3 = t2 * k;
        sums[0] += t;
        sums[1] += t1;
        sums[2] += t2;
        sums[3] += t3;
        t.norm() * (1.0 + 2.0 * PI * mm.abs()).powi(3)
    };

    let m0 = delta;
    let t0 = (I * PI * tau * m0 * m0 + two_pi_i * x * m0).exp();
    accumulate(&mut sums, m0, t0);

    let q2 = m.nome_sq;
    // upward: t(m+1) = t(m) · exp(πiτ(2m+1) + 2πix), ratio advances by q²
    let mut t = t0;
    let mut ratio = (I * PI * tau * (2.0 * m0 + 1.0) + two_pi_i * x).exp();
    let mut mm = m0;
    let mut converged = false;
    for j in 1..=tp.max_terms {
        t *= ratio;
        ratio *= q2;
        mm += 1.0;
        let weight = accumulate(&mut sums, mm, t);
        if j >= 2 && weight <= tp.eps * (1.0 + sums[0].norm()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::TruncationExceeded { max_terms: tp.max_terms });
    }

    // downward: t(m-1) = t(m) · exp(-πiτ(2m-1) - 2πix)
    let mut t = t0;
    let mut ratio = (-I * PI * tau * (2.0 * m0 - 1.0) - two_pi_i * x).exp();
    let mut mm = m0;
    converged = false;
    for j in 1..=tp.max_terms {
        t *= ratio;
        ratio *= q2;
        mm -= 1.0;
        let weight = accumulate(&mut sums, mm, t);
        if j >= 2 && weight <= tp.eps * (1.0 + sums[0].norm()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::TruncationExceeded { max_terms: tp.max_terms });
    }

    Ok(sums.map(|s| s * overall))
}

/// `θ_1(u|τ)` from the infinite product
/// `i·exp(iπτ/4 - iπu) Π_k (1 - q^{2k})(1 - e^{2πi((k-1)τ+u)})(1 - e^{2πi(kτ-u)})`.
///
/// Shares nothing with the series path; used as an oracle for it.
pub fn theta1_product(u: Complex64, m: &ModularParam, tp: &TruncationPolicy) -> Result<Complex64> {
    let tau = m.tau;
    let q2 = m.nome_sq;
    let e_u = (2.0 * PI * I * u).exp();
    let e_mu = (-2.0 * PI * I * u).exp();

    let mut prod = I * (I * PI * tau / 4.0 - I * PI * u).exp();
    let mut a = q2; // q^{2k}
    let mut b = e_u; // e^{2πi((k-1)τ + u)}
    let mut c = e_mu * q2; // e^{2πi(kτ - u)}
    for _ in 0..tp.max_factors {
        prod *= (1.0 - a) * (1.0 - b) * (1.0 - c);
        if a.norm() < tp.eps && b.norm() < tp.eps && c.norm() < tp.eps {
            return Ok(prod);
        }
        a *= q2;
        b *= q2;
        c *= q2;
    }
    Err(Error::TruncationExceeded { max_terms: tp.max_factors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1.0)
    }

    /// Plain fixed-window summation of the defining series, no recurrences.
    fn brute_theta(a: u8, u: Complex64, tau: Complex64) -> Complex64 {
        let mut s = c(0.0, 0.0);
        for k in -64i32..64 {
            let k = k as f64;
            let term = match a {
                1 => -(I * PI * tau * (k + 0.5).powi(2) + 2.0 * PI * I * (u + 0.5) * (k + 0.5)).exp(),
                2 => (I * PI * tau * (k + 0.5).powi(2) + 2.0 * PI * I * u * (k + 0.5)).exp(),
                3 => (I * PI * tau * k * k + 2.0 * PI * I * u * k).exp(),
                _ => (I * PI * tau * k * k + 2.0 * PI * I * (u + 0.5) * k).exp(),
            };
            s += term;
        }
        s
    }

    #[test]
    fn domain_guard() {
        assert!(ModularParam::new(c(0.0, 0.0)).is_err());
        assert!(ModularParam::new(c(0.3, -1.0)).is_err());
        assert!(ModularParam::imaginary(0.01).is_err());
        assert!(ModularParam::imaginary(0.02).is_ok());
        let y = ModularParam::min_imaginary();
        assert!(ModularParam::imaginary(y * 1.0001).is_ok());
        assert!(ModularParam::imaginary(y * 0.999).is_err());
    }

    #[test]
    fn index_is_cyclic() {
        assert_eq!(ThetaIndex::new(5), ThetaIndex::ONE);
        assert_eq!(ThetaIndex::new(0), ThetaIndex::FOUR);
        assert_eq!(ThetaIndex::new(-2), ThetaIndex::TWO);
        assert_eq!(ThetaIndex::new(7).get(), 3);
    }

    #[test]
    fn theta1_vanishes_at_origin() {
        let m = ModularParam::imaginary(1.0).unwrap();
        let tp = TruncationPolicy::default();
        assert!(theta(ThetaIndex::ONE, c(0.0, 0.0), &m, &tp).unwrap().norm() < 1e-15);
        assert!(theta_const(ThetaIndex::ONE, &m, &tp).unwrap().norm() < 1e-15);
    }

    #[test]
    fn theta3_tends_to_one() {
        let m = ModularParam::imaginary(40.0).unwrap();
        let tp = TruncationPolicy::default();
        let v = theta_const(ThetaIndex::THREE, &m, &tp).unwrap();
        assert!((v - 1.0).norm() < 1e-15);
    }

    #[test]
    fn theta2_const_leading_term() {
        let m = ModularParam::imaginary(40.0).unwrap();
        let tp = TruncationPolicy::default();
        let v = theta_const(ThetaIndex::TWO, &m, &tp).unwrap();
        let lead = 2.0 * (-10.0 * PI).exp();
        assert!((v.re - lead).abs() / lead < 1e-15, "{v} vs {lead}");
        assert!(v.im.abs() < 1e-15 * lead);
    }

    #[test]
    fn matches_brute_force_window() {
        let m = ModularParam::new(c(0.2, 1.1)).unwrap();
        let tp = TruncationPolicy::default();
        let u = c(0.3, 0.1);
        for a in ThetaIndex::ALL {
            let v = theta(a, u, &m, &tp).unwrap();
            let b = brute_theta(a.get(), u, m.tau());
            assert!((v - b).norm() / b.norm() < 1e-12, "{a}: {v} vs {b}");
        }
    }

    #[test]
    fn reduction_matches_direct_sum() {
        let m = ModularParam::new(c(0.1, 0.8)).unwrap();
        let tp = TruncationPolicy::default();
        for u in [c(0.3, 1.7), c(-2.4, -1.9), c(5.1, 2.5)] {
            for a in ThetaIndex::ALL {
                let v = theta(a, u, &m, &tp).unwrap();
                let b = brute_theta(a.get(), u, m.tau());
                assert!((v - b).norm() / b.norm() < 1e-11, "{a} at {u}: {v} vs {b}");
            }
        }
    }

    #[test]
    fn derivative_identities_at_origin() {
        let m = ModularParam::new(c(0.15, 0.9)).unwrap();
        let tp = TruncationPolicy::default();
        let z = c(0.0, 0.0);
        let d1 = theta_du(ThetaIndex::ONE, z, &m, &tp, 1).unwrap();
        let prod: Complex64 = [ThetaIndex::TWO, ThetaIndex::THREE, ThetaIndex::FOUR]
            .iter()
            .map(|&a| theta_const(a, &m, &tp).unwrap())
            .product();
        assert!(rel(d1, PI * prod) < 1e-13);
        assert!(theta_du(ThetaIndex::TWO, z, &m, &tp, 1).unwrap().norm() < 1e-14);
        assert!(theta_du(ThetaIndex::THREE, z, &m, &tp, 1).unwrap().norm() < 1e-14);
        assert!(theta_du(ThetaIndex::ONE, z, &m, &tp, 4).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = ModularParam::new(c(-0.2, 1.3)).unwrap();
        let tp = TruncationPolicy::default();
        let h = 1e-4;
        for u in [c(0.21, 0.13), c(0.4, -0.3), c(0.1, 1.6)] {
            for a in ThetaIndex::ALL {
                let jet = theta_jet(a, u, &m, &tp).unwrap();
                let f = |x: Complex64| theta_jet(a, x, &m, &tp).unwrap();
                for k in 1..4 {
                    let fd = (f(u + h)[k - 1] - f(u - h)[k - 1]) / (2.0 * h);
                    assert!(rel(jet[k], fd) < 1e-6, "{a} order {k} at {u}");
                }
                let fd2 = (f(u + h)[0] - 2.0 * jet[0] + f(u - h)[0]) / (h * h);
                assert!(rel(jet[2], fd2) < 1e-6);
            }
        }
    }

    #[test]
    fn product_formula_zeros() {
        let m = ModularParam::new(c(0.3, 0.7)).unwrap();
        let tp = TruncationPolicy::default();
        assert!(theta1_product(c(0.0, 0.0), &m, &tp).unwrap().norm() < 1e-14);
        assert!(theta1_product(c(1.0, 0.0), &m, &tp).unwrap().norm() < 1e-12);
    }

    #[test]
    fn product_formula_handles_small_im_tau() {
        let m = ModularParam::imaginary(0.02).unwrap();
        let tp = TruncationPolicy::default();
        let u = c(0.23, 0.004);
        let p = theta1_product(u, &m, &tp).unwrap();
        let s = theta(ThetaIndex::ONE, u, &m, &tp).unwrap();
        assert!((p - s).norm() / s.norm() < 1e-10, "{p} vs {s}");
    }

    #[test]
    fn zeros_on_half_period_lattice() {
        let m = ModularParam::new(c(0.25, 0.85)).unwrap();
        let tp = TruncationPolicy::default();
        for a in ThetaIndex::ALL {
            let w = m.half_period(a.zero_half_period());
            for shift in [c(0.0, 0.0), c(1.0, 0.0), m.tau(), m.tau() - 2.0] {
                let v = theta(a, w + shift, &m, &tp).unwrap();
                assert!(v.norm() < 1e-12, "{a} at {}: {v}", w + shift);
            }
            assert!(zero_distance(a, w + m.tau() * 3.0 - 1.0, &m) < 1e-12);
        }
    }

    #[test]
    fn truncation_cap_is_enforced() {
        let m = ModularParam::imaginary(0.02).unwrap();
        let tp = TruncationPolicy { eps: 1e-16, max_terms: 4, max_factors: 8 };
        assert!(matches!(
            theta(ThetaIndex::THREE, c(0.1, 0.0), &m, &tp),
            Err(Error::TruncationExceeded { .. })
        ));
        assert!(theta1_product(c(0.1, 0.0), &m, &tp).is_err());
    }

    #[test]
    fn lattice_distance_basics() {
        let tau = c(0.4, 0.9);
        assert!(lattice_distance(c(3.0, 0.0) + tau * 2.0, c(0.0, 0.0), tau) < 1e-12);
        let d = lattice_distance(c(0.5, 0.0), c(0.0, 0.0), tau);
        assert!((d - 0.5).abs() < 1e-12);
    }
}
