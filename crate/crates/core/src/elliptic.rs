//! Logarithmic derivatives `E^(a)(u) = ∂_u log θ_a(u|τ)`, the function
//! `S(u) = log(θ_1(u)/θ_4(u))` and the identities tying them together.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theta::{self, lattice_distance, zero_distance, ModularParam, ThetaIndex, ThetaJet, TruncationPolicy};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default distance below which a point is treated as sitting on a pole.
pub const DEFAULT_POLE_GUARD: f64 = 1e-8;

/// Radius and sample count of the contour used for Taylor coefficients of
/// order three and above.
pub const CAUCHY_RADIUS: f64 = 0.05;
pub const CAUCHY_SAMPLES: usize = 64;

/// Value of `S` obtained by continuation from `u = 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchedLogValue {
    pub value: Complex64,
    pub base_point: Complex64,
    /// Vertices of the straight-segment path after the base point.
    pub path: Vec<Complex64>,
}

/// `E^(a)(u)` tagged with its label and argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EFunctionValue {
    pub a: u8,
    pub u: Complex64,
    pub value: Complex64,
}

/// Both sides of `E^(1)(u|τ) + E^(4)(u|τ) = E^(1)(u|τ/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// Mixed relative residual `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_residual(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

/// Evaluation context: a modular parameter with cached theta constants.
#[derive(Debug, Clone, Copy)]
pub struct EllipticFns {
    m: ModularParam,
    tp: TruncationPolicy,
    guard: f64,
    /// `θ_a(0)` indexed by `a - 1`.
    consts: [Complex64; 4],
}

impl EllipticFns {
    pub fn new(m: ModularParam) -> Result<Self> {
        Self::with_policy(m, TruncationPolicy::default(), DEFAULT_POLE_GUARD)
    }

    pub fn from_tau(tau: Complex64) -> Result<Self> {
        Self::new(ModularParam::new(tau)?)
    }

    pub fn with_policy(m: ModularParam, tp: TruncationPolicy, guard: f64) -> Result<Self> {
        tp.validate()?;
        if !(guard > 0.0) {
            return Err(Error::InvalidInput(format!("pole guard must be positive, got {guard}")));
        }
        let mut consts = [Complex64::new(0.0, 0.0); 4];
        for a in ThetaIndex::ALL {
            consts[a.get() as usize - 1] = theta::theta_const(a, &m, &tp)?;
        }
        Ok(Self { m, tp, guard, consts })
    }

    /// Same policy and guard at a different modular parameter.
    pub fn at(&self, m: ModularParam) -> Result<Self> {
        Self::with_policy(m, self.tp, self.guard)
    }

    /// Context for `τ/2`.
    pub fn half(&self) -> Result<Self> {
        self.at(self.m.half()?)
    }

    pub fn param(&self) -> &ModularParam {
        &self.m
    }

    pub fn tau(&self) -> Complex64 {
        self.m.tau()
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.tp
    }

    /// `θ_a(0|τ)`.
    pub fn theta0(&self, a: ThetaIndex) -> Complex64 {
        self.consts[a.get() as usize - 1]
    }

    /// `θ_4(0)^4`, the constant recurring throughout the S identities.
    pub fn theta4_fourth(&self) -> Complex64 {
        self.theta0(ThetaIndex::FOUR).powi(4)
    }

    pub fn theta(&self, a: ThetaIndex, u: Complex64) -> Result<Complex64> {
        theta::theta(a, u, &self.m, &self.tp)
    }

    pub fn theta_jet(&self, a: ThetaIndex, u: Complex64) -> Result<ThetaJet> {
        theta::theta_jet(a, u, &self.m, &self.tp)
    }

    fn check_off_zeros(&self, a: ThetaIndex, u: Complex64, what: &'static str) -> Result<()> {
        let d = zero_distance(a, u, &self.m);
        if d <= self.guard {
            return Err(Error::NearPole { what, at: u, distance: d });
        }
        Ok(())
    }

    fn check_off_s_poles(&self, u: Complex64, what: &'static str) -> Result<()> {
        self.check_off_zeros(ThetaIndex::ONE, u, what)?;
        self.check_off_zeros(ThetaIndex::FOUR, u, what)
    }

    /// `E^(a)(u)`.
    pub fn eisenstein(&self, a: ThetaIndex, u: Complex64) -> Result<Complex64> {
        Ok(self.eisenstein_jet(a, u)?[0])
    }

    pub fn eisenstein_value(&self, a: ThetaIndex, u: Complex64) -> Result<EFunctionValue> {
        Ok(EFunctionValue { a: a.get(), u, value: self.eisenstein(a, u)? })
    }

    /// `[E^(a), E^(a)', E^(a)'']` at `u`.
    pub fn eisenstein_jet(&self, a: ThetaIndex, u: Complex64) -> Result<[Complex64; 3]> {
        self.check_off_zeros(a, u, "E-function")?;
        let j = self.theta_jet(a, u)?;
        let r1 = j[1] / j[0];
        let r2 = j[2] / j[0];
        let r3 = j[3] / j[0];
        Ok([r1, r2 - r1 * r1, r3 - 3.0 * r1 * r2 + 2.0 * r1 * r1 * r1])
    }

    /// `order`-th `u`-derivative of `E^(a)`, `order ∈ {1, 2}`.
    pub fn eisenstein_du(&self, a: ThetaIndex, u: Complex64, order: usize) -> Result<Complex64> {
        match order {
            1 | 2 => Ok(self.eisenstein_jet(a, u)?[order]),
            _ => Err(Error::InvalidInput(format!("E-function derivative order {order} not in 1..=2"))),
        }
    }

    /// `θ_1(u)/θ_4(u)`.
    fn s_ratio(&self, u: Complex64) -> Result<Complex64> {
        Ok(self.theta(ThetaIndex::ONE, u)? / self.theta(ThetaIndex::FOUR, u)?)
    }

    /// Principal `log(θ_1(u)/θ_4(u))`, i.e. `S` modulo `2πi`.
    pub fn s_principal(&self, u: Complex64) -> Result<Complex64> {
        self.check_off_s_poles(u, "S")?;
        Ok(self.s_ratio(u)?.ln())
    }

    /// `S(u)` continued along the straight segment from `1/2`.
    pub fn s(&self, u: Complex64) -> Result<BranchedLogValue> {
        self.s_along(&[u])
    }

    /// `S` continued from `1/2` through the given vertices; the last vertex
    /// is the evaluation point.
    pub fn s_along(&self, path: &[Complex64]) -> Result<BranchedLogValue> {
        let target = *path
            .last()
            .ok_or_else(|| Error::InvalidInput("empty continuation path".into()))?;
        let base = Complex64::new(0.5, 0.0);
        let mut from = base;
        let mut ratio_from = self.s_ratio(base)?;
        let mut arg = ratio_from.arg();
        for &to in path {
            let d = self.segment_zero_distance(from, to);
            if d <= self.guard {
                return Err(Error::BranchCrossing { target, distance: d });
            }
            let ratio_to = self.s_ratio(to)?;
            arg += self.arg_increment(from, to, ratio_from, ratio_to, 0)?;
            from = to;
            ratio_from = ratio_to;
        }
        let value = Complex64::new(ratio_from.norm().ln(), arg);
        Ok(BranchedLogValue { value, base_point: base, path: path.to_vec() })
    }

    fn arg_increment(
        &self,
        a: Complex64,
        b: Complex64,
        ra: Complex64,
        rb: Complex64,
        depth: u32,
    ) -> Result<f64> {
        let step = (rb / ra).arg();
        if (depth >= 5 && step.abs() <= 0.25) || depth >= 48 {
            return Ok(step);
        }
        let mid = (a + b) * 0.5;
        let rm = self.s_ratio(mid)?;
        Ok(self.arg_increment(a, mid, ra, rm, depth + 1)? + self.arg_increment(mid, b, rm, rb, depth + 1)?)
    }

    /// Distance from the segment `[a, b]` to the zeros of `θ_1` and `θ_4`.
    fn segment_zero_distance(&self, a: Complex64, b: Complex64) -> f64 {
        let tau = self.tau();
        let mut best = f64::INFINITY;
        for offset in [Complex64::new(0.0, 0.0), tau * 0.5] {
            let j_lo = ((a.im.min(b.im) - offset.im) / tau.im).floor() as i64 - 1;
            let j_hi = ((a.im.max(b.im) - offset.im) / tau.im).ceil() as i64 + 1;
            for j in j_lo..=j_hi {
                let row = offset + tau * j as f64;
                let i_lo = (a.re.min(b.re) - row.re).floor() as i64 - 1;
                let i_hi = (a.re.max(b.re) - row.re).ceil() as i64 + 1;
                for i in i_lo..=i_hi {
                    best = best.min(point_segment_distance(row + i as f64, a, b));
                }
            }
        }
        best
    }

    /// `S'(u)` from the factorized form `πθ_4(0)² θ_2θ_3/(θ_1θ_4)`.
    pub fn s_prime(&self, u: Complex64) -> Result<Complex64> {
        self.check_off_s_poles(u, "S'")?;
        let t1 = self.theta(ThetaIndex::ONE, u)?;
        let t2 = self.theta(ThetaIndex::TWO, u)?;
        let t3 = self.theta(ThetaIndex::THREE, u)?;
        let t4 = self.theta(ThetaIndex::FOUR, u)?;
        let v = PI * self.theta0(ThetaIndex::FOUR).powi(2) * t2 * t3 / (t1 * t4);
        debug_assert!(
            rel_residual(v, self.s_prime_from_e(u)?) < 1e-8 * (1.0 + 1.0 / zero_dist_s(self, u)),
            "S' factorization drifted from E^(1) - E^(4) at {u}"
        );
        Ok(v)
    }

    /// `E^(1)(u) - E^(4)(u)`.
    pub fn s_prime_from_e(&self, u: Complex64) -> Result<Complex64> {
        Ok(self.eisenstein(ThetaIndex::ONE, u)? - self.eisenstein(ThetaIndex::FOUR, u)?)
    }

    /// Relative mismatch between the factorized `S'` and `E^(1) - E^(4)`.
    pub fn s_prime_crosscheck(&self, u: Complex64) -> Result<f64> {
        Ok(rel_residual(self.s_prime(u)?, self.s_prime_from_e(u)?))
    }

    /// `[S', S'', S''']` at `u`.
    pub fn s_prime_jet(&self, u: Complex64) -> Result<[Complex64; 3]> {
        let e1 = self.eisenstein_jet(ThetaIndex::ONE, u)?;
        let e4 = self.eisenstein_jet(ThetaIndex::FOUR, u)?;
        Ok([e1[0] - e4[0], e1[1] - e4[1], e1[2] - e4[2]])
    }

    /// `S'(u)·E^(2)(u) = πθ_4(0)² θ_2'θ_3/(θ_1θ_4)`, regular at the zeros of `θ_2`.
    fn s_prime_times_e2(&self, u: Complex64) -> Result<Complex64> {
        self.check_off_s_poles(u, "S'E2")?;
        let t1 = self.theta(ThetaIndex::ONE, u)?;
        let t2 = self.theta_jet(ThetaIndex::TWO, u)?;
        let t3 = self.theta(ThetaIndex::THREE, u)?;
        let t4 = self.theta(ThetaIndex::FOUR, u)?;
        Ok(PI * self.theta0(ThetaIndex::FOUR).powi(2) * t2[1] * t3 / (t1 * t4))
    }

    /// `∂_τ S(u|τ)` from `2πi Ṡ = S'E^(2) + (π²/2)θ_4(0)^4`.
    pub fn s_tau(&self, u: Complex64) -> Result<Complex64> {
        let rhs = self.s_prime_times_e2(u)? + 0.5 * PI * PI * self.theta4_fourth();
        Ok(rhs / (2.0 * PI * I))
    }

    /// `φ(x_1, x_2) = -E1(x1) - E4(x1) + E1(x2) + E4(x2) + 2E2(x1 - x2)`.
    pub fn phi_pair(&self, x1: Complex64, x2: Complex64) -> Result<Complex64> {
        let e = |a, x| self.eisenstein(a, x);
        Ok(-e(ThetaIndex::ONE, x1)? - e(ThetaIndex::FOUR, x1)?
            + e(ThetaIndex::ONE, x2)?
            + e(ThetaIndex::FOUR, x2)?
            + 2.0 * e(ThetaIndex::TWO, x1 - x2)?)
    }

    /// Theta-product form of `φ(x_1, x_2)`.
    pub fn phi_pair_factorized(&self, x1: Complex64, x2: Complex64) -> Result<Complex64> {
        self.check_off_s_poles(x1, "phi")?;
        self.check_off_s_poles(x2, "phi")?;
        self.check_off_zeros(ThetaIndex::TWO, x1 - x2, "phi")?;
        let th = |a, x| self.theta(a, x);
        let d = x1 - x2;
        let num = th(ThetaIndex::ONE, d)? * th(ThetaIndex::FOUR, d)? * th(ThetaIndex::TWO, x1 + x2)?;
        let den = th(ThetaIndex::ONE, x1)?
            * th(ThetaIndex::FOUR, x1)?
            * th(ThetaIndex::ONE, x2)?
            * th(ThetaIndex::FOUR, x2)?
            * th(ThetaIndex::TWO, d)?;
        let c = PI
            * self.theta0(ThetaIndex::TWO)
            * self.theta0(ThetaIndex::THREE)
            * self.theta0(ThetaIndex::FOUR).powi(2);
        Ok(c * num / den)
    }

    /// `|S'(x1-x2)φ(x1,x2) + π²θ_4(0)^4 - S'(x1)S'(x2)|`, relative to the
    /// largest term.
    pub fn key_identity_residual(&self, x1: Complex64, x2: Complex64) -> Result<f64> {
        let d = x1 - x2;
        if d.norm() <= self.guard {
            return Err(Error::NearPole { what: "S'(x1 - x2)", at: d, distance: d.norm() });
        }
        let lhs = self.s_prime(d)? * self.phi_pair(x1, x2)? + PI * PI * self.theta4_fourth();
        let rhs = self.s_prime(x1)? * self.s_prime(x2)?;
        Ok(rel_residual(lhs, rhs))
    }

    /// `℘'(u) = -E^(1)''(u)`.
    pub fn wp_prime(&self, u: Complex64) -> Result<Complex64> {
        Ok(-self.eisenstein_jet(ThetaIndex::ONE, u)?[2])
    }

    /// Both sides of `E^(1)(u|τ) + E^(4)(u|τ) = E^(1)(u|τ/2)`.
    pub fn half_tau_collapse(&self, u: Complex64) -> Result<CollapseCheck> {
        let lhs = self.eisenstein(ThetaIndex::ONE, u)? + self.eisenstein(ThetaIndex::FOUR, u)?;
        let rhs = self.half()?.eisenstein(ThetaIndex::ONE, u)?;
        Ok(CollapseCheck { lhs, rhs, residual: rel_residual(lhs, rhs) })
    }

    /// Taylor coefficients `f^(j)(center)/j!`, `j = 0..=order`, of
    /// `f = E^(a)`. Orders up to two come from the theta jets; higher
    /// orders from a discrete Cauchy integral on a small circle.
    pub fn eisenstein_taylor(&self, a: ThetaIndex, center: Complex64, order: usize) -> Result<Vec<Complex64>> {
        let jet = self.eisenstein_jet(a, center)?;
        let exact = [jet[0], jet[1], jet[2] / 2.0];
        self.taylor_with(center, order, &exact, &[a], |u| self.eisenstein(a, u))
    }

    /// Taylor coefficients of `S'` around `center`, `j = 0..=order`.
    pub fn s_prime_taylor(&self, center: Complex64, order: usize) -> Result<Vec<Complex64>> {
        let jet = self.s_prime_jet(center)?;
        let exact = [jet[0], jet[1], jet[2] / 2.0];
        self.taylor_with(center, order, &exact, &[ThetaIndex::ONE, ThetaIndex::FOUR], |u| {
            self.s_prime_from_e(u)
        })
    }

    fn taylor_with(
        &self,
        center: Complex64,
        order: usize,
        exact: &[Complex64; 3],
        singular: &[ThetaIndex],
        f: impl Fn(Complex64) -> Result<Complex64>,
    ) -> Result<Vec<Complex64>> {
        let mut out: Vec<Complex64> = exact.iter().take(order + 1).copied().collect();
        if order < 3 {
            return Ok(out);
        }
        for &a in singular {
            let d = zero_distance(a, center, &self.m);
            if d <= 2.0 * CAUCHY_RADIUS {
                return Err(Error::NearPole { what: "Cauchy contour", at: center, distance: d });
            }
        }
        let samples = cauchy_samples(center, &f)?;
        out.extend((3..=order).map(|j| cauchy_coefficient(&samples, j)));
        Ok(out)
    }
}

/// Distance from `u` to the nearest pole of `S'` (zeros of `θ_1`, `θ_4`).
pub fn s_pole_distance(e: &EllipticFns, u: Complex64) -> f64 {
    zero_dist_s(e, u)
}

fn zero_dist_s(e: &EllipticFns, u: Complex64) -> f64 {
    zero_distance(ThetaIndex::ONE, u, &e.m).min(zero_distance(ThetaIndex::FOUR, u, &e.m))
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a) * ab.conj()).re / len2;
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

fn cauchy_samples(center: Complex64, f: &impl Fn(Complex64) -> Result<Complex64>) -> Result<Vec<Complex64>> {
    (0..CAUCHY_SAMPLES)
        .map(|n| {
            let w = Complex64::from_polar(1.0, 2.0 * PI * n as f64 / CAUCHY_SAMPLES as f64);
            f(center + w * CAUCHY_RADIUS)
        })
        .collect()
}

fn cauchy_coefficient(samples: &[Complex64], j: usize) -> Complex64 {
    let n = samples.len() as f64;
    let sum: Complex64 = samples
        .iter()
        .enumerate()
        .map(|(k, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n))
        .sum();
    sum / (n * CAUCHY_RADIUS.powi(j as i32))
}

/// Distance from `u` to `offset + ℤ + ℤτ`; re-exported for callers that only
/// hold an [`EllipticFns`].
pub fn distance_to_lattice(e: &EllipticFns, u: Complex64, offset: Complex64) -> f64 {
    lattice_distance(u, offset, e.tau())
}
