//! Elliptic uniformization of the spectral curve `p² = R²(w + 1/w) + V`:
//!
//! ```text
//! w(u) = θ_4²(u)/θ_1²(u),   p(u) = γ θ_4²(0) θ_2(u)θ_3(u)/(θ_1(u)θ_4(u)),
//! R = γ θ_2(0)θ_3(0),       V = -γ²(θ_2⁴(0) + θ_3⁴(0)).
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::elliptic::{rel_residual, EllipticFns};
use crate::error::{Error, Result};
use crate::theta::{zero_distance, ModularParam, ThetaIndex};

/// Curve data `(γ, τ)` with the derived `R` and `V`.
#[derive(Debug, Clone, Copy)]
pub struct CurveParams {
    gamma: Complex64,
    fns: EllipticFns,
    r: Complex64,
    v: Complex64,
}

impl CurveParams {
    pub fn new(gamma: Complex64, m: ModularParam) -> Result<Self> {
        Self::with_fns(gamma, EllipticFns::new(m)?)
    }

    pub fn with_fns(gamma: Complex64, fns: EllipticFns) -> Result<Self> {
        if gamma.norm() == 0.0 || !gamma.re.is_finite() || !gamma.im.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must be finite and nonzero, got {gamma}")));
        }
        let t2 = fns.theta0(ThetaIndex::TWO);
        let t3 = fns.theta0(ThetaIndex::THREE);
        let r = gamma * t2 * t3;
        let v = -gamma * gamma * (t2.powi(4) + t3.powi(4));
        Ok(Self { gamma, fns, r, v })
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    pub fn fns(&self) -> &EllipticFns {
        &self.fns
    }

    pub fn param(&self) -> &ModularParam {
        self.fns.param()
    }

    pub fn r(&self) -> Complex64 {
        self.r
    }

    pub fn v(&self) -> Complex64 {
        self.v
    }

    /// Leading coefficient of `u(z) = c_1/z + ...`, equal to `γ/π`.
    pub fn c1(&self) -> Complex64 {
        self.gamma / PI
    }

    /// `R` recomputed as `π c_1 θ_2(0)θ_3(0)`.
    pub fn r_from_c1(&self) -> Complex64 {
        PI * self.c1() * self.fns.theta0(ThetaIndex::TWO) * self.fns.theta0(ThetaIndex::THREE)
    }

    /// Purely imaginary `τ` and real positive `γ`: the curve is real and `R > 0`.
    pub fn is_real_regime(&self) -> bool {
        self.fns.tau().re == 0.0 && self.gamma.im == 0.0 && self.gamma.re > 0.0
    }

    /// `-V/R²`, which equals `θ_2²/θ_3² + θ_3²/θ_2²` at `u = 0`.
    pub fn modulus_ratio(&self) -> Complex64 {
        -self.v / (self.r * self.r)
    }

    fn guard_s(&self, u: Complex64) -> Result<()> {
        for a in [ThetaIndex::ONE, ThetaIndex::FOUR] {
            let d = zero_distance(a, u, self.param());
            if d <= self.fns.guard() {
                return Err(Error::NearPole { what: "curve parametrization", at: u, distance: d });
            }
        }
        Ok(())
    }
}

/// `w(u) = θ_4²(u)/θ_1²(u)`.
pub fn w_of_u(u: Complex64, cp: &CurveParams) -> Result<Complex64> {
    let d = zero_distance(ThetaIndex::ONE, u, cp.param());
    if d <= cp.fns.guard() {
        return Err(Error::NearPole { what: "w", at: u, distance: d });
    }
    let ratio = cp.fns.theta(ThetaIndex::FOUR, u)? / cp.fns.theta(ThetaIndex::ONE, u)?;
    Ok(ratio * ratio)
}

/// `p(u) = γ θ_4²(0) θ_2(u)θ_3(u)/(θ_1(u)θ_4(u))`.
pub fn p_of_u(u: Complex64, cp: &CurveParams) -> Result<Complex64> {
    cp.guard_s(u)?;
    let f = &cp.fns;
    let num = f.theta(ThetaIndex::TWO, u)? * f.theta(ThetaIndex::THREE, u)?;
    let den = f.theta(ThetaIndex::ONE, u)? * f.theta(ThetaIndex::FOUR, u)?;
    Ok(cp.gamma * f.theta0(ThetaIndex::FOUR).powi(2) * num / den)
}

/// `|p² - R²(w + 1/w) - V| / (|p²| + |V| + 1)`.
pub fn curve_residual(u: Complex64, cp: &CurveParams) -> Result<f64> {
    let w = w_of_u(u, cp)?;
    let p = p_of_u(u, cp)?;
    let p2 = p * p;
    let lhs = p2 - cp.r * cp.r * (w + 1.0 / w) - cp.v;
    Ok(lhs.norm() / (p2.norm() + cp.v.norm() + 1.0))
}

/// Residual of
/// `(w_1 - w_2)/(p_1 + p_2) = -(1/R)·θ_4(u_1)θ_4(u_2)/(θ_1(u_1)θ_1(u_2))·θ_1(u_1-u_2)/θ_4(u_1-u_2)`.
pub fn ratio_identity_residual(u1: Complex64, u2: Complex64, cp: &CurveParams) -> Result<f64> {
    let (lhs, rhs) = ratio_identity_sides(u1, u2, cp)?;
    Ok(rel_residual(lhs, rhs))
}

pub fn ratio_identity_sides(u1: Complex64, u2: Complex64, cp: &CurveParams) -> Result<(Complex64, Complex64)> {
    let f = &cp.fns;
    let d = u1 - u2;
    let dd = zero_distance(ThetaIndex::FOUR, d, cp.param());
    if dd <= f.guard() {
        return Err(Error::NearPole { what: "theta_4(u1 - u2)", at: d, distance: dd });
    }
    let (w1, w2) = (w_of_u(u1, cp)?, w_of_u(u2, cp)?);
    let (p1, p2) = (p_of_u(u1, cp)?, p_of_u(u2, cp)?);
    let sum = p1 + p2;
    if sum.norm() <= f.guard() * (p1.norm() + p2.norm()) {
        return Err(Error::DegeneratePair("p(u1) + p(u2) vanishes"));
    }
    let lhs = (w1 - w2) / sum;
    let th = |a, x| f.theta(a, x);
    let rhs = -(th(ThetaIndex::FOUR, u1)? * th(ThetaIndex::FOUR, u2)?)
        / (th(ThetaIndex::ONE, u1)? * th(ThetaIndex::ONE, u2)?)
        * th(ThetaIndex::ONE, d)?
        / th(ThetaIndex::FOUR, d)?
        / cp.r;
    Ok((lhs, rhs))
}

/// `(p_1² - p_2²) / ((w_1 - w_2)(1 - 1/(w_1 w_2)))`: multiplying the two
/// generating relations leaves this equal to `R²` for every pair.
pub fn pair_product_constant(u1: Complex64, u2: Complex64, cp: &CurveParams) -> Result<Complex64> {
    let (w1, w2) = (w_of_u(u1, cp)?, w_of_u(u2, cp)?);
    let (p1, p2) = (p_of_u(u1, cp)?, p_of_u(u2, cp)?);
    let den = (w1 - w2) * (1.0 - 1.0 / (w1 * w2));
    if den.norm() <= cp.fns.guard() * (w1.norm() + w2.norm()) {
        return Err(Error::DegeneratePair("w(u1) + 1/w(u1) = w(u2) + 1/w(u2)"));
    }
    Ok((p1 * p1 - p2 * p2) / den)
}

/// Solve `S(u) = -½ log w_target` for `u` by Newton iteration in the
/// `S`-coordinate, starting from `u_guess`. The equation is imposed modulo
/// `iπ`, the ambiguity of `S` at fixed `w`.
pub fn u_from_w(w_target: Complex64, m: &ModularParam, u_guess: Complex64) -> Result<Complex64> {
    u_from_w_with(w_target, &EllipticFns::new(*m)?, u_guess)
}

pub fn u_from_w_with(w_target: Complex64, fns: &EllipticFns, u_guess: Complex64) -> Result<Complex64> {
    const MAX_ITER: usize = 50;
    if w_target.norm() == 0.0 || !w_target.re.is_finite() || !w_target.im.is_finite() {
        return Err(Error::InvalidInput(format!("w_target must be finite and nonzero, got {w_target}")));
    }
    let half_log_w = 0.5 * w_target.ln();
    let residual = |u: Complex64| -> Result<Complex64> {
        let mut r = fns.s_principal(u)? + half_log_w;
        r.im -= PI * (r.im / PI).round();
        Ok(r)
    };
    let mut u = u_guess;
    let mut r = residual(u)?;
    for _ in 0..MAX_ITER {
        if r.norm() < 1e-12 {
            return Ok(u);
        }
        let sp = fns.s_prime(u)?;
        if sp.norm() == 0.0 {
            return Err(Error::ZeroDenominator("S'(u) in Newton step"));
        }
        let mut step = r / sp;
        // damp steps longer than a quarter period
        let cap = 0.25 * fns.tau().im.min(1.0);
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        u -= step;
        r = residual(u)?;
    }
    if r.norm() < 1e-12 {
        return Ok(u);
    }
    Err(Error::NoConvergence { what: "u_from_w", iterations: MAX_ITER, residual: r.norm() })
}

/// `θ_2²(0|iy)/θ_3²(0|iy) + θ_3²(0|iy)/θ_2²(0|iy)`.
pub fn modulus_ratio_at(y: f64) -> Result<f64> {
    let fns = EllipticFns::new(ModularParam::imaginary(y)?)?;
    let k = (fns.theta0(ThetaIndex::TWO) / fns.theta0(ThetaIndex::THREE)).powi(2);
    Ok((k + 1.0 / k).re)
}

/// Imaginary-axis bracket searched by [`tau_from_modulus`]. Below
/// `MODULUS_Y_MIN` the ratio differs from 2 by less than double precision
/// resolves (`ratio - 2 ~ 16 exp(-2π/y)`).
pub const MODULUS_Y_MIN: f64 = 0.25;
pub const MODULUS_Y_MAX: f64 = 40.0;

/// Purely imaginary `τ = iy` with `θ_2²/θ_3² + θ_3²/θ_2² = ratio`.
pub fn tau_from_modulus(ratio: f64) -> Result<ModularParam> {
    let y_lo = MODULUS_Y_MIN;
    let y_hi = MODULUS_Y_MAX;
    let f_lo = modulus_ratio_at(y_lo)?;
    let f_hi = modulus_ratio_at(y_hi)?;
    if !(ratio > f_lo && ratio < f_hi) {
        return Err(Error::OutOfRange { value: ratio, range: format!("({f_lo}, {f_hi})") });
    }

    // the objective must be increasing over the bracket for bisection to be meaningful
    let samples = 64;
    let mut prev = f_lo;
    for i in 1..=samples {
        let y = y_lo * (y_hi / y_lo).powf(i as f64 / samples as f64);
        let f = modulus_ratio_at(y)?;
        if f <= prev {
            return Err(Error::InvalidInput(format!("modulus ratio is not increasing near y = {y}")));
        }
        prev = f;
    }

    let (mut lo, mut hi) = (y_lo, y_hi);
    let mut iterations = 0;
    while hi - lo > 1e-15 * hi && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if modulus_ratio_at(mid)? < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let y = 0.5 * (lo + hi);
    let residual = (modulus_ratio_at(y)? - ratio).abs() / ratio;
    if residual >= 1e-12 {
        return Err(Error::NoConvergence { what: "tau_from_modulus", iterations, residual });
    }
    ModularParam::imaginary(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cp() -> CurveParams {
        CurveParams::new(c(1.3, 0.0), ModularParam::imaginary(1.2).unwrap()).unwrap()
    }

    #[test]
    fn r_and_v_relations() {
        let cp = cp();
        assert!(rel_residual(cp.r(), cp.r_from_c1()) < 1e-14);
        let f = cp.fns();
        let k = (f.theta0(ThetaIndex::TWO) / f.theta0(ThetaIndex::THREE)).powi(2);
        assert!(rel_residual(cp.modulus_ratio(), k + 1.0 / k) < 1e-12);
        assert!(cp.is_real_regime());
        assert!(cp.r().re > 0.0 && cp.r().im == 0.0);
        assert!(CurveParams::new(c(0.0, 0.0), *cp.param()).is_err());
    }

    #[test]
    fn w_vanishes_at_omega3_and_is_even() {
        let cp = cp();
        let w3 = cp.param().tau() * 0.5;
        assert!(w_of_u(w3 + 1e-7, &cp).unwrap().norm() < 1e-10);
        let u = c(0.21, 0.3);
        assert!(rel_residual(w_of_u(-u, &cp).unwrap(), w_of_u(u, &cp).unwrap()) < 1e-13);
    }

    #[test]
    fn s_matches_minus_half_log_w() {
        let cp = cp();
        let u = c(0.3, 0.25);
        let s = cp.fns().s(u).unwrap().value;
        let mut r = s + 0.5 * w_of_u(u, &cp).unwrap().ln();
        r.im -= PI * (r.im / PI).round();
        assert!(r.norm() < 1e-11);
    }

    #[test]
    fn p_properties() {
        let cp = cp();
        let u = c(0.17, 0.4);
        let p = p_of_u(u, &cp).unwrap();
        let sp = cp.fns().s_prime(u).unwrap();
        assert!(rel_residual(p, cp.c1() * sp) < 1e-12);
        assert!(rel_residual(p_of_u(-u, &cp).unwrap(), -p) < 1e-13);
        let w2 = (1.0 + cp.param().tau()) * 0.5;
        assert!(p_of_u(w2, &cp).unwrap().norm() < 1e-10);
    }

    #[test]
    fn curve_residual_small_and_homogeneous() {
        let cp = cp();
        for u in [c(0.5, 0.0), c(0.13, 0.22), c(-0.4, 0.9)] {
            assert!(curve_residual(u, &cp).unwrap() < 1e-10);
        }
        let f = cp.fns();
        let w = w_of_u(c(0.5, 0.0), &cp).unwrap();
        let k = (f.theta0(ThetaIndex::THREE) / f.theta0(ThetaIndex::TWO)).powi(2);
        assert!(rel_residual(w + 1.0 / w, k + 1.0 / k) < 1e-12);
        assert!((w + 1.0 / w).im.abs() < 1e-12);
        let doubled = CurveParams::new(cp.gamma() * 2.0, *cp.param()).unwrap();
        assert!(rel_residual(doubled.r() * doubled.r(), cp.r() * cp.r() * 4.0) < 1e-14);
        assert!(rel_residual(doubled.v(), cp.v() * 4.0) < 1e-14);
        assert!(curve_residual(c(0.13, 0.22), &doubled).unwrap() < 1e-10);
    }

    #[test]
    fn ratio_identity_and_degenerate_pairs() {
        let cp = cp();
        let (u1, u2) = (c(0.2, 0.3), c(-0.35, 0.1));
        assert!(ratio_identity_residual(u1, u2, &cp).unwrap() < 1e-10);
        assert!(matches!(ratio_identity_residual(u1, -u1, &cp), Err(Error::DegeneratePair(_))));
        assert!(matches!(ratio_identity_residual(u1, c(0.0, 0.0), &cp), Err(Error::NearPole { .. })));
    }

    #[test]
    fn pair_product_is_r_squared() {
        let cp = cp();
        let k = pair_product_constant(c(0.2, 0.3), c(-0.1, 0.45), &cp).unwrap();
        assert!(rel_residual(k, cp.r() * cp.r()) < 1e-10);
    }

    #[test]
    fn u_from_w_round_trip() {
        let cp = cp();
        let m = *cp.param();
        let u = c(0.23, 0.31);
        let w = w_of_u(u, &cp).unwrap();
        let back = u_from_w(w, &m, u + c(0.02, -0.015)).unwrap();
        assert!((back - u).norm() < 1e-10);
        let one = u_from_w(c(1.0, 0.0), &m, c(0.25, 0.3)).unwrap();
        assert!((w_of_u(one, &cp).unwrap() - 1.0).norm() < 1e-10);
        assert!(matches!(u_from_w(w, &m, c(0.0, 0.0)), Err(Error::NearPole { .. })));
        assert!(u_from_w(c(0.0, 0.0), &m, u).is_err());
    }

    #[test]
    fn tau_from_modulus_round_trip() {
        let ratio = modulus_ratio_at(1.3).unwrap();
        let m = tau_from_modulus(ratio).unwrap();
        assert!((m.tau() - c(0.0, 1.3)).norm() < 1e-10);
        let at_i = modulus_ratio_at(1.0).unwrap();
        assert!((tau_from_modulus(at_i).unwrap().tau().im - 1.0).abs() < 1e-10);
        assert!(matches!(tau_from_modulus(2.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(tau_from_modulus(1.5), Err(Error::OutOfRange { .. })));
    }
}
