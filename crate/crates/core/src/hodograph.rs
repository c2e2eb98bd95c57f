//! Hodograph solutions `[t_0] + Σ_k t_k φ_k(ξ(τ)|τ) = Φ(τ)` on the imaginary
//! τ-axis, and finite-difference checks of
//!
//! ```text
//! ∂τ/∂t_k = φ_k ∂τ/∂t_0,       ∇(z)τ = [S'(u(z)+ξ)/S'(ξ)] ∂τ/∂t_0.
//! ```
//!
//! The speeds come from a coefficient series co-evolved by the Loewner flow
//! over the bracket ([`SpeedField`]).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::EllipticFns;
use crate::error::{Error, Result};
use crate::loewner::{evolve, DrivingFunction, EvolveOptions, Normalization, TauPath, Trajectory};
use crate::series::{phi_k, TruncatedSeries, DEFAULT_ORDER};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Root residual the solver guarantees on success.
pub const ROOT_TOL: f64 = 1e-10;

/// Default finite-difference step in the times, relative to `max(1, |t|_∞)`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Right-hand side `Φ` as a function of `y = Im τ`.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiFunction {
    #[default]
    Zero,
    /// `Φ = a + b·y`.
    Affine { a: f64, b: f64 },
    /// Linear interpolation in `y`.
    Table { y: Vec<f64>, values: Vec<f64> },
    #[serde(skip)]
    ClosedForm(fn(Complex64) -> Complex64),
}

impl PhiFunction {
    pub fn at(&self, tau: Complex64) -> Complex64 {
        let y = tau.im;
        match self {
            Self::Zero => ZERO,
            Self::Affine { a, b } => Complex64::new(a + b * y, 0.0),
            Self::ClosedForm(f) => f(tau),
            Self::Table { y: grid, values } => {
                let k = grid.partition_point(|&g| g <= y).clamp(1, grid.len() - 1);
                let t = (y - grid[k - 1]) / (grid[k] - grid[k - 1]);
                Complex64::new(values[k - 1] + (values[k] - values[k - 1]) * t, 0.0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Self::Table { y, values } = self {
            if y.len() < 2 || y.len() != values.len() || y.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidInput("Phi table needs >= 2 increasing samples".into()));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HodographProblem {
    pub driving: DrivingFunction,
    #[serde(default)]
    pub phi: PhiFunction,
    /// Use `t_0 + Σ t_k φ_k = Φ` instead of `Σ t_k φ_k = Φ`.
    #[serde(default = "default_true")]
    pub include_t0: bool,
    /// Number of speeds `K`.
    pub speeds: usize,
    /// Truncation order `N` of the co-evolved series; `K ≤ N - 2`.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Seed `c_1 = γ_0/π` at the bottom of the speed field.
    #[serde(default = "default_gamma")]
    pub gamma0: Complex64,
    /// RK4 step `|Δτ|` of the pre-pass.
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_true() -> bool {
    true
}
fn default_order() -> usize {
    DEFAULT_ORDER
}
fn default_gamma() -> Complex64 {
    Complex64::new(1.0, 0.0)
}
fn default_step() -> f64 {
    1e-3
}

impl HodographProblem {
    pub fn new(driving: DrivingFunction, phi: PhiFunction, speeds: usize) -> Self {
        Self {
            driving,
            phi,
            include_t0: true,
            speeds,
            order: DEFAULT_ORDER,
            gamma0: default_gamma(),
            step: default_step(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.driving.validate()?;
        self.phi.validate()?;
        if self.speeds == 0 || self.speeds + 2 > self.order {
            return Err(Error::OrderMismatch(format!(
                "K = {} speeds need 1 <= K <= N - 2 with N = {}",
                self.speeds, self.order
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVector {
    pub t0: f64,
    /// `t_1..t_K`.
    pub t: Vec<f64>,
}

impl TimeVector {
    pub fn new(t0: f64, t: Vec<f64>) -> Self {
        Self { t0, t }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { t0: self.t0 * c, t: self.t.iter().map(|x| x * c).collect() }
    }

    /// Component `k` (0 is `t_0`).
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            self.t0
        } else {
            self.t[k - 1]
        }
    }

    pub fn bumped(&self, k: usize, dt: f64) -> Self {
        let mut out = self.clone();
        if k == 0 {
            out.t0 += dt;
        } else {
            out.t[k - 1] += dt;
        }
        out
    }

    pub fn scale(&self) -> f64 {
        self.t.iter().fold(self.t0.abs(), |m, x| m.max(x.abs())).max(1.0)
    }
}

/// Speeds along `τ = iy`, `y ∈ [y_lo, y_hi]`, from one Loewner pre-pass with
/// a co-evolved series; off-grid values take one partial RK4 step from the
/// grid sample below.
#[derive(Debug, Clone)]
pub struct SpeedField {
    prob: HodographProblem,
    path: TauPath,
    traj: Trajectory,
}

impl SpeedField {
    pub fn new(prob: &HodographProblem, y_lo: f64, y_hi: f64) -> Result<Self> {
        prob.validate()?;
        if !(y_hi > y_lo) {
            return Err(Error::InvalidInput(format!("empty speed range [{y_lo}, {y_hi}]")));
        }
        let path = TauPath::imaginary(y_lo, y_hi)?;
        let seed = TruncatedSeries::seed(prob.gamma0, prob.order);
        let opts = EvolveOptions {
            step: prob.step,
            normalization: Normalization::Standard,
            gamma0: prob.gamma0,
            check_substituted: false,
        };
        let traj = evolve(&path, &prob.driving, &[], Some(&seed), &opts)?;
        Ok(Self { prob: prob.clone(), path, traj })
    }

    /// Same speeds, different objective.
    pub fn with_objective(&self, include_t0: bool, phi: PhiFunction) -> Result<Self> {
        phi.validate()?;
        let mut out = self.clone();
        out.prob.include_t0 = include_t0;
        out.prob.phi = phi;
        Ok(out)
    }

    pub fn problem(&self) -> &HodographProblem {
        &self.prob
    }

    pub fn range(&self) -> (f64, f64) {
        (self.path.start.im, self.path.end.im)
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    fn s_of(&self, y: f64) -> f64 {
        let (lo, hi) = self.range();
        (y - lo) / (hi - lo)
    }

    pub fn xi_at(&self, y: f64) -> Complex64 {
        self.prob.driving.at(self.s_of(y), Complex64::new(0.0, y))
    }

    /// Co-evolved series `u(z)` at `τ = iy`.
    pub fn series_at(&self, y: f64) -> Result<TruncatedSeries> {
        let (lo, hi) = self.range();
        if !(y >= lo && y <= hi) {
            return Err(Error::OutOfRange { value: y, range: format!("[{lo}, {hi}]") });
        }
        let n = self.traj.samples.len() - 1;
        let i = ((self.s_of(y) * n as f64).floor() as usize).min(n);
        let smp = &self.traj.samples[i];
        let series = smp.series.as_ref().expect("pre-pass evolves the series");
        let dy = y - smp.tau.im;
        if dy.abs() <= 1e-15 * y {
            return Ok(series.clone());
        }
        let sub = TauPath::imaginary(smp.tau.im, y)?;
        let drv = match &self.prob.driving {
            d @ (DrivingFunction::Constant { .. } | DrivingFunction::ClosedForm(_)) => d.clone(),
            d => DrivingFunction::Linear { start: d.at(smp.s, smp.tau), end: self.xi_at(y) },
        };
        let opts = EvolveOptions {
            step: dy.abs() * 1.000001,
            normalization: Normalization::Standard,
            gamma0: self.prob.gamma0,
            check_substituted: false,
        };
        let dense = evolve(&sub, &drv, &[], Some(series), &opts)?;
        Ok(dense.final_sample().series.clone().expect("series evolved"))
    }

    /// `φ_1..φ_K` at `τ = iy`.
    pub fn speeds_at(&self, y: f64) -> Result<Vec<Complex64>> {
        let s = self.series_at(y)?;
        let fns = EllipticFns::from_tau(Complex64::new(0.0, y))?;
        phi_k(self.xi_at(y), &s, &fns, self.prob.speeds)
    }

    /// `[t_0] + Σ t_k φ_k - Φ` at `τ = iy`.
    pub fn objective(&self, t: &TimeVector, y: f64) -> Result<Complex64> {
        let phi = self.speeds_at(y)?;
        let mut f = if self.prob.include_t0 { Complex64::new(t.t0, 0.0) } else { ZERO };
        for (tk, p) in t.t.iter().zip(&phi) {
            f += p * *tk;
        }
        Ok(f - self.prob.phi.at(Complex64::new(0.0, y)))
    }

    fn check_times(&self, t: &TimeVector) -> Result<()> {
        if t.t.len() != self.prob.speeds {
            return Err(Error::OrderMismatch(format!(
                "time vector has {} entries, problem has K = {}",
                t.t.len(),
                self.prob.speeds
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HodographRoot {
    pub tau: Complex64,
    /// `|objective|` at the root.
    pub residual: f64,
    pub bisection_steps: usize,
    pub newton_steps: usize,
}

/// Root of the hodograph objective on `τ = iy`, `y ∈ bracket`.
pub fn hodograph_solve(field: &SpeedField, t: &TimeVector, bracket: (f64, f64)) -> Result<HodographRoot> {
    field.check_times(t)?;
    let (mut lo, mut hi) = bracket;
    let f = |y: f64| field.objective(t, y);
    let (mut f_lo, f_hi) = (f(lo)?.re, f(hi)?.re);
    if f_lo == 0.0 || f_hi == 0.0 {
        let y = if f_lo == 0.0 { lo } else { hi };
        if f_lo == 0.0 && f_hi == 0.0 {
            // identically vanishing objectives land here too
            return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
        }
        return finish(&f, y, 0, 0);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let mut bisection_steps = 0;
    while hi - lo > 1e-13 * hi && bisection_steps < 200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?.re;
        bisection_steps += 1;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    let (a, b) = bracket;
    let mut y = 0.5 * (lo + hi);
    let mut fy = f(y)?;
    let mut best = (y, fy.norm());
    let mut newton_steps = 0;
    let d = 1e-6 * y;
    while newton_steps < 8 && fy.norm() > 1e-15 {
        let df = (f(y + d)? - f(y - d)?).re / (2.0 * d);
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let next = y - fy.re / df;
        newton_steps += 1;
        if !(next > a && next < b) {
            break;
        }
        y = next;
        fy = f(y)?;
        if fy.norm() < best.1 {
            best = (y, fy.norm());
        } else {
            break;
        }
    }
    finish(&f, best.0, bisection_steps, newton_steps)
}

fn finish(
    f: &impl Fn(f64) -> Result<Complex64>,
    y: f64,
    bisection_steps: usize,
    newton_steps: usize,
) -> Result<HodographRoot> {
    let residual = f(y)?.norm();
    if !(residual < ROOT_TOL) {
        return Err(Error::NoConvergence { what: "hodograph root", iterations: bisection_steps + newton_steps, residual });
    }
    Ok(HodographRoot { tau: Complex64::new(0.0, y), residual, bisection_steps, newton_steps })
}

/// Central-difference derivatives of the root with respect to every time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDerivatives {
    pub root: HodographRoot,
    /// Absolute time step used.
    pub h: f64,
    /// `∂τ/∂t_0`.
    pub dt0: Complex64,
    /// `∂τ/∂t_k`, `k = 1..K`.
    pub dtk: Vec<Complex64>,
    /// `φ_k` at the root.
    pub phi: Vec<Complex64>,
    /// Series `u(z)` at the root.
    pub series: TruncatedSeries,
    pub xi: Complex64,
}

/// `h` is relative to `max(1, |t|_∞)`.
pub fn time_derivatives(field: &SpeedField, t: &TimeVector, bracket: (f64, f64), h: f64) -> Result<TimeDerivatives> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step {h}")));
    }
    let root = hodograph_solve(field, t, bracket)?;
    let ha = h * t.scale();
    let diff = |k: usize| -> Result<Complex64> {
        let plus = hodograph_solve(field, &t.bumped(k, ha), bracket)?.tau;
        let minus = hodograph_solve(field, &t.bumped(k, -ha), bracket)?.tau;
        Ok((plus - minus) / (2.0 * ha))
    };
    let dt0 = if field.prob.include_t0 { diff(0)? } else { ZERO };
    let dtk = (1..=field.prob.speeds).map(diff).collect::<Result<Vec<_>>>()?;
    let y = root.tau.im;
    Ok(TimeDerivatives {
        root,
        h: ha,
        dt0,
        dtk,
        phi: field.speeds_at(y)?,
        series: field.series_at(y)?,
        xi: field.xi_at(y),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydrodynamicCheck {
    pub k: usize,
    pub dtau_dtk: Complex64,
    pub dtau_dt0: Complex64,
    pub phi_k: Complex64,
    /// `∂τ/∂t_k - φ_k ∂τ/∂t_0`.
    pub defect: Complex64,
    /// `|defect| / (|∂τ/∂t_k| + 1e-12)`.
    pub residual: f64,
}

impl TimeDerivatives {
    pub fn hydrodynamic(&self, k: usize) -> Result<HydrodynamicCheck> {
        if k == 0 || k > self.dtk.len() {
            return Err(Error::InvalidInput(format!("speed index {k} outside 1..={}", self.dtk.len())));
        }
        let (dk, p) = (self.dtk[k - 1], self.phi[k - 1]);
        let defect = dk - p * self.dt0;
        Ok(HydrodynamicCheck {
            k,
            dtau_dtk: dk,
            dtau_dt0: self.dt0,
            phi_k: p,
            defect,
            residual: defect.norm() / (dk.norm() + 1e-12),
        })
    }

    /// `∇(z)τ - [S'(u(z)+ξ)/S'(ξ)] ∂τ/∂t_0`, with `∇(z)` truncated at `K`.
    /// With `truncated_ratio` the ratio is replaced by `1 + Σ_{k≤K} z^{-k}φ_k/k`,
    /// which makes the defect a polynomial of degree `K` in `z^{-1}`.
    pub fn generating(&self, z: Complex64, truncated_ratio: bool) -> Result<GeneratingCheck> {
        let zi = z.inv();
        let mut lhs = self.dt0;
        let mut trunc = Complex64::new(1.0, 0.0);
        let mut zk = Complex64::new(1.0, 0.0);
        for (k, (d, p)) in self.dtk.iter().zip(&self.phi).enumerate() {
            zk *= zi;
            lhs += zk * d / (k + 1) as f64;
            trunc += zk * p / (k + 1) as f64;
        }
        let ratio = if truncated_ratio {
            trunc
        } else {
            let fns = EllipticFns::from_tau(self.root.tau)?;
            fns.s_prime(self.series.eval(z) + self.xi)? / fns.s_prime(self.xi)?
        };
        let rhs = ratio * self.dt0;
        let defect = lhs - rhs;
        Ok(GeneratingCheck { z, lhs, rhs, defect, residual: defect.norm() / (rhs.norm() + 1e-12) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratingCheck {
    pub z: Complex64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub defect: Complex64,
    pub residual: f64,
}

pub fn hydrodynamic_residual(
    field: &SpeedField,
    t: &TimeVector,
    bracket: (f64, f64),
    k: usize,
    h: f64,
) -> Result<HydrodynamicCheck> {
    time_derivatives(field, t, bracket, h)?.hydrodynamic(k)
}

pub fn generating_residual(
    field: &SpeedField,
    t: &TimeVector,
    bracket: (f64, f64),
    z: Complex64,
    h: f64,
) -> Result<GeneratingCheck> {
    time_derivatives(field, t, bracket, h)?.generating(z, false)
}

/// `max_c |τ(c·t) - τ(t)|`.
pub fn homogeneity_defect(field: &SpeedField, t: &TimeVector, bracket: (f64, f64), factors: &[f64]) -> Result<f64> {
    let base = hodograph_solve(field, t, bracket)?.tau;
    let mut worst: f64 = 0.0;
    for &c in factors {
        let scaled = hodograph_solve(field, &t.scaled(c), bracket)?.tau;
        worst = worst.max((scaled - base).norm());
    }
    Ok(worst)
}

/// Largest difference between the speeds of `field` at `y` and those of an
/// independent pre-pass with half the step that stops just above `y`.
pub fn speeds_consistency(field: &SpeedField, y: f64) -> Result<f64> {
    let (lo, hi) = field.range();
    let mut prob = field.prob.clone();
    prob.step *= 0.5;
    let top = (y + 0.1 * (hi - lo)).min(hi);
    let other = SpeedField::new(&prob, lo, top)?;
    let (a, b) = (field.speeds_at(y)?, other.speeds_at(y)?);
    Ok(a.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(include_t0: bool, phi: PhiFunction) -> SpeedField {
        let mut prob = HodographProblem::new(DrivingFunction::constant(0.3), phi, 2);
        prob.include_t0 = include_t0;
        prob.step = 1e-2;
        SpeedField::new(&prob, 1.0, 1.3).unwrap()
    }

    #[test]
    fn speeds_are_real_in_real_regime() {
        let f = field(true, PhiFunction::Zero);
        for y in [1.0, 1.0123, 1.25, 1.3] {
            for p in f.speeds_at(y).unwrap() {
                assert!(p.im.abs() < 1e-13 * (1.0 + p.re.abs()), "{p}");
            }
        }
    }

    #[test]
    fn dense_output_is_continuous_at_grid_points() {
        let f = field(true, PhiFunction::Zero);
        let y = 1.1;
        let a = f.speeds_at(y).unwrap();
        let b = f.speeds_at(y + 1e-12).unwrap();
        assert!((a[0] - b[0]).norm() < 1e-10);
    }

    #[test]
    fn empty_sum_has_no_sign_change() {
        let f = field(false, PhiFunction::Zero);
        let t = TimeVector::new(1.0, vec![0.0, 0.0]);
        assert!(matches!(hodograph_solve(&f, &t, (1.0, 1.3)), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn root_for_manufactured_times() {
        let f = field(true, PhiFunction::Affine { a: 0.5, b: -0.2 });
        let y_star = 1.17;
        let phi = f.speeds_at(y_star).unwrap();
        let t1 = 1.0;
        let t2 = -0.5;
        let t0 = 0.5 - 0.2 * y_star - (t1 * phi[0] + t2 * phi[1]).re;
        let root = hodograph_solve(&f, &TimeVector::new(t0, vec![t1, t2]), (1.0, 1.3)).unwrap();
        assert!(root.residual < ROOT_TOL);
        assert!((root.tau.im - y_star).abs() < 1e-9, "{}", root.tau);
    }

    #[test]
    fn order_guard() {
        let mut prob = HodographProblem::new(DrivingFunction::constant(0.3), PhiFunction::Zero, 11);
        prob.order = 12;
        assert!(matches!(SpeedField::new(&prob, 1.0, 1.1), Err(Error::OrderMismatch(_))));
        let f = field(true, PhiFunction::Zero);
        assert!(hodograph_solve(&f, &TimeVector::new(0.0, vec![1.0]), (1.0, 1.3)).is_err());
    }
}
