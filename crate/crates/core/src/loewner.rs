//! Elliptic Loewner (Goluzin-Komatu) flow
//!
//! ```text
//! 4πi ∂_τ u = -E1(u+ξ) - E4(u+ξ) + E1(ξ) + E4(ξ) = -E1(u+ξ|τ/2) + E1(ξ|τ/2)
//! ```
//!
//! integrated with classical RK4 along a straight segment in the τ-plane,
//! together with `4πi ∂_τ log R = S'(ξ)²`, the normalization shift
//! `4πi ∂_τ c_0 = -E1(ξ|τ/2)` and, optionally, the coefficients of
//! `u(z) = Σ c_k z^{-k}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{rel_residual, EllipticFns};
use crate::error::{Error, Result};
use crate::series::{compose_analytic, TruncatedSeries};
use crate::theta::{zero_distance, ModularParam, ThetaIndex};

const FOUR_PI_I: Complex64 = Complex64 { re: 0.0, im: 4.0 * PI };
const TWO_PI_I: Complex64 = Complex64 { re: 0.0, im: 2.0 * PI };

/// Largest tracer increment a single RK4 stage may produce.
pub const MAX_STAGE_INCREMENT: f64 = 0.25;

/// Which form of the flow is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `u(∞) = 0`; the `u = 0` tracer is a fixed point.
    #[default]
    Standard,
    /// Tracers carry `ũ = u + c_0`, driven by `4πi ∂_τ ũ = -E1(ũ + ξ - c_0 | τ/2)`.
    Shifted,
    /// `2πi ∂_τ u = -E1(u + ξ | τ)`: the shifted flow after `τ → 2τ`.
    Painleve,
}

/// Loewner driving function, parametrized by the path coordinate `s ∈ [0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DrivingFunction {
    Constant { xi: Complex64 },
    /// `ξ(s) = start + s·(end - start)`.
    Linear { start: Complex64, end: Complex64 },
    /// Samples `(s_i, ξ_i)` with linear interpolation.
    Table { s: Vec<f64>, xi: Vec<Complex64> },
    /// Closed form in `τ`.
    #[serde(skip)]
    ClosedForm(fn(Complex64) -> Complex64),
}

impl PartialEq for DrivingFunction {
    fn eq(&self, other: &Self) -> bool {
        use DrivingFunction::*;
        match (self, other) {
            (Constant { xi: a }, Constant { xi: b }) => a == b,
            (Linear { start: a, end: b }, Linear { start: c, end: d }) => a == c && b == d,
            (Table { s: a, xi: b }, Table { s: c, xi: d }) => a == c && b == d,
            (ClosedForm(f), ClosedForm(g)) => std::ptr::fn_addr_eq(*f, *g),
            _ => false,
        }
    }
}

impl DrivingFunction {
    pub fn constant(xi: f64) -> Self {
        Self::Constant { xi: Complex64::new(xi, 0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Table { s, xi } => {
                if s.len() < 2 || s.len() != xi.len() {
                    return Err(Error::InvalidInput("driving table needs >= 2 matching samples".into()));
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidInput("driving table s-values must increase".into()));
                }
                if s[0] > 0.0 || *s.last().unwrap() < 1.0 {
                    return Err(Error::InvalidInput("driving table must cover s in [0, 1]".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }

    /// Smallest table spacing, if sampled.
    fn table_spacing(&self) -> Option<f64> {
        match self {
            Self::Table { s, .. } => s.windows(2).map(|w| w[1] - w[0]).reduce(f64::min),
            _ => None,
        }
    }

    pub fn at(&self, s: f64, tau: Complex64) -> Complex64 {
        match self {
            Self::Constant { xi } => *xi,
            Self::Linear { start, end } => start + (end - start) * s,
            Self::ClosedForm(f) => f(tau),
            Self::Table { s: grid, xi } => {
                let k = grid.partition_point(|&g| g <= s).clamp(1, grid.len() - 1);
                let (s0, s1) = (grid[k - 1], grid[k]);
                let t = (s - s0) / (s1 - s0);
                xi[k - 1] + (xi[k] - xi[k - 1]) * t
            }
        }
    }

    /// True when `ξ` is real for every `s`.
    fn is_real(&self) -> bool {
        match self {
            Self::Constant { xi } => xi.im == 0.0,
            Self::Linear { start, end } => start.im == 0.0 && end.im == 0.0,
            Self::Table { xi, .. } => xi.iter().all(|x| x.im == 0.0),
            Self::ClosedForm(_) => false,
        }
    }
}

/// Straight segment `τ(s) = τ_0 + s(τ_1 - τ_0)`, `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauPath {
    pub start: Complex64,
    pub end: Complex64,
}

impl TauPath {
    pub fn new(start: Complex64, end: Complex64) -> Result<Self> {
        let p = Self { start, end };
        p.validate()?;
        Ok(p)
    }

    pub fn imaginary(y0: f64, y1: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, y0), Complex64::new(0.0, y1))
    }

    /// Im τ is affine in `s`, so the endpoints bound it on the segment.
    pub fn validate(&self) -> Result<()> {
        ModularParam::new(self.start)?;
        ModularParam::new(self.end)?;
        Ok(())
    }

    pub fn tau_at(&self, s: f64) -> Complex64 {
        self.start + (self.end - self.start) * s
    }

    /// Number of equal steps of length at most `step` covering the segment.
    pub fn step_count(&self, step: f64) -> Result<usize> {
        let len = (self.end - self.start).norm();
        if !(step > 0.0 && step.is_finite()) || len == 0.0 {
            return Err(Error::InvalidInput(format!("step {step} on a path of length {len}")));
        }
        let x = len / step;
        let n = if (x - x.round()).abs() <= 1e-9 * x { x.round() } else { x.ceil() };
        if n > 1e8 {
            return Err(Error::InvalidInput(format!("step {step} needs {n} steps")));
        }
        Ok((n as usize).max(1))
    }

    pub fn dtau_ds(&self) -> Complex64 {
        self.end - self.start
    }

    pub fn is_imaginary(&self) -> bool {
        self.start.re == 0.0 && self.end.re == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Target step length `|Δτ|`; the segment is split into equal steps no longer than this.
    pub step: f64,
    pub normalization: Normalization,
    /// Initial `γ`; sets `log R(τ_0) = log(γ θ_2(0)θ_3(0))`.
    pub gamma0: Complex64,
    /// Evaluate the substituted consistency identity at every accepted step.
    pub check_substituted: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            normalization: Normalization::Standard,
            gamma0: Complex64::new(1.0, 0.0),
            check_substituted: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    pub tau: Complex64,
    pub xi: Complex64,
    pub tracers: Vec<Complex64>,
    pub log_r: Complex64,
    pub c0: Complex64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub series: Option<TruncatedSeries>,
    /// Max over tracer pairs of the substituted consistency identity.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub substituted_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub normalization: Normalization,
    pub path: TauPath,
    pub driving: DrivingFunction,
    /// Purely imaginary path, real driving and real positive `γ_0`.
    pub real_regime: bool,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn tracer_count(&self) -> usize {
        self.samples[0].tracers.len()
    }

    /// Tracer `j` at sample `i` in the `u(∞) = 0` normalization.
    pub fn standard_u(&self, i: usize, j: usize) -> Complex64 {
        let smp = &self.samples[i];
        match self.normalization {
            Normalization::Shifted => smp.tracers[j] - smp.c0,
            _ => smp.tracers[j],
        }
    }

    /// Largest substituted-identity residual over all accepted steps.
    pub fn max_substituted_residual(&self) -> Option<f64> {
        self.samples.iter().filter_map(|s| s.substituted_residual).reduce(f64::max)
    }
}

/// Right-hand side `(1/4πi)[-E1(u+ξ) - E4(u+ξ) + E1(ξ) + E4(ξ)]` at `τ`.
pub fn loewner_rhs(u: Complex64, xi: Complex64, fns: &EllipticFns) -> Result<Complex64> {
    let v = loewner_rhs_full(u, xi, fns)?;
    debug_assert!(
        u.norm() < 1e-3 || rel_residual(v, loewner_rhs_half_form(u, xi, fns)?) < 1e-8,
        "Loewner right-hand side disagrees with its half-period form at u = {u}"
    );
    Ok(v)
}

fn loewner_rhs_full(u: Complex64, xi: Complex64, fns: &EllipticFns) -> Result<Complex64> {
    let e = |x| -> Result<Complex64> {
        Ok(fns.eisenstein(ThetaIndex::ONE, x)? + fns.eisenstein(ThetaIndex::FOUR, x)?)
    };
    Ok((e(xi)? - e(u + xi)?) / FOUR_PI_I)
}

/// `(1/4πi)[-E1(u+ξ|τ/2) + E1(ξ|τ/2)]`.
pub fn loewner_rhs_half_form(u: Complex64, xi: Complex64, fns: &EllipticFns) -> Result<Complex64> {
    let half = fns.half()?;
    Ok((half.eisenstein(ThetaIndex::ONE, xi)? - half.eisenstein(ThetaIndex::ONE, u + xi)?) / FOUR_PI_I)
}

/// `(2πi)^{-1}` times the constant-driving flow `-E1(u + ξ | τ)`.
pub fn painleve_rhs(u: Complex64, xi: Complex64, fns: &EllipticFns) -> Result<Complex64> {
    Ok(-fns.eisenstein(ThetaIndex::ONE, u + xi)? / TWO_PI_I)
}

/// Layout of the RK4 state vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    tracers: usize,
    series_order: Option<usize>,
}

impl Layout {
    fn log_r(&self) -> usize {
        self.tracers
    }
    fn c0(&self) -> usize {
        self.tracers + 1
    }
    fn series_start(&self) -> usize {
        self.tracers + 2
    }
    fn len(&self) -> usize {
        self.series_start() + self.series_order.unwrap_or(0)
    }
}

struct Flow<'a> {
    path: &'a TauPath,
    drv: &'a DrivingFunction,
    norm: Normalization,
    layout: Layout,
}

impl Flow<'_> {
    /// `dy/ds` at path coordinate `s`.
    fn rate(&self, s: f64, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let tau = self.path.tau_at(s);
        let xi = self.drv.at(s, tau);
        let fns = EllipticFns::from_tau(tau)?;
        let l = self.layout;
        let mut dy = vec![Complex64::new(0.0, 0.0); l.len()];
        match self.norm {
            Normalization::Standard | Normalization::Shifted => {
                let half = fns.half()?;
                let e1_half_xi = half.eisenstein(ThetaIndex::ONE, xi)?;
                let base = fns.eisenstein(ThetaIndex::ONE, xi)? + fns.eisenstein(ThetaIndex::FOUR, xi)?;
                let c0 = y[l.c0()];
                for j in 0..l.tracers {
                    dy[j] = if self.norm == Normalization::Standard {
                        let x = y[j] + xi;
                        let at = fns.eisenstein(ThetaIndex::ONE, x)? + fns.eisenstein(ThetaIndex::FOUR, x)?;
                        (base - at) / FOUR_PI_I
                    } else {
                        -half.eisenstein(ThetaIndex::ONE, y[j] - c0 + xi)? / FOUR_PI_I
                    };
                }
                let sp = fns.s_prime(xi)?;
                dy[l.log_r()] = sp * sp / FOUR_PI_I;
                dy[l.c0()] = -e1_half_xi / FOUR_PI_I;
                if let Some(n) = l.series_order {
                    let mut taylor = half.eisenstein_taylor(ThetaIndex::ONE, xi, n)?;
                    taylor[0] = Complex64::new(0.0, 0.0);
                    for t in taylor.iter_mut() {
                        *t = -*t / FOUR_PI_I;
                    }
                    let mut coeffs = vec![Complex64::new(0.0, 0.0)];
                    coeffs.extend_from_slice(&y[l.series_start()..l.len()]);
                    let s_now = TruncatedSeries::from_coeffs(coeffs)?;
                    let rate = compose_analytic(&taylor, &s_now)?;
                    for k in 1..=n {
                        dy[l.series_start() + k - 1] = rate.coeff(k);
                    }
                }
            }
            Normalization::Painleve => {
                for j in 0..l.tracers {
                    dy[j] = painleve_rhs(y[j], xi, &fns)?;
                }
                let doubled = fns.at(fns.param().double()?)?;
                let sp = doubled.s_prime(xi)?;
                dy[l.log_r()] = sp * sp / TWO_PI_I;
                dy[l.c0()] = -fns.eisenstein(ThetaIndex::ONE, xi)? / TWO_PI_I;
            }
        }
        let dtau = self.path.dtau_ds();
        for v in dy.iter_mut() {
            *v *= dtau;
        }
        Ok(dy)
    }

    fn rk4_step(&self, s: f64, h: f64, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let stage = |s: f64, base: &[Complex64], k: Option<(&[Complex64], f64)>| -> Result<Vec<Complex64>> {
            let point: Vec<Complex64> = match k {
                None => base.to_vec(),
                Some((k, c)) => {
                    for kj in k.iter().take(self.layout.tracers) {
                        let inc = (kj * c).norm();
                        if inc > MAX_STAGE_INCREMENT || !inc.is_finite() {
                            return Err(Error::StepTooLarge { s, increment: inc });
                        }
                    }
                    base.iter().zip(k).map(|(b, kk)| b + kk * c).collect()
                }
            };
            self.rate(s, &point)
        };
        let k1 = stage(s, y, None)?;
        let k2 = stage(s + 0.5 * h, y, Some((&k1, 0.5 * h)))?;
        let k3 = stage(s + 0.5 * h, y, Some((&k2, 0.5 * h)))?;
        let k4 = stage(s + h, y, Some((&k3, h)))?;
        let out: Vec<Complex64> = (0..y.len())
            .map(|i| y[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0))
            .collect();
        for v in out.iter().take(self.layout.tracers) {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::StepTooLarge { s, increment: f64::INFINITY });
            }
        }
        Ok(out)
    }
}

/// Integrate tracers `u_j`, `log R`, `c_0` and optionally the coefficient
/// series from `s = 0` to `s = 1` with fixed-step RK4.
pub fn evolve(
    path: &TauPath,
    drv: &DrivingFunction,
    tracers: &[Complex64],
    series0: Option<&TruncatedSeries>,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    path.validate()?;
    drv.validate()?;
    let steps = path.step_count(opts.step)?;
    let h = 1.0 / steps as f64;
    if let Some(spacing) = drv.table_spacing() {
        if spacing < h {
            // sub-step table features would be aliased by the integrator
            return Err(Error::InvalidInput(format!(
                "driving table spacing {spacing} is finer than the step {h}"
            )));
        }
    }
    if let Some(s0) = series0 {
        if opts.normalization == Normalization::Painleve {
            return Err(Error::InvalidInput("series evolution needs the standard or shifted flow".into()));
        }
        if s0.c0().norm() != 0.0 {
            return Err(Error::OrderMismatch("initial series must satisfy u(infinity) = 0".into()));
        }
        if s0.order() < 1 {
            return Err(Error::OrderMismatch("initial series must have order >= 1".into()));
        }
    }

    let layout = Layout { tracers: tracers.len(), series_order: series0.map(|s| s.order()) };
    let flow = Flow { path, drv, norm: opts.normalization, layout };

    let m0 = ModularParam::new(path.start)?;
    let fns0 = EllipticFns::new(m0)?;
    let log_r0 = (opts.gamma0 * fns0.theta0(ThetaIndex::TWO) * fns0.theta0(ThetaIndex::THREE)).ln();

    let mut y = vec![Complex64::new(0.0, 0.0); layout.len()];
    y[..tracers.len()].copy_from_slice(tracers);
    y[layout.log_r()] = log_r0;
    if let Some(s0) = series0 {
        y[layout.series_start()..].copy_from_slice(&s0.coeffs()[1..]);
    }

    let real_regime = path.is_imaginary()
        && drv.is_real()
        && opts.gamma0.im == 0.0
        && opts.gamma0.re > 0.0;

    let make_sample = |s: f64, y: &[Complex64]| -> Result<Sample> {
        let tau = path.tau_at(s);
        let xi = drv.at(s, tau);
        let series = match layout.series_order {
            Some(_) => {
                let mut c = vec![Complex64::new(0.0, 0.0)];
                c.extend_from_slice(&y[layout.series_start()..]);
                Some(TruncatedSeries::from_coeffs(c)?)
            }
            None => None,
        };
        let tr = y[..layout.tracers].to_vec();
        let substituted_residual = if opts.check_substituted && opts.normalization != Normalization::Painleve {
            let fns = EllipticFns::from_tau(tau)?;
            let c0 = y[layout.c0()];
            let us: Vec<Complex64> = tr
                .iter()
                .map(|&u| if opts.normalization == Normalization::Shifted { u - c0 } else { u })
                .filter(|u| u.norm() > 1e-6)
                .collect();
            let mut worst: Option<f64> = None;
            for a in 0..us.len() {
                for b in a + 1..us.len() {
                    let r = substituted_identity_residual(us[a], us[b], xi, &fns)?;
                    worst = Some(worst.map_or(r, |w: f64| w.max(r)));
                }
            }
            worst
        } else {
            None
        };
        Ok(Sample {
            s,
            tau,
            xi,
            tracers: tr,
            log_r: y[layout.log_r()],
            c0: y[layout.c0()],
            series,
            substituted_residual,
        })
    };

    let abort = |s: f64, e: Error| Error::TrajectoryAborted { s, tau: path.tau_at(s), source: Box::new(e) };

    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(make_sample(0.0, &y).map_err(|e| abort(0.0, e))?);
    let rising = (path.end.im - path.start.im) > 0.0;
    for i in 0..steps {
        let s = i as f64 * h;
        y = flow.rk4_step(s, h, &y).map_err(|e| abort(s, e))?;
        let s_next = (i + 1) as f64 * h;
        let smp = make_sample(s_next, &y).map_err(|e| abort(s_next, e))?;
        if real_regime && opts.normalization != Normalization::Painleve {
            let prev = samples.last().map(|p: &Sample| p.log_r).unwrap_or(smp.log_r);
            let scale = 1e-9 * (1.0 + smp.log_r.norm());
            let monotone = if rising { smp.log_r.re >= prev.re } else { smp.log_r.re <= prev.re };
            if smp.log_r.im.abs() > scale || !monotone {
                return Err(abort(
                    s_next,
                    Error::InvalidInput(format!("log R left the real increasing branch: {}", smp.log_r)),
                ));
            }
        }
        samples.push(smp);
    }

    Ok(Trajectory { normalization: opts.normalization, path: *path, driving: drv.clone(), real_regime, samples })
}

/// `S(u|τ)` modulo `2πi`; differences are unwrapped by the callers.
fn s_mod(u: Complex64, tau: Complex64) -> Result<Complex64> {
    EllipticFns::from_tau(tau)?.s_principal(u)
}

fn unwrap_diff(d: Complex64) -> Complex64 {
    Complex64::new(d.re, d.im - 2.0 * PI * (d.im / (2.0 * PI)).round())
}

fn ensure_flow(traj: &Trajectory, painleve: bool) -> Result<()> {
    let is_p = traj.normalization == Normalization::Painleve;
    if is_p != painleve {
        return Err(Error::InvalidInput(format!(
            "residual not defined for a {:?} trajectory",
            traj.normalization
        )));
    }
    if traj.samples.len() < 3 {
        return Err(Error::InvalidInput("need at least three samples for central differences".into()));
    }
    Ok(())
}

fn check_tracer(traj: &Trajectory, j: usize) -> Result<()> {
    if j >= traj.tracer_count() {
        return Err(Error::InvalidInput(format!("tracer index {j} out of range")));
    }
    Ok(())
}

/// Central difference of `S(u_j)` in τ at interior sample `i`, or of
/// `log R` for the tracer sitting at `u = 0`.
fn total_s_derivative(traj: &Trajectory, i: usize, u_at: impl Fn(usize) -> Complex64) -> Result<Complex64> {
    let (a, b) = (&traj.samples[i - 1], &traj.samples[i + 1]);
    let dtau = b.tau - a.tau;
    if u_at(i).norm() < 1e-12 {
        return Ok((b.log_r - a.log_r) / dtau);
    }
    let d = s_mod(u_at(i + 1), b.tau)? - s_mod(u_at(i - 1), a.tau)?;
    Ok(unwrap_diff(d) / dtau)
}

/// Per interior sample: `4πi dS(u_j)/dτ` (differenced along the
/// trajectory) against `S'(ξ)S'(u_j + ξ)`.
pub fn total_derivative_residual(traj: &Trajectory, j: usize) -> Result<Vec<f64>> {
    ensure_flow(traj, false)?;
    check_tracer(traj, j)?;
    let n = traj.samples.len();
    (1..n - 1)
        .map(|i| {
            let smp = &traj.samples[i];
            let fns = EllipticFns::from_tau(smp.tau)?;
            let u = traj.standard_u(i, j);
            let lhs = FOUR_PI_I * total_s_derivative(traj, i, |k| traj.standard_u(k, j))?;
            let sx = fns.s_prime(smp.xi)?;
            let rhs = if u.norm() < 1e-12 { sx * sx } else { sx * fns.s_prime(u + smp.xi)? };
            Ok(rel_residual(lhs, rhs))
        })
        .collect()
}

/// Per interior sample: `(dS(u_1)/dτ)(dS(u_2)/dτ)` against
/// `(d log R/dτ)(dS(u_1 - u_2)/dτ)`, all three differenced along the path.
pub fn consistency_residual(traj: &Trajectory, j1: usize, j2: usize) -> Result<Vec<f64>> {
    ensure_flow(traj, false)?;
    check_tracer(traj, j1)?;
    check_tracer(traj, j2)?;
    if j1 == j2 {
        return Err(Error::DegeneratePair("consistency check needs two distinct tracers"));
    }
    let n = traj.samples.len();
    (1..n - 1)
        .map(|i| {
            let diff = |k: usize| traj.standard_u(k, j1) - traj.standard_u(k, j2);
            if diff(i).norm() < 1e-8 {
                return Err(Error::DegeneratePair("tracers coincide"));
            }
            let d1 = total_s_derivative(traj, i, |k| traj.standard_u(k, j1))?;
            let d2 = total_s_derivative(traj, i, |k| traj.standard_u(k, j2))?;
            let d12 = total_s_derivative(traj, i, diff)?;
            let (a, b) = (&traj.samples[i - 1], &traj.samples[i + 1]);
            let dlog_r = (b.log_r - a.log_r) / (b.tau - a.tau);
            Ok(rel_residual(d1 * d2, dlog_r * d12))
        })
        .collect()
}

/// The consistency relation with the flow substituted analytically:
///
/// ```text
/// S'(u1)[4πi u̇1 + 2E2(u1) + π²θ4⁴/S'(u1)] · S'(u2)[4πi u̇2 + 2E2(u2) + π²θ4⁴/S'(u2)]
///   = S'(ξ)² S'(u1-u2)[4πi(u̇1 - u̇2) + 2E2(u1-u2) + π²θ4⁴/S'(u1-u2)]
/// ```
///
/// with `4πi u̇ = -E1(u+ξ) - E4(u+ξ) + E1(ξ) + E4(ξ)`. No differencing.
pub fn substituted_identity_residual(u1: Complex64, u2: Complex64, xi: Complex64, fns: &EllipticFns) -> Result<f64> {
    let c = PI * PI * fns.theta4_fourth();
    let rate = |u| -> Result<Complex64> { Ok(FOUR_PI_I * loewner_rhs_full(u, xi, fns)?) };
    let e2 = |u| fns.eisenstein(ThetaIndex::TWO, u);
    let bracket = |u: Complex64, udot4: Complex64| -> Result<Complex64> {
        let sp = fns.s_prime(u)?;
        Ok(sp * (udot4 + 2.0 * e2(u)?) + c)
    };
    let (r1, r2) = (rate(u1)?, rate(u2)?);
    let lhs = bracket(u1, r1)? * bracket(u2, r2)?;
    let sx = fns.s_prime(xi)?;
    let rhs = sx * sx * bracket(u1 - u2, r1 - r2)?;
    Ok(rel_residual(lhs, rhs))
}

/// Per interior sample of a Painleve-normalized, constant-ξ trajectory:
/// `(2πi)² ∂²_τ u` (second central difference) against `½℘'(u + ξ)`.
pub fn painleve_residual(traj: &Trajectory, j: usize) -> Result<Vec<f64>> {
    ensure_flow(traj, true)?;
    check_tracer(traj, j)?;
    if !traj.driving.is_constant() {
        return Err(Error::InvalidInput("Painleve check needs constant driving".into()));
    }
    let n = traj.samples.len();
    (1..n - 1)
        .map(|i| {
            let (a, m, b) = (&traj.samples[i - 1], &traj.samples[i], &traj.samples[i + 1]);
            let h = (b.tau - a.tau) * 0.5;
            let second = (b.tracers[j] - 2.0 * m.tracers[j] + a.tracers[j]) / (h * h);
            let fns = EllipticFns::from_tau(m.tau)?;
            let rhs = 0.5 * fns.wp_prime(m.tracers[j] + m.xi)?;
            Ok(rel_residual(TWO_PI_I * TWO_PI_I * second, rhs))
        })
        .collect()
}

/// Per interior sample: `4πi d/dτ E1(u_j + ξ|τ)` along the trajectory
/// against `E1''(u_j + ξ|τ)`.
pub fn heat_residual(traj: &Trajectory, j: usize) -> Result<Vec<f64>> {
    ensure_flow(traj, true)?;
    check_tracer(traj, j)?;
    let n = traj.samples.len();
    let f = |k: usize| -> Result<Complex64> {
        let smp = &traj.samples[k];
        EllipticFns::from_tau(smp.tau)?.eisenstein(ThetaIndex::ONE, smp.tracers[j] + smp.xi)
    };
    (1..n - 1)
        .map(|i| {
            let (a, m, b) = (&traj.samples[i - 1], &traj.samples[i], &traj.samples[i + 1]);
            let lhs = FOUR_PI_I * (f(i + 1)? - f(i - 1)?) / (b.tau - a.tau);
            let fns = EllipticFns::from_tau(m.tau)?;
            let rhs = fns.eisenstein_du(ThetaIndex::ONE, m.tracers[j] + m.xi, 2)?;
            Ok(rel_residual(lhs, rhs))
        })
        .collect()
}

/// Per sample: `4πi ∂_τ E1(x|τ)` at fixed `x = u_j + ξ` (central difference
/// with step `h`) against `2E1E1' + E1''`.
pub fn heat_closed_form_residual(traj: &Trajectory, j: usize, h: f64) -> Result<Vec<f64>> {
    check_tracer(traj, j)?;
    traj.samples
        .iter()
        .map(|smp| {
            let x = smp.tracers[j] + smp.xi;
            let e = |t: Complex64| EllipticFns::from_tau(t)?.eisenstein(ThetaIndex::ONE, x);
            let lhs = FOUR_PI_I * (e(smp.tau + h)? - e(smp.tau - h)?) / (2.0 * h);
            let jet = EllipticFns::from_tau(smp.tau)?.eisenstein_jet(ThetaIndex::ONE, x)?;
            Ok(rel_residual(lhs, 2.0 * jet[0] * jet[1] + jet[2]))
        })
        .collect()
}

/// Reject starting data sitting on a pole of the chosen flow.
pub fn check_initial_data(
    path: &TauPath,
    drv: &DrivingFunction,
    tracers: &[Complex64],
    norm: Normalization,
) -> Result<()> {
    let m = ModularParam::new(path.start)?;
    let xi = drv.at(0.0, path.start);
    let guard = crate::elliptic::DEFAULT_POLE_GUARD;
    for &u in tracers {
        let lattice: &[ThetaIndex] = match norm {
            Normalization::Painleve => &[ThetaIndex::ONE],
            _ => &[ThetaIndex::ONE, ThetaIndex::FOUR],
        };
        for &a in lattice {
            let d = zero_distance(a, u + xi, &m);
            if d <= guard {
                return Err(Error::NearPole { what: "initial tracer", at: u, distance: d });
            }
        }
    }
    Ok(())
}
