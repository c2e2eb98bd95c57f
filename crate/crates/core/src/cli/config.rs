//! Run configurations. Every field has a default, so an empty JSON object
//! (or no `--config` at all) reproduces the shipped demo for the command.
//! Complex numbers are written as `[re, im]`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hodograph::{HodographProblem, PhiFunction, TimeVector};
use crate::identities::SampleSpace;
use crate::loewner::{DrivingFunction, Normalization, TauPath};
use crate::theta::ModularParam;

/// Configuration problems map to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Smallest `Im τ` a sampling range may reach.
pub const MIN_SAMPLED_IM_TAU: f64 = 0.1;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, ConfigError> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.display().to_string(), source })
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn modulus(name: &str, tau: Complex64) -> Result<(), ConfigError> {
    ModularParam::new(tau).map(|_| ()).map_err(|e| invalid(format!("{name}: {e}")))
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
    pub steps: Option<usize>,
}

impl Overrides {
    fn scale(&self) -> f64 {
        self.tol_scale.unwrap_or(1.0)
    }
}

pub trait RunConfig: Serialize + for<'de> Deserialize<'de> + Default {
    fn apply(&mut self, o: &Overrides);
    fn validate(&self) -> Result<(), ConfigError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub seed: u64,
    pub samples: usize,
    pub im_tau: (f64, f64),
    pub re_tau: f64,
    /// Exact identities.
    pub tolerance: f64,
    /// Finite-difference laws.
    pub fd_tolerance: f64,
    pub fd_step: f64,
    pub fd_ratio_window: (f64, f64),
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            samples: 100,
            im_tau: (0.6, 2.0),
            re_tau: 0.5,
            tolerance: 1e-10,
            fd_tolerance: 1e-5,
            fd_step: 1e-4,
            fd_ratio_window: (3.5, 4.5),
        }
    }
}

impl IdentitiesConfig {
    pub fn space(&self) -> SampleSpace {
        SampleSpace { seed: self.seed, count: self.samples, im_tau: self.im_tau, re_tau: self.re_tau }
    }
}

fn validate_space(samples: usize, im_tau: (f64, f64), re_tau: f64) -> Result<(), ConfigError> {
    if samples == 0 {
        return Err(invalid("samples must be at least 1"));
    }
    let (lo, hi) = im_tau;
    if !(lo <= hi && hi.is_finite()) {
        return Err(invalid(format!("im_tau range [{lo}, {hi}] is empty")));
    }
    if !(lo >= MIN_SAMPLED_IM_TAU) {
        return Err(invalid(format!(
            "im_tau range starts at {lo}; sampled moduli need Im tau >= {MIN_SAMPLED_IM_TAU} (|q| <= {:.3})",
            (-std::f64::consts::PI * MIN_SAMPLED_IM_TAU).exp()
        )));
    }
    if !(0.0..=0.5).contains(&re_tau) {
        return Err(invalid(format!("re_tau must lie in [0, 0.5], got {re_tau}")));
    }
    Ok(())
}

impl RunConfig for IdentitiesConfig {
    fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.steps {
            self.samples = n;
        }
        self.tolerance *= o.scale();
        self.fd_tolerance *= o.scale();
    }

    fn validate(&self) -> Result<(), ConfigError> {
        validate_space(self.samples, self.im_tau, self.re_tau)?;
        positive("tolerance", self.tolerance)?;
        positive("fd_tolerance", self.fd_tolerance)?;
        positive("fd_step", self.fd_step)?;
        let (a, b) = self.fd_ratio_window;
        if !(a > 0.0 && a < b) {
            return Err(invalid(format!("fd_ratio_window [{a}, {b}] is empty")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub seed: u64,
    pub gamma: Complex64,
    pub tau: Complex64,
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self { seed: 42, gamma: c(1.0, 0.0), tau: c(0.0, 1.2), samples: 200, tolerance: 1e-10 }
    }
}

impl RunConfig for CurveConfig {
    fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.steps {
            self.samples = n;
        }
        self.tolerance *= o.scale();
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.samples == 0 {
            return Err(invalid("samples must be at least 1"));
        }
        if self.gamma.norm() == 0.0 || !self.gamma.norm().is_finite() {
            return Err(invalid("gamma must be finite and nonzero"));
        }
        modulus("tau", self.tau)?;
        positive("tolerance", self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveTolerances {
    pub fixed_point: f64,
    pub total_derivative: f64,
    pub consistency: f64,
    pub substituted: f64,
    pub quadrature: f64,
    pub series: f64,
}

impl Default for EvolveTolerances {
    fn default() -> Self {
        Self { fixed_point: 1e-12, total_derivative: 1e-6, consistency: 1e-5, substituted: 1e-10, quadrature: 1e-8, series: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    pub order: usize,
    pub gamma: Complex64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { order: crate::series::DEFAULT_ORDER, gamma: c(1.0, 0.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub seed: u64,
    pub path: TauPath,
    pub driving: DrivingFunction,
    pub tracers: Vec<Complex64>,
    pub normalization: Normalization,
    /// RK4 step `|Δτ|`.
    pub step: f64,
    pub gamma0: Complex64,
    pub series: Option<SeriesConfig>,
    pub tolerances: EvolveTolerances,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            path: TauPath { start: c(0.0, 1.0), end: c(0.0, 1.5) },
            driving: DrivingFunction::constant(0.5),
            tracers: vec![c(0.0, 0.0), c(0.0, 0.2), c(0.1, 0.15)],
            normalization: Normalization::Standard,
            step: 1e-3,
            gamma0: c(1.0, 0.0),
            series: None,
            tolerances: EvolveTolerances::default(),
        }
    }
}

fn step_from_count(path: &TauPath, n: usize) -> f64 {
    (path.end - path.start).norm() / n.max(1) as f64
}

impl RunConfig for EvolveConfig {
    fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.steps {
            self.step = step_from_count(&self.path, n);
        }
        let k = o.scale();
        let t = &mut self.tolerances;
        t.fixed_point *= k;
        t.total_derivative *= k;
        t.consistency *= k;
        t.substituted *= k;
        t.quadrature *= k;
        t.series *= k;
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.path.validate().map_err(|e| invalid(format!("path: {e}")))?;
        self.driving.validate().map_err(|e| invalid(format!("driving: {e}")))?;
        positive("step", self.step)?;
        self.path.step_count(self.step).map_err(|e| invalid(e.to_string()))?;
        if self.tracers.is_empty() && self.series.is_none() {
            return Err(invalid("nothing to evolve: give tracers or a series"));
        }
        if let Some(s) = &self.series {
            if s.order < 1 {
                return Err(invalid("series order must be at least 1"));
            }
            if self.normalization == Normalization::Painleve {
                return Err(invalid("series evolution needs the standard or shifted normalization"));
            }
        }
        let t = &self.tolerances;
        for (n, v) in [
            ("fixed_point", t.fixed_point),
            ("total_derivative", t.total_derivative),
            ("consistency", t.consistency),
            ("substituted", t.substituted),
            ("quadrature", t.quadrature),
            ("series", t.series),
        ] {
            positive(n, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PainleveConfig {
    pub seed: u64,
    pub xi: f64,
    pub path: TauPath,
    pub u0: Complex64,
    pub step: f64,
    pub painleve_tolerance: f64,
    pub heat_tolerance: f64,
    /// `τ`-step of the closed-form heat check.
    pub fd_step: f64,
    pub ratio_window: (f64, f64),
}

impl Default for PainleveConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            xi: 0.5,
            path: TauPath { start: c(0.0, 1.0), end: c(0.0, 1.4) },
            u0: c(0.2, 0.3),
            step: 5e-4,
            painleve_tolerance: 1e-4,
            heat_tolerance: 1e-5,
            fd_step: 1e-4,
            ratio_window: (3.0, 5.0),
        }
    }
}

impl RunConfig for PainleveConfig {
    fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.steps {
            self.step = step_from_count(&self.path, n);
        }
        self.painleve_tolerance *= o.scale();
        self.heat_tolerance *= o.scale();
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.path.validate().map_err(|e| invalid(format!("path: {e}")))?;
        positive("step", self.step)?;
        self.path.step_count(self.step).map_err(|e| invalid(e.to_string()))?;
        positive("painleve_tolerance", self.painleve_tolerance)?;
        positive("heat_tolerance", self.heat_tolerance)?;
        positive("fd_step", self.fd_step)?;
        if !self.xi.is_finite() {
            return Err(invalid("xi must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HodographTolerances {
    pub root: f64,
    pub homogeneity: f64,
    pub hydrodynamic: f64,
    pub generating: f64,
    pub speeds: f64,
}

impl Default for HodographTolerances {
    fn default() -> Self {
        Self { root: 1e-10, homogeneity: 1e-9, hydrodynamic: 1e-4, generating: 1e-4, speeds: 1e-7 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HodographConfig {
    pub seed: u64,
    pub problem: HodographProblem,
    pub times: TimeVector,
    pub bracket: (f64, f64),
    pub fd_step: f64,
    pub homogeneity_factors: Vec<f64>,
    pub generating_z: Complex64,
    pub tolerances: HodographTolerances,
}

impl Default for HodographConfig {
    fn default() -> Self {
        let mut problem = HodographProblem::new(DrivingFunction::constant(0.3), PhiFunction::Zero, 2);
        problem.gamma0 = c(0.25, 0.0);
        Self {
            seed: 42,
            problem,
            times: TimeVector::new(0.5, vec![1.0, 0.5]),
            bracket: (1.0, 1.5),
            fd_step: crate::hodograph::DEFAULT_FD_STEP,
            homogeneity_factors: vec![0.5, 2.0, 5.0],
            generating_z: c(50.0, 0.0),
            tolerances: HodographTolerances::default(),
        }
    }
}

impl RunConfig for HodographConfig {
    fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.steps {
            self.problem.step = (self.bracket.1 - self.bracket.0).abs() / n.max(1) as f64;
        }
        let k = o.scale();
        let t = &mut self.tolerances;
        t.root *= k;
        t.homogeneity *= k;
        t.hydrodynamic *= k;
        t.generating *= k;
        t.speeds *= k;
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.problem.validate().map_err(|e| invalid(format!("problem: {e}")))?;
        let (lo, hi) = self.bracket;
        if !(hi > lo) {
            return Err(invalid(format!("bracket [{lo}, {hi}] is empty")));
        }
        modulus("bracket start", c(0.0, lo))?;
        if self.times.t.len() != self.problem.speeds {
            return Err(invalid(format!(
                "times has {} entries but the problem has {} speeds",
                self.times.t.len(),
                self.problem.speeds
            )));
        }
        positive("fd_step", self.fd_step)?;
        positive("problem.step", self.problem.step)?;
        if self.generating_z.norm() <= 1.0 {
            return Err(invalid("generating_z must satisfy |z| > 1"));
        }
        let t = &self.tolerances;
        for (n, v) in [
            ("root", t.root),
            ("homogeneity", t.homogeneity),
            ("hydrodynamic", t.hydrodynamic),
            ("generating", t.generating),
            ("speeds", t.speeds),
        ] {
            positive(n, v)?;
        }
        Ok(())
    }
}
