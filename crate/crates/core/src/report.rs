//! Per-check records shared by the suites and the CLI reports.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The relation being checked, as a formula.
    pub anchor: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl CheckRecord {
    /// `passed` is `max_residual < tolerance` (NaN fails).
    pub fn new(name: impl Into<String>, anchor: impl Into<String>, samples: usize, max_residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            samples,
            max_residual,
            tolerance,
            passed: max_residual < tolerance,
            detail: None,
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, anchor: impl Into<String>, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            samples: 0,
            max_residual: f64::INFINITY,
            tolerance,
            passed: false,
            detail: Some(detail),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Pass iff `predicate`; residual is reported as given.
    pub fn predicate(name: impl Into<String>, anchor: impl Into<String>, value: f64, tolerance: f64, ok: bool) -> Self {
        let mut r = Self::new(name, anchor, 1, value, tolerance);
        r.passed = ok;
        r
    }
}

/// Max of a residual list; NaN propagates.
pub fn max_residual(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, &x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
}
