//! Composite Gauss-Legendre quadrature along the Loewner path, used as an
//! independent oracle for the integrated `log R` and `c_0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::elliptic::EllipticFns;
use crate::error::Result;
use crate::loewner::{DrivingFunction, Normalization, TauPath};
use crate::theta::ThetaIndex;

const NODES: usize = 16;
const PANELS: usize = 8;

/// Nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `∫_0^1 f(s) ds` with panels aligned to `breaks`.
fn integrate_s(breaks: &[f64], f: impl Fn(f64) -> Result<Complex64>) -> Result<Complex64> {
    let gl = gauss_legendre(NODES);
    let mut acc = Complex64::new(0.0, 0.0);
    for w in breaks.windows(2) {
        let d = (w[1] - w[0]) / PANELS as f64;
        for p in 0..PANELS {
            let mid = w[0] + d * (p as f64 + 0.5);
            for &(x, wt) in &gl {
                acc += f(mid + 0.5 * d * x)? * (0.5 * d * wt);
            }
        }
    }
    Ok(acc)
}

fn breaks(drv: &DrivingFunction) -> Vec<f64> {
    match drv {
        DrivingFunction::Table { s, .. } => {
            let mut b: Vec<f64> = s.iter().copied().filter(|&x| x > 0.0 && x < 1.0).collect();
            b.insert(0, 0.0);
            b.push(1.0);
            b
        }
        _ => vec![0.0, 1.0],
    }
}

/// `log R(τ_1) - log R(τ_0)` by quadrature of the flow for `log R`.
pub fn log_r_increment(path: &TauPath, drv: &DrivingFunction, norm: Normalization) -> Result<Complex64> {
    let dtau = path.dtau_ds();
    integrate_s(&breaks(drv), |s| {
        let tau = path.tau_at(s);
        let xi = drv.at(s, tau);
        let v = match norm {
            Normalization::Painleve => {
                let sp = EllipticFns::from_tau(tau * 2.0)?.s_prime(xi)?;
                sp * sp / Complex64::new(0.0, 2.0 * PI)
            }
            _ => {
                let sp = EllipticFns::from_tau(tau)?.s_prime(xi)?;
                sp * sp / Complex64::new(0.0, 4.0 * PI)
            }
        };
        Ok(v * dtau)
    })
}

/// `c_0(τ_1) - c_0(τ_0)` by quadrature.
pub fn c0_increment(path: &TauPath, drv: &DrivingFunction, norm: Normalization) -> Result<Complex64> {
    let dtau = path.dtau_ds();
    integrate_s(&breaks(drv), |s| {
        let tau = path.tau_at(s);
        let xi = drv.at(s, tau);
        let v = match norm {
            Normalization::Painleve => {
                -EllipticFns::from_tau(tau)?.eisenstein(ThetaIndex::ONE, xi)? / Complex64::new(0.0, 2.0 * PI)
            }
            _ => -EllipticFns::from_tau(tau * 0.5)?.eisenstein(ThetaIndex::ONE, xi)? / Complex64::new(0.0, 4.0 * PI),
        };
        Ok(v * dtau)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let gl = gauss_legendre(NODES);
        let total: f64 = gl.iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-14);
        let x10: f64 = gl.iter().map(|(x, w)| w * x.powi(10)).sum();
        assert!((x10 - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn table_breaks_are_respected() {
        // |s - ½| integrates exactly once the kink is a panel edge
        let drv = DrivingFunction::Table { s: vec![0.0, 0.5, 1.0], xi: vec![Default::default(); 3] };
        let v = integrate_s(&breaks(&drv), |s| Ok(Complex64::new((s - 0.5).abs(), 0.0))).unwrap();
        assert!((v.re - 0.25).abs() < 1e-15);
    }
}
