#![allow(dead_code)]

use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
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
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// ∫ f over the straight segment a → b, composite Gauss-Legendre.
pub fn segment_integral(a: Complex64, b: Complex64, panels: usize, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    let gl = gauss_legendre(20);
    let mut acc = Complex64::new(0.0, 0.0);
    let d = (b - a) / panels as f64;
    for p in 0..panels {
        let mid = a + d * (p as f64 + 0.5);
        for &(x, w) in &gl {
            acc += f(mid + d * (0.5 * x)) * (w * 0.5);
        }
    }
    acc * d
}

pub fn max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}
