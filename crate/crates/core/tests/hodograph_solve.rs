mod common;

use common::c;
use ddkp_core::hodograph::*;
use ddkp_core::loewner::DrivingFunction;
use ddkp_core::Error;

const BRACKET: (f64, f64) = (1.0, 1.5);

fn field(k: usize, phi: PhiFunction, include_t0: bool) -> SpeedField {
    let mut prob = HodographProblem::new(DrivingFunction::constant(0.3), phi, k);
    prob.gamma0 = c(0.25, 0.0);
    prob.include_t0 = include_t0;
    SpeedField::new(&prob, BRACKET.0, BRACKET.1).unwrap()
}

fn times(k: usize) -> TimeVector {
    let mut t = vec![0.0; k];
    t[0] = 1.0;
    t[1] = 0.5;
    TimeVector::new(0.5, t)
}

#[test]
fn homogeneous_of_degree_zero() {
    let f = field(2, PhiFunction::Zero, true);
    let d = homogeneity_defect(&f, &times(2), BRACKET, &[0.5, 2.0, 5.0]).unwrap();
    assert!(d < 1e-9, "{d}");
    let without_t0 = field(2, PhiFunction::Zero, false);
    let t = TimeVector::new(0.0, vec![1.0, 1.2]);
    let d = homogeneity_defect(&without_t0, &t, BRACKET, &[0.5, 2.0, 5.0]).unwrap();
    assert!(d < 1e-9, "{d}");
}

#[test]
fn root_residual_contract() {
    let f = field(2, PhiFunction::Affine { a: -0.509, b: 0.4 }, true);
    let r = hodograph_solve(&f, &times(2), BRACKET).unwrap();
    assert!(r.residual < ROOT_TOL);
    let back = f.objective(&times(2), r.tau.im).unwrap();
    assert!(back.norm() < ROOT_TOL);
}

#[test]
fn hydrodynamic_equations_hold() {
    for phi in [PhiFunction::Zero, PhiFunction::Affine { a: -0.509, b: 0.4 }] {
        let f = field(2, phi, true);
        let d = time_derivatives(&f, &times(2), BRACKET, DEFAULT_FD_STEP).unwrap();
        for k in 1..=2 {
            let h = d.hydrodynamic(k).unwrap();
            assert!(h.residual < 1e-4, "k = {k}: {}", h.residual);
            assert!(h.dtau_dt0.norm() > 1e-3);
        }
    }
}

#[test]
fn hydrodynamic_residual_is_second_order() {
    let f = field(2, PhiFunction::Zero, true);
    let a = hydrodynamic_residual(&f, &times(2), BRACKET, 1, 1e-5).unwrap().residual;
    let b = hydrodynamic_residual(&f, &times(2), BRACKET, 1, 5e-6).unwrap().residual;
    assert!((3.0..=5.0).contains(&(a / b)), "{a} / {b}");
}

#[test]
fn objective_without_t0_is_t0_independent() {
    let f = field(2, PhiFunction::Zero, false);
    let t = TimeVector::new(0.0, vec![1.0, 1.2]);
    let d = time_derivatives(&f, &t, BRACKET, DEFAULT_FD_STEP).unwrap();
    let h = d.hydrodynamic(1).unwrap();
    assert!(h.dtau_dt0.norm() < 1e-10);
    // τ still moves with t_k, so the relation cannot be verified in this form
    assert!(h.dtau_dtk.norm() > 1e-3);
}

#[test]
fn generating_equation() {
    let f = field(2, PhiFunction::Zero, true);
    let g = generating_residual(&f, &times(2), BRACKET, c(50.0, 0.0), DEFAULT_FD_STEP).unwrap();
    assert!(g.residual < 1e-4, "{}", g.residual);
    let f4 = field(4, PhiFunction::Zero, true);
    let g = generating_residual(&f4, &times(4), BRACKET, c(3.0, 0.0), DEFAULT_FD_STEP).unwrap();
    assert!(g.residual < 1e-3, "{}", g.residual);
}

/// Solve the K×K system Σ_k z_j^{-k} a_k = b_j by Gaussian elimination.
fn vandermonde_solve(z: &[f64], b: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
    let n = z.len();
    let mut m: Vec<Vec<num_complex::Complex64>> = (0..n)
        .map(|j| {
            let mut row: Vec<_> = (1..=n).map(|k| c(z[j].powi(-(k as i32)), 0.0)).collect();
            row.push(b[j]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm())).unwrap();
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..=n {
                    let v = m[col][k];
                    m[r][k] -= f * v;
                }
            }
        }
    }
    (0..n).map(|k| m[k][n] / m[k][k]).collect()
}

#[test]
fn generating_expands_into_hydrodynamic() {
    let f = field(4, PhiFunction::Zero, true);
    let d = time_derivatives(&f, &times(4), BRACKET, DEFAULT_FD_STEP).unwrap();
    let zs = [2.0, 3.0, 5.0, 7.0];
    let b: Vec<_> = zs.iter().map(|&z| d.generating(c(z, 0.0), true).unwrap().defect).collect();
    let a = vandermonde_solve(&zs, &b);
    for k in 1..=4 {
        let h = d.hydrodynamic(k).unwrap();
        let diff = (a[k - 1] * k as f64 - h.defect).norm();
        assert!(diff < 1e-9 * h.dtau_dtk.norm(), "k = {k}: {diff}");
    }
}

#[test]
fn speeds_agree_with_refined_prepass() {
    let f = field(4, PhiFunction::Zero, true);
    let r = hodograph_solve(&f, &times(4), BRACKET).unwrap();
    let d = speeds_consistency(&f, r.tau.im).unwrap();
    assert!(d < 1e-7, "{d}");
}

#[test]
fn degenerate_inputs() {
    let f = field(2, PhiFunction::Zero, false);
    let r = hodograph_solve(&f, &TimeVector::new(3.0, vec![0.0, 0.0]), BRACKET);
    assert!(matches!(r, Err(Error::NoSignChange { .. })));
    // t_0 alone cannot be balanced by Φ = 0
    let f = field(2, PhiFunction::Zero, true);
    let r = hodograph_solve(&f, &TimeVector::new(1.0, vec![0.0, 0.0]), BRACKET);
    assert!(matches!(r, Err(Error::NoSignChange { .. })));
}

#[test]
fn theta2_zero_driving_has_no_speeds() {
    let mut prob = HodographProblem::new(DrivingFunction::constant(0.5), PhiFunction::Zero, 2);
    prob.step = 1e-2;
    let f = SpeedField::new(&prob, 1.0, 1.2).unwrap();
    assert!(matches!(f.speeds_at(1.1), Err(Error::ZeroDenominator(_))));
}
