//! The five subcommands. Each returns its checks and the files to write;
//! nothing here touches the filesystem.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::*;
use super::report::{csv, Artifact};
use crate::curve::{
    curve_residual, p_of_u, ratio_identity_residual, u_from_w_with, w_of_u, CurveParams,
};
use crate::elliptic::rel_residual;
use crate::error::Error;
use crate::hodograph::{
    homogeneity_defect, hodograph_solve, speeds_consistency, time_derivatives, PhiFunction, SpeedField, TimeVector,
};
use crate::identities::{fd_suite, identity_suite, SAMPLE_CLEARANCE};
use crate::loewner::{
    check_initial_data, consistency_residual, evolve, heat_closed_form_residual, heat_residual, painleve_residual,
    total_derivative_residual, DrivingFunction, EvolveOptions, Normalization, Trajectory,
};
use crate::quadrature::{c0_increment, log_r_increment};
use crate::report::{max_residual, CheckRecord};
use crate::series::TruncatedSeries;
use crate::theta::{zero_distance, ModularParam, ThetaIndex};

pub struct Outcome {
    pub checks: Vec<CheckRecord>,
    pub artifacts: Vec<Artifact>,
}

fn from_residuals(name: &str, anchor: &str, tol: f64, r: crate::Result<Vec<f64>>) -> CheckRecord {
    match r {
        Ok(v) => CheckRecord::new(name, anchor, v.len(), max_residual(&v), tol),
        Err(e) => CheckRecord::failed(name, anchor, tol, e.to_string()),
    }
}

pub fn identities(cfg: &IdentitiesConfig) -> crate::Result<Outcome> {
    let space = cfg.space();
    let mut checks = identity_suite(&space, cfg.tolerance)?;
    checks.extend(fd_suite(&space, cfg.fd_step, cfg.fd_tolerance, cfg.fd_ratio_window)?);
    Ok(Outcome { checks, artifacts: vec![] })
}

/// Points in the fundamental cell clear of every theta zero.
fn cell_points(seed: u64, n: usize, m: &ModularParam) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.45..0.45) * m.tau().im);
        if ThetaIndex::ALL.iter().all(|&a| zero_distance(a, u, m) > SAMPLE_CLEARANCE) {
            out.push(u);
        }
    }
    out
}

pub fn curve(cfg: &CurveConfig) -> crate::Result<Outcome> {
    let m = ModularParam::new(cfg.tau)?;
    let cp = CurveParams::new(cfg.gamma, m)?;
    let pts = cell_points(cfg.seed, cfg.samples, &m);
    let mut rows = Vec::with_capacity(pts.len());
    let mut resid = Vec::with_capacity(pts.len());
    let mut ws = Vec::with_capacity(pts.len());
    for &u in &pts {
        let (w, p, r) = (w_of_u(u, &cp)?, p_of_u(u, &cp)?, curve_residual(u, &cp)?);
        rows.push(vec![u.re, u.im, w.re, w.im, p.re, p.im, r]);
        resid.push(r);
        ws.push(w);
    }
    let round_trip: crate::Result<Vec<f64>> = pts
        .iter()
        .zip(&ws)
        .map(|(&u, &w)| Ok((u_from_w_with(w, cp.fns(), u + Complex64::new(0.01, -0.01))? - u).norm()))
        .collect();
    let pairs: crate::Result<Vec<f64>> =
        pts.windows(2).map(|p| ratio_identity_residual(p[0], p[1], &cp)).collect();
    let c1 = cp.c1();
    let s_link: crate::Result<Vec<f64>> =
        pts.iter().map(|&u| Ok(rel_residual(p_of_u(u, &cp)?, c1 * cp.fns().s_prime(u)?))).collect();
    let t2 = cp.fns().theta0(ThetaIndex::TWO);
    let t3 = cp.fns().theta0(ThetaIndex::THREE);
    let k = (t2 / t3).powi(2);
    let modulus = rel_residual(-cp.v() / (cp.r() * cp.r()), k + 1.0 / k);

    let header: Vec<String> =
        ["re_u", "im_u", "re_w", "im_w", "re_p", "im_p", "curve_residual"].iter().map(|s| s.to_string()).collect();
    let checks = vec![
        CheckRecord::new("curve_relation", "p² = R²(w + 1/w) + V", resid.len(), max_residual(&resid), cfg.tolerance),
        from_residuals("curve_u_from_w_round_trip", "u_from_w(w(u)) = u over emitted rows", cfg.tolerance, round_trip),
        from_residuals("curve_pair_ratio", "pair relation of consecutive rows", cfg.tolerance, pairs),
        from_residuals("curve_p_from_s_prime", "p(u) = c1 S'(u), c1 = γ/π", cfg.tolerance, s_link),
        CheckRecord::new("curve_modulus_ratio", "-V/R² = θ2²/θ3² + θ3²/θ2²", 1, modulus, cfg.tolerance),
    ];
    Ok(Outcome { checks, artifacts: vec![Artifact { name: "curve.csv".into(), contents: csv(&header, &rows) }] })
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let mut header: Vec<String> = vec!["s".into(), "re_tau".into(), "im_tau".into()];
    for j in 0..traj.tracer_count() {
        header.push(format!("re_u{j}"));
        header.push(format!("im_u{j}"));
    }
    for h in ["re_log_r", "im_log_r", "re_c0", "im_c0"] {
        header.push(h.into());
    }
    let rows: Vec<Vec<f64>> = traj
        .samples
        .iter()
        .map(|s| {
            let mut r = vec![s.s, s.tau.re, s.tau.im];
            for u in &s.tracers {
                r.push(u.re);
                r.push(u.im);
            }
            r.extend([s.log_r.re, s.log_r.im, s.c0.re, s.c0.im]);
            r
        })
        .collect();
    csv(&header, &rows)
}

fn aborted(name: &str, e: &Error) -> CheckRecord {
    let detail = match e {
        Error::TrajectoryAborted { s, tau, source } => format!("aborted at s = {s}, tau = {tau}: {source}"),
        other => other.to_string(),
    };
    CheckRecord::failed(name, "trajectory integrates to s = 1 without hitting a pole", 0.0, detail)
}

pub fn evolve_cmd(cfg: &EvolveConfig) -> crate::Result<Outcome> {
    let opts = EvolveOptions {
        step: cfg.step,
        normalization: cfg.normalization,
        gamma0: cfg.gamma0,
        check_substituted: cfg.normalization != Normalization::Painleve,
    };
    let series0 = cfg.series.as_ref().map(|s| TruncatedSeries::seed(s.gamma, s.order));
    let run = check_initial_data(&cfg.path, &cfg.driving, &cfg.tracers, cfg.normalization)
        .and_then(|_| evolve(&cfg.path, &cfg.driving, &cfg.tracers, series0.as_ref(), &opts));
    let traj = match run {
        Ok(t) => t,
        Err(e) => return Ok(Outcome { checks: vec![aborted("trajectory", &e)], artifacts: vec![] }),
    };
    let tol = &cfg.tolerances;
    let n = traj.samples.len() - 1;
    let mut checks = vec![CheckRecord::predicate(
        "trajectory",
        "trajectory integrates to s = 1 without hitting a pole",
        n as f64,
        f64::INFINITY,
        true,
    )
    .with_detail(format!("{n} RK4 steps; real regime: {}", traj.real_regime))];

    let standard = cfg.normalization != Normalization::Painleve;
    let origin: Vec<usize> = (0..cfg.tracers.len()).filter(|&j| cfg.tracers[j].norm() == 0.0).collect();
    let moving: Vec<usize> = (0..cfg.tracers.len()).filter(|&j| cfg.tracers[j].norm() != 0.0).collect();
    if standard {
        for &j in &origin {
            let drift = (0..=n).map(|i| traj.standard_u(i, j).norm()).fold(0.0, f64::max);
            checks.push(CheckRecord::new(
                format!("fixed_point_u{j}"),
                "u = 0 is a fixed point of the flow",
                n + 1,
                drift,
                tol.fixed_point,
            ));
        }
        for j in 0..cfg.tracers.len() {
            checks.push(from_residuals(
                &format!("total_derivative_u{j}"),
                "4πi dS(u)/dτ = S'(ξ)S'(u+ξ) along the trajectory",
                tol.total_derivative,
                total_derivative_residual(&traj, j),
            ));
        }
        if moving.len() >= 2 {
            let (a, b) = (moving[0], moving[1]);
            checks.push(from_residuals(
                &format!("consistency_u{a}_u{b}"),
                "(dS(u1)/dτ)(dS(u2)/dτ) = (d log R/dτ)(dS(u1-u2)/dτ)",
                tol.consistency,
                consistency_residual(&traj, a, b),
            ));
            let sub = traj.max_substituted_residual().unwrap_or(f64::NAN);
            checks.push(CheckRecord::new(
                "substituted_identity",
                "total-derivative relation with the flow substituted, via the key identity",
                n + 1,
                sub,
                tol.substituted,
            ));
        }
    }

    let first = &traj.samples[0];
    let last = traj.final_sample();
    let anchors = if standard {
        ("4πi d log R/dτ = S'(ξ)²", "4πi dc0/dτ = -E^(1)(ξ|τ/2)")
    } else {
        ("2πi d log R/dτ = S'(ξ|2τ)²", "2πi dc0/dτ = -E^(1)(ξ|τ)")
    };
    checks.push(match log_r_increment(&cfg.path, &cfg.driving, cfg.normalization) {
        Ok(q) => CheckRecord::new("log_r_quadrature", anchors.0, 1, (last.log_r - first.log_r - q).norm(), tol.quadrature),
        Err(e) => CheckRecord::failed("log_r_quadrature", anchors.0, tol.quadrature, e.to_string()),
    });
    checks.push(match c0_increment(&cfg.path, &cfg.driving, cfg.normalization) {
        Ok(q) => CheckRecord::new("c0_quadrature", anchors.1, 1, (last.c0 - first.c0 - q).norm(), tol.quadrature),
        Err(e) => CheckRecord::failed("c0_quadrature", anchors.1, tol.quadrature, e.to_string()),
    });

    if let (Some(s0), Some(s_end)) = (series0.as_ref(), last.series.as_ref()) {
        let z = Complex64::new(10.0, 0.0);
        let plain = EvolveOptions { check_substituted: false, ..opts.clone() };
        let anchor = "series u(z) at z = 10 follows the tracer started at u(10)";
        checks.push(match evolve(&cfg.path, &cfg.driving, &[s0.eval(z)], None, &plain) {
            Ok(t) => {
                let d = (t.standard_u(t.samples.len() - 1, 0) - s_end.eval(z)).norm();
                CheckRecord::new("series_tracer_agreement", anchor, 1, d, tol.series)
            }
            Err(e) => CheckRecord::failed("series_tracer_agreement", anchor, tol.series, e.to_string()),
        });
    }

    let json = serde_json::to_string_pretty(&traj).expect("trajectory serializes") + "\n";
    Ok(Outcome {
        checks,
        artifacts: vec![
            Artifact { name: "evolve.csv".into(), contents: trajectory_csv(&traj) },
            Artifact { name: "trajectory.json".into(), contents: json },
        ],
    })
}

fn painleve_traj(cfg: &PainleveConfig, step: f64) -> crate::Result<Trajectory> {
    let drv = DrivingFunction::constant(cfg.xi);
    check_initial_data(&cfg.path, &drv, &[cfg.u0], Normalization::Painleve)?;
    let opts = EvolveOptions { step, normalization: Normalization::Painleve, check_substituted: false, ..Default::default() };
    evolve(&cfg.path, &drv, &[cfg.u0], None, &opts)
}

pub fn painleve(cfg: &PainleveConfig) -> crate::Result<Outcome> {
    let (traj, fine) = match (painleve_traj(cfg, cfg.step), painleve_traj(cfg, 0.5 * cfg.step)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Ok(Outcome { checks: vec![aborted("trajectory", &e)], artifacts: vec![] }),
    };
    let pa = "(2πi)² ∂_τ²u = ½℘'(u+ξ)";
    let mut checks = Vec::new();
    let p_coarse = painleve_residual(&traj, 0);
    let p_fine = painleve_residual(&fine, 0);
    checks.push(from_residuals("painleve_residual", pa, cfg.painleve_tolerance, p_coarse.clone()));
    let (lo, hi) = cfg.ratio_window;
    let order_anchor = format!("O(h²): residual(h)/residual(h/2) in [{lo}, {hi}]");
    checks.push(match (p_coarse, p_fine) {
        (Ok(a), Ok(b)) => {
            let ratio = max_residual(&a) / max_residual(&b);
            CheckRecord::predicate("painleve_order", order_anchor, ratio, hi, ratio >= lo && ratio <= hi)
                .with_detail(format!("steps {:e} and {:e}", cfg.step, 0.5 * cfg.step))
        }
        (Err(e), _) | (_, Err(e)) => CheckRecord::failed("painleve_order", order_anchor, hi, e.to_string()),
    });
    let heat = heat_residual(&traj, 0);
    checks.push(from_residuals(
        "heat_residual",
        "4πi d/dτ E^(1)(u+ξ|τ) = ∂_ξ² E^(1)(u+ξ|τ) along the trajectory",
        cfg.heat_tolerance,
        heat.clone(),
    ));
    checks.push(from_residuals(
        "heat_closed_form",
        "4πi ∂_τE^(1) = 2E^(1)E^(1)' + E^(1)'' at trajectory points",
        cfg.heat_tolerance,
        heat_closed_form_residual(&traj, 0, cfg.fd_step),
    ));
    let guard = check_initial_data(
        &cfg.path,
        &DrivingFunction::constant(0.0),
        &[Complex64::new(1e-10, 0.0)],
        Normalization::Painleve,
    );
    checks.push(CheckRecord::predicate(
        "pole_guard",
        "ξ = 0, u0 → 0 is rejected (℘' pole)",
        0.0,
        0.0,
        matches!(guard, Err(Error::NearPole { .. })),
    ));

    let pr = painleve_residual(&traj, 0).unwrap_or_default();
    let hr = heat.unwrap_or_default();
    let header: Vec<String> = ["s", "re_tau", "im_tau", "re_u", "im_u", "painleve_residual", "heat_residual"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<f64>> = (1..traj.samples.len() - 1)
        .map(|i| {
            let s = &traj.samples[i];
            vec![
                s.s,
                s.tau.re,
                s.tau.im,
                s.tracers[0].re,
                s.tracers[0].im,
                pr.get(i - 1).copied().unwrap_or(f64::NAN),
                hr.get(i - 1).copied().unwrap_or(f64::NAN),
            ]
        })
        .collect();
    Ok(Outcome { checks, artifacts: vec![Artifact { name: "painleve.csv".into(), contents: csv(&header, &rows) }] })
}

pub fn hodograph(cfg: &HodographConfig) -> crate::Result<Outcome> {
    let (lo, hi) = cfg.bracket;
    let field = match SpeedField::new(&cfg.problem, lo, hi) {
        Ok(f) => f,
        Err(e) => return Ok(Outcome { checks: vec![aborted("speed_prepass", &e)], artifacts: vec![] }),
    };
    let tol = &cfg.tolerances;
    let mut checks = Vec::new();
    let ra = "[t0] + Σ t_k φ_k(ξ(τ)|τ) = Φ(τ)";
    let root = hodograph_solve(&field, &cfg.times, cfg.bracket);
    checks.push(match &root {
        Ok(r) => CheckRecord::new("root_residual", ra, 1, r.residual, tol.root).with_detail(format!(
            "tau = {}, {} bisection + {} Newton steps",
            r.tau, r.bisection_steps, r.newton_steps
        )),
        Err(e) => CheckRecord::failed("root_residual", ra, tol.root, e.to_string()),
    });
    let ha = "τ(c·t) = τ(t)";
    if cfg.problem.phi.is_zero() {
        checks.push(match homogeneity_defect(&field, &cfg.times, cfg.bracket, &cfg.homogeneity_factors) {
            Ok(d) => CheckRecord::new("homogeneity", ha, cfg.homogeneity_factors.len(), d, tol.homogeneity),
            Err(e) => CheckRecord::failed("homogeneity", ha, tol.homogeneity, e.to_string()),
        });
    }
    let mut derivs_json = serde_json::Value::Null;
    match time_derivatives(&field, &cfg.times, cfg.bracket, cfg.fd_step) {
        Ok(d) => {
            for k in 1..=cfg.problem.speeds {
                let h = d.hydrodynamic(k)?;
                if cfg.problem.include_t0 {
                    checks.push(CheckRecord::new(
                        format!("hydrodynamic_t{k}"),
                        "∂τ/∂t_k = φ_k ∂τ/∂t0",
                        1,
                        h.residual,
                        tol.hydrodynamic,
                    ));
                }
            }
            if !cfg.problem.include_t0 {
                checks.push(CheckRecord::new(
                    "t0_independence",
                    "Σ_{k≥1} t_k φ_k = Φ leaves τ independent of t0",
                    1,
                    d.dt0.norm(),
                    tol.root,
                ));
            } else {
                let g = d.generating(cfg.generating_z, false)?;
                checks.push(
                    CheckRecord::new(
                        "generating_equation",
                        "∇(z)τ = [S'(u(z)+ξ)/S'(ξ)] ∂τ/∂t0, ∇ truncated at K",
                        1,
                        g.residual,
                        tol.generating,
                    )
                    .with_detail(format!("z = {}", cfg.generating_z)),
                );
            }
            let sc = speeds_consistency(&field, d.root.tau.im);
            let sa = "speeds from the pre-pass = speeds from a refined independent pre-pass";
            checks.push(match sc {
                Ok(v) => CheckRecord::new("speeds_consistency", sa, cfg.problem.speeds, v, tol.speeds),
                Err(e) => CheckRecord::failed("speeds_consistency", sa, tol.speeds, e.to_string()),
            });
            derivs_json = serde_json::to_value(&d).expect("derivatives serialize");
        }
        Err(e) => checks.push(CheckRecord::failed("hydrodynamic", "∂τ/∂t_k = φ_k ∂τ/∂t0", tol.hydrodynamic, e.to_string())),
    }
    let degenerate = field
        .with_objective(false, PhiFunction::Zero)
        .map(|f| hodograph_solve(&f, &TimeVector::new(cfg.times.t0, vec![0.0; cfg.problem.speeds]), cfg.bracket));
    checks.push(CheckRecord::predicate(
        "degenerate_times_rejected",
        "Φ = 0 with t_k = 0 (k ≥ 1): every τ solves, rejected as no sign change",
        0.0,
        0.0,
        matches!(degenerate, Ok(Err(Error::NoSignChange { .. }))),
    ));
    let out = serde_json::json!({
        "root": root.ok(),
        "derivatives": derivs_json,
    });
    Ok(Outcome {
        checks,
        artifacts: vec![Artifact {
            name: "hodograph.json".into(),
            contents: serde_json::to_string_pretty(&out).expect("serializes") + "\n",
        }],
    })
}
