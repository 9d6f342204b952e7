use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use proptest::prelude::*;
use squeezegate::analysis::{
    diagonalize, matrix_of, reconstruct_variance_matrix, summarize, theory_summary,
    variance_along, write_summary_csv, Matrix2, SUMMARY_HEADER,
};
use squeezegate::config::RunConfig;
use squeezegate::experiment::{
    theory_traces, BinMoments, LoAngle, MomentEstimate, MomentTrace, TheoryBin,
};
use squeezegate::gaussian::GaussianState;
use squeezegate::rng::shot_rng;
use squeezegate::Error;

fn random_single_mode(seed: u64) -> GaussianState {
    GaussianState::random_mixed(1, &mut shot_rng(seed, 31, 0)).unwrap()
}

/// Moments that reproduce the theory variances exactly.
fn synthetic(theory: &[TheoryBin]) -> MomentEstimate {
    MomentEstimate {
        time_us: theory.iter().map(|t| t.time_us).collect(),
        kappa: theory.iter().map(|t| t.kappa).collect(),
        traces: LoAngle::ALL
            .into_iter()
            .map(|angle| MomentTrace {
                angle,
                bins: theory
                    .iter()
                    .map(|t| BinMoments {
                        mean: t.mean_at(angle),
                        variance: t.variance_at(angle),
                        se_mean: 0.0,
                        se_var: 0.0,
                    })
                    .collect(),
            })
            .collect(),
    }
}

#[test]
fn three_angles_recover_the_covariance() {
    for seed in 0..200 {
        let s = random_single_mode(seed);
        let v = [0.0, FRAC_PI_2, FRAC_PI_4].map(|a| s.quadrature_variance(0, a).unwrap());
        let rec = reconstruct_variance_matrix(v[0], v[1], v[2]).unwrap();
        let truth = matrix_of(&s).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((rec.matrix[i][j] - truth[i][j]).abs() < 1e-10, "seed {seed}");
            }
        }
        assert!(rec.positive_definite);
    }
}

fn brute_scan(v: &Matrix2) -> (f64, f64, f64) {
    let n = 10_000;
    let (mut lo, mut hi, mut arg) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for i in 0..n {
        let a = PI * i as f64 / n as f64;
        let u = variance_along(v, a);
        if u < lo {
            lo = u;
            arg = a;
        }
        hi = hi.max(u);
    }
    (lo, hi, arg)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[test]
fn eigen_variances_match_an_angle_scan() {
    for seed in 0..200 {
        let v = matrix_of(&random_single_mode(seed)).unwrap();
        let d = diagonalize(&v).unwrap();
        let (lo, hi, arg) = brute_scan(&v);
        // the scan misses the extremum by at most half a grid step, a
        // second-order error in the variance
        let slack = 1e-6 * (1.0 + hi);
        assert!((d.sigma_minus2 - lo).abs() < slack, "seed {seed}");
        assert!((d.sigma_plus2 - hi).abs() < slack, "seed {seed}");
        if d.sigma_plus2 - d.sigma_minus2 > 1e-3 {
            assert!(angle_gap(arg, d.squeezed_axis_angle()) < 2.0 * PI / 10_000.0, "seed {seed}");
        }
    }
}

proptest! {
    #[test]
    fn trace_and_determinant_are_preserved(seed in any::<u64>()) {
        let v = matrix_of(&random_single_mode(seed)).unwrap();
        let d = diagonalize(&v).unwrap();
        let tr = v[0][0] + v[1][1];
        let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
        prop_assert!((d.sigma_plus2 + d.sigma_minus2 - tr).abs() < 1e-9 * tr);
        prop_assert!((d.sigma_plus2 * d.sigma_minus2 - det).abs() < 1e-9 * det.max(1.0));
        prop_assert!(d.phi > -FRAC_PI_2 && d.phi <= FRAC_PI_2);
    }
}

#[test]
fn shear_on_vacuum() {
    let v = [[0.5, 1.0], [1.0, 2.5]];
    let d = diagonalize(&v).unwrap();
    let r2 = 2f64.sqrt();
    assert!((d.sigma_plus2 - (3.0 + 2.0 * r2) / 2.0).abs() < 1e-12);
    assert!((d.sigma_minus2 - (3.0 - 2.0 * r2) / 2.0).abs() < 1e-12);
}

#[test]
fn isotropic_and_bad_matrices() {
    let d = diagonalize(&[[0.7, 0.0], [0.0, 0.7]]).unwrap();
    assert_eq!(d.phi, 0.0);
    assert!(matches!(diagonalize(&[[1.0, 2.0], [2.0, 1.0]]), Err(Error::NotPositiveDefinite)));
    assert!(matches!(diagonalize(&[[1.0, 0.2], [0.1, 1.0]]), Err(Error::NotSymmetric(_))));
    assert!(reconstruct_variance_matrix(0.5, -0.1, 0.5).is_err());
    let rec = reconstruct_variance_matrix(0.1, 0.1, 1.0).unwrap();
    assert!(!rec.positive_definite);
}

#[test]
fn synthetic_moments_leave_no_residual() {
    let th = theory_traces(&RunConfig::default()).unwrap();
    let s = summarize(&synthetic(&th), Some(&th)).unwrap();
    let res = s.residuals.clone().unwrap();
    assert_eq!(res.len(), th.len());
    assert_eq!(s.n_invalid(), 0);
    for r in res {
        assert!(r.sigma_plus2_db.abs() < 1e-9);
        assert!(r.sigma_minus2_db.abs() < 1e-9);
        assert!(r.phi.abs() < 1e-9);
    }
}

#[test]
fn headline_trends_in_the_model() {
    let rows = theory_summary(&theory_traces(&RunConfig::default()).unwrap()).unwrap();
    let at = |k: f64| rows.iter().find(|r| (r.kappa - k).abs() < 1e-12).unwrap();
    assert!((at(0.0).sigma_plus2_db().unwrap() - 3.01).abs() < 0.01);
    assert!((at(0.0).sigma_minus2_db().unwrap() + 1.28).abs() < 0.01);
    for k in [2.0, -2.0] {
        assert!((at(k).sigma_plus2_db().unwrap() - 7.02).abs() < 0.02);
        assert!((at(k).sigma_minus2_db().unwrap() + 1.65).abs() < 0.01);
    }
    // the squeezed axis leans against the control
    for r in rows.iter().filter(|r| r.kappa.abs() > 0.1) {
        assert_eq!(r.squeezed_axis_angle().unwrap().signum(), -r.kappa.signum(), "bin {}", r.bin_index);
    }
}

#[test]
fn mismatched_theory_grid_is_rejected() {
    let th = theory_traces(&RunConfig::default()).unwrap();
    let m = synthetic(&th);
    assert!(matches!(summarize(&m, Some(&th[1..])), Err(Error::GridMismatch(_))));
    let mut short = m.clone();
    short.traces[2].bins.pop();
    assert!(matches!(summarize(&short, None), Err(Error::GridMismatch(_))));
}

#[test]
fn summary_csv_marks_invalid_bins() {
    let th = theory_traces(&RunConfig::default()).unwrap();
    let mut m = synthetic(&th[..3]);
    m.traces[2].bins[1].variance = 5.0;
    let s = summarize(&m, None).unwrap();
    assert_eq!(s.n_invalid(), 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("summary.csv");
    write_summary_csv(&s.rows, &path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], SUMMARY_HEADER.join(","));
    assert_eq!(lines.len(), 4);
    assert!(lines[2].ends_with("NaN,NaN,NaN,false"));
    assert!(lines[1].ends_with("true"));
}
