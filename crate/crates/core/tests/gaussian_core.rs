use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use squeezegate::gaussian::{
    db_to_variance, homodyne_measure, variance_to_db, GaussianState, SymplecticTransform,
};
use squeezegate::rng::shot_rng;
use squeezegate::Error;

/// Conditioning through the joint precision matrix: rotate the measured
/// mode so the read quadrature is its x, then
/// `Σ_k|q = (Λ_kk)⁻¹` and `μ_k|q = μ_k - (Λ_kk)⁻¹ Λ_kq (q - μ_q)`.
fn precision_oracle(
    state: &GaussianState,
    mode: usize,
    angle: f64,
    value: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = state.n_modes();
    let rot = SymplecticTransform::rotation(-angle)
        .unwrap()
        .embed(&[mode], n)
        .unwrap();
    let rotated = state.apply(&rot).unwrap();
    let mut order: Vec<usize> = (0..n)
        .filter(|&m| m != mode)
        .flat_map(|m| [2 * m, 2 * m + 1])
        .collect();
    let k = order.len();
    order.push(2 * mode);
    let joint = DMatrix::from_fn(k + 1, k + 1, |i, j| rotated.cov()[(order[i], order[j])]);
    let mu = DVector::from_fn(k + 1, |i, _| rotated.mean()[order[i]]);
    let lambda = joint.try_inverse().unwrap();
    let lkk = lambda.view((0, 0), (k, k)).into_owned();
    let lkq = lambda.view((0, k), (k, 1)).into_owned();
    let cov = lkk.clone().try_inverse().unwrap();
    let mean = mu.rows(0, k) - &cov * lkq * (value - mu[k]);
    (mean, cov)
}

fn random_state(seed: u64, n_modes: usize) -> GaussianState {
    GaussianState::random_mixed(n_modes, &mut shot_rng(seed, 99, n_modes as u64)).unwrap()
}

fn random_symplectic(seed: u64, n_modes: usize) -> SymplecticTransform {
    use rand::Rng;
    let mut rng = shot_rng(seed, 7, 0);
    let mut t = SymplecticTransform::identity(n_modes).unwrap();
    for _ in 0..3 {
        for m in 0..n_modes {
            let local = SymplecticTransform::rotation(rng.random_range(-PI..PI))
                .unwrap()
                .then(&SymplecticTransform::squeeze(rng.random_range(-1.0..1.0)).unwrap())
                .unwrap()
                .then(&SymplecticTransform::shear(rng.random_range(-2.0..2.0)).unwrap())
                .unwrap();
            t = t.then(&local.embed(&[m], n_modes).unwrap()).unwrap();
        }
        for m in 0..n_modes - 1 {
            let bs = SymplecticTransform::beamsplitter(rng.random_range(0.0..1.0)).unwrap();
            t = t.then(&bs.embed(&[m, m + 1], n_modes).unwrap()).unwrap();
        }
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symplectic_eigenvalues_are_invariant(seed in any::<u64>(), n in 1usize..4) {
        let s = random_state(seed, n);
        let t = random_symplectic(seed, n);
        let out = s.apply(&t).unwrap();
        let (a, b) = (s.symplectic_eigenvalues(), out.symplectic_eigenvalues());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8 * x.max(1.0), "{a:?} vs {b:?}");
        }
        prop_assert!(out.check_physical().is_ok());
    }

    #[test]
    fn rotation_shifts_quadrature_angle(seed in any::<u64>(), theta in -PI..PI, alpha in -PI..PI) {
        let s = random_state(seed, 1);
        let r = s.apply(&SymplecticTransform::rotation(theta).unwrap()).unwrap();
        let lhs = r.quadrature_variance(0, alpha).unwrap();
        let rhs = s.quadrature_variance(0, alpha - theta).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10 * lhs.max(1.0));
        let lm = r.quadrature_mean(0, alpha).unwrap();
        let rm = s.quadrature_mean(0, alpha - theta).unwrap();
        prop_assert!((lm - rm).abs() < 1e-10 * lm.abs().max(1.0));
    }

    #[test]
    fn inverse_undoes_transform(seed in any::<u64>(), n in 1usize..4) {
        let t = random_symplectic(seed, n);
        let id = t.then(&t.inverse()).unwrap();
        let err = (id.matrix() - DMatrix::<f64>::identity(2 * n, 2 * n)).amax();
        prop_assert!(err < 1e-9);
    }

    #[test]
    fn db_round_trip(db in -20.0f64..20.0) {
        let back = variance_to_db(db_to_variance(db).unwrap()).unwrap();
        prop_assert!((back - db).abs() < 1e-12);
    }
}

#[test]
fn conditioning_matches_precision_oracle() {
    let mut checked = 0;
    for seed in 0..100u64 {
        let n = 2 + (seed % 3) as usize;
        let s = random_state(seed, n);
        let mode = (seed as usize) % n;
        let angle = (seed as f64 * 0.37) % PI;
        let value = s.quadrature_mean(mode, angle).unwrap() + 0.8 * ((seed % 5) as f64 - 2.0);
        let got = s.condition_on(mode, angle, value).unwrap();
        let (mean, cov) = precision_oracle(&s, mode, angle, value);
        assert!((got.cov() - &cov).amax() < 1e-9, "seed {seed}");
        assert!((got.mean() - &mean).amax() < 1e-9, "seed {seed}");
        got.check_physical().unwrap();
        checked += 1;
    }
    assert_eq!(checked, 100);
}

#[test]
fn law_of_total_covariance_from_shots() {
    let s = random_state(5, 2);
    let shots = 10_000;
    let mut means = Vec::with_capacity(shots);
    let mut conditional = None;
    for i in 0..shots {
        let (_, rest) = homodyne_measure(&s, 0, 0.9, &mut shot_rng(17, 0, i as u64)).unwrap();
        means.push(rest.mean().clone());
        conditional.get_or_insert(rest.cov().clone());
    }
    let n = shots as f64;
    let avg = means.iter().fold(DVector::zeros(2), |a, m| a + m) / n;
    let spread = means
        .iter()
        .fold(DMatrix::zeros(2, 2), |a, m| a + (m - &avg) * (m - &avg).transpose())
        / (n - 1.0);
    let total = conditional.unwrap() + spread;
    let kept = s.mode(1).unwrap();
    let scale = kept.cov().amax();
    // sampling error of a covariance entry at 10⁴ shots is about 1.4 %
    assert!((total - kept.cov()).amax() < 0.06 * scale);
    assert!((avg - kept.mean()).amax() < 0.05 * scale.sqrt());
}

#[test]
fn epr_conditioning_beats_shot_noise() {
    let pair = GaussianState::squeezed_vacuum(0.05)
        .unwrap()
        .tensor(&GaussianState::squeezed_vacuum(5.0).unwrap())
        .apply(&SymplecticTransform::beamsplitter(0.5).unwrap())
        .unwrap();
    assert!(pair.mode(1).unwrap().cov()[(0, 0)] > 0.5);
    let (_, rest) = homodyne_measure(&pair, 0, 0.0, &mut shot_rng(1, 0, 0)).unwrap();
    assert!(rest.cov()[(0, 0)] < 0.5);
    rest.check_physical().unwrap();
}

#[test]
fn vacuum_homodyne_statistics() {
    let v = GaussianState::vacuum(1).unwrap();
    let n = 100_000;
    let xs: Vec<f64> = (0..n)
        .map(|i| homodyne_measure(&v, 0, 0.0, &mut shot_rng(2, 0, i)).unwrap().0.value)
        .collect();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    assert!(mean.abs() < 4.0 * (0.5 / nf).sqrt());
    assert!((var - 0.5).abs() < 4.0 * 0.5 * (2.0 / (nf - 1.0)).sqrt());
}

#[test]
fn rejects_unphysical_and_malformed_covariances() {
    let sub = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.1, 0.1]));
    assert!(matches!(
        GaussianState::new(DVector::zeros(2), sub),
        Err(Error::Unphysical(_))
    ));
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
    assert!(matches!(
        GaussianState::new(DVector::zeros(2), asym),
        Err(Error::NotSymmetric(_))
    ));
    assert!(GaussianState::new(DVector::zeros(3), DMatrix::identity(3, 3)).is_err());
    assert!(GaussianState::new(DVector::from_row_slice(&[f64::NAN, 0.0]), DMatrix::identity(2, 2)).is_err());
    assert!(matches!(GaussianState::squeezed_vacuum(0.0), Err(Error::InvalidVariance(_))));
    assert!(GaussianState::vacuum(1).unwrap().condition_on(3, 0.0, 0.0).is_err());
}

#[test]
fn standard_normal_draws_feed_homodyne() {
    // the sampler consumes exactly one standard normal per measurement
    let s = GaussianState::coherent(1.0, -1.0).unwrap();
    let mut a = shot_rng(8, 1, 2);
    let mut b = shot_rng(8, 1, 2);
    let (out, _) = homodyne_measure(&s, 0, PI / 2.0, &mut a).unwrap();
    let z: f64 = StandardNormal.sample(&mut b);
    assert!((out.value - (-1.0 + 0.5f64.sqrt() * z)).abs() < 1e-12);
}
