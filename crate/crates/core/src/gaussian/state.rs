use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Quadrature variance of the vacuum with hbar = 1. This is the 0 dB reference.
pub const SHOT_NOISE: f64 = 0.5;

/// Smallest variance accepted for any quadrature.
pub const MIN_VARIANCE: f64 = 1e-12;

pub(crate) const SYMMETRY_TOL: f64 = 1e-10;
pub(crate) const UNCERTAINTY_TOL: f64 = 1e-9;

/// Gaussian state of `n_modes` optical modes in the interleaved ordering
/// `(x1, p1, x2, p2, ...)`.
///
/// Construction validates symmetry of the covariance and the uncertainty
/// relation (every symplectic eigenvalue at least 1/2), so a value of this
/// type is always physical.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim + 1,
                found: dim,
            });
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: cov.nrows().max(cov.ncols()),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean"));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance"));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        // symmetrize so downstream products stay exactly symmetric
        let cov = (&cov + cov.transpose()) * 0.5;
        if let Some(bad) = (0..dim).map(|i| cov[(i, i)]).find(|&v| v < MIN_VARIANCE) {
            return Err(Error::InvalidVariance(bad));
        }
        let state = GaussianState { mean, cov };
        if dim > 0 {
            let nu_min = state
                .symplectic_eigenvalues()
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if nu_min < SHOT_NOISE - UNCERTAINTY_TOL {
                return Err(Error::Unphysical(nu_min));
            }
        }
        Ok(state)
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::NoModes);
        }
        let dim = 2 * n_modes;
        Ok(GaussianState {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * SHOT_NOISE,
        })
    }

    pub fn coherent(x_mean: f64, p_mean: f64) -> Result<Self> {
        if !x_mean.is_finite() || !p_mean.is_finite() {
            return Err(Error::NonFinite("coherent amplitude"));
        }
        let mut state = Self::vacuum(1)?;
        state.mean[0] = x_mean;
        state.mean[1] = p_mean;
        Ok(state)
    }

    /// Pure single-mode squeezed vacuum with x-variance `vx` and p-variance `1/(4 vx)`.
    pub fn squeezed_vacuum(vx: f64) -> Result<Self> {
        if !vx.is_finite() || vx < MIN_VARIANCE {
            return Err(Error::InvalidVariance(vx));
        }
        let vp = 0.25 / vx;
        if vp < MIN_VARIANCE {
            return Err(Error::InvalidVariance(vp));
        }
        Ok(GaussianState {
            mean: DVector::zeros(2),
            cov: DMatrix::from_row_slice(2, 2, &[vx, 0.0, 0.0, vp]),
        })
    }

    /// Thermal-like diagonal state with symplectic eigenvalues `nus`, used as the
    /// starting point for random mixed states.
    pub fn thermal(nus: &[f64]) -> Result<Self> {
        if nus.is_empty() {
            return Err(Error::NoModes);
        }
        let dim = 2 * nus.len();
        let mut cov = DMatrix::zeros(dim, dim);
        for (k, &nu) in nus.iter().enumerate() {
            cov[(2 * k, 2 * k)] = nu;
            cov[(2 * k + 1, 2 * k + 1)] = nu;
        }
        Self::new(DVector::zeros(dim), cov)
    }

    /// Random physical state: thermal occupation, then a random passive/active
    /// symplectic network, then a random displacement.
    pub fn random_mixed<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> Result<Self> {
        use super::symplectic::SymplecticTransform;
        let nus: Vec<f64> = (0..n_modes)
            .map(|_| SHOT_NOISE * (1.0 + rng.random::<f64>()))
            .collect();
        let mut state = Self::thermal(&nus)?;
        for _ in 0..2 {
            for m in 0..n_modes {
                let rot = SymplecticTransform::rotation(rng.random_range(0.0..std::f64::consts::PI))?;
                let sq = SymplecticTransform::squeeze(rng.random_range(-0.8..0.8))?;
                state = state.apply_on(&rot.then(&sq)?, &[m])?;
            }
            for m in 0..n_modes.saturating_sub(1) {
                let bs = SymplecticTransform::beamsplitter(rng.random_range(0.05..0.95))?;
                state = state.apply_on(&bs, &[m, m + 1])?;
            }
        }
        let d: Vec<f64> = (0..2 * n_modes)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        state.apply(&SymplecticTransform::displace(&d)?)
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::ModeIndex {
                index: mode,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    /// Tensor product `self ⊗ other`; `other`'s modes are appended.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    /// Reduced state of a single mode.
    pub fn mode(&self, mode: usize) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let i = 2 * mode;
        Ok(GaussianState {
            mean: self.mean.rows(i, 2).into_owned(),
            cov: self.cov.view((i, i), (2, 2)).into_owned(),
        })
    }

    /// Variance of the rotated quadrature `x cos(angle) + p sin(angle)` of `mode`.
    pub fn quadrature_variance(&self, mode: usize, angle: f64) -> Result<f64> {
        self.check_mode(mode)?;
        let (c, s) = (angle.cos(), angle.sin());
        let i = 2 * mode;
        let v = &self.cov;
        Ok(c * c * v[(i, i)] + s * s * v[(i + 1, i + 1)] + 2.0 * c * s * v[(i, i + 1)])
    }

    pub fn quadrature_mean(&self, mode: usize, angle: f64) -> Result<f64> {
        self.check_mode(mode)?;
        let i = 2 * mode;
        Ok(angle.cos() * self.mean[i] + angle.sin() * self.mean[i + 1])
    }

    /// Symplectic eigenvalues, ascending, one per mode.
    ///
    /// Computed as the moduli of the eigenvalues of `Ω·cov`, which come in
    /// conjugate pairs `±iν`.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let omega = symplectic_form(self.n_modes());
        let m = omega * &self.cov;
        let mut moduli: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        moduli.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect()
    }

    /// True when the state is pure to within `tol` relative on the determinant.
    pub fn is_pure(&self, tol: f64) -> bool {
        let target = SHOT_NOISE.powi(self.mean.len() as i32);
        ((self.cov.determinant() - target) / target).abs() <= tol
    }

    /// Re-runs the construction checks; every value of this type should pass.
    pub fn check_physical(&self) -> Result<()> {
        Self::new(self.mean.clone(), self.cov.clone()).map(|_| ())
    }
}

/// Standard symplectic form for the interleaved ordering: block-diagonal `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Variance relative to shot noise, in dB.
pub fn variance_to_db(v: f64) -> Result<f64> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::InvalidVariance(v));
    }
    Ok(10.0 * (v / SHOT_NOISE).log10())
}

pub fn db_to_variance(db: f64) -> Result<f64> {
    if !db.is_finite() {
        return Err(Error::NonFinite("dB value"));
    }
    Ok(SHOT_NOISE * 10f64.powf(db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_pure_and_isotropic() {
        let v = GaussianState::vacuum(2).unwrap();
        assert_eq!(v.cov(), &(DMatrix::identity(4, 4) * 0.5));
        for nu in v.symplectic_eigenvalues() {
            assert!((nu - 0.5).abs() < 1e-12);
        }
        assert!(v.is_pure(1e-9));
        assert!(matches!(GaussianState::vacuum(0), Err(Error::NoModes)));
    }

    #[test]
    fn coherent_rejects_nan() {
        assert!(GaussianState::coherent(f64::NAN, 0.0).is_err());
        let c = GaussianState::coherent(-1.5, 2.0).unwrap();
        assert_eq!(c.mean().as_slice(), &[-1.5, 2.0]);
        assert_eq!(c.cov(), GaussianState::vacuum(1).unwrap().cov());
    }

    #[test]
    fn squeezed_vacuum_products() {
        let s = GaussianState::squeezed_vacuum(0.125).unwrap();
        assert_eq!(s.cov()[(1, 1)], 2.0);
        assert!(s.is_pure(1e-9));
        let nu = s.symplectic_eigenvalues();
        assert_eq!(nu.len(), 1);
        assert!((nu[0] - 0.5).abs() < 1e-12);

        let vx = db_to_variance(-3.1).unwrap();
        let s = GaussianState::squeezed_vacuum(vx).unwrap();
        assert!((s.cov()[(0, 0)] - 0.244_889_409_684_223).abs() < 1e-12);
        assert!((s.cov()[(1, 1)] - 1.020_868_972_334_765).abs() < 1e-12);
        let s = GaussianState::squeezed_vacuum(0.24494).unwrap();
        assert!((s.cov()[(1, 1)] - 1.02065).abs() < 1e-5);

        assert!(GaussianState::squeezed_vacuum(0.0).is_err());
        assert!(GaussianState::squeezed_vacuum(-1.0).is_err());
        assert!(GaussianState::squeezed_vacuum(1e-13).is_err());
    }

    #[test]
    fn db_conversions() {
        assert_eq!(variance_to_db(0.5).unwrap(), 0.0);
        assert!((variance_to_db(1.0).unwrap() - 3.010_299_956_639_812).abs() < 1e-12);
        assert!((variance_to_db(0.24494).unwrap() + 3.1).abs() < 1e-3);
        assert!(variance_to_db(0.0).is_err());
        assert!(variance_to_db(-0.1).is_err());
        for d in [-10.0, -3.1, 0.0, 2.5, 7.0] {
            let back = variance_to_db(db_to_variance(d).unwrap()).unwrap();
            assert!((back - d).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unphysical_and_asymmetric() {
        let mean = DVector::zeros(2);
        let squeezed_too_much = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, 0.5]);
        assert!(matches!(
            GaussianState::new(mean.clone(), squeezed_too_much),
            Err(Error::Unphysical(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(
            GaussianState::new(mean.clone(), asym),
            Err(Error::NotSymmetric(_))
        ));
        let wrong = DMatrix::identity(4, 4);
        assert!(matches!(
            GaussianState::new(mean, wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quadrature_variance_bad_mode() {
        let v = GaussianState::vacuum(1).unwrap();
        assert!(matches!(
            v.quadrature_variance(1, 0.0),
            Err(Error::ModeIndex { index: 1, n_modes: 1 })
        ));
        for a in [0.0, 0.3, 1.0, 2.0] {
            assert!((v.quadrature_variance(0, a).unwrap() - 0.5).abs() < 1e-15);
        }
    }
}
