use nalgebra::{DMatrix, DVector};

use super::state::{symplectic_form, GaussianState};
use crate::error::{Error, Result};

const SYMPLECTIC_TOL: f64 = 1e-10;

/// Affine phase-space map `r -> S r + d` with `S Ω Sᵀ = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

impl SymplecticTransform {
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || dim % 2 != 0 || dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.ncols(),
            });
        }
        if displacement.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: displacement.len(),
            });
        }
        if matrix.iter().chain(displacement.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("transform"));
        }
        let omega = symplectic_form(dim / 2);
        let dev = (&matrix * &omega * matrix.transpose() - &omega).amax();
        // tolerance scales with the entry magnitude of S·Sᵀ
        let scale = 1.0 + matrix.amax().powi(2);
        if dev > SYMPLECTIC_TOL * scale {
            return Err(Error::NotSymplectic(dev));
        }
        Ok(SymplecticTransform {
            matrix,
            displacement,
        })
    }

    fn linear(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, DVector::zeros(n))
    }

    pub fn identity(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::NoModes);
        }
        Self::linear(DMatrix::identity(2 * n_modes, 2 * n_modes))
    }

    /// Phase rotation: `x -> x cos θ - p sin θ`, `p -> x sin θ + p cos θ`.
    pub fn rotation(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NonFinite("rotation angle"));
        }
        let (s, c) = theta.sin_cos();
        Self::linear(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// Single-mode squeezer: `x -> e^{-r} x`, `p -> e^{r} p`.
    pub fn squeeze(r: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::NonFinite("squeeze parameter"));
        }
        Self::linear(DMatrix::from_row_slice(
            2,
            2,
            &[(-r).exp(), 0.0, 0.0, r.exp()],
        ))
    }

    /// Two-mode beamsplitter with power transmittance `t`:
    /// `a1' = √t a1 + √(1-t) a2`, `a2' = √(1-t) a1 - √t a2` for both quadratures.
    /// At `t = 1/2` this is the balanced coupler `(a1 ± a2)/√2`.
    pub fn beamsplitter(transmittance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::Transmittance(transmittance));
        }
        let t = transmittance.sqrt();
        let r = (1.0 - transmittance).sqrt();
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            t,   0.0, r,   0.0,
            0.0, t,   0.0, r,
            r,   0.0, -t,  0.0,
            0.0, r,   0.0, -t,
        ]);
        Self::linear(m)
    }

    pub fn displace(vector: &[f64]) -> Result<Self> {
        let dim = vector.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim + 1,
                found: dim,
            });
        }
        Self::new(DMatrix::identity(dim, dim), DVector::from_row_slice(vector))
    }

    /// Quadratic phase gate generated by `κ x²`: `x -> x`, `p -> p + κ x`.
    pub fn shear(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::NonFinite("shear strength"));
        }
        Self::linear(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, kappa, 1.0]))
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SymplecticTransform) -> Result<Self> {
        if next.matrix.nrows() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: next.matrix.nrows(),
            });
        }
        Ok(SymplecticTransform {
            matrix: &next.matrix * &self.matrix,
            displacement: &next.matrix * &self.displacement + &next.displacement,
        })
    }

    pub fn inverse(&self) -> Self {
        // S⁻¹ = -Ω Sᵀ Ω for symplectic S
        let omega = symplectic_form(self.n_modes());
        let inv = -(&omega * self.matrix.transpose() * &omega);
        let displacement = -(&inv * &self.displacement);
        SymplecticTransform {
            matrix: inv,
            displacement,
        }
    }

    /// Lift a transform acting on `modes` (in order) into an `n_modes` system.
    pub fn embed(&self, modes: &[usize], n_modes: usize) -> Result<Self> {
        if modes.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: modes.len(),
            });
        }
        let mut index = Vec::with_capacity(2 * modes.len());
        for &m in modes {
            if m >= n_modes {
                return Err(Error::ModeIndex { index: m, n_modes });
            }
            if index.contains(&(2 * m)) {
                return Err(Error::ModeIndex { index: m, n_modes });
            }
            index.push(2 * m);
            index.push(2 * m + 1);
        }
        let dim = 2 * n_modes;
        let mut matrix = DMatrix::identity(dim, dim);
        let mut displacement = DVector::zeros(dim);
        for (a, &ia) in index.iter().enumerate() {
            displacement[ia] = self.displacement[a];
            for (b, &ib) in index.iter().enumerate() {
                matrix[(ia, ib)] = self.matrix[(a, b)];
            }
        }
        Ok(SymplecticTransform {
            matrix,
            displacement,
        })
    }
}

impl GaussianState {
    /// `mean' = S mean + d`, `cov' = S cov Sᵀ`.
    pub fn apply(&self, t: &SymplecticTransform) -> Result<GaussianState> {
        if t.matrix.nrows() != self.mean().len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean().len(),
                found: t.matrix.nrows(),
            });
        }
        let mean = &t.matrix * self.mean() + &t.displacement;
        let cov = &t.matrix * self.cov() * t.matrix.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        GaussianState::new(mean, cov)
    }

    /// Apply a local transform to the listed modes.
    pub fn apply_on(&self, t: &SymplecticTransform, modes: &[usize]) -> Result<GaussianState> {
        self.apply(&t.embed(modes, self.n_modes())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn shear_zero_is_identity() {
        assert_eq!(
            SymplecticTransform::shear(0.0).unwrap(),
            SymplecticTransform::identity(1).unwrap()
        );
    }

    #[test]
    fn quarter_rotation_maps_x_to_p() {
        let s = GaussianState::coherent(1.0, 0.0).unwrap();
        let out = s.apply(&SymplecticTransform::rotation(FRAC_PI_2).unwrap()).unwrap();
        assert!((out.mean()[0]).abs() < 1e-15);
        assert!((out.mean()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shear_two_on_vacuum() {
        let v = GaussianState::vacuum(1).unwrap();
        let out = v.apply(&SymplecticTransform::shear(2.0).unwrap()).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 2.5]);
        assert!((out.cov() - expect).amax() < 1e-15);
        assert!((out.quadrature_variance(0, PI / 4.0).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        let v = GaussianState::vacuum(1).unwrap();
        let out = v.apply(&SymplecticTransform::displace(&[0.7, -2.0]).unwrap()).unwrap();
        assert_eq!(out, GaussianState::coherent(0.7, -2.0).unwrap());
    }

    #[test]
    fn squeeze_inverse_round_trip() {
        let s = GaussianState::coherent(0.3, 1.1).unwrap();
        let sq = SymplecticTransform::squeeze(0.9)
            .unwrap()
            .then(&SymplecticTransform::displace(&[1.0, 2.0]).unwrap())
            .unwrap();
        let back = s.apply(&sq).unwrap().apply(&sq.inverse()).unwrap();
        assert!((back.mean() - s.mean()).amax() < 1e-10);
        assert!((back.cov() - s.cov()).amax() < 1e-10);
    }

    #[test]
    fn balanced_beamsplitter_convention() {
        let bs = SymplecticTransform::beamsplitter(0.5).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((bs.matrix()[(0, 0)] - h).abs() < 1e-15);
        assert!((bs.matrix()[(0, 2)] - h).abs() < 1e-15);
        assert!((bs.matrix()[(2, 0)] - h).abs() < 1e-15);
        assert!((bs.matrix()[(2, 2)] + h).abs() < 1e-15);
        assert!(matches!(
            SymplecticTransform::beamsplitter(1.2),
            Err(Error::Transmittance(_))
        ));
        assert!(SymplecticTransform::beamsplitter(-0.1).is_err());
    }

    #[test]
    fn rejects_non_symplectic() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        assert!(matches!(
            SymplecticTransform::new(m, DVector::zeros(2)),
            Err(Error::NotSymplectic(_))
        ));
    }

    #[test]
    fn apply_dimension_mismatch() {
        let v = GaussianState::vacuum(2).unwrap();
        assert!(matches!(
            v.apply(&SymplecticTransform::shear(1.0).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(v.apply_on(&SymplecticTransform::shear(1.0).unwrap(), &[2]).is_err());
    }
}
