use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::state::{GaussianState, MIN_VARIANCE, SHOT_NOISE};
use crate::error::{Error, Result};

/// One homodyne sample. `angle` is the local-oscillator phase reduced to
/// `[0, π)`: 0 measures x, π/2 measures p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneOutcome {
    pub value: f64,
    pub angle: f64,
    pub mode_index: usize,
}

impl HomodyneOutcome {
    /// Outcome re-expressed for an unreduced angle. Quadratures at `a` and
    /// `a + π` differ only by sign.
    pub fn value_at(&self, angle: f64) -> f64 {
        let (_, sign) = reduce_angle(angle);
        sign * self.value
    }
}

/// Reduce `angle` into `[0, π)`. The returned sign is -1 when an odd
/// multiple of π was removed, so that `q(angle) = sign * q(reduced)`.
pub fn reduce_angle(angle: f64) -> (f64, f64) {
    let turns = (angle / PI).floor();
    let mut reduced = angle - turns * PI;
    let mut odd = (turns as i64).rem_euclid(2) == 1;
    if reduced >= PI {
        reduced -= PI;
        odd = !odd;
    }
    if reduced < 0.0 {
        reduced = 0.0;
    }
    (reduced, if odd { -1.0 } else { 1.0 })
}

fn measurement_vector(n_dim: usize, mode: usize, angle: f64) -> DVector<f64> {
    let mut u = DVector::zeros(n_dim);
    u[2 * mode] = angle.cos();
    u[2 * mode + 1] = angle.sin();
    u
}

fn kept_indices(n_modes: usize, mode: usize) -> Vec<usize> {
    (0..n_modes)
        .filter(|&m| m != mode)
        .flat_map(|m| [2 * m, 2 * m + 1])
        .collect()
}

impl GaussianState {
    /// Mean and variance of the rotated quadrature of `mode`.
    pub fn quadrature_marginal(&self, mode: usize, angle: f64) -> Result<(f64, f64)> {
        Ok((
            self.quadrature_mean(mode, angle)?,
            self.quadrature_variance(mode, angle)?,
        ))
    }

    /// State of the remaining modes given that the quadrature of `mode` at
    /// `angle` read `value`. The measured mode is removed.
    pub fn condition_on(&self, mode: usize, angle: f64, value: f64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        if !value.is_finite() {
            return Err(Error::NonFinite("homodyne value"));
        }
        let dim = self.mean().len();
        let u = measurement_vector(dim, mode, angle);
        let var = (u.transpose() * self.cov() * &u)[(0, 0)];
        if var < MIN_VARIANCE {
            return Err(Error::InvalidVariance(var));
        }
        let mu = u.dot(self.mean());
        let keep = kept_indices(self.n_modes(), mode);
        let cross = self.cov() * &u;
        let n = keep.len();
        let mut mean = DVector::zeros(n);
        let mut cov = DMatrix::zeros(n, n);
        for (a, &ia) in keep.iter().enumerate() {
            mean[a] = self.mean()[ia] + cross[ia] * (value - mu) / var;
            for (b, &ib) in keep.iter().enumerate() {
                cov[(a, b)] = self.cov()[(ia, ib)] - cross[ia] * cross[ib] / var;
            }
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        GaussianState::new(mean, cov)
    }

    /// Pure-loss channel with transmissivity `eta` on one mode.
    pub fn pure_loss(&self, mode: usize, eta: f64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Efficiency(eta));
        }
        let dim = self.mean().len();
        let mut scale = DVector::from_element(dim, 1.0);
        scale[2 * mode] = eta.sqrt();
        scale[2 * mode + 1] = eta.sqrt();
        let mean = self.mean().component_mul(&scale);
        let mut cov = self.cov().clone();
        for i in 0..dim {
            for j in 0..dim {
                cov[(i, j)] *= scale[i] * scale[j];
            }
        }
        cov[(2 * mode, 2 * mode)] += (1.0 - eta) * SHOT_NOISE;
        cov[(2 * mode + 1, 2 * mode + 1)] += (1.0 - eta) * SHOT_NOISE;
        GaussianState::new(mean, cov)
    }
}

/// Sample a homodyne measurement of `mode` at `angle` and return the outcome
/// together with the conditional state of the other modes.
///
/// The conditional covariance is the Schur complement and does not depend on
/// the sampled value.
pub fn homodyne_measure<R: Rng + ?Sized>(
    state: &GaussianState,
    mode: usize,
    angle: f64,
    rng: &mut R,
) -> Result<(HomodyneOutcome, GaussianState)> {
    state.check_mode(mode)?;
    if !angle.is_finite() {
        return Err(Error::NonFinite("homodyne angle"));
    }
    let (reduced, _) = reduce_angle(angle);
    let (mu, var) = state.quadrature_marginal(mode, reduced)?;
    let z: f64 = StandardNormal.sample(rng);
    let value = mu + var.sqrt() * z;
    let conditional = state.condition_on(mode, reduced, value)?;
    Ok((
        HomodyneOutcome {
            value,
            angle: reduced,
            mode_index: mode,
        },
        conditional,
    ))
}
