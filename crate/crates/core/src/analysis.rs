//! Output variance matrices from three homodyne angles, and their
//! diagonalization into squeezing/antisqueezing variances and an angle.
//!
//! With variances measured at LO angles 0, π/2 and π/4,
//! `σxp = σ²(π/4) - (σx² + σp²)/2` completes the 2×2 matrix. Its eigenvalues
//! are `σ±² = (σx² + σp²)/2 ± √(((σx² - σp²)/2)² + σxp²)` and the angle is
//! `φ = ½ atan2(2σxp, σp² - σx²)`, so that the variance along `-φ` is `σ-²`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{same_grid, LoAngle, MomentEstimate, TheoryBin};
use crate::gaussian::{variance_to_db, GaussianState};

/// `[[σx², σxp], [σxp, σp²]]`.
pub type Matrix2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub matrix: Matrix2,
    pub sigma_xp: f64,
    /// False when sampling noise made the matrix indefinite.
    pub positive_definite: bool,
}

pub fn reconstruct_variance_matrix(
    sigma_x2: f64,
    sigma_p2: f64,
    sigma_pi4_2: f64,
) -> Result<Reconstruction> {
    for v in [sigma_x2, sigma_p2, sigma_pi4_2] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidVariance(v));
        }
    }
    let sigma_xp = sigma_pi4_2 - 0.5 * (sigma_x2 + sigma_p2);
    let matrix = [[sigma_x2, sigma_xp], [sigma_xp, sigma_p2]];
    Ok(Reconstruction {
        matrix,
        sigma_xp,
        positive_definite: sigma_x2 * sigma_p2 - sigma_xp * sigma_xp > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagonal {
    pub sigma_plus2: f64,
    pub sigma_minus2: f64,
    /// In `(-π/2, π/2]`; 0 for an isotropic matrix.
    pub phi: f64,
}

impl Diagonal {
    /// Direction of least variance, `-φ`.
    pub fn squeezed_axis_angle(&self) -> f64 {
        -self.phi
    }
}

pub fn diagonalize(v: &Matrix2) -> Result<Diagonal> {
    let (a, b) = (v[0][0], v[1][1]);
    let c = v[0][1];
    if [a, b, c, v[1][0]].iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("variance matrix"));
    }
    if (c - v[1][0]).abs() > 1e-12 * (1.0 + c.abs()) {
        return Err(Error::NotSymmetric((c - v[1][0]).abs()));
    }
    if !(a > 0.0 && a * b - c * c > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let half_sum = 0.5 * (a + b);
    let radius = (0.5 * (a - b)).hypot(c);
    Ok(Diagonal {
        sigma_plus2: half_sum + radius,
        sigma_minus2: half_sum - radius,
        phi: 0.5 * (2.0 * c).atan2(b - a),
    })
}

/// `uᵀ V u` with `u = (cos α, sin α)`.
pub fn variance_along(v: &Matrix2, angle: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    c * c * v[0][0] + 2.0 * c * s * v[0][1] + s * s * v[1][1]
}

/// Covariance of a single-mode state as a [`Matrix2`].
pub fn matrix_of(state: &GaussianState) -> Result<Matrix2> {
    if state.n_modes() != 1 {
        return Err(Error::MultimodeInput(state.n_modes()));
    }
    let c = state.cov();
    Ok([[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceSummary {
    pub bin_index: usize,
    pub time_us: f64,
    pub kappa: f64,
    pub sigma_x2: f64,
    pub sigma_p2: f64,
    pub sigma_pi4_2: f64,
    pub sigma_xp: f64,
    /// `None` for bins whose reconstruction is not positive definite.
    pub diagonal: Option<Diagonal>,
}

impl VarianceSummary {
    pub fn valid(&self) -> bool {
        self.diagonal.is_some()
    }

    pub fn sigma_plus2_db(&self) -> Option<f64> {
        self.diagonal.and_then(|d| variance_to_db(d.sigma_plus2).ok())
    }

    pub fn sigma_minus2_db(&self) -> Option<f64> {
        self.diagonal.and_then(|d| variance_to_db(d.sigma_minus2).ok())
    }

    pub fn phi(&self) -> Option<f64> {
        self.diagonal.map(|d| d.phi)
    }

    pub fn squeezed_axis_angle(&self) -> Option<f64> {
        self.diagonal.map(|d| d.squeezed_axis_angle())
    }
}

/// Differences measured minus theory for one bin, in dB and radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub bin_index: usize,
    pub sigma_plus2_db: f64,
    pub sigma_minus2_db: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<VarianceSummary>,
    /// Present when a theory trace was supplied; invalid bins are skipped.
    pub residuals: Option<Vec<Residual>>,
}

impl Summary {
    pub fn n_invalid(&self) -> usize {
        self.rows.iter().filter(|r| !r.valid()).count()
    }
}

fn summarize_bin(
    bin_index: usize,
    time_us: f64,
    kappa: f64,
    vars: [f64; 3],
) -> Result<VarianceSummary> {
    let rec = reconstruct_variance_matrix(vars[0], vars[1], vars[2])?;
    let diagonal = if rec.positive_definite {
        Some(diagonalize(&rec.matrix)?)
    } else {
        None
    };
    Ok(VarianceSummary {
        bin_index,
        time_us,
        kappa,
        sigma_x2: vars[0],
        sigma_p2: vars[1],
        sigma_pi4_2: vars[2],
        sigma_xp: rec.sigma_xp,
        diagonal,
    })
}

/// Per-bin reconstruction, with residuals against `theory` when given.
pub fn summarize(moments: &MomentEstimate, theory: Option<&[TheoryBin]>) -> Result<Summary> {
    let n = moments.n_bins();
    if moments.kappa.len() != n || moments.traces.iter().any(|t| t.bins.len() != n) {
        return Err(Error::GridMismatch("moment traces differ in length".into()));
    }
    let var = |angle: LoAngle, i: usize| moments.trace(angle).bins[i].variance;
    let rows = (0..n)
        .map(|i| {
            summarize_bin(
                i,
                moments.time_us[i],
                moments.kappa[i],
                [var(LoAngle::X, i), var(LoAngle::P, i), var(LoAngle::Diagonal, i)],
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let residuals = match theory {
        None => None,
        Some(th) => {
            let t_time: Vec<f64> = th.iter().map(|t| t.time_us).collect();
            let t_kappa: Vec<f64> = th.iter().map(|t| t.kappa).collect();
            if !same_grid(&t_time, &moments.time_us) || !same_grid(&t_kappa, &moments.kappa) {
                return Err(Error::GridMismatch(
                    "theory and measured traces use different bins".into(),
                ));
            }
            let theory_rows = theory_summary(th)?;
            Some(
                rows.iter()
                    .zip(&theory_rows)
                    .filter_map(|(m, t)| {
                        let (md, td) = (m.diagonal?, t.diagonal?);
                        Some(Residual {
                            bin_index: m.bin_index,
                            sigma_plus2_db: m.sigma_plus2_db()? - t.sigma_plus2_db()?,
                            sigma_minus2_db: m.sigma_minus2_db()? - t.sigma_minus2_db()?,
                            phi: md.phi - td.phi,
                        })
                    })
                    .collect(),
            )
        }
    };
    Ok(Summary { rows, residuals })
}

/// Summary rows computed directly from closed-form predictions.
pub fn theory_summary(theory: &[TheoryBin]) -> Result<Vec<VarianceSummary>> {
    theory
        .iter()
        .enumerate()
        .map(|(i, t)| {
            summarize_bin(
                i,
                t.time_us,
                t.kappa,
                [
                    t.variance_at(LoAngle::X),
                    t.variance_at(LoAngle::P),
                    t.variance_at(LoAngle::Diagonal),
                ],
            )
        })
        .collect()
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "bin_index", "time_us", "kappa", "sigma_x2", "sigma_p2", "sigma_pi4_2", "sigma_xp",
    "sigma_plus2_db", "sigma_minus2_db", "phi_rad", "valid",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

pub fn write_summary_csv(rows: &[VarianceSummary], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.bin_index.to_string(),
            r.time_us.to_string(),
            r.kappa.to_string(),
            r.sigma_x2.to_string(),
            r.sigma_p2.to_string(),
            r.sigma_pi4_2.to_string(),
            r.sigma_xp.to_string(),
            opt(r.sigma_plus2_db()),
            opt(r.sigma_minus2_db()),
            opt(r.phi()),
            r.valid().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_residuals_csv(residuals: &[Residual], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_index", "d_sigma_plus2_db", "d_sigma_minus2_db", "d_phi_rad"])?;
    for r in residuals {
        w.write_record([
            r.bin_index.to_string(),
            r.sigma_plus2_db.to_string(),
            r.sigma_minus2_db.to_string(),
            r.phi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn vacuum_reconstruction() {
        let r = reconstruct_variance_matrix(0.5, 0.5, 0.5).unwrap();
        assert_eq!(r.sigma_xp, 0.0);
        assert!(r.positive_definite);
        let d = diagonalize(&r.matrix).unwrap();
        assert_eq!((d.sigma_plus2, d.sigma_minus2, d.phi), (0.5, 0.5, 0.0));
    }

    #[test]
    fn reconstruction_examples() {
        let r = reconstruct_variance_matrix(0.37247, 2.48988, 1.68624).unwrap();
        assert!((r.sigma_xp - 0.255065).abs() < 1e-12);
        let r = reconstruct_variance_matrix(0.37247, 1.0, 0.68624).unwrap();
        assert!((r.sigma_xp - 0.000005).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_variances() {
        assert!(matches!(
            reconstruct_variance_matrix(0.0, 1.0, 1.0),
            Err(Error::InvalidVariance(_))
        ));
        assert!(reconstruct_variance_matrix(1.0, -1.0, 1.0).is_err());
        let r = reconstruct_variance_matrix(1.0, 1.0, 3.0).unwrap();
        assert!(!r.positive_definite);
        assert!(matches!(diagonalize(&r.matrix), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn diagonalize_kappa_two_output() {
        let v = [[0.37247, 0.25506], [0.25506, 2.48988]];
        let d = diagonalize(&v).unwrap();
        // symmetric eigensolver oracle
        assert!((d.sigma_plus2 - 2.520_170_81).abs() < 1e-8);
        assert!((d.sigma_minus2 - 0.342_179_19).abs() < 1e-8);
        assert!((d.phi - 0.118_205_914).abs() < 1e-8);
        assert!((variance_along(&v, -d.phi) - d.sigma_minus2).abs() < 1e-12);
        assert!((variance_along(&v, FRAC_PI_2 - d.phi) - d.sigma_plus2).abs() < 1e-12);
    }

    #[test]
    fn ideal_shear_vacuum_eigenvalues() {
        let d = diagonalize(&[[0.5, 1.0], [1.0, 2.5]]).unwrap();
        let r2 = 2f64.sqrt();
        assert!((d.sigma_plus2 - (3.0 + 2.0 * r2) / 2.0).abs() < 1e-12);
        assert!((d.sigma_minus2 - (3.0 - 2.0 * r2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn x_dominant_matrix_keeps_quadratic_form_property() {
        // σx² > σp²: φ leaves (-π/4, π/4] but -φ still points along σ-²
        let v = [[2.0, 0.3], [0.3, 0.5]];
        let d = diagonalize(&v).unwrap();
        assert!(d.phi.abs() > std::f64::consts::FRAC_PI_4);
        assert!((variance_along(&v, -d.phi) - d.sigma_minus2).abs() < 1e-12);
    }
}
