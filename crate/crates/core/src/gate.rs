//! The measurement-induced dynamic squeezing gate.
//!
//! The input mode is mixed with an x-squeezed ancilla on a balanced
//! beamsplitter. One output port is measured by homodyne detection at the
//! local-oscillator phase `θ = arctan κ`, i.e. the quadrature
//! `p_θ = p cos θ + x sin θ`, and the outcome drives a p-displacement of the
//! other port with gain `√(1 + κ²)`. Averaged over outcomes the kept mode
//! obeys
//!
//! ```text
//! x = (x_in - x_S) / √2
//! p = √2 (p_in + κ x_in / 2) + κ x_S / √2
//! ```
//!
//! which is the shear `p -> p + κ x` up to a fixed 3 dB x-squeezing, with
//! residual ancilla noise `x_S`.
//!
//! Two routes to the output are provided: [`closed_form_output`] propagates
//! the moments through the relations above, and [`PreparedGate`] /
//! [`simulate_gate_shot`] build the two-mode state and run the measurement
//! and feed-forward explicitly.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::electronics::ControlLaw;
use crate::error::{Error, Result};
use crate::gaussian::{
    homodyne_measure, reduce_angle, GaussianState, HomodyneOutcome, SymplecticTransform,
};

/// Port of the balanced beamsplitter sent to the feed-forward detector.
const MEASURED_MODE: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Discrete phase conventions of the optical setup that the moments alone
/// cannot fix: which beamsplitter port carries `+x_S`, the sense of the LO
/// phase, and the sign of the feed-forward displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Conventions {
    pub beamsplitter: Sign,
    pub lo_phase: Sign,
    pub feedforward: Sign,
}

impl Conventions {
    /// The combination singled out by [`calibrate_signs`].
    pub const SHIPPED: Conventions = Conventions {
        beamsplitter: Sign::Plus,
        lo_phase: Sign::Plus,
        feedforward: Sign::Plus,
    };

    pub fn all() -> impl Iterator<Item = Conventions> {
        let signs = [Sign::Plus, Sign::Minus];
        signs.into_iter().flat_map(move |b| {
            signs.into_iter().flat_map(move |l| {
                signs.into_iter().map(move |f| Conventions {
                    beamsplitter: b,
                    lo_phase: l,
                    feedforward: f,
                })
            })
        })
    }
}

impl Default for Conventions {
    fn default() -> Self {
        Self::SHIPPED
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    /// Control value κ.
    pub kappa: f64,
    /// x-variance of the squeezed ancilla.
    pub ancilla_vx: f64,
    /// Replaces the ideal gain `√(1 + κ²)`; `Some(0.0)` disables feed-forward.
    pub feedforward_gain_override: Option<f64>,
    /// Replaces the ideal LO phase `arctan κ`.
    pub lo_phase_override: Option<f64>,
    /// Efficiency of the feed-forward detector, modeled as pure loss before it.
    pub hd1_efficiency: f64,
    pub conventions: Conventions,
}

impl GateParams {
    pub fn new(kappa: f64, ancilla_vx: f64) -> Result<Self> {
        let params = GateParams {
            kappa,
            ancilla_vx,
            feedforward_gain_override: None,
            lo_phase_override: None,
            hd1_efficiency: 1.0,
            conventions: Conventions::SHIPPED,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kappa.is_finite() {
            return Err(Error::NonFinite("kappa"));
        }
        if !self.ancilla_vx.is_finite() || self.ancilla_vx < crate::gaussian::MIN_VARIANCE {
            return Err(Error::InvalidVariance(self.ancilla_vx));
        }
        if self.feedforward_gain_override.is_some_and(|g| !g.is_finite()) {
            return Err(Error::NonFinite("feed-forward gain"));
        }
        if self.lo_phase_override.is_some_and(|t| !t.is_finite()) {
            return Err(Error::NonFinite("LO phase"));
        }
        if !(self.hd1_efficiency > 0.0 && self.hd1_efficiency <= 1.0) {
            return Err(Error::Efficiency(self.hd1_efficiency));
        }
        Ok(())
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.feedforward_gain_override = Some(gain);
        self
    }

    pub fn with_lo_phase(mut self, theta: f64) -> Self {
        self.lo_phase_override = Some(theta);
        self
    }

    pub fn with_efficiency(mut self, eta: f64) -> Self {
        self.hd1_efficiency = eta;
        self
    }

    pub fn with_conventions(mut self, conventions: Conventions) -> Self {
        self.conventions = conventions;
        self
    }

    /// Take θ and gain from `law` instead of the exact functions.
    pub fn with_control_law(mut self, law: &ControlLaw) -> Self {
        if let ControlLaw::Pwl { .. } = law {
            self.lo_phase_override = Some(law.lo_phase(self.kappa));
            self.feedforward_gain_override = Some(law.gain(self.kappa));
        }
        self
    }

    pub fn ideal_gain(&self) -> f64 {
        self.kappa.hypot(1.0)
    }

    pub fn gain(&self) -> f64 {
        self.feedforward_gain_override
            .unwrap_or_else(|| self.ideal_gain())
    }

    pub fn lo_phase(&self) -> f64 {
        self.lo_phase_override.unwrap_or_else(|| self.kappa.atan())
    }

    pub fn feedforward_sign(&self) -> f64 {
        self.conventions.feedforward.value()
    }

    /// Homodyne angle (0 = x) at which `p_θ = p cos θ + x sin θ` is read.
    pub fn measurement_angle(&self) -> f64 {
        FRAC_PI_2 - self.conventions.lo_phase.value() * self.lo_phase()
    }
}

pub fn ideal_shear_map(kappa: f64) -> Result<SymplecticTransform> {
    SymplecticTransform::shear(kappa)
}

/// Shear written as rotation(λ) · tilted squeeze · rotation(λ) with
/// `λ = arctan(κ/2) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearDecomposition {
    pub lambda: f64,
    pub outer_rotation: SymplecticTransform,
    /// `[[sec 2λ, tan 2λ], [tan 2λ, sec 2λ]]`
    pub tilted_squeeze: SymplecticTransform,
    /// `(sec 2λ - tan 2λ, sec 2λ + tan 2λ)`; their product is 1.
    pub squeeze_factors: (f64, f64),
}

impl ShearDecomposition {
    /// The sandwiched product; reproduces [`ideal_shear_map`].
    pub fn recompose(&self) -> Result<SymplecticTransform> {
        self.outer_rotation
            .then(&self.tilted_squeeze)?
            .then(&self.outer_rotation)
    }

    /// Tilted squeeze factored along the diagonal axes:
    /// rotation(π/4), then a plain squeeze, then rotation(-π/4).
    pub fn tilted_axes(&self) -> Result<[SymplecticTransform; 3]> {
        let r = -self.squeeze_factors.0.ln();
        Ok([
            SymplecticTransform::rotation(FRAC_PI_4)?,
            SymplecticTransform::squeeze(r)?,
            SymplecticTransform::rotation(-FRAC_PI_4)?,
        ])
    }

    /// Output variances of vacuum under the shear, `(f∓)²/2`, ascending.
    pub fn vacuum_eigen_variances(&self) -> (f64, f64) {
        let (a, b) = self.squeeze_factors;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        (0.5 * lo * lo, 0.5 * hi * hi)
    }

    /// Direction of the squeezed axis for vacuum input, modulo π.
    /// Undefined at κ = 0 where nothing is squeezed.
    pub fn squeezed_axis(&self) -> Option<f64> {
        if self.lambda > 0.0 {
            Some(-FRAC_PI_4 + self.lambda)
        } else if self.lambda < 0.0 {
            Some(FRAC_PI_4 - self.lambda.abs())
        } else {
            None
        }
    }
}

pub fn decompose_shear(kappa: f64) -> Result<ShearDecomposition> {
    if !kappa.is_finite() {
        return Err(Error::NonFinite("kappa"));
    }
    let lambda = 0.5 * (0.5 * kappa).atan();
    let sec = 1.0 / (2.0 * lambda).cos();
    let tan = (2.0 * lambda).tan();
    let tilted = SymplecticTransform::new(
        DMatrix::from_row_slice(2, 2, &[sec, tan, tan, sec]),
        DVector::zeros(2),
    )?;
    Ok(ShearDecomposition {
        lambda,
        outer_rotation: SymplecticTransform::rotation(lambda)?,
        tilted_squeeze: tilted,
        squeeze_factors: (sec - tan, sec + tan),
    })
}

fn single_mode(input: &GaussianState) -> Result<()> {
    if input.n_modes() != 1 {
        return Err(Error::MultimodeInput(input.n_modes()));
    }
    Ok(())
}

/// Output of the gate from moment propagation of the input-output relations,
/// with the ancilla x-quadrature independent of the input.
pub fn closed_form_output(input: &GaussianState, params: &GateParams) -> Result<GaussianState> {
    single_mode(input)?;
    params.validate()?;
    let k = params.kappa;
    let vs = params.ancilla_vx;
    let m = input.mean();
    let c = input.cov();
    let (vx, vp, cxp) = (c[(0, 0)], c[(1, 1)], c[(0, 1)]);

    let mean = DVector::from_row_slice(&[
        m[0] * FRAC_1_SQRT_2,
        SQRT_2 * m[1] + k * FRAC_1_SQRT_2 * m[0],
    ]);
    let var_x = 0.5 * (vx + vs);
    let var_p = 2.0 * vp + 0.5 * k * k * (vx + vs) + 2.0 * k * cxp;
    let cov_xp = 0.5 * k * (vx - vs) + cxp;
    GaussianState::new(
        mean,
        DMatrix::from_row_slice(2, 2, &[var_x, cov_xp, cov_xp, var_p]),
    )
}

/// Heisenberg transfer matrix of the input-output relations, rows `(x, p)`,
/// columns `(x_in, p_in, x_S, p_S)`.
pub fn closed_form_transfer(kappa: f64) -> [[f64; 4]; 2] {
    [
        [FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2, 0.0],
        [kappa * FRAC_1_SQRT_2, SQRT_2, kappa * FRAC_1_SQRT_2, 0.0],
    ]
}

/// Two-mode state just before the feed-forward detector: mode 0 goes to the
/// detector, mode 1 is the kept port.
pub fn pre_measurement_state(
    input: &GaussianState,
    ancilla: &GaussianState,
    params: &GateParams,
) -> Result<GaussianState> {
    single_mode(input)?;
    single_mode(ancilla)?;
    params.validate()?;
    let mut joint = input.tensor(ancilla);
    if params.conventions.beamsplitter == Sign::Minus {
        joint = joint.apply_on(&SymplecticTransform::rotation(PI)?, &[1])?;
    }
    let mut state = joint.apply(&SymplecticTransform::beamsplitter(0.5)?)?;
    if params.hd1_efficiency < 1.0 {
        state = state.pure_loss(MEASURED_MODE, params.hd1_efficiency)?;
    }
    Ok(state)
}

fn ancilla_state(params: &GateParams) -> Result<GaussianState> {
    GaussianState::squeezed_vacuum(params.ancilla_vx)
}

/// One run of the gate: homodyne detection of the measured port, then
/// feed-forward on the kept port. Returns the conditional output state and
/// the detector outcome.
///
/// The conditional covariance does not depend on the outcome, but it is
/// narrower than the gate's output covariance: the outcome-dependent output
/// mean carries the remaining spread. Averaged over shots the output equals
/// [`closed_form_output`].
pub fn simulate_gate_shot<R: Rng + ?Sized>(
    input: &GaussianState,
    params: &GateParams,
    rng: &mut R,
) -> Result<(GaussianState, HomodyneOutcome)> {
    let state = pre_measurement_state(input, &ancilla_state(params)?, params)?;
    let angle = params.measurement_angle();
    let (outcome, kept) = homodyne_measure(&state, MEASURED_MODE, angle, rng)?;
    let p_theta = outcome.value_at(angle);
    let kick = params.feedforward_sign() * params.gain() * p_theta;
    let out = kept.apply(&SymplecticTransform::displace(&[0.0, kick])?)?;
    Ok((out, outcome))
}

/// Gate with its conditioning algebra precomputed for a fixed input and
/// parameter set. Sampling a shot then costs two multiply-adds.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGate {
    angle: f64,
    measured_mean: f64,
    measured_var: f64,
    kept_mean: [f64; 2],
    /// `Cov(kept, measured)`
    cross: [f64; 2],
    conditional_cov: [[f64; 2]; 2],
    /// Displacement of kept p per unit of the reduced-angle outcome.
    kick_per_outcome: f64,
}

/// Per-shot result of [`PreparedGate::sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotSample {
    pub outcome: f64,
    pub mean: [f64; 2],
}

impl PreparedGate {
    pub fn new(input: &GaussianState, params: &GateParams) -> Result<Self> {
        Self::with_ancilla(input, &ancilla_state(params)?, params)
    }

    /// Same as [`PreparedGate::new`] with an arbitrary single-mode ancilla.
    pub fn with_ancilla(
        input: &GaussianState,
        ancilla: &GaussianState,
        params: &GateParams,
    ) -> Result<Self> {
        let state = pre_measurement_state(input, ancilla, params)?;
        let (angle, sign) = reduce_angle(params.measurement_angle());
        let (measured_mean, measured_var) = state.quadrature_marginal(MEASURED_MODE, angle)?;
        // fixing the outcome at its mean gives the conditional mean offset and Schur complement
        let conditional = state.condition_on(MEASURED_MODE, angle, measured_mean)?;
        let (c, s) = (angle.cos(), angle.sin());
        let v = state.cov();
        let cross = [c * v[(2, 0)] + s * v[(2, 1)], c * v[(3, 0)] + s * v[(3, 1)]];
        let cc = conditional.cov();
        Ok(PreparedGate {
            angle,
            measured_mean,
            measured_var,
            kept_mean: [state.mean()[2], state.mean()[3]],
            cross,
            conditional_cov: [[cc[(0, 0)], cc[(0, 1)]], [cc[(1, 0)], cc[(1, 1)]]],
            kick_per_outcome: params.feedforward_sign() * params.gain() * sign,
        })
    }

    /// Homodyne angle actually measured, reduced to `[0, π)`.
    pub fn measured_angle(&self) -> f64 {
        self.angle
    }

    /// Mean and variance of the feed-forward detector outcome.
    pub fn outcome_distribution(&self) -> (f64, f64) {
        (self.measured_mean, self.measured_var)
    }

    pub fn conditional_covariance(&self) -> [[f64; 2]; 2] {
        self.conditional_cov
    }

    /// Output mean after feed-forward for a given detector outcome.
    pub fn output_mean(&self, outcome: f64) -> [f64; 2] {
        let shift = (outcome - self.measured_mean) / self.measured_var;
        [
            self.kept_mean[0] + self.cross[0] * shift,
            self.kept_mean[1] + self.cross[1] * shift + self.kick_per_outcome * outcome,
        ]
    }

    /// How the output mean moves per unit outcome.
    pub fn mean_sensitivity(&self) -> [f64; 2] {
        [
            self.cross[0] / self.measured_var,
            self.cross[1] / self.measured_var + self.kick_per_outcome,
        ]
    }

    pub fn conditional_state(&self, outcome: f64) -> Result<GaussianState> {
        let m = self.output_mean(outcome);
        let c = self.conditional_cov;
        GaussianState::new(
            DVector::from_row_slice(&m),
            DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]),
        )
    }

    /// Unconditional output: the conditional covariance plus the spread of the
    /// outcome-dependent mean (law of total covariance).
    pub fn channel_output(&self) -> Result<GaussianState> {
        let k = self.mean_sensitivity();
        let c = self.conditional_cov;
        let v = self.measured_var;
        let mean = self.output_mean(self.measured_mean);
        let cov = [
            c[0][0] + v * k[0] * k[0],
            c[0][1] + v * k[0] * k[1],
            c[1][0] + v * k[1] * k[0],
            c[1][1] + v * k[1] * k[1],
        ];
        GaussianState::new(
            DVector::from_row_slice(&mean),
            DMatrix::from_row_slice(2, 2, &cov),
        )
    }

    /// Draws one outcome with a single standard normal, matching [`simulate_gate_shot`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ShotSample {
        let z: f64 = StandardNormal.sample(rng);
        let outcome = self.measured_mean + self.measured_var.sqrt() * z;
        ShotSample {
            outcome,
            mean: self.output_mean(outcome),
        }
    }
}

/// Outcome-averaged gate output built from the explicit measurement and
/// feed-forward.
pub fn gate_channel_output(input: &GaussianState, params: &GateParams) -> Result<GaussianState> {
    PreparedGate::new(input, params)?.channel_output()
}

/// Transfer matrix of the simulated gate, found by probing the
/// outcome-averaged output mean with unit displacements of each input
/// quadrature. Same layout as [`closed_form_transfer`].
pub fn realized_transfer(params: &GateParams) -> Result<[[f64; 4]; 2]> {
    let mut t = [[0.0; 4]; 2];
    for j in 0..4 {
        let mut e = [0.0; 4];
        e[j] = 1.0;
        let input = GaussianState::coherent(e[0], e[1])?;
        let ancilla = ancilla_state(params)?
            .apply(&SymplecticTransform::displace(&[e[2], e[3]])?)?;
        let out = PreparedGate::with_ancilla(&input, &ancilla, params)?.channel_output()?;
        t[0][j] = out.mean()[0];
        t[1][j] = out.mean()[1];
    }
    Ok(t)
}

const CALIBRATION_TOL: f64 = 1e-9;
const CALIBRATION_ANCILLA_VX: f64 = 0.24494;

fn convention_matches(conventions: Conventions, kappa: f64, ancilla_vx: f64) -> Result<bool> {
    let params = GateParams::new(kappa, ancilla_vx)?.with_conventions(conventions);
    let realized = realized_transfer(&params)?;
    let expected = closed_form_transfer(kappa);
    let transfer_ok = realized
        .iter()
        .flatten()
        .zip(expected.iter().flatten())
        .all(|(a, b)| (a - b).abs() <= CALIBRATION_TOL);
    let probe = GaussianState::coherent(1.5, -0.5)?;
    let sim = gate_channel_output(&probe, &params)?;
    let theory = closed_form_output(&probe, &params)?;
    let cov_ok = (sim.cov() - theory.cov()).amax() <= CALIBRATION_TOL
        && (sim.mean() - theory.mean()).amax() <= CALIBRATION_TOL;
    Ok(transfer_ok && cov_ok)
}

/// Search the eight sign conventions for the one whose simulated gate
/// reproduces the input-output relations at every κ in `kappas`.
pub fn calibrate_on_grid(kappas: &[f64], ancilla_vx: f64) -> Result<Conventions> {
    let mut matches = Vec::new();
    for conventions in Conventions::all() {
        let mut ok = true;
        for &k in kappas {
            if !convention_matches(conventions, k, ancilla_vx)? {
                ok = false;
                break;
            }
        }
        if ok {
            matches.push(conventions);
        }
    }
    match matches.as_slice() {
        [only] => Ok(*only),
        [] => Err(Error::Calibration(
            "no sign convention reproduces the input-output relations".into(),
        )),
        many => Err(Error::Calibration(format!(
            "{} conventions match; the κ grid cannot discriminate them",
            many.len()
        ))),
    }
}

/// Calibrate on `κ ∈ {-2, -1, 0, 1, 2}`.
pub fn calibrate_signs() -> Result<Conventions> {
    calibrate_on_grid(&[-2.0, -1.0, 0.0, 1.0, 2.0], CALIBRATION_ANCILLA_VX)
}

/// Cached result of [`calibrate_signs`].
pub fn calibrated_conventions() -> Result<Conventions> {
    static CACHE: OnceLock<std::result::Result<Conventions, String>> = OnceLock::new();
    CACHE
        .get_or_init(|| calibrate_signs().map_err(|e| e.to_string()))
        .clone()
        .map_err(Error::Calibration)
}

#[cfg(test)]
mod tests {
    use super::*;

    const VS: f64 = 0.24494;

    fn close(a: &DMatrix<f64>, b: &[f64], tol: f64) -> bool {
        (a - DMatrix::from_row_slice(2, 2, b)).amax() <= tol
    }

    #[test]
    fn default_gain_and_phase() {
        let p = GateParams::new(2.0, VS).unwrap();
        assert!((p.gain() - 5f64.sqrt()).abs() < 1e-12);
        assert!((p.lo_phase() - 2f64.atan()).abs() < 1e-15);
        assert!(GateParams::new(1.0, 0.0).is_err());
        assert!(GateParams::new(f64::INFINITY, VS).is_err());
        assert!(GateParams::new(1.0, VS).unwrap().with_efficiency(0.0).validate().is_err());
    }

    #[test]
    fn ideal_shear_examples() {
        let v = GaussianState::vacuum(1).unwrap();
        let out = v.apply(&ideal_shear_map(2.0).unwrap()).unwrap();
        assert!(close(out.cov(), &[0.5, 1.0, 1.0, 2.5], 1e-15));
        let c = GaussianState::coherent(1.0, 0.0).unwrap();
        let out = c.apply(&ideal_shear_map(-1.0).unwrap()).unwrap();
        assert_eq!(out.mean().as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn decomposition_at_two() {
        let d = decompose_shear(2.0).unwrap();
        assert!((d.lambda - PI / 8.0).abs() < 1e-15);
        assert!((d.squeeze_factors.0 - (SQRT_2 - 1.0)).abs() < 1e-14);
        assert!((d.squeeze_factors.1 - (SQRT_2 + 1.0)).abs() < 1e-14);
        let zero = decompose_shear(0.0).unwrap();
        assert_eq!(zero.lambda, 0.0);
        assert_eq!(zero.squeeze_factors, (1.0, 1.0));
        assert!(zero.squeezed_axis().is_none());
    }

    #[test]
    fn closed_form_kappa_zero() {
        let input = GaussianState::coherent(3.0, 0.0).unwrap();
        let out = closed_form_output(&input, &GateParams::new(0.0, VS).unwrap()).unwrap();
        assert!((out.mean()[0] - 2.121_320_343_559_642).abs() < 1e-12);
        assert!(out.mean()[1].abs() < 1e-15);
        assert!(close(out.cov(), &[0.37247, 0.0, 0.0, 1.0], 1e-12));
    }

    #[test]
    fn closed_form_rejects_multimode() {
        let two = GaussianState::vacuum(2).unwrap();
        assert!(matches!(
            closed_form_output(&two, &GateParams::new(1.0, VS).unwrap()),
            Err(Error::MultimodeInput(2))
        ));
    }

    #[test]
    fn vacuum_ancilla_kappa_zero() {
        // with a vacuum ancilla the measured and kept ports are uncorrelated
        let input = GaussianState::vacuum(1).unwrap();
        let params = GateParams::new(0.0, 0.5).unwrap();
        let gate = PreparedGate::new(&input, &params).unwrap();
        let c = gate.conditional_covariance();
        assert!((c[0][0] - 0.5).abs() < 1e-15 && (c[1][1] - 0.5).abs() < 1e-15);
        let out = gate.channel_output().unwrap();
        assert!(close(out.cov(), &[0.5, 0.0, 0.0, 1.0], 1e-12));
    }

    #[test]
    fn shot_and_prepared_gate_agree() {
        let input = GaussianState::coherent(3.0, 0.0).unwrap();
        let params = GateParams::new(2.0, VS).unwrap();
        let gate = PreparedGate::new(&input, &params).unwrap();
        for i in 0..20 {
            let (state, outcome) =
                simulate_gate_shot(&input, &params, &mut crate::rng::shot_rng(3, 0, i)).unwrap();
            let fast = gate.sample(&mut crate::rng::shot_rng(3, 0, i));
            assert!((outcome.value - fast.outcome).abs() < 1e-12);
            assert!((state.mean()[0] - fast.mean[0]).abs() < 1e-10);
            assert!((state.mean()[1] - fast.mean[1]).abs() < 1e-10);
            let c = gate.conditional_covariance();
            assert!(close(state.cov(), &[c[0][0], c[0][1], c[1][0], c[1][1]], 1e-12));
        }
    }

    #[test]
    fn shipped_conventions_calibrate() {
        assert_eq!(calibrate_signs().unwrap(), Conventions::SHIPPED);
        assert_eq!(calibrated_conventions().unwrap(), Conventions::SHIPPED);
    }

    #[test]
    fn kappa_zero_alone_is_ambiguous() {
        let err = calibrate_on_grid(&[0.0], VS).unwrap_err();
        assert!(matches!(err, Error::Calibration(_)));
        assert!(calibrate_on_grid(&[0.0, 1.0], VS).is_ok());
    }

    #[test]
    fn flipped_feedforward_is_detected() {
        let flipped = Conventions {
            feedforward: Sign::Minus,
            ..Conventions::SHIPPED
        };
        assert!(!convention_matches(flipped, 1.0, VS).unwrap());
        assert!(!convention_matches(flipped, 0.0, VS).unwrap());
        let lo_flipped = Conventions {
            lo_phase: Sign::Minus,
            ..Conventions::SHIPPED
        };
        assert!(convention_matches(lo_flipped, 0.0, VS).unwrap());
        assert!(!convention_matches(lo_flipped, 2.0, VS).unwrap());
    }
}
