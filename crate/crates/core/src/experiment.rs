//! Time-series experiment: a sine control κ(t), a modulated coherent input,
//! and three fixed-LO homodyne runs on the gate output.
//!
//! Each time bin is an independent gate invocation with κ frozen at its bin
//! value. Trials are independent and each owns a generator derived from
//! `(seed, angle, trial)`, so records do not depend on thread count.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::electronics::{apply_chain, ControlLaw, SignalChainStage};
use crate::error::{Error, Result};
use crate::gate::{calibrated_conventions, closed_form_output, GateParams, PreparedGate};
use crate::gaussian::{db_to_variance, GaussianState};
use crate::rng::shot_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Sine,
    Square,
    /// One control period of κ samples, tiled over the run.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSignal {
    pub waveform: Waveform,
    pub frequency_mhz: f64,
    /// Peak |κ|.
    pub amplitude: f64,
    pub phase: f64,
    pub sample_rate_mhz: f64,
}

impl Default for ControlSignal {
    fn default() -> Self {
        ControlSignal {
            waveform: Waveform::Sine,
            frequency_mhz: 1.0,
            amplitude: 2.0,
            phase: 0.0,
            sample_rate_mhz: 100.0,
        }
    }
}

impl ControlSignal {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_mhz.is_finite() && self.sample_rate_mhz > 0.0) {
            return Err(Error::config("control.sample_rate_mhz", "must be positive"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::config("control.amplitude", "must be finite and non-negative"));
        }
        if !self.phase.is_finite() {
            return Err(Error::config("control.phase", "must be finite"));
        }
        match &self.waveform {
            Waveform::Custom(samples) => {
                if samples.len() < 2 {
                    return Err(Error::config("control.waveform", "custom waveform needs at least 2 samples"));
                }
                if samples.iter().any(|s| !s.is_finite() || s.abs() > self.amplitude) {
                    return Err(Error::config(
                        "control.waveform",
                        "custom samples must be finite and within ±amplitude",
                    ));
                }
            }
            _ => {
                if !(self.frequency_mhz.is_finite() && self.frequency_mhz > 0.0) {
                    return Err(Error::config("control.frequency_mhz", "must be positive"));
                }
                let per_period = self.sample_rate_mhz / self.frequency_mhz;
                if per_period < 2.0 || (per_period - per_period.round()).abs() > 1e-9 {
                    return Err(Error::config(
                        "control.sample_rate_mhz",
                        "must be an integer multiple (at least 2) of the control frequency",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn samples_per_period(&self) -> usize {
        match &self.waveform {
            Waveform::Custom(samples) => samples.len(),
            _ => (self.sample_rate_mhz / self.frequency_mhz).round() as usize,
        }
    }

    fn value(&self, index: usize, t_us: f64) -> f64 {
        let arg = 2.0 * PI * self.frequency_mhz * t_us + self.phase;
        match &self.waveform {
            Waveform::Sine => self.amplitude * arg.sin(),
            Waveform::Square => {
                let s = arg.sin();
                if s.abs() < 1e-12 {
                    0.0
                } else {
                    self.amplitude * s.signum()
                }
            }
            Waveform::Custom(samples) => samples[index % samples.len()],
        }
    }
}

/// Coherent-input displacement `⟨x_in⟩ = A_x sin(2π f t)`, `⟨p_in⟩ = A_p sin(2π f t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputModulation {
    pub x_amplitude: f64,
    pub frequency_mhz: f64,
    pub p_amplitude: f64,
}

impl Default for InputModulation {
    fn default() -> Self {
        InputModulation {
            x_amplitude: 3.0,
            frequency_mhz: 5.0,
            p_amplitude: 0.0,
        }
    }
}

impl InputModulation {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("input.x_amplitude", self.x_amplitude),
            ("input.frequency_mhz", self.frequency_mhz),
            ("input.p_amplitude", self.p_amplitude),
        ] {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        if self.frequency_mhz < 0.0 {
            return Err(Error::config("input.frequency_mhz", "must be non-negative"));
        }
        Ok(())
    }
}

/// Sampled control and input-mean traces on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub time_us: Vec<f64>,
    pub kappa: Vec<f64>,
    pub x_in: Vec<f64>,
    pub p_in: Vec<f64>,
}

impl Traces {
    pub fn n_bins(&self) -> usize {
        self.time_us.len()
    }
}

pub fn generate_traces(cfg: &RunConfig) -> Result<Traces> {
    cfg.control.validate()?;
    cfg.input.validate()?;
    if cfg.n_periods < 2 {
        return Err(Error::config("n_periods", "must cover at least 2 control periods"));
    }
    let n = cfg.control.samples_per_period() * cfg.n_periods;
    let rate = cfg.control.sample_rate_mhz;
    let time_us: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
    let kappa = time_us
        .iter()
        .enumerate()
        .map(|(i, &t)| cfg.control.value(i, t))
        .collect();
    let carrier = |t: f64| (2.0 * PI * cfg.input.frequency_mhz * t).sin();
    let x_in = time_us.iter().map(|&t| cfg.input.x_amplitude * carrier(t)).collect();
    let p_in = time_us.iter().map(|&t| cfg.input.p_amplitude * carrier(t)).collect();
    Ok(Traces {
        time_us,
        kappa,
        x_in,
        p_in,
    })
}

/// LO2 phase of one homodyne run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoAngle {
    X,
    P,
    Diagonal,
}

impl LoAngle {
    pub const ALL: [LoAngle; 3] = [LoAngle::X, LoAngle::P, LoAngle::Diagonal];

    pub fn radians(self) -> f64 {
        match self {
            LoAngle::X => 0.0,
            LoAngle::P => FRAC_PI_2,
            LoAngle::Diagonal => FRAC_PI_4,
        }
    }

    /// Suffix used in file names.
    pub fn stem(self) -> &'static str {
        match self {
            LoAngle::X => "x",
            LoAngle::P => "p",
            LoAngle::Diagonal => "pi4",
        }
    }

    pub fn from_radians(angle: f64) -> Option<LoAngle> {
        LoAngle::ALL
            .into_iter()
            .find(|a| (a.radians() - angle).abs() < 1e-9)
    }

    fn index(self) -> u64 {
        match self {
            LoAngle::X => 0,
            LoAngle::P => 1,
            LoAngle::Diagonal => 2,
        }
    }
}

/// Raw HD2 outcomes of one run, trial-major (`data[trial * n_bins + bin]`).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleRecords {
    pub angle: LoAngle,
    pub n_trials: usize,
    pub n_bins: usize,
    pub data: Vec<f64>,
}

impl AngleRecords {
    pub fn trial(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn bin(&self, b: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        (0..self.n_trials).map(move |t| self.data[t * self.n_bins + b])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneRecordSet {
    pub time_us: Vec<f64>,
    /// Supplied control value per bin.
    pub kappa_trace: Vec<f64>,
    /// Runs in [`LoAngle::ALL`] order.
    pub runs: Vec<AngleRecords>,
    pub seed: u64,
    pub config_hash: String,
}

impl HomodyneRecordSet {
    pub fn run(&self, angle: LoAngle) -> &AngleRecords {
        &self.runs[angle.index() as usize]
    }
}

/// Control value the gate actually applies per bin: the supplied trace
/// delayed by `control_skew_ns` when the electronics lag the optics.
pub fn applied_kappa(cfg: &RunConfig, traces: &Traces) -> Result<Vec<f64>> {
    if cfg.control_skew_ns == 0.0 {
        return Ok(traces.kappa.clone());
    }
    let stage = SignalChainStage::new(1.0, 0.0, cfg.control_skew_ns)?;
    apply_chain(&traces.kappa, &[stage], 1e3 / cfg.control.sample_rate_mhz)
}

fn control_law(cfg: &RunConfig) -> Result<ControlLaw> {
    let e = &cfg.electronics;
    if e.use_pwl {
        ControlLaw::fitted(e.arctan_segments, e.sqrt_segments, e.range)
    } else {
        Ok(ControlLaw::Exact)
    }
}

/// Gate parameters for every bin.
pub fn bin_params(cfg: &RunConfig) -> Result<Vec<GateParams>> {
    cfg.validate()?;
    let traces = generate_traces(cfg)?;
    let kappa = applied_kappa(cfg, &traces)?;
    let vs = db_to_variance(cfg.ancilla_db)?;
    let law = control_law(cfg)?;
    let conventions = calibrated_conventions()?;
    kappa
        .iter()
        .map(|&k| {
            let p = GateParams::new(k, vs)?
                .with_efficiency(cfg.hd1_efficiency)
                .with_conventions(conventions)
                .with_control_law(&law);
            p.validate()?;
            Ok(p)
        })
        .collect()
}

/// Monte Carlo homodyne data for the three LO2 angles.
pub fn run_experiment(cfg: &RunConfig, seed: u64) -> Result<HomodyneRecordSet> {
    let traces = generate_traces(cfg)?;
    let params = bin_params(cfg)?;
    let gates: Vec<PreparedGate> = params
        .iter()
        .zip(traces.x_in.iter().zip(&traces.p_in))
        .map(|(p, (&x, &pm))| PreparedGate::new(&GaussianState::coherent(x, pm)?, p))
        .collect::<Result<_>>()?;
    let n_bins = traces.n_bins();
    let n_trials = cfg.n_trials;
    if n_trials < 2 {
        return Err(Error::InsufficientTrials(n_trials));
    }

    let runs = LoAngle::ALL
        .into_iter()
        .map(|angle| {
            let (s, c) = angle.radians().sin_cos();
            // HD2 noise along the LO direction of the conditional covariance
            let spread: Vec<f64> = gates
                .iter()
                .map(|g| {
                    let v = g.conditional_covariance();
                    (c * c * v[0][0] + 2.0 * c * s * v[0][1] + s * s * v[1][1]).sqrt()
                })
                .collect();
            let rows: Vec<Vec<f64>> = (0..n_trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = shot_rng(seed, angle.index(), trial);
                    gates
                        .iter()
                        .zip(&spread)
                        .map(|(g, &sd)| {
                            let shot = g.sample(&mut rng);
                            let z: f64 = StandardNormal.sample(&mut rng);
                            c * shot.mean[0] + s * shot.mean[1] + sd * z
                        })
                        .collect()
                })
                .collect();
            AngleRecords {
                angle,
                n_trials,
                n_bins,
                data: rows.concat(),
            }
        })
        .collect();

    Ok(HomodyneRecordSet {
        time_us: traces.time_us,
        kappa_trace: traces.kappa,
        runs,
        seed,
        config_hash: cfg.hash(),
    })
}

/// Sample moments of one bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinMoments {
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

impl BinMoments {
    /// Unbiased mean and variance, with Gaussian standard errors
    /// `√(v/n)` and `v √(2/(n-1))`.
    pub fn from_samples(samples: impl IntoIterator<Item = f64> + Clone) -> Result<Self> {
        let (n, sum) = samples
            .clone()
            .into_iter()
            .fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
        if n < 2 {
            return Err(Error::InsufficientTrials(n));
        }
        let nf = n as f64;
        let mean = sum / nf;
        let ss: f64 = samples.into_iter().map(|x| (x - mean) * (x - mean)).sum();
        let variance = ss / (nf - 1.0);
        Ok(BinMoments {
            mean,
            variance,
            se_mean: (variance / nf).sqrt(),
            se_var: variance * (2.0 / (nf - 1.0)).sqrt(),
        })
    }
}

/// Per-bin moments of one LO angle.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrace {
    pub angle: LoAngle,
    pub bins: Vec<BinMoments>,
}

impl MomentTrace {
    pub fn means(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.mean).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.variance).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub time_us: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Traces in [`LoAngle::ALL`] order.
    pub traces: Vec<MomentTrace>,
}

impl MomentEstimate {
    pub fn trace(&self, angle: LoAngle) -> &MomentTrace {
        &self.traces[angle.index() as usize]
    }

    pub fn n_bins(&self) -> usize {
        self.time_us.len()
    }
}

pub fn estimate_moments(records: &HomodyneRecordSet) -> Result<MomentEstimate> {
    let traces = records
        .runs
        .iter()
        .map(|run| {
            let bins = (0..run.n_bins)
                .into_par_iter()
                .map(|b| BinMoments::from_samples(run.bin(b)))
                .collect::<Result<Vec<_>>>()?;
            Ok(MomentTrace {
                angle: run.angle,
                bins,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MomentEstimate {
        time_us: records.time_us.clone(),
        kappa: records.kappa_trace.clone(),
        traces,
    })
}

/// Closed-form prediction for one bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryBin {
    pub time_us: f64,
    pub kappa: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
    /// `2 Var(p_in) + κ²/2 Var(x_in)`: the p-variance without the ancilla term.
    pub var_p_simplified: f64,
}

impl TheoryBin {
    pub fn mean_at(&self, angle: LoAngle) -> f64 {
        let (s, c) = angle.radians().sin_cos();
        c * self.mean_x + s * self.mean_p
    }

    pub fn variance_at(&self, angle: LoAngle) -> f64 {
        let (s, c) = angle.radians().sin_cos();
        c * c * self.var_x + 2.0 * c * s * self.cov_xp + s * s * self.var_p
    }
}

pub fn theory_traces(cfg: &RunConfig) -> Result<Vec<TheoryBin>> {
    cfg.validate()?;
    let traces = generate_traces(cfg)?;
    let vs = db_to_variance(cfg.ancilla_db)?;
    (0..traces.n_bins())
        .map(|i| {
            let k = traces.kappa[i];
            let input = GaussianState::coherent(traces.x_in[i], traces.p_in[i])?;
            let out = closed_form_output(&input, &GateParams::new(k, vs)?)?;
            let c = input.cov();
            Ok(TheoryBin {
                time_us: traces.time_us[i],
                kappa: k,
                mean_x: out.mean()[0],
                mean_p: out.mean()[1],
                var_x: out.cov()[(0, 0)],
                var_p: out.cov()[(1, 1)],
                cov_xp: out.cov()[(0, 1)],
                var_p_simplified: 2.0 * c[(1, 1)] + 0.5 * k * k * c[(0, 0)],
            })
        })
        .collect()
}

pub const MOMENT_HEADER: [&str; 8] = [
    "angle_rad", "bin_index", "time_us", "kappa", "mean", "variance", "se_mean", "se_var",
];

pub fn moments_file_name(angle: LoAngle) -> String {
    format!("moments_{}.csv", angle.stem())
}

/// Write one `moments_<angle>.csv` per LO angle into `dir`.
pub fn write_moments_csv(moments: &MomentEstimate, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    moments
        .traces
        .iter()
        .map(|trace| {
            let path = dir.join(moments_file_name(trace.angle));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(MOMENT_HEADER)?;
            for (i, b) in trace.bins.iter().enumerate() {
                w.write_record([
                    trace.angle.radians().to_string(),
                    i.to_string(),
                    moments.time_us[i].to_string(),
                    moments.kappa[i].to_string(),
                    b.mean.to_string(),
                    b.variance.to_string(),
                    b.se_mean.to_string(),
                    b.se_var.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(path)
        })
        .collect()
}

struct MomentFile {
    angle: LoAngle,
    time_us: Vec<f64>,
    kappa: Vec<f64>,
    bins: Vec<BinMoments>,
}

fn read_moment_file(path: &Path) -> Result<MomentFile> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != MOMENT_HEADER {
        return Err(Error::Table {
            line: 1,
            reason: format!("{}: expected header {}", path.display(), MOMENT_HEADER.join(",")),
        });
    }
    let mut angle = None;
    let (mut time_us, mut kappa, mut bins) = (Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let field = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Table {
                    line,
                    reason: format!("{}: bad `{}` value", path.display(), MOMENT_HEADER[k]),
                })
        };
        let a = LoAngle::from_radians(field(0)?).ok_or_else(|| Error::Table {
            line,
            reason: format!("{}: angle must be 0, π/2 or π/4", path.display()),
        })?;
        if *angle.get_or_insert(a) != a {
            return Err(Error::Table {
                line,
                reason: format!("{}: mixed angles in one file", path.display()),
            });
        }
        if field(1)? != bins.len() as f64 {
            return Err(Error::Table {
                line,
                reason: format!("{}: bin_index out of sequence", path.display()),
            });
        }
        time_us.push(field(2)?);
        kappa.push(field(3)?);
        bins.push(BinMoments {
            mean: field(4)?,
            variance: field(5)?,
            se_mean: field(6)?,
            se_var: field(7)?,
        });
    }
    let angle = angle.ok_or_else(|| Error::Table {
        line: 2,
        reason: format!("{}: no data rows", path.display()),
    })?;
    Ok(MomentFile {
        angle,
        time_us,
        kappa,
        bins,
    })
}

/// Load three moment files (one per LO angle, any order) onto a common grid.
pub fn read_moments_csv(paths: &[PathBuf]) -> Result<MomentEstimate> {
    let mut files: Vec<MomentFile> = paths
        .iter()
        .map(|p| read_moment_file(p))
        .collect::<Result<_>>()?;
    files.sort_by_key(|f| f.angle.index());
    let angles: Vec<LoAngle> = files.iter().map(|f| f.angle).collect();
    if angles != LoAngle::ALL {
        return Err(Error::GridMismatch(format!(
            "need exactly one file per LO angle (x, p, pi4), got {:?}",
            angles
        )));
    }
    let first = &files[0];
    for f in &files[1..] {
        if !same_grid(&f.time_us, &first.time_us) || !same_grid(&f.kappa, &first.kappa) {
            return Err(Error::GridMismatch(format!(
                "{} and {} runs disagree on time/kappa bins",
                first.angle.stem(),
                f.angle.stem()
            )));
        }
    }
    let time_us = first.time_us.clone();
    let kappa = first.kappa.clone();
    Ok(MomentEstimate {
        time_us,
        kappa,
        traces: files
            .into_iter()
            .map(|f| MomentTrace {
                angle: f.angle,
                bins: f.bins,
            })
            .collect(),
    })
}

pub(crate) fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()))
}

pub const THEORY_HEADER: [&str; 11] = [
    "bin_index", "time_us", "kappa", "mean_x", "mean_p", "var_x", "var_p", "var_pi4",
    "cov_xp", "var_p_simplified", "var_x_db",
];

pub fn write_theory_csv(theory: &[TheoryBin], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(THEORY_HEADER)?;
    for (i, t) in theory.iter().enumerate() {
        w.write_record([
            i.to_string(),
            t.time_us.to_string(),
            t.kappa.to_string(),
            t.mean_x.to_string(),
            t.mean_p.to_string(),
            t.var_x.to_string(),
            t.var_p.to_string(),
            t.variance_at(LoAngle::Diagonal).to_string(),
            t.cov_xp.to_string(),
            t.var_p_simplified.to_string(),
            crate::gaussian::variance_to_db(t.var_x)?.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Raw outcomes of one run as `trial, bin_index, value` rows.
pub fn write_records_csv(records: &HomodyneRecordSet, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    records
        .runs
        .iter()
        .map(|run| {
            let path = dir.join(format!("records_{}.csv", run.angle.stem()));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["trial", "bin_index", "value"])?;
            for t in 0..run.n_trials {
                for (b, v) in run.trial(t).iter().enumerate() {
                    w.write_record([t.to_string(), b.to_string(), v.to_string()])?;
                }
            }
            w.flush()?;
            Ok(path)
        })
        .collect()
}
