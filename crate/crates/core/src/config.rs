//! Run configuration, read from JSON. Every field has a default, so `{}` is
//! the nominal setup: −3.1 dB ancilla, 1 MHz sine control of amplitude 2,
//! 5 MHz input modulation and 10,851 trials per LO angle.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::electronics::DelayModel;
use crate::error::{Error, Result};
use crate::experiment::{ControlSignal, InputModulation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElectronicsConfig {
    /// Drive θ and the gain from fitted broken-line tables instead of the exact functions.
    pub use_pwl: bool,
    pub arctan_segments: usize,
    pub sqrt_segments: usize,
    /// Tables are fitted on `[-range, range]`.
    pub range: f64,
}

impl Default for ElectronicsConfig {
    fn default() -> Self {
        ElectronicsConfig {
            use_pwl: false,
            arctan_segments: 16,
            sqrt_segments: 16,
            range: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub control: ControlSignal,
    pub input: InputModulation,
    /// Ancilla x-variance relative to shot noise.
    pub ancilla_db: f64,
    /// Trials per LO angle.
    pub n_trials: usize,
    pub n_periods: usize,
    pub seed: u64,
    pub electronics: ElectronicsConfig,
    pub delays: DelayModel,
    /// Lag of the feed-forward control behind the optical input.
    pub control_skew_ns: f64,
    pub hd1_efficiency: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            control: ControlSignal::default(),
            input: InputModulation::default(),
            ancilla_db: -3.1,
            n_trials: 10_851,
            n_periods: 2,
            seed: 1,
            electronics: ElectronicsConfig::default(),
            delays: DelayModel::default(),
            control_skew_ns: 0.0,
            hd1_efficiency: 1.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|source| Error::ConfigParse {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.control.validate()?;
        self.input.validate()?;
        self.delays.validate()?;
        if !self.ancilla_db.is_finite() {
            return Err(Error::config("ancilla_db", "must be finite"));
        }
        if self.n_trials < 2 {
            return Err(Error::config("n_trials", "must be at least 2"));
        }
        if self.n_periods < 2 {
            return Err(Error::config("n_periods", "must be at least 2"));
        }
        let e = &self.electronics;
        if e.arctan_segments == 0 || e.sqrt_segments == 0 {
            return Err(Error::config("electronics", "segment counts must be at least 1"));
        }
        if !(e.range.is_finite() && e.range > 0.0) {
            return Err(Error::config("electronics.range", "must be positive"));
        }
        if !(self.control_skew_ns.is_finite() && self.control_skew_ns >= 0.0) {
            return Err(Error::config("control_skew_ns", "must be finite and non-negative"));
        }
        if !(self.hd1_efficiency > 0.0 && self.hd1_efficiency <= 1.0) {
            return Err(Error::config("hd1_efficiency", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn n_bins(&self) -> usize {
        self.control.samples_per_period() * self.n_periods
    }
}
