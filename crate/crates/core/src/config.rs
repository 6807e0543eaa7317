//! Run configuration: flat key=value config files with CLI overrides.
//!
//! Recognized keys: `gamma`, `gamma3`, `k`, `profile` (constant | harmonic
//! | pulse_train), `f0`, `f1`, `delta`, `fL`, `T1`, `T2`, plus solver and
//! Monte Carlo settings (`samples_per_period`, `n_traj`, `dt`, `seed`,
//! `transient`, `mc_points`, `mc_periods`, `gamma_si`, `sequential`).
//! Amplitudes are in the same rate units as the threshold `f_th`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::exec::ExecMode;
use crate::params::{Model, PumpProfile, SystemParams};
use crate::positive_p::McConfig;
use crate::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub gamma: f64,
    pub gamma3: f64,
    pub k: f64,
    pub profile: String,
    pub f0: f64,
    pub f1: f64,
    pub delta: f64,
    pub f_l: f64,
    pub t1: f64,
    pub t2: f64,
    pub samples_per_period: usize,
    pub n_traj: usize,
    pub dt: f64,
    pub seed: u64,
    pub transient: f64,
    pub mc_points: usize,
    pub mc_periods: usize,
    /// Physical gamma in s^-1 for output-flux scaling; when absent the
    /// dimensionless gamma is used.
    pub gamma_si: Option<f64>,
    pub sequential: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            gamma3: 25.0,
            k: 5e-4,
            profile: "constant".into(),
            f0: 0.0,
            f1: 0.0,
            delta: 2.0,
            f_l: 0.0,
            t1: 0.01,
            t2: 1.0,
            samples_per_period: 512,
            n_traj: 10_000,
            dt: 1e-3,
            seed: 1,
            transient: 8.0,
            mc_points: 65,
            mc_periods: 2,
            gamma_si: None,
            sequential: false,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("key `{key}`: {e}"));
        macro_rules! num {
            () => {
                value.parse().map_err(|e| bad(&e))?
            };
        }
        match key {
            "gamma" => self.gamma = num!(),
            "gamma3" => self.gamma3 = num!(),
            "k" => self.k = num!(),
            "profile" => self.profile = value.to_string(),
            "f0" => self.f0 = num!(),
            "f1" => self.f1 = num!(),
            "delta" => self.delta = num!(),
            "fL" | "f_l" => self.f_l = num!(),
            "T1" | "t1" => self.t1 = num!(),
            "T2" | "t2" => self.t2 = num!(),
            "samples_per_period" => self.samples_per_period = num!(),
            "n_traj" => self.n_traj = num!(),
            "dt" => self.dt = num!(),
            "seed" => self.seed = num!(),
            "transient" => self.transient = num!(),
            "mc_points" => self.mc_points = num!(),
            "mc_periods" => self.mc_periods = num!(),
            "gamma_si" => self.gamma_si = Some(num!()),
            "sequential" => self.sequential = value.parse().map_err(|e| bad(&e))?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn pump_profile(&self) -> Result<PumpProfile, Error> {
        let p = match self.profile.as_str() {
            "constant" => PumpProfile::Constant { f0: self.f0 },
            "harmonic" => PumpProfile::Harmonic {
                f0: self.f0,
                f1: self.f1,
                delta: self.delta,
            },
            "pulse_train" | "pulsed" => PumpProfile::PulseTrain {
                f_l: self.f_l,
                t1: self.t1,
                t2: self.t2,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown profile `{other}` (expected constant | harmonic | pulse_train)"
                )))
            }
        };
        p.validate()?;
        Ok(p)
    }

    pub fn model(&self) -> Result<Model, Error> {
        let params = SystemParams::new(self.gamma, self.gamma3, self.k)?;
        Model::new(params, self.pump_profile()?)
    }

    pub fn exec_mode(&self) -> ExecMode {
        if self.sequential {
            ExecMode::Sequential
        } else {
            ExecMode::Parallel
        }
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            n_traj: self.n_traj,
            dt: self.dt,
            seed: self.seed,
            transient: self.transient,
            n_points: self.mc_points,
            n_periods: self.mc_periods,
            mode: self.exec_mode(),
        }
    }

    /// Gamma used for output-flux scaling.
    pub fn output_gamma(&self) -> f64 {
        self.gamma_si.unwrap_or(self.gamma)
    }
}
