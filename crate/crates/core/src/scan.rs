//! Parameter-space scans: minimum variance and photon number at the
//! variance minima versus pump level, modulation depth and modulation
//! frequency, plus the linearization-validity margin.

use serde::Serialize;

use crate::exec::{self, ExecMode};
use crate::params::{Model, PumpProfile, SystemParams};
use crate::semiclassical::{self, meanfield_ode};
use crate::variance::{classify, variance_ode, Classification};
use crate::Error;

/// Quantified form of the paper-style "much greater than": the validity
/// inequality must hold with at least this factor.
pub const VALIDITY_MARGIN: f64 = 100.0;

/// Profile family scanned over the mean pump level f-bar.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProfileFamily {
    Constant,
    /// f1 = f1_ratio * f_bar at fixed modulation frequency.
    Harmonic { f1_ratio: f64, delta: f64 },
    /// Fixed pulse timing; the pulse height follows f_bar.
    PulseTrain { t1: f64, t2: f64 },
}

impl ProfileFamily {
    pub fn profile(&self, f_bar: f64) -> PumpProfile {
        match *self {
            ProfileFamily::Constant => PumpProfile::Constant { f0: f_bar },
            ProfileFamily::Harmonic { f1_ratio, delta } => PumpProfile::Harmonic {
                f0: f_bar,
                f1: f1_ratio * f_bar,
                delta,
            },
            ProfileFamily::PulseTrain { t1, t2 } => PumpProfile::PulseTrain {
                f_l: f_bar * (t1 + t2) / t1,
                t1,
                t2,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub axis_value: f64,
    pub v_min: f64,
    pub t_m: f64,
    /// Photon number at the variance minimum.
    pub n_min: f64,
    pub epr: bool,
    pub valid: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    /// Name of the scanned axis.
    pub axis: String,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    pub fn argmin(&self) -> Option<&ScanRow> {
        self.rows
            .iter()
            .filter(|r| r.error.is_none())
            .min_by(|a, b| a.v_min.partial_cmp(&b.v_min).unwrap())
    }
}

/// Linearization-validity margin of the current working point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub margin: f64,
}

/// Validity of the linearized treatment near threshold. Harmonic pumping
/// carries an extra exponential factor from the modulation depth; constant
/// and pulsed pumping use the bare small parameter.
pub fn validity_check(model: &Model) -> ValidityReport {
    let dc = model.dc;
    let distance = (model.profile.mean() / dc.f_th - 1.0).abs();
    let rhs = match model.profile {
        PumpProfile::Harmonic { f1, delta, .. } => {
            dc.lambda_over_gamma
                * (2.0 * (f1 / dc.f_th) * (model.params.gamma / delta)).exp()
        }
        _ => dc.lambda_over_gamma,
    };
    let margin = distance / rhs;
    ValidityReport {
        valid: margin >= VALIDITY_MARGIN,
        margin,
    }
}

fn evaluate_point(params: &SystemParams, profile: PumpProfile, axis_value: f64) -> ScanRow {
    let run = || -> Result<ScanRow, Error> {
        let model = Model::new(*params, profile)?;
        let n0 = meanfield_ode(&model, semiclassical::SAMPLES_PER_PERIOD)?;
        let tr = variance_ode(&model, &n0)?;
        let epr = matches!(classify(tr.v_min)?, Classification::Epr);
        Ok(ScanRow {
            axis_value,
            v_min: tr.v_min,
            t_m: tr.t_m,
            n_min: n0.n_at(tr.t_m),
            epr,
            valid: validity_check(&model).valid,
            error: None,
        })
    };
    run().unwrap_or_else(|e| ScanRow {
        axis_value,
        v_min: f64::NAN,
        t_m: f64::NAN,
        n_min: f64::NAN,
        epr: false,
        valid: false,
        error: Some(e.to_string()),
    })
}

/// V_min, t_m and n_min versus f-bar/f_th for one profile family.
/// Row-level failures are recorded in the row and the scan continues.
pub fn scan_vmin(
    params: &SystemParams,
    family: ProfileFamily,
    fbar_over_fth: &[f64],
    mode: ExecMode,
) -> Result<ScanResult, Error> {
    if fbar_over_fth.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    let f_th = params.derive_constants().f_th;
    let rows = exec::map_indexed(mode, fbar_over_fth.len(), |i| {
        let ratio = fbar_over_fth[i];
        evaluate_point(params, family.profile(ratio * f_th), ratio)
    });
    Ok(ScanResult {
        axis: "fbar_over_fth".into(),
        rows,
    })
}

/// V_min versus modulation frequency delta at fixed f-bar and f1.
pub fn frequency_sweep(
    params: &SystemParams,
    fbar_over_fth: f64,
    f1_ratio: f64,
    delta_grid: &[f64],
    mode: ExecMode,
) -> Result<ScanResult, Error> {
    if delta_grid.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    let f_th = params.derive_constants().f_th;
    let f_bar = fbar_over_fth * f_th;
    let rows = exec::map_indexed(mode, delta_grid.len(), |i| {
        let delta = delta_grid[i];
        let profile = PumpProfile::Harmonic {
            f0: f_bar,
            f1: f1_ratio * f_bar,
            delta,
        };
        evaluate_point(params, profile, delta)
    });
    Ok(ScanResult {
        axis: "delta".into(),
        rows,
    })
}

/// Log-spaced grid helper.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
