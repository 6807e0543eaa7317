//! Physical parameters, derived constants and the periodic pump profile.
//!
//! All rates are expressed in units of the subharmonic decay rate `gamma`
//! (normally 1.0), with time in units of `1/gamma`. An optional physical
//! `gamma` in s^-1 only enters when converting to output fluxes.

use serde::{Deserialize, Serialize};

use crate::Error;

/// Cavity and nonlinearity rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Decay rate of the two subharmonic modes (also the time unit).
    pub gamma: f64,
    /// Decay rate of the pump mode.
    pub gamma3: f64,
    /// Down-conversion coupling.
    pub k: f64,
}

impl SystemParams {
    pub fn new(gamma: f64, gamma3: f64, k: f64) -> Result<Self, Error> {
        for (name, value) in [("gamma", gamma), ("gamma3", gamma3), ("k", k)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(Self { gamma, gamma3, k })
    }

    /// Adiabatic elimination of the pump mode needs gamma3 >> gamma.
    pub fn adiabatic_valid(&self) -> bool {
        self.gamma3 / self.gamma >= 10.0
    }

    pub fn derive_constants(&self) -> DerivedConstants {
        DerivedConstants {
            lambda: self.k * self.k / self.gamma3,
            f_th: self.gamma * self.gamma3 / self.k,
            lambda_over_gamma: self.k * self.k / (self.gamma3 * self.gamma),
        }
    }
}

/// Constants derived from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Effective nonlinearity k^2/gamma3.
    pub lambda: f64,
    /// Threshold pump amplitude gamma*gamma3/k.
    pub f_th: f64,
    /// Small parameter of the linearized theory.
    pub lambda_over_gamma: f64,
}

impl DerivedConstants {
    /// The linearized treatment assumes lambda/gamma << 1.
    pub fn linearization_valid(&self) -> bool {
        self.lambda_over_gamma < 1e-2
    }
}

/// Relative half-width of the critical band around threshold.
pub const CRITICAL_BAND: f64 = 1e-6;

/// Time-periodic pump amplitude f(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PumpProfile {
    Constant { f0: f64 },
    Harmonic { f0: f64, f1: f64, delta: f64 },
    /// Rectangular pulses of height `f_l` and duration `t1`, separated by
    /// gaps of duration `t2`. The pulse is on over [0, t1) of each period.
    PulseTrain { f_l: f64, t1: f64, t2: f64 },
}

impl PumpProfile {
    pub fn validate(&self) -> Result<(), Error> {
        let check_nonneg = |name, value: f64| {
            if value < 0.0 || !value.is_finite() {
                Err(Error::InvalidParam {
                    name,
                    value,
                    reason: "must be non-negative and finite",
                })
            } else {
                Ok(())
            }
        };
        let check_pos = |name, value: f64| {
            if !(value > 0.0) || !value.is_finite() {
                Err(Error::InvalidParam {
                    name,
                    value,
                    reason: "must be positive and finite",
                })
            } else {
                Ok(())
            }
        };
        match *self {
            PumpProfile::Constant { f0 } => check_nonneg("f0", f0),
            PumpProfile::Harmonic { f0, f1, delta } => {
                check_nonneg("f0", f0)?;
                check_nonneg("f1", f1)?;
                check_pos("delta", delta)
            }
            PumpProfile::PulseTrain { f_l, t1, t2 } => {
                check_nonneg("f_l", f_l)?;
                check_pos("t1", t1)?;
                check_pos("t2", t2)
            }
        }
    }

    /// Modulation period. A constant pump has no intrinsic period; the
    /// convention is T = 1/gamma so that period-averaging code paths work.
    pub fn period(&self, gamma: f64) -> f64 {
        match *self {
            PumpProfile::Constant { .. } => 1.0 / gamma,
            PumpProfile::Harmonic { delta, .. } => 2.0 * std::f64::consts::PI / delta,
            PumpProfile::PulseTrain { t1, t2, .. } => t1 + t2,
        }
    }

    /// f(t).
    pub fn amplitude(&self, t: f64) -> f64 {
        match *self {
            PumpProfile::Constant { f0 } => f0,
            PumpProfile::Harmonic { f0, f1, delta } => f0 + f1 * (delta * t).cos(),
            PumpProfile::PulseTrain { f_l, t1, t2 } => {
                if t.rem_euclid(t1 + t2) < t1 {
                    f_l
                } else {
                    0.0
                }
            }
        }
    }

    /// Period-averaged amplitude f-bar.
    pub fn mean(&self) -> f64 {
        match *self {
            PumpProfile::Constant { f0 } => f0,
            PumpProfile::Harmonic { f0, .. } => f0,
            PumpProfile::PulseTrain { f_l, t1, t2 } => f_l * t1 / (t1 + t2),
        }
    }

    /// Exact integral of f over [a, b].
    pub fn amplitude_integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            PumpProfile::Constant { f0 } => f0 * (b - a),
            PumpProfile::Harmonic { f0, f1, delta } => {
                f0 * (b - a) + f1 / delta * ((delta * b).sin() - (delta * a).sin())
            }
            PumpProfile::PulseTrain { f_l, t1, t2 } => {
                f_l * (pulse_on_time(b, t1, t2) - pulse_on_time(a, t1, t2))
            }
        }
    }

    /// Times in (a, b) where f is discontinuous (pulse edges).
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match *self {
            PumpProfile::PulseTrain { t1, t2, .. } => {
                let period = t1 + t2;
                let mut out = Vec::new();
                let mut n = (a / period).floor();
                loop {
                    let base = n * period;
                    for edge in [base, base + t1] {
                        if edge > a && edge < b {
                            out.push(edge);
                        }
                    }
                    if base > b {
                        break;
                    }
                    n += 1.0;
                }
                out
            }
            _ => Vec::new(),
        }
    }
}

/// Cumulative pulse on-time from 0 to t (signed, valid for negative t).
fn pulse_on_time(t: f64, t1: f64, t2: f64) -> f64 {
    let period = t1 + t2;
    let n = (t / period).floor();
    n * t1 + (t - n * period).min(t1)
}

/// Operating regime relative to threshold, decided from the
/// period-averaged pump amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Below,
    Above,
    Critical,
}

/// Immutable bundle of parameters, derived constants and pump profile.
///
/// All solver entry points take a `Model`; it is `Copy` and safe to share
/// across threads.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Model {
    pub params: SystemParams,
    pub dc: DerivedConstants,
    pub profile: PumpProfile,
}

impl Model {
    pub fn new(params: SystemParams, profile: PumpProfile) -> Result<Self, Error> {
        profile.validate()?;
        Ok(Self {
            params,
            dc: params.derive_constants(),
            profile,
        })
    }

    pub fn period(&self) -> f64 {
        self.profile.period(self.params.gamma)
    }

    /// epsilon(t) = f(t) k / gamma3 = gamma f(t)/f_th.
    pub fn epsilon(&self, t: f64) -> f64 {
        self.params.gamma * self.profile.amplitude(t) / self.dc.f_th
    }

    /// Exact integral of epsilon over [a, b].
    pub fn epsilon_integral(&self, a: f64, b: f64) -> f64 {
        self.params.gamma * self.profile.amplitude_integral(a, b) / self.dc.f_th
    }

    /// Period-averaged epsilon.
    pub fn epsilon_mean(&self) -> f64 {
        self.params.gamma * self.profile.mean() / self.dc.f_th
    }

    pub fn regime(&self) -> Regime {
        let ratio = self.profile.mean() / self.dc.f_th;
        if ratio < 1.0 - CRITICAL_BAND {
            Regime::Below
        } else if ratio > 1.0 + CRITICAL_BAND {
            Regime::Above
        } else {
            Regime::Critical
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2_params() -> SystemParams {
        SystemParams::new(1.0, 25.0, 5e-4).unwrap()
    }

    #[test]
    fn derived_constants_fig2() {
        let dc = fig2_params().derive_constants();
        assert_eq!(dc.lambda, 1e-8);
        assert_eq!(dc.f_th, 5e4);
        assert_eq!(dc.lambda_over_gamma, 1e-8);
    }

    #[test]
    fn derived_constants_identity_and_scaled() {
        let dc = SystemParams::new(1.0, 1.0, 1.0).unwrap().derive_constants();
        assert_eq!(dc.lambda, 1.0);
        assert_eq!(dc.f_th, 1.0);
        let dc = SystemParams::new(2.0, 50.0, 1e-3).unwrap().derive_constants();
        assert!((dc.lambda - 2e-8).abs() < 1e-22);
        assert_eq!(dc.f_th, 1e5);
    }

    #[test]
    fn rejects_non_positive_rates() {
        assert!(SystemParams::new(0.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, -2.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn pump_amplitude_cases() {
        let h = PumpProfile::Harmonic {
            f0: 1.0,
            f1: 0.5,
            delta: 2.0,
        };
        assert_eq!(h.amplitude(0.0), 1.5);
        assert!((h.amplitude(std::f64::consts::FRAC_PI_2) - 0.5).abs() < 1e-15);
        let p = PumpProfile::PulseTrain {
            f_l: 2.0,
            t1: 0.01,
            t2: 1.0,
        };
        assert_eq!(p.amplitude(0.5), 0.0);
        assert_eq!(p.amplitude(0.005), 2.0);
        // half-open pulse interval
        assert_eq!(p.amplitude(0.01), 0.0);
    }

    #[test]
    fn pump_mean_cases() {
        let f_th = 5e4;
        let h = PumpProfile::Harmonic {
            f0: 3.0 * f_th,
            f1: 1.2 * 3.0 * f_th,
            delta: 2.0,
        };
        assert_eq!(h.mean(), 3.0 * f_th);
        let p = PumpProfile::PulseTrain {
            f_l: 111.1 * f_th,
            t1: 0.01,
            t2: 1.0,
        };
        assert!((p.mean() / f_th - 1.1).abs() < 1e-12);
        assert_eq!(PumpProfile::Constant { f0: 7.0 }.mean(), 7.0);
    }

    #[test]
    fn epsilon_at_threshold_is_gamma() {
        let params = fig2_params();
        let dc = params.derive_constants();
        let m = Model::new(params, PumpProfile::Constant { f0: dc.f_th }).unwrap();
        assert!((m.epsilon(0.3) - params.gamma).abs() < 1e-14);
        let m3 = Model::new(params, PumpProfile::Constant { f0: 3.0 * dc.f_th }).unwrap();
        assert!((m3.epsilon(0.0) - 3.0 * params.gamma).abs() < 1e-13);
        let m0 = Model::new(params, PumpProfile::Constant { f0: 0.0 }).unwrap();
        assert_eq!(m0.epsilon(1.0), 0.0);
    }

    #[test]
    fn regime_classification() {
        let params = fig2_params();
        let f_th = params.derive_constants().f_th;
        let mk = |f0: f64| Model::new(params, PumpProfile::Constant { f0 }).unwrap();
        assert_eq!(mk(3.0 * f_th).regime(), Regime::Above);
        assert_eq!(mk(0.8 * f_th).regime(), Regime::Below);
        assert_eq!(mk(f_th).regime(), Regime::Critical);
    }

    #[test]
    fn pulse_on_time_negative_arguments() {
        // over a full period the on-time is t1 regardless of sign
        let (t1, t2) = (0.3, 0.7);
        let p = PumpProfile::PulseTrain {
            f_l: 1.0,
            t1,
            t2,
        };
        assert!((p.amplitude_integral(-1.0, 0.0) - 0.3).abs() < 1e-14);
        // pulse on [-1, -0.7): overlap with [-0.85, -0.6] is 0.15
        assert!((p.amplitude_integral(-0.85, -0.6) - 0.15).abs() < 1e-14);
    }

    #[test]
    fn breakpoints_cover_edges() {
        let p = PumpProfile::PulseTrain {
            f_l: 1.0,
            t1: 0.01,
            t2: 1.0,
        };
        let bp = p.breakpoints(-1.2, 1.2);
        assert!(bp.contains(&0.0) && bp.contains(&0.01));
        assert!(bp.iter().all(|&x| x > -1.2 && x < 1.2));
        let mut sorted = bp.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(bp, sorted);
    }
}
