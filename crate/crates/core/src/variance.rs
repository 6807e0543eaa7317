//! Linearized two-mode quadrature variance V(t) at the optimal quadrature
//! angle, with vacuum level 1.
//!
//! Two independent routes:
//!
//! * [`variance_ode`] integrates the linearized variance equation to its
//!   periodic attractor. The memory integral over the past photon number
//!   is carried as an auxiliary state `u` obeying `du/dt = n0(t) - 4 gamma u`,
//!   turning the integro-differential equation into a plain ODE.
//! * [`ClosedForm`] evaluates the periodic asymptotic quadrature solution
//!   directly, with the improper integrals reduced exactly to one period
//!   via geometric factors.
//!
//! Classification: V < 1 certifies inseparability, V^2 < 1/4 the EPR
//! criterion.

use serde::Serialize;

use crate::params::{Model, PumpProfile, Regime};
use crate::semiclassical::{self, SemiclassicalTrace};
use crate::{ode, quad, Error};

const ODE_RTOL: f64 = 1e-11;
const ODE_ATOL: f64 = 1e-13;
/// Absolute period-to-period convergence tolerance on V.
pub const PERIODIC_TOL: f64 = 1e-10;
const MAX_PERIODS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    None,
    Inseparable,
    Epr,
}

/// EPR iff V^2 < 1/4, inseparable iff V < 1.
pub fn classify(v: f64) -> Result<Classification, Error> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::NonPositiveVariance(v));
    }
    Ok(if v * v < 0.25 {
        Classification::Epr
    } else if v < 1.0 {
        Classification::Inseparable
    } else {
        Classification::None
    })
}

/// Intracavity quantity -> measured output flux (factor 2 gamma).
pub fn to_output(x: f64, gamma: f64) -> f64 {
    2.0 * gamma * x
}

/// Periodic variance over one period.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceTrace {
    pub t_grid: Vec<f64>,
    pub v: Vec<f64>,
    pub period: f64,
    pub v_min: f64,
    /// Time of the variance minimum, in [0, T).
    pub t_m: f64,
    pub classification: Vec<Classification>,
    pub converged: bool,
    pub periodicity_residual: f64,
}

impl VarianceTrace {
    pub fn v_max(&self) -> f64 {
        self.v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Locate the minimum with parabolic refinement around the grid argmin.
/// Refinement is skipped on non-uniform cells (pulse-edge neighborhoods),
/// where the minimum may sit on a drift kink.
fn refine_min(t_grid: &[f64], v: &[f64], period: f64) -> (f64, f64) {
    let n = t_grid.len();
    let (mut i_min, mut v_min) = (0, f64::INFINITY);
    for (i, &val) in v.iter().enumerate() {
        if val < v_min {
            v_min = val;
            i_min = i;
        }
    }
    let t_m = t_grid[i_min];
    let at = |j: isize| {
        let jj = j.rem_euclid(n as isize) as usize;
        let shift = j.div_euclid(n as isize) as f64 * period;
        (t_grid[jj] + shift, v[jj])
    };
    let (tl, vl) = at(i_min as isize - 1);
    let (tr, vr) = at(i_min as isize + 1);
    let hl = t_m - tl;
    let hr = tr - t_m;
    if (hl - hr).abs() > 1e-9 * period {
        return (v_min, t_m);
    }
    let h = hl;
    let denom = vl - 2.0 * v_min + vr;
    if denom <= 0.0 {
        return (v_min, t_m);
    }
    let shift = 0.5 * h * (vl - vr) / denom;
    if shift.abs() >= h {
        return (v_min, t_m);
    }
    let v_ref = v_min - 0.125 * (vl - vr) * (vl - vr) / denom;
    ((v_ref).min(v_min), (t_m + shift).rem_euclid(period))
}

/// Integrate the linearized variance equation (jointly with the mean-field
/// photon number and the memory state) to the periodic attractor.
///
/// `n0_trace` supplies the starting point of the photon-number branch; for
/// the below-threshold regime pass the all-zero trace.
pub fn variance_ode(model: &Model, n0_trace: &SemiclassicalTrace) -> Result<VarianceTrace, Error> {
    if !n0_trace.converged {
        return Err(Error::Solver {
            what: "variance_ode requires a converged photon-number trace",
            residual: n0_trace.periodicity_residual,
        });
    }
    let gamma = model.params.gamma;
    let lambda = model.dc.lambda;
    let period = model.period();
    let grid = semiclassical::sample_grid(model, semiclassical::SAMPLES_PER_PERIOD);

    // state y = [lambda n / gamma, V, lambda u], all O(1)
    let rhs = |t: f64, y: &[f64; 3]| {
        let eps = model.epsilon(t);
        let [w, v, z] = *y;
        [
            2.0 * (eps - gamma) * w - 2.0 * gamma * w * w,
            -2.0 * (gamma + eps + gamma * w) * v + 2.0 * gamma * w + 2.0 * gamma + 4.0 * gamma * z,
            gamma * w - 4.0 * gamma * z,
        ]
    };
    let w0 = lambda * n0_trace.n_at(0.0) / gamma;
    let mut y = [w0, 1.0, 0.25 * w0];
    let mut prev: Option<Vec<f64>> = None;
    for p in 0..MAX_PERIODS {
        let t_base = p as f64 * period;
        let mut samples = Vec::with_capacity(grid.len());
        let mut t = t_base;
        for &tg in &grid {
            let target = t_base + tg;
            let breaks = model.profile.breakpoints(t, target);
            ode::integrate_segmented(&rhs, t, target, &breaks, &mut y, ODE_RTOL, ODE_ATOL)?;
            t = target;
            samples.push(y[1]);
        }
        let target = t_base + period;
        let breaks = model.profile.breakpoints(t, target);
        ode::integrate_segmented(&rhs, t, target, &breaks, &mut y, ODE_RTOL, ODE_ATOL)?;

        if let Some(prev_samples) = &prev {
            let residual = prev_samples
                .iter()
                .zip(&samples)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if residual < PERIODIC_TOL {
                let classification = samples
                    .iter()
                    .map(|&v| classify(v))
                    .collect::<Result<Vec<_>, _>>()?;
                let (v_min, t_m) = refine_min(&grid, &samples, period);
                return Ok(VarianceTrace {
                    t_grid: grid,
                    v: samples,
                    period,
                    v_min,
                    t_m,
                    classification,
                    converged: true,
                    periodicity_residual: residual,
                });
            }
        }
        prev = Some(samples);
    }
    Err(Error::NoConvergence {
        periods: MAX_PERIODS,
        residual: f64::NAN,
    })
}

/// Cubic Hermite interpolant on a fixed grid.
struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Hermite {
    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(j) => return self.y[j],
            Err(j) => j.clamp(1, n - 1) - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (d0, d1) = (self.m[i] * h, self.m[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }
}

/// Dense periodic representation of n0 over one period, with its cumulative
/// integral and the exponentially-weighted memory integral u, built from
/// the quadrature solution only.
struct PhotonField {
    n0: Hermite,
    /// cumulative integral of n0 from 0, on the same grid
    c: Hermite,
    u: Hermite,
    /// integral of n0 over one full period
    c_period: f64,
    period: f64,
}

impl PhotonField {
    fn build(model: &Model, points: usize) -> Result<Self, Error> {
        let period = model.period();
        let gamma = model.params.gamma;
        // edge-aligned grid over [0, T], endpoints of every pump segment included
        let mut edges = vec![0.0];
        edges.extend(model.profile.breakpoints(0.0, period));
        edges.push(period);
        let mut x = Vec::with_capacity(points + edges.len());
        for seg in edges.windows(2) {
            let frac = (seg[1] - seg[0]) / period;
            let n_cells = ((points as f64 * frac).ceil() as usize).max(8);
            for j in 0..n_cells {
                x.push(seg[0] + (seg[1] - seg[0]) * j as f64 / n_cells as f64);
            }
        }
        x.push(period);
        let y: Vec<f64> = x
            .iter()
            .map(|&t| semiclassical::photon_number_quadrature(model, t))
            .collect::<Result<_, _>>()?;
        // slopes by central differences, one-sided at pump segment edges
        let is_edge = |t: f64| edges.iter().any(|&e| (t - e).abs() < 1e-12 * period);
        let n = x.len();
        let mut m = vec![0.0; n];
        for i in 0..n {
            let left_ok = i > 0 && !is_edge(x[i]);
            let right_ok = i + 1 < n && !is_edge(x[i]);
            m[i] = if left_ok && right_ok {
                (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1])
            } else if right_ok || (i == 0) {
                (y[i + 1] - y[i]) / (x[i + 1] - x[i])
            } else {
                (y[i] - y[i - 1]) / (x[i] - x[i - 1])
            };
        }
        // cumulative integral of the interpolant, cell by cell
        let mut c = vec![0.0; n];
        for i in 1..n {
            let h = x[i] - x[i - 1];
            c[i] = c[i - 1]
                + h * 0.5 * (y[i - 1] + y[i])
                + h * h / 12.0 * (m[i - 1] - m[i]);
        }
        let c_period = c[n - 1];
        let n0 = Hermite { x: x.clone(), y, m };
        // u by the per-cell recurrence u(b) = u(a) e^{-4g h} + int_a^b e^{4g(s-b)} n0(s) ds,
        // then closed periodically: u(0) = A / (1 - e^{-4 gamma T})
        let mut cell = vec![0.0; n];
        for i in 1..n {
            let (a, b) = (x[i - 1], x[i]);
            cell[i] = quad::integrate(
                &|s: f64| (4.0 * gamma * (s - b)).exp() * n0.eval(s),
                a,
                b,
                1e-12,
                1e-18,
            );
        }
        let decay_full = (-4.0 * gamma * period).exp();
        let mut a_full = 0.0;
        for i in 1..n {
            let h = x[i] - x[i - 1];
            a_full = a_full * (-4.0 * gamma * h).exp() + cell[i];
        }
        let u0 = a_full / (1.0 - decay_full);
        let mut u = vec![0.0; n];
        u[0] = u0;
        for i in 1..n {
            let h = x[i] - x[i - 1];
            u[i] = u[i - 1] * (-4.0 * gamma * h).exp() + cell[i];
        }
        let mu: Vec<f64> = (0..n)
            .map(|i| n0.y[i] - 4.0 * gamma * u[i])
            .collect();
        let c_spline = Hermite {
            x: x.clone(),
            y: c,
            m: n0.y.clone(),
        };
        let u_spline = Hermite { x, y: u, m: mu };
        Ok(Self {
            n0: n0,
            c: c_spline,
            u: u_spline,
            c_period,
            period,
        })
    }

    fn wrap(&self, t: f64) -> (f64, f64) {
        let k = (t / self.period).floor();
        (t - k * self.period, k)
    }

    fn n0_at(&self, t: f64) -> f64 {
        let (tw, _) = self.wrap(t);
        self.n0.eval(tw).max(0.0)
    }

    fn c_at(&self, t: f64) -> f64 {
        let (tw, k) = self.wrap(t);
        self.c.eval(tw) + k * self.c_period
    }

    fn u_at(&self, t: f64) -> f64 {
        let (tw, _) = self.wrap(t);
        self.u.eval(tw).max(0.0)
    }

    fn mean_n0(&self) -> f64 {
        self.c_period / self.period
    }
}

/// Direct evaluator of the periodic asymptotic variance solution.
pub struct ClosedForm {
    model: Model,
    field: Option<PhotonField>,
}

impl ClosedForm {
    /// Precomputes the dense photon-number field for the above-threshold
    /// branch (below threshold n0 = 0 and no field is needed).
    pub fn new(model: &Model) -> Result<Self, Error> {
        let field = match model.regime() {
            Regime::Above => Some(PhotonField::build(model, 2048)?),
            Regime::Below => None,
            Regime::Critical => return Err(Error::NoNontrivialBranch),
        };
        Ok(Self {
            model: *model,
            field,
        })
    }

    /// V(t) by quadrature over one period with the geometric tail factor.
    pub fn v_at(&self, t: f64) -> Result<f64, Error> {
        let model = &self.model;
        let gamma = model.params.gamma;
        let lambda = model.dc.lambda;
        let period = model.period();
        let eps_bar = model.epsilon_mean();
        let mean_n0 = self.field.as_ref().map_or(0.0, |f| f.mean_n0());
        let q = (-2.0 * (gamma + eps_bar + lambda * mean_n0) * period).exp();

        let phi = |tau: f64| -> f64 {
            let base = gamma * (t - tau) + model.epsilon_integral(tau, t);
            match &self.field {
                Some(f) => base + lambda * (f.c_at(t) - f.c_at(tau)),
                None => base,
            }
        };
        let bracket = |tau: f64| -> f64 {
            match &self.field {
                Some(f) => {
                    gamma + lambda * f.n0_at(tau) + 2.0 * gamma * lambda * f.u_at(tau)
                }
                None => gamma,
            }
        };
        // scale out the exponent maximum (phi may dip negative when the
        // instantaneous pump swings below zero)
        let n_scan = 128;
        let mut m = f64::NEG_INFINITY;
        for j in 0..=n_scan {
            let tau = t - period * j as f64 / n_scan as f64;
            m = m.max(-2.0 * phi(tau));
        }
        let mut edges: Vec<f64> = (0..=16)
            .map(|j| t - period + period * j as f64 / 16.0)
            .collect();
        edges.extend(model.profile.breakpoints(t - period, t));
        let integral = quad::integrate_segmented(
            &|tau: f64| (-2.0 * phi(tau) - m).exp() * bracket(tau),
            t - period,
            t,
            &edges,
            1e-11,
            1e-16,
        );
        let v = 2.0 * m.exp() * integral / (1.0 - q);
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Solver {
                what: "variance closed-form quadrature failed",
                residual: v,
            });
        }
        Ok(v)
    }
}

/// Minimum variance of the pulsed scheme, below and near threshold with
/// short pulses.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PulsedVmin {
    pub v_min: f64,
    /// True when t1/t2 > 0.1 and the short-pulse assumption is strained.
    pub ratio_warning: bool,
}

/// Closed-form V_min for the rectangular pulse train.
pub fn vmin_pulsed(model: &Model) -> Result<PulsedVmin, Error> {
    let (f_l, t1, t2) = match model.profile {
        PumpProfile::PulseTrain { f_l, t1, t2 } => (f_l, t1, t2),
        _ => {
            return Err(Error::Config(
                "vmin_pulsed requires a pulse-train profile".into(),
            ))
        }
    };
    let gamma = model.params.gamma;
    let eps_l = gamma * f_l / model.dc.f_th;
    let a = 2.0 * eps_l * t1;
    let b = 2.0 * gamma * t2;
    let v_min = (-a).exp() * (1.0 - (-b).exp()) / (1.0 - (-b - a).exp());
    Ok(PulsedVmin {
        v_min,
        ratio_warning: t1 / t2 > 0.1,
    })
}
