//! Periodic semiclassical mean photon number of the subharmonic modes.
//!
//! Two independent routes to the same quantity: quadrature of the
//! over-transient integral solution, and integration of the noiseless
//! mean-field ODE `dn/dt = 2(eps(t) - gamma) n - 2 lambda n^2` to its
//! periodic attractor.
//!
//! The improper integral over the infinite past is reduced exactly to one
//! period: the exponent decreases by `2(eps_bar - gamma) T` per period, so
//! the tail sums as a geometric series with ratio
//! `q = exp(-2(eps_bar - gamma) T) < 1` above threshold.

use serde::Serialize;

use crate::params::{Model, PumpProfile, Regime};
use crate::{ode, quad, Error};

/// Default number of uniform samples per period.
pub const SAMPLES_PER_PERIOD: usize = 512;
/// Relative period-to-period convergence tolerance for the mean-field ODE.
pub const PERIODIC_TOL: f64 = 1e-8;
const ODE_RTOL: f64 = 1e-10;
const MAX_PERIODS: usize = 20_000;

/// Periodic mean photon number n0(t) sampled over one period.
#[derive(Debug, Clone, Serialize)]
pub struct SemiclassicalTrace {
    /// Sample times in [0, T).
    pub t_grid: Vec<f64>,
    /// Mean intracavity photon number per subharmonic mode.
    pub n0: Vec<f64>,
    pub period: f64,
    pub converged: bool,
    /// max |n0(t+T) - n0(t)| over the grid (absolute).
    pub periodicity_residual: f64,
    /// dn/dt at each node with the pump taken just before the node.
    slope_in: Vec<f64>,
    /// dn/dt at each node with the pump taken just after the node.
    slope_out: Vec<f64>,
}

/// Exact mean-field slopes at the grid nodes, one-sided in the pump so
/// that pulse edges keep their left/right derivatives distinct.
fn exact_slopes(model: &Model, grid: &[f64], n0: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let gamma = model.params.gamma;
    let lambda = model.dc.lambda;
    let nudge = 1e-9 * model.period();
    let rhs = |eps: f64, n: f64| 2.0 * (eps - gamma) * n - 2.0 * lambda * n * n;
    let slope_in = grid
        .iter()
        .zip(n0)
        .map(|(&t, &n)| rhs(model.epsilon(t - nudge), n))
        .collect();
    let slope_out = grid
        .iter()
        .zip(n0)
        .map(|(&t, &n)| rhs(model.epsilon(t + nudge), n))
        .collect();
    (slope_in, slope_out)
}

impl SemiclassicalTrace {
    /// The trivial branch n0 = 0 (the only stable solution below
    /// threshold, and the reference branch at threshold).
    pub fn trivial(model: &Model, samples_per_period: usize) -> Self {
        let period = model.period();
        let t_grid = sample_grid(model, samples_per_period);
        let n0 = vec![0.0; t_grid.len()];
        let zeros = vec![0.0; t_grid.len()];
        Self {
            t_grid,
            n0,
            period,
            converged: true,
            periodicity_residual: 0.0,
            slope_in: zeros.clone(),
            slope_out: zeros,
        }
    }

    pub fn max_n0(&self) -> f64 {
        self.n0.iter().cloned().fold(0.0, f64::max)
    }

    /// Periodic interpolation (cubic Hermite with exact mean-field slopes).
    pub fn n_at(&self, t: f64) -> f64 {
        let n = self.t_grid.len();
        if n == 0 {
            return 0.0;
        }
        let tw = t.rem_euclid(self.period);
        // locate the cell [t_i, t_{i+1})
        let mut i = match self
            .t_grid
            .binary_search_by(|x| x.partial_cmp(&tw).unwrap())
        {
            Ok(j) => j,
            Err(j) => j.wrapping_sub(1),
        };
        if i >= n {
            i = n - 1;
        }
        let ip = (i + 1) % n;
        let t0 = self.t_grid[i];
        let t1 = if i + 1 == n {
            self.period + self.t_grid[0]
        } else {
            self.t_grid[ip]
        };
        let (y0, y1) = (self.n0[i], self.n0[ip]);
        let h = t1 - t0;
        let s = (tw - t0) / h;
        let d0 = self.slope_out[i] * h;
        let d1 = self.slope_in[ip] * h;
        let s2 = s * s;
        let s3 = s2 * s;
        ((2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1)
            .max(0.0)
    }
}

/// Sample grid over one period, in [0, T). Uniform for smooth profiles;
/// for the pulse train each segment between pump edges gets at least 64
/// points so the short pulse is resolved.
pub fn sample_grid(model: &Model, samples_per_period: usize) -> Vec<f64> {
    let period = model.period();
    let breaks = model.profile.breakpoints(0.0, period);
    if breaks.is_empty() {
        return (0..samples_per_period)
            .map(|j| j as f64 * period / samples_per_period as f64)
            .collect();
    }
    let mut edges = vec![0.0];
    edges.extend(breaks);
    edges.push(period);
    let mut grid = Vec::new();
    for seg in edges.windows(2) {
        let len = seg[1] - seg[0];
        let n = ((samples_per_period as f64 * len / period).round() as usize).max(64);
        for j in 0..n {
            grid.push(seg[0] + len * j as f64 / n as f64);
        }
    }
    grid
}

/// Log-scaled quadrature of exp(exponent) over [-T, 0] with the geometric
/// period factor folded in. Returns the reciprocal photon number already
/// multiplied by 2 lambda, i.e. 1/n0.
fn inverse_photon_number<F: Fn(f64) -> f64>(
    model: &Model,
    exponent: &F,
    breaks: &[f64],
) -> Result<f64, Error> {
    let period = model.period();
    let gamma = model.params.gamma;
    let eps_bar = model.epsilon_mean();
    let q = (-2.0 * (eps_bar - gamma) * period).exp();
    // scale out the maximum of the exponent so the integrand stays in range
    let n_scan = 256;
    let mut m = f64::NEG_INFINITY;
    for j in 0..=n_scan {
        m = m.max(exponent(-period * j as f64 / n_scan as f64));
    }
    for &b in breaks {
        m = m.max(exponent(b));
    }
    // pre-split so narrow peaks cannot slip between panel nodes
    let mut edges: Vec<f64> = (0..=32).map(|j| -period + period * j as f64 / 32.0).collect();
    edges.extend_from_slice(breaks);
    let scaled = quad::integrate_segmented(
        &|tau: f64| (exponent(tau) - m).exp(),
        -period,
        0.0,
        &edges,
        1e-11,
        1e-16 * period,
    );
    if !scaled.is_finite() || scaled <= 0.0 {
        return Err(Error::Solver {
            what: "photon-number quadrature failed",
            residual: scaled,
        });
    }
    let inv = 2.0 * model.dc.lambda * m.exp() * scaled / (1.0 - q);
    Ok(inv)
}

/// n0(t) from the over-transient integral solution (general profile).
///
/// Below threshold the only stable solution is n0 = 0; in the critical
/// band the nontrivial branch is undefined and an error is returned.
pub fn photon_number_quadrature(model: &Model, t: f64) -> Result<f64, Error> {
    match model.regime() {
        Regime::Below => return Ok(0.0),
        Regime::Critical => return Err(Error::NoNontrivialBranch),
        Regime::Above => {}
    }
    let gamma = model.params.gamma;
    let exponent = |tau: f64| 2.0 * (model.epsilon_integral(t, t + tau) - gamma * tau);
    let period = model.period();
    // pump breakpoints in absolute time [t - T, t], shifted to tau
    let breaks: Vec<f64> = model
        .profile
        .breakpoints(t - period, t)
        .into_iter()
        .map(|x| x - t)
        .collect();
    let inv = inverse_photon_number(model, &exponent, &breaks)?;
    Ok(1.0 / inv)
}

/// n0(t) for the harmonic profile from the explicit sin-difference
/// integrand (independent specialization of the general integral).
pub fn photon_number_harmonic(model: &Model, t: f64) -> Result<f64, Error> {
    let (f0, f1, delta) = match model.profile {
        PumpProfile::Harmonic { f0, f1, delta } => (f0, f1, delta),
        _ => {
            return Err(Error::Config(
                "photon_number_harmonic requires a harmonic profile".into(),
            ))
        }
    };
    match model.regime() {
        Regime::Below => return Ok(0.0),
        Regime::Critical => return Err(Error::NoNontrivialBranch),
        Regime::Above => {}
    }
    let gamma = model.params.gamma;
    let f_th = model.dc.f_th;
    let drive = 2.0 * gamma * (f0 / f_th - 1.0);
    let wiggle = 2.0 * gamma * f1 / (delta * f_th);
    let exponent =
        |tau: f64| drive * tau + wiggle * ((delta * (t + tau)).sin() - (delta * t).sin());
    let inv = inverse_photon_number(model, &exponent, &[])?;
    Ok(1.0 / inv)
}

/// Integrate the noiseless mean-field equation to its periodic attractor.
pub fn meanfield_ode(model: &Model, samples_per_period: usize) -> Result<SemiclassicalTrace, Error> {
    match model.regime() {
        Regime::Below => return Ok(SemiclassicalTrace::trivial(model, samples_per_period)),
        Regime::Critical => return Err(Error::NoNontrivialBranch),
        Regime::Above => {}
    }
    let gamma = model.params.gamma;
    let lambda = model.dc.lambda;
    let period = model.period();
    let grid = sample_grid(model, samples_per_period);
    let seed = ((model.profile.mean() - model.dc.f_th) / model.params.k).max(1.0);
    let atol = ODE_RTOL * seed;
    let rhs = |t: f64, y: &[f64; 1]| {
        let n = y[0];
        [2.0 * (model.epsilon(t) - gamma) * n - 2.0 * lambda * n * n]
    };

    let mut y = [seed];
    let mut prev: Option<Vec<f64>> = None;
    for p in 0..MAX_PERIODS {
        let t_base = p as f64 * period;
        let mut samples = Vec::with_capacity(grid.len());
        let mut t = t_base;
        for &tg in &grid {
            let target = t_base + tg;
            let breaks = model.profile.breakpoints(t, target);
            ode::integrate_segmented(&rhs, t, target, &breaks, &mut y, ODE_RTOL, atol)?;
            t = target;
            samples.push(y[0]);
        }
        // finish the period
        let target = t_base + period;
        let breaks = model.profile.breakpoints(t, target);
        ode::integrate_segmented(&rhs, t, target, &breaks, &mut y, ODE_RTOL, atol)?;

        if let Some(prev_samples) = &prev {
            let scale = samples.iter().cloned().fold(1e-300, f64::max);
            let residual = prev_samples
                .iter()
                .zip(&samples)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if residual / scale < PERIODIC_TOL {
                let (slope_in, slope_out) = exact_slopes(model, &grid, &samples);
                return Ok(SemiclassicalTrace {
                    t_grid: grid,
                    n0: samples,
                    period,
                    converged: true,
                    periodicity_residual: residual,
                    slope_in,
                    slope_out,
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
