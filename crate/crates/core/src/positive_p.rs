//! Direct Ito stochastic simulation in the positive-P representation.
//!
//! Each cavity mode is described by two independent complex amplitudes
//! (alpha, beta); beta is not the conjugate of alpha. The correlated noise
//! pair for a diffusion entry d is built from two real unit white noises as
//! `W_1 = c (xi_1 + i xi_2)`, `W_2 = c (xi_1 - i xi_2)` with `c = sqrt(d/2)`
//! (principal branch), which reproduces `<W_1 W_2> = d`, `<W_i^2> = 0`.
//! Four real draws per Euler-Maruyama step: two for the alpha pair, two
//! for the beta pair.
//!
//! Trajectories are independent units of work. They are partitioned into
//! fixed blocks of 256; each trajectory seeds its own counter-based RNG
//! stream (ChaCha12, stream = trajectory index), and block partial sums are
//! reduced in index order, so the ensemble statistics are bitwise identical
//! for any worker count.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::exec::{self, ExecMode};
use crate::params::{Model, Regime};
use crate::Error;

pub const RNG_NAME: &str = "chacha12/stream-per-trajectory";
const BLOCK: usize = 256;

/// Phase-space state of one trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryState {
    pub alpha1: Complex64,
    pub beta1: Complex64,
    pub alpha2: Complex64,
    pub beta2: Complex64,
    pub t: f64,
    pub escaped: bool,
}

impl TrajectoryState {
    pub fn vacuum() -> Self {
        Self {
            alpha1: Complex64::ZERO,
            beta1: Complex64::ZERO,
            alpha2: Complex64::ZERO,
            beta2: Complex64::ZERO,
            t: 0.0,
            escaped: false,
        }
    }
}

/// Noise coefficients (c1, c2) for one correlated pair with diffusion d.
pub fn noise_factorize(d: Complex64) -> (Complex64, Complex64) {
    let c = (d / 2.0).sqrt();
    (c, c)
}

/// Divergence bound for positive-P trajectories.
pub fn escape_bound(model: &Model) -> f64 {
    1e6 * (model.params.gamma / model.dc.lambda).sqrt().max(1.0)
}

/// One Euler-Maruyama step. `draws` are four independent standard normals:
/// two for the alpha noise pair, two for the beta pair.
pub fn sde_step(state: &TrajectoryState, model: &Model, dt: f64, draws: [f64; 4]) -> TrajectoryState {
    if state.escaped {
        return *state;
    }
    let gamma = model.params.gamma;
    let lambda = model.dc.lambda;
    let eps = model.epsilon(state.t);
    let (a1, b1, a2, b2) = (state.alpha1, state.beta1, state.alpha2, state.beta2);

    let (ca, _) = noise_factorize(eps - lambda * a1 * a2);
    let (cb, _) = noise_factorize(eps - lambda * b1 * b2);
    let w_a1 = ca * Complex64::new(draws[0], draws[1]);
    let w_a2 = ca * Complex64::new(draws[0], -draws[1]);
    let w_b1 = cb * Complex64::new(draws[2], draws[3]);
    let w_b2 = cb * Complex64::new(draws[2], -draws[3]);

    let sdt = dt.sqrt();
    let alpha1 = a1 + (-(gamma + lambda * a2 * b2) * a1 + eps * b2) * dt + sdt * w_a1;
    let beta1 = b1 + (-(gamma + lambda * a2 * b2) * b1 + eps * a2) * dt + sdt * w_b1;
    let alpha2 = a2 + (-(gamma + lambda * a1 * b1) * a2 + eps * b1) * dt + sdt * w_a2;
    let beta2 = b2 + (-(gamma + lambda * a1 * b1) * b2 + eps * a1) * dt + sdt * w_b2;

    let bound = escape_bound(model);
    let escaped = [alpha1, beta1, alpha2, beta2]
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm_sqr() > bound * bound);
    TrajectoryState {
        alpha1,
        beta1,
        alpha2,
        beta2,
        t: state.t + dt,
        escaped,
    }
}

/// Monte Carlo run settings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McConfig {
    pub n_traj: usize,
    pub dt: f64,
    pub seed: u64,
    /// Transient discarded before sampling, in units of 1/gamma; rounded up
    /// to a whole number of pump periods.
    pub transient: f64,
    /// Number of (uniform) grid points, endpoints included.
    pub n_points: usize,
    /// Number of pump periods spanned by the grid.
    pub n_periods: usize,
    pub mode: ExecMode,
}

impl McConfig {
    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self {
            n_traj,
            dt: 1e-3,
            seed,
            transient: 8.0,
            n_points: 65,
            n_periods: 2,
            mode: ExecMode::Parallel,
        }
    }
}

/// Per-grid-point complex moments tracked for every trajectory.
const N_MOMENTS: usize = 9;
const M_NPLUS: usize = 0;
const M_R: usize = 1;
const M_CA: usize = 2;
const M_CB: usize = 3;
const M_N1: usize = 4;
const M_N2: usize = 5;
const M_Z: usize = 6;
const M_NPLUS_SQ: usize = 7;
const M_NPLUS_R: usize = 8;

fn sample_moments(s: &TrajectoryState) -> [Complex64; N_MOMENTS] {
    let n1 = s.alpha1 * s.beta1;
    let n2 = s.alpha2 * s.beta2;
    let n_plus = n1 + n2;
    let r = (s.alpha1 - s.beta2) * (s.beta1 - s.alpha2);
    let diff = n1 - n2;
    [
        n_plus,
        r,
        s.alpha1 * s.alpha2,
        s.beta1 * s.beta2,
        n1,
        n2,
        diff * diff + n1 + n2,
        n_plus * n_plus,
        n_plus * r,
    ]
}

#[derive(Clone)]
struct BlockAccum {
    used: u64,
    escaped: u64,
    /// per grid point, per moment: [sum_re, sum_im, sumsq_re, sumsq_im]
    sums: Vec<[[f64; 4]; N_MOMENTS]>,
    /// per interior grid point: hierarchy residuals [r_n, r_r] as [sum_re, sum_im, sumsq_re, sumsq_im]
    res: Vec<[[f64; 4]; 2]>,
}

impl BlockAccum {
    fn new(n_points: usize) -> Self {
        Self {
            used: 0,
            escaped: 0,
            sums: vec![[[0.0; 4]; N_MOMENTS]; n_points],
            res: vec![[[0.0; 4]; 2]; n_points.saturating_sub(2)],
        }
    }

    fn merge(&mut self, other: &BlockAccum) {
        self.used += other.used;
        self.escaped += other.escaped;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for (x, y) in a.iter_mut().zip(b) {
                for k in 0..4 {
                    x[k] += y[k];
                }
            }
        }
        for (a, b) in self.res.iter_mut().zip(&other.res) {
            for (x, y) in a.iter_mut().zip(b) {
                for k in 0..4 {
                    x[k] += y[k];
                }
            }
        }
    }
}

fn accumulate(acc: &mut [[f64; 4]; N_MOMENTS], m: &[Complex64; N_MOMENTS]) {
    for (slot, z) in acc.iter_mut().zip(m) {
        slot[0] += z.re;
        slot[1] += z.im;
        slot[2] += z.re * z.re;
        slot[3] += z.im * z.im;
    }
}

/// Mean and standard error series for one scalar statistic.
#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

/// Ensemble moment estimates with trajectory-level standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    /// Grid offsets from `t_start` (phase-aligned: `t_start` is a whole
    /// number of pump periods).
    pub t_grid: Vec<f64>,
    pub t_start: f64,
    pub period: f64,
    pub n_plus: Vec<Complex64>,
    pub se_n_plus: Vec<f64>,
    pub r: Vec<Complex64>,
    pub se_r_re: Vec<f64>,
    pub se_r_im: Vec<f64>,
    pub cross_alpha: Vec<Complex64>,
    pub cross_beta: Vec<Complex64>,
    pub n1: Vec<Complex64>,
    pub n2: Vec<Complex64>,
    pub se_n1: Vec<f64>,
    pub se_n2: Vec<f64>,
    /// V(t) = 1 + Re<R>.
    pub v: Vec<f64>,
    pub se_v: Vec<f64>,
    /// Finite-difference-vs-hierarchy residual for d<n+>/dt (interior points).
    pub residual_n: Series,
    /// Same for d<R>/dt.
    pub residual_r: Series,
    pub n_trajectories: usize,
    pub n_escaped: usize,
    pub escaped_warning: bool,
    /// Above-threshold positive-P runs are allowed but not validated.
    pub experimental: bool,
    pub seed: u64,
    pub dt: f64,
    pub rng: String,
}

fn run_trajectory(
    model: &Model,
    cfg: &McConfig,
    traj_idx: usize,
    record_times: &[f64],
) -> Option<Vec<[Complex64; N_MOMENTS]>> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    rng.set_stream(traj_idx as u64);
    let normal = StandardNormal;
    let mut state = TrajectoryState::vacuum();
    let mut out = Vec::with_capacity(record_times.len());
    for &target in record_times {
        // split at pump discontinuities, uniform substeps of at most dt
        let mut edges = model.profile.breakpoints(state.t, target);
        edges.push(target);
        for edge in edges {
            let len = edge - state.t;
            if len <= 0.0 {
                continue;
            }
            let n_sub = (len / cfg.dt).ceil() as usize;
            let h = len / n_sub.max(1) as f64;
            for _ in 0..n_sub.max(1) {
                let draws = [
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                ];
                state = sde_step(&state, model, h, draws);
            }
        }
        if state.escaped {
            return None;
        }
        out.push(sample_moments(&state));
    }
    Some(out)
}

/// Run an ensemble of independent trajectories from the vacuum state and
/// collect periodic-regime moments on a uniform grid.
pub fn ensemble_run(model: &Model, cfg: &McConfig) -> Result<EnsembleStats, Error> {
    if cfg.n_traj < 2 {
        return Err(Error::Config("n_traj must be at least 2".into()));
    }
    if cfg.n_points < 3 {
        return Err(Error::Config("n_points must be at least 3".into()));
    }
    if !(cfg.dt > 0.0) {
        return Err(Error::Config("dt must be positive".into()));
    }
    let period = model.period();
    let gamma = model.params.gamma;
    let t_start = (cfg.transient / gamma / period).ceil().max(1.0) * period;
    let span = cfg.n_periods as f64 * period;
    let h = span / (cfg.n_points - 1) as f64;
    let grid: Vec<f64> = (0..cfg.n_points).map(|j| j as f64 * h).collect();
    let record_times: Vec<f64> = grid.iter().map(|&g| t_start + g).collect();
    let eps_at: Vec<f64> = record_times.iter().map(|&t| model.epsilon(t)).collect();
    let lambda = model.dc.lambda;

    let n_blocks = cfg.n_traj.div_ceil(BLOCK);
    let blocks = exec::map_indexed(cfg.mode, n_blocks, |b| {
        let lo = b * BLOCK;
        let hi = ((b + 1) * BLOCK).min(cfg.n_traj);
        let mut acc = BlockAccum::new(cfg.n_points);
        for idx in lo..hi {
            match run_trajectory(model, cfg, idx, &record_times) {
                None => acc.escaped += 1,
                Some(series) => {
                    acc.used += 1;
                    for (j, m) in series.iter().enumerate() {
                        accumulate(&mut acc.sums[j], m);
                    }
                    // hierarchy residuals at interior grid points
                    for j in 1..cfg.n_points - 1 {
                        let eps = eps_at[j];
                        let m = &series[j];
                        let fd_n = (series[j + 1][M_NPLUS] - series[j - 1][M_NPLUS]) / (2.0 * h);
                        let rhs_n = (2.0 * eps - 2.0 * gamma - lambda) * m[M_NPLUS]
                            - lambda * m[M_NPLUS_SQ]
                            - 2.0 * eps * m[M_R]
                            + lambda * m[M_Z];
                        let fd_r = (series[j + 1][M_R] - series[j - 1][M_R]) / (2.0 * h);
                        let rhs_r = -(2.0 * eps + 2.0 * gamma + lambda) * m[M_R]
                            - lambda * m[M_NPLUS_R]
                            - 2.0 * eps
                            + lambda * m[M_Z];
                        for (slot, z) in acc.res[j - 1].iter_mut().zip([fd_n - rhs_n, fd_r - rhs_r])
                        {
                            slot[0] += z.re;
                            slot[1] += z.im;
                            slot[2] += z.re * z.re;
                            slot[3] += z.im * z.im;
                        }
                    }
                }
            }
        }
        acc
    });
    let mut total = BlockAccum::new(cfg.n_points);
    for b in &blocks {
        total.merge(b);
    }

    let n_used = total.used as usize;
    let n_escaped = total.escaped as usize;
    let frac = n_escaped as f64 / cfg.n_traj as f64;
    if frac > 0.10 {
        return Err(Error::EscapedFraction { fraction: frac });
    }
    if n_used < 2 {
        return Err(Error::Config("fewer than 2 surviving trajectories".into()));
    }

    let nf = n_used as f64;
    let mean_se = |slot: &[f64; 4]| -> (Complex64, f64, f64) {
        let mean = Complex64::new(slot[0] / nf, slot[1] / nf);
        let var_re = ((slot[2] / nf - mean.re * mean.re) / (nf - 1.0)).max(0.0);
        let var_im = ((slot[3] / nf - mean.im * mean.im) / (nf - 1.0)).max(0.0);
        (mean, var_re.sqrt(), var_im.sqrt())
    };

    let mut stats = EnsembleStats {
        t_grid: grid,
        t_start,
        period,
        n_plus: Vec::new(),
        se_n_plus: Vec::new(),
        r: Vec::new(),
        se_r_re: Vec::new(),
        se_r_im: Vec::new(),
        cross_alpha: Vec::new(),
        cross_beta: Vec::new(),
        n1: Vec::new(),
        n2: Vec::new(),
        se_n1: Vec::new(),
        se_n2: Vec::new(),
        v: Vec::new(),
        se_v: Vec::new(),
        residual_n: Series {
            mean: Vec::new(),
            se: Vec::new(),
        },
        residual_r: Series {
            mean: Vec::new(),
            se: Vec::new(),
        },
        n_trajectories: n_used,
        n_escaped,
        escaped_warning: frac > 0.01,
        experimental: model.regime() == Regime::Above,
        seed: cfg.seed,
        dt: cfg.dt,
        rng: RNG_NAME.to_string(),
    };
    for point in &total.sums {
        let (n_plus, se_np, _) = mean_se(&point[M_NPLUS]);
        let (r, se_r_re, se_r_im) = mean_se(&point[M_R]);
        let (ca, _, _) = mean_se(&point[M_CA]);
        let (cb, _, _) = mean_se(&point[M_CB]);
        let (n1, se_n1, _) = mean_se(&point[M_N1]);
        let (n2, se_n2, _) = mean_se(&point[M_N2]);
        stats.n_plus.push(n_plus);
        stats.se_n_plus.push(se_np);
        stats.r.push(r);
        stats.se_r_re.push(se_r_re);
        stats.se_r_im.push(se_r_im);
        stats.cross_alpha.push(ca);
        stats.cross_beta.push(cb);
        stats.n1.push(n1);
        stats.n2.push(n2);
        stats.se_n1.push(se_n1);
        stats.se_n2.push(se_n2);
        stats.v.push(1.0 + r.re);
        stats.se_v.push(se_r_re);
    }
    for point in &total.res {
        for (k, series) in [&mut stats.residual_n, &mut stats.residual_r]
            .into_iter()
            .enumerate()
        {
            let (mean, se_re, _) = mean_se(&point[k]);
            series.mean.push(mean.re);
            series.se.push(se_re);
        }
    }
    Ok(stats)
}

/// Variance at an arbitrary quadrature angle from the stored moments.
/// The working frame absorbs the pump phases, so theta = 0 is the optimum
/// and reproduces `stats.v`.
pub fn variance_at_theta(stats: &EnsembleStats, theta: f64) -> Vec<f64> {
    let phase = Complex64::from_polar(1.0, theta);
    stats
        .n_plus
        .iter()
        .zip(stats.cross_alpha.iter().zip(&stats.cross_beta))
        .map(|(np, (ca, cb))| 1.0 + np.re - (ca * phase + cb * phase.conj()).re)
        .collect()
}

/// Moment-hierarchy residual report: fraction of interior grid points
/// where the finite-difference time derivative of <n+> and <R> agrees
/// with the exact hierarchy right-hand side within 3 standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub n_points: usize,
    pub frac_within_n: f64,
    pub frac_within_r: f64,
    pub pass: bool,
}

pub fn moment_residual_check(cfg: &McConfig, stats: &EnsembleStats) -> Result<ResidualReport, Error> {
    let points_per_period = (cfg.n_points - 1) / cfg.n_periods.max(1);
    if points_per_period < 16 {
        return Err(Error::GridTooCoarse { points_per_period });
    }
    let frac_within = |s: &Series| -> f64 {
        let n = s.mean.len();
        let ok = s
            .mean
            .iter()
            .zip(&s.se)
            .filter(|&(&m, &se)| m.abs() <= 3.0 * se || (se == 0.0 && m == 0.0))
            .count();
        ok as f64 / n as f64
    };
    let frac_within_n = frac_within(&stats.residual_n);
    let frac_within_r = frac_within(&stats.residual_r);
    Ok(ResidualReport {
        n_points: stats.residual_n.mean.len(),
        frac_within_n,
        frac_within_r,
        pass: frac_within_n >= 0.95 && frac_within_r >= 0.95,
    })
}
