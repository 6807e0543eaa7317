//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use nopo::exec::ExecMode;
use nopo::positive_p::{ensemble_run, moment_residual_check, McConfig};
use nopo::scan::{frequency_sweep, scan_vmin, ProfileFamily};
use nopo::semiclassical::{
    meanfield_ode, photon_number_harmonic, photon_number_quadrature, SemiclassicalTrace,
    SAMPLES_PER_PERIOD,
};
use nopo::variance::{to_output, variance_ode, vmin_pulsed, ClosedForm};
use nopo::{Model, PumpProfile, Regime, SystemParams};

const F_TH: f64 = 5e4;

fn params() -> SystemParams {
    SystemParams::new(1.0, 25.0, 5e-4).unwrap()
}

fn model(profile: PumpProfile) -> Model {
    Model::new(params(), profile).unwrap()
}

fn report(num: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {num:02} {name}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {num:02} {name}: {detail}");
}

#[test]
fn a01_threshold_constants() {
    let dc = params().derive_constants();
    let pass = dc.lambda == 1e-8 && dc.f_th == 5e4 && dc.lambda_over_gamma == 1e-8;
    report(
        1,
        "threshold constants",
        pass,
        &format!("lambda={} f_th={}", dc.lambda, dc.f_th),
    );
}

#[test]
fn a02_constant_pump_photon_number() {
    let p = params();
    let mut worst = 0.0f64;
    for ratio in [1.5, 2.0, 3.0, 5.0] {
        let f0 = ratio * F_TH;
        let m = model(PumpProfile::Constant { f0 });
        let expected = to_output((f0 - F_TH) / p.k, p.gamma);
        let n_quad = to_output(photon_number_quadrature(&m, 0.3).unwrap(), p.gamma);
        let trace = meanfield_ode(&m, 64).unwrap();
        let n_ode = to_output(trace.n_at(0.5), p.gamma);
        worst = worst
            .max((n_quad / expected - 1.0).abs())
            .max((n_ode / expected - 1.0).abs());
    }
    report(
        2,
        "constant-pump photon number",
        worst < 1e-6,
        &format!("worst relative deviation {worst:.3e}"),
    );
}

#[test]
fn a03_variance_checkpoints() {
    let gamma = params().gamma;
    let mut detail = String::new();
    let mut pass = true;
    let mut check = |label: &str, got: f64, expected: f64, tol: f64| {
        let err = (got - expected).abs();
        if err >= tol {
            pass = false;
            detail.push_str(&format!("{label}: got {got} expected {expected}; "));
        }
    };

    // below threshold, eps = 0.8 gamma: V = gamma/(gamma+eps)
    let m = model(PumpProfile::Constant { f0: 0.8 * F_TH });
    let tr = variance_ode(&m, &meanfield_ode(&m, 64).unwrap()).unwrap();
    let cf = ClosedForm::new(&m).unwrap().v_at(0.0).unwrap();
    check("below ode", tr.v_min, 5.0 / 9.0, 1e-8);
    check("below closed form", cf, 5.0 / 9.0, 1e-8);

    // eps -> gamma^-: limiting squeezing 0.5
    let eps = 1.0 - 1e-5;
    let m = model(PumpProfile::Constant { f0: eps * F_TH });
    let tr = variance_ode(&m, &meanfield_ode(&m, 64).unwrap()).unwrap();
    check("limit ode", tr.v_min, gamma / (gamma + eps), 1e-8);
    check("limit value", tr.v_min, 0.5, 1e-5);

    // above threshold, eps = 3 gamma: V = (3 eps - gamma)/(4 eps) = 2/3
    let m = model(PumpProfile::Constant { f0: 3.0 * F_TH });
    let n0 = meanfield_ode(&m, 64).unwrap();
    let tr = variance_ode(&m, &n0).unwrap();
    let cf = ClosedForm::new(&m).unwrap().v_at(0.0).unwrap();
    check("above ode", tr.v_min, 2.0 / 3.0, 1e-8);
    check("above closed form", cf, 2.0 / 3.0, 1e-8);

    report(3, "variance checkpoints", pass, &detail);
}

#[test]
fn a04_harmonic_specialization_equivalence() {
    let mut rng = ChaCha12Rng::seed_from_u64(4242);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let f0 = rng.gen_range(1.2..4.0) * F_TH;
        let f1 = rng.gen_range(0.0..0.8) * f0;
        let delta = rng.gen_range(0.5..20.0);
        let m = model(PumpProfile::Harmonic { f0, f1, delta });
        assert_eq!(m.regime(), Regime::Above);
        let period = m.period();
        for j in 0..8 {
            let t = period * j as f64 / 8.0;
            let a = photon_number_harmonic(&m, t).unwrap();
            let b = photon_number_quadrature(&m, t).unwrap();
            worst = worst.max((a / b - 1.0).abs());
        }
    }
    report(
        4,
        "harmonic/general photon-number equivalence",
        worst < 1e-6,
        &format!("worst relative deviation {worst:.3e}"),
    );
}

#[test]
fn a05_epr_under_modulation() {
    let f_bar = 3.0 * F_TH;
    let modulated = model(PumpProfile::Harmonic {
        f0: f_bar,
        f1: 1.2 * f_bar,
        delta: 2.0,
    });
    let tr_mod = variance_ode(&modulated, &meanfield_ode(&modulated, SAMPLES_PER_PERIOD).unwrap())
        .unwrap();
    let plain = model(PumpProfile::Harmonic {
        f0: f_bar,
        f1: 0.0,
        delta: 2.0,
    });
    let tr_plain =
        variance_ode(&plain, &meanfield_ode(&plain, SAMPLES_PER_PERIOD).unwrap()).unwrap();
    let plain_min = tr_plain.v.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = tr_mod.v_min < 0.5 && plain_min >= 0.5 + 1e-6;
    report(
        5,
        "EPR under modulation",
        pass,
        &format!("modulated v_min={} unmodulated min={plain_min}", tr_mod.v_min),
    );
}

#[test]
fn a06_pulsed_closed_form() {
    // The closed form assumes the near-threshold photon branch (n0 = 0)
    // and idealizes the pulse as pure deamplification; the neglected
    // in-pulse source term gamma/(gamma + eps_L) shifts V_min by about
    // T1/T2 relative at eps_L*T1 ~ 1, so the achievable agreement at
    // T1/T2 = 0.01 tightens from ~7% near threshold to <1% at T1/T2 = 1e-3.
    let run = |t1: f64, t2: f64, ratio: f64| -> (f64, f64) {
        let f_l = ratio * F_TH * (t1 + t2) / t1;
        let m = model(PumpProfile::PulseTrain { f_l, t1, t2 });
        let trace = SemiclassicalTrace::trivial(&m, SAMPLES_PER_PERIOD);
        let tr = variance_ode(&m, &trace).unwrap();
        let closed = vmin_pulsed(&m).unwrap().v_min;
        (tr.v_min, closed)
    };
    let mut pass = true;
    let mut detail = String::new();
    for (ratio, tol) in [(0.9, 0.05), (1.0, 0.07), (1.1, 0.07)] {
        let (ode, closed) = run(0.01, 1.0, ratio);
        let rel = (ode / closed - 1.0).abs();
        if rel >= tol {
            pass = false;
        }
        detail.push_str(&format!("fbar={ratio}: ode {ode:.5} closed {closed:.5}; "));
    }
    let (ode, closed) = run(1e-3, 1.0, 0.9);
    let rel = (ode / closed - 1.0).abs();
    if rel >= 0.01 {
        pass = false;
    }
    detail.push_str(&format!("T1/T2=1e-3: ode {ode:.6} closed {closed:.6}"));
    report(6, "pulsed closed form", pass, &detail);
}

#[test]
fn a07_modulation_depth_ordering() {
    let p = params();
    let grid: Vec<f64> = (0..8).map(|i| 1.05 + (3.0 - 1.05) * i as f64 / 7.0).collect();
    let families = [
        ProfileFamily::Harmonic {
            f1_ratio: 0.0,
            delta: 2.0,
        },
        ProfileFamily::Harmonic {
            f1_ratio: 0.75,
            delta: 2.0,
        },
        ProfileFamily::Harmonic {
            f1_ratio: 2.0,
            delta: 2.0,
        },
    ];
    let results: Vec<_> = families
        .iter()
        .map(|fam| scan_vmin(&p, *fam, &grid, ExecMode::Parallel).unwrap())
        .collect();
    let mut pass = true;
    let mut detail = String::new();
    for i in 0..grid.len() {
        let v: Vec<f64> = results
            .iter()
            .map(|r| {
                assert!(r.rows[i].error.is_none(), "{:?}", r.rows[i].error);
                r.rows[i].v_min
            })
            .collect();
        if !(v[2] < v[1] && v[1] < v[0]) {
            pass = false;
            detail.push_str(&format!("fbar/fth={}: {:?}; ", grid[i], v));
        }
    }
    report(7, "modulation-depth ordering", pass, &detail);
}

#[test]
fn a08_frequency_resonance() {
    // f1 = 0.4 f_bar keeps eps(t) above threshold for every phase, so the
    // slow-modulation limit is adiabatic and stays inside the linearized
    // theory's validity; with deeper modulation the slow sweep crosses
    // threshold and the linearized V_min is no longer meaningful there.
    let res = frequency_sweep(&params(), 3.0, 0.4, &[0.01, 2.0, 100.0], ExecMode::Parallel)
        .unwrap();
    for row in &res.rows {
        assert!(row.error.is_none(), "{:?}", row.error);
    }
    let v_slow = res.rows[0].v_min;
    let v_res = res.rows[1].v_min;
    let v_fast = res.rows[2].v_min;
    let pass = v_res < v_slow.min(v_fast);
    report(
        8,
        "frequency resonance",
        pass,
        &format!("v_min(0.01)={v_slow} v_min(2)={v_res} v_min(100)={v_fast}"),
    );
}

fn mc_run(profile: PumpProfile, seed: u64) -> (Model, McConfig, nopo::positive_p::EnsembleStats) {
    let m = model(profile);
    let cfg = McConfig::new(10_000, seed);
    let stats = ensemble_run(&m, &cfg).unwrap();
    (m, cfg, stats)
}

fn within_3se_fraction(m: &Model, stats: &nopo::positive_p::EnsembleStats) -> f64 {
    let cf = ClosedForm::new(m).unwrap();
    let mut ok = 0usize;
    for (j, &g) in stats.t_grid.iter().enumerate() {
        let v_cf = cf.v_at(stats.t_start + g).unwrap();
        if (stats.v[j] - v_cf).abs() <= 3.0 * stats.se_v[j] {
            ok += 1;
        }
    }
    ok as f64 / stats.t_grid.len() as f64
}

#[test]
fn a09_monte_carlo_vs_linearized_theory() {
    let (m_c, cfg_c, stats_c) = mc_run(PumpProfile::Constant { f0: 0.8 * F_TH }, 2025);
    let (m_h, cfg_h, stats_h) = mc_run(
        PumpProfile::Harmonic {
            f0: 0.9 * F_TH,
            f1: 0.45 * F_TH,
            delta: 2.0,
        },
        2026,
    );
    let frac_c = within_3se_fraction(&m_c, &stats_c);
    let frac_h = within_3se_fraction(&m_h, &stats_h);
    let esc_c = stats_c.n_escaped as f64 / cfg_c.n_traj as f64;
    let esc_h = stats_h.n_escaped as f64 / cfg_h.n_traj as f64;
    let pass = frac_c >= 0.95 && frac_h >= 0.95 && esc_c < 0.01 && esc_h < 0.01;
    report(
        9,
        "Monte Carlo vs linearized theory",
        pass,
        &format!("within-3se fractions {frac_c:.3}/{frac_h:.3}, escaped {esc_c}/{esc_h}"),
    );

    // criterion 10 piggybacks on the same ensembles
    let rep_c = moment_residual_check(&cfg_c, &stats_c).unwrap();
    let rep_h = moment_residual_check(&cfg_h, &stats_h).unwrap();
    report(
        10,
        "moment-hierarchy residuals",
        rep_c.pass && rep_h.pass,
        &format!(
            "constant {:.3}/{:.3}, harmonic {:.3}/{:.3}",
            rep_c.frac_within_n, rep_c.frac_within_r, rep_h.frac_within_n, rep_h.frac_within_r
        ),
    );
}

#[test]
fn a11_determinism_across_worker_counts() {
    let m = model(PumpProfile::Harmonic {
        f0: 0.9 * F_TH,
        f1: 0.45 * F_TH,
        delta: 2.0,
    });
    let mut cfg = McConfig::new(2048, 7);
    cfg.n_points = 33;
    cfg.n_periods = 1;
    let grid = [1.5, 2.0, 2.5, 3.0];
    let outputs: Vec<(Vec<u8>, Vec<u8>)> = [1usize, 4, 8]
        .iter()
        .map(|&workers| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            pool.install(|| {
                let stats = ensemble_run(&m, &cfg).unwrap();
                let scan = scan_vmin(
                    &params(),
                    ProfileFamily::Harmonic {
                        f1_ratio: 0.75,
                        delta: 2.0,
                    },
                    &grid,
                    ExecMode::Parallel,
                )
                .unwrap();
                (
                    serde_json::to_vec(&stats).unwrap(),
                    serde_json::to_vec(&scan).unwrap(),
                )
            })
        })
        .collect();
    let pass = outputs.windows(2).all(|w| w[0] == w[1]);
    report(
        11,
        "byte-identical outputs across 1/4/8 workers",
        pass,
        "serialized ensemble or scan output differed between worker counts",
    );
}
