//! Property-based and randomized cross-validation suites: structural
//! invariants of the pump profiles, agreement of independent solution
//! routes on random parameter sets, scaling laws, and Monte Carlo
//! consistency checks.

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use nopo::exec::ExecMode;
use nopo::positive_p::{ensemble_run, McConfig};
use nopo::semiclassical::{meanfield_ode, photon_number_quadrature, SAMPLES_PER_PERIOD};
use nopo::variance::{variance_ode, ClosedForm};
use nopo::{Model, PumpProfile, Regime, SystemParams};

const F_TH: f64 = 5e4;

fn params() -> SystemParams {
    SystemParams::new(1.0, 25.0, 5e-4).unwrap()
}

fn model(profile: PumpProfile) -> Model {
    Model::new(params(), profile).unwrap()
}

fn profile_strategy() -> impl Strategy<Value = PumpProfile> {
    prop_oneof![
        (1e2..1e6f64).prop_map(|f0| PumpProfile::Constant { f0 }),
        (1e2..1e6f64, 0.0..1.5f64, 0.05..50.0f64)
            .prop_map(|(f0, r, delta)| PumpProfile::Harmonic { f0, f1: r * f0, delta }),
        (1e2..1e7f64, 1e-3..0.5f64, 0.2..5.0f64)
            .prop_map(|(f_l, t1, t2)| PumpProfile::PulseTrain { f_l, t1, t2 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pump_is_periodic(profile in profile_strategy(), t in -20.0..20.0f64, k in -3i32..4) {
        let m = model(profile);
        let period = m.period();
        let shifted = t + k as f64 * period;
        let a = m.profile.amplitude(t);
        let b = m.profile.amplitude(shifted);
        // pulse edges may land within one ulp of the wrap point
        let scale = m.profile.mean().abs().max(1.0);
        prop_assert!((a - b).abs() <= 1e-6 * scale, "f({t})={a} f({shifted})={b}");
    }

    #[test]
    fn mean_matches_integral_over_period(profile in profile_strategy()) {
        let m = model(profile);
        let period = m.period();
        let integral = m.profile.amplitude_integral(0.0, period);
        let mean = m.profile.mean();
        prop_assert!((integral - mean * period).abs() <= 1e-9 * mean.abs().max(1.0) * period);
    }

    #[test]
    fn epsilon_is_linear_in_pump(profile in profile_strategy(), t in -5.0..5.0f64) {
        let m = model(profile);
        let gamma = m.params.gamma;
        let expected = gamma * m.profile.amplitude(t) / m.dc.f_th;
        prop_assert!((m.epsilon(t) - expected).abs() <= 1e-12 * expected.abs().max(1e-12));
    }

    #[test]
    fn epsilon_integral_matches_quadrature_of_epsilon(
        profile in profile_strategy(),
        a in -3.0..3.0f64,
        len in 0.01..4.0f64,
    ) {
        let m = model(profile);
        let b = a + len;
        let exact = m.epsilon_integral(a, b);
        // Riemann-sum cross-check on a fine grid
        let n = 20_000;
        let h = (b - a) / n as f64;
        let approx: f64 = (0..n).map(|i| m.epsilon(a + (i as f64 + 0.5) * h) * h).sum();
        // midpoint rule is O(h^2) on smooth stretches, but a jump of size
        // `jump` crossing a cell contributes up to jump * h
        let (n_jumps, jump) = match m.profile {
            PumpProfile::PulseTrain { f_l, t1, t2 } => (
                2.0 * (len / (t1 + t2) + 1.0),
                m.params.gamma * f_l / m.dc.f_th,
            ),
            _ => (0.0, 0.0),
        };
        let scale = m.epsilon_mean().abs().max(1e-6) * len;
        let tol = 1e-3 * scale + n_jumps * jump * h;
        prop_assert!((exact - approx).abs() <= tol, "exact {exact} approx {approx} tol {tol}");
    }
}

#[test]
fn meanfield_matches_quadrature_on_random_sets() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for _ in 0..20 {
        let f0 = rng.gen_range(1.2..4.0) * F_TH;
        let f1 = rng.gen_range(0.0..0.9) * f0;
        let delta = rng.gen_range(0.8..12.0);
        let m = model(PumpProfile::Harmonic { f0, f1, delta });
        let tr = meanfield_ode(&m, 128).unwrap();
        assert!(tr.converged);
        for (&t, &n) in tr.t_grid.iter().zip(&tr.n0).step_by(17) {
            let nq = photon_number_quadrature(&m, t).unwrap();
            assert!(
                (n / nq - 1.0).abs() < 1e-6,
                "f0={f0} f1={f1} delta={delta} t={t}: ode {n} quad {nq}"
            );
        }
    }
}

#[test]
fn variance_ode_matches_closed_form_on_random_sets() {
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    // below threshold: no photon field, agreement at solver accuracy
    for _ in 0..10 {
        let f0 = rng.gen_range(0.2..0.95) * F_TH;
        let f1 = rng.gen_range(0.0..0.8) * f0;
        let delta = rng.gen_range(0.8..10.0);
        let m = model(PumpProfile::Harmonic { f0, f1, delta });
        let tr = variance_ode(&m, &meanfield_ode(&m, SAMPLES_PER_PERIOD).unwrap()).unwrap();
        let cf = ClosedForm::new(&m).unwrap();
        for (&t, &v) in tr.t_grid.iter().zip(&tr.v).step_by(97) {
            let vc = cf.v_at(t).unwrap();
            assert!(
                (v / vc - 1.0).abs() < 1e-8,
                "below f0={f0} f1={f1} delta={delta} t={t}: ode {v} closed {vc}"
            );
        }
    }
    // above threshold: closed form carries a discretized photon field
    for _ in 0..6 {
        let f0 = rng.gen_range(1.3..3.5) * F_TH;
        let f1 = rng.gen_range(0.0..0.8) * f0;
        let delta = rng.gen_range(1.0..8.0);
        let m = model(PumpProfile::Harmonic { f0, f1, delta });
        assert_eq!(m.regime(), Regime::Above);
        let tr = variance_ode(&m, &meanfield_ode(&m, SAMPLES_PER_PERIOD).unwrap()).unwrap();
        let cf = ClosedForm::new(&m).unwrap();
        for (&t, &v) in tr.t_grid.iter().zip(&tr.v).step_by(127) {
            let vc = cf.v_at(t).unwrap();
            assert!(
                (v / vc - 1.0).abs() < 1e-5,
                "above f0={f0} f1={f1} delta={delta} t={t}: ode {v} closed {vc}"
            );
        }
    }
}

#[test]
fn photon_number_scales_inversely_with_lambda() {
    // same reduced pump f0/f_th and gamma, different k: n0 ~ 1/lambda
    let ratio = 2.5;
    let mut reference: Option<f64> = None;
    for k in [5e-4, 1e-3, 2e-3] {
        let p = SystemParams::new(1.0, 25.0, k).unwrap();
        let dc = p.derive_constants();
        let m = Model::new(p, PumpProfile::Constant { f0: ratio * dc.f_th }).unwrap();
        let n = photon_number_quadrature(&m, 0.0).unwrap();
        let scaled = n * dc.lambda;
        match reference {
            None => reference = Some(scaled),
            Some(r) => assert!((scaled / r - 1.0).abs() < 1e-9, "k={k}: {scaled} vs {r}"),
        }
    }
}

#[test]
fn photon_number_monotone_in_pump() {
    let mut last = 0.0;
    for ratio in [1.2, 1.5, 2.0, 3.0, 4.0, 5.0] {
        let m = model(PumpProfile::Constant { f0: ratio * F_TH });
        let n = photon_number_quadrature(&m, 0.0).unwrap();
        assert!(n > last, "ratio {ratio}: n={n} not above {last}");
        last = n;
    }
}

#[test]
fn mc_bias_shrinks_with_dt() {
    let m = model(PumpProfile::Constant { f0: 0.8 * F_TH });
    let expected = 5.0 / 9.0;
    let run = |dt: f64| {
        let mut cfg = McConfig::new(1500, 99);
        cfg.dt = dt;
        cfg.n_points = 17;
        cfg.n_periods = 1;
        let stats = ensemble_run(&m, &cfg).unwrap();
        let mid = stats.v.len() / 2;
        (stats.v[mid], stats.se_v[mid])
    };
    let (v_coarse, se_c) = run(4e-3);
    let (v_fine, se_f) = run(1e-3);
    let err_c = (v_coarse - expected).abs();
    let err_f = (v_fine - expected).abs();
    assert!(
        err_f <= err_c + 2.0 * (se_c + se_f),
        "dt refinement did not improve agreement: {err_f} vs {err_c} (se {se_f}/{se_c})"
    );
    assert!(err_f < 4.0 * se_f.max(1e-3), "fine run off theory: {err_f}");
}

#[test]
fn mc_mode_symmetry() {
    // the two subharmonic modes are statistically interchangeable
    let m = model(PumpProfile::Harmonic {
        f0: 0.9 * F_TH,
        f1: 0.45 * F_TH,
        delta: 2.0,
    });
    let mut cfg = McConfig::new(3000, 5);
    cfg.n_points = 17;
    cfg.n_periods = 1;
    let stats = ensemble_run(&m, &cfg).unwrap();
    for j in 0..stats.t_grid.len() {
        let d = (stats.n1[j] - stats.n2[j]).re.abs();
        let tol = 4.0 * (stats.se_n1[j] + stats.se_n2[j]) + 1e-9;
        assert!(d <= tol, "point {j}: |n1-n2|={d} > {tol}");
    }
}

#[test]
fn mc_parallel_sequential_identical() {
    let m = model(PumpProfile::Constant { f0: 0.5 * F_TH });
    let mut cfg = McConfig::new(600, 21);
    cfg.n_points = 17;
    cfg.n_periods = 1;
    let a = ensemble_run(&m, &cfg).unwrap();
    cfg.mode = ExecMode::Sequential;
    let b = ensemble_run(&m, &cfg).unwrap();
    assert_eq!(a.v, b.v);
    assert_eq!(a.n_plus, b.n_plus);
    assert_eq!(a.residual_r.mean, b.residual_r.mean);
}
