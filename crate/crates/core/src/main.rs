//! Command-line driver: `nopo simulate | scan | mc | check`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nopo::config::RunConfig;
use nopo::positive_p::{ensemble_run, moment_residual_check, ResidualReport, RNG_NAME};
use nopo::scan::{frequency_sweep, log_grid, scan_vmin, validity_check, ProfileFamily, ScanResult};
use nopo::semiclassical::meanfield_ode;
use nopo::variance::{to_output, variance_ode, Classification};
use nopo::{Error, Model};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "nopo", version, about = "NOPO periodically-modulated entanglement simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One-period photon-number and variance traces plus a summary.
    Simulate(CommonOpts),
    /// V_min scan over the mean pump level or the modulation frequency.
    Scan(ScanOpts),
    /// Positive-P Monte Carlo ensemble with moment-hierarchy residuals.
    Mc(CommonOpts),
    /// Linearization-validity check only (JSON on stdout).
    Check(CommonOpts),
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gamma3: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    /// constant | harmonic | pulse_train
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    f0: Option<f64>,
    #[arg(long)]
    f1: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "fL")]
    f_l: Option<f64>,
    #[arg(long = "T1")]
    t1: Option<f64>,
    #[arg(long = "T2")]
    t2: Option<f64>,
    #[arg(long)]
    samples_per_period: Option<usize>,
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    transient: Option<f64>,
    #[arg(long)]
    mc_points: Option<usize>,
    #[arg(long)]
    mc_periods: Option<usize>,
    /// Physical gamma in s^-1 for output-scaled quantities.
    #[arg(long = "gamma-si")]
    gamma_si: Option<f64>,
    /// Force the single-threaded execution path.
    #[arg(long)]
    sequential: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ScanOpts {
    #[command(flatten)]
    common: CommonOpts,
    /// fbar (mean pump over threshold) or delta (modulation frequency).
    #[arg(long, default_value = "fbar")]
    axis: String,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 16)]
    steps: usize,
    /// Log-spaced axis grid.
    #[arg(long)]
    log: bool,
    /// Modulation depth f1/fbar for harmonic families.
    #[arg(long)]
    f1_ratio: Option<f64>,
    /// Mean pump level fbar/f_th for delta sweeps.
    #[arg(long)]
    fbar: Option<f64>,
}

impl CommonOpts {
    fn build_config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! ovr {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })*
            };
        }
        ovr!(gamma, gamma3, k, profile, f0, f1, delta, f_l, t1, t2);
        macro_rules! ovr_plain {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        ovr_plain!(samples_per_period, n_traj, dt, seed, transient, mc_points, mc_periods);
        if self.gamma_si.is_some() {
            cfg.gamma_si = self.gamma_si;
        }
        if self.sequential {
            cfg.sequential = true;
        }
        Ok(cfg)
    }
}

fn file_header(cfg: &RunConfig, rng: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# version: {}", nopo::VERSION);
    let _ = writeln!(s, "# rng: {rng}");
    let _ = writeln!(s, "# config: {}", serde_json::to_string(cfg).unwrap());
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn class_name(c: Classification) -> &'static str {
    match c {
        Classification::None => "none",
        Classification::Inseparable => "inseparable",
        Classification::Epr => "epr",
    }
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    version: &'a str,
    config: &'a RunConfig,
    regime: nopo::Regime,
    v_min: f64,
    t_m: f64,
    epr: bool,
    inseparable: bool,
    validity: nopo::scan::ValidityReport,
    n0_max: f64,
}

fn cmd_simulate(opts: &CommonOpts) -> Result<(), Error> {
    let cfg = opts.build_config()?;
    let model = cfg.model()?;
    let g_out = cfg.output_gamma();
    let n0 = meanfield_ode(&model, cfg.samples_per_period)?;
    let tr = variance_ode(&model, &n0)?;

    let mut photon = file_header(&cfg, "none");
    photon.push_str("t,n0,n0_out\n");
    for (&t, &n) in n0.t_grid.iter().zip(&n0.n0) {
        let _ = writeln!(photon, "{t},{n},{}", to_output(n, g_out));
    }
    write_file(&opts.out, "photon.csv", &photon)?;

    let mut variance = file_header(&cfg, "none");
    variance.push_str("t,V,V_out,classification\n");
    for ((&t, &v), &c) in tr.t_grid.iter().zip(&tr.v).zip(&tr.classification) {
        let _ = writeln!(variance, "{t},{v},{},{}", to_output(v, g_out), class_name(c));
    }
    write_file(&opts.out, "variance.csv", &variance)?;

    let summary = SimulateSummary {
        version: nopo::VERSION,
        config: &cfg,
        regime: model.regime(),
        v_min: tr.v_min,
        t_m: tr.t_m,
        epr: tr.v_min * tr.v_min < 0.25,
        inseparable: tr.v_min < 1.0,
        validity: validity_check(&model),
        n0_max: n0.max_n0(),
    };
    write_file(
        &opts.out,
        "summary.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    println!(
        "simulate: V_min = {:.6} at t_m = {:.6} ({})",
        tr.v_min,
        tr.t_m,
        if summary.epr {
            "EPR"
        } else if summary.inseparable {
            "inseparable"
        } else {
            "separable"
        }
    );
    Ok(())
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    version: &'a str,
    config: &'a RunConfig,
    axis: &'a str,
    argmin: Option<&'a nopo::scan::ScanRow>,
}

fn cmd_scan(opts: &ScanOpts) -> Result<(), Error> {
    let cfg = opts.common.build_config()?;
    let model = cfg.model()?;
    if opts.steps == 0 || opts.from >= opts.to {
        return Err(Error::Config("scan range must satisfy from < to, steps > 0".into()));
    }
    let grid = if opts.log {
        log_grid(opts.from, opts.to, opts.steps)
    } else {
        (0..opts.steps)
            .map(|i| opts.from + (opts.to - opts.from) * i as f64 / (opts.steps - 1).max(1) as f64)
            .collect()
    };
    let params = model.params;
    let mode = cfg.exec_mode();
    let result: ScanResult = match opts.axis.as_str() {
        "fbar" => {
            let family = match cfg.profile.as_str() {
                "constant" => ProfileFamily::Constant,
                "harmonic" => ProfileFamily::Harmonic {
                    f1_ratio: opts
                        .f1_ratio
                        .unwrap_or(if cfg.f0 > 0.0 { cfg.f1 / cfg.f0 } else { 0.0 }),
                    delta: cfg.delta,
                },
                _ => ProfileFamily::PulseTrain {
                    t1: cfg.t1,
                    t2: cfg.t2,
                },
            };
            scan_vmin(&params, family, &grid, mode)?
        }
        "delta" => {
            let fbar = opts
                .fbar
                .unwrap_or(cfg.f0 / model.dc.f_th);
            let f1_ratio = opts
                .f1_ratio
                .unwrap_or(if cfg.f0 > 0.0 { cfg.f1 / cfg.f0 } else { 0.0 });
            frequency_sweep(&params, fbar, f1_ratio, &grid, mode)?
        }
        other => return Err(Error::Config(format!("unknown axis `{other}`"))),
    };

    let mut csv = file_header(&cfg, "none");
    csv.push_str("axis_value,v_min,t_m,n_min,epr,valid,error\n");
    for row in &result.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.axis_value,
            row.v_min,
            row.t_m,
            row.n_min,
            row.epr,
            row.valid,
            row.error.as_deref().unwrap_or("")
        );
    }
    write_file(&opts.common.out, "scan.csv", &csv)?;
    let summary = ScanSummary {
        version: nopo::VERSION,
        config: &cfg,
        axis: &result.axis,
        argmin: result.argmin(),
    };
    write_file(
        &opts.common.out,
        "scan.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    match result.argmin() {
        Some(row) => println!(
            "scan: argmin {} = {} with V_min = {:.6}",
            result.axis, row.axis_value, row.v_min
        ),
        None => println!("scan: no successful rows"),
    }
    Ok(())
}

#[derive(Serialize)]
struct McPoint {
    t: f64,
    v: f64,
    se_v: f64,
    n_plus: f64,
    se_n: f64,
}

#[derive(Serialize)]
struct McOutput<'a> {
    version: &'a str,
    config: &'a RunConfig,
    rng: &'a str,
    seed: u64,
    n_traj: usize,
    dt: f64,
    n_escaped: usize,
    escaped_warning: bool,
    experimental: bool,
    residual_report: Option<ResidualReport>,
    points: Vec<McPoint>,
}

fn cmd_mc(opts: &CommonOpts) -> Result<(), Error> {
    let cfg = opts.build_config()?;
    let model = cfg.model()?;
    let mc = cfg.mc_config();
    let stats = ensemble_run(&model, &mc)?;
    let report = moment_residual_check(&mc, &stats).ok();
    let points = stats
        .t_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| McPoint {
            t,
            v: stats.v[j],
            se_v: stats.se_v[j],
            n_plus: stats.n_plus[j].re,
            se_n: stats.se_n_plus[j],
        })
        .collect();
    let out = McOutput {
        version: nopo::VERSION,
        config: &cfg,
        rng: RNG_NAME,
        seed: stats.seed,
        n_traj: cfg.n_traj,
        dt: stats.dt,
        n_escaped: stats.n_escaped,
        escaped_warning: stats.escaped_warning,
        experimental: stats.experimental,
        residual_report: report,
        points,
    };
    write_file(&opts.out, "mc.json", &serde_json::to_string_pretty(&out).unwrap())?;
    let mid = stats.v.len() / 2;
    println!(
        "mc: {} trajectories ({} escaped), V(mid) = {:.4} +- {:.4}",
        stats.n_trajectories, stats.n_escaped, stats.v[mid], stats.se_v[mid]
    );
    if stats.escaped_warning {
        eprintln!(
            "warning: escaped fraction {:.2}% exceeds 1%",
            100.0 * stats.n_escaped as f64 / cfg.n_traj as f64
        );
    }
    Ok(())
}

fn cmd_check(opts: &CommonOpts) -> Result<(), Error> {
    let cfg = opts.build_config()?;
    let model: Model = cfg.model()?;
    #[derive(Serialize)]
    struct CheckOut {
        regime: nopo::Regime,
        adiabatic_valid: bool,
        linearization_small_parameter: f64,
        validity: nopo::scan::ValidityReport,
    }
    let out = CheckOut {
        regime: model.regime(),
        adiabatic_valid: model.params.adiabatic_valid(),
        linearization_small_parameter: model.dc.lambda_over_gamma,
        validity: validity_check(&model),
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(o) => cmd_simulate(o),
        Cmd::Scan(o) => cmd_scan(o),
        Cmd::Mc(o) => cmd_mc(o),
        Cmd::Check(o) => cmd_check(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParam { .. } => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::from(EXIT_SOLVER),
            }
        }
    }
}
