//! Command-line driver: JSON config in, CSV/JSON artifacts out.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 runtime
//! abort (a simulation blew up or an output could not be written).

use clap::{Parser, Subcommand};
use flocksim::domain::{fmt_f64, make_grid, Domain, Grid};
use flocksim::kernels::KernelSpec;
use flocksim::learning::{fit_report, newton_learn, FitSummary, LearnConfig};
use flocksim::macro_solver::{
    initial_conditions_1d, initial_conditions_2d, series_from_csv, series_to_csv, simulate_macro,
    simulate_macro_general_kernel, DensitySeries, MacroConfig,
};
use flocksim::micro::{
    add_observation_noise, empirical_state, flocking_diagnostics, sample_from_density_1d,
    to_fluctuation_frame, verlet_step, ParticleEnsemble,
};
use flocksim::{bench, Error};
use serde::Deserialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "flocksim", about = "Swarm dynamics simulation and kernel-parameter recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Thread budget for parallel-capable inner loops
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the particle model and emit trajectory, empirical density, and flocking diagnostics
    SimulateMicro,
    /// Integrate the hydrodynamic model and emit the density series and conservation report
    SimulateMacro,
    /// Fit kernel parameters to an observed density series
    Learn,
    /// Time the non-local-term evaluation methods over a range of grid sizes
    Bench,
    /// Sample an interaction kernel profile ψ(x_fixed, ·) on a grid
    KernelEval,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MicroRunConfig {
    n: usize,
    dt: f64,
    t0: f64,
    tf: f64,
    kernel: KernelSpec,
    /// Cells per axis of the empirical-density grid.
    ns: usize,
    half_width: f64,
    seed: u64,
    #[serde(default)]
    noise_variance: f64,
    #[serde(default = "one")]
    save_every: usize,
    /// Work in the fluctuation frame (recommended; matches the hydrodynamic model).
    #[serde(default = "yes")]
    fluctuation_frame: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MacroRunConfig {
    dim: usize,
    ns: usize,
    half_width: f64,
    kernel: KernelSpec,
    t0: f64,
    tf: f64,
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default = "default_cfl")]
    cfl: f64,
    #[serde(default = "one")]
    save_every: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LearnRunConfig {
    /// DensitySeries CSV produced by simulate-micro or simulate-macro.
    observations: PathBuf,
    #[serde(default = "default_theta0")]
    theta0: [f64; 2],
    #[serde(default = "default_fd_step")]
    fd_step: f64,
    #[serde(default = "default_max_iters")]
    max_iters: usize,
    #[serde(default = "default_grad_tol")]
    grad_tol: f64,
    #[serde(default = "default_hessian_floor")]
    hessian_floor: f64,
    forward_tf: f64,
    #[serde(default)]
    forward_dt: Option<f64>,
    #[serde(default = "one")]
    forward_save_every: usize,
    /// Reference kernel drawn alongside the fitted profile, if known.
    #[serde(default)]
    reference_kernel: Option<KernelSpec>,
    /// Try additional starting points scaled around θ⁰ and keep the best fit.
    #[serde(default)]
    multistart: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchRunConfig {
    dim: usize,
    sizes: Vec<usize>,
    #[serde(default = "default_repeats")]
    repeats: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelEvalConfig {
    kernel: KernelSpec,
    ns: usize,
    half_width: f64,
    /// First coordinates held fixed; one output column block per entry.
    x_fixed: Vec<f64>,
    #[serde(default = "one_dim")]
    dim: usize,
}

fn one() -> usize {
    1
}
fn one_dim() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_cfl() -> f64 {
    flocksim::fv::DEFAULT_CFL
}
fn default_theta0() -> [f64; 2] {
    [1.0, 0.5]
}
fn default_fd_step() -> f64 {
    1e-4
}
fn default_max_iters() -> usize {
    20
}
fn default_grad_tol() -> f64 {
    1e-6
}
fn default_hessian_floor() -> f64 {
    1e-6
}
fn default_repeats() -> usize {
    5
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Option<PathBuf>) -> Result<T, CliError> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required for this command".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn json_pretty<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))
}

fn trajectory_csv(times: &[f64], snapshots: &[ParticleEnsemble]) -> String {
    let dim = snapshots[0].dim;
    let mut s = String::from(if dim == 1 {
        "t,particle,x,v\n"
    } else {
        "t,particle,x,y,vx,vy\n"
    });
    for (t, snap) in times.iter().zip(snapshots) {
        for i in 0..snap.len() {
            s.push_str(&fmt_f64(*t));
            s.push_str(&format!(",{i}"));
            for c in 0..dim {
                s.push(',');
                s.push_str(&fmt_f64(snap.positions[i * dim + c]));
            }
            for c in 0..dim {
                s.push(',');
                s.push_str(&fmt_f64(snap.velocities[i * dim + c]));
            }
            s.push('\n');
        }
    }
    s
}

fn cmd_simulate_micro(cli: &Cli) -> Result<(), CliError> {
    let mut cfg: MicroRunConfig = load_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cfg.n == 0 {
        return Err(CliError::Config("particle count must be positive".into()));
    }
    if !(cfg.dt > 0.0 && cfg.tf > cfg.t0) {
        return Err(CliError::Config("need dt > 0 and tf > t0".into()));
    }
    cfg.kernel.validate()?;
    let domain = Domain::new(1, cfg.half_width)?;
    let grid = make_grid(domain, cfg.ns)?;
    let l = domain.width();
    let rho0 = move |x: f64| (PI / (2.0 * l)) * (PI * x / l).cos();
    let u0 = move |x: f64| -(PI * x / l).sin();
    let mut ens = sample_from_density_1d(&rho0, &u0, domain, cfg.n, cfg.seed)?;
    if cfg.fluctuation_frame {
        ens = to_fluctuation_frame(&ens)?;
    }

    let steps = ((cfg.tf - cfg.t0) / cfg.dt).round() as usize;
    let mut times = vec![cfg.t0];
    let mut snapshots = vec![ens.clone()];
    for step in 1..=steps {
        ens = verlet_step(&ens, &cfg.kernel, cfg.dt).map_err(|e| CliError::Runtime(e.to_string()))?;
        if step % cfg.save_every == 0 || step == steps {
            times.push(cfg.t0 + step as f64 * cfg.dt);
            snapshots.push(ens.clone());
        }
    }

    // observed (possibly noisy) empirical densities on the requested grid
    let mut series = DensitySeries { times: times.clone(), states: Vec::new(), has_momentum: true };
    for (i, snap) in snapshots.iter().enumerate() {
        let observed = add_observation_noise(snap, cfg.noise_variance, cfg.seed ^ (i as u64 + 1))?;
        series.states.push(empirical_state(&observed, grid));
    }
    let report = flocking_diagnostics(&times, &snapshots, &cfg.kernel)?;

    write_artifact(&cli.out, "trajectory.csv", &trajectory_csv(&times, &snapshots))?;
    write_artifact(&cli.out, "density.csv", &series_to_csv(&series))?;
    write_artifact(&cli.out, "flocking.json", &json_pretty(&report)?)?;
    Ok(())
}

fn macro_config_from(cfg: &MacroRunConfig) -> Result<(MacroConfig, Grid), CliError> {
    let grid = make_grid(Domain::new(cfg.dim, cfg.half_width)?, cfg.ns)?;
    let mc = MacroConfig {
        grid,
        kernel: cfg.kernel.clone(),
        t0: cfg.t0,
        tf: cfg.tf,
        dt: cfg.dt,
        cfl: cfg.cfl,
        save_every: cfg.save_every,
    };
    Ok((mc, grid))
}

fn cmd_simulate_macro(cli: &Cli) -> Result<(), CliError> {
    let cfg: MacroRunConfig = load_config(&cli.config)?;
    cfg.kernel.validate()?;
    let (mc, grid) = macro_config_from(&cfg)?;
    let init = match cfg.dim {
        1 => initial_conditions_1d(grid),
        _ => initial_conditions_2d(grid),
    };
    let (series, report) = if matches!(
        cfg.kernel,
        KernelSpec::ScreenedPoisson1d { .. } | KernelSpec::ScreenedPoisson2d { .. }
    ) {
        simulate_macro(&mc, &init)
    } else {
        simulate_macro_general_kernel(&mc, &init)
    }
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(t) = report.aborted_at {
        eprintln!("warning: simulation aborted at t = {t}; partial series written");
    }
    write_artifact(&cli.out, "density.csv", &series_to_csv(&series))?;
    write_artifact(&cli.out, "conservation.json", &json_pretty(&report)?)?;
    if report.aborted_at.is_some() {
        return Err(CliError::Runtime("simulation aborted".into()));
    }
    Ok(())
}

fn cmd_learn(cli: &Cli) -> Result<(), CliError> {
    let cfg: LearnRunConfig = load_config(&cli.config)?;
    let text = std::fs::read_to_string(&cfg.observations).map_err(|e| {
        CliError::Config(format!("cannot read observations {}: {e}", cfg.observations.display()))
    })?;
    let observations = series_from_csv(&text)?;
    let grid = observations.states[0].grid();
    let forward = MacroConfig {
        grid,
        // placeholder; overwritten by θ inside the objective
        kernel: KernelSpec::ScreenedPoisson1d {
            k: cfg.theta0[0],
            lambda: cfg.theta0[1],
            l: grid.domain().width(),
        },
        t0: observations.times[0],
        tf: cfg.forward_tf,
        dt: cfg.forward_dt,
        cfl: flocksim::fv::DEFAULT_CFL,
        save_every: cfg.forward_save_every,
    };
    let learn_cfg = LearnConfig {
        theta0: cfg.theta0,
        fd_step: cfg.fd_step,
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        hessian_floor: cfg.hessian_floor,
        observations,
        forward,
    };
    let mut best = newton_learn(&learn_cfg)?;
    if cfg.multistart {
        for scale in [[2.0, 2.0], [0.5, 2.0]] {
            let mut alt = learn_cfg.clone();
            alt.theta0 = [cfg.theta0[0] * scale[0], cfg.theta0[1] * scale[1]];
            let state = newton_learn(&alt)?;
            if state.objective < best.objective {
                best = state;
            }
        }
    }
    let report = fit_report(&best, &learn_cfg, cfg.reference_kernel.as_ref())?;

    write_artifact(&cli.out, "fit.json", &json_pretty(&FitSummary::from(&best))?)?;
    let mut te = String::from("iter,objective_log2\n");
    for (i, v) in &report.training_error {
        te.push_str(&format!("{i},{}\n", fmt_f64(*v)));
    }
    write_artifact(&cli.out, "training_error.csv", &te)?;
    let mut kp = String::from(if report.kernel_profile[0].2.is_some() {
        "x,psi_fitted,psi_reference\n"
    } else {
        "x,psi_fitted\n"
    });
    for (x, fit_v, ref_v) in &report.kernel_profile {
        kp.push_str(&fmt_f64(*x));
        kp.push(',');
        kp.push_str(&fmt_f64(*fit_v));
        if let Some(r) = ref_v {
            kp.push(',');
            kp.push_str(&fmt_f64(*r));
        }
        kp.push('\n');
    }
    write_artifact(&cli.out, "kernel_profile.csv", &kp)?;
    Ok(())
}

fn cmd_bench(cli: &Cli) -> Result<(), CliError> {
    let cfg: BenchRunConfig = load_config(&cli.config)?;
    let mut all = Vec::new();
    for &ns in &cfg.sizes {
        all.extend(bench::run_bench(cfg.dim, ns, cfg.repeats, cli.threads)?);
    }
    write_artifact(&cli.out, "bench.csv", &bench::results_to_csv(&all))?;
    for (pair, cross) in bench::crossover_report(&all) {
        match cross {
            Some(ns) => eprintln!("{pair}: fast method wins from Ns = {ns}"),
            None => eprintln!("{pair}: no crossover on the benchmarked range"),
        }
    }
    Ok(())
}

fn cmd_kernel_eval(cli: &Cli) -> Result<(), CliError> {
    let cfg: KernelEvalConfig = load_config(&cli.config)?;
    cfg.kernel.validate()?;
    let grid = make_grid(Domain::new(1, cfg.half_width)?, cfg.ns)?;
    let mut s = String::from("x_fixed,s,psi\n");
    for &xf in &cfg.x_fixed {
        for i in 0..cfg.ns {
            let x = grid.center(i);
            let value = match cfg.dim {
                1 => cfg.kernel.eval_1d(xf, x),
                _ => cfg.kernel.eval_2d([xf, 0.0], [x, 0.0]),
            };
            let text = match value {
                Ok(v) => fmt_f64(v),
                Err(e) => {
                    eprintln!("warning: psi({xf}, {x}) is singular: {e}");
                    "nan".to_string()
                }
            };
            s.push_str(&format!("{},{},{text}\n", fmt_f64(xf), fmt_f64(x)));
        }
    }
    write_artifact(&cli.out, "kernel_eval.csv", &s)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 1 {
        // best effort; a pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let result = match cli.command {
        Command::SimulateMicro => cmd_simulate_micro(&cli),
        Command::SimulateMacro => cmd_simulate_macro(&cli),
        Command::Learn => cmd_learn(&cli),
        Command::Bench => cmd_bench(&cli),
        Command::KernelEval => cmd_kernel_eval(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(3)
        }
    }
}
