//! Command-line front end: configuration, presets and artifacts.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, eigen iteration), 2
//! invalid configuration or usage, 3 divergence.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{bound_vs_measurement, resolvent_bound, resolvent_bound_exact, BoundConfig};
use crate::discretization::{assemble_generator_capped, GeneratorMatrix, DEFAULT_MAX_DENSE_NODES};
use crate::model::DampingConfig;
use crate::spectral::{
    eigenmode_residual, resolvent_scan, resonant_eigenmode, spectrum, strong_stability_verdict, RESONANCE_TOL,
};

use config::{Format, RunConfig, SweepConfig, CONFIG_HELP};
use output::{create_dir, fmt_f64, write_csv, write_json};
use presets::Target;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solution diverged at step {step}")]
    Divergence { step: usize },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence { .. } => 3,
            CliError::Io { .. } | CliError::Runtime(_) => 1,
        }
    }
}

/// Environment variable capping the cell count of dense eigen work.
pub const MAX_DENSE_ENV: &str = "PLSIM_MAX_DENSE_N";

pub fn dense_cap() -> Result<usize, CliError> {
    match std::env::var(MAX_DENSE_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{MAX_DENSE_ENV} must be a positive integer, got `{s}`"))),
        Err(_) => Ok(DEFAULT_MAX_DENSE_NODES),
    }
}

#[derive(Debug, Parser)]
#[command(name = "plsim", version, about = "Damped piezoelectric beam in the Lorenz gauge", after_long_help = CONFIG_HELP)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time-domain run: energy.csv, snapshots/, summary.json
    #[command(after_long_help = CONFIG_HELP)]
    Simulate(ConfigArgs),
    /// Pinned benchmark configurations
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Eigenvalues of the discrete generator
    Spectrum(ConfigArgs),
    /// Resolvent norms along the imaginary axis
    Resolvent {
        #[arg(long, default_value_t = 200.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Explicit resolvent bound constants
    Bounds {
        /// Poincare constant (default 2L/pi)
        #[arg(long)]
        poincare: Option<f64>,
        /// Coercivity scalar k (default: middle of the admissible window)
        #[arg(long)]
        k_coercivity: Option<f64>,
        /// Evaluate in exact rational arithmetic (needs --poincare)
        #[arg(long)]
        exact: bool,
        /// Also scan the resolvent up to this lambda and compare
        #[arg(long)]
        compare: Option<f64>,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        #[arg(long, default_value_t = 2.0)]
        slack: f64,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Resonance test and strong-stability verdict
    Resonance {
        #[arg(long, default_value_t = 1000)]
        n_max: u32,
        /// Relative tolerance on the resonance condition
        #[arg(long, default_value_t = RESONANCE_TOL)]
        tol: f64,
        /// Only eigenvalues with |Im| below this enter the verdict
        #[arg(long, default_value_t = 50.0)]
        lambda_max: f64,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Cartesian parameter sweep of `simulate`
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker count (overrides the config)
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides outputs.directory)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_cells: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Damping coefficients as `a,b,c`
    #[arg(long, value_parser = parse_damping)]
    damping: Option<DampingConfig>,
    /// Also write SVG plots
    #[arg(long)]
    svg: bool,
    /// Print the effective configuration as JSON and exit
    #[arg(long)]
    dump_config: bool,
}

fn parse_damping(s: &str) -> Result<DampingConfig, String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [a, b, c] => DampingConfig::new(a, b, c).map_err(|e| e.to_string()),
        _ => Err(format!("expected a,b,c, got `{s}`")),
    }
}

impl ConfigArgs {
    fn resolve(&self, base: RunConfig) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => base,
        };
        if let Some(d) = &self.out {
            cfg.outputs.directory = d.clone();
        }
        if let Some(n) = self.n_cells {
            cfg.grid.n_cells = n;
        }
        if let Some(dt) = self.dt {
            cfg.integrator.dt = dt;
        }
        if let Some(t) = self.t_end {
            cfg.integrator.t_end = t;
        }
        if let Some(d) = self.damping {
            cfg.damping = d;
        }
        if self.svg && !cfg.outputs.wants(Format::Svg) {
            cfg.outputs.formats.push(Format::Svg);
        }
        Ok(cfg)
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("plsim: {e}");
            e.exit_code()
        }
    }
}

fn generator(cfg: &RunConfig) -> Result<GeneratorMatrix, CliError> {
    cfg.validate()?;
    let cap = dense_cap()?;
    let params = cfg.physical()?;
    let grid = cfg.build_grid(&params)?;
    assemble_generator_capped(&params, &cfg.damping, &grid, cap).map_err(|e| CliError::Config(e.to_string()))
}

fn dumped(args: &ConfigArgs, cfg: &RunConfig) -> bool {
    if args.dump_config {
        println!("{}", cfg.to_json());
    }
    args.dump_config
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(args) => {
            let cfg = args.resolve(RunConfig::default())?;
            if dumped(&args, &cfg) {
                return Ok(());
            }
            let res = run::run(&cfg)?;
            run::write_artifacts(&cfg.outputs.directory, &cfg, &res)?;
            let s = &res.summary;
            println!(
                "case {}: E(0) = {}, E(t_end) = {}, epsilon_hat = {}, balance residual max = {}",
                s.case,
                s.energy_initial.total,
                s.energy_final.total,
                s.decay_fit.epsilon_hat,
                s.balance_residual_max
            );
            Ok(())
        }
        Command::Reproduce { target, cfg: args } => {
            let mut base = args.resolve(RunConfig::default())?;
            if args.out.is_none() && args.config.is_none() {
                let name = match target {
                    Target::FigureCase1 => "figure-case1",
                    Target::FigureCase5 => "figure-case5",
                    Target::FigureEt => "figure-Et",
                    Target::OpenProblem => "open-problem",
                };
                base.outputs.directory = base.outputs.directory.join(name);
            }
            if !base.outputs.wants(Format::Svg) {
                base.outputs.formats.push(Format::Svg);
            }
            if dumped(&args, &base) {
                return Ok(());
            }
            base.validate()?;
            let checks = presets::reproduce(target, &base, &base.outputs.directory, dense_cap()?)?;
            for c in checks {
                println!("{} {}", if c.pass { "ok  " } else { "FAIL" }, c.name);
            }
            Ok(())
        }
        Command::Spectrum(args) => {
            let cfg = args.resolve(RunConfig::default())?;
            if dumped(&args, &cfg) {
                return Ok(());
            }
            let gen = generator(&cfg)?;
            let report = spectrum(&gen).map_err(|e| CliError::Runtime(e.to_string()))?;
            let dir = &cfg.outputs.directory;
            create_dir(dir)?;
            let rows = report.eigenvalues.iter().map(|z| vec![fmt_f64(z.re), fmt_f64(z.im)]);
            write_csv(&dir.join("spectrum.csv"), &["re", "im"], rows)?;
            write_json(&dir.join("spectrum.json"), &report)?;
            println!("case {}: spectral abscissa = {}", report.damping_case, report.spectral_abscissa);
            Ok(())
        }
        Command::Resolvent { lambda_max, samples, cfg: args } => {
            let cfg = args.resolve(RunConfig::default())?;
            if dumped(&args, &cfg) {
                return Ok(());
            }
            let gen = generator(&cfg)?;
            let scan = resolvent_scan(&gen, lambda_max, samples).map_err(|e| CliError::Config(e.to_string()))?;
            let dir = &cfg.outputs.directory;
            create_dir(dir)?;
            write_scan_csv(&dir.join("resolvent.csv"), &scan)?;
            write_json(&dir.join("resolvent.json"), &ScanSummary::new(&cfg, &scan))?;
            match scan.sup_norm {
                Some(s) => println!("sup norm = {s} at lambda = {}", scan.sup_location),
                None => println!("singular shift at lambda = {}", scan.sup_location),
            }
            Ok(())
        }
        Command::Bounds { poincare, k_coercivity, exact, compare, samples, slack, cfg: args } => {
            let cfg = args.resolve(RunConfig::default())?;
            if dumped(&args, &cfg) {
                return Ok(());
            }
            let params = cfg.physical()?;
            let bc = BoundConfig { poincare_constant: poincare, k_coercivity };
            let report = resolvent_bound(&params, &cfg.damping, &bc).map_err(|e| CliError::Config(e.to_string()))?;
            let dir = &cfg.outputs.directory;
            create_dir(dir)?;
            write_json(&dir.join("bounds.json"), &report)?;
            println!("{} = {}", report.final_name, report.final_constant);
            if exact {
                let cp = poincare.ok_or_else(|| CliError::Config("--exact needs --poincare".into()))?;
                let ex = resolvent_bound_exact(&params, &cfg.damping, cp).map_err(|e| CliError::Config(e.to_string()))?;
                write_json(&dir.join("bounds_exact.json"), &ex)?;
                println!("{} = {} (exact)", report.final_name, ex.final_constant);
            }
            if let Some(lambda_max) = compare {
                let gen = generator(&cfg)?;
                let scan = resolvent_scan(&gen, lambda_max, samples).map_err(|e| CliError::Config(e.to_string()))?;
                let cmp = bound_vs_measurement(&report, &scan, &cfg.damping, slack)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                write_json(&dir.join("bounds_comparison.json"), &cmp)?;
                println!("measured sup {:?} vs {} x {}: {}", cmp.sup_norm, slack, report.final_constant, if cmp.pass { "within" } else { "exceeds" });
            }
            Ok(())
        }
        Command::Resonance { n_max, tol, lambda_max, cfg: args } => {
            let cfg = args.resolve(RunConfig::default())?;
            if dumped(&args, &cfg) {
                return Ok(());
            }
            cfg.validate()?;
            let params = cfg.physical()?;
            let grid = cfg.build_grid(&params)?;
            let cap = dense_cap()?;
            let lhs = params.mu() * params.rho() / (params.xi() * params.eps3() * params.alpha());
            let index = crate::spectral::resonance_check(&params, n_max, tol * lhs.max(1.0));
            let verdict = strong_stability_verdict(&params, &cfg.damping, &grid, tol * lhs.max(1.0), lambda_max, cap)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let mode = match index {
                Some(n) if grid.n_cells() <= cap => {
                    let m = resonant_eigenmode(&params, n, &grid).map_err(|e| CliError::Runtime(e.to_string()))?;
                    let gen = generator(&cfg)?;
                    Some(ModeReport { n, lambda: m.lambda, residual: eigenmode_residual(&gen, &m) })
                }
                _ => None,
            };
            let report = ResonanceReport { resonance_index: index, verdict, eigenmode: mode };
            let dir = &cfg.outputs.directory;
            create_dir(dir)?;
            write_json(&dir.join("resonance.json"), &report)?;
            match index {
                Some(n) => println!("resonant: n = {n}"),
                None => println!("no resonance for n <= {n_max}"),
            }
            Ok(())
        }
        Command::Sweep { config, out, jobs } => {
            let sweep = SweepConfig::load(&config)?;
            let runs = sweep.expand()?;
            let dir = out.unwrap_or_else(|| sweep.base.outputs.directory.clone());
            create_dir(&dir)?;
            let workers = jobs.or(sweep.parallelism).unwrap_or(0);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let results: Vec<Result<run::RunSummary, CliError>> = pool.install(|| {
                runs.par_iter()
                    .map(|(name, cfg)| {
                        let res = run::run(cfg)?;
                        run::write_artifacts(&dir.join(name), cfg, &res)?;
                        Ok(res.summary)
                    })
                    .collect()
            });
            write_sweep_index(&dir.join("sweep.csv"), &runs, &results)?;
            let failed: Vec<&CliError> = results.iter().filter_map(|r| r.as_ref().err()).collect();
            println!("{} runs, {} failed", runs.len(), failed.len());
            match failed.first() {
                None => Ok(()),
                Some(CliError::Divergence { step }) => Err(CliError::Divergence { step: *step }),
                Some(e) => Err(CliError::Runtime(e.to_string())),
            }
        }
    }
}

#[derive(Serialize)]
struct ScanSummary {
    damping: DampingConfig,
    n_cells: usize,
    samples: usize,
    lambda_max: f64,
    sup_norm: Option<f64>,
    sup_location: f64,
}

impl ScanSummary {
    fn new(cfg: &RunConfig, scan: &crate::spectral::ResolventScan) -> Self {
        Self {
            damping: cfg.damping,
            n_cells: cfg.grid.n_cells,
            samples: scan.lambda_samples.len(),
            lambda_max: scan.lambda_samples.last().copied().unwrap_or(0.0),
            sup_norm: scan.sup_norm,
            sup_location: scan.sup_location,
        }
    }
}

#[derive(Serialize)]
struct ModeReport {
    n: u32,
    lambda: f64,
    /// `||(i lambda - A_h) U_h|| / ||U_h||` in the energy norm.
    residual: f64,
}

#[derive(Serialize)]
struct ResonanceReport {
    resonance_index: Option<u32>,
    verdict: crate::spectral::StabilityVerdict,
    eigenmode: Option<ModeReport>,
}

/// `lambda,norm`; singular shifts are written as `inf`.
fn write_scan_csv(path: &Path, scan: &crate::spectral::ResolventScan) -> Result<(), CliError> {
    let rows = scan
        .lambda_samples
        .iter()
        .zip(&scan.norms)
        .map(|(l, n)| vec![fmt_f64(*l), fmt_f64(n.unwrap_or(f64::INFINITY))]);
    write_csv(path, &["lambda", "norm"], rows)
}

fn write_sweep_index(
    path: &Path,
    runs: &[(String, RunConfig)],
    results: &[Result<run::RunSummary, CliError>],
) -> Result<(), CliError> {
    let opt = |x: Option<f64>| x.map_or(String::new(), fmt_f64);
    let rows = runs.iter().zip(results).map(|((name, cfg), r)| {
        let mut row = vec![
            name.clone(),
            fmt_f64(cfg.damping.a),
            fmt_f64(cfg.damping.b),
            fmt_f64(cfg.damping.c),
            cfg.grid.n_cells.to_string(),
            fmt_f64(cfg.integrator.dt),
        ];
        match r {
            Ok(s) => row.extend([
                "ok".to_string(),
                fmt_f64(s.energy_initial.total),
                fmt_f64(s.energy_final.total),
                opt(s.energy_ratio),
                fmt_f64(s.decay_fit.epsilon_hat),
                fmt_f64(s.decay_fit.r_squared),
                fmt_f64(s.balance_residual_max),
            ]),
            Err(e) => {
                row.push(format!("error: {e}"));
                row.extend(std::iter::repeat_n(String::new(), 6));
            }
        }
        row
    });
    write_csv(
        path,
        &["run", "a", "b", "c", "n_cells", "dt", "status", "E0", "E_end", "energy_ratio", "epsilon_hat", "r_squared", "balance_residual_max"],
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damping_flag() {
        assert_eq!(parse_damping("1,0,0.5").unwrap(), DampingConfig { a: 1.0, b: 0.0, c: 0.5 });
        assert!(parse_damping("1,0").is_err());
        assert!(parse_damping("1,-1,0").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Divergence { step: 4 }.exit_code(), 3);
        assert_eq!(main_with_args(["plsim", "reproduce", "figure-case9"]), 2);
        assert_eq!(main_with_args(["plsim", "simulate", "--n-cells", "4", "--dump-config"]), 0);
        assert_eq!(main_with_args(["plsim", "simulate", "--n-cells", "4", "--t-end", "0.01"]), 2);
    }
}
