//! One simulation from a [`RunConfig`] and its artifacts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{energy_balance_residual, fit_decay_rate, DecayFit, EnergyBreakdown};
use crate::discretization::{assemble_time_domain, stencil};
use crate::model::{
    lorenz_gauge_residual, max_abs, state_compatibility_residual, CaseLabel, DampingConfig, DerivedFields, FieldState,
};
use crate::timeintegrator::{simulate, IntegratorError, Trajectory};

use super::config::{Format, InitialConditions, RunConfig};
use super::output::{create_dir, fmt_f64, line_chart, write_csv, write_json, write_state_csv, write_text, Series};
use super::CliError;

/// Relative per-step slack of the monotonicity check.
pub const MONOTONE_SLACK: f64 = 1e-8;

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub case: CaseLabel,
    pub damping: DampingConfig,
    pub n_cells: usize,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub initial_conditions: InitialConditions,
    pub energy_initial: EnergyBreakdown,
    pub energy_final: EnergyBreakdown,
    /// `E(t_end) / E(0)`; `None` when `E(0) = 0`.
    pub energy_ratio: Option<f64>,
    /// `max |E(t) - E(0)| / E(0)`.
    pub max_relative_drift: Option<f64>,
    /// Largest `E^{n+1} - E^n`, absolute.
    pub max_step_increase: f64,
    /// No step increases the energy by more than `1e-8 E(0)`.
    pub nonincreasing: bool,
    pub decay_fit: DecayFit,
    /// `max |(E^{n+1} - E^{n-1})/(2 dt) + D^n|` over interior steps.
    pub balance_residual_max: f64,
    /// Largest instantaneous dissipation rate `D^n`.
    pub dissipation_max: f64,
    /// Compatibility residual `xi u2_x - u3 + (gamma/eps3) v_x` of the initial data.
    pub compatibility_residual_max: f64,
    /// Lorenz gauge residual `-xi theta_x + eta - (xi eps3/mu) phi_t` of the initial data.
    pub gauge_residual_max: f64,
    /// The same at `t_end`.
    pub gauge_residual_final_max: f64,
}

pub struct RunResult {
    pub summary: RunSummary,
    pub trajectory: Trajectory<FieldState>,
    /// `balance[k]` belongs to step `k + 1`.
    pub balance: Vec<f64>,
}

/// Runs the configured simulation; nothing is written.
pub fn run(cfg: &RunConfig) -> Result<RunResult, CliError> {
    cfg.validate()?;
    let params = cfg.physical()?;
    let grid = cfg.build_grid(&params)?;
    let system = assemble_time_domain(&params, &cfg.damping, &grid).map_err(|e| CliError::Config(e.to_string()))?;
    let initial = cfg.initial_state(&params, &grid)?;
    let traj = simulate(&system, &initial, &cfg.integrator).map_err(|e| match e {
        IntegratorError::Divergence { step } => CliError::Divergence { step },
        IntegratorError::InvalidConfig(m) | IntegratorError::Shape(m) => CliError::Config(m),
        other => CliError::Runtime(other.to_string()),
    })?;
    let totals = traj.totals();
    let balance = energy_balance_residual(&traj).map_err(|e| CliError::Runtime(e.to_string()))?;
    let fit = fit_decay_rate(&traj.times, &totals, cfg.window()).map_err(|e| CliError::Config(e.to_string()))?;
    let e0 = totals[0];
    let max_step_increase = totals.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let drift = totals.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    let rel = |x: f64| (e0 > 0.0).then(|| x / e0);
    let residuals = |s: &FieldState| -> Result<(f64, f64), CliError> {
        let c = state_compatibility_residual(s, &params).map_err(|e| CliError::Runtime(e.to_string()))?;
        let g = lorenz_gauge_residual(s, &params).map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok((max_abs(&c), max_abs(&g)))
    };
    let (compat0, gauge0) = residuals(&initial)?;
    let (_, gauge1) = residuals(traj.final_state())?;
    let summary = RunSummary {
        case: cfg.damping.label(),
        damping: cfg.damping,
        n_cells: grid.n_cells(),
        dt: cfg.integrator.dt,
        t_end: *traj.times.last().expect("at least one step"),
        steps: traj.times.len() - 1,
        initial_conditions: cfg.initial_conditions.clone(),
        energy_initial: traj.energy_series[0],
        energy_final: *traj.energy_series.last().expect("at least one step"),
        energy_ratio: rel(totals[totals.len() - 1]),
        max_relative_drift: rel(drift),
        max_step_increase,
        nonincreasing: max_step_increase <= MONOTONE_SLACK * e0,
        decay_fit: fit,
        balance_residual_max: max_abs(&balance),
        dissipation_max: max_abs(&traj.dissipation_series),
        compatibility_residual_max: compat0,
        gauge_residual_max: gauge0,
        gauge_residual_final_max: gauge1,
    };
    Ok(RunResult { summary, trajectory: traj, balance })
}

/// `energy.csv`, `snapshots/`, `fields_xt.csv`, `summary.json` and the
/// optional SVG plots, according to `cfg.outputs.formats`.
pub fn write_artifacts(dir: &Path, cfg: &RunConfig, res: &RunResult) -> Result<(), CliError> {
    create_dir(dir)?;
    let traj = &res.trajectory;
    let out = &cfg.outputs;
    if out.wants(Format::Csv) {
        write_energy_csv(&dir.join("energy.csv"), traj, &res.balance, out.energy_stride)?;
        let snaps = dir.join("snapshots");
        create_dir(&snaps)?;
        for (step, state) in traj.snapshot_steps.iter().zip(&traj.states) {
            write_state_csv(&snaps.join(format!("step_{step:08}.csv")), state)?;
        }
        write_fields_xt(&dir.join("fields_xt.csv"), traj)?;
    }
    if out.wants(Format::Json) {
        write_json(&dir.join("summary.json"), &res.summary)?;
    }
    if out.wants(Format::Svg) {
        write_energy_svg(dir, traj, &res.summary)?;
        let last = traj.final_state();
        let x = last.grid.nodes();
        let series: Vec<Series> = ["v", "phi", "theta", "eta"]
            .iter()
            .zip([&last.v, &last.phi, &last.theta, &last.eta])
            .map(|(name, y)| Series { name, x, y })
            .collect();
        let title = format!("fields at t = {}", last.time);
        if let Some(svg) = line_chart(&title, "x", "value", &series, false) {
            write_text(&dir.join("snapshot_final.svg"), &svg)?;
        }
    }
    Ok(())
}

/// `t,E_total,E_kinetic,E_potential,E_magnetic,E_electrical,balance_residual`;
/// the residual cell is empty at the first and last step.
pub fn write_energy_csv(path: &Path, traj: &Trajectory<FieldState>, balance: &[f64], stride: usize) -> Result<(), CliError> {
    let last = traj.times.len() - 1;
    let rows = (0..=last).filter(|n| n % stride == 0 || *n == last).map(|n| {
        let e = &traj.energy_series[n];
        let r = if n >= 1 && n < last { fmt_f64(balance[n - 1]) } else { String::new() };
        vec![
            fmt_f64(traj.times[n]),
            fmt_f64(e.total),
            fmt_f64(e.kinetic),
            fmt_f64(e.potential),
            fmt_f64(e.magnetic),
            fmt_f64(e.electrical),
            r,
        ]
    });
    write_csv(
        path,
        &["t", "E_total", "E_kinetic", "E_potential", "E_magnetic", "E_electrical", "balance_residual"],
        rows,
    )
}

/// Space-time table of the plotted quantities `v_t, v_x, u1, u2, u3` at
/// every snapshot.
fn write_fields_xt(path: &Path, traj: &Trajectory<FieldState>) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for s in &traj.states {
        let d = DerivedFields::from_state(s).map_err(|e| CliError::Runtime(e.to_string()))?;
        let v_x = stencil::d1_second_order(&s.v, s.grid.h());
        for (j, &x) in s.grid.nodes().iter().enumerate() {
            rows.push(vec![
                fmt_f64(s.time),
                fmt_f64(x),
                fmt_f64(s.v_t[j]),
                fmt_f64(v_x[j]),
                fmt_f64(d.u1[j]),
                fmt_f64(d.u2[j]),
                fmt_f64(d.u3[j]),
            ]);
        }
    }
    write_csv(path, &["t", "x", "v_t", "v_x", "u1", "u2", "u3"], rows)
}

fn write_energy_svg(dir: &Path, traj: &Trajectory<FieldState>, summary: &RunSummary) -> Result<(), CliError> {
    let totals = traj.totals();
    let s = [Series { name: "E(t)", x: &traj.times, y: &totals }];
    let title = format!("energy, case {}", summary.case);
    if let Some(svg) = line_chart(&title, "t", "E", &s, false) {
        write_text(&dir.join("energy.svg"), &svg)?;
    }
    if let Some(svg) = line_chart(&title, "t", "E", &s, true) {
        write_text(&dir.join("energy_log.svg"), &svg)?;
    }
    Ok(())
}
