//! JSON run and sweep configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discretization::{build_grid, Grid};
use crate::model::{DampingConfig, FieldState, ParamSpec, PhysicalParams, FIELD_NAMES};
use crate::spectral::{mode_profile, resonant_eigenmode};
use crate::timeintegrator::IntegratorConfig;

use super::CliError;

/// Default cap on the number of runs a sweep may expand to.
pub const DEFAULT_SWEEP_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_cells: 200 }
    }
}

/// Initial data, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConditions {
    /// `v = 1e-2 sin 3 pi x`, `phi = cos pi x`, `theta = sin pi x`,
    /// `eta = pi cos pi x`, `v_t = 1e2 sin 3 pi x`.
    #[default]
    Benchmark,
    /// Profile of the `(0, 0, c)` resonant eigenmode with index `n`.
    Eigenmode { n: u32 },
    /// CSV with the snapshot header `x,v,phi,theta,eta,v_t,phi_t,theta_t,eta_t`.
    File { path: PathBuf },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Row stride of `energy.csv`; the balance residual is always computed
    /// from every step.
    #[serde(default = "default_energy_stride")]
    pub energy_stride: usize,
}

fn default_out() -> PathBuf {
    PathBuf::from("plsim-out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_energy_stride() -> usize {
    10
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_out(), formats: default_formats(), energy_stride: default_energy_stride() }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// One simulation. Every section may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamSpec,
    #[serde(default)]
    pub damping: DampingConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub initial_conditions: InitialConditions,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Fit window for `summary.json`; defaults to `[t_end/2, t_end]`.
    #[serde(default)]
    pub decay_window: Option<[f64; 2]>,
}

/// Shown by `--help`.
pub const CONFIG_HELP: &str = "\
Configuration (JSON, unknown keys rejected, every section optional):
  params              rho, alpha, gamma, eps1, eps3, mu, h_thickness, length, xi  (all 1)
                      xi_mode: \"explicit\" (default) | \"derived\" (xi = eps1 h^2 / (12 eps3))
  damping             a, b, c                                (0, 0, 0)
  grid                n_cells                                (200)
  integrator          dt (1e-3), t_end (100), bootstrap \"backward-euler\" | \"trapezoidal\",
                      snapshot_stride in steps (1000)
  initial_conditions  {\"kind\": \"benchmark\"} (default) | {\"kind\": \"eigenmode\", \"n\": 0}
                      | {\"kind\": \"file\", \"path\": \"state.csv\"} | {\"kind\": \"zero\"}
  outputs             directory (\"plsim-out\"), formats [\"csv\", \"json\", \"svg\"] (csv, json),
                      energy_stride (10)
  decay_window        [t_lo, t_hi]                           ([t_end/2, t_end])
Sweep configuration: {\"base\": <run config>, \"axes\": {\"a\": [0, 1], ...}, \"parallelism\": 4,
  \"cap\": 256}. Axis names: a, b, c, n_cells, dt, t_end, rho, alpha, gamma, eps3, mu, xi, length.
Environment: PLSIM_MAX_DENSE_N caps the cell count of dense eigen work (400).";

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("run config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn physical(&self) -> Result<PhysicalParams, CliError> {
        self.params.build().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn build_grid(&self, params: &PhysicalParams) -> Result<Grid, CliError> {
        build_grid(params.length(), self.grid.n_cells).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<(), CliError> {
        let p = self.physical()?;
        self.build_grid(&p)?;
        self.damping.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.integrator.steps().map_err(|e| CliError::Config(e.to_string()))?;
        if self.outputs.energy_stride == 0 {
            return Err(CliError::Config("outputs.energy_stride must be >= 1".into()));
        }
        if let Some([lo, hi]) = self.decay_window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CliError::Config(format!("decay_window [{lo}, {hi}] is not an interval")));
            }
        }
        Ok(())
    }

    pub fn window(&self) -> [f64; 2] {
        self.decay_window.unwrap_or([0.5 * self.integrator.t_end, self.integrator.t_end])
    }

    pub fn initial_state(&self, params: &PhysicalParams, grid: &Grid) -> Result<FieldState, CliError> {
        match &self.initial_conditions {
            InitialConditions::Benchmark => Ok(FieldState::benchmark(grid)),
            InitialConditions::Zero => Ok(FieldState::zeros(grid)),
            InitialConditions::Eigenmode { n } => {
                // resonant parameters get the exact mode, others the same profile
                let k = match resonant_eigenmode(params, *n, grid) {
                    Ok(mode) => mode.wavenumber,
                    Err(_) => (2 * *n + 1) as f64 * std::f64::consts::PI / (2.0 * params.length()),
                };
                Ok(mode_profile(params, k, grid))
            }
            InitialConditions::File { path } => read_state_csv(path, grid),
        }
    }
}

/// Reads a state written in the snapshot format; `x` must match the grid.
pub fn read_state_csv(path: &Path, grid: &Grid) -> Result<FieldState, CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let expected: Vec<&str> = std::iter::once("x").chain(FIELD_NAMES).collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(bad(format!("header must be {}", expected.join(","))));
    }
    let mut state = FieldState::zeros(grid);
    let n = grid.node_count();
    let tol = 1e-9 * grid.length();
    let mut rows = 0;
    for (j, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if j >= n {
            return Err(bad(format!("more than {n} rows")));
        }
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", j + 1)))?;
        if (vals[0] - grid.nodes()[j]).abs() > tol {
            return Err(bad(format!("row {}: x = {} but grid node is {}", j + 1, vals[0], grid.nodes()[j])));
        }
        for (k, arr) in state.fields_mut().into_iter().enumerate() {
            if !vals[k + 1].is_finite() {
                return Err(bad(format!("row {}: non-finite {}", j + 1, FIELD_NAMES[k])));
            }
            arr[j] = vals[k + 1];
        }
        rows += 1;
    }
    if rows != n {
        return Err(bad(format!("expected {n} rows, found {rows}")));
    }
    Ok(state)
}

/// Cartesian product of named axes over a base run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub base: RunConfig,
    pub axes: std::collections::BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_SWEEP_CAP
}

const AXES: [&str; 13] = ["a", "b", "c", "n_cells", "dt", "t_end", "rho", "alpha", "gamma", "eps3", "mu", "xi", "length"];

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("sweep config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Expands the axes in key order, last axis fastest. Each entry carries
    /// a deterministic run name.
    pub fn expand(&self) -> Result<Vec<(String, RunConfig)>, CliError> {
        for (name, values) in &self.axes {
            if !AXES.contains(&name.as_str()) {
                return Err(CliError::Config(format!("unknown sweep axis `{name}`")));
            }
            if values.is_empty() {
                return Err(CliError::Config(format!("sweep axis `{name}` is empty")));
            }
        }
        let total = self
            .axes
            .values()
            .try_fold(1usize, |acc, v| acc.checked_mul(v.len()))
            .unwrap_or(usize::MAX);
        if total > self.cap {
            return Err(CliError::Config(format!("sweep expands to {total} runs, above the cap {}", self.cap)));
        }
        let axes: Vec<(&String, &Vec<f64>)> = self.axes.iter().collect();
        let mut runs = Vec::with_capacity(total);
        for idx in 0..total {
            let mut cfg = self.base.clone();
            let mut rem = idx;
            let mut picks = vec![0; axes.len()];
            for k in (0..axes.len()).rev() {
                picks[k] = rem % axes[k].1.len();
                rem /= axes[k].1.len();
            }
            let mut parts = Vec::with_capacity(axes.len());
            for (k, (name, values)) in axes.iter().enumerate() {
                let x = values[picks[k]];
                set_axis(&mut cfg, name, x)?;
                parts.push(format!("{name}={x}"));
            }
            let name = if parts.is_empty() { format!("run{idx:03}") } else { format!("run{idx:03}_{}", parts.join("_")) };
            cfg.validate()?;
            runs.push((name, cfg));
        }
        Ok(runs)
    }
}

fn set_axis(cfg: &mut RunConfig, name: &str, x: f64) -> Result<(), CliError> {
    let p = &mut cfg.params;
    match name {
        "a" => cfg.damping.a = x,
        "b" => cfg.damping.b = x,
        "c" => cfg.damping.c = x,
        "n_cells" => {
            if !(x >= 0.0 && x.fract() == 0.0) {
                return Err(CliError::Config(format!("n_cells must be a whole number, got {x}")));
            }
            cfg.grid.n_cells = x as usize;
        }
        "dt" => cfg.integrator.dt = x,
        "t_end" => cfg.integrator.t_end = x,
        "rho" => p.rho = x,
        "alpha" => p.alpha = x,
        "gamma" => p.gamma = x,
        "eps3" => p.eps3 = x,
        "mu" => p.mu = x,
        "xi" => p.xi = x,
        "length" => p.length = x,
        _ => return Err(CliError::Config(format!("unknown sweep axis `{name}`"))),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.grid.n_cells, 200);
        assert_eq!(c.integrator.dt, 1e-3);
        assert_eq!(c.window(), [50.0, 100.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"grid": {"n_cells": 50, "cells": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"gird": {}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"initial_conditions": {"kind": "eigenmode", "n": 0, "m": 1}}"#).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let mut c = RunConfig::default();
        c.damping = DampingConfig { a: 1.0, b: 0.0, c: 0.25 };
        c.initial_conditions = InitialConditions::Eigenmode { n: 2 };
        c.outputs.formats.push(Format::Svg);
        c.decay_window = Some([1.0, 2.5]);
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn sweep_expansion_order_and_cap() {
        let s = SweepConfig::from_json(r#"{"axes": {"a": [0, 1], "c": [0, 1]}}"#).unwrap();
        let runs = s.expand().unwrap();
        let dampings: Vec<(f64, f64)> = runs.iter().map(|r| (r.1.damping.a, r.1.damping.c)).collect();
        assert_eq!(dampings, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
        assert_eq!(runs[3].0, "run003_a=1_c=1");
        let big = SweepConfig::from_json(r#"{"axes": {"a": [0, 1, 2, 3], "b": [0, 1, 2, 3]}, "cap": 15}"#).unwrap();
        assert!(big.expand().is_err());
        let bad = SweepConfig::from_json(r#"{"axes": {"q": [1]}}"#).unwrap();
        assert!(bad.expand().is_err());
    }
}
