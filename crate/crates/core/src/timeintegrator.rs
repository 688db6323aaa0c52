//! Fixed-step BDF2 for `y' = L y` with a constant banded `L`.
//!
//! `(3I - 2 dt L)` is factored once and reused; the first step is taken by
//! backward Euler or the trapezoidal rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{self, EnergyBreakdown};
use crate::discretization::{GeneratorMatrix, Grid, SemiDiscreteSystem, SemigroupState};
use crate::linalg::{BandMatrix, LinalgError};
use crate::model::FieldState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("implicit operator factorization failed: {0}")]
    Factorization(LinalgError),
    #[error("solution diverged (non-finite values) at step {step}")]
    Divergence { step: usize },
    #[error("initial state does not match the system: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Bootstrap {
    #[default]
    BackwardEuler,
    Trapezoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub bootstrap: Bootstrap,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_stride() -> usize {
    1000
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 100.0, bootstrap: Bootstrap::BackwardEuler, snapshot_stride: 1000 }
    }
}

impl IntegratorConfig {
    /// Number of steps, `round(t_end / dt)`.
    pub fn steps(&self) -> Result<usize, IntegratorError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(IntegratorError::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(IntegratorError::InvalidConfig(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if self.dt > self.t_end {
            return Err(IntegratorError::InvalidConfig(format!("dt {} exceeds t_end {}", self.dt, self.t_end)));
        }
        if self.snapshot_stride == 0 {
            return Err(IntegratorError::InvalidConfig("snapshot_stride must be >= 1".into()));
        }
        let steps = (self.t_end / self.dt).round();
        if steps > (u32::MAX as f64) {
            return Err(IntegratorError::InvalidConfig(format!("{steps} steps is too many")));
        }
        Ok(steps as usize)
    }
}

/// Energy at every step plus strided state snapshots.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub dt: f64,
    /// `t_n = n dt` for every step, including `t_0`.
    pub times: Vec<f64>,
    pub energy_series: Vec<EnergyBreakdown>,
    /// Instantaneous dissipation rate at every step.
    pub dissipation_series: Vec<f64>,
    pub snapshot_steps: Vec<usize>,
    pub states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn totals(&self) -> Vec<f64> {
        self.energy_series.iter().map(|e| e.total).collect()
    }

    pub fn final_state(&self) -> &S {
        self.states.last().expect("trajectory keeps the final state")
    }
}

/// A linear semi-discrete system advanced by [`simulate`].
pub trait LinearDynamics {
    type State: Clone;
    fn operator(&self) -> &BandMatrix;
    fn pack(&self, state: &Self::State) -> Result<Vec<f64>, IntegratorError>;
    fn unpack(&self, y: &[f64], time: f64) -> Self::State;
    fn energy_of(&self, y: &[f64]) -> EnergyBreakdown;
    fn dissipation_of(&self, y: &[f64]) -> f64;
}

impl LinearDynamics for SemiDiscreteSystem {
    type State = FieldState;

    fn operator(&self) -> &BandMatrix {
        self.matrix()
    }

    fn pack(&self, state: &FieldState) -> Result<Vec<f64>, IntegratorError> {
        state.check_shape().map_err(|e| IntegratorError::Shape(e.to_string()))?;
        if state.grid != *self.grid() {
            return Err(IntegratorError::Shape("state lives on a different grid".into()));
        }
        Ok(SemiDiscreteSystem::pack(self, state))
    }

    fn unpack(&self, y: &[f64], time: f64) -> FieldState {
        SemiDiscreteSystem::unpack(self, y, time)
    }

    fn energy_of(&self, y: &[f64]) -> EnergyBreakdown {
        diagnostics::energy(&SemiDiscreteSystem::unpack(self, y, 0.0), self.params()).expect("shape is consistent")
    }

    fn dissipation_of(&self, y: &[f64]) -> f64 {
        let s = SemiDiscreteSystem::unpack(self, y, 0.0);
        diagnostics::dissipation_integrals(&s).expect("shape is consistent").rate(self.params(), self.damping())
    }
}

/// Time stepping of the staggered five-field system `U' = (A_h - B_h) U`.
///
/// Used to cross-check the time-domain formulation: for compatible data and
/// `b = c = 0` both describe the same dynamics.
pub struct StaggeredDynamics<'a> {
    generator: &'a GeneratorMatrix,
    matrix: BandMatrix,
}

impl<'a> StaggeredDynamics<'a> {
    pub fn new(generator: &'a GeneratorMatrix) -> Self {
        Self { generator, matrix: generator.full_operator().to_band() }
    }
}

fn staggered_parts(g: &GeneratorMatrix, y: &[f64]) -> ([f64; 5], f64) {
    let s = g.unpack(y);
    let p = g.params();
    let grid = g.grid();
    let (n, h) = (grid.n_cells(), grid.h());
    let mut z2 = 0.0;
    for j in 1..=n {
        let w = if j == n { 0.5 * h } else { h };
        z2 += w * s.z[j] * s.z[j];
    }
    let mut vx2 = 0.0;
    for k in 0..n {
        let d = (s.v[k + 1] - s.v[k]) / h;
        vx2 += h * d * d;
    }
    let u1: f64 = s.u1.iter().map(|x| h * x * x).sum();
    let u2: f64 = s.u2.iter().map(|x| h * x * x).sum();
    let u3: f64 = s.u3.iter().map(|x| h * x * x).sum();
    let e = [
        0.5 * p.rho() * z2,
        0.5 * p.alpha() * vx2,
        0.5 * p.mu() * u1,
        0.5 * (p.xi() * p.eps3() * u2 + p.eps3() * u3),
        0.0,
    ];
    let d = g.damping();
    let rate = d.a * z2 + d.b * p.xi() * p.eps3() * u2 + d.c * p.eps3() * u3;
    (e, rate)
}

impl LinearDynamics for StaggeredDynamics<'_> {
    type State = SemigroupState;

    fn operator(&self) -> &BandMatrix {
        &self.matrix
    }

    fn pack(&self, state: &SemigroupState) -> Result<Vec<f64>, IntegratorError> {
        let n = self.generator.grid().n_cells();
        let ok = [&state.v, &state.z, &state.u1, &state.u2].iter().all(|a| a.len() == n + 1) && state.u3.len() == n;
        if !ok {
            return Err(IntegratorError::Shape("five-field array lengths do not match the grid".into()));
        }
        Ok(self.generator.pack(state))
    }

    fn unpack(&self, y: &[f64], _time: f64) -> SemigroupState {
        self.generator.unpack(y)
    }

    fn energy_of(&self, y: &[f64]) -> EnergyBreakdown {
        let (e, _) = staggered_parts(self.generator, y);
        EnergyBreakdown::new(e[0], e[1], e[2], e[3])
    }

    fn dissipation_of(&self, y: &[f64]) -> f64 {
        staggered_parts(self.generator, y).1
    }
}

pub fn simulate<D: LinearDynamics>(
    system: &D,
    initial: &D::State,
    config: &IntegratorConfig,
) -> Result<Trajectory<D::State>, IntegratorError> {
    let steps = config.steps()?;
    let dt = config.dt;
    let l = system.operator();
    let n = l.n();
    let y0 = system.pack(initial)?;
    if y0.len() != n {
        return Err(IntegratorError::Shape(format!("packed length {} vs operator {}", y0.len(), n)));
    }
    let bdf = l.shifted(3.0, -2.0 * dt).factor().map_err(IntegratorError::Factorization)?;

    let mut traj = Trajectory {
        dt,
        times: Vec::with_capacity(steps + 1),
        energy_series: Vec::with_capacity(steps + 1),
        dissipation_series: Vec::with_capacity(steps + 1),
        snapshot_steps: Vec::new(),
        states: Vec::new(),
    };
    let record = |k: usize, y: &[f64], traj: &mut Trajectory<D::State>| -> Result<(), IntegratorError> {
        let e = system.energy_of(y);
        if !e.total.is_finite() {
            return Err(IntegratorError::Divergence { step: k });
        }
        let t = k as f64 * dt;
        traj.times.push(t);
        traj.energy_series.push(e);
        traj.dissipation_series.push(system.dissipation_of(y));
        if k % config.snapshot_stride == 0 || k == steps {
            traj.snapshot_steps.push(k);
            traj.states.push(system.unpack(y, t));
        }
        Ok(())
    };
    record(0, &y0, &mut traj)?;

    let mut y1 = y0.clone();
    match config.bootstrap {
        Bootstrap::BackwardEuler => {
            let be = l.shifted(1.0, -dt).factor().map_err(IntegratorError::Factorization)?;
            be.solve(&mut y1);
        }
        Bootstrap::Trapezoidal => {
            let cn = l.shifted(1.0, -0.5 * dt).factor().map_err(IntegratorError::Factorization)?;
            let mut ly = vec![0.0; n];
            l.matvec(&y0, &mut ly);
            for (a, b) in y1.iter_mut().zip(&ly) {
                *a += 0.5 * dt * b;
            }
            cn.solve(&mut y1);
        }
    }
    record(1, &y1, &mut traj)?;

    let (mut prev, mut cur) = (y0, y1);
    let mut next = vec![0.0; n];
    for k in 2..=steps {
        for i in 0..n {
            next[i] = 4.0 * cur[i] - prev[i];
        }
        bdf.solve(&mut next);
        record(k, &next, &mut traj)?;
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(traj)
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// `dt` for temporal rows, `h` for spatial rows.
    pub resolution: f64,
    pub error: f64,
    /// `log2(e_prev / e)` against the previous (coarser) row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub temporal: Vec<ConvergenceRow>,
    pub spatial: Vec<ConvergenceRow>,
    /// Least-squares slope of log(error) against log(resolution).
    pub temporal_order: f64,
    pub spatial_order: f64,
}

/// Resolutions of a self-convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePlan {
    /// Time steps for the temporal study, run at `temporal_n`.
    pub dt_list: Vec<f64>,
    /// Cell counts for the spatial study, run at `spatial_dt`.
    pub n_list: Vec<usize>,
    pub temporal_n: usize,
    pub spatial_dt: f64,
    pub t_end: f64,
    pub bootstrap: Bootstrap,
}

/// Maximum over nodes of the coarse grid and over the eight fields of the
/// difference to the fine solution, relative to the fine solution's maximum.
pub fn solution_difference(coarse: &FieldState, fine: &FieldState) -> f64 {
    let nc = coarse.grid.n_cells();
    let nf = fine.grid.n_cells();
    assert!(nf % nc == 0, "fine grid must refine the coarse grid");
    let r = nf / nc;
    let (mut diff, mut scale) = (0.0_f64, 0.0_f64);
    for (a, b) in coarse.fields().iter().zip(fine.fields()) {
        for j in 0..=nc {
            diff = diff.max((a[j] - b[j * r]).abs());
            scale = scale.max(b[j * r].abs());
        }
    }
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn slope(rows: &[ConvergenceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > 0.0)
        .map(|r| (r.resolution.ln(), r.error.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn with_orders(mut rows: Vec<ConvergenceRow>) -> Vec<ConvergenceRow> {
    for k in 1..rows.len() {
        let (a, b) = (rows[k - 1].error, rows[k].error);
        let ratio = rows[k - 1].resolution / rows[k].resolution;
        rows[k].order = if a > 0.0 && b > 0.0 { Some((a / b).ln() / ratio.ln()) } else { None };
    }
    rows
}

/// Self-convergence study. Temporal errors are measured against a run with
/// `min(dt_list) / 4`; spatial errors against a run on `4 max(n_list)` cells,
/// which must be a multiple of every entry of `n_list`.
pub fn convergence_study<F, I, E>(
    system_factory: F,
    initial_factory: I,
    plan: &ConvergencePlan,
) -> Result<ConvergenceTable, IntegratorError>
where
    F: Fn(usize) -> Result<SemiDiscreteSystem, E>,
    I: Fn(&Grid) -> FieldState,
    E: std::fmt::Display,
{
    if plan.dt_list.len() < 3 || plan.n_list.len() < 3 {
        return Err(IntegratorError::InvalidConfig(format!(
            "convergence study needs at least 3 resolutions each (got {} time steps, {} grids)",
            plan.dt_list.len(),
            plan.n_list.len()
        )));
    }
    let build = |n: usize| system_factory(n).map_err(|e| IntegratorError::InvalidConfig(e.to_string()));
    let final_state = |sys: &SemiDiscreteSystem, dt: f64| -> Result<FieldState, IntegratorError> {
        let cfg = IntegratorConfig { dt, t_end: plan.t_end, bootstrap: plan.bootstrap, snapshot_stride: usize::MAX };
        let init = initial_factory(sys.grid());
        Ok(simulate(sys, &init, &cfg)?.final_state().clone())
    };

    let sys_t = build(plan.temporal_n)?;
    let dt_min = plan.dt_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let reference_t = final_state(&sys_t, dt_min / 4.0)?;
    let mut dts = plan.dt_list.clone();
    dts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut temporal = Vec::new();
    for &dt in &dts {
        let s = final_state(&sys_t, dt)?;
        temporal.push(ConvergenceRow { resolution: dt, error: solution_difference(&s, &reference_t), order: None });
    }

    let mut ns = plan.n_list.clone();
    ns.sort_unstable();
    let n_ref = 4 * ns[ns.len() - 1];
    if ns.iter().any(|n| n_ref % n != 0) {
        return Err(IntegratorError::InvalidConfig("reference grid must refine every grid in n_list".into()));
    }
    let reference_s = final_state(&build(n_ref)?, plan.spatial_dt)?;
    let mut spatial = Vec::new();
    for &n in &ns {
        let sys = build(n)?;
        let s = final_state(&sys, plan.spatial_dt)?;
        spatial.push(ConvergenceRow {
            resolution: sys.grid().h(),
            error: solution_difference(&s, &reference_s),
            order: None,
        });
    }
    let temporal = with_orders(temporal);
    let spatial = with_orders(spatial);
    Ok(ConvergenceTable {
        temporal_order: slope(&temporal),
        spatial_order: slope(&spatial),
        temporal,
        spatial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_time_domain, build_grid};
    use crate::model::{DampingConfig, PhysicalParams};

    fn system(n: usize, a: f64, b: f64, c: f64) -> SemiDiscreteSystem {
        let g = build_grid(1.0, n).unwrap();
        assemble_time_domain(&PhysicalParams::unit(), &DampingConfig::new(a, b, c).unwrap(), &g).unwrap()
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        let s = system(20, 1.0, 1.0, 1.0);
        let cfg = IntegratorConfig { dt: 1e-2, t_end: 1.0, ..Default::default() };
        let tr = simulate(&s, &FieldState::zeros(s.grid()), &cfg).unwrap();
        assert!(tr.totals().iter().all(|&e| e == 0.0));
        assert!(tr.states.iter().all(|s| s.is_zero()));
        assert_eq!(tr.energy_series.len(), 101);
    }

    #[test]
    fn config_validation() {
        let bad = IntegratorConfig { dt: 2.0, t_end: 1.0, ..Default::default() };
        assert!(matches!(bad.steps(), Err(IntegratorError::InvalidConfig(_))));
        let bad = IntegratorConfig { dt: 0.0, ..Default::default() };
        assert!(bad.steps().is_err());
        let bad = IntegratorConfig { snapshot_stride: 0, ..Default::default() };
        assert!(bad.steps().is_err());
        assert_eq!(IntegratorConfig::default().steps().unwrap(), 100_000);
    }

    #[test]
    fn study_needs_three_resolutions() {
        let plan = ConvergencePlan {
            dt_list: vec![0.1, 0.05],
            n_list: vec![8, 16, 32],
            temporal_n: 16,
            spatial_dt: 0.01,
            t_end: 0.1,
            bootstrap: Bootstrap::BackwardEuler,
        };
        let r = convergence_study(
            |n| assemble_time_domain(&PhysicalParams::unit(), &DampingConfig::undamped(), &build_grid(1.0, n)?),
            FieldState::benchmark,
            &plan,
        );
        assert!(matches!(r, Err(IntegratorError::InvalidConfig(_))));
    }

    #[test]
    fn identical_runs_have_zero_difference() {
        let s = system(16, 0.0, 0.0, 0.0);
        let cfg = IntegratorConfig { dt: 1e-2, t_end: 0.5, ..Default::default() };
        let a = simulate(&s, &FieldState::benchmark(s.grid()), &cfg).unwrap();
        let b = simulate(&s, &FieldState::benchmark(s.grid()), &cfg).unwrap();
        assert_eq!(solution_difference(a.final_state(), b.final_state()), 0.0);
    }

    #[test]
    fn trapezoidal_bootstrap_runs() {
        let s = system(16, 1.0, 0.0, 0.0);
        let cfg = IntegratorConfig { dt: 1e-2, t_end: 0.2, bootstrap: Bootstrap::Trapezoidal, snapshot_stride: 5 };
        let tr = simulate(&s, &FieldState::benchmark(s.grid()), &cfg).unwrap();
        assert_eq!(tr.snapshot_steps, vec![0, 5, 10, 15, 20]);
    }
}
