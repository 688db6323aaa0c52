//! Discrete energy, the energy balance residual, and log-linear decay fits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::stencil::{d1_sbp, trapezoid_sq};
use crate::model::{DampingConfig, FieldState, ModelError, PhysicalParams};
use crate::timeintegrator::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("need at least {needed} energy samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("window [{lo}, {hi}] does not overlap the series [{t0}, {t1}]")]
    WindowOutside { lo: f64, hi: f64, t0: f64, t1: f64 },
    #[error("times and energies differ in length ({times} vs {energies})")]
    LengthMismatch { times: usize, energies: usize },
}

/// Kinetic, potential, magnetic and electrical parts of the energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub magnetic: f64,
    pub electrical: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic: f64, potential: f64, magnetic: f64, electrical: f64) -> Self {
        Self { kinetic, potential, magnetic, electrical, total: kinetic + potential + magnetic + electrical }
    }
}

/// Squared L2 norms (trapezoid) of the dissipated quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DissipationIntegrals {
    pub v_t: f64,
    pub u2: f64,
    pub u3: f64,
}

impl DissipationIntegrals {
    /// `a |v_t|^2 + b xi eps3 |u2|^2 + c eps3 |u3|^2`.
    pub fn rate(&self, params: &PhysicalParams, damping: &DampingConfig) -> f64 {
        damping.a * self.v_t
            + damping.b * params.xi() * params.eps3() * self.u2
            + damping.c * params.eps3() * self.u3
    }
}

struct Integrands {
    v_x: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    u3: Vec<f64>,
}

fn integrands(state: &FieldState) -> Integrands {
    let h = state.grid.h();
    let v_x = d1_sbp(&state.v, h);
    let eta_x = d1_sbp(&state.eta, h);
    let phi_x = d1_sbp(&state.phi, h);
    let n = state.v.len();
    Integrands {
        v_x,
        u1: (0..n).map(|j| state.theta[j] - eta_x[j]).collect(),
        u2: (0..n).map(|j| state.theta_t[j] + phi_x[j]).collect(),
        u3: (0..n).map(|j| state.eta_t[j] + state.phi[j]).collect(),
    }
}

/// Trapezoid quadrature of the energy density; derivatives by the
/// summation-by-parts operator shared with the time-domain solver.
pub fn energy(state: &FieldState, params: &PhysicalParams) -> Result<EnergyBreakdown, DiagnosticsError> {
    state.check_shape()?;
    let h = state.grid.h();
    let f = integrands(state);
    let kinetic = 0.5 * params.rho() * trapezoid_sq(&state.v_t, h);
    let potential = 0.5 * params.alpha() * trapezoid_sq(&f.v_x, h);
    let magnetic = 0.5 * params.mu() * trapezoid_sq(&f.u1, h);
    let electrical = 0.5
        * (params.xi() * params.eps3() * trapezoid_sq(&f.u2, h) + params.eps3() * trapezoid_sq(&f.u3, h));
    Ok(EnergyBreakdown::new(kinetic, potential, magnetic, electrical))
}

pub fn dissipation_integrals(state: &FieldState) -> Result<DissipationIntegrals, DiagnosticsError> {
    state.check_shape()?;
    let h = state.grid.h();
    let f = integrands(state);
    Ok(DissipationIntegrals {
        v_t: trapezoid_sq(&state.v_t, h),
        u2: trapezoid_sq(&f.u2, h),
        u3: trapezoid_sq(&f.u3, h),
    })
}

/// Centered balance residual `(E^{n+1} - E^{n-1})/(2 dt) + D^n` for the
/// interior steps `n = 1 ..= len - 2`, where `D^n` is the dissipation rate.
pub fn balance_residual_series(
    energies: &[f64],
    dissipation: &[f64],
    dt: f64,
) -> Result<Vec<f64>, DiagnosticsError> {
    if energies.len() < 3 {
        return Err(DiagnosticsError::TooFewSamples { needed: 3, found: energies.len() });
    }
    if dissipation.len() != energies.len() {
        return Err(DiagnosticsError::LengthMismatch { times: dissipation.len(), energies: energies.len() });
    }
    Ok((1..energies.len() - 1)
        .map(|n| (energies[n + 1] - energies[n - 1]) / (2.0 * dt) + dissipation[n])
        .collect())
}

/// Balance residual of a field trajectory; entry `k` belongs to step `k + 1`.
pub fn energy_balance_residual(traj: &Trajectory<FieldState>) -> Result<Vec<f64>, DiagnosticsError> {
    let e: Vec<f64> = traj.energy_series.iter().map(|e| e.total).collect();
    balance_residual_series(&e, &traj.dissipation_series, traj.dt)
}

/// Least-squares fit of `log E(t)` on a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Rate in the norm convention `||U(t)|| <= M exp(-eps t)`: minus half the energy slope.
    pub epsilon_hat: f64,
    /// Slope of `log E`.
    pub energy_slope: f64,
    /// Prefactor of `sqrt(E)`: `exp(intercept / 2)`.
    pub m_hat: f64,
    pub r_squared: f64,
    pub window: [f64; 2],
    pub samples: usize,
    /// Set when the fit could not be carried out as requested.
    pub flag: Option<String>,
}

pub fn fit_decay_rate(times: &[f64], energies: &[f64], window: [f64; 2]) -> Result<DecayFit, DiagnosticsError> {
    if times.len() != energies.len() {
        return Err(DiagnosticsError::LengthMismatch { times: times.len(), energies: energies.len() });
    }
    if times.is_empty() {
        return Err(DiagnosticsError::TooFewSamples { needed: 2, found: 0 });
    }
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let [lo, hi] = window;
    if !(lo <= hi) || hi < t0 || lo > t1 {
        return Err(DiagnosticsError::WindowOutside { lo, hi, t0, t1 });
    }
    let flagged = |samples: usize, msg: &str| DecayFit {
        epsilon_hat: 0.0,
        energy_slope: 0.0,
        m_hat: 0.0,
        r_squared: 0.0,
        window,
        samples,
        flag: Some(msg.to_string()),
    };
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(energies)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, e)| (*t, *e))
        .collect();
    if pts.len() < 2 {
        return Ok(flagged(pts.len(), "fewer than two samples in window"));
    }
    if pts.iter().any(|&(_, e)| !(e > 0.0) || !e.is_finite()) {
        return Ok(flagged(pts.len(), "nonpositive or non-finite energy in window"));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(t, e) in &pts {
        let (dx, dy) = (t - mt, e.ln() - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Ok(flagged(pts.len(), "window contains a single time"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy <= 1e-300 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(DecayFit {
        epsilon_hat: -0.5 * slope,
        energy_slope: slope,
        m_hat: (0.5 * intercept).exp(),
        r_squared,
        window,
        samples: pts.len(),
        flag: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_grid;

    #[test]
    fn zero_state_has_zero_energy() {
        let g = build_grid(1.0, 20).unwrap();
        let e = energy(&FieldState::zeros(&g), &PhysicalParams::unit()).unwrap();
        assert_eq!(e, EnergyBreakdown::default());
    }

    #[test]
    fn unit_velocity() {
        let g = build_grid(1.0, 20).unwrap();
        let mut s = FieldState::zeros(&g);
        s.v_t = vec![1.0; 21];
        let e = energy(&s, &PhysicalParams::unit()).unwrap();
        assert!((e.total - 0.5).abs() < 1e-14);
    }

    #[test]
    fn exact_exponential_fit() {
        let t: Vec<f64> = (0..101).map(|k| k as f64 * 0.1).collect();
        let e: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let f = fit_decay_rate(&t, &e, [0.0, 10.0]).unwrap();
        assert!((f.epsilon_hat - 1.0).abs() < 1e-6);
        assert!(f.r_squared >= 1.0 - 1e-10);
        let c = fit_decay_rate(&t, &vec![3.0; 101], [0.0, 10.0]).unwrap();
        assert!(c.epsilon_hat.abs() < 1e-12);
    }

    #[test]
    fn fit_errors_and_flags() {
        let t = [0.0, 1.0, 2.0];
        assert!(matches!(
            fit_decay_rate(&t, &[1.0, 1.0, 1.0], [5.0, 6.0]),
            Err(DiagnosticsError::WindowOutside { .. })
        ));
        let f = fit_decay_rate(&t, &[1.0, 0.0, 1.0], [0.0, 2.0]).unwrap();
        assert!(f.flag.is_some());
    }

    #[test]
    fn balance_residual_needs_three_samples() {
        assert!(balance_residual_series(&[1.0, 1.0], &[0.0, 0.0], 0.1).is_err());
        let r = balance_residual_series(&[0.0; 5], &[0.0; 5], 0.1).unwrap();
        assert_eq!(r, vec![0.0; 3]);
    }
}
