//! Spectra, resolvent norms and resonance of the discrete generator `A_h`.
//!
//! All dense work uses the compressed generator of
//! [`GeneratorMatrix::compressed`], whose Euclidean norm is the energy norm.

pub mod eigen;
mod resolvent;

pub use resolvent::HessenbergForm;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{assemble_generator_capped, DiscretizationError, GeneratorMatrix, Grid, SemigroupState};
use crate::model::{CaseLabel, DampingConfig, FieldState, PhysicalParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("eigenvalue iteration did not converge for eigenvalue {index} after {iterations} sweeps")]
    NoConvergence { index: usize, iterations: usize },
    #[error("{0}")]
    Precondition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted by real part, largest first.
    pub eigenvalues: Vec<Complex64>,
    pub spectral_abscissa: f64,
    pub damping_case: CaseLabel,
    pub n_cells: usize,
}

impl SpectrumReport {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn spectrum(gen: &GeneratorMatrix) -> Result<SpectrumReport, SpectralError> {
    let mut eig = eigen::eigenvalues(gen.compressed())
        .map_err(|e| SpectralError::NoConvergence { index: e.index, iterations: e.iterations })?;
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let spectral_abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        eigenvalues: eig,
        spectral_abscissa,
        damping_case: gen.damping().label(),
        n_cells: gen.grid().n_cells(),
    })
}

/// Power-iteration estimate of `||A_h||_2` in the energy norm.
pub fn operator_norm_estimate(gen: &GeneratorMatrix) -> f64 {
    let a = gen.compressed();
    let at = a.transpose();
    let n = a.nrows();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i % 5) as f64 * 0.1).collect();
    let mut est = 0.0;
    for _ in 0..500 {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.mul_vec(&x);
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = at.mul_vec(&y);
        if (ny - est).abs() <= 1e-10 * ny {
            return ny;
        }
        est = ny;
    }
    est
}

/// Resolvent norms along `i lambda`, `lambda >= 0`. `None` entries are
/// singular shifts (the infinity marker).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventScan {
    pub lambda_samples: Vec<f64>,
    pub norms: Vec<Option<f64>>,
    /// `None` if any sample was singular.
    pub sup_norm: Option<f64>,
    pub sup_location: f64,
}

impl ResolventScan {
    fn from_samples(mut pts: Vec<(f64, Option<f64>)>) -> Self {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        let mut sup = Some(0.0);
        let mut loc = pts.first().map_or(0.0, |p| p.0);
        for &(l, r) in &pts {
            match (sup, r) {
                (Some(s), Some(v)) if v > s => {
                    sup = Some(v);
                    loc = l;
                }
                (Some(_), None) => {
                    sup = None;
                    loc = l;
                }
                _ => {}
            }
        }
        Self {
            lambda_samples: pts.iter().map(|p| p.0).collect(),
            norms: pts.iter().map(|p| p.1).collect(),
            sup_norm: sup,
            sup_location: loc,
        }
    }
}

/// Refinement passes around local maxima, each 10x denser than the last.
pub const REFINEMENT_LEVELS: usize = 3;
const REFINED_PEAKS: usize = 16;

pub fn resolvent_scan(gen: &GeneratorMatrix, lambda_max: f64, samples: usize) -> Result<ResolventScan, SpectralError> {
    if samples < 16 {
        return Err(SpectralError::InvalidArgument(format!("need at least 16 samples, got {samples}")));
    }
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(SpectralError::InvalidArgument(format!("lambda_max must be > 0, got {lambda_max}")));
    }
    let form = HessenbergForm::new(gen.compressed());
    let step = lambda_max / (samples - 1) as f64;
    let grid: Vec<f64> = (0..samples).map(|k| k as f64 * step).collect();
    Ok(scan_with_refinement(&form, &grid, step, lambda_max))
}

/// Evaluates `lambdas`, then refines around the largest local maxima.
pub fn scan_with_refinement(form: &HessenbergForm, lambdas: &[f64], step: f64, lambda_max: f64) -> ResolventScan {
    let eval = |ls: &[f64]| -> Vec<(f64, Option<f64>)> { ls.par_iter().map(|&l| (l, form.resolvent_norm(l))).collect() };
    let mut pts = eval(lambdas);
    for level in 1..=REFINEMENT_LEVELS {
        let scan = ResolventScan::from_samples(pts.clone());
        let value = |k: usize| scan.norms[k].unwrap_or(f64::INFINITY);
        let m = scan.lambda_samples.len();
        let mut peaks: Vec<usize> = (0..m)
            .filter(|&k| (k == 0 || value(k) >= value(k - 1)) && (k + 1 == m || value(k) >= value(k + 1)))
            .filter(|&k| scan.norms[k].is_some())
            .collect();
        peaks.sort_by(|&a, &b| value(b).total_cmp(&value(a)));
        peaks.truncate(REFINED_PEAKS);
        let delta = step / 10f64.powi(level as i32);
        let mut extra = Vec::new();
        for k in peaks {
            let c = scan.lambda_samples[k];
            for j in -10i32..=10 {
                let l = c + j as f64 * delta;
                if j != 0 && (0.0..=lambda_max).contains(&l) {
                    extra.push(l);
                }
            }
        }
        pts.extend(eval(&extra));
    }
    ResolventScan::from_samples(pts)
}

/// Smallest `n` in `0..=n_max` with `|mu rho/(xi eps3 alpha) - (2n+1)^2 pi^2/(4 L^2)| <= tol`.
pub fn resonance_check(params: &PhysicalParams, n_max: u32, tol: f64) -> Option<u32> {
    let lhs = params.mu() * params.rho() / (params.xi() * params.eps3() * params.alpha());
    let l = params.length();
    (0..=n_max).find(|&n| {
        let k = (2 * n + 1) as f64;
        (lhs - k * k * PI * PI / (4.0 * l * l)).abs() <= tol
    })
}

/// Imaginary eigenvalue `i lambda` and its eigenvector in the `(0, 0, c)` case.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantMode {
    pub n: u32,
    pub lambda: f64,
    /// `lambda sqrt(rho/alpha)`, the spatial wavenumber of `v`.
    pub wavenumber: f64,
    pub state: SemigroupState<Complex64>,
}

/// Relative tolerance used to accept the resonance condition.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Nodal sampling of `U = (v, i lambda v, i lambda (gamma/mu) v, -(gamma/(eps3 xi)) v, 0)`
/// with `v = sin(lambda sqrt(rho/alpha) x)`.
pub fn resonant_eigenmode(params: &PhysicalParams, n: u32, grid: &Grid) -> Result<ResonantMode, SpectralError> {
    let lhs = params.mu() * params.rho() / (params.xi() * params.eps3() * params.alpha());
    if resonance_check(params, n, RESONANCE_TOL * lhs.max(1.0)) != Some(n) {
        return Err(SpectralError::Precondition(format!("resonance condition does not hold for n = {n}")));
    }
    let (alpha, rho, gamma) = (params.alpha(), params.rho(), params.gamma());
    let lambda = (2 * n + 1) as f64 * PI / (2.0 * params.length()) * (alpha / rho).sqrt();
    let k = lambda * (rho / alpha).sqrt();
    let il = Complex64::new(0.0, lambda);
    let v: Vec<Complex64> = grid.nodes().iter().map(|&x| Complex64::new((k * x).sin(), 0.0)).collect();
    let state = SemigroupState {
        z: v.iter().map(|&s| il * s).collect(),
        u1: v.iter().map(|&s| il * (gamma / params.mu()) * s).collect(),
        u2: v.iter().map(|&s| -(gamma / (params.eps3() * params.xi())) * s).collect(),
        u3: vec![Complex64::new(0.0, 0.0); grid.n_cells()],
        v,
    };
    Ok(ResonantMode { n, lambda, wavenumber: k, state })
}

/// `||(i lambda I - A_h) U_h|| / ||U_h||` in the discrete energy norm, with
/// `A_h` the full staggered operator.
pub fn eigenmode_residual(gen: &GeneratorMatrix, mode: &ResonantMode) -> f64 {
    let u = gen.pack(&mode.state);
    let a = gen.full_operator();
    let re: Vec<f64> = u.iter().map(|z| z.re).collect();
    let im: Vec<f64> = u.iter().map(|z| z.im).collect();
    let (are, aim) = (a.mul_vec(&re), a.mul_vec(&im));
    let il = Complex64::new(0.0, mode.lambda);
    let r: Vec<Complex64> = (0..u.len()).map(|i| il * u[i] - Complex64::new(are[i], aim[i])).collect();
    (gen.energy_norm_sq_complex(&r) / gen.energy_norm_sq_complex(&u)).sqrt()
}

/// Time-domain initial state of the resonant mode: the real part of
/// `e^{i lambda t} U` at `t = 0` and its time derivative.
///
/// At `t = 0`: `v = sin(kx)`, `v_t = Re(i lambda v) = 0`, `u1 = 0`,
/// `u2 = -(gamma/(eps3 xi)) sin(kx)` and `u3 = 0`. Taking `theta = theta_t = 0`
/// and `eta = 0`, the relations `u2 = theta_t + phi_x`, `u3 = eta_t + phi`,
/// `u1 = theta - eta_x` fix `phi = (gamma/(eps3 xi k)) cos(kx)` (zero mean
/// part dropped), `eta_t = -phi` and `phi_t = 0`.
pub fn eigenmode_field_state(params: &PhysicalParams, mode: &ResonantMode, grid: &Grid) -> FieldState {
    mode_profile(params, mode.wavenumber, grid)
}

/// The field state of [`eigenmode_field_state`] for an arbitrary wavenumber
/// `k`; used to start the same profile under non-resonant parameters.
pub fn mode_profile(params: &PhysicalParams, k: f64, grid: &Grid) -> FieldState {
    let amp = params.gamma() / (params.eps3() * params.xi() * k);
    FieldState::sample(grid, |x| {
        let phi = amp * (k * x).cos();
        [(k * x).sin(), phi, 0.0, 0.0, 0.0, 0.0, 0.0, -phi]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StronglyStableExpected,
    ResonanceObstruction,
    Undamped,
}

/// Report object combining the case label, the resonance test and the
/// discrete spectrum near the imaginary axis. Not a proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub case: CaseLabel,
    pub verdict: Verdict,
    pub resonance_index: Option<u32>,
    /// Minimum of `|Re lambda|` over eigenvalues with `|Im lambda| <= lambda_max`.
    pub min_abs_real_part: Option<f64>,
    pub lambda_max: f64,
}

pub fn strong_stability_verdict(
    params: &PhysicalParams,
    damping: &DampingConfig,
    grid: &Grid,
    tol: f64,
    lambda_max: f64,
    max_cells: usize,
) -> Result<StabilityVerdict, SpectralError> {
    let case = damping.label();
    let resonance_index = if damping.a == 0.0 && damping.b == 0.0 && damping.c > 0.0 {
        resonance_check(params, 1000, tol)
    } else {
        None
    };
    let verdict = if case == CaseLabel::Undamped {
        Verdict::Undamped
    } else if resonance_index.is_some() {
        Verdict::ResonanceObstruction
    } else {
        Verdict::StronglyStableExpected
    };
    let min_abs_real_part = if grid.n_cells() <= max_cells {
        let gen = assemble_generator_capped(params, damping, grid, max_cells)?;
        spectrum(&gen)?
            .eigenvalues
            .iter()
            .filter(|z| z.im.abs() <= lambda_max)
            .map(|z| z.re.abs())
            .reduce(f64::min)
    } else {
        None
    };
    Ok(StabilityVerdict { case, verdict, resonance_index, min_abs_real_part, lambda_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_generator, build_grid};
    use crate::model::ParamSpec;

    fn resonant_params() -> PhysicalParams {
        ParamSpec { mu: PI * PI / 4.0, ..ParamSpec::unit() }.build().unwrap()
    }

    #[test]
    fn resonance_examples() {
        assert_eq!(resonance_check(&PhysicalParams::unit(), 50, 1e-9), None);
        assert_eq!(resonance_check(&resonant_params(), 50, 1e-9), Some(0));
        let p = ParamSpec { mu: 9.0 * PI * PI / 4.0, ..ParamSpec::unit() }.build().unwrap();
        assert_eq!(resonance_check(&p, 50, 1e-9), Some(1));
    }

    #[test]
    fn eigenmode_shape() {
        let g = build_grid(1.0, 40).unwrap();
        let m = resonant_eigenmode(&resonant_params(), 0, &g).unwrap();
        assert!((m.lambda - PI / 2.0).abs() < 1e-15);
        assert!(m.state.u3.iter().all(|z| z.norm() == 0.0));
        assert!((m.state.v[40].re - 1.0).abs() < 1e-15);
        assert!(matches!(
            resonant_eigenmode(&PhysicalParams::unit(), 0, &g),
            Err(SpectralError::Precondition(_))
        ));
    }

    #[test]
    fn small_spectrum_is_conjugate_closed() {
        let g = build_grid(1.0, 10).unwrap();
        let gen = assemble_generator(&PhysicalParams::unit(), &DampingConfig::new(1.0, 1.0, 1.0).unwrap(), &g).unwrap();
        let s = spectrum(&gen).unwrap();
        assert_eq!(s.eigenvalues.len(), gen.dimension());
        assert!(s.spectral_abscissa < 0.0);
        for z in &s.eigenvalues {
            assert!(s.eigenvalues.iter().any(|w| (w - z.conj()).norm() < 1e-8 * (1.0 + z.norm())));
        }
    }

    #[test]
    fn scan_rejects_few_samples() {
        let g = build_grid(1.0, 10).unwrap();
        let gen = assemble_generator(&PhysicalParams::unit(), &DampingConfig::new(1.0, 1.0, 1.0).unwrap(), &g).unwrap();
        assert!(resolvent_scan(&gen, 10.0, 8).is_err());
        let s = resolvent_scan(&gen, 10.0, 16).unwrap();
        assert!(s.norms.iter().all(|r| r.unwrap() > 0.0));
        assert!(s.lambda_samples.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn verdicts() {
        let g = build_grid(1.0, 10).unwrap();
        let c = DampingConfig::new(0.0, 0.0, 1.0).unwrap();
        let v = strong_stability_verdict(&PhysicalParams::unit(), &c, &g, 1e-9, 10.0, 400).unwrap();
        assert_eq!(v.verdict, Verdict::StronglyStableExpected);
        let v = strong_stability_verdict(&resonant_params(), &c, &g, 1e-9, 10.0, 400).unwrap();
        assert_eq!((v.verdict, v.resonance_index), (Verdict::ResonanceObstruction, Some(0)));
        let v = strong_stability_verdict(&PhysicalParams::unit(), &DampingConfig::undamped(), &g, 1e-9, 10.0, 400).unwrap();
        assert_eq!(v.verdict, Verdict::Undamped);
    }
}
