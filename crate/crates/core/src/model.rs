//! Physical parameters, damping selection and the continuous-model residual
//! evaluators of the reduced (Lorenz gauge) piezoelectric beam.
//!
//! Unknowns are the stretching `v`, the scalar potential `phi` and the vector
//! potential components `theta`, `eta`. The derived electromagnetic fields are
//! `u1 = theta - eta_x`, `u2 = theta_t + phi_x`, `u3 = eta_t + phi`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::stencil;
use crate::discretization::Grid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("coercivity window is empty: gamma*xi/(alpha+gamma^2/eps3) = {lower} >= xi*eps3/gamma = {upper}")]
    EmptyCoercivityWindow { lower: f64, upper: f64 },
    #[error("shape mismatch in `{what}`: expected length {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

/// `xi = eps1 * h^2 / (12 * eps3)`.
pub fn derive_xi(eps1: f64, h_thickness: f64, eps3: f64) -> Result<f64, ModelError> {
    let eps1 = positive("eps1", eps1)?;
    let h = positive("h_thickness", h_thickness)?;
    let eps3 = positive("eps3", eps3)?;
    Ok(eps1 * h * h / (12.0 * eps3))
}

/// How `xi` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum XiMode {
    /// From `eps1`, `h_thickness`, `eps3`.
    Derived,
    /// Taken from the `xi` field as given.
    #[default]
    Explicit,
}

/// Serializable parameter description; [`ParamSpec::build`] validates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub eps1: f64,
    #[serde(default = "one")]
    pub eps3: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub h_thickness: f64,
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default)]
    pub xi_mode: XiMode,
    #[serde(default = "one")]
    pub xi: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ParamSpec {
    fn default() -> Self {
        Self::unit()
    }
}

impl ParamSpec {
    /// Every constant equal to one, including `xi` (explicit mode).
    pub fn unit() -> Self {
        Self {
            rho: 1.0,
            alpha: 1.0,
            gamma: 1.0,
            eps1: 1.0,
            eps3: 1.0,
            mu: 1.0,
            h_thickness: 1.0,
            length: 1.0,
            xi_mode: XiMode::Explicit,
            xi: 1.0,
        }
    }

    pub fn build(&self) -> Result<PhysicalParams, ModelError> {
        PhysicalParams::new(self)
    }
}

/// Validated material constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalParams {
    rho: f64,
    alpha: f64,
    gamma: f64,
    eps1: f64,
    eps3: f64,
    mu: f64,
    h_thickness: f64,
    length: f64,
    xi: f64,
    xi_mode: XiMode,
}

impl PhysicalParams {
    pub fn new(spec: &ParamSpec) -> Result<Self, ModelError> {
        let rho = positive("rho", spec.rho)?;
        let alpha = positive("alpha", spec.alpha)?;
        let gamma = positive("gamma", spec.gamma)?;
        let eps1 = positive("eps1", spec.eps1)?;
        let eps3 = positive("eps3", spec.eps3)?;
        let mu = positive("mu", spec.mu)?;
        let h_thickness = positive("h_thickness", spec.h_thickness)?;
        let length = positive("length", spec.length)?;
        let xi = match spec.xi_mode {
            XiMode::Derived => derive_xi(eps1, h_thickness, eps3)?,
            XiMode::Explicit => positive("xi", spec.xi)?,
        };
        let p = Self {
            rho,
            alpha,
            gamma,
            eps1,
            eps3,
            mu,
            h_thickness,
            length,
            xi,
            xi_mode: spec.xi_mode,
        };
        let (lower, upper) = p.coercivity_window();
        if lower >= upper {
            return Err(ModelError::EmptyCoercivityWindow { lower, upper });
        }
        Ok(p)
    }

    /// Unit parameters with explicit `xi = 1`.
    pub fn unit() -> Self {
        Self::new(&ParamSpec::unit()).expect("unit parameters are valid")
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn eps1(&self) -> f64 {
        self.eps1
    }
    pub fn eps3(&self) -> f64 {
        self.eps3
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn h_thickness(&self) -> f64 {
        self.h_thickness
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn xi_mode(&self) -> XiMode {
        self.xi_mode
    }

    /// Open interval for the coercivity tuning scalar `k`.
    pub fn coercivity_window(&self) -> (f64, f64) {
        let lower = self.gamma * self.xi / (self.alpha + self.gamma * self.gamma / self.eps3);
        let upper = self.xi * self.eps3 / self.gamma;
        (lower, upper)
    }

    pub fn to_spec(&self) -> ParamSpec {
        ParamSpec {
            rho: self.rho,
            alpha: self.alpha,
            gamma: self.gamma,
            eps1: self.eps1,
            eps3: self.eps3,
            mu: self.mu,
            h_thickness: self.h_thickness,
            length: self.length,
            xi_mode: self.xi_mode,
            xi: self.xi,
        }
    }
}

/// Zero pattern of the three viscous coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    #[serde(rename = "undamped")]
    Undamped,
    #[serde(rename = "abc")]
    Abc,
    #[serde(rename = "0bc")]
    ZeroBC,
    #[serde(rename = "a0c")]
    AZeroC,
    #[serde(rename = "ab0")]
    ABZero,
    #[serde(rename = "a00")]
    AOnly,
    #[serde(rename = "0b0")]
    BOnly,
    #[serde(rename = "00c")]
    COnly,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::Undamped => "undamped",
            CaseLabel::Abc => "abc",
            CaseLabel::ZeroBC => "0bc",
            CaseLabel::AZeroC => "a0c",
            CaseLabel::ABZero => "ab0",
            CaseLabel::AOnly => "a00",
            CaseLabel::BOnly => "0b0",
            CaseLabel::COnly => "00c",
        }
    }
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Viscous damping coefficients `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DampingConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DampingConfig {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, ModelError> {
        let d = Self { a, b, c };
        d.validate()?;
        Ok(d)
    }

    pub const fn undamped() -> Self {
        Self { a: 0.0, b: 0.0, c: 0.0 }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::InvalidParameter {
                    name,
                    value,
                    reason: "damping must be finite and >= 0",
                });
            }
        }
        Ok(())
    }

    pub fn label(&self) -> CaseLabel {
        match (self.a > 0.0, self.b > 0.0, self.c > 0.0) {
            (false, false, false) => CaseLabel::Undamped,
            (true, true, true) => CaseLabel::Abc,
            (false, true, true) => CaseLabel::ZeroBC,
            (true, false, true) => CaseLabel::AZeroC,
            (true, true, false) => CaseLabel::ABZero,
            (true, false, false) => CaseLabel::AOnly,
            (false, true, false) => CaseLabel::BOnly,
            (false, false, true) => CaseLabel::COnly,
        }
    }
}

/// Nodal values of the four potentials and their time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub v: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub eta: Vec<f64>,
    pub v_t: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub eta_t: Vec<f64>,
    pub time: f64,
}

/// Field names in storage order; used by serializers.
pub const FIELD_NAMES: [&str; 8] = ["v", "phi", "theta", "eta", "v_t", "phi_t", "theta_t", "eta_t"];

impl FieldState {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.node_count();
        let z = vec![0.0; n];
        Self {
            grid: grid.clone(),
            v: z.clone(),
            phi: z.clone(),
            theta: z.clone(),
            eta: z.clone(),
            v_t: z.clone(),
            phi_t: z.clone(),
            theta_t: z.clone(),
            eta_t: z,
            time: 0.0,
        }
    }

    /// Samples `f(x) = [v, phi, theta, eta, v_t, phi_t, theta_t, eta_t]` at every node.
    pub fn sample(grid: &Grid, f: impl Fn(f64) -> [f64; 8]) -> Self {
        let mut s = Self::zeros(grid);
        for (j, &x) in grid.nodes().iter().enumerate() {
            let vals = f(x);
            for (k, arr) in s.fields_mut().into_iter().enumerate() {
                arr[j] = vals[k];
            }
        }
        s
    }

    /// The benchmark initial data used by the reproduction presets:
    /// `v = 1e-2 sin 3πx`, `phi = cos πx`, `theta = sin πx`, `eta = π cos πx`,
    /// `v_t = 1e2 sin 3πx`, other velocities zero (with `x` scaled by `L`).
    pub fn benchmark(grid: &Grid) -> Self {
        use std::f64::consts::PI;
        let l = grid.length();
        Self::sample(grid, |x| {
            let s = x / l;
            [
                1e-2 * (3.0 * PI * s).sin(),
                (PI * s).cos(),
                (PI * s).sin(),
                PI * (PI * s).cos(),
                1e2 * (3.0 * PI * s).sin(),
                0.0,
                0.0,
                0.0,
            ]
        })
    }

    pub fn fields(&self) -> [&[f64]; 8] {
        [
            &self.v,
            &self.phi,
            &self.theta,
            &self.eta,
            &self.v_t,
            &self.phi_t,
            &self.theta_t,
            &self.eta_t,
        ]
    }

    pub fn fields_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.v,
            &mut self.phi,
            &mut self.theta,
            &mut self.eta,
            &mut self.v_t,
            &mut self.phi_t,
            &mut self.theta_t,
            &mut self.eta_t,
        ]
    }

    pub fn check_shape(&self) -> Result<(), ModelError> {
        let n = self.grid.node_count();
        for (name, arr) in FIELD_NAMES.iter().zip(self.fields()) {
            if arr.len() != n {
                return Err(ModelError::Shape {
                    what: name,
                    expected: n,
                    found: arr.len(),
                });
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for arr in out.fields_mut() {
            arr.iter_mut().for_each(|x| *x *= s);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.fields().iter().all(|a| a.iter().all(|&x| x == 0.0))
    }
}

/// Electromagnetic fields derived from the potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub u3: Vec<f64>,
}

impl DerivedFields {
    /// Uses the second-order first-derivative stencil (one-sided at the ends).
    pub fn from_state(state: &FieldState) -> Result<Self, ModelError> {
        state.check_shape()?;
        let h = state.grid.h();
        let eta_x = stencil::d1_second_order(&state.eta, h);
        let phi_x = stencil::d1_second_order(&state.phi, h);
        let u1 = state.theta.iter().zip(&eta_x).map(|(a, b)| a - b).collect();
        let u2 = state.theta_t.iter().zip(&phi_x).map(|(a, b)| a + b).collect();
        let u3 = state.eta_t.iter().zip(&state.phi).map(|(a, b)| a + b).collect();
        Ok(Self { u1, u2, u3 })
    }
}

/// Second time derivatives supplied by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Accelerations {
    pub v_tt: Vec<f64>,
    pub phi_tt: Vec<f64>,
    pub theta_tt: Vec<f64>,
    pub eta_tt: Vec<f64>,
}

impl Accelerations {
    pub fn zeros(n: usize) -> Self {
        Self {
            v_tt: vec![0.0; n],
            phi_tt: vec![0.0; n],
            theta_tt: vec![0.0; n],
            eta_tt: vec![0.0; n],
        }
    }
}

/// Residuals of the four wave equations, one array per equation.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeResidual {
    pub stretching: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub eta: Vec<f64>,
}

impl PdeResidual {
    pub fn max_abs(&self) -> f64 {
        [&self.stretching, &self.phi, &self.theta, &self.eta]
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

fn check_len(what: &'static str, arr: &[f64], n: usize) -> Result<(), ModelError> {
    if arr.len() == n {
        Ok(())
    } else {
        Err(ModelError::Shape {
            what,
            expected: n,
            found: arr.len(),
        })
    }
}

/// Nodal residuals of
///
/// ```text
/// rho v_tt - alpha v_xx - gamma (phi + eta_t)_x + a v_t
/// phi_tt - (mu/eps3) phi_xx + (mu/(xi eps3)) phi - (gamma mu/(xi eps3^2)) v_x
/// theta_tt - (mu/eps3) theta_xx + (mu/(xi eps3)) theta + b (theta_t + phi_x)
/// eta_tt - (mu/eps3) eta_xx + (mu/(xi eps3)) eta - (gamma/eps3) v_tx + c (eta_t + phi)
/// ```
///
/// Spatial derivatives use second-order stencils at every node.
pub fn pde_residual(
    state: &FieldState,
    acc: &Accelerations,
    params: &PhysicalParams,
    damping: &DampingConfig,
) -> Result<PdeResidual, ModelError> {
    state.check_shape()?;
    let n = state.grid.node_count();
    check_len("v_tt", &acc.v_tt, n)?;
    check_len("phi_tt", &acc.phi_tt, n)?;
    check_len("theta_tt", &acc.theta_tt, n)?;
    check_len("eta_tt", &acc.eta_tt, n)?;
    let h = state.grid.h();
    let (rho, alpha, gamma) = (params.rho(), params.alpha(), params.gamma());
    let (eps3, mu, xi) = (params.eps3(), params.mu(), params.xi());
    let wave = mu / eps3;
    let mass = mu / (xi * eps3);

    let d1 = |f: &[f64]| stencil::d1_second_order(f, h);
    let d2 = |f: &[f64]| stencil::d2_second_order(f, h);

    let v_x = d1(&state.v);
    let v_xx = d2(&state.v);
    let v_tx = d1(&state.v_t);
    let u3: Vec<f64> = state.phi.iter().zip(&state.eta_t).map(|(p, e)| p + e).collect();
    let u3_x = d1(&u3);
    let phi_x = d1(&state.phi);
    let phi_xx = d2(&state.phi);
    let theta_xx = d2(&state.theta);
    let eta_xx = d2(&state.eta);

    let mut r = PdeResidual {
        stretching: vec![0.0; n],
        phi: vec![0.0; n],
        theta: vec![0.0; n],
        eta: vec![0.0; n],
    };
    for j in 0..n {
        r.stretching[j] =
            rho * acc.v_tt[j] - alpha * v_xx[j] - gamma * u3_x[j] + damping.a * state.v_t[j];
        r.phi[j] = acc.phi_tt[j] - wave * phi_xx[j] + mass * state.phi[j]
            - gamma * mu / (xi * eps3 * eps3) * v_x[j];
        r.theta[j] = acc.theta_tt[j] - wave * theta_xx[j]
            + mass * state.theta[j]
            + damping.b * (state.theta_t[j] + phi_x[j]);
        r.eta[j] = acc.eta_tt[j] - wave * eta_xx[j] + mass * state.eta[j]
            - gamma / eps3 * v_tx[j]
            + damping.c * u3[j];
    }
    Ok(r)
}

/// `-xi theta_x + eta - (xi eps3/mu) phi_t` at every node.
pub fn lorenz_gauge_residual(
    state: &FieldState,
    params: &PhysicalParams,
) -> Result<Vec<f64>, ModelError> {
    state.check_shape()?;
    let theta_x = stencil::d1_second_order(&state.theta, state.grid.h());
    let xi = params.xi();
    let k = xi * params.eps3() / params.mu();
    Ok((0..state.grid.node_count())
        .map(|j| -xi * theta_x[j] + state.eta[j] - k * state.phi_t[j])
        .collect())
}

/// `xi u2_x - u3 + (gamma/eps3) v_x` at every node.
pub fn compatibility_residual(
    v: &[f64],
    u2: &[f64],
    u3: &[f64],
    grid: &Grid,
    params: &PhysicalParams,
) -> Result<Vec<f64>, ModelError> {
    let n = grid.node_count();
    check_len("v", v, n)?;
    check_len("u2", u2, n)?;
    check_len("u3", u3, n)?;
    let h = grid.h();
    let u2_x = stencil::d1_second_order(u2, h);
    let v_x = stencil::d1_second_order(v, h);
    let g = params.gamma() / params.eps3();
    Ok((0..n)
        .map(|j| params.xi() * u2_x[j] - u3[j] + g * v_x[j])
        .collect())
}

/// Compatibility residual of a full state, through [`DerivedFields`].
pub fn state_compatibility_residual(
    state: &FieldState,
    params: &PhysicalParams,
) -> Result<Vec<f64>, ModelError> {
    let d = DerivedFields::from_state(state)?;
    compatibility_residual(&state.v, &d.u2, &d.u3, &state.grid, params)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_grid;

    #[test]
    fn xi_examples() {
        assert!((derive_xi(1.0, 1.0, 1.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!((derive_xi(12.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((derive_xi(1.0, 2.0, 3.0).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(matches!(
            derive_xi(0.0, 1.0, 1.0),
            Err(ModelError::InvalidParameter { name: "eps1", .. })
        ));
        assert!(derive_xi(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn derived_xi_mode_uses_formula() {
        let spec = ParamSpec {
            eps1: 12.0,
            h_thickness: 0.5,
            xi_mode: XiMode::Derived,
            xi: 123.0,
            ..ParamSpec::unit()
        };
        let p = spec.build().unwrap();
        assert_eq!(p.xi(), 12.0 * 0.25 / 12.0);
    }

    #[test]
    fn window_is_nonempty_and_invalid_inputs_rejected() {
        // lower/upper = gamma^2/(alpha eps3 + gamma^2) < 1 for any positive inputs
        let p = ParamSpec { gamma: 10.0, eps3: 0.01, ..ParamSpec::unit() }.build().unwrap();
        let (lo, hi) = p.coercivity_window();
        assert!(lo < hi);
        assert!(ParamSpec { rho: -1.0, ..ParamSpec::unit() }.build().is_err());
        assert!(ParamSpec { xi: f64::NAN, ..ParamSpec::unit() }.build().is_err());
    }

    #[test]
    fn labels() {
        let l = |a, b, c| DampingConfig::new(a, b, c).unwrap().label().as_str();
        assert_eq!(l(0.0, 0.0, 0.0), "undamped");
        assert_eq!(l(1.0, 1.0, 1.0), "abc");
        assert_eq!(l(0.0, 1.0, 1.0), "0bc");
        assert_eq!(l(1.0, 0.0, 1.0), "a0c");
        assert_eq!(l(1.0, 1.0, 0.0), "ab0");
        assert_eq!(l(1.0, 0.0, 0.0), "a00");
        assert_eq!(l(0.0, 1.0, 0.0), "0b0");
        assert_eq!(l(0.0, 0.0, 1.0), "00c");
        assert!(DampingConfig::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn residual_zero_state() {
        let g = build_grid(1.0, 20).unwrap();
        let s = FieldState::zeros(&g);
        let r = pde_residual(
            &s,
            &Accelerations::zeros(21),
            &PhysicalParams::unit(),
            &DampingConfig::new(1.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn residual_constant_phi() {
        let g = build_grid(1.0, 20).unwrap();
        let mut s = FieldState::zeros(&g);
        s.phi = vec![2.0; 21];
        let r = pde_residual(
            &s,
            &Accelerations::zeros(21),
            &PhysicalParams::unit(),
            &DampingConfig::new(0.0, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        for j in 0..21 {
            assert!((r.phi[j] - 2.0).abs() < 1e-12);
            assert!((r.eta[j] - 2.0).abs() < 1e-12);
            assert!(r.stretching[j].abs() < 1e-12);
            assert!(r.theta[j].abs() < 1e-12);
        }
    }

    #[test]
    fn residual_linear_v() {
        let g = build_grid(1.0, 20).unwrap();
        let mut s = FieldState::zeros(&g);
        s.v = g.nodes().to_vec();
        let r = pde_residual(
            &s,
            &Accelerations::zeros(21),
            &PhysicalParams::unit(),
            &DampingConfig::undamped(),
        )
        .unwrap();
        for j in 1..20 {
            assert!((r.phi[j] + 1.0).abs() < 1e-10);
            assert!(r.stretching[j].abs() < 1e-8);
            assert!(r.theta[j].abs() < 1e-12);
            assert!(r.eta[j].abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let g = build_grid(1.0, 20).unwrap();
        let mut s = FieldState::zeros(&g);
        s.eta.pop();
        assert!(matches!(
            lorenz_gauge_residual(&s, &PhysicalParams::unit()),
            Err(ModelError::Shape { what: "eta", .. })
        ));
        let s = FieldState::zeros(&g);
        assert!(pde_residual(&s, &Accelerations::zeros(5), &PhysicalParams::unit(), &DampingConfig::undamped()).is_err());
        assert!(compatibility_residual(&[0.0; 3], &[0.0; 21], &[0.0; 21], &g, &PhysicalParams::unit()).is_err());
    }

    #[test]
    fn gauge_examples() {
        let g = build_grid(1.0, 50).unwrap();
        let p = PhysicalParams::unit();
        assert_eq!(max_abs(&lorenz_gauge_residual(&FieldState::zeros(&g), &p).unwrap()), 0.0);
        let mut s = FieldState::zeros(&g);
        s.eta = vec![1.0; 51];
        for r in lorenz_gauge_residual(&s, &p).unwrap() {
            assert!((r - 1.0).abs() < 1e-14);
        }
        let b = FieldState::benchmark(&g);
        assert!(max_abs(&lorenz_gauge_residual(&b, &p).unwrap()) < 5e-3);
    }

    #[test]
    fn compatibility_examples() {
        use std::f64::consts::PI;
        let g = build_grid(1.0, 50).unwrap();
        let p = PhysicalParams::unit();
        let z = vec![0.0; 51];
        assert_eq!(max_abs(&compatibility_residual(&z, &z, &z, &g, &p).unwrap()), 0.0);
        // u2 = x^2/2 so that u2_x = x = u3 / xi, v constant
        let u2: Vec<f64> = g.nodes().iter().map(|x| 0.5 * x * x).collect();
        let u3: Vec<f64> = g.nodes().to_vec();
        assert!(max_abs(&compatibility_residual(&z, &u2, &u3, &g, &p).unwrap()) < 1e-12);
        let b = FieldState::benchmark(&g);
        let r = state_compatibility_residual(&b, &p).unwrap();
        let exact = PI * PI + 1.0 - 0.03 * PI;
        assert!((max_abs(&r) - exact).abs() < 2e-2 * exact);
    }

    #[test]
    fn derived_fields_of_zero_state_vanish() {
        let g = build_grid(1.0, 10).unwrap();
        let d = DerivedFields::from_state(&FieldState::zeros(&g)).unwrap();
        assert!(d.u1.iter().chain(&d.u2).chain(&d.u3).all(|&x| x == 0.0));
    }
}
