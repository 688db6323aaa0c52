//! Explicit resolvent-bound constants for the four damped cases with a
//! uniform bound, and the coercivity constant of the bilinear form.
//!
//! Every chain is written once over [`Scalar`], so the same formulas run in
//! floating point and in exact rational arithmetic.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CaseLabel, DampingConfig, PhysicalParams};
use crate::spectral::ResolventScan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid bound configuration: {0}")]
    InvalidConfig(String),
    #[error("no explicit bound for damping case {case}: {reason}")]
    CaseMismatch { case: &'static str, reason: String },
    #[error("exact evaluation impossible: {0}")]
    NotRational(String),
}

/// Poincare constant and coercivity tuning scalar; `None` picks the defaults
/// `2L/pi` and the midpoint of the coercivity window.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    #[serde(default)]
    pub poincare_constant: Option<f64>,
    #[serde(default)]
    pub k_coercivity: Option<f64>,
}

impl BoundConfig {
    pub fn poincare(&self, params: &PhysicalParams) -> Result<f64, BoundsError> {
        let cp = self.poincare_constant.unwrap_or(2.0 * params.length() / PI);
        if !(cp.is_finite() && cp > 0.0) {
            return Err(BoundsError::InvalidConfig(format!("poincare_constant must be > 0, got {cp}")));
        }
        Ok(cp)
    }
}

/// `(k, C)` with `C = min(rho, mu, xi eps3, alpha + gamma^2/eps3 - gamma xi/k, eps3 xi^2 - gamma xi k)`.
pub fn coercivity_constant(params: &PhysicalParams, config: &BoundConfig) -> Result<(f64, f64), BoundsError> {
    let (lo, hi) = params.coercivity_window();
    let k = config.k_coercivity.unwrap_or(0.5 * (lo + hi));
    if !(k > lo && k < hi) {
        return Err(BoundsError::InvalidConfig(format!("k = {k} lies outside the coercivity window ({lo}, {hi})")));
    }
    let (rho, alpha, gamma, eps3, mu, xi) =
        (params.rho(), params.alpha(), params.gamma(), params.eps3(), params.mu(), params.xi());
    let c = [rho, mu, xi * eps3, alpha + gamma * gamma / eps3 - gamma * xi / k, eps3 * xi * xi - gamma * xi * k]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok((k, c))
}

/// Arithmetic needed by the constant chains.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn lift(x: f64) -> Result<Self, BoundsError>;
    fn sqrt_checked(&self) -> Result<Self, BoundsError>;
    fn is_positive(&self) -> bool;
    fn as_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn lift(x: f64) -> Result<Self, BoundsError> {
        Ok(x)
    }
    fn sqrt_checked(&self) -> Result<Self, BoundsError> {
        Ok(self.sqrt())
    }
    fn is_positive(&self) -> bool {
        *self > 0.0
    }
    fn as_f64(&self) -> f64 {
        *self
    }
}

fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

impl Scalar for BigRational {
    fn lift(x: f64) -> Result<Self, BoundsError> {
        BigRational::from_float(x).ok_or_else(|| BoundsError::NotRational(format!("{x} is not finite")))
    }
    fn sqrt_checked(&self) -> Result<Self, BoundsError> {
        match (exact_sqrt(self.numer()), exact_sqrt(self.denom())) {
            (Some(p), Some(q)) => Ok(BigRational::new(p, q)),
            _ => Err(BoundsError::NotRational(format!("sqrt({self}) is irrational"))),
        }
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

struct Inputs<S> {
    rho: S,
    alpha: S,
    gamma: S,
    eps3: S,
    mu: S,
    xi: S,
    a: S,
    b: S,
    c: S,
    cp: S,
}

impl<S: Scalar> Inputs<S> {
    fn new(params: &PhysicalParams, damping: &DampingConfig, cp: f64) -> Result<Self, BoundsError> {
        Ok(Self {
            rho: S::lift(params.rho())?,
            alpha: S::lift(params.alpha())?,
            gamma: S::lift(params.gamma())?,
            eps3: S::lift(params.eps3())?,
            mu: S::lift(params.mu())?,
            xi: S::lift(params.xi())?,
            a: S::lift(damping.a)?,
            b: S::lift(damping.b)?,
            c: S::lift(damping.c)?,
            cp: S::lift(cp)?,
        })
    }
}

/// One evaluated chain: named sub-constants in evaluation order.
struct Chain<S> {
    name: &'static str,
    constants: Vec<(&'static str, S)>,
    formulas: Vec<&'static str>,
    notes: Vec<&'static str>,
}

fn one<S: Scalar>() -> S {
    S::lift(1.0).expect("1 is representable")
}

fn num<S: Scalar>(x: f64) -> S {
    S::lift(x).expect("small constants are representable")
}

// (1/xi + gamma^2/(2 xi^2 eps3^2)), shared by every u1 estimate
fn coupling<S: Scalar>(p: &Inputs<S>) -> S {
    one::<S>() / p.xi.clone()
        + p.gamma.clone() * p.gamma.clone() / (num::<S>(2.0) * p.xi.clone() * p.xi.clone() * p.eps3.clone() * p.eps3.clone())
}

// (1 + b^2 xi eps3/(2 mu))
fn b_factor<S: Scalar>(p: &Inputs<S>) -> S {
    one::<S>() + p.b.clone() * p.b.clone() * p.xi.clone() * p.eps3.clone() / (num::<S>(2.0) * p.mu.clone())
}

// 2 (rho X1 + 2 sqrt(rho/alpha) c_p + a c_p^2/alpha + gamma^2/alpha X3)
fn potential_bound<S: Scalar>(p: &Inputs<S>, x1: &S, x3: &S) -> Result<S, BoundsError> {
    let s = (p.rho.clone() / p.alpha.clone()).sqrt_checked()?;
    Ok(num::<S>(2.0)
        * (p.rho.clone() * x1.clone()
            + num::<S>(2.0) * s * p.cp.clone()
            + p.a.clone() * p.cp.clone() * p.cp.clone() / p.alpha.clone()
            + p.gamma.clone() * p.gamma.clone() / p.alpha.clone() * x3.clone()))
}

fn chain_k<S: Scalar>(p: &Inputs<S>) -> Result<Chain<S>, BoundsError> {
    let k1 = one::<S>() / p.a.clone();
    let k2 = one::<S>() / (p.b.clone() * p.xi.clone() * p.eps3.clone());
    let k3 = one::<S>() / (p.c.clone() * p.eps3.clone());
    let k4 = potential_bound(p, &k1, &k3)?;
    let root = (p.xi.clone() * p.eps3.clone() * p.mu.clone()).sqrt_checked()?;
    let k5 = num::<S>(2.0)
        * p.xi.clone()
        * p.eps3.clone()
        * (b_factor(p) * k2.clone() + coupling(p) * k3.clone() + k4.clone() / num::<S>(2.0) + num::<S>(2.0) / root);
    let k = p.rho.clone() * k1.clone() + p.xi.clone() * p.eps3.clone() * k2.clone() + p.eps3.clone() * k3.clone()
        + k4.clone()
        + k5.clone();
    Ok(Chain {
        name: "K",
        constants: vec![("K1", k1), ("K2", k2), ("K3", k3), ("K4", k4), ("K5", k5), ("K", k)],
        formulas: vec![
            "K1 = 1/a",
            "K2 = 1/(b xi eps3)",
            "K3 = 1/(c eps3)",
            "K4 = 2(rho K1 + 2 sqrt(rho/alpha) c_p + a c_p^2/alpha + gamma^2/alpha K3)",
            "K5 = 2 xi eps3 ((1 + b^2 xi eps3/(2 mu)) K2 + (1/xi + gamma^2/(2 xi^2 eps3^2)) K3 + K4/2 + 2/sqrt(xi eps3 mu))",
            "K = rho K1 + xi eps3 K2 + eps3 K3 + K4 + K5",
        ],
        notes: vec![],
    })
}

fn chain_m<S: Scalar>(p: &Inputs<S>) -> Result<Chain<S>, BoundsError> {
    let two = num::<S>(2.0);
    let m1 = one::<S>() / (p.b.clone() * p.xi.clone() * p.eps3.clone());
    let m2 = one::<S>() / (p.c.clone() * p.eps3.clone());
    let bc = p.b.clone() - p.c.clone();
    let m3 = two.clone() * p.eps3.clone() * p.alpha.clone() / (p.b.clone() * p.gamma.clone())
        * (bc.clone() * bc * p.eps3.clone() / (two.clone() * p.gamma.clone()) * m2.clone());
    let root = (p.eps3.clone() * p.alpha.clone()).sqrt_checked()?;
    let m4 = two.clone()
        + p.gamma.clone() / root
        + p.gamma.clone() / two.clone() * m2.clone()
        + (one::<S>() + p.gamma.clone() / (two.clone() * p.alpha.clone())) * m3.clone();
    let root5 = (p.xi.clone() * p.eps3.clone() * p.mu.clone()).sqrt_checked()?;
    let m5 = p.xi.clone()
        * p.eps3.clone()
        * (b_factor(p) * m1.clone() + coupling(p) * m2.clone() + m3.clone() / two.clone() + two.clone() / root5);
    let m = m3.clone() + m4.clone() + m5.clone() + p.xi.clone() * p.eps3.clone() * m1.clone() + p.eps3.clone() * m2.clone();
    Ok(Chain {
        name: "M",
        constants: vec![("M1", m1), ("M2", m2), ("M3", m3), ("M4", m4), ("M5", m5), ("M", m)],
        formulas: vec![
            "M1 = 1/(b xi eps3)",
            "M2 = 1/(c eps3)",
            "M3 = (2 eps3 alpha/(b gamma)) ((b - c)^2 eps3/(2 gamma)) M2",
            "M4 = 2 + gamma/sqrt(eps3 alpha) + (gamma/2) M2 + (1 + gamma/(2 alpha)) M3",
            "M5 = xi eps3 ((1 + b^2 xi eps3/(2 mu)) M1 + (1/xi + gamma^2/(2 xi^2 eps3^2)) M2 + M3/2 + 2/sqrt(xi eps3 mu))",
            "M = M3 + M4 + M5 + xi eps3 M1 + eps3 M2",
        ],
        notes: vec![
            "M3 is evaluated as printed; it carries the factor (b - c)^2 and vanishes when b = c",
            "M4 follows the final inequality of its proof, (1 + gamma/(2 alpha)) M3, not the statement's (1 + gamma/2) M",
            "the last term of M is read as eps3 M2",
        ],
    })
}

fn chain_n<S: Scalar>(p: &Inputs<S>) -> Result<Chain<S>, BoundsError> {
    let two = num::<S>(2.0);
    let n1 = one::<S>() / p.a.clone();
    let n2 = one::<S>() / (p.c.clone() * p.eps3.clone());
    let n3 = potential_bound(p, &n1, &n2)?;
    let n4 = two.clone()
        * (p.eps3.clone() / p.xi.clone() * n2.clone()
            + p.gamma.clone() * p.gamma.clone() / (p.eps3.clone() * p.xi.clone() * p.alpha.clone()) * n3.clone());
    let root = (p.xi.clone() * p.eps3.clone() * p.mu.clone()).sqrt_checked()?;
    // b = 0 in this case, so (1 + b^2 xi eps3/(2 mu)) = 1
    let n5 = two.clone()
        * p.xi.clone()
        * p.eps3.clone()
        * (n4.clone() + coupling(p) * n2.clone() + n3.clone() / two.clone() + two.clone() / root);
    let n = n3.clone() + p.rho.clone() * n1.clone() + n5.clone() + n4.clone() + p.eps3.clone() * n2.clone();
    Ok(Chain {
        name: "N",
        constants: vec![("N1", n1), ("N2", n2), ("N3", n3), ("N4", n4), ("N5", n5), ("N", n)],
        formulas: vec![
            "N1 = 1/a",
            "N2 = 1/(c eps3)",
            "N3 = 2(rho N1 + 2 sqrt(rho/alpha) c_p + a c_p^2/alpha + gamma^2/alpha N2)",
            "N4 = 2((eps3/xi) N2 + gamma^2/(eps3 xi alpha) N3)",
            "N5 = 2 xi eps3 ((1 + b^2 xi eps3/(2 mu)) N4 + (1/xi + gamma^2/(2 xi^2 eps3^2)) N2 + N3/2 + 2/sqrt(xi eps3 mu))",
            "N = N3 + rho N1 + N5 + N4 + eps3 N2",
        ],
        notes: vec!["N5 is printed with a b-term although b = 0 here; evaluated with b = 0"],
    })
}

fn chain_s<S: Scalar>(p: &Inputs<S>) -> Result<Chain<S>, BoundsError> {
    let two = num::<S>(2.0);
    let s1 = one::<S>() / p.a.clone();
    let s2 = one::<S>() / (p.b.clone() * p.xi.clone() * p.eps3.clone());
    let sra = (p.rho.clone() / p.alpha.clone()).sqrt_checked()?;
    let sae = (p.alpha.clone() * p.eps3.clone()).sqrt_checked()?;
    let binv = one::<S>() / p.b.clone();
    let s3 = two.clone()
        * (sra * p.cp.clone()
            + binv.clone()
            + p.gamma.clone() * binv / sae
            + p.a.clone() * p.cp.clone() * p.cp.clone() / (num::<S>(4.0) * p.alpha.clone()))
        + s1.clone();
    let root = (p.xi.clone() * p.eps3.clone() * p.mu.clone()).sqrt_checked()?;
    let s4 = p.xi.clone()
        * p.eps3.clone()
        * (b_factor(p) * s2.clone()
            + (coupling(p) / p.eps3.clone() + one::<S>() / p.alpha.clone()) * s3.clone()
            + two / root);
    let s = p.rho.clone() * s1.clone() + p.xi.clone() * p.eps3.clone() * s2.clone() + num::<S>(3.0) * s3.clone() + s4.clone();
    Ok(Chain {
        name: "S",
        constants: vec![("S1", s1), ("S2", s2), ("S3", s3), ("S4", s4), ("S", s)],
        formulas: vec![
            "S1 = 1/a",
            "S2 = 1/(b xi eps3)",
            "S3 = 2(sqrt(rho/alpha) c_p + 1/b + gamma/(b sqrt(alpha eps3)) + a c_p^2/(4 alpha)) + S1",
            "S4 = xi eps3 ((1 + b^2 xi eps3/(2 mu)) S2 + [(1/xi + gamma^2/(2 xi^2 eps3^2))/eps3 + 1/alpha] S3 + 2/sqrt(xi eps3 mu))",
            "S = rho S1 + xi eps3 S2 + 3 S3 + S4",
        ],
        notes: vec![],
    })
}

fn evaluate<S: Scalar>(params: &PhysicalParams, damping: &DampingConfig, cp: f64) -> Result<Chain<S>, BoundsError> {
    damping.validate().map_err(|e| BoundsError::InvalidConfig(e.to_string()))?;
    let label = damping.label();
    let p = Inputs::<S>::new(params, damping, cp)?;
    let chain = match label {
        CaseLabel::Abc => chain_k(&p)?,
        CaseLabel::ZeroBC => chain_m(&p)?,
        CaseLabel::AZeroC => chain_n(&p)?,
        CaseLabel::ABZero => chain_s(&p)?,
        other => {
            return Err(BoundsError::CaseMismatch {
                case: other.as_str(),
                reason: "explicit constants exist only when at least two of a, b, c are positive".into(),
            })
        }
    };
    let (name, last) = chain.constants.last().expect("chains end with the final constant");
    if !last.is_positive() {
        return Err(BoundsError::InvalidConfig(format!("{name} is not positive")));
    }
    Ok(chain)
}

/// Evaluated constant chain for one damping case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundReport {
    pub case: CaseLabel,
    pub damping: [f64; 3],
    pub poincare_constant: f64,
    pub constants: BTreeMap<String, f64>,
    /// Name of the final constant: `K`, `M`, `N` or `S`.
    pub final_name: String,
    #[serde(rename = "final")]
    pub final_constant: f64,
    pub citations: Vec<String>,
    pub notes: Vec<String>,
}

pub fn resolvent_bound(
    params: &PhysicalParams,
    damping: &DampingConfig,
    config: &BoundConfig,
) -> Result<BoundReport, BoundsError> {
    let cp = config.poincare(params)?;
    let chain = evaluate::<f64>(params, damping, cp)?;
    let final_constant = chain.constants.last().map(|c| c.1).expect("chains end with the final constant");
    Ok(BoundReport {
        case: damping.label(),
        damping: [damping.a, damping.b, damping.c],
        poincare_constant: cp,
        constants: chain.constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        final_name: chain.name.to_string(),
        final_constant,
        citations: chain.formulas.iter().map(|s| s.to_string()).collect(),
        notes: chain.notes.iter().map(|s| s.to_string()).collect(),
    })
}

/// Exact chain values as reduced fractions `p/q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactBoundReport {
    pub case: CaseLabel,
    pub constants: BTreeMap<String, String>,
    pub final_constant: String,
}

/// Rational evaluation. Every input is taken at its exact binary value, so
/// the Poincare constant must be supplied explicitly and every square root
/// must come out rational.
pub fn resolvent_bound_exact(
    params: &PhysicalParams,
    damping: &DampingConfig,
    poincare_constant: f64,
) -> Result<ExactBoundReport, BoundsError> {
    let chain = evaluate::<BigRational>(params, damping, poincare_constant)?;
    let fmt = |r: &BigRational| {
        if r.denom().is_one() {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        }
    };
    let final_constant = fmt(&chain.constants.last().expect("nonempty chain").1);
    Ok(ExactBoundReport {
        case: damping.label(),
        constants: chain.constants.iter().map(|(k, v)| (k.to_string(), fmt(v))).collect(),
        final_constant,
    })
}

/// Result of checking `sup_norm <= slack * final`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub pass: bool,
    /// `sup_norm / (slack * final)`; infinite when the scan hit a singular shift.
    pub ratio: f64,
    pub sup_norm: Option<f64>,
    pub bound: f64,
    pub slack: f64,
}

pub fn bound_vs_measurement(
    report: &BoundReport,
    scan: &ResolventScan,
    scan_damping: &DampingConfig,
    slack: f64,
) -> Result<BoundComparison, BoundsError> {
    if !(slack.is_finite() && slack > 0.0) {
        return Err(BoundsError::InvalidConfig(format!("slack must be > 0, got {slack}")));
    }
    if report.damping != [scan_damping.a, scan_damping.b, scan_damping.c] {
        return Err(BoundsError::InvalidConfig(format!(
            "report damping {:?} does not match scan damping ({}, {}, {})",
            report.damping, scan_damping.a, scan_damping.b, scan_damping.c
        )));
    }
    let bound = slack * report.final_constant;
    let ratio = scan.sup_norm.map_or(f64::INFINITY, |s| s / bound);
    Ok(BoundComparison { pass: ratio <= 1.0, ratio, sup_norm: scan.sup_norm, bound, slack })
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
