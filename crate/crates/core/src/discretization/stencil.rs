//! Finite-difference stencils and quadrature on uniform grids.
//!
//! Two first-derivative operators live here. [`d1_second_order`] is centered
//! in the interior with 3-point one-sided ends (order 2 everywhere) and backs
//! the residual evaluators. [`d1_sbp`] is centered in the interior with 2-point
//! ends; it satisfies summation by parts against [`trapezoid`] and is the
//! operator the time-domain solver and the energy functional share.

pub fn d1_second_order(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 3, "need at least 3 nodes");
    let mut d = vec![0.0; n];
    for j in 1..n - 1 {
        d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    d
}

pub fn d2_second_order(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 4, "need at least 4 nodes");
    let h2 = h * h;
    let mut d = vec![0.0; n];
    for j in 1..n - 1 {
        d[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / h2;
    }
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    d
}

pub fn d1_sbp(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 2, "need at least 2 nodes");
    let mut d = vec![0.0; n];
    for j in 1..n - 1 {
        d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    }
    d[0] = (f[1] - f[0]) / h;
    d[n - 1] = (f[n - 1] - f[n - 2]) / h;
    d
}

/// Composite trapezoid rule.
pub fn trapezoid(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = f[1..n - 1].iter().sum();
    h * (inner + 0.5 * (f[0] + f[n - 1]))
}

/// Trapezoid rule of `f^2`.
pub fn trapezoid_sq(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = f[1..n - 1].iter().map(|x| x * x).sum();
    h * (inner + 0.5 * (f[0] * f[0] + f[n - 1] * f[n - 1]))
}
