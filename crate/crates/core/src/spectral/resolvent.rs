// Resolvent norms `||(i lambda I - A)^{-1}||_2` from one orthogonal Hessenberg
// reduction of `A`: each shift costs an O(n^2) LU of a Hessenberg matrix
// plus power iteration on `M^{-1} M^{-H}`.

use num_complex::Complex64;

use crate::linalg::Mat;

use super::eigen::hessenberg;

/// `A` in Hessenberg form `Q^T A Q`; 2-norms of resolvents are unchanged.
pub struct HessenbergForm {
    n: usize,
    h: Vec<f64>,
    scale: f64,
}

/// LU with partial pivoting of `i lambda I - H`. Only the subdiagonal needs
/// elimination, so `L` is stored as one multiplier per column.
struct HessLu {
    n: usize,
    u: Vec<Complex64>,
    mult: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl HessenbergForm {
    pub fn new(a: &Mat) -> Self {
        let n = a.nrows();
        let mut h = a.clone();
        hessenberg(&mut h);
        let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
        Self { n, h: h.as_slice().to_vec(), scale }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    fn factor(&self, lambda: f64) -> Option<HessLu> {
        let n = self.n;
        let mut u: Vec<Complex64> = self.h.iter().map(|&x| Complex64::new(-x, 0.0)).collect();
        for i in 0..n {
            u[i * n + i] += Complex64::new(0.0, lambda);
        }
        let mut mult = vec![Complex64::new(0.0, 0.0); n];
        let mut swapped = vec![false; n];
        for k in 0..n {
            if k + 1 < n {
                let (a, b) = (u[k * n + k], u[(k + 1) * n + k]);
                if b.norm() > a.norm() {
                    swapped[k] = true;
                    for j in k..n {
                        u.swap(k * n + j, (k + 1) * n + j);
                    }
                }
                let piv = u[k * n + k];
                if piv.norm() == 0.0 {
                    return None;
                }
                let m = u[(k + 1) * n + k] / piv;
                mult[k] = m;
                u[(k + 1) * n + k] = Complex64::new(0.0, 0.0);
                if m.norm() != 0.0 {
                    for j in k + 1..n {
                        let t = u[k * n + j];
                        u[(k + 1) * n + j] -= m * t;
                    }
                }
            } else if u[k * n + k].norm() == 0.0 {
                return None;
            }
        }
        Some(HessLu { n, u, mult, swapped })
    }

    /// Estimate of `||(i lambda I - A)^{-1}||_2`; `None` when the shifted
    /// matrix is numerically singular.
    pub fn resolvent_norm(&self, lambda: f64) -> Option<f64> {
        let lu = self.factor(lambda)?;
        let n = self.n;
        // start with a vector that is unlikely to be orthogonal to the top singular vector
        let mut x: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + 0.37 * ((i * 7) % 11) as f64, 0.1)).collect();
        normalize(&mut x);
        let mut est = 0.0;
        for it in 0..200 {
            // x <- M^{-1} M^{-H} x; ||M^{-H} x|| -> sigma_max(M^{-1})
            lu.solve_adjoint(&mut x);
            let g = norm(&x);
            if !g.is_finite() {
                return None;
            }
            lu.solve(&mut x);
            let nx = norm(&x);
            if !nx.is_finite() || nx == 0.0 {
                return None;
            }
            x.iter_mut().for_each(|z| *z /= nx);
            let rel = (g - est).abs() / g;
            est = g;
            if it >= 2 && rel < 1e-8 {
                break;
            }
        }
        // sigma_min below roundoff relative to ||A||
        if est * self.scale > 1e13 {
            return None;
        }
        Some(est)
    }
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(x: &mut [Complex64]) {
    let n = norm(x);
    x.iter_mut().for_each(|z| *z /= n);
}

impl HessLu {
    /// `M x = b`.
    fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
            let t = b[k];
            b[k + 1] -= self.mult[k] * t;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.u[i * n + j] * b[j];
            }
            b[i] = s / self.u[i * n + i];
        }
    }

    /// `M^H x = b`, with `M = P_0 L_0 ... P_{n-2} L_{n-2} U` read backwards.
    fn solve_adjoint(&self, b: &mut [Complex64]) {
        let n = self.n;
        // U^H y = b
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.u[j * n + i].conj() * b[j];
            }
            b[i] = s / self.u[i * n + i].conj();
        }
        for k in (0..n.saturating_sub(1)).rev() {
            let t = b[k + 1];
            b[k] -= self.mult[k].conj() * t;
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_resolvent() {
        let a = Mat::from_fn(5, 5, |i, j| if i == j { -(i as f64 + 1.0) } else { 0.0 });
        let h = HessenbergForm::new(&a);
        // min |i lambda + k| over k = 1..5 is at k = 1
        let r = h.resolvent_norm(2.0).unwrap();
        assert!((r * 5f64.sqrt() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn singular_shift_is_flagged() {
        let a = Mat::from_fn(2, 2, |i, j| [[0.0, -1.0], [1.0, 0.0]][i][j]);
        let h = HessenbergForm::new(&a);
        assert!(h.resolvent_norm(1.0).is_none());
        assert!((h.resolvent_norm(3.0).unwrap() - 0.5).abs() < 1e-7);
    }

    #[test]
    fn nonnormal_against_dense_singular_values() {
        // Jordan-like block: ||(iI - A)^{-1}|| exceeds 1/dist(spectrum)
        let n = 6;
        let a = Mat::from_fn(n, n, |i, j| if i == j { -1.0 } else if j == i + 1 { 3.0 } else { 0.0 });
        let h = HessenbergForm::new(&a);
        let r = h.resolvent_norm(0.5).unwrap();
        assert!(r > 1.0 / (1.25f64).sqrt());
        let sigma = {
            use nalgebra::DMatrix;
            let m = DMatrix::from_fn(n, n, |i, j| {
                let d = if i == j { Complex64::new(0.0, 0.5) } else { Complex64::new(0.0, 0.0) };
                d - Complex64::new(a[(i, j)], 0.0)
            });
            let sv = m.singular_values();
            sv.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        assert!((r * sigma - 1.0).abs() < 1e-6);
    }
}
