use std::sync::OnceLock;

use num_complex::Complex64;

use crate::linalg::{Csr, Mat, Triplets};
use crate::model::{DampingConfig, PhysicalParams};

use super::{DiscretizationError, Grid};

/// Largest `n_cells` accepted for dense generator work by default.
pub const DEFAULT_MAX_DENSE_NODES: usize = 400;

/// Five-field first-order state `U = (v, z, u1, u2, u3)`.
///
/// `v`, `z`, `u1`, `u2` are nodal (length `N + 1`, boundary entries fixed at
/// zero where the domain requires it); `u3` lives at the `N` cell midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupState<T = f64> {
    pub v: Vec<T>,
    pub z: Vec<T>,
    pub u1: Vec<T>,
    pub u2: Vec<T>,
    pub u3: Vec<T>,
}

/// Staggered discretization of the generator `A - B`.
///
/// Grid layout: `v`, `z` at nodes `1..=N` (`v(0) = 0`), `u1`, `u2` at
/// interior nodes (zero at both ends), `u3` at midpoints. Differences across
/// cells map nodes to midpoints, so the undamped operator is skew-adjoint in
/// the discrete energy inner product and `z` at `x = L` picks up the natural
/// condition `alpha v_x + gamma u3 = 0`.
///
/// Spectral work uses the compression of `A_h` onto the discrete
/// compatibility subspace `u3 = xi D u2 + (gamma/eps3) D v`, written in
/// coordinates orthonormal for the energy inner product; its Euclidean norm
/// is the energy norm.
#[derive(Debug)]
pub struct GeneratorMatrix {
    grid: Grid,
    params: PhysicalParams,
    damping: DampingConfig,
    a0: Csr,
    b_diag: Vec<f64>,
    gram: Csr,
    compat: Csr,
    compressed: OnceLock<(Mat, Mat)>,
}

fn n_full(n: usize) -> usize {
    5 * n - 2
}

fn n_reduced(n: usize) -> usize {
    4 * n - 2
}

// full layout per node block j = 1..=N: [u3_{j-1/2}, v_j, z_j, u1_j, u2_j]
fn iu3(k: usize) -> usize {
    5 * k
}
fn iv(j: usize) -> usize {
    5 * (j - 1) + 1
}
fn iz(j: usize) -> usize {
    5 * (j - 1) + 2
}
fn iu1(j: usize) -> usize {
    5 * (j - 1) + 3
}
fn iu2(j: usize) -> usize {
    5 * (j - 1) + 4
}

// reduced layout per block: [v_j, z_j, u1_j, u2_j]
fn rv(j: usize) -> usize {
    4 * (j - 1)
}
fn rz(j: usize) -> usize {
    4 * (j - 1) + 1
}
fn ru1(j: usize) -> usize {
    4 * (j - 1) + 2
}
fn ru2(j: usize) -> usize {
    4 * (j - 1) + 3
}

pub fn assemble_generator(
    params: &PhysicalParams,
    damping: &DampingConfig,
    grid: &Grid,
) -> Result<GeneratorMatrix, DiscretizationError> {
    assemble_generator_capped(params, damping, grid, DEFAULT_MAX_DENSE_NODES)
}

pub fn assemble_generator_capped(
    params: &PhysicalParams,
    damping: &DampingConfig,
    grid: &Grid,
    max_cells: usize,
) -> Result<GeneratorMatrix, DiscretizationError> {
    damping.validate()?;
    let n = grid.n_cells();
    if n > max_cells {
        return Err(DiscretizationError::DimensionOverflow { nodes: grid.node_count(), cap: max_cells + 1 });
    }
    if (grid.length() - params.length()).abs() > 1e-12 * params.length() {
        return Err(DiscretizationError::LengthMismatch { grid: grid.length(), params: params.length() });
    }
    let h = grid.h();
    let (rho, alpha, gamma) = (params.rho(), params.alpha(), params.gamma());
    let (eps3, mu, xi) = (params.eps3(), params.mu(), params.xi());
    let w = |j: usize| if j == n { 0.5 * h } else { h };
    let nf = n_full(n);

    let mut a = Triplets::new(nf, nf);
    // v' = z
    for j in 1..=n {
        a.push(iv(j), iz(j), 1.0);
    }
    // rho w_j z_j' = sigma_{j+1/2} - sigma_{j-1/2}, sigma = alpha D v + gamma u3, sigma_{N+1/2} = 0
    let add_sigma = |row: usize, k: usize, s: f64, a: &mut Triplets| {
        // sigma at midpoint k = (alpha/h)(v_{k+1} - v_k) + gamma u3_k
        a.push(row, iv(k + 1), s * alpha / h);
        if k >= 1 {
            a.push(row, iv(k), -s * alpha / h);
        }
        a.push(row, iu3(k), s * gamma);
    };
    for j in 1..=n {
        let s = 1.0 / (rho * w(j));
        if j < n {
            add_sigma(iz(j), j, s, &mut a);
        }
        add_sigma(iz(j), j - 1, -s, &mut a);
    }
    for j in 1..n {
        // u1' = u2 - u3_x
        a.push(iu1(j), iu2(j), 1.0);
        a.push(iu1(j), iu3(j - 1), 1.0 / h);
        a.push(iu1(j), iu3(j), -1.0 / h);
        // u2' = -(mu/(xi eps3)) u1
        a.push(iu2(j), iu1(j), -mu / (xi * eps3));
    }
    // u3' = -(mu/eps3) u1_x + (gamma/eps3) z_x at midpoints
    for k in 0..n {
        if k + 1 < n {
            a.push(iu3(k), iu1(k + 1), -mu / (eps3 * h));
        }
        if k >= 1 {
            a.push(iu3(k), iu1(k), mu / (eps3 * h));
        }
        a.push(iu3(k), iz(k + 1), gamma / (eps3 * h));
        if k >= 1 {
            a.push(iu3(k), iz(k), -gamma / (eps3 * h));
        }
    }
    let a0 = Csr::from_triplets(&a);

    let mut b_diag = vec![0.0; nf];
    for j in 1..=n {
        b_diag[iz(j)] = damping.a / rho;
        if j < n {
            b_diag[iu2(j)] = damping.b;
        }
    }
    for k in 0..n {
        b_diag[iu3(k)] = damping.c;
    }

    // ||U||^2 = alpha h |Dv|^2 + rho sum w z^2 + mu h |u1|^2 + xi eps3 h |u2|^2 + eps3 h |u3|^2
    let mut g = Triplets::new(nf, nf);
    for k in 0..n {
        let mut taps = vec![(iv(k + 1), 1.0 / h)];
        if k >= 1 {
            taps.push((iv(k), -1.0 / h));
        }
        for &(p, wp) in &taps {
            for &(q, wq) in &taps {
                g.push(p, q, alpha * h * wp * wq);
            }
        }
        g.push(iu3(k), iu3(k), eps3 * h);
    }
    for j in 1..=n {
        g.push(iz(j), iz(j), rho * w(j));
        if j < n {
            g.push(iu1(j), iu1(j), mu * h);
            g.push(iu2(j), iu2(j), xi * eps3 * h);
        }
    }
    let gram = Csr::from_triplets(&g);

    let nr = n_reduced(n);
    let mut t = Triplets::new(nf, nr);
    for j in 1..=n {
        t.push(iv(j), rv(j), 1.0);
        t.push(iz(j), rz(j), 1.0);
        if j < n {
            t.push(iu1(j), ru1(j), 1.0);
            t.push(iu2(j), ru2(j), 1.0);
        }
    }
    for k in 0..n {
        // u3_k = xi (u2_{k+1} - u2_k)/h + (gamma/eps3)(v_{k+1} - v_k)/h
        if k + 1 < n {
            t.push(iu3(k), ru2(k + 1), xi / h);
        }
        if k >= 1 {
            t.push(iu3(k), ru2(k), -xi / h);
            t.push(iu3(k), rv(k), -gamma / (eps3 * h));
        }
        t.push(iu3(k), rv(k + 1), gamma / (eps3 * h));
    }
    let compat = Csr::from_triplets(&t);

    Ok(GeneratorMatrix {
        grid: grid.clone(),
        params: *params,
        damping: *damping,
        a0,
        b_diag,
        gram,
        compat,
        compressed: OnceLock::new(),
    })
}

impl GeneratorMatrix {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }
    pub fn damping(&self) -> &DampingConfig {
        &self.damping
    }

    /// Dimension of the compressed operator: `5 (N + 1)` minus the Dirichlet
    /// values and the compatibility constraints.
    pub fn dimension(&self) -> usize {
        n_reduced(self.grid.n_cells())
    }

    pub fn full_dimension(&self) -> usize {
        n_full(self.grid.n_cells())
    }

    /// Undamped part `A_0`.
    pub fn undamped(&self) -> &Csr {
        &self.a0
    }

    /// Diagonal of `B_h` in the full staggered layout.
    pub fn damping_diagonal(&self) -> &[f64] {
        &self.b_diag
    }

    /// Entry-wise diagonal of `B_h` by block: `(z, u2, u3)` values at the first node.
    pub fn damping_blocks(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.grid.n_cells();
        let z = (1..=n).map(|j| self.b_diag[iz(j)]).collect();
        let u2 = (1..n).map(|j| self.b_diag[iu2(j)]).collect();
        let u3 = (0..n).map(|k| self.b_diag[iu3(k)]).collect();
        (z, u2, u3)
    }

    /// `A_h = A_0 - B_h` on the full staggered layout.
    pub fn full_operator(&self) -> Csr {
        let mut t = self.a0.to_triplets();
        for (i, &b) in self.b_diag.iter().enumerate() {
            t.push(i, i, -b);
        }
        Csr::from_triplets(&t)
    }

    /// Energy Gram matrix `G` with `||U||^2 = U^T G U`.
    pub fn gram(&self) -> &Csr {
        &self.gram
    }

    /// Map from reduced coordinates `(v, z, u1, u2)` to the full layout.
    pub fn compatibility_map(&self) -> &Csr {
        &self.compat
    }

    fn build_compressed(&self) -> Result<(Mat, Mat), DiscretizationError> {
        let tt = self.compat.transpose();
        let t_dense = self.compat.to_dense();
        let gt = self.gram.mul_dense(&t_dense);
        let gr = tt.mul_dense(&gt);
        let ab = self.full_operator();
        let at = ab.mul_dense(&t_dense);
        let gat = self.gram.mul_dense(&at);
        let sr = tt.mul_dense(&gat);
        let r = gr.cholesky_upper().map_err(|e| DiscretizationError::Gram(e.to_string()))?;
        // R^{-T} S R^{-1} via two forward solves with R^T
        let x = r.solve_upper_transpose(&sr);
        let y = r.solve_upper_transpose(&x.transpose());
        Ok((y.transpose(), r))
    }

    fn compressed_parts(&self) -> &(Mat, Mat) {
        self.compressed.get_or_init(|| self.build_compressed().expect("energy Gram matrix is positive definite"))
    }

    /// Dense compressed generator in energy-orthonormal coordinates.
    pub fn compressed(&self) -> &Mat {
        &self.compressed_parts().0
    }

    /// Upper Cholesky factor `R` of the reduced Gram matrix.
    pub fn reduced_gram_factor(&self) -> &Mat {
        &self.compressed_parts().1
    }

    /// Full-layout state of orthonormal coordinates `y`: `T R^{-1} y`.
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let r = self.reduced_gram_factor().solve_upper_vec(y);
        self.compat.mul_vec(&r)
    }

    /// Orthonormal coordinates of a full state lying in the compatibility subspace.
    pub fn coordinates(&self, full: &[f64]) -> Vec<f64> {
        let n = self.grid.n_cells();
        let mut r = vec![0.0; n_reduced(n)];
        for j in 1..=n {
            r[rv(j)] = full[iv(j)];
            r[rz(j)] = full[iz(j)];
            if j < n {
                r[ru1(j)] = full[iu1(j)];
                r[ru2(j)] = full[iu2(j)];
            }
        }
        self.reduced_gram_factor().mul_vec(&r)
    }

    /// `U^T G U`.
    pub fn energy_norm_sq(&self, full: &[f64]) -> f64 {
        let gu = self.gram.mul_vec(full);
        gu.iter().zip(full).map(|(a, b)| a * b).sum()
    }

    /// `U^H G U` for complex states.
    pub fn energy_norm_sq_complex(&self, full: &[Complex64]) -> f64 {
        let re: Vec<f64> = full.iter().map(|z| z.re).collect();
        let im: Vec<f64> = full.iter().map(|z| z.im).collect();
        self.energy_norm_sq(&re) + self.energy_norm_sq(&im)
    }

    /// Compatibility defect `xi D u2 + (gamma/eps3) D v - u3` at the midpoints.
    pub fn compatibility_defect(&self, full: &[f64]) -> Vec<f64> {
        let n = self.grid.n_cells();
        let mut r = vec![0.0; n_reduced(n)];
        for j in 1..=n {
            r[rv(j)] = full[iv(j)];
            if j < n {
                r[ru2(j)] = full[iu2(j)];
            }
        }
        let lifted = self.compat.mul_vec(&r);
        (0..n).map(|k| lifted[iu3(k)] - full[iu3(k)]).collect()
    }

    pub fn pack<T: Copy + Default>(&self, s: &SemigroupState<T>) -> Vec<T> {
        let n = self.grid.n_cells();
        let mut y = vec![T::default(); n_full(n)];
        for j in 1..=n {
            y[iv(j)] = s.v[j];
            y[iz(j)] = s.z[j];
            if j < n {
                y[iu1(j)] = s.u1[j];
                y[iu2(j)] = s.u2[j];
            }
        }
        for k in 0..n {
            y[iu3(k)] = s.u3[k];
        }
        y
    }

    pub fn unpack<T: Copy + Default>(&self, y: &[T]) -> SemigroupState<T> {
        let n = self.grid.n_cells();
        let mut s = SemigroupState {
            v: vec![T::default(); n + 1],
            z: vec![T::default(); n + 1],
            u1: vec![T::default(); n + 1],
            u2: vec![T::default(); n + 1],
            u3: vec![T::default(); n],
        };
        for j in 1..=n {
            s.v[j] = y[iv(j)];
            s.z[j] = y[iz(j)];
            if j < n {
                s.u1[j] = y[iu1(j)];
                s.u2[j] = y[iu2(j)];
            }
        }
        for k in 0..n {
            s.u3[k] = y[iu3(k)];
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_grid;

    fn gen(n: usize, a: f64, b: f64, c: f64) -> GeneratorMatrix {
        let g = build_grid(1.0, n).unwrap();
        assemble_generator(&PhysicalParams::unit(), &DampingConfig::new(a, b, c).unwrap(), &g).unwrap()
    }

    #[test]
    fn undamped_is_skew_in_energy_product() {
        let g = gen(12, 0.0, 0.0, 0.0);
        let ga = g.gram().mul_dense(&g.undamped().to_dense());
        let sym = Mat::from_fn(ga.nrows(), ga.ncols(), |i, j| ga[(i, j)] + ga[(j, i)]);
        assert!(sym.norm_inf() < 1e-9 * ga.norm_inf());
    }

    #[test]
    fn damping_blocks_match_pattern() {
        let g = gen(10, 1.0, 1.0, 1.0);
        let (z, u2, u3) = g.damping_blocks();
        assert!(z.iter().all(|&x| x == 1.0));
        assert!(u2.iter().all(|&x| x == 1.0));
        assert!(u3.iter().all(|&x| x == 1.0));
        let g0 = gen(10, 0.0, 0.0, 0.0);
        let diff = Mat::from_fn(g.full_dimension(), g.full_dimension(), |i, j| {
            g.full_operator().get(i, j) - g0.full_operator().get(i, j)
        });
        for i in 0..g.full_dimension() {
            for j in 0..g.full_dimension() {
                let expect = if i == j { -g.damping_diagonal()[i] } else { 0.0 };
                assert_eq!(diff[(i, j)], expect);
            }
        }
    }

    #[test]
    fn undamped_preserves_compatibility() {
        let g = gen(16, 0.0, 0.0, 0.0);
        let y: Vec<f64> = (0..g.dimension()).map(|i| ((i * 7 + 3) as f64).sin()).collect();
        let u = g.lift(&y);
        assert!(g.compatibility_defect(&u).iter().all(|x| x.abs() < 1e-9));
        let du = g.undamped().mul_vec(&u);
        let defect = g.compatibility_defect(&du);
        let scale = du.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(defect.iter().all(|x| x.abs() < 1e-10 * scale));
    }

    #[test]
    fn lift_is_isometric() {
        let g = gen(10, 1.0, 0.0, 1.0);
        let y: Vec<f64> = (0..g.dimension()).map(|i| (i as f64 * 0.3).cos()).collect();
        let u = g.lift(&y);
        let e = g.energy_norm_sq(&u);
        let yy: f64 = y.iter().map(|x| x * x).sum();
        assert!((e - yy).abs() < 1e-9 * yy);
        let back = g.coordinates(&u);
        assert!(back.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn cap_is_enforced() {
        let grid = build_grid(1.0, 20).unwrap();
        let r = assemble_generator_capped(&PhysicalParams::unit(), &DampingConfig::undamped(), &grid, 10);
        assert!(matches!(r, Err(DiscretizationError::DimensionOverflow { .. })));
    }

    #[test]
    fn pack_round_trip() {
        let g = gen(9, 0.0, 0.0, 0.0);
        let y: Vec<f64> = (0..g.full_dimension()).map(|i| i as f64).collect();
        assert_eq!(g.pack(&g.unpack(&y)), y);
    }
}
