//! Small linear-algebra containers: banded matrices with partial-pivoting LU,
//! compressed sparse rows, and a row-major dense matrix with Cholesky and
//! triangular solves.

use std::fmt;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Exactly zero pivot at column `col`.
    Singular { col: usize },
    /// Cholesky met a non-positive pivot at `col`.
    NotPositiveDefinite { col: usize, pivot: f64 },
    Dimension { expected: usize, found: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Singular { col } => write!(f, "matrix is singular (zero pivot in column {col})"),
            LinalgError::NotPositiveDefinite { col, pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot:e} in column {col})")
            }
            LinalgError::Dimension { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl std::error::Error for LinalgError {}

/// Triplet accumulator; duplicates are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(t: &Triplets) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); t.nrows];
        for &(i, j, v) in &t.entries {
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(t.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == col {
                    s += row[k].1;
                    k += 1;
                }
                indices.push(col);
                values.push(s);
            }
            indptr.push(indices.len());
        }
        Self { nrows: t.nrows, ncols: t.ncols, indptr, indices, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push(j, i, v);
            }
        }
        Self::from_triplets(&t)
    }

    pub fn to_triplets(&self) -> Triplets {
        let mut t = Triplets::new(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push(i, j, v);
            }
        }
        t
    }

    /// `self * dense`.
    pub fn mul_dense(&self, m: &Mat) -> Mat {
        assert_eq!(self.ncols, m.nrows());
        let mut out = Mat::zeros(self.nrows, m.ncols());
        for i in 0..self.nrows {
            for (k, v) in self.row(i) {
                let src = m.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn to_band(&self) -> BandMatrix {
        assert_eq!(self.nrows, self.ncols);
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let mut b = BandMatrix::zeros(self.nrows, kl, ku);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                b.add(i, j, v);
            }
        }
        b
    }

    /// Coordinate dump, one `row col value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Square banded matrix, LAPACK band layout (column-major, `ku + i - j` row offset).
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, ab: vec![0.0; n * (kl + ku + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn kl(&self) -> usize {
        self.kl
    }
    pub fn ku(&self) -> usize {
        self.ku
    }

    fn ld(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[j * self.ld() + self.ku + i - j]
        } else {
            0.0
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let ld = self.ld();
        self.ab[j * ld + self.ku + i - j] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let ld = self.ld();
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.ab[j * ld + self.ku + i - j] * xj;
            }
        }
    }

    /// `alpha * I + beta * self`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Self {
        let mut out = self.clone();
        out.ab.iter_mut().for_each(|v| *v *= beta);
        for i in 0..self.n {
            out.add(i, i, alpha);
        }
        out
    }

    pub fn factor(&self) -> Result<BandLu, LinalgError> {
        BandLu::new(self)
    }
}

/// Partial-pivoting LU of a banded matrix (the unblocked LAPACK `gbtf2` scheme).
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    fn ld(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        // row offset kv + i - j with kv = kl + ku
        j * self.ld() + self.kl + self.ku + i - j
    }

    pub fn new(m: &BandMatrix) -> Result<Self, LinalgError> {
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        let mut lu = Self { n, kl, ku, ab: vec![0.0; n * (2 * kl + ku + 1)], ipiv: vec![0; n] };
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n.saturating_sub(1));
            for i in lo..=hi {
                let k = lu.idx(i, j);
                lu.ab[k] = m.get(i, j);
            }
        }
        let kv = kl + ku;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = lu.ab[lu.idx(j, j)].abs();
            for t in 1..=km {
                let v = lu.ab[lu.idx(j + t, j)].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            lu.ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(LinalgError::Singular { col: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for col in j..=ju {
                    let a = lu.idx(j + jp, col);
                    let b = lu.idx(j, col);
                    lu.ab.swap(a, b);
                }
            }
            let piv = lu.ab[lu.idx(j, j)];
            for t in 1..=km {
                let k = lu.idx(j + t, j);
                lu.ab[k] /= piv;
            }
            for col in j + 1..=ju {
                let ujc = lu.ab[lu.idx(j, col)];
                if ujc == 0.0 {
                    continue;
                }
                for t in 1..=km {
                    let l = lu.ab[lu.idx(j + t, j)];
                    let k = lu.idx(j + t, col);
                    lu.ab[k] -= l * ujc;
                }
            }
            debug_assert!(ju <= j + kv);
        }
        Ok(lu)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                for t in 1..=km {
                    b[j + t] -= self.ab[self.idx(j + t, j)] * bj;
                }
            }
        }
        let kv = self.kl + self.ku;
        for j in (0..n).rev() {
            b[j] /= self.ab[self.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= self.ab[self.idx(i, j)] * bj;
                }
            }
        }
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

impl Mat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.ncols, other.nrows);
        let mut out = Mat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Upper-triangular `R` with `self = R^T R`.
    pub fn cholesky_upper(&self) -> Result<Mat, LinalgError> {
        let n = self.nrows;
        if self.ncols != n {
            return Err(LinalgError::Dimension { expected: n, found: self.ncols });
        }
        let mut r = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= r[(k, j)] * r[(k, j)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { col: j, pivot: d });
            }
            let rjj = d.sqrt();
            r[(j, j)] = rjj;
            for i in j + 1..n {
                let mut s = self[(j, i)];
                for k in 0..j {
                    s -= r[(k, j)] * r[(k, i)];
                }
                r[(j, i)] = s / rjj;
            }
        }
        Ok(r)
    }

    /// Solves `R^T X = B` for upper-triangular `R` (forward substitution on every column).
    pub fn solve_upper_transpose(&self, b: &Mat) -> Mat {
        let n = self.nrows;
        let mut x = b.clone();
        for i in 0..n {
            for k in 0..i {
                let rki = self[(k, i)];
                if rki == 0.0 {
                    continue;
                }
                let (head, tail) = x.data.split_at_mut(i * x.ncols);
                let src = &head[k * x.ncols..(k + 1) * x.ncols];
                for (d, s) in tail[..x.ncols].iter_mut().zip(src) {
                    *d -= rki * s;
                }
            }
            let inv = 1.0 / self[(i, i)];
            x.row_mut(i).iter_mut().for_each(|v| *v *= inv);
        }
        x
    }

    /// Solves `R x = b` for upper-triangular `R`.
    pub fn solve_upper_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.nrows;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self[(i, k)] * x[k]).sum();
            x[i] = (x[i] - s) / self[(i, i)];
        }
        x
    }
}
