//! Dense complex linear algebra for the small matrices used throughout the crate
//! (dimension 2, 4 and 16).
//!
//! Eigenproblems use cyclic Jacobi rotations and singular values use one-sided
//! Jacobi, both deterministic for a given input.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const HERMITIAN_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    /// |u⟩⟨v|
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// |ψ⟩⟨ψ|
    pub fn projector(psi: &[C64]) -> Self {
        Self::outer(psi, psi)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Dimension of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// AB − BA
    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// AB + BA
    pub fn anticommutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) + &rhs.matmul(self)
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Distance from Hermiticity measured as ‖M − M†‖₂.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                s += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOL * (1.0 + self.frobenius_norm())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && (&self.adjoint().matmul(self) - &Self::identity(self.rows)).frobenius_norm() <= tol
    }

    /// ⟨u|M|v⟩
    pub fn expectation(&self, u: &[C64], v: &[C64]) -> C64 {
        inner(u, &self.mul_vec(v))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// ⟨u|v⟩
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Pauli matrix σ_i with σ_0 = I.
pub fn pauli(i: usize) -> ComplexMatrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let data = match i {
        0 => vec![one, z, z, one],
        1 => vec![z, one, one, z],
        2 => vec![z, c(0.0, -1.0), c(0.0, 1.0), z],
        3 => vec![one, z, z, -one],
        _ => panic!("pauli index {i} out of range"),
    };
    ComplexMatrix { rows: 2, cols: 2, data }
}

/// Which factor of a bipartite space to keep or trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * br, a.cols * bc, |r, s| {
        a[(r / br, s / bc)] * b[(r % br, s % bc)]
    })
}

/// Partial trace of `m` on the space of dimensions `(d_a, d_e)`, keeping `keep`.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Subsystem) -> Result<ComplexMatrix> {
    let (da, de) = dims;
    if !m.is_square() || m.rows != da * de {
        return Err(Error::DimensionMismatch {
            expected: da * de,
            found: m.rows,
        });
    }
    let out = match keep {
        Subsystem::First => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..de).map(|k| m[(i * de + k, j * de + k)]).sum()
        }),
        Subsystem::Second => ComplexMatrix::from_fn(de, de, |k, l| {
            (0..da).map(|i| m[(i * de + k, i * de + l)]).sum()
        }),
    };
    Ok(out)
}

/// Eigenvalues ascending; eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.vectors;
        let lam = ComplexMatrix::diag_real(&self.values);
        v.matmul(&lam).matmul(&v.adjoint())
    }

    /// λ_max − λ_min
    pub fn spread(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// V f(Λ) V†
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fv[k] * v[(j, k)].conj()).sum()
        })
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows,
            found: m.cols,
        });
    }
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL * (1.0 + m.frobenius_norm()) {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// Applies the 2×2 rotation to columns p < q.
fn rotate_columns(cols: &mut [Vec<C64>], p: usize, q: usize, (upp, upq, uqp, uqq): (C64, C64, C64, C64)) {
    let (head, tail) = cols.split_at_mut(q);
    for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = a * upp + b * uqp;
        *y = a * upq + b * uqq;
    }
}

/// Unitary acting on the (p, q) plane that zeroes the (p, q) entry of a
/// Hermitian 2×2 block [[app, apq], [conj(apq), aqq]].
/// Returned as (u_pp, u_pq, u_qp, u_qq).
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (C64, C64, C64, C64) {
    let r = apq.norm();
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let cs = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * cs;
    let e = phase.conj();
    (c(cs, 0.0), c(sn, 0.0), e * (-sn), e * cs)
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn herm_eig(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    check_hermitian(m)?;
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if n > 1 && scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.norm() <= 1e-300 || apq.norm() <= 1e-19 * scale {
                        continue;
                    }
                    let (upp, upq, uqp, uqq) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, apq);
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * upp + akq * uqp;
                        a[(k, q)] = akp * upq + akq * uqq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                        a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                    }
                    a[(p, q)] = c(0.0, 0.0);
                    a[(q, p)] = c(0.0, 0.0);
                    a[(p, p)] = c(a[(p, p)].re, 0.0);
                    a[(q, q)] = c(a[(q, q)].re, 0.0);
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * upp + vkq * uqp;
                        v[(k, q)] = vkp * upq + vkq * uqq;
                    }
                }
            }
        }
    }
    let values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    Ok(sorted_decomposition(values, v, scale))
}

fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|x| x.norm() >= max * (1.0 - 1e-12)).unwrap_or(0);
    let ph = v[pivot].conj() / v[pivot].norm();
    for x in v.iter_mut() {
        *x *= ph;
    }
}

fn gram_schmidt(cols: &mut [Vec<C64>]) {
    for i in 0..cols.len() {
        for j in 0..i {
            let proj = inner(&cols[j], &cols[i]);
            let cj = cols[j].clone();
            for (x, y) in cols[i].iter_mut().zip(&cj) {
                *x -= proj * y;
            }
        }
        let nrm = vec_norm(&cols[i]);
        if nrm > 0.0 {
            for x in cols[i].iter_mut() {
                *x /= nrm;
            }
        }
    }
}

fn block_order(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    let key = |v: &[C64]| v.iter().map(|x| x.norm()).collect::<Vec<_>>();
    let (ka, kb) = (key(a), key(b));
    for (x, y) in ka.iter().zip(&kb) {
        if (x - y).abs() > 1e-12 {
            return y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal);
        }
    }
    std::cmp::Ordering::Equal
}

fn sorted_decomposition(values: Vec<f64>, v: ComplexMatrix, scale: f64) -> EigenDecomposition {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted_vals: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let mut cols: Vec<Vec<C64>> = idx.iter().map(|&i| v.column(i)).collect();

    let deg_tol = 1e-10 * (1.0 + scale);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sorted_vals[end] - sorted_vals[end - 1] <= deg_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = &mut cols[start..end];
            gram_schmidt(block);
            for col in block.iter_mut() {
                fix_phase(col);
            }
            block.sort_by(|a, b| block_order(a, b));
        }
        start = end;
    }
    for col in cols.iter_mut() {
        fix_phase(col);
    }
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        vectors.set_column(j, col);
    }
    EigenDecomposition {
        values: sorted_vals,
        vectors,
    }
}

/// exp(−i·s·g) for Hermitian `g`, via the spectral decomposition.
pub fn herm_exp(g: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(g)?;
    Ok(eig.apply_fn(|lam| C64::from_polar(1.0, -s * lam)))
}

/// Thin singular value decomposition M = U Σ V†.
///
/// `u` has one column per singular value; columns belonging to zero singular
/// values are zero. `v` is square and unitary.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// One-sided Jacobi SVD. Singular values are returned in descending order.
pub fn svd(m: &ComplexMatrix) -> Svd {
    if m.rows < m.cols {
        let t = svd(&m.adjoint());
        // M† = U Σ V†  ⇒  M = V Σ U†; columns of t.u beyond the rank are zero,
        // so rebuild a square right factor from the left vectors.
        let k = t.singular_values.len();
        let mut v = ComplexMatrix::zeros(m.cols, m.cols);
        let mut cols: Vec<Vec<C64>> = (0..k).map(|j| t.u.column(j)).collect();
        complete_basis(&mut cols, m.cols);
        for (j, col) in cols.iter().enumerate() {
            v.set_column(j, col);
        }
        let u = ComplexMatrix::from_fn(m.rows, k, |i, j| t.v[(i, j)]);
        return Svd {
            u,
            singular_values: t.singular_values,
            v,
        };
    }
    let (rows, n) = (m.rows, m.cols);
    let mut a: Vec<Vec<C64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|x| x.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|x| x.norm_sqr()).sum();
                let gamma = inner(&a[p], &a[q]);
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() <= 1e-300 {
                    continue;
                }
                rotated = true;
                let (upp, upq, uqp, uqq) = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut a, p, q, (upp, upq, uqp, uqq));
                rotate_columns(&mut v, p, q, (upp, upq, uqp, uqq));
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = a.iter().map(|col| vec_norm(col)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    let smax = order.first().map(|&i| sigma[i]).unwrap_or(0.0);
    let mut u = ComplexMatrix::zeros(rows, n);
    let mut vm = ComplexMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (j, &i) in order.iter().enumerate() {
        let s = sigma[i];
        values.push(s);
        if s > 1e-300 && s > 1e-15 * smax {
            let col: Vec<C64> = a[i].iter().map(|x| x / s).collect();
            u.set_column(j, &col);
        }
        vm.set_column(j, &v[i]);
    }
    Svd {
        u,
        singular_values: values,
        v: vm,
    }
}

/// Extends an orthonormal (or zero-padded) set of columns to a full basis of dimension `n`.
fn complete_basis(cols: &mut Vec<Vec<C64>>, n: usize) {
    let mut kept: Vec<Vec<C64>> = cols.iter().filter(|c| vec_norm(c) > 0.5).cloned().collect();
    let mut e = 0;
    while kept.len() < n && e < n {
        let mut cand: Vec<C64> = (0..n).map(|i| if i == e { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect();
        for k in &kept {
            let p = inner(k, &cand);
            for (x, y) in cand.iter_mut().zip(k) {
                *x -= p * y;
            }
        }
        let nrm = vec_norm(&cand);
        if nrm > 1e-8 {
            kept.push(cand.iter().map(|x| x / nrm).collect());
        }
        e += 1;
    }
    // keep the original order for the nonzero columns
    *cols = kept;
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    svd(m).singular_values
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchattenP {
    One,
    Two,
    Inf,
}

pub fn schatten_norm(m: &ComplexMatrix, p: SchattenP) -> f64 {
    match p {
        SchattenP::Two => m.frobenius_norm(),
        SchattenP::One => singular_values(m).iter().sum(),
        SchattenP::Inf => singular_values(m).first().copied().unwrap_or(0.0),
    }
}
