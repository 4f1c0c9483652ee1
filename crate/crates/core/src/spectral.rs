// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Linear-algebra kernel: sparse Hermitian matrices, banded resolvent
//! factorizations at complex shifts, kernel blocks, Hermitian
//! eigendecompositions and matrix exponentials.

use std::ops::Range;

use nalgebra::linalg::SymmetricEigen;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ProjectionFamily;
use crate::{CMatrix, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("imaginary part of the shift must be positive and finite, got {0}")]
    NonPositiveShift(f64),
    #[error("zero pivot at row {row} (condition estimate {condition_estimate:.3e})")]
    Breakdown { row: usize, condition_estimate: f64 },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("block {block} out of range ({blocks} blocks)")]
    BlockOutOfRange { block: usize, blocks: usize },
    #[error("Hermitian eigensolver did not converge for dimension {0}")]
    EigenFailure(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("imaginary part has eigenvalue {min_eigenvalue:.3e} below the dissipativity tolerance")]
    NotDissipative { min_eigenvalue: f64 },
    #[error("time must be non-negative and finite, got {0}")]
    InvalidTime(f64),
}

/// Sparse Hermitian matrix: real diagonal plus strictly upper entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    diagonal: Vec<f64>,
    /// `(row, col, value)` with `row < col`, sorted and without duplicates.
    upper: Vec<(usize, usize, C64)>,
}

impl HermitianMatrix {
    /// Builds from a diagonal and upper entries. Entries with `row > col`
    /// are reflected (conjugated); duplicates accumulate.
    pub fn new(diagonal: Vec<f64>, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let dim = diagonal.len();
        let mut upper: Vec<(usize, usize, C64)> = entries
            .into_iter()
            .map(|(i, j, v)| {
                assert!(i < dim && j < dim, "entry ({i},{j}) outside dimension {dim}");
                assert!(i != j, "diagonal entries belong in the diagonal vector");
                if i < j {
                    (i, j, v)
                } else {
                    (j, i, v.conj())
                }
            })
            .collect();
        upper.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(upper.len());
        for (i, j, v) in upper {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        Self { diagonal, upper: merged }
    }

    /// Diagonal matrix.
    pub fn diagonal_matrix(diagonal: Vec<f64>) -> Self {
        Self { diagonal, upper: Vec::new() }
    }

    /// Converts a dense matrix, reading the upper triangle and the real part
    /// of the diagonal.
    pub fn from_dense(m: &CMatrix) -> Self {
        let n = m.nrows();
        let diagonal = (0..n).map(|i| m[(i, i)].re).collect();
        let mut upper = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    upper.push((i, j, m[(i, j)]));
                }
            }
        }
        Self { diagonal, upper }
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn upper_entries(&self) -> &[(usize, usize, C64)] {
        &self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => C64::new(self.diagonal[i], 0.0),
            Less => self.lookup(i, j),
            Greater => self.lookup(j, i).conj(),
        }
    }

    fn lookup(&self, i: usize, j: usize) -> C64 {
        self.upper
            .binary_search_by_key(&(i, j), |&(a, b, _)| (a, b))
            .map(|k| self.upper[k].2)
            .unwrap_or(C64::new(0.0, 0.0))
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.upper.iter().map(|&(i, j, _)| j - i).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for (i, &d) in self.diagonal.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        for &(i, j, v) in &self.upper {
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
        m
    }

    /// Leading principal block of dimension `dim`.
    pub fn leading_block(&self, dim: usize) -> Self {
        assert!(dim <= self.dim());
        Self {
            diagonal: self.diagonal[..dim].to_vec(),
            upper: self.upper.iter().copied().filter(|&(_, j, _)| j < dim).collect(),
        }
    }

    /// Copy with `shift[i]` added to diagonal entry `i`.
    pub fn with_added_diagonal(&self, shift: &[f64]) -> Self {
        assert_eq!(shift.len(), self.dim());
        let mut out = self.clone();
        for (d, s) in out.diagonal.iter_mut().zip(shift) {
            *d += s;
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y: Vec<C64> = self.diagonal.iter().zip(x).map(|(&d, &v)| v * d).collect();
        for &(i, j, v) in &self.upper {
            y[i] += v * x[j];
            y[j] += v.conj() * x[i];
        }
        y
    }

    /// Maximum absolute row sum, an upper bound on the operator norm.
    pub fn row_sum_bound(&self) -> f64 {
        let mut rows: Vec<f64> = self.diagonal.iter().map(|d| d.abs()).collect();
        for &(i, j, v) in &self.upper {
            rows[i] += v.norm();
            rows[j] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Operator norm estimate by power iteration on `h²`.
    pub fn norm_estimate(&self, iterations: usize) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0 + (i % 7) as f64 * 0.1, 0.0)).collect();
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let y = self.matvec(&self.matvec(&x));
            let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let xn = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            lambda = (norm / xn).sqrt();
            x = y.into_iter().map(|v| v / norm).collect();
        }
        lambda
    }
}

/// `z = E + iε` with `ε > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexShift {
    energy: f64,
    eta: f64,
}

impl ComplexShift {
    pub fn new(energy: f64, eta: f64) -> Result<Self, SolverError> {
        if !(eta > 0.0 && eta.is_finite()) || !energy.is_finite() {
            return Err(SolverError::NonPositiveShift(eta));
        }
        Ok(Self { energy, eta })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn z(&self) -> C64 {
        C64::new(self.energy, self.eta)
    }
}

/// LU factorization of `h - z` in band storage, without pivoting.
///
/// `i(h - z)` has Hermitian part `ε·I`, so every Schur complement keeps a
/// pivot of modulus at least `ε` and elimination without row exchanges is
/// stable. Fill-in stays inside the band.
#[derive(Clone, Debug)]
pub struct ResolventFactor {
    n: usize,
    bw: usize,
    width: usize,
    band: Vec<C64>,
}

impl ResolventFactor {
    pub fn new(h: &HermitianMatrix, shift: ComplexShift) -> Result<Self, SolverError> {
        let n = h.dim();
        let bw = h.bandwidth();
        let width = 2 * bw + 1;
        let z = shift.z();
        let mut band = vec![C64::new(0.0, 0.0); n * width];
        for (i, &d) in h.diagonal.iter().enumerate() {
            band[i * width + bw] = C64::new(d, 0.0) - z;
        }
        for &(i, j, v) in &h.upper {
            band[i * width + (j + bw - i)] = v;
            band[j * width + (i + bw - j)] = v.conj();
        }
        let mut f = Self { n, bw, width, band };
        f.factorize(h, shift)?;
        Ok(f)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.bw - i)
    }

    fn factorize(&mut self, h: &HermitianMatrix, shift: ComplexShift) -> Result<(), SolverError> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let pivot = self.band[self.idx(k, k)];
            if pivot.norm() == 0.0 || !pivot.re.is_finite() || !pivot.im.is_finite() {
                return Err(SolverError::Breakdown {
                    row: k,
                    condition_estimate: (h.row_sum_bound() + shift.z().norm()) / shift.eta(),
                });
            }
            let inv = pivot.inv();
            let end = (k + bw + 1).min(n);
            for i in k + 1..end {
                let ik = self.idx(i, k);
                let l = self.band[ik] * inv;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                self.band[ik] = l;
                for j in k + 1..end {
                    let kj = self.band[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.band[ij] -= l * kj;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `(h - z) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let (n, bw) = (self.n, self.bw);
        assert_eq!(b.len(), n);
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let mut acc = b[i];
            for j in start..i {
                acc -= self.band[self.idx(i, j)] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let end = (i + bw + 1).min(n);
            let mut acc = b[i];
            for j in i + 1..end {
                acc -= self.band[self.idx(i, j)] * b[j];
            }
            b[i] = acc / self.band[self.idx(i, i)];
        }
    }

    /// Column `j` of `(h - z)^{-1}`.
    pub fn column(&self, j: usize) -> Vec<C64> {
        let mut e = vec![C64::new(0.0, 0.0); self.n];
        e[j] = C64::new(1.0, 0.0);
        self.solve_in_place(&mut e);
        e
    }
}

/// Requested columns of `(h - z)^{-1}` as an `n × cols.len()` matrix.
pub fn resolvent_columns(
    h: &HermitianMatrix,
    shift: ComplexShift,
    cols: &[usize],
) -> Result<CMatrix, SolverError> {
    let n = h.dim();
    if let Some(&bad) = cols.iter().find(|&&c| c >= n) {
        return Err(SolverError::IndexOutOfRange { index: bad, dim: n });
    }
    let f = ResolventFactor::new(h, shift)?;
    let mut out = CMatrix::zeros(n, cols.len());
    for (k, &c) in cols.iter().enumerate() {
        let col = f.column(c);
        out.set_column(k, &nalgebra::DVector::from_vec(col));
    }
    Ok(out)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// The block `P_n (h - z)^{-1} P_k` and its spectral norm.
#[derive(Clone, Debug)]
pub struct KernelBlock {
    pub source: usize,
    pub target: usize,
    pub entries: CMatrix,
    pub norm: f64,
}

impl KernelBlock {
    /// Extracts the block from a factorization already built for `h - z`.
    pub fn from_factor(
        factor: &ResolventFactor,
        projections: &ProjectionFamily,
        source: usize,
        target: usize,
    ) -> Result<Self, SolverError> {
        let blocks = projections.len();
        for b in [source, target] {
            if b >= blocks {
                return Err(SolverError::BlockOutOfRange { block: b, blocks });
            }
        }
        let rows = projections.block_range(source);
        let cols = projections.block_range(target);
        if rows.end > factor.dim() || cols.end > factor.dim() {
            return Err(SolverError::IndexOutOfRange {
                index: rows.end.max(cols.end) - 1,
                dim: factor.dim(),
            });
        }
        let mut entries = CMatrix::zeros(rows.len(), cols.len());
        for (c, j) in cols.clone().enumerate() {
            let col = factor.column(j);
            for (r, i) in rows.clone().enumerate() {
                entries[(r, c)] = col[i];
            }
        }
        let norm = spectral_norm(&entries);
        Ok(Self { source, target, entries, norm })
    }
}

/// `P_n (h - z)^{-1} P_k`.
pub fn kernel_block(
    h: &HermitianMatrix,
    shift: ComplexShift,
    source: usize,
    target: usize,
    projections: &ProjectionFamily,
) -> Result<KernelBlock, SolverError> {
    let f = ResolventFactor::new(h, shift)?;
    KernelBlock::from_factor(&f, projections, source, target)
}

/// `‖P_n (h - z)^{-1} P_k‖`.
pub fn kernel_block_norm(
    h: &HermitianMatrix,
    shift: ComplexShift,
    source: usize,
    target: usize,
    projections: &ProjectionFamily,
) -> Result<f64, SolverError> {
    kernel_block(h, shift, source, target, projections).map(|b| b.norm)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianSpectrum {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// `Σ_{λ_j ≤ E} Σ_{i ∈ coords} |ψ_j(i)|²`, the trace of the coordinate
    /// projection against the spectral projector of `(-∞, E]`.
    pub fn projector_trace(&self, coords: Range<usize>, energy: f64) -> f64 {
        if self.values.is_empty() || energy < self.min() {
            return 0.0;
        }
        if energy >= self.max() {
            return coords.len() as f64;
        }
        let mut total = 0.0;
        for (j, &lambda) in self.values.iter().enumerate() {
            if lambda > energy {
                break;
            }
            for i in coords.clone() {
                total += self.vectors[(i, j)].norm_sqr();
            }
        }
        total
    }
}

/// Dense Hermitian eigendecomposition.
pub fn hermitian_eigen(h: &HermitianMatrix) -> Result<HermitianSpectrum, SolverError> {
    dense_hermitian_eigen(h.to_dense())
}

pub fn dense_hermitian_eigen(m: CMatrix) -> Result<HermitianSpectrum, SolverError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(SolverError::NotSquare { rows: n, cols: m.ncols() });
    }
    if n == 0 {
        return Ok(HermitianSpectrum { values: Vec::new(), vectors: CMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 10_000).ok_or(SolverError::EigenFailure(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(k));
    }
    Ok(HermitianSpectrum { values, vectors })
}

/// `tr(P_n E_h((-∞, E]))` for block `n` of the projection family.
pub fn spectral_projector_trace(
    h: &HermitianMatrix,
    projections: &ProjectionFamily,
    block: usize,
    energy: f64,
) -> Result<f64, SolverError> {
    if block >= projections.len() {
        return Err(SolverError::BlockOutOfRange { block, blocks: projections.len() });
    }
    let spec = hermitian_eigen(h)?;
    Ok(spec.projector_trace(projections.block_range(block), energy))
}

/// Hermitian part `(A + A*)/2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Imaginary part `(A - A*)/(2i)`, a Hermitian matrix.
pub fn imaginary_part(a: &CMatrix) -> CMatrix {
    (a - a.adjoint()) * C64::new(0.0, -0.5)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> Result<f64, SolverError> {
    dense_hermitian_eigen(m.clone()).map(|s| s.min())
}

/// Hermitian positive semidefinite square root.
pub fn hermitian_sqrt(m: &CMatrix) -> Result<CMatrix, SolverError> {
    let s = dense_hermitian_eigen(m.clone())?;
    let n = m.nrows();
    let mut d = CMatrix::zeros(n, n);
    for (k, &v) in s.values.iter().enumerate() {
        d[(k, k)] = C64::new(v.max(0.0).sqrt(), 0.0);
    }
    Ok(&s.vectors * d * s.vectors.adjoint())
}

/// Dissipativity tolerance on the smallest eigenvalue of `Im A`.
pub const DISSIPATIVE_TOL: f64 = 1e-12;

/// `e^{itA}` for `A` with `Im A ⪰ 0`; a contraction for `t ≥ 0`.
pub fn dissipative_exp(a: &CMatrix, t: f64) -> Result<CMatrix, SolverError> {
    if a.nrows() != a.ncols() {
        return Err(SolverError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SolverError::InvalidTime(t));
    }
    let min = min_hermitian_eigenvalue(&imaginary_part(a))?;
    if min < -DISSIPATIVE_TOL {
        return Err(SolverError::NotDissipative { min_eigenvalue: min });
    }
    Ok(expm(&(a * C64::new(0.0, t))))
}

/// Padé(13) coefficients `b_0..b_13`.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring around a degree-13 Padé
/// approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * C64::new(0.5f64.powi(s), 0.0);
    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |k: usize| C64::new(PADE13[k], 0.0);
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
        + &a6 * c(7)
        + &a4 * c(5)
        + &a2 * c(3)
        + &id * c(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8)) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &id * c(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = crate::rng::sample_rng(seed, 0);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                m[(i, j)] = C64::new(re, im);
            }
        }
        hermitian_part(&m)
    }

    #[test]
    fn scalar_resolvent() {
        let h = HermitianMatrix::diagonal_matrix(vec![0.7]);
        let z = ComplexShift::new(0.2, 0.3).unwrap();
        let g = resolvent_columns(&h, z, &[0]).unwrap();
        let expect = (C64::new(0.7, 0.0) - z.z()).inv();
        assert!((g[(0, 0)] - expect).norm() < 1e-15);
    }

    #[test]
    fn diagonal_resolvent_is_diagonal() {
        let d = vec![0.1, -0.4, 2.0, 1.3];
        let h = HermitianMatrix::diagonal_matrix(d.clone());
        let z = ComplexShift::new(0.5, 0.05).unwrap();
        let g = resolvent_columns(&h, z, &[0, 1, 2, 3]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { (C64::new(d[i], 0.0) - z.z()).inv() } else { C64::new(0.0, 0.0) };
                assert_eq!(g[(i, j)], expect);
            }
        }
    }

    #[test]
    fn banded_solve_matches_dense_inverse() {
        let m = random_hermitian(8, 3);
        let h = HermitianMatrix::from_dense(&m);
        let z = ComplexShift::new(0.3, 0.1).unwrap();
        let cols: Vec<usize> = (0..8).collect();
        let g = resolvent_columns(&h, z, &cols).unwrap();
        let shifted = &m - CMatrix::identity(8, 8) * z.z();
        let inv = shifted.try_inverse().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((g[(i, j)] - inv[(i, j)]).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn resolvent_residual_is_small() {
        let m = random_hermitian(30, 9);
        let h = HermitianMatrix::from_dense(&m);
        let z = ComplexShift::new(-0.2, 1e-3).unwrap();
        let f = ResolventFactor::new(&h, z).unwrap();
        let scale = h.norm_estimate(200) + z.z().norm();
        for j in [0, 7, 29] {
            let x = f.column(j);
            let mut r = h.matvec(&x);
            for (ri, xi) in r.iter_mut().zip(&x) {
                *ri -= z.z() * xi;
            }
            r[j] -= C64::new(1.0, 0.0);
            let res = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!(res <= 1e-10 * scale, "residual {res}");
        }
    }

    #[test]
    fn resolvent_of_real_symmetric_is_complex_symmetric() {
        let mut m = random_hermitian(10, 4);
        m.iter_mut().for_each(|v| v.im = 0.0);
        let h = HermitianMatrix::from_dense(&m);
        let z = ComplexShift::new(0.1, 0.2).unwrap();
        let g = resolvent_columns(&h, z, &(0..10).collect::<Vec<_>>()).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                assert!((g[(i, j)] - g[(j, i)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn herglotz_and_norm_bound() {
        for seed in 0..20 {
            let m = random_hermitian(6, 100 + seed);
            let h = HermitianMatrix::from_dense(&m);
            let z = ComplexShift::new(0.4, 0.05).unwrap();
            let f = ResolventFactor::new(&h, z).unwrap();
            assert!(f.column(0)[0].im > 0.0);
            let proj = ProjectionFamily::uniform(3, 2);
            for n in 0..3 {
                for k in 0..3 {
                    let b = KernelBlock::from_factor(&f, &proj, n, k).unwrap();
                    assert!(b.norm <= 1.0 / z.eta() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn kernel_block_of_scalar() {
        let h = HermitianMatrix::diagonal_matrix(vec![1.5]);
        let z = ComplexShift::new(0.5, 0.25).unwrap();
        let proj = ProjectionFamily::uniform(1, 1);
        let v = kernel_block_norm(&h, z, 0, 0, &proj).unwrap();
        assert!((v - 1.0 / (C64::new(1.5, 0.0) - z.z()).norm()).abs() < 1e-15);
        let h2 = HermitianMatrix::diagonal_matrix(vec![0.2, 0.9]);
        let p2 = ProjectionFamily::uniform(2, 1);
        assert_eq!(kernel_block_norm(&h2, z, 0, 1, &p2).unwrap(), 0.0);
        assert!(kernel_block_norm(&h2, z, 0, 2, &p2).is_err());
    }

    #[test]
    fn rejects_nonpositive_eta() {
        assert!(ComplexShift::new(0.0, 0.0).is_err());
        assert!(ComplexShift::new(0.0, -1.0).is_err());
        assert!(ComplexShift::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn projector_trace_limits() {
        let h = HermitianMatrix::diagonal_matrix(vec![0.0, 1.0]);
        let proj = ProjectionFamily::uniform(2, 1);
        assert_eq!(spectral_projector_trace(&h, &proj, 0, -1.0).unwrap(), 0.0);
        assert_eq!(spectral_projector_trace(&h, &proj, 0, 0.5).unwrap(), 1.0);
        assert_eq!(spectral_projector_trace(&h, &proj, 0, 1.0).unwrap(), 1.0);
        // closed interval at a tie
        assert_eq!(spectral_projector_trace(&h, &proj, 1, 1.0).unwrap(), 1.0);
        assert_eq!(spectral_projector_trace(&h, &proj, 1, 0.999).unwrap(), 0.0);
        let p2 = ProjectionFamily::uniform(1, 2);
        assert_eq!(spectral_projector_trace(&h, &p2, 0, 5.0).unwrap(), 2.0);
    }

    #[test]
    fn expm_scalar_and_identity() {
        let a = CMatrix::identity(3, 3) * C64::new(0.0, 1.0);
        let e = dissipative_exp(&a, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { (-1.0f64).exp() } else { 0.0 };
                assert!((e[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
        let e0 = dissipative_exp(&random_hermitian(4, 1), 0.0).unwrap();
        assert!((e0 - CMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn expm_rejects_anti_dissipative() {
        let a = CMatrix::identity(2, 2) * C64::new(0.0, -0.1);
        assert!(matches!(dissipative_exp(&a, 1.0), Err(SolverError::NotDissipative { .. })));
        assert!(dissipative_exp(&CMatrix::identity(2, 2), -1.0).is_err());
    }

    #[test]
    fn eigen_bounds_of_pauli_x() {
        let h = HermitianMatrix::new(vec![0.0, 0.0], [(0, 1, C64::new(1.0, 0.0))]);
        let s = hermitian_eigen(&h).unwrap();
        assert!((s.min() + 1.0).abs() < 1e-14 && (s.max() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_matrix_roundtrips_through_dense() {
        let m = random_hermitian(5, 77);
        let h = HermitianMatrix::from_dense(&m);
        let d = h.to_dense();
        assert!((d - &m).norm() < 1e-15);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(h.get(i, j), m[(i, j)]);
            }
        }
    }
}
