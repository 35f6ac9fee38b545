//! Small dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Singular values below `RANK_TOL` times the largest one count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Relative residual allowed when re-expanding an element in a basis.
pub const SPAN_TOL: f64 = 1e-9;

/// Default seed for every pseudo-random sample drawn by the library.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A complex number as it appears in JSON: `[re, im]`.
pub type ComplexPair = [f64; 2];

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Matrix unit `e_{ij}` of size `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds a square matrix from row-major `[re, im]` pairs.
pub fn matrix_from_pairs(n: usize, entries: &[ComplexPair]) -> Result<CMatrix> {
    if entries.len() != n * n {
        return Err(Error::Configuration(format!(
            "expected {} row-major entries for a {n}x{n} matrix, found {}",
            n * n,
            entries.len()
        )));
    }
    Ok(CMatrix::from_row_iterator(
        n,
        n,
        entries.iter().map(|p| c(p[0], p[1])),
    ))
}

pub fn matrix_to_pairs(m: &CMatrix) -> Vec<ComplexPair> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

pub fn vector_from_pairs(entries: &[ComplexPair]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|p| c(p[0], p[1])))
}

pub fn vector_to_pairs(v: &CVector) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Hilbert–Schmidt inner product `tr(a* b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Operator norm (largest singular value); zero for empty matrices.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * real(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Number of eigenvalues above the rank tolerance.
pub fn numerical_rank(values: &[f64]) -> usize {
    let top = values.iter().cloned().fold(0.0, f64::max);
    if top <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > RANK_TOL * top).count()
}

/// Positive square root of a positive semidefinite Hermitian matrix.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let roots = CVector::from_iterator(values.len(), values.iter().map(|&v| real(v.max(0.0).sqrt())));
    &vectors * CMatrix::from_diagonal(&roots) * vectors.adjoint()
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let (values, _) = hermitian_eigen(m);
    values.last().cloned().unwrap_or(0.0)
}

/// Complex entries with real and imaginary parts uniform in `[-1, 1]`.
pub fn random_vector<R: Rng>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Orthonormalizes a list of vectors, dropping directions below the rank tolerance.
pub fn orthonormal_span(vectors: &[CVector]) -> Vec<CVector> {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<CVector> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        // two passes of Gram–Schmidt keep the basis orthonormal to rounding
        for _ in 0..2 {
            for b in &basis {
                let coeff = b.dotc(&w);
                w -= b * coeff;
            }
        }
        let norm = w.norm();
        if norm > RANK_TOL.sqrt() * scale.max(f64::MIN_POSITIVE) {
            basis.push(w / real(norm));
        }
    }
    basis
}

/// Kronecker product `a ⊗ I_n`.
pub fn kron_identity(a: &CMatrix, n: usize) -> CMatrix {
    a.kronecker(&identity(n))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<ComplexPair>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            entries: matrix_to_pairs(m),
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::Configuration(format!(
                "matrix of shape {}x{} carries {} entries",
                self.rows,
                self.cols,
                self.entries.len()
            )));
        }
        Ok(CMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.entries.iter().map(|p| c(p[0], p[1])),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_of_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![real(-3.0), real(2.0)]));
        assert!((op_norm(&m) - 3.0).abs() < 1e-14);
        assert_eq!(op_norm(&CMatrix::zeros(0, 0)), 0.0);
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = CMatrix::from_row_slice(2, 2, &[real(1.0), c(0.0, 1.0), c(0.0, -1.0), real(1.0)]);
        let (values, vectors) = hermitian_eigen(&m);
        assert!((values[0] - 2.0).abs() < 1e-12 && values[1].abs() < 1e-12);
        let v = vectors.column(0).into_owned();
        assert!((&m * &v - &v * real(2.0)).norm() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = CMatrix::from_row_slice(2, 2, &[real(2.0), c(1.0, 1.0), c(0.0, 0.5), real(-1.0)]);
        let p = a.adjoint() * &a;
        let r = psd_sqrt(&p);
        assert!((&r * &r - &p).norm() < 1e-12);
    }

    #[test]
    fn pairs_round_trip() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 2.0), real(3.0), real(4.0), c(0.0, -1.0)]);
        let back = matrix_from_pairs(2, &matrix_to_pairs(&m)).unwrap();
        assert_eq!(m, back);
        assert!(matrix_from_pairs(3, &matrix_to_pairs(&m)).is_err());
    }

    #[test]
    fn orthonormal_span_drops_dependent_vectors() {
        let v1 = CVector::from_vec(vec![ONE, ZERO]);
        let v2 = CVector::from_vec(vec![real(2.0), ZERO]);
        let v3 = CVector::from_vec(vec![ONE, ONE]);
        let basis = orthonormal_span(&[v1, v2, v3]);
        assert_eq!(basis.len(), 2);
        assert!(basis[0].dotc(&basis[1]).norm() < 1e-14);
    }
}
