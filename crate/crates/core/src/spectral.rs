//! Sparse operator helpers and largest-singular-value estimation.
//!
//! Every reported value is `‖X v‖ / ‖v‖` for an explicit vector `v`, so it is
//! a rigorous lower bound for `‖X‖` whichever solver produced `v`.

use std::ops::Range;

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{hermitian_eigen, random_vector, real, CMatrix, CVector, C64};

pub type SparseMatrix = CsrMatrix<C64>;

/// Gram components up to this dimension use a dense Hermitian eigensolver.
pub const DENSE_LIMIT: usize = 600;
pub const POWER_ITERATIONS: usize = 300;
pub const POWER_REL_TOL: f64 = 1e-12;

/// Entries below this magnitude are not stored.
pub const DROP_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormMethod {
    Dense,
    Power { iterations: usize },
}

#[derive(Debug, Clone)]
pub struct SingularEstimate {
    pub value: f64,
    pub vector: CVector,
    pub method: NormMethod,
}

/// Accumulates triplets; duplicate positions are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    coo: CooMatrix<C64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            coo: CooMatrix::new(nrows, ncols),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        if value.norm() > DROP_TOL {
            self.coo.push(row, col, value);
        }
    }

    /// Adds a dense block with its top-left corner at `(row, col)`.
    pub fn push_block(&mut self, row: usize, col: usize, block: &CMatrix) {
        for j in 0..block.ncols() {
            for i in 0..block.nrows() {
                self.push(row + i, col + j, block[(i, j)]);
            }
        }
    }

    pub fn build(self) -> SparseMatrix {
        CsrMatrix::from(&self.coo)
    }
}

pub fn identity(n: usize) -> SparseMatrix {
    CsrMatrix::identity(n)
}

pub fn zeros(nrows: usize, ncols: usize) -> SparseMatrix {
    CsrMatrix::zeros(nrows, ncols)
}

pub fn adjoint(m: &SparseMatrix) -> SparseMatrix {
    let mut t = m.transpose();
    t.values_mut().iter_mut().for_each(|z| *z = z.conj());
    t
}

pub fn scale(m: &SparseMatrix, factor: C64) -> SparseMatrix {
    let mut out = m.clone();
    out.values_mut().iter_mut().for_each(|z| *z *= factor);
    out
}

pub fn to_dense(m: &SparseMatrix) -> CMatrix {
    CMatrix::from(m)
}

pub fn frobenius(m: &SparseMatrix) -> f64 {
    m.values().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Rows `rows` and columns `cols` of `m` as a new sparse matrix.
pub fn submatrix(m: &SparseMatrix, rows: Range<usize>, cols: Range<usize>) -> SparseMatrix {
    let mut builder = TripletBuilder::new(rows.len(), cols.len());
    for i in rows.clone() {
        let row = m.row(i);
        for (&j, &z) in row.col_indices().iter().zip(row.values()) {
            if cols.contains(&j) {
                builder.push(i - rows.start, j - cols.start, z);
            }
        }
    }
    builder.build()
}

/// Largest singular value of `m` with a maximizing unit vector.
pub fn top_singular(m: &SparseMatrix, seed: u64) -> SingularEstimate {
    let n = m.ncols();
    if n == 0 || m.nnz() == 0 {
        let mut vector = CVector::zeros(n);
        if n > 0 {
            vector[0] = real(1.0);
        }
        return SingularEstimate {
            value: 0.0,
            vector,
            method: NormMethod::Dense,
        };
    }
    let gram = adjoint(m) * m;
    let components = column_components(&gram);
    let (vector, method) = if components.iter().all(|c| c.len() <= DENSE_LIMIT) {
        (componentwise_top(&gram, &components), NormMethod::Dense)
    } else {
        power_iteration(m, seed)
    };
    let value = (m * &vector).norm() / vector.norm();
    SingularEstimate { value, vector, method }
}

/// Connected components of the nonzero pattern of a Hermitian matrix.
fn column_components(gram: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = gram.ncols();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for &j in gram.row(i).col_indices() {
            let (a, b) = (root(&mut parent, i), root(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Top eigenvector of a block-diagonal (after permutation) Hermitian matrix.
fn componentwise_top(gram: &SparseMatrix, components: &[Vec<usize>]) -> CVector {
    let mut best = (f64::NEG_INFINITY, CVector::zeros(gram.ncols()));
    let mut local = vec![usize::MAX; gram.ncols()];
    for comp in components {
        for (k, &i) in comp.iter().enumerate() {
            local[i] = k;
        }
        let mut dense = CMatrix::zeros(comp.len(), comp.len());
        for (k, &i) in comp.iter().enumerate() {
            let row = gram.row(i);
            for (&j, &z) in row.col_indices().iter().zip(row.values()) {
                dense[(k, local[j])] = z;
            }
        }
        let (values, vectors) = hermitian_eigen(&dense);
        if values[0] > best.0 {
            let mut v = CVector::zeros(gram.ncols());
            for (k, &i) in comp.iter().enumerate() {
                v[i] = vectors[(k, 0)];
            }
            best = (values[0], v);
        }
    }
    best.1
}

fn power_iteration(m: &SparseMatrix, seed: u64) -> (CVector, NormMethod) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adj = adjoint(m);
    let mut v = random_vector(&mut rng, m.ncols());
    v /= real(v.norm());
    let mut previous = 0.0;
    let mut iterations = 0;
    while iterations < POWER_ITERATIONS {
        iterations += 1;
        let image = m * &v;
        let estimate = image.norm_squared();
        let w = &adj * image;
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        v = w / real(norm);
        if iterations > 1 && (estimate - previous).abs() <= POWER_REL_TOL * estimate {
            break;
        }
        previous = estimate;
    }
    (v, NormMethod::Power { iterations })
}

/// Operator norm via [`top_singular`] with the default seed.
pub fn operator_norm(m: &SparseMatrix) -> f64 {
    top_singular(m, crate::linalg::DEFAULT_SEED).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn sample(n: usize) -> SparseMatrix {
        let mut b = TripletBuilder::new(n + 1, n);
        for j in 0..n {
            b.push(j, j, real(1.0 + j as f64));
            b.push(j + 1, j, c(0.0, 0.5));
        }
        b.build()
    }

    #[test]
    fn dense_and_power_agree() {
        let m = sample(30);
        let dense = top_singular(&m, 1);
        assert_eq!(dense.method, NormMethod::Dense);
        let (v, _) = power_iteration(&m, 7);
        let power = (&m * &v).norm() / v.norm();
        let exact = to_dense(&m).svd(false, false).singular_values.max();
        assert!((dense.value - exact).abs() < 1e-12);
        assert!(power <= exact + 1e-12 && (exact - power) / exact < 1e-6);
    }

    #[test]
    fn decoupled_blocks_stay_dense() {
        let n = DENSE_LIMIT + 100;
        let mut b = TripletBuilder::new(n, n);
        for j in (0..n).step_by(2) {
            b.push(j, j, real(1.0));
            b.push(j, j + 1, c(0.0, (j % 7) as f64));
            b.push(j + 1, j + 1, real(0.5));
        }
        let m = b.build();
        let est = top_singular(&m, 3);
        assert_eq!(est.method, NormMethod::Dense);
        let block = CMatrix::from_row_slice(2, 2, &[real(1.0), c(0.0, 6.0), real(0.0), real(0.5)]);
        let exact = block.svd(false, false).singular_values.max();
        assert!((est.value - exact).abs() < 1e-12);
    }

    #[test]
    fn large_domains_use_power_iteration() {
        let m = sample(DENSE_LIMIT + 5);
        let est = top_singular(&m, 3);
        assert!(matches!(est.method, NormMethod::Power { .. }));
        assert!(est.value > 0.99 * (DENSE_LIMIT + 5) as f64);
    }

    #[test]
    fn submatrix_and_adjoint() {
        let m = sample(4);
        let s = submatrix(&m, 1..3, 0..2);
        let d = to_dense(&m);
        assert_eq!(to_dense(&s), d.view((1, 0), (2, 2)).into_owned());
        assert_eq!(to_dense(&adjoint(&m)), d.adjoint());
    }

    #[test]
    fn zero_operator_has_zero_norm() {
        assert_eq!(operator_norm(&zeros(3, 3)), 0.0);
    }
}
