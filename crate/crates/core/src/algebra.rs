//! Finite-dimensional C*-algebras as concrete matrix *-algebras, with a
//! distinguished unital subalgebra `B` and a conditional expectation onto it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, hs_inner, identity, matrix_from_pairs, matrix_to_pairs, matrix_unit,
    min_eigenvalue, numerical_rank, op_norm, random_vector, real, CMatrix, CVector, ComplexPair,
    DEFAULT_SEED, RANK_TOL, SPAN_TOL,
};

/// Residual threshold for the structural checks of a validation report.
pub const CHECK_TOL: f64 = 1e-9;

const POSITIVITY_SAMPLES: usize = 200;
const WITNESS_SAMPLES: usize = 100;
const NONDEGENERACY_TARGETS: usize = 20;

/// A linear span of `ambient_dim x ambient_dim` complex matrices that is
/// closed under product and adjoint and contains the identity.
#[derive(Debug, Clone)]
pub struct MatrixStarAlgebra {
    ambient_dim: usize,
    basis: Vec<CMatrix>,
    gram_inverse: CMatrix,
    unit_coords: CVector,
}

impl MatrixStarAlgebra {
    pub fn new(ambient_dim: usize, basis: Vec<CMatrix>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::Configuration("ambient dimension must be positive".into()));
        }
        if basis.is_empty() {
            return Err(Error::Configuration("algebra basis is empty".into()));
        }
        for (p, b) in basis.iter().enumerate() {
            if b.nrows() != ambient_dim || b.ncols() != ambient_dim {
                return Err(Error::Configuration(format!(
                    "basis element {p} has shape {}x{}, expected {ambient_dim}x{ambient_dim}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        let dim = basis.len();
        let gram = CMatrix::from_fn(dim, dim, |p, q| hs_inner(&basis[p], &basis[q]));
        let (values, _) = hermitian_eigen(&gram);
        if numerical_rank(&values) < dim {
            return Err(Error::Structural("basis elements are linearly dependent".into()));
        }
        let gram_inverse = gram
            .try_inverse()
            .ok_or_else(|| Error::Structural("basis Gram matrix is singular".into()))?;
        let mut algebra = MatrixStarAlgebra {
            ambient_dim,
            basis,
            gram_inverse,
            unit_coords: CVector::zeros(dim),
        };
        algebra.unit_coords = algebra
            .coords(&identity(ambient_dim))
            .map_err(|_| Error::Structural("identity is not in the span".into()))?;
        for p in 0..dim {
            let adj = algebra.basis[p].adjoint();
            if algebra.residual(&adj) > SPAN_TOL * op_norm(&adj).max(1.0) {
                return Err(Error::Structural(format!("span is not closed under adjoint (element {p})")));
            }
            for q in 0..dim {
                let prod = &algebra.basis[p] * &algebra.basis[q];
                if algebra.residual(&prod) > SPAN_TOL * op_norm(&prod).max(1.0) {
                    return Err(Error::Structural(format!(
                        "span is not closed under product (elements {p}, {q})"
                    )));
                }
            }
        }
        Ok(algebra)
    }

    /// The full matrix algebra `M_n` with the matrix units in row-major order.
    pub fn full(n: usize) -> Result<Self> {
        let basis = (0..n * n).map(|k| matrix_unit(n, k / n, k % n)).collect();
        Self::new(n, basis)
    }

    /// Scalar multiples of the identity in `M_n`.
    pub fn scalars(n: usize) -> Result<Self> {
        Self::new(n, vec![identity(n)])
    }

    /// Diagonal matrices in `M_n`.
    pub fn diagonal(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| matrix_unit(n, i, i)).collect())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn unit_coords(&self) -> &CVector {
        &self.unit_coords
    }

    pub fn element(&self, coords: &CVector) -> CMatrix {
        let mut out = CMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for (b, z) in self.basis.iter().zip(coords.iter()) {
            out += b * *z;
        }
        out
    }

    fn raw_coords(&self, a: &CMatrix) -> CVector {
        let rhs = CVector::from_iterator(self.dim(), self.basis.iter().map(|b| hs_inner(b, a)));
        &self.gram_inverse * rhs
    }

    /// Distance (operator norm) from `a` to its best approximation in the span.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        op_norm(&(a - self.element(&self.raw_coords(a))))
    }

    /// Coordinates of `a` in the basis; structural error when `a` is outside the span.
    pub fn coords(&self, a: &CMatrix) -> Result<CVector> {
        if a.nrows() != self.ambient_dim || a.ncols() != self.ambient_dim {
            return Err(Error::Configuration(format!(
                "element has shape {}x{}, ambient dimension is {}",
                a.nrows(),
                a.ncols(),
                self.ambient_dim
            )));
        }
        let coords = self.raw_coords(a);
        let residual = op_norm(&(a - self.element(&coords)));
        if residual > SPAN_TOL * op_norm(a).max(1.0) {
            return Err(Error::Structural(format!(
                "element lies outside the span (residual {residual:.3e})"
            )));
        }
        Ok(coords)
    }

    pub fn contains(&self, a: &CMatrix) -> bool {
        self.coords(a).is_ok()
    }

    pub fn random_element(&self, rng: &mut ChaCha8Rng) -> CMatrix {
        self.element(&random_vector(rng, self.dim()))
    }
}

/// A matrix *-algebra `A`, a unital subalgebra `B ⊆ A` and a conditional
/// expectation `φ: A → B`, stored as its matrix from `A`-coordinates to
/// `B`-coordinates.
#[derive(Debug, Clone)]
pub struct AlgebraWithExpectation {
    algebra: MatrixStarAlgebra,
    subalgebra: MatrixStarAlgebra,
    expectation: CMatrix,
}

impl AlgebraWithExpectation {
    pub fn new(
        algebra: MatrixStarAlgebra,
        subalgebra: MatrixStarAlgebra,
        expectation: CMatrix,
    ) -> Result<Self> {
        if algebra.ambient_dim() != subalgebra.ambient_dim() {
            return Err(Error::Configuration(format!(
                "algebra acts on dimension {}, subalgebra on {}",
                algebra.ambient_dim(),
                subalgebra.ambient_dim()
            )));
        }
        if expectation.nrows() != subalgebra.dim() || expectation.ncols() != algebra.dim() {
            return Err(Error::Configuration(format!(
                "expectation matrix is {}x{}, expected {}x{}",
                expectation.nrows(),
                expectation.ncols(),
                subalgebra.dim(),
                algebra.dim()
            )));
        }
        for (q, b) in subalgebra.basis().iter().enumerate() {
            if !algebra.contains(b) {
                return Err(Error::Structural(format!(
                    "subalgebra basis element {q} is not in the algebra"
                )));
            }
        }
        Ok(AlgebraWithExpectation {
            algebra,
            subalgebra,
            expectation,
        })
    }

    /// Builds the expectation matrix by evaluating `phi` on the algebra basis.
    pub fn from_fn<F>(algebra: MatrixStarAlgebra, subalgebra: MatrixStarAlgebra, phi: F) -> Result<Self>
    where
        F: Fn(&CMatrix) -> CMatrix,
    {
        let mut expectation = CMatrix::zeros(subalgebra.dim(), algebra.dim());
        for (p, a) in algebra.basis().iter().enumerate() {
            let image = phi(a);
            let coords = subalgebra
                .coords(&image)
                .map_err(|_| Error::Structural(format!("image of basis element {p} is not in the subalgebra")))?;
            expectation.set_column(p, &coords);
        }
        Self::new(algebra, subalgebra, expectation)
    }

    /// `M_n` over the scalars with the normalized trace.
    pub fn scalars_in_matn(n: usize) -> Result<Self> {
        let scale = real(1.0 / n as f64);
        Self::from_fn(MatrixStarAlgebra::full(n)?, MatrixStarAlgebra::scalars(n)?, |a| {
            identity(n) * (a.trace() * scale)
        })
    }

    /// `M_n` over its diagonal, with the diagonal compression.
    pub fn diagonal_in_matn(n: usize) -> Result<Self> {
        Self::from_fn(MatrixStarAlgebra::full(n)?, MatrixStarAlgebra::diagonal(n)?, |a| {
            CMatrix::from_diagonal(&a.diagonal())
        })
    }

    /// Functions on `weights.len()` points (diagonal matrices) over the
    /// scalars, with the state given by the weights.
    pub fn function_algebra_with_state(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::Configuration("state needs at least one weight".into()));
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Configuration("state weights must be nonnegative and sum to 1".into()));
        }
        let w = weights.to_vec();
        Self::from_fn(MatrixStarAlgebra::diagonal(n)?, MatrixStarAlgebra::scalars(n)?, move |a| {
            let value: crate::linalg::C64 = (0..n).map(|i| a[(i, i)] * w[i]).sum();
            identity(n) * value
        })
    }

    /// Functions on two points with the uniform state: the basic factor of
    /// the free-shift experiments.
    pub fn two_point() -> Self {
        Self::function_algebra_with_state(&[0.5, 0.5]).expect("uniform two-point state is valid")
    }

    pub fn algebra(&self) -> &MatrixStarAlgebra {
        &self.algebra
    }

    pub fn subalgebra(&self) -> &MatrixStarAlgebra {
        &self.subalgebra
    }

    pub fn expectation_matrix(&self) -> &CMatrix {
        &self.expectation
    }

    pub fn ambient_dim(&self) -> usize {
        self.algebra.ambient_dim()
    }

    /// `φ(a)` as coordinates in the subalgebra basis.
    pub fn apply_coords(&self, a: &CMatrix) -> Result<CVector> {
        let coords = self.algebra.coords(a)?;
        Ok(&self.expectation * coords)
    }

    /// `φ(a)` as a matrix in `B`.
    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        Ok(self.subalgebra.element(&self.apply_coords(a)?))
    }

    /// `a − φ(a)`, tagged with the index of the algebra copy it belongs to.
    pub fn center(&self, owner: i64, a: &CMatrix) -> Result<CenteredElement> {
        let centered = a - self.apply(a)?;
        CenteredElement::new(owner, self, centered)
    }

    /// Does the subalgebra of `self` coincide with that of `other`?
    pub fn same_subalgebra(&self, other: &AlgebraWithExpectation) -> bool {
        self.ambient_dim() == other.ambient_dim()
            && self.subalgebra.dim() == other.subalgebra.dim()
            && self.subalgebra.basis().iter().all(|b| other.subalgebra.contains(b))
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with_seed(DEFAULT_SEED)
    }

    /// Numerical check of the conditional-expectation axioms. Positivity and
    /// nondegeneracy are sampled over the basis and seeded random elements.
    pub fn validate_with_seed(&self, seed: u64) -> ValidationReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = |a: &CMatrix| self.apply(a).expect("products of algebra elements stay in the algebra");
        let a_basis = self.algebra.basis();
        let b_basis = self.subalgebra.basis();
        let n = self.ambient_dim();
        let mut checks = Vec::new();

        let unit = op_norm(&(phi(&identity(n)) - identity(n)));
        checks.push(Check::new("unit", unit));

        let idempotence = b_basis
            .iter()
            .map(|b| op_norm(&(phi(b) - b)) / op_norm(b))
            .fold(0.0, f64::max);
        checks.push(Check::new("idempotence", idempotence));

        let mut bimodule: f64 = 0.0;
        for b1 in b_basis {
            for b2 in b_basis {
                for a in a_basis {
                    let lhs = phi(&(b1 * a * b2));
                    let rhs = b1 * phi(a) * b2;
                    let scale = op_norm(b1) * op_norm(a) * op_norm(b2);
                    bimodule = bimodule.max(op_norm(&(lhs - rhs)) / scale);
                }
            }
        }
        checks.push(Check::new("bimodule", bimodule));

        let mut samples: Vec<CMatrix> = a_basis.to_vec();
        samples.extend((0..POSITIVITY_SAMPLES).map(|_| self.algebra.random_element(&mut rng)));
        let mut adjoint: f64 = 0.0;
        let mut positivity: f64 = 0.0;
        for a in &samples {
            let norm = op_norm(a);
            adjoint = adjoint.max(op_norm(&(phi(&a.adjoint()) - phi(a).adjoint())) / norm);
            let p = phi(&(a.adjoint() * a));
            let skew = op_norm(&(&p - p.adjoint()));
            positivity = positivity.max((skew + (-min_eigenvalue(&p)).max(0.0)) / (norm * norm));
        }
        checks.push(Check::new("adjoint", adjoint));
        checks.push(Check::new("positivity", positivity));

        let mut witnesses: Vec<CMatrix> = a_basis.to_vec();
        witnesses.extend((0..WITNESS_SAMPLES).map(|_| self.algebra.random_element(&mut rng)));
        let mut targets: Vec<CMatrix> = a_basis.to_vec();
        targets.extend((0..NONDEGENERACY_TARGETS).map(|_| self.algebra.random_element(&mut rng)));
        // weakest witness strength over all targets; zero means some target has none
        let mut weakest = f64::INFINITY;
        for a in &targets {
            let aa = a.adjoint() * a;
            let strength = witnesses
                .iter()
                .map(|x| op_norm(&phi(&(x.adjoint() * &aa * x))) / (op_norm(x).powi(2) * op_norm(&aa)))
                .fold(0.0, f64::max);
            weakest = weakest.min(strength);
        }
        checks.push(Check {
            name: "nondegeneracy".into(),
            passed: weakest > RANK_TOL,
            residual: weakest,
        });

        ValidationReport { checks }
    }

    /// Fails with a structural error naming every failed check.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.all_passed() {
            Ok(())
        } else {
            let failed: Vec<String> = report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| format!("{} ({:.3e})", c.name, c.residual))
                .collect();
            Err(Error::Structural(format!("expectation checks failed: {}", failed.join(", "))))
        }
    }

    pub fn to_json(&self) -> AlgebraSpecJson {
        AlgebraSpecJson {
            ambient_dim: self.ambient_dim(),
            algebra_basis: self.algebra.basis().iter().map(matrix_to_pairs).collect(),
            subalgebra_basis: self.subalgebra.basis().iter().map(matrix_to_pairs).collect(),
            expectation_matrix: (0..self.expectation.nrows())
                .map(|q| {
                    self.expectation
                        .row(q)
                        .iter()
                        .map(|z| [z.re, z.im])
                        .collect()
                })
                .collect(),
        }
    }
}

/// One named structural check. For `nondegeneracy` the figure is the weakest
/// witness strength found (larger is better); for every other check it is a
/// relative residual in operator norm.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
}

impl Check {
    fn new(name: &str, residual: f64) -> Self {
        Check {
            name: name.into(),
            passed: residual <= CHECK_TOL,
            residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// An element `a` of the copy `A_owner` with `φ(a) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredElement {
    owner: i64,
    element: CMatrix,
}

impl CenteredElement {
    pub fn new(owner: i64, spec: &AlgebraWithExpectation, element: CMatrix) -> Result<Self> {
        let phi = spec.apply(&element)?;
        if op_norm(&phi) > SPAN_TOL * op_norm(&element).max(1.0) {
            return Err(Error::Domain(format!(
                "letter in A_{owner} is not centered (|φ(a)| = {:.3e})",
                op_norm(&phi)
            )));
        }
        Ok(CenteredElement { owner, element })
    }

    /// Same matrix, different algebra copy (used by the free shift).
    pub fn with_owner(&self, owner: i64) -> Self {
        CenteredElement {
            owner,
            element: self.element.clone(),
        }
    }

    pub fn owner(&self) -> i64 {
        self.owner
    }

    pub fn element(&self) -> &CMatrix {
        &self.element
    }

    pub fn adjoint(&self) -> Self {
        CenteredElement {
            owner: self.owner,
            element: self.element.adjoint(),
        }
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.element)
    }
}

/// JSON form of an algebra with expectation. Matrices are row-major lists of
/// `[re, im]` pairs; the expectation matrix has one row per subalgebra basis
/// element and one column per algebra basis element.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AlgebraSpecJson {
    pub ambient_dim: usize,
    pub algebra_basis: Vec<Vec<ComplexPair>>,
    pub subalgebra_basis: Vec<Vec<ComplexPair>>,
    pub expectation_matrix: Vec<Vec<ComplexPair>>,
}

impl AlgebraSpecJson {
    pub fn build(&self) -> Result<AlgebraWithExpectation> {
        let n = self.ambient_dim;
        let parse = |list: &[Vec<ComplexPair>]| -> Result<Vec<CMatrix>> {
            list.iter().map(|m| matrix_from_pairs(n, m)).collect()
        };
        let algebra = MatrixStarAlgebra::new(n, parse(&self.algebra_basis)?)?;
        let subalgebra = MatrixStarAlgebra::new(n, parse(&self.subalgebra_basis)?)?;
        let rows = self.expectation_matrix.len();
        let cols = self.expectation_matrix.first().map_or(0, |r| r.len());
        if self.expectation_matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::Configuration("expectation matrix rows differ in length".into()));
        }
        let expectation = CMatrix::from_fn(rows, cols, |q, p| {
            let z = self.expectation_matrix[q][p];
            crate::linalg::c(z[0], z[1])
        });
        AlgebraWithExpectation::new(algebra, subalgebra, expectation)
    }
}

/// An algebra given either explicitly or by a named preset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AlgebraConfig {
    Preset {
        preset: String,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    Explicit(AlgebraSpecJson),
}

pub const ALGEBRA_PRESETS: [&str; 3] = ["scalars_in_matn", "diagonal_in_matn", "function_algebra_with_state"];

impl AlgebraConfig {
    pub fn build(&self) -> Result<AlgebraWithExpectation> {
        match self {
            AlgebraConfig::Explicit(spec) => spec.build(),
            AlgebraConfig::Preset { preset, n, weights } => match preset.as_str() {
                "scalars_in_matn" => AlgebraWithExpectation::scalars_in_matn(n.unwrap_or(2)),
                "diagonal_in_matn" => AlgebraWithExpectation::diagonal_in_matn(n.unwrap_or(2)),
                "function_algebra_with_state" => {
                    let w = match (weights, n) {
                        (Some(w), _) => w.clone(),
                        (None, Some(n)) => vec![1.0 / *n as f64; *n],
                        (None, None) => vec![0.5, 0.5],
                    };
                    AlgebraWithExpectation::function_algebra_with_state(&w)
                }
                other => Err(Error::Configuration(format!(
                    "unknown algebra preset '{other}' (known: {})",
                    ALGEBRA_PRESETS.join(", ")
                ))),
            },
        }
    }
}
