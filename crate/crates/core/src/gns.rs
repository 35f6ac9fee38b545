//! The right Hilbert `B`-module `L²(A, φ)` obtained by separation, with its
//! `B`-valued inner product `⟨x, y⟩ = φ(x*y)` and the splitting `B ⊕ E°`.
//!
//! Carrier vectors are represented by coordinates over a basis of
//! representatives in `A`. The basis is orthonormal for the scalar inner
//! product `τ(φ(x*y))`, `τ` the normalized trace of the ambient matrices,
//! which is faithful on `B` and so detects the same null space as `φ`. The
//! first `b_dim` basis vectors span the image of `B`, the remaining ones
//! span `E°`.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraWithExpectation;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, numerical_rank, op_norm, psd_sqrt, real, CMatrix, CVector, MatrixJson, C64,
    RANK_TOL,
};

static NEXT_MODULE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone)]
pub struct GnsModule {
    id: u64,
    source: AlgebraWithExpectation,
    representatives: Vec<CMatrix>,
    b_dim: usize,
    gram: Vec<Vec<CMatrix>>,
    hat_map: CMatrix,
    left_action: Vec<CMatrix>,
}

/// A vector of a specific [`GnsModule`], in carrier coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleVector {
    module: u64,
    coords: CVector,
}

impl ModuleVector {
    pub fn module_id(&self) -> u64 {
        self.module
    }

    pub fn coords(&self) -> &CVector {
        &self.coords
    }
}

/// Normalized trace of `φ(x*y)`.
fn scalar_inner(spec: &AlgebraWithExpectation, x: &CMatrix, y: &CMatrix) -> C64 {
    let n = spec.ambient_dim() as f64;
    spec.apply(&(x.adjoint() * y))
        .expect("products of algebra elements stay in the algebra")
        .trace()
        / real(n)
}

/// Orthonormal representatives for the span of `generators` modulo the null space.
fn orthonormalize(spec: &AlgebraWithExpectation, generators: &[CMatrix]) -> Vec<CMatrix> {
    let k = generators.len();
    let gram = CMatrix::from_fn(k, k, |p, q| scalar_inner(spec, &generators[p], &generators[q]));
    let (values, vectors) = hermitian_eigen(&gram);
    let rank = numerical_rank(&values);
    (0..rank)
        .map(|t| {
            let scale = real(1.0 / values[t].sqrt());
            let mut rep = CMatrix::zeros(spec.ambient_dim(), spec.ambient_dim());
            for (p, g) in generators.iter().enumerate() {
                rep += g * (vectors[(p, t)] * scale);
            }
            rep
        })
        .collect()
}

impl GnsModule {
    /// Separation of `A` with respect to `φ`. Rejects expectations that fail
    /// validation, including the nondegeneracy condition.
    pub fn build(spec: &AlgebraWithExpectation) -> Result<Self> {
        spec.ensure_valid()?;
        Ok(Self::build_unchecked(spec))
    }

    fn build_unchecked(spec: &AlgebraWithExpectation) -> Self {
        let b_reps = orthonormalize(spec, spec.subalgebra().basis());
        let centered: Vec<CMatrix> = spec
            .algebra()
            .basis()
            .iter()
            .map(|a| a - spec.apply(a).expect("basis element lies in the algebra"))
            .collect();
        let e_reps = orthonormalize(spec, &centered);
        let b_dim = b_reps.len();
        let mut representatives = b_reps;
        representatives.extend(e_reps);

        let gram = representatives
            .iter()
            .map(|x| {
                representatives
                    .iter()
                    .map(|y| spec.apply(&(x.adjoint() * y)).expect("closed under products"))
                    .collect()
            })
            .collect();

        let mut module = GnsModule {
            id: NEXT_MODULE_ID.fetch_add(1, Ordering::Relaxed),
            source: spec.clone(),
            representatives,
            b_dim,
            gram,
            hat_map: CMatrix::zeros(0, 0),
            left_action: Vec::new(),
        };
        let dim_a = spec.algebra().dim();
        let mut hat_map = CMatrix::zeros(module.carrier_dim(), dim_a);
        for (p, a) in spec.algebra().basis().iter().enumerate() {
            hat_map.set_column(p, &module.hat_coords(a));
        }
        module.hat_map = hat_map;
        module.left_action = spec
            .algebra()
            .basis()
            .iter()
            .map(|a| module.left_matrix(a))
            .collect();
        module
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn source(&self) -> &AlgebraWithExpectation {
        &self.source
    }

    pub fn carrier_dim(&self) -> usize {
        self.representatives.len()
    }

    /// Dimension of the null space `N` that was divided out.
    pub fn null_dim(&self) -> usize {
        self.source.algebra().dim() - self.carrier_dim()
    }

    pub fn b_dim(&self) -> usize {
        self.b_dim
    }

    pub fn centered_dim(&self) -> usize {
        self.carrier_dim() - self.b_dim
    }

    /// Representatives in `A` of the carrier basis.
    pub fn representatives(&self) -> &[CMatrix] {
        &self.representatives
    }

    /// Representatives of the orthonormal basis of `E°`.
    pub fn centered_representatives(&self) -> &[CMatrix] {
        &self.representatives[self.b_dim..]
    }

    /// `B`-valued Gram data `φ(r_l* r_m)` over the carrier representatives.
    pub fn gram(&self) -> &[Vec<CMatrix>] {
        &self.gram
    }

    /// Matrix of the hat map from `A`-coordinates to carrier coordinates.
    pub fn hat_map(&self) -> &CMatrix {
        &self.hat_map
    }

    /// Matrices of the left action of each `A` basis element on the carrier.
    pub fn left_action(&self) -> &[CMatrix] {
        &self.left_action
    }

    /// Scalar inner product used for the carrier coordinates.
    pub fn scalar_inner(&self, x: &CMatrix, y: &CMatrix) -> C64 {
        scalar_inner(&self.source, x, y)
    }

    fn hat_coords(&self, a: &CMatrix) -> CVector {
        CVector::from_iterator(
            self.carrier_dim(),
            self.representatives.iter().map(|r| self.scalar_inner(r, a)),
        )
    }

    /// `a ↦ x ↦ (a x)^` on carrier coordinates.
    pub fn left_matrix(&self, a: &CMatrix) -> CMatrix {
        let reps = &self.representatives;
        CMatrix::from_fn(reps.len(), reps.len(), |l, m| self.scalar_inner(&reps[l], &(a * &reps[m])))
    }

    /// Coordinates over the `E°` basis of `H(ẑ) = (z − φ(z))^`.
    pub fn centered_coords(&self, z: &CMatrix) -> CVector {
        CVector::from_iterator(
            self.centered_dim(),
            self.centered_representatives().iter().map(|r| self.scalar_inner(r, z)),
        )
    }

    /// The canonical image `â` of `a ∈ A`.
    pub fn hat(&self, a: &CMatrix) -> Result<ModuleVector> {
        self.source.algebra().coords(a)?;
        Ok(ModuleVector {
            module: self.id,
            coords: self.hat_coords(a),
        })
    }

    pub fn vector(&self, coords: CVector) -> Result<ModuleVector> {
        if coords.len() != self.carrier_dim() {
            return Err(Error::Configuration(format!(
                "module vector has {} coordinates, carrier dimension is {}",
                coords.len(),
                self.carrier_dim()
            )));
        }
        Ok(ModuleVector {
            module: self.id,
            coords,
        })
    }

    fn check(&self, x: &ModuleVector) -> Result<()> {
        if x.module != self.id {
            return Err(Error::Mismatch(format!(
                "vector of module {} used with module {}",
                x.module, self.id
            )));
        }
        Ok(())
    }

    /// A representative in `A` of the class of `x`.
    pub fn representative(&self, x: &ModuleVector) -> Result<CMatrix> {
        self.check(x)?;
        let n = self.source.ambient_dim();
        let mut out = CMatrix::zeros(n, n);
        for (r, z) in self.representatives.iter().zip(x.coords.iter()) {
            out += r * *z;
        }
        Ok(out)
    }

    /// `⟨x, y⟩ = φ(x*y)`, an element of `B`.
    pub fn inner_product(&self, x: &ModuleVector, y: &ModuleVector) -> Result<CMatrix> {
        let xr = self.representative(x)?;
        let yr = self.representative(y)?;
        self.source.apply(&(xr.adjoint() * yr))
    }

    /// `|x| = ⟨x, x⟩^{1/2}`.
    pub fn abs(&self, x: &ModuleVector) -> Result<CMatrix> {
        Ok(psd_sqrt(&self.inner_product(x, x)?))
    }

    /// `‖x‖ = ‖|x|‖ = ‖⟨x, x⟩‖^{1/2}`.
    pub fn norm(&self, x: &ModuleVector) -> Result<f64> {
        Ok(op_norm(&self.inner_product(x, x)?).sqrt())
    }

    /// Right action `x · b`.
    pub fn right_act(&self, x: &ModuleVector, b: &CMatrix) -> Result<ModuleVector> {
        if !self.source.subalgebra().contains(b) {
            return Err(Error::Domain("right action by an element outside B".into()));
        }
        let xr = self.representative(x)?;
        self.hat(&(xr * b))
    }

    /// Left action `a · x`.
    pub fn left_act(&self, a: &CMatrix, x: &ModuleVector) -> Result<ModuleVector> {
        let xr = self.representative(x)?;
        self.hat(&(a * xr))
    }

    /// Orthogonal projections onto the `B` summand and onto `E°` (the latter is `H`).
    pub fn split_unit(&self) -> (CMatrix, CMatrix) {
        let d = self.carrier_dim();
        let p_b = CMatrix::from_fn(d, d, |l, m| if l == m && l < self.b_dim { real(1.0) } else { real(0.0) });
        let h = CMatrix::identity(d, d) - &p_b;
        (p_b, h)
    }

    /// `H(x)`, the component of `x` in `E°`.
    pub fn centered_part(&self, x: &ModuleVector) -> Result<ModuleVector> {
        self.check(x)?;
        let (_, h) = self.split_unit();
        Ok(ModuleVector {
            module: self.id,
            coords: h * &x.coords,
        })
    }

    /// Largest carrier coordinate in the `B` summand, used to test membership in `E°`.
    pub fn b_component_norm(&self, x: &ModuleVector) -> Result<f64> {
        self.check(x)?;
        Ok(x.coords.rows(0, self.b_dim).norm())
    }

    /// Rank of the scalar Gram matrix of the algebra basis; equals the carrier dimension.
    pub fn scalar_gram_rank(&self) -> usize {
        let basis = self.source.algebra().basis();
        let gram = CMatrix::from_fn(basis.len(), basis.len(), |p, q| self.scalar_inner(&basis[p], &basis[q]));
        numerical_rank(&hermitian_eigen(&gram).0)
    }

    /// Dimension of the kernel of the hat map.
    pub fn hat_kernel_dim(&self) -> usize {
        let gram = self.hat_map.adjoint() * &self.hat_map;
        let (values, _) = hermitian_eigen(&gram);
        let top = values.first().cloned().unwrap_or(0.0);
        values.len() - values.iter().filter(|&&v| v > RANK_TOL * top).count()
    }

    pub fn to_json(&self) -> GnsModuleJson {
        GnsModuleJson {
            ambient_dim: self.source.ambient_dim(),
            algebra: self.source.to_json(),
            b_dim: self.b_dim,
            representatives: self.representatives.iter().map(MatrixJson::from).collect(),
            gram: self
                .gram
                .iter()
                .map(|row| row.iter().map(MatrixJson::from).collect())
                .collect(),
            hat_map: MatrixJson::from(&self.hat_map),
        }
    }
}

/// Cached form of a [`GnsModule`]: basis representatives and Gram data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GnsModuleJson {
    pub ambient_dim: usize,
    pub algebra: crate::algebra::AlgebraSpecJson,
    pub b_dim: usize,
    pub representatives: Vec<MatrixJson>,
    pub gram: Vec<Vec<MatrixJson>>,
    pub hat_map: MatrixJson,
}

impl GnsModuleJson {
    /// Rebuilds the module from its algebra and checks the cached basis agrees.
    pub fn restore(&self) -> Result<GnsModule> {
        let module = GnsModule::build(&self.algebra.build()?)?;
        let reps: Result<Vec<CMatrix>> = self.representatives.iter().map(|m| m.to_matrix()).collect();
        let reps = reps?;
        let agrees = reps.len() == module.carrier_dim()
            && self.b_dim == module.b_dim()
            && reps
                .iter()
                .zip(module.representatives())
                .all(|(a, b)| (a - b).norm() <= 1e-9 * b.norm().max(1.0));
        if !agrees {
            return Err(Error::Structural("cached module does not match its algebra".into()));
        }
        Ok(module)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MatrixStarAlgebra;
    use crate::linalg::{identity, matrix_unit};

    fn corner_state() -> AlgebraWithExpectation {
        AlgebraWithExpectation::from_fn(
            MatrixStarAlgebra::full(2).unwrap(),
            MatrixStarAlgebra::scalars(2).unwrap(),
            |a| identity(2) * a[(0, 0)],
        )
        .unwrap()
    }

    /// Rank of the scalar Gram matrix `τ(φ(x*y))` over the algebra basis,
    /// computed directly from the expectation.
    fn gram_rank(spec: &AlgebraWithExpectation) -> usize {
        let basis = spec.algebra().basis();
        let n = spec.ambient_dim() as f64;
        let gram = CMatrix::from_fn(basis.len(), basis.len(), |p, q| {
            spec.apply(&(basis[p].adjoint() * &basis[q])).unwrap().trace() / n
        });
        numerical_rank(&hermitian_eigen(&gram).0)
    }

    #[test]
    fn faithful_trace_has_no_null_space() {
        let module = GnsModule::build(&AlgebraWithExpectation::scalars_in_matn(2).unwrap()).unwrap();
        assert_eq!(module.carrier_dim(), 4);
        assert_eq!(module.null_dim(), 0);
        assert_eq!(module.b_dim(), 1);
        assert_eq!(module.centered_dim(), 3);
    }

    #[test]
    fn two_point_function_algebra() {
        let spec = AlgebraWithExpectation::two_point();
        assert_eq!(gram_rank(&spec), 2);
        let module = GnsModule::build(&spec).unwrap();
        assert_eq!(module.carrier_dim(), 2);
        assert_eq!(module.centered_dim(), 1);
    }

    #[test]
    fn corner_state_separates_two_directions() {
        let spec = corner_state();
        assert_eq!(gram_rank(&spec), 2);
        let module = GnsModule::build(&spec).unwrap();
        assert_eq!(module.carrier_dim(), 2);
        assert_eq!(module.null_dim(), 2);
        assert_eq!(module.hat_kernel_dim(), module.null_dim());
        assert_eq!(module.scalar_gram_rank(), module.carrier_dim());
        // e12 and e22 have zero first column, so they vanish in the quotient
        for a in [matrix_unit(2, 0, 1), matrix_unit(2, 1, 1)] {
            assert!(module.hat(&a).unwrap().coords().norm() < 1e-14);
        }
    }

    #[test]
    fn centering_projection_examples() {
        let module = GnsModule::build(&AlgebraWithExpectation::diagonal_in_matn(2).unwrap()).unwrap();
        let e12 = module.hat(&matrix_unit(2, 0, 1)).unwrap();
        let e11 = module.hat(&matrix_unit(2, 0, 0)).unwrap();
        let one = module.hat(&identity(2)).unwrap();
        assert!((module.centered_part(&e12).unwrap().coords() - e12.coords()).norm() < 1e-14);
        assert!(module.centered_part(&e11).unwrap().coords().norm() < 1e-14);
        assert!(module.centered_part(&one).unwrap().coords().norm() < 1e-14);
        let (p_b, h) = module.split_unit();
        assert!((&h * &h - &h).norm() < 1e-14 && (h.adjoint() - &h).norm() < 1e-14);
        assert!((p_b + h - CMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn centered_projection_matches_a_minus_phi() {
        let spec = AlgebraWithExpectation::scalars_in_matn(2).unwrap();
        let module = GnsModule::build(&spec).unwrap();
        let a = CMatrix::from_row_slice(2, 2, &[real(1.0), real(2.0), real(3.0), real(4.0)]);
        let lhs = module.centered_part(&module.hat(&a).unwrap()).unwrap();
        let rhs = module.hat(&(&a - spec.apply(&a).unwrap())).unwrap();
        assert!((lhs.coords() - rhs.coords()).norm() < 1e-13);
    }

    #[test]
    fn inner_product_examples() {
        let spec = AlgebraWithExpectation::scalars_in_matn(2).unwrap();
        let module = GnsModule::build(&spec).unwrap();
        let one = module.hat(&identity(2)).unwrap();
        assert!((module.inner_product(&one, &one).unwrap() - identity(2)).norm() < 1e-14);
        let x = module.hat(&matrix_unit(2, 0, 1)).unwrap();
        let half = identity(2) * real(0.5);
        assert!((module.inner_product(&x, &x).unwrap() - half).norm() < 1e-14);
        assert!((module.norm(&x).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gram_is_hermitian_and_matches_phi() {
        let spec = AlgebraWithExpectation::diagonal_in_matn(2).unwrap();
        let module = GnsModule::build(&spec).unwrap();
        let reps = module.representatives();
        for l in 0..reps.len() {
            for m in 0..reps.len() {
                assert!((module.gram()[l][m].adjoint() - &module.gram()[m][l]).norm() < 1e-14);
            }
        }
        for a in spec.algebra().basis() {
            for b in spec.algebra().basis() {
                let lhs = module.inner_product(&module.hat(a).unwrap(), &module.hat(b).unwrap()).unwrap();
                let rhs = spec.apply(&(a.adjoint() * b)).unwrap();
                assert!((lhs - rhs).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn b_action_preserves_the_splitting() {
        let spec = AlgebraWithExpectation::diagonal_in_matn(3).unwrap();
        let module = GnsModule::build(&spec).unwrap();
        let (p_b, h) = module.split_unit();
        for b in spec.subalgebra().basis() {
            let l = module.left_matrix(b);
            assert!((&p_b * &l * &h).norm() < 1e-13 && (&h * &l * &p_b).norm() < 1e-13);
        }
    }

    #[test]
    fn module_mismatch_is_reported() {
        let a = GnsModule::build(&AlgebraWithExpectation::two_point()).unwrap();
        let b = GnsModule::build(&AlgebraWithExpectation::two_point()).unwrap();
        let x = a.hat(&identity(2)).unwrap();
        assert!(matches!(b.inner_product(&x, &x), Err(Error::Mismatch(_))));
    }

    #[test]
    fn degenerate_expectation_is_rejected() {
        let spec = AlgebraWithExpectation::function_algebra_with_state(&[1.0, 0.0]).unwrap();
        assert!(matches!(GnsModule::build(&spec), Err(Error::Structural(_))));
    }

    #[test]
    fn json_cache_restores() {
        let module = GnsModule::build(&AlgebraWithExpectation::diagonal_in_matn(2).unwrap()).unwrap();
        let text = serde_json::to_string(&module.to_json()).unwrap();
        let cached: GnsModuleJson = serde_json::from_str(&text).unwrap();
        let restored = cached.restore().unwrap();
        assert_eq!(restored.carrier_dim(), module.carrier_dim());
    }
}
