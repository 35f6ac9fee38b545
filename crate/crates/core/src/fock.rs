//! The truncated amalgamated Fock module
//!
//! ```text
//! E = B ⊕ ⨁_{m ≥ 1, i_j ≠ i_{j+1}} E°_{i_1} ⊗_B ⋯ ⊗_B E°_{i_m}
//! ```
//!
//! cut off at level `M` and realized as the Hilbert space `E ⊗_σ V`, where `σ`
//! is the identity representation of `B` restricted to a faithful invariant
//! subspace `V` of its ambient space.
//!
//! Each index sequence is one block of the basis. A block `(i, rest)` is
//! spanned by the formal tensors `x_j ⊗ u_t` (`x_j` the `E°_i` basis, `u_t` the
//! orthonormal basis of the block `rest`), whose scalar Gram matrix is
//! `[π_rest(⟨x_j, x_l⟩)]_{j,l}` with `π_rest` the left `B`-action on `rest`.
//! Null directions of that Gram matrix are divided out and the rest
//! orthonormalized, so every block carries an orthonormal basis together with
//! its coefficient matrix `C` (formal coordinates of the basis) and `C*G`
//! (formal coordinates to basis coordinates).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::algebra::{AlgebraWithExpectation, CenteredElement, MatrixStarAlgebra};
use crate::error::{Error, Result};
use crate::gns::{GnsModule, ModuleVector};
use crate::linalg::{
    hermitian_eigen, hs_inner, kron_identity, max_abs, numerical_rank, orthonormal_span, real, CMatrix,
    CVector, ONE, SPAN_TOL,
};
use crate::spectral::{self, SparseMatrix, TripletBuilder};

/// Default refusal threshold for the (pre-quotient) Fock dimension.
pub const DEFAULT_MAX_DIM: usize = 20_000;

/// Gram matrices this close to the identity are used as they are.
const SIMPLE_TOL: f64 = 1e-12;

static NEXT_CONTEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockOptions {
    pub max_dim: usize,
}

impl Default for FockOptions {
    fn default() -> Self {
        FockOptions {
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

#[derive(Debug, Clone)]
struct Factor {
    spec: AlgebraWithExpectation,
    module: GnsModule,
    /// `B`-coordinates of `⟨x_j, x_l⟩` for the `E°` basis.
    gram: Vec<Vec<CVector>>,
    /// Left action of each `B` basis element on `E°` coordinates.
    left_b: Vec<CMatrix>,
}

impl Factor {
    fn new(spec: AlgebraWithExpectation) -> Result<Self> {
        let module = GnsModule::build(&spec)?;
        let xs = module.centered_representatives();
        let gram = xs
            .iter()
            .map(|x| {
                xs.iter()
                    .map(|y| spec.apply_coords(&(x.adjoint() * y)).expect("closed under products"))
                    .collect()
            })
            .collect();
        let left_b = spec
            .subalgebra()
            .basis()
            .iter()
            .map(|b| CMatrix::from_fn(xs.len(), xs.len(), |l, j| module.scalar_inner(&xs[l], &(b * &xs[j]))))
            .collect();
        Ok(Factor {
            spec,
            module,
            gram,
            left_b,
        })
    }

    fn centered_dim(&self) -> usize {
        self.module.centered_dim()
    }

    /// Matrix of `x ↦ H(a x)` on `E°` coordinates.
    fn diagonal_matrix(&self, a: &CMatrix) -> CMatrix {
        let xs = self.module.centered_representatives();
        CMatrix::from_fn(xs.len(), xs.len(), |l, j| self.module.scalar_inner(&xs[l], &(a * &xs[j])))
    }
}

#[derive(Debug, Clone)]
struct Block {
    seq: Vec<i64>,
    offset: usize,
    dim: usize,
    tail: Option<usize>,
    coeff: CMatrix,
    proj: CMatrix,
    left_b: Vec<CMatrix>,
    simple: bool,
}

impl Block {
    fn level(&self) -> usize {
        self.seq.len()
    }

    fn head(&self) -> Option<i64> {
        self.seq.first().copied()
    }

    fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.dim
    }
}

/// Label of one basis vector of the truncated Fock space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FockBasisLabel {
    pub level: usize,
    pub sequence: Vec<i64>,
    /// Position inside the block of its index sequence.
    pub local: usize,
    /// `E°` basis choice per tensor slot, when no quotienting was needed.
    pub components: Option<Vec<usize>>,
    /// Basis vector of the `σ`-space, when no quotienting was needed.
    pub sigma_slot: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct FockContext {
    id: u64,
    base: MatrixStarAlgebra,
    sigma: CMatrix,
    factors: BTreeMap<i64, Factor>,
    max_level: usize,
    blocks: Vec<Block>,
    children: HashMap<(i64, usize), usize>,
    by_sequence: HashMap<Vec<i64>, usize>,
    level_ranges: Vec<Range<usize>>,
    labels: Vec<FockBasisLabel>,
    total_dim: usize,
}

/// Orthonormal basis (columns) of a `B`-invariant subspace on which the
/// identity representation of `B` stays faithful.
fn faithful_subspace(base: &MatrixStarAlgebra) -> CMatrix {
    let n = base.ambient_dim();
    let mut spanning = Vec::new();
    let mut last = CMatrix::identity(n, n);
    for j in 0..n {
        let e = CVector::from_fn(n, |i, _| if i == j { ONE } else { real(0.0) });
        for b in base.basis() {
            spanning.push(b * &e);
        }
        let onb = orthonormal_span(&spanning);
        let w = CMatrix::from_columns(&onb);
        let compressed: Vec<CMatrix> = base.basis().iter().map(|b| w.adjoint() * b * &w).collect();
        let k = compressed.len();
        let gram = CMatrix::from_fn(k, k, |p, q| hs_inner(&compressed[p], &compressed[q]));
        last = w;
        if numerical_rank(&hermitian_eigen(&gram).0) == base.dim() {
            break;
        }
    }
    last
}

/// Upper bound for the total dimension: tensor degeneracy is ignored.
pub fn estimate_dim(sigma_dim: usize, centered_dims: &[usize], max_level: usize) -> usize {
    let mut total = sigma_dim as u128;
    let mut per_head: Vec<u128> = centered_dims.iter().map(|&e| (e * sigma_dim) as u128).collect();
    for level in 1..=max_level {
        if level > 1 {
            let sum: u128 = per_head.iter().sum();
            per_head = per_head
                .iter()
                .zip(centered_dims)
                .map(|(&own, &e)| (e as u128).saturating_mul(sum - own))
                .collect();
        }
        total = total.saturating_add(per_head.iter().sum());
        if total > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    total as usize
}

impl FockContext {
    /// Builds the truncated Fock space over `factors` (index ↦ algebra) up to
    /// level `max_level`. All factors must share the same subalgebra `B`.
    pub fn build(
        factors: BTreeMap<i64, AlgebraWithExpectation>,
        max_level: usize,
        options: FockOptions,
    ) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::Configuration(format!(
                "a free product needs at least two factors, found {}",
                factors.len()
            )));
        }
        let (&first_index, first) = factors.iter().next().expect("nonempty");
        for (&i, spec) in &factors {
            if !spec.same_subalgebra(first) {
                return Err(Error::Configuration(format!(
                    "factor {i} has a different subalgebra B than factor {first_index}"
                )));
            }
        }
        let base = first.subalgebra().clone();
        let sigma = faithful_subspace(&base);
        let sigma_dim = sigma.ncols();

        let factors: BTreeMap<i64, Factor> = factors
            .into_iter()
            .map(|(i, spec)| Factor::new(spec).map(|f| (i, f)))
            .collect::<Result<_>>()?;
        let centered_dims: Vec<usize> = factors.values().map(Factor::centered_dim).collect();
        let estimate = estimate_dim(sigma_dim, &centered_dims, max_level);
        if estimate > options.max_dim {
            return Err(Error::Capacity {
                required: estimate,
                cap: options.max_dim,
            });
        }

        let root = Block {
            seq: Vec::new(),
            offset: 0,
            dim: sigma_dim,
            tail: None,
            coeff: CMatrix::identity(sigma_dim, sigma_dim),
            proj: CMatrix::identity(sigma_dim, sigma_dim),
            left_b: base.basis().iter().map(|b| sigma.adjoint() * b * &sigma).collect(),
            simple: true,
        };
        let mut ctx = FockContext {
            id: NEXT_CONTEXT_ID.fetch_add(1, Ordering::Relaxed),
            base,
            sigma,
            factors,
            max_level,
            blocks: vec![root],
            children: HashMap::new(),
            by_sequence: HashMap::new(),
            level_ranges: std::iter::once(0..sigma_dim).collect(),
            labels: Vec::new(),
            total_dim: sigma_dim,
        };
        ctx.by_sequence.insert(Vec::new(), 0);

        let mut previous = 0..1;
        for _level in 1..=max_level {
            let start_block = ctx.blocks.len();
            let start_offset = ctx.total_dim;
            let heads: Vec<i64> = ctx.factors.keys().copied().collect();
            for &head in &heads {
                for tail in previous.clone() {
                    let tail_block = &ctx.blocks[tail];
                    if tail_block.dim == 0 || tail_block.head() == Some(head) {
                        continue;
                    }
                    let block = ctx.child_block(head, tail);
                    let id = ctx.blocks.len();
                    ctx.children.insert((head, tail), id);
                    ctx.by_sequence.insert(block.seq.clone(), id);
                    ctx.total_dim += block.dim;
                    ctx.blocks.push(block);
                }
            }
            previous = start_block..ctx.blocks.len();
            ctx.level_ranges.push(start_offset..ctx.total_dim);
        }
        ctx.labels = ctx.make_labels();
        Ok(ctx)
    }

    /// Convenience constructor: one algebra copied at each index.
    pub fn build_copies(
        spec: &AlgebraWithExpectation,
        indices: impl IntoIterator<Item = i64>,
        max_level: usize,
        options: FockOptions,
    ) -> Result<Self> {
        let factors = indices.into_iter().map(|i| (i, spec.clone())).collect();
        Self::build(factors, max_level, options)
    }

    fn child_block(&self, head: i64, tail: usize) -> Block {
        let factor = &self.factors[&head];
        let rest = &self.blocks[tail];
        let e = factor.centered_dim();
        let dr = rest.dim;
        let f = e * dr;
        let mut gram = CMatrix::zeros(f, f);
        for j in 0..e {
            for l in 0..e {
                let inner = self.block_action(rest, &factor.gram[j][l]);
                gram.view_mut((j * dr, l * dr), (dr, dr)).copy_from(&inner);
            }
        }
        let simple = max_abs(&(&gram - CMatrix::identity(f, f))) <= SIMPLE_TOL;
        let (coeff, proj) = if simple {
            (CMatrix::identity(f, f), gram.clone())
        } else {
            let (values, vectors) = hermitian_eigen(&gram);
            let rank = numerical_rank(&values);
            let mut coeff = CMatrix::zeros(f, rank);
            for (t, value) in values.iter().take(rank).enumerate() {
                coeff.set_column(t, &(vectors.column(t) * real(1.0 / value.sqrt())));
            }
            let proj = coeff.adjoint() * &gram;
            (coeff, proj)
        };
        let left_b = factor
            .left_b
            .iter()
            .map(|l| &proj * kron_identity(l, dr) * &coeff)
            .collect();
        let mut seq = Vec::with_capacity(rest.seq.len() + 1);
        seq.push(head);
        seq.extend_from_slice(&rest.seq);
        Block {
            seq,
            offset: self.total_dim,
            dim: coeff.ncols(),
            tail: Some(tail),
            coeff,
            proj,
            left_b,
            simple: simple && rest.simple,
        }
    }

    /// Matrix of the left action of `b` (given by `B`-coordinates) on a block.
    fn block_action(&self, block: &Block, b_coords: &CVector) -> CMatrix {
        let mut out = CMatrix::zeros(block.dim, block.dim);
        for (l, z) in block.left_b.iter().zip(b_coords.iter()) {
            out += l * *z;
        }
        out
    }

    fn make_labels(&self) -> Vec<FockBasisLabel> {
        let mut labels = Vec::with_capacity(self.total_dim);
        for (id, block) in self.blocks.iter().enumerate() {
            for local in 0..block.dim {
                let decoded = self.decode(id, local);
                labels.push(FockBasisLabel {
                    level: block.level(),
                    sequence: block.seq.clone(),
                    local,
                    components: decoded.as_ref().map(|(c, _)| c.clone()),
                    sigma_slot: decoded.map(|(_, s)| s),
                });
            }
        }
        labels
    }

    fn decode(&self, id: usize, local: usize) -> Option<(Vec<usize>, usize)> {
        let block = &self.blocks[id];
        if !block.simple {
            return None;
        }
        match block.tail {
            None => Some((Vec::new(), local)),
            Some(tail) => {
                let dr = self.blocks[tail].dim;
                let (mut comps, sigma) = self.decode(tail, local % dr)?;
                comps.insert(0, local / dr);
                Some((comps, sigma))
            }
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn sigma_dim(&self) -> usize {
        self.sigma.ncols()
    }

    /// Isometry from the `σ`-space into the ambient space of `B`.
    pub fn sigma_embedding(&self) -> &CMatrix {
        &self.sigma
    }

    pub fn base(&self) -> &MatrixStarAlgebra {
        &self.base
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.factors.keys().copied()
    }

    pub fn contains_index(&self, i: i64) -> bool {
        self.factors.contains_key(&i)
    }

    pub fn factor_spec(&self, i: i64) -> Result<&AlgebraWithExpectation> {
        Ok(&self.factor(i)?.spec)
    }

    pub fn module(&self, i: i64) -> Result<&GnsModule> {
        Ok(&self.factor(i)?.module)
    }

    fn factor(&self, i: i64) -> Result<&Factor> {
        self.factors
            .get(&i)
            .ok_or_else(|| Error::Domain(format!("index {i} is not in the context window")))
    }

    pub fn labels(&self) -> &[FockBasisLabel] {
        &self.labels
    }

    /// Basis positions of level `m`.
    pub fn level_range(&self, m: usize) -> Result<Range<usize>> {
        self.level_ranges.get(m).cloned().ok_or(Error::Domain(format!(
            "level {m} exceeds truncation level {}",
            self.max_level
        )))
    }

    /// Basis positions of levels `0..=m`.
    pub fn levels_up_to(&self, m: usize) -> Result<Range<usize>> {
        Ok(0..self.level_range(m)?.end)
    }

    /// Basis positions of the block of an index sequence.
    pub fn block_range(&self, sequence: &[i64]) -> Option<Range<usize>> {
        self.by_sequence.get(sequence).map(|&id| self.blocks[id].range())
    }

    pub fn sequences(&self, level: usize) -> Vec<Vec<i64>> {
        self.blocks
            .iter()
            .filter(|b| b.level() == level)
            .map(|b| b.seq.clone())
            .collect()
    }

    fn operator(&self, tag: OpTag, matrix: SparseMatrix) -> FockOperator {
        FockOperator {
            context: self.id,
            tag,
            matrix,
        }
    }

    pub fn identity(&self) -> FockOperator {
        self.operator(OpTag::Identity, spectral::identity(self.total_dim))
    }

    pub fn zero(&self) -> FockOperator {
        self.operator(OpTag::Zero, spectral::zeros(self.total_dim, self.total_dim))
    }

    fn diagonal_projection(&self, tag: OpTag, keep: impl Fn(&Block) -> bool) -> FockOperator {
        let mut builder = TripletBuilder::new(self.total_dim, self.total_dim);
        for block in self.blocks.iter().filter(|b| keep(b)) {
            for p in block.range() {
                builder.push(p, p, ONE);
            }
        }
        self.operator(tag, builder.build())
    }

    /// `P_m`, the projection onto level `m`.
    pub fn proj_level(&self, m: usize) -> Result<FockOperator> {
        self.level_range(m)?;
        Ok(self.diagonal_projection(OpTag::Level(m), |b| b.level() == m))
    }

    /// `P_0 + ⋯ + P_m`.
    pub fn proj_levels_up_to(&self, m: usize) -> Result<FockOperator> {
        self.level_range(m)?;
        Ok(self.diagonal_projection(OpTag::LevelsUpTo(m), |b| b.level() <= m))
    }

    /// `Q_k`, the projection onto tensors whose first index is `k`.
    pub fn proj_first_index(&self, k: i64) -> Result<FockOperator> {
        self.factor(k)?;
        Ok(self.diagonal_projection(OpTag::FirstIndex(k), |b| b.head() == Some(k)))
    }

    /// `E°_k`-coordinates of a module vector, rejecting `B`-summand components.
    fn centered_vector(&self, k: i64, y: &ModuleVector) -> Result<CVector> {
        let module = &self.factor(k)?.module;
        if y.module_id() != module.id() {
            return Err(Error::Mismatch(format!("vector does not belong to the module of factor {k}")));
        }
        let b_part = module.b_component_norm(y)?;
        if b_part > SPAN_TOL * y.coords().norm().max(1.0) {
            return Err(Error::Domain(format!(
                "vector has a component {b_part:.3e} in the B summand of E_{k}"
            )));
        }
        Ok(y.coords().rows(module.b_dim(), module.centered_dim()).into_owned())
    }

    /// Block matrix of `u ↦ y ⊗ u` from `source` into the block `(k, source)`.
    fn creation_block(&self, target: &Block, source: &Block, y: &CVector) -> CMatrix {
        let ds = source.dim;
        let mut out = CMatrix::zeros(target.dim, ds);
        for (j, yj) in y.iter().enumerate() {
            out += target.proj.columns(j * ds, ds) * *yj;
        }
        out
    }

    fn creation(&self, k: i64, y: &CVector, builder: &mut TripletBuilder) {
        for (id, source) in self.blocks.iter().enumerate() {
            if source.head() == Some(k) || source.level() >= self.max_level {
                continue;
            }
            if let Some(&target) = self.children.get(&(k, id)) {
                let target = &self.blocks[target];
                builder.push_block(target.offset, source.offset, &self.creation_block(target, source, y));
            }
        }
    }

    /// `ψ_k(y)`: prepends `y ∈ E°_k` to tensors not starting with `k`.
    /// Creation out of the top level is dropped.
    pub fn op_psi(&self, k: i64, y: &ModuleVector) -> Result<FockOperator> {
        let coords = self.centered_vector(k, y)?;
        let mut builder = TripletBuilder::new(self.total_dim, self.total_dim);
        self.creation(k, &coords, &mut builder);
        Ok(self.operator(OpTag::Psi(k), builder.build()))
    }

    /// `ψ_k(y)*`, assembled from the annihilation formula
    /// `x_1 ⊗ x_2 ⊗ ⋯ ↦ ⟨y, x_1⟩ x_2 ⊗ ⋯` rather than by transposition.
    pub fn op_psi_adjoint(&self, k: i64, y: &ModuleVector) -> Result<FockOperator> {
        let coords = self.centered_vector(k, y)?;
        let factor = self.factor(k)?;
        let e = factor.centered_dim();
        let inner: Vec<CVector> = (0..e)
            .map(|j| {
                let mut acc = CVector::zeros(self.base.dim());
                for (l, yl) in coords.iter().enumerate() {
                    acc += &factor.gram[l][j] * yl.conj();
                }
                acc
            })
            .collect();
        let mut builder = TripletBuilder::new(self.total_dim, self.total_dim);
        self.annihilation(k, &inner, &mut builder);
        Ok(self.operator(OpTag::PsiAdjoint(k), builder.build()))
    }

    /// For blocks `(k, rest)`: `x_j ⊗ u ↦ π_rest(β_j) u`, with `β_j` given by
    /// `B`-coordinates per `E°_k` basis vector.
    fn annihilation(&self, k: i64, inner: &[CVector], builder: &mut TripletBuilder) {
        for source in self.blocks.iter().filter(|b| b.head() == Some(k)) {
            let rest = &self.blocks[source.tail.expect("level >= 1")];
            let dr = rest.dim;
            let mut row = CMatrix::zeros(dr, inner.len() * dr);
            for (j, b) in inner.iter().enumerate() {
                row.columns_mut(j * dr, dr).copy_from(&self.block_action(rest, b));
            }
            builder.push_block(rest.offset, source.offset, &(row * &source.coeff));
        }
    }

    fn diagonal(&self, k: i64, r: &CMatrix, builder: &mut TripletBuilder) {
        for block in self.blocks.iter().filter(|b| b.head() == Some(k)) {
            let dr = self.blocks[block.tail.expect("level >= 1")].dim;
            let m = &block.proj * kron_identity(r, dr) * &block.coeff;
            builder.push_block(block.offset, block.offset, &m);
        }
    }

    /// `ρ_k(a)`: `x_1 ⊗ x_2 ⊗ ⋯ ↦ H_k(a x_1) ⊗ x_2 ⊗ ⋯` on tensors starting with `k`.
    pub fn op_rho(&self, k: i64, a: &CMatrix) -> Result<FockOperator> {
        let factor = self.factor(k)?;
        factor.spec.algebra().coords(a)?;
        let mut builder = TripletBuilder::new(self.total_dim, self.total_dim);
        self.diagonal(k, &factor.diagonal_matrix(a), &mut builder);
        Ok(self.operator(OpTag::Rho(k), builder.build()))
    }

    /// `λ_a^i` from its defining two-case action.
    pub fn op_lambda(&self, i: i64, a: &CMatrix) -> Result<FockOperator> {
        let factor = self.factor(i)?;
        let phi_a = factor.spec.apply_coords(a)?;
        let h = factor.module.centered_coords(a);
        let xs = factor.module.centered_representatives();
        let inner: Vec<CVector> = xs
            .iter()
            .map(|x| factor.spec.apply_coords(&(a * x)).expect("closed under products"))
            .collect();
        let mut builder = TripletBuilder::new(self.total_dim, self.total_dim);
        for block in self.blocks.iter().filter(|b| b.head() != Some(i)) {
            builder.push_block(block.offset, block.offset, &self.block_action(block, &phi_a));
        }
        self.creation(i, &h, &mut builder);
        self.diagonal(i, &factor.diagonal_matrix(a), &mut builder);
        self.annihilation(i, &inner, &mut builder);
        Ok(self.operator(OpTag::Lambda(i), builder.build()))
    }

    /// The left action of `b ∈ B`, equal to `λ_b^i` for every `i`.
    pub fn op_left_b(&self, b: &CMatrix) -> Result<FockOperator> {
        let coords = self.base.coords(b)?;
        let mut builder = TripletBuilder::new(self.total_dim, self.total_dim);
        for block in &self.blocks {
            builder.push_block(block.offset, block.offset, &self.block_action(block, &coords));
        }
        Ok(self.operator(OpTag::LeftB, builder.build()))
    }

    /// `â` as a vector of the module of factor `letter.owner()`.
    pub fn hat(&self, letter: &CenteredElement) -> Result<ModuleVector> {
        self.module(letter.owner())?.hat(letter.element())
    }

    /// `â† = (a*)^`.
    pub fn hat_dagger(&self, letter: &CenteredElement) -> Result<ModuleVector> {
        self.module(letter.owner())?.hat(&letter.element().adjoint())
    }

    /// `ψ(â)` for a letter of its owner's factor.
    pub fn psi_hat(&self, letter: &CenteredElement) -> Result<FockOperator> {
        self.op_psi(letter.owner(), &self.hat(letter)?)
    }

    /// `ψ(â†)*`.
    pub fn psi_dagger_adjoint(&self, letter: &CenteredElement) -> Result<FockOperator> {
        self.op_psi_adjoint(letter.owner(), &self.hat_dagger(letter)?)
    }

    pub fn lambda(&self, letter: &CenteredElement) -> Result<FockOperator> {
        self.op_lambda(letter.owner(), letter.element())
    }

    pub fn rho(&self, letter: &CenteredElement) -> Result<FockOperator> {
        self.op_rho(letter.owner(), letter.element())
    }

    /// The `B`-valued compression `⟨X 1_B, 1_B⟩` read back through `σ`.
    pub fn phi_state(&self, x: &FockOperator) -> Result<CMatrix> {
        self.check(x)?;
        let d = self.sigma_dim();
        let compressed = spectral::to_dense(&spectral::submatrix(&x.matrix, 0..d, 0..d));
        let images = &self.blocks[0].left_b;
        let k = images.len();
        let gram = CMatrix::from_fn(k, k, |p, q| hs_inner(&images[p], &images[q]));
        let rhs = CVector::from_iterator(k, images.iter().map(|m| hs_inner(m, &compressed)));
        let coords = gram
            .try_inverse()
            .ok_or_else(|| Error::Structural("σ is not faithful on B".into()))?
            * rhs;
        Ok(self.base.element(&coords))
    }

    /// `σ(b)` on the level-0 block.
    pub fn sigma(&self, b: &CMatrix) -> Result<CMatrix> {
        let coords = self.base.coords(b)?;
        Ok(self.block_action(&self.blocks[0], &coords))
    }

    pub fn check(&self, x: &FockOperator) -> Result<()> {
        if x.context != self.id {
            return Err(Error::Mismatch(format!(
                "operator of context {} used with context {}",
                x.context, self.id
            )));
        }
        Ok(())
    }

    pub fn summary(&self) -> FockSummary {
        FockSummary {
            total_dim: self.total_dim,
            max_level: self.max_level,
            sigma_dim: self.sigma_dim(),
            indices: self.indices().collect(),
            levels: (0..=self.max_level)
                .map(|m| {
                    let range = &self.level_ranges[m];
                    LevelSummary {
                        level: m,
                        dim: range.len(),
                        sequences: self.sequences(m),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub dim: usize,
    pub sequences: Vec<Vec<i64>>,
}

/// JSON export of a context: dimension per level and its index sequences.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FockSummary {
    pub total_dim: usize,
    pub max_level: usize,
    pub sigma_dim: usize,
    pub indices: Vec<i64>,
    pub levels: Vec<LevelSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpTag {
    Identity,
    Zero,
    Lambda(i64),
    Psi(i64),
    PsiAdjoint(i64),
    Rho(i64),
    LeftB,
    Level(usize),
    LevelsUpTo(usize),
    FirstIndex(i64),
    Word,
    Family,
    Product,
    Sum,
    Scaled,
    Adjoint(Box<OpTag>),
}

impl fmt::Display for OpTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpTag::Identity => write!(f, "1"),
            OpTag::Zero => write!(f, "0"),
            OpTag::Lambda(i) => write!(f, "lambda[{i}]"),
            OpTag::Psi(i) => write!(f, "psi[{i}]"),
            OpTag::PsiAdjoint(i) => write!(f, "psi[{i}]*"),
            OpTag::Rho(i) => write!(f, "rho[{i}]"),
            OpTag::LeftB => write!(f, "b"),
            OpTag::Level(m) => write!(f, "P[{m}]"),
            OpTag::LevelsUpTo(m) => write!(f, "P[<={m}]"),
            OpTag::FirstIndex(k) => write!(f, "Q[{k}]"),
            OpTag::Word => write!(f, "word"),
            OpTag::Family => write!(f, "family"),
            OpTag::Product => write!(f, "product"),
            OpTag::Sum => write!(f, "sum"),
            OpTag::Scaled => write!(f, "scaled"),
            OpTag::Adjoint(inner) => write!(f, "({inner})*"),
        }
    }
}

/// A sparse operator on the truncated Fock space of one context.
#[derive(Debug, Clone)]
pub struct FockOperator {
    context: u64,
    tag: OpTag,
    matrix: SparseMatrix,
}

impl FockOperator {
    pub fn context_id(&self) -> u64 {
        self.context
    }

    pub fn tag(&self) -> &OpTag {
        &self.tag
    }

    pub fn with_tag(mut self, tag: OpTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn same_context(&self, other: &FockOperator) -> Result<()> {
        if self.context != other.context {
            return Err(Error::Mismatch(format!(
                "operators of contexts {} and {} cannot be combined",
                self.context, other.context
            )));
        }
        Ok(())
    }

    /// `self · other`.
    pub fn product(&self, other: &FockOperator) -> Result<FockOperator> {
        self.same_context(other)?;
        Ok(FockOperator {
            context: self.context,
            tag: OpTag::Product,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn sum(&self, other: &FockOperator) -> Result<FockOperator> {
        self.same_context(other)?;
        Ok(FockOperator {
            context: self.context,
            tag: OpTag::Sum,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn difference(&self, other: &FockOperator) -> Result<FockOperator> {
        self.same_context(other)?;
        Ok(FockOperator {
            context: self.context,
            tag: OpTag::Sum,
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn scaled(&self, factor: crate::linalg::C64) -> FockOperator {
        FockOperator {
            context: self.context,
            tag: OpTag::Scaled,
            matrix: spectral::scale(&self.matrix, factor),
        }
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            context: self.context,
            tag: OpTag::Adjoint(Box::new(self.tag.clone())),
            matrix: spectral::adjoint(&self.matrix),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        spectral::to_dense(&self.matrix)
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    /// Frobenius norm, an upper bound for the operator norm.
    pub fn frobenius(&self) -> f64 {
        spectral::frobenius(&self.matrix)
    }

    pub fn operator_norm(&self) -> f64 {
        spectral::operator_norm(&self.matrix)
    }

    /// Nonzero entries as `(row, col, re, im)`, row-major.
    pub fn coordinate_list(&self) -> Vec<(usize, usize, f64, f64)> {
        let mut out = Vec::with_capacity(self.matrix.nnz());
        for (i, row) in self.matrix.row_iter().enumerate() {
            for (&j, z) in row.col_indices().iter().zip(row.values()) {
                out.push((i, j, z.re, z.im));
            }
        }
        out
    }

    /// Coordinate list as CSV with header `row,col,re,im`.
    pub fn to_coordinate_csv(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        for (i, j, re, im) in self.coordinate_list() {
            out.push_str(&format!("{i},{j},{re},{im}\n"));
        }
        out
    }
}
