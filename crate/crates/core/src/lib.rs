//! Numerical models of reduced amalgamated free products.
//!
//! Finite-dimensional algebras with conditional expectations, their GNS
//! modules, truncated amalgamated Fock spaces with the creation, annihilation
//! and diagonal operators acting on them, word decompositions, Haagerup-type
//! norm bounds, free-shift ergodic averages, and the free group case.

pub mod algebra;
pub mod ergodic;
pub mod error;
pub mod fock;
pub mod free_group;
pub mod gns;
pub mod linalg;
pub mod spectral;
pub mod word;

pub use algebra::{AlgebraConfig, AlgebraSpecJson, AlgebraWithExpectation, CenteredElement, MatrixStarAlgebra, ValidationReport};
pub use ergodic::{CesaroReport, DecayPoint, ShiftExperiment};
pub use error::{Error, Result};
pub use fock::{FockBasisLabel, FockContext, FockOperator, FockOptions, FockSummary, OpTag};
pub use free_group::{BallBasis, GroupFunction, GroupNormReport, ReducedWord};
pub use gns::{GnsModule, ModuleVector};
pub use linalg::{CMatrix, CVector, C64, DEFAULT_SEED};
pub use spectral::{NormMethod, SingularEstimate, SparseMatrix};
pub use word::{NormReport, Word, WordFamily};
