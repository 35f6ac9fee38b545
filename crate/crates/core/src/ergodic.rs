//! The free shift `λ_a^i ↦ λ_a^{i+1}`, its ergodic averages and the Cesàro
//! expectation onto `B`.
//!
//! Only the finite window of indices touched by the shifted words is ever
//! instantiated.

use serde::Serialize;

use crate::algebra::AlgebraWithExpectation;
use crate::error::{Error, Result};
use crate::fock::{FockContext, FockOperator, FockOptions};
use crate::linalg::{real, CMatrix, C64};
use crate::spectral::{self, NormMethod};
use crate::word::{family_operator, norm_lower, Word, WordFamily};

pub fn shift_word(w: &Word, k: i64) -> Word {
    w.shifted(k)
}

/// `{α^k(w)}_{k<n}`.
pub fn average_family(w: &Word, n: usize) -> Result<WordFamily> {
    if n == 0 {
        return Err(Error::Domain("an ergodic average needs n ≥ 1".into()));
    }
    let family = WordFamily::new((0..n as i64).map(|k| w.shifted(k)).collect())?;
    debug_assert!(family.check_separation().is_ok());
    Ok(family)
}

/// `(2p+1) n^{-1/2} Π‖a_i‖`.
pub fn decay_bound(w: &Word, n: usize) -> f64 {
    (2 * w.len() + 1) as f64 / (n as f64).sqrt() * w.norm_product()
}

/// Smallest and largest index touched by `α^k(w)` for `k < n_max`.
pub fn window(words: &[&Word], n_max: usize) -> Option<(i64, i64)> {
    let lo = words.iter().flat_map(|w| w.indices()).min()?;
    let hi = words.iter().flat_map(|w| w.indices()).max()?;
    Some((lo, hi + n_max.max(1) as i64 - 1))
}

/// One algebra copied over the window of `words` shifted up to `n_max − 1` times.
pub fn window_context(
    algebra: &AlgebraWithExpectation,
    words: &[&Word],
    n_max: usize,
    max_level: usize,
    options: FockOptions,
) -> Result<FockContext> {
    let (lo, hi) = window(words, n_max).ok_or(Error::Configuration("no words to shift".into()))?;
    // a window of one index is still a free product of two copies
    let hi = hi.max(lo + 1);
    FockContext::build_copies(algebra, lo..=hi, max_level, options).map_err(|e| match e {
        Error::Capacity { required, cap } => Error::Configuration(format!(
            "window {lo}..={hi} at truncation level {max_level} needs dimension {required} above the cap {cap}; \
             reduce n_max or the truncation level"
        )),
        other => other,
    })
}

#[derive(Debug, Clone)]
pub struct ShiftExperiment {
    pub algebra: AlgebraWithExpectation,
    pub prototype: Word,
    pub n_max: usize,
    pub max_level: usize,
}

impl ShiftExperiment {
    pub fn new(algebra: AlgebraWithExpectation, prototype: Word, n_max: usize, max_level: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Configuration("n_max must be positive".into()));
        }
        if max_level < prototype.len() {
            return Err(Error::Configuration(format!(
                "truncation level {max_level} is below the word length {}",
                prototype.len()
            )));
        }
        Ok(ShiftExperiment {
            algebra,
            prototype,
            n_max,
            max_level,
        })
    }

    pub fn context(&self, options: FockOptions) -> Result<FockContext> {
        window_context(&self.algebra, &[&self.prototype], self.n_max, self.max_level, options)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayPoint {
    pub n: usize,
    /// Certified lower bound for `‖(1/n) Σ_{k<n} α^k(w)‖`.
    pub lower: f64,
    /// Norm of the average restricted to the level-0 summand.
    pub ell2_vacuum: f64,
    pub paper_bound: f64,
    pub ratio: f64,
    pub domain_dim: usize,
    pub method: NormMethod,
    pub seconds: f64,
}

impl DecayPoint {
    pub fn within_bound(&self) -> bool {
        self.lower <= self.paper_bound * (1.0 + 1e-12) && self.ell2_vacuum <= self.lower * (1.0 + 1e-12) + 1e-15
    }
}

/// `(1/n) Σ_{k<n} α^k(w)` on `ctx`.
pub fn average_operator(ctx: &FockContext, w: &Word, n: usize) -> Result<FockOperator> {
    Ok(family_operator(ctx, &average_family(w, n)?)?.scaled(real(1.0 / n as f64)))
}

fn vacuum_norm(ctx: &FockContext, x: &FockOperator, seed: u64) -> Result<f64> {
    let level0 = ctx.level_range(0)?;
    let block = spectral::submatrix(x.matrix(), 0..x.dim(), level0);
    Ok(spectral::top_singular(&block, seed).value)
}

pub fn decay_point(ctx: &FockContext, w: &Word, n: usize, seed: u64) -> Result<DecayPoint> {
    let x = average_operator(ctx, w, n)?;
    let report = norm_lower(ctx, &x, w.len(), seed)?;
    let paper_bound = decay_bound(w, n);
    Ok(DecayPoint {
        n,
        lower: report.lower,
        ell2_vacuum: vacuum_norm(ctx, &x, seed)?,
        paper_bound,
        ratio: report.lower / paper_bound,
        domain_dim: report.domain_dim,
        method: report.method,
        seconds: report.seconds,
    })
}

pub fn decay_curve(exp: &ShiftExperiment, options: FockOptions, seed: u64) -> Result<Vec<DecayPoint>> {
    let ctx = exp.context(options)?;
    (1..=exp.n_max).map(|n| decay_point(&ctx, &exp.prototype, n, seed)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CesaroPoint {
    pub n: usize,
    /// Certified lower bound for `‖(1/n) Σ α^k(a) − φ(a)‖`.
    pub deviation_lower: f64,
    /// `Σ_j |c_j| (2p_j+1) n^{-1/2} Π‖a_{j,i}‖`.
    pub upper_envelope: f64,
}

#[derive(Debug, Clone)]
pub struct CesaroReport {
    /// The `B`-valued limit `φ(a)`, read off the `n`-th average.
    pub value: CMatrix,
    pub trace: Vec<CesaroPoint>,
}

/// Averages `a = b + Σ_j c_j w_j` term by term. `B` is fixed pointwise by the
/// shift, so the `b` part passes through unchanged; each word contributes its
/// level-0 compression, which vanishes by freeness.
pub fn cesaro_expectation(
    ctx: &FockContext,
    b: &CMatrix,
    words: &[(C64, Word)],
    n: usize,
    seed: u64,
) -> Result<CesaroReport> {
    ctx.base().coords(b)?;
    if n == 0 {
        return Err(Error::Domain("an ergodic average needs n ≥ 1".into()));
    }
    let spread = words.iter().map(|(_, w)| w.len()).max().unwrap_or(0);
    let mut value = b.clone();
    let mut trace = Vec::with_capacity(n);
    let mut deviation = ctx.zero();
    for k in 1..=n {
        deviation = ctx.zero();
        let mut envelope = 0.0;
        for (coeff, w) in words {
            deviation = deviation.sum(&average_operator(ctx, w, k)?.scaled(*coeff))?;
            envelope += coeff.norm() * decay_bound(w, k);
        }
        let deviation_lower = if words.is_empty() {
            0.0
        } else {
            norm_lower(ctx, &deviation, spread, seed)?.lower
        };
        trace.push(CesaroPoint {
            n: k,
            deviation_lower,
            upper_envelope: envelope,
        });
    }
    if !words.is_empty() {
        value += ctx.phi_state(&deviation)?;
    }
    Ok(CesaroReport { value, trace })
}
