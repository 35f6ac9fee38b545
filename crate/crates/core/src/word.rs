//! Words of centered letters, their block decomposition into creation,
//! diagonal and annihilation operators, and the Haagerup-type norm bounds.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::CenteredElement;
use crate::error::{Error, Result};
use crate::fock::{FockContext, FockOperator, OpTag};
use crate::linalg::{CVector, ONE};
use crate::spectral::{self, NormMethod};

/// Relative tolerance for the block decomposition identity.
pub const BIGSUM_TOL: f64 = 1e-8;

/// `w = a_1 ⋯ a_n` with `a_i` centered in `A_{k(i)}` and `k(i) ≠ k(i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    letters: Vec<CenteredElement>,
}

impl Word {
    pub fn new(letters: Vec<CenteredElement>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Domain("a word needs at least one letter".into()));
        }
        for (i, pair) in letters.windows(2).enumerate() {
            if pair[0].owner() == pair[1].owner() {
                return Err(Error::Domain(format!(
                    "letters {i} and {} both belong to A_{}",
                    i + 1,
                    pair[0].owner()
                )));
            }
        }
        Ok(Word { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letters(&self) -> &[CenteredElement] {
        &self.letters
    }

    pub fn indices(&self) -> Vec<i64> {
        self.letters.iter().map(CenteredElement::owner).collect()
    }

    pub fn first_index(&self) -> i64 {
        self.letters[0].owner()
    }

    pub fn last_index(&self) -> i64 {
        self.letters[self.letters.len() - 1].owner()
    }

    /// `w* = a_n* ⋯ a_1*`.
    pub fn adjoint(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(CenteredElement::adjoint).collect(),
        }
    }

    /// All indices moved by `k`, letters unchanged.
    pub fn shifted(&self, k: i64) -> Word {
        Word {
            letters: self.letters.iter().map(|a| a.with_owner(a.owner() + k)).collect(),
        }
    }

    /// `Π ‖a_i‖` with ambient operator norms.
    pub fn norm_product(&self) -> f64 {
        self.letters.iter().map(CenteredElement::norm).product()
    }
}

/// `f = Σ_k a_{k,1} ⋯ a_{k,n}`, all words of the same length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordFamily {
    words: Vec<Word>,
}

impl WordFamily {
    pub fn new(words: Vec<Word>) -> Result<Self> {
        if let Some(first) = words.first() {
            if let Some((i, w)) = words.iter().enumerate().find(|(_, w)| w.len() != first.len()) {
                return Err(Error::Domain(format!(
                    "word {i} has length {} but word 0 has length {}",
                    w.len(),
                    first.len()
                )));
            }
        }
        Ok(WordFamily { words })
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    /// Common word length, zero for the empty family.
    pub fn word_length(&self) -> usize {
        self.words.first().map_or(0, Word::len)
    }

    /// Distinct words must differ both in their first and in their last index.
    pub fn check_separation(&self) -> Result<()> {
        for (i, w) in self.words.iter().enumerate() {
            for (j, v) in self.words.iter().enumerate().skip(i + 1) {
                if w.first_index() == v.first_index() {
                    return Err(Error::Hypothesis {
                        first: i,
                        second: j,
                        end: "first",
                        index: w.first_index(),
                    });
                }
                if w.last_index() == v.last_index() {
                    return Err(Error::Hypothesis {
                        first: i,
                        second: j,
                        end: "last",
                        index: w.last_index(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `γ = (Σ_k Π_i ‖a_{k,i}‖²)^{1/2}`.
    pub fn gamma(&self) -> f64 {
        self.words.iter().map(|w| w.norm_product().powi(2)).sum::<f64>().sqrt()
    }
}

/// `λ_{a_1} ⋯ λ_{a_n}`.
pub fn word_operator(ctx: &FockContext, w: &Word) -> Result<FockOperator> {
    let mut out = ctx.lambda(&w.letters[0])?;
    for letter in &w.letters[1..] {
        out = out.product(&ctx.lambda(letter)?)?;
    }
    Ok(out.with_tag(OpTag::Word))
}

pub fn family_operator(ctx: &FockContext, family: &WordFamily) -> Result<FockOperator> {
    let mut out = ctx.zero();
    for w in family.words() {
        out = out.sum(&word_operator(ctx, w)?)?;
    }
    Ok(out.with_tag(OpTag::Family))
}

fn require_room(ctx: &FockContext, m: usize, n: usize) -> Result<()> {
    if m + n > ctx.max_level() {
        return Err(Error::Truncation {
            required: m + n,
            max_level: ctx.max_level(),
        });
    }
    Ok(())
}

fn chain(ctx: &FockContext, factors: Vec<FockOperator>) -> Result<FockOperator> {
    let mut iter = factors.into_iter();
    let mut out = iter.next().unwrap_or_else(|| ctx.identity());
    for f in iter {
        out = out.product(&f)?;
    }
    Ok(out)
}

/// `P_r w P_m` rebuilt from creation, diagonal and annihilation operators
/// only. Requires `m + n ≤ M` so that truncation cannot interfere.
pub fn decompose_block(ctx: &FockContext, w: &Word, m: usize, r: usize) -> Result<FockOperator> {
    let n = w.len();
    require_room(ctx, m, n)?;
    if r > m + n || r < m.abs_diff(n) {
        return Ok(ctx.zero());
    }
    let d = m + n - r;
    let letters = w.letters();
    let mut factors = vec![ctx.proj_level(r)?];
    if d.is_multiple_of(2) {
        let s = d / 2;
        for a in &letters[..n - s] {
            factors.push(ctx.psi_hat(a)?);
        }
        for a in &letters[n - s..] {
            factors.push(ctx.psi_dagger_adjoint(a)?);
        }
    } else {
        let s = d.div_ceil(2);
        for a in &letters[..n - s] {
            factors.push(ctx.psi_hat(a)?);
        }
        factors.push(ctx.rho(&letters[n - s])?);
        for a in &letters[n - s + 1..] {
            factors.push(ctx.psi_dagger_adjoint(a)?);
        }
    }
    factors.push(ctx.proj_level(m)?);
    chain(ctx, factors)
}

#[derive(Debug, Clone, Serialize)]
pub struct BigsumReport {
    pub m: usize,
    pub word_length: usize,
    /// Frobenius norm of `w P_m − Σ_r P_r w P_m` (decomposed), an upper bound
    /// for the operator-norm residual.
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Checks `w P_m = Σ_r (decomposed block r)` as a matrix identity.
pub fn verify_bigsum(ctx: &FockContext, w: &Word, m: usize) -> Result<BigsumReport> {
    let n = w.len();
    require_room(ctx, m, n)?;
    let lhs = word_operator(ctx, w)?.product(&ctx.proj_level(m)?)?;
    let mut rhs = ctx.zero();
    for r in m.abs_diff(n)..=m + n {
        rhs = rhs.sum(&decompose_block(ctx, w, m, r)?)?;
    }
    let residual = lhs.difference(&rhs)?.frobenius();
    let threshold = BIGSUM_TOL * w.norm_product();
    Ok(BigsumReport {
        m,
        word_length: n,
        residual,
        threshold,
        passed: residual < threshold,
    })
}

/// `(2n+1) γ`; the family must satisfy the separation hypothesis.
pub fn haagerup_upper(family: &WordFamily) -> Result<f64> {
    family.check_separation()?;
    Ok((2 * family.word_length() + 1) as f64 * family.gamma())
}

#[derive(Debug, Clone)]
pub struct NormReport {
    /// Certified lower bound for the untruncated operator norm.
    pub lower: f64,
    pub max_level: usize,
    pub domain_dim: usize,
    pub method: NormMethod,
    /// Unit vector of the restricted domain attaining `lower`.
    pub witness: CVector,
    pub seconds: f64,
}

impl NormReport {
    /// Basis position carrying the largest witness coefficient.
    pub fn witness_peak(&self) -> usize {
        self.witness
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map_or(0, |(i, _)| i)
    }
}

/// Largest singular value of `X` on `P_{≤ M−spread}`, where `spread` bounds
/// how many levels `X` can climb. On that domain the truncated action is exact.
pub fn norm_lower(ctx: &FockContext, x: &FockOperator, spread: usize, seed: u64) -> Result<NormReport> {
    ctx.check(x)?;
    if spread > ctx.max_level() {
        return Err(Error::Truncation {
            required: spread,
            max_level: ctx.max_level(),
        });
    }
    let start = Instant::now();
    let domain = ctx.levels_up_to(ctx.max_level() - spread)?;
    let restricted = spectral::submatrix(x.matrix(), 0..x.dim(), domain.clone());
    let est = spectral::top_singular(&restricted, seed);
    let mut witness = CVector::zeros(x.dim());
    witness.rows_mut(domain.start, domain.len()).copy_from(&est.vector);
    witness /= ONE * witness.norm().max(f64::MIN_POSITIVE);
    Ok(NormReport {
        lower: est.value,
        max_level: ctx.max_level(),
        domain_dim: domain.len(),
        method: est.method,
        witness,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `‖P_r X P_m‖` for `m ≤ M − spread`.
pub fn block_norm(ctx: &FockContext, x: &FockOperator, r: usize, m: usize, spread: usize, seed: u64) -> Result<f64> {
    ctx.check(x)?;
    require_room(ctx, m, spread)?;
    let block = spectral::submatrix(x.matrix(), ctx.level_range(r)?, ctx.level_range(m)?);
    Ok(spectral::top_singular(&block, seed).value)
}

/// A random centered letter of `A_index`.
pub fn random_letter(ctx: &FockContext, index: i64, rng: &mut ChaCha8Rng) -> Result<CenteredElement> {
    let spec = ctx.factor_spec(index)?;
    let a = spec.algebra().random_element(rng);
    spec.center(index, &a)
}

/// A random word of length `n` whose letters are drawn from `ctx`.
pub fn random_word(ctx: &FockContext, n: usize, rng: &mut ChaCha8Rng) -> Result<Word> {
    let indices: Vec<i64> = ctx.indices().collect();
    let mut letters = Vec::with_capacity(n);
    let mut previous = None;
    for _ in 0..n {
        let choices: Vec<i64> = indices.iter().copied().filter(|&i| Some(i) != previous).collect();
        let i = choices[rng.random_range(0..choices.len())];
        letters.push(random_letter(ctx, i, rng)?);
        previous = Some(i);
    }
    Word::new(letters)
}

const FAMILY_ATTEMPTS: usize = 1000;

/// A random family of `size` words of length `n` meeting the separation
/// hypothesis: first indices are distinct by construction, and each word is
/// redrawn until its last index is unused.
pub fn random_family(ctx: &FockContext, n: usize, size: usize, rng: &mut ChaCha8Rng) -> Result<WordFamily> {
    let indices: Vec<i64> = ctx.indices().collect();
    let refuse = || {
        Error::Configuration(format!(
            "cannot draw {size} separated words of length {n} over {} indices",
            indices.len()
        ))
    };
    if size > indices.len() {
        return Err(refuse());
    }
    let mut firsts = indices.clone();
    firsts.shuffle(rng);
    let mut used_lasts = Vec::with_capacity(size);
    let mut sequences = Vec::with_capacity(size);
    for &first in &firsts[..size] {
        let mut found = None;
        for _ in 0..FAMILY_ATTEMPTS {
            let mut seq = vec![first];
            while seq.len() < n {
                let prev = seq[seq.len() - 1];
                let choices: Vec<i64> = indices.iter().copied().filter(|&j| j != prev).collect();
                seq.push(choices[rng.random_range(0..choices.len())]);
            }
            if !used_lasts.contains(&seq[n - 1]) {
                found = Some(seq);
                break;
            }
        }
        let seq = found.ok_or_else(refuse)?;
        used_lasts.push(seq[n - 1]);
        sequences.push(seq);
    }
    let words = sequences
        .iter()
        .map(|seq| Word::new(seq.iter().map(|&i| random_letter(ctx, i, rng)).collect::<Result<_>>()?))
        .collect::<Result<_>>()?;
    WordFamily::new(words)
}
