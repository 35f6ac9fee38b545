//! The reduced group C*-algebra of the free group on generators `g_i`,
//! `i ∈ ℤ`, through Cayley-ball truncations of the left regular
//! representation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{real, CVector, C64, ONE, ZERO};
use crate::spectral::{self, NormMethod, SparseMatrix, TripletBuilder};

/// Default cap on the number of words in a Cayley ball.
pub const DEFAULT_BALL_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: i64,
    /// `+1` or `−1`.
    pub exponent: i8,
}

impl Letter {
    pub fn new(generator: i64, exponent: i8) -> Result<Self> {
        if exponent != 1 && exponent != -1 {
            return Err(Error::Domain(format!("exponent {exponent} is not ±1")));
        }
        Ok(Letter { generator, exponent })
    }

    pub fn inverse(self) -> Letter {
        Letter {
            generator: self.generator,
            exponent: -self.exponent,
        }
    }
}

/// A freely reduced word; the empty word is the identity `e`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitClass {
    Fixed,
    Infinite,
}

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord::default()
    }

    pub fn generator(i: i64) -> Self {
        ReducedWord {
            letters: vec![Letter { generator: i, exponent: 1 }],
        }
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut stack: Vec<Letter> = Vec::new();
        for l in letters {
            if stack.last() == Some(&l.inverse()) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        ReducedWord { letters: stack }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn inverse(&self) -> Self {
        ReducedWord {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn mul(&self, other: &ReducedWord) -> Self {
        ReducedWord::reduce(self.letters.iter().chain(&other.letters).copied())
    }

    /// `β^k`, the generator shift `g_i ↦ g_{i+k}`.
    pub fn shifted(&self, k: i64) -> Self {
        ReducedWord {
            letters: self
                .letters
                .iter()
                .map(|l| Letter {
                    generator: l.generator + k,
                    exponent: l.exponent,
                })
                .collect(),
        }
    }

    pub fn generators(&self) -> BTreeSet<i64> {
        self.letters.iter().map(|l| l.generator).collect()
    }

    /// Shift orbits are singletons only for `e`; every generator moves.
    pub fn orbit_class(&self) -> OrbitClass {
        if self.is_identity() {
            OrbitClass::Fixed
        } else {
            OrbitClass::Infinite
        }
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "g{}", l.generator)?;
            if l.exponent < 0 {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

impl FromStr for ReducedWord {
    type Err = Error;

    /// Whitespace-separated letters `g<i>` or `g<i>^-1`; `e` or an empty string is the identity.
    fn from_str(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for token in s.split_whitespace() {
            if token == "e" {
                continue;
            }
            let body = token
                .strip_prefix('g')
                .ok_or_else(|| Error::Parse(format!("letter `{token}` does not start with `g`")))?;
            let (index, exponent) = match body.split_once('^') {
                Some((index, "-1")) => (index, -1),
                Some((index, "1")) => (index, 1),
                Some((_, other)) => return Err(Error::Parse(format!("unsupported exponent `{other}` in `{token}`"))),
                None => (body, 1),
            };
            let generator = index
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad generator index in `{token}`")))?;
            letters.push(Letter { generator, exponent });
        }
        Ok(ReducedWord::reduce(letters))
    }
}

/// A finitely supported function on the free group.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupFunction {
    coeffs: BTreeMap<ReducedWord, C64>,
}

impl GroupFunction {
    pub fn zero() -> Self {
        GroupFunction::default()
    }

    pub fn delta(h: ReducedWord) -> Self {
        GroupFunction::from_terms([(h, ONE)])
    }

    /// Sums repeated words; exact zeros are dropped.
    pub fn from_terms(terms: impl IntoIterator<Item = (ReducedWord, C64)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (h, z) in terms {
            *coeffs.entry(h).or_insert(ZERO) += z;
        }
        coeffs.retain(|_, z| *z != ZERO);
        GroupFunction { coeffs }
    }

    /// `(1/n) Σ_{k<n} δ_{β^k(h)}`.
    pub fn shift_average(h: &ReducedWord, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("an ergodic average needs n ≥ 1".into()));
        }
        let w = real(1.0 / n as f64);
        Ok(GroupFunction::from_terms((0..n as i64).map(|k| (h.shifted(k), w))))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ReducedWord, &C64)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, h: &ReducedWord) -> C64 {
        self.coeffs.get(h).copied().unwrap_or(ZERO)
    }

    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn add(&self, other: &GroupFunction) -> Self {
        GroupFunction::from_terms(self.terms().chain(other.terms()).map(|(h, z)| (h.clone(), *z)))
    }

    pub fn scaled(&self, c: C64) -> Self {
        GroupFunction::from_terms(self.terms().map(|(h, z)| (h.clone(), z * c)))
    }

    /// `(f ⋆ g)(x) = Σ_{hk = x} f(h) g(k)`.
    pub fn convolve(&self, other: &GroupFunction) -> Self {
        GroupFunction::from_terms(
            self.terms()
                .flat_map(|(h, a)| other.terms().map(move |(k, b)| (h.mul(k), a * b))),
        )
    }

    /// `f*(g) = conj f(g⁻¹)`.
    pub fn adjoint(&self) -> Self {
        GroupFunction::from_terms(self.terms().map(|(h, z)| (h.inverse(), z.conj())))
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The canonical trace: the coefficient of `e`.
    pub fn trace_tau(&self) -> C64 {
        self.coefficient(&ReducedWord::identity())
    }

    /// `(Σ_g |f(g)|² (1+|g|)^{2s})^{1/2}`.
    pub fn rd_norm(&self, s: f64) -> f64 {
        self.terms()
            .map(|(g, z)| z.norm_sqr() * (1.0 + g.len() as f64).powf(2.0 * s))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_length(&self) -> usize {
        self.coeffs.keys().map(ReducedWord::len).max().unwrap_or(0)
    }

    /// Common length of the support, if there is one.
    pub fn homogeneous_length(&self) -> Option<usize> {
        let mut lengths = self.coeffs.keys().map(ReducedWord::len);
        let first = lengths.next()?;
        lengths.all(|l| l == first).then_some(first)
    }

    /// The part of `f` supported on words of length `p`.
    pub fn length_component(&self, p: usize) -> Self {
        GroupFunction {
            coeffs: self.coeffs.iter().filter(|(h, _)| h.len() == p).map(|(h, z)| (h.clone(), *z)).collect(),
        }
    }

    pub fn generators(&self) -> BTreeSet<i64> {
        self.coeffs.keys().flat_map(ReducedWord::generators).collect()
    }
}

/// Number of reduced words of length `≤ radius` over `k` generators.
pub fn ball_size(k: usize, radius: usize) -> usize {
    if k == 0 {
        return 1;
    }
    let mut total: usize = 1;
    let mut sphere: usize = 2 * k;
    for _ in 0..radius {
        total = total.saturating_add(sphere);
        sphere = sphere.saturating_mul(2 * k - 1);
    }
    total
}

/// All reduced words of length `≤ R` over a generator window, in
/// breadth-first order (generator ascending, `+1` before `−1`).
#[derive(Debug, Clone)]
pub struct BallBasis {
    radius: usize,
    generators: Vec<i64>,
    words: Vec<ReducedWord>,
    index: HashMap<ReducedWord, usize>,
    sphere_ends: Vec<usize>,
}

impl BallBasis {
    pub fn new(generators: impl IntoIterator<Item = i64>, radius: usize, cap: usize) -> Result<Self> {
        let generators: Vec<i64> = generators.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let required = ball_size(generators.len(), radius);
        if required > cap {
            return Err(Error::Capacity { required, cap });
        }
        let alphabet: Vec<Letter> = generators
            .iter()
            .flat_map(|&g| [Letter { generator: g, exponent: 1 }, Letter { generator: g, exponent: -1 }])
            .collect();
        let mut words = Vec::with_capacity(required);
        words.push(ReducedWord::identity());
        let mut sphere_ends = vec![1];
        let mut start = 0;
        for _ in 0..radius {
            let end = words.len();
            for parent in start..end {
                for &l in &alphabet {
                    let w: &ReducedWord = &words[parent];
                    if w.letters.last() == Some(&l.inverse()) {
                        continue;
                    }
                    let mut letters = w.letters.clone();
                    letters.push(l);
                    words.push(ReducedWord { letters });
                }
            }
            start = end;
            sphere_ends.push(words.len());
        }
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(BallBasis {
            radius,
            generators,
            words,
            index,
            sphere_ends,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn generators(&self) -> &[i64] {
        &self.generators
    }

    pub fn words(&self) -> &[ReducedWord] {
        &self.words
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn position(&self, w: &ReducedWord) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Number of words of length `≤ r`.
    pub fn prefix_len(&self, r: usize) -> usize {
        self.sphere_ends[r.min(self.radius)]
    }
}

/// Left convolution by `f` from the words of length `≤ R − p` into the ball.
#[derive(Debug, Clone)]
pub struct ConvolutionMatrix {
    pub matrix: SparseMatrix,
    pub domain_radius: usize,
}

pub fn convolution_operator(f: &GroupFunction, basis: &BallBasis) -> Result<ConvolutionMatrix> {
    let p = f.max_length();
    if p > basis.radius() {
        return Err(Error::Domain(format!(
            "support length {p} exceeds the ball radius {}",
            basis.radius()
        )));
    }
    if let Some(g) = f.generators().iter().find(|g| basis.generators().binary_search(g).is_err()) {
        return Err(Error::Domain(format!("generator g{g} is outside the ball window")));
    }
    let domain_radius = basis.radius() - p;
    let cols = basis.prefix_len(domain_radius);
    let mut builder = TripletBuilder::new(basis.size(), cols);
    for (j, g) in basis.words()[..cols].iter().enumerate() {
        for (h, z) in f.terms() {
            let i = basis.position(&h.mul(g)).expect("product stays in the ball");
            builder.push(i, j, *z);
        }
    }
    Ok(ConvolutionMatrix {
        matrix: builder.build(),
        domain_radius,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupNormReport {
    /// Certified lower bound for `‖λ(f)‖`.
    pub lower: f64,
    /// `(p+1)‖f‖₂` for homogeneous `f` of length `p`.
    pub upper: f64,
    pub l2: f64,
    pub length: usize,
    pub requested_radius: usize,
    pub radius: usize,
    pub generators: usize,
    pub ball_size: usize,
    pub domain_dim: usize,
    pub method: NormMethod,
    pub seconds: f64,
}

impl GroupNormReport {
    /// `‖f‖₂ ≤ lower ≤ (p+1)‖f‖₂`.
    pub fn sandwich_holds(&self) -> bool {
        let slack = 1e-12 * self.upper.max(1.0);
        self.l2 <= self.lower + slack && self.lower <= self.upper + slack
    }
}

/// Generator window of `f`, never empty.
fn window_of(f: &GroupFunction) -> Vec<i64> {
    let gens = f.generators();
    if gens.is_empty() {
        vec![0]
    } else {
        gens.into_iter().collect()
    }
}

/// Largest radius `≤ requested` whose ball over `k` generators fits the cap.
pub fn effective_radius(k: usize, requested: usize, cap: usize) -> usize {
    (0..=requested).rev().find(|&r| ball_size(k, r) <= cap).unwrap_or(0)
}

/// Certified lower bound for `‖λ(f)‖` on the ball of the largest radius
/// `≤ radius` that fits `cap`, together with the length-wise upper bound.
pub fn haagerup_check(f: &GroupFunction, radius: usize, cap: usize, seed: u64) -> Result<GroupNormReport> {
    let p = f
        .homogeneous_length()
        .ok_or_else(|| Error::Domain("the inequality is stated for functions supported on one word length".into()))?;
    let start = Instant::now();
    let window = window_of(f);
    let r = effective_radius(window.len(), radius, cap);
    if r < p {
        return Err(Error::Capacity {
            required: ball_size(window.len(), p),
            cap,
        });
    }
    let basis = BallBasis::new(window.iter().copied(), r, cap)?;
    let conv = convolution_operator(f, &basis)?;
    let est = spectral::top_singular(&conv.matrix, seed);
    // δ_e is always in the domain and is mapped to f itself
    let l2 = f.l2_norm();
    Ok(GroupNormReport {
        lower: est.value.max(l2),
        upper: (p + 1) as f64 * l2,
        l2,
        length: p,
        requested_radius: radius,
        radius: r,
        generators: window.len(),
        ball_size: basis.size(),
        domain_dim: conv.matrix.ncols(),
        method: est.method,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// The shift average `(1/n) Σ_{k<n} λ_{β^k(h)}`, checked against `(p+1)/√n`.
pub fn shift_average_group(h: &ReducedWord, n: usize, radius: usize, cap: usize, seed: u64) -> Result<GroupNormReport> {
    haagerup_check(&GroupFunction::shift_average(h, n)?, radius, cap, seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct RdRow {
    pub length: usize,
    pub l2: f64,
    pub lower: f64,
    pub upper: f64,
    pub radius: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RdReport {
    pub s: f64,
    pub rd_norm: f64,
    pub l2: f64,
    /// Certified lower bound for `‖λ(f)‖` of the whole function.
    pub lower: f64,
    /// `Σ_p (p+1)‖f_p‖₂`, from the length-wise inequalities.
    pub lengthwise_upper: f64,
    pub rows: Vec<RdRow>,
}

/// Length-wise norm checks and the Sobolev norm `‖f‖_{2,s}` for word length.
pub fn rd_report(f: &GroupFunction, s: f64, radius: usize, cap: usize, seed: u64) -> Result<RdReport> {
    let mut rows = Vec::new();
    for p in 0..=f.max_length() {
        let part = f.length_component(p);
        if part.support_size() == 0 {
            continue;
        }
        let check = haagerup_check(&part, radius, cap, seed)?;
        rows.push(RdRow {
            length: p,
            l2: check.l2,
            lower: check.lower,
            upper: check.upper,
            radius: check.radius,
        });
    }
    let window = window_of(f);
    let r = effective_radius(window.len(), radius, cap);
    let whole = if r >= f.max_length() {
        let basis = BallBasis::new(window, r, cap)?;
        let conv = convolution_operator(f, &basis)?;
        spectral::top_singular(&conv.matrix, seed).value.max(f.l2_norm())
    } else {
        f.l2_norm()
    };
    Ok(RdReport {
        s,
        rd_norm: f.rd_norm(s),
        l2: f.l2_norm(),
        lower: whole,
        lengthwise_upper: rows.iter().map(|r| r.upper).sum(),
        rows,
    })
}

/// `λ(f)` applied to a finitely supported vector, as a group function.
pub fn apply_to_vector(f: &GroupFunction, v: &GroupFunction) -> GroupFunction {
    f.convolve(v)
}

/// Coefficients of `f` in ball order.
pub fn ball_vector(f: &GroupFunction, basis: &BallBasis) -> Result<CVector> {
    let mut v = CVector::zeros(basis.size());
    for (h, z) in f.terms() {
        let i = basis
            .position(h)
            .ok_or_else(|| Error::Domain(format!("word {h} is outside the ball")))?;
        v[i] = *z;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(w("g0 g0^-1"), ReducedWord::identity());
        assert_eq!(w("g0 g1").len(), 2);
        assert_eq!(w("g0 g1 g1^-1 g0"), w("g0 g0"));
        assert_eq!(w("g0 g1^-1 g0").len(), 3);
        assert_eq!(w("e").len(), 0);
        let h = w("g2 g-1^-1 g2");
        assert_eq!(h.mul(&h.inverse()), ReducedWord::identity());
        assert_eq!(h.to_string(), "g2 g-1^-1 g2");
        assert!(matches!("x0".parse::<ReducedWord>(), Err(Error::Parse(_))));
        assert!(matches!("g0^2".parse::<ReducedWord>(), Err(Error::Parse(_))));
    }

    #[test]
    fn orbit_classes() {
        assert_eq!(ReducedWord::identity().orbit_class(), OrbitClass::Fixed);
        assert_eq!(w("g0").orbit_class(), OrbitClass::Infinite);
        assert_eq!(w("g5 g7^-1").orbit_class(), OrbitClass::Infinite);
    }

    #[test]
    fn ball_counts_and_order() {
        for k in 1..4 {
            for r in 0..5 {
                let b = BallBasis::new(0..k as i64, r, usize::MAX).unwrap();
                assert_eq!(b.size(), ball_size(k, r));
            }
        }
        let b = BallBasis::new([0, 1], 1, 100).unwrap();
        let names: Vec<String> = b.words().iter().map(|w| w.to_string()).collect();
        assert_eq!(names, ["e", "g0", "g0^-1", "g1", "g1^-1"]);
        assert!(matches!(BallBasis::new([0, 1], 3, 10), Err(Error::Capacity { required: 53, cap: 10 })));
        assert_eq!(effective_radius(16, 8, DEFAULT_BALL_CAP), 3);
    }

    #[test]
    fn trace_and_norms() {
        let e = ReducedWord::identity();
        assert_eq!(GroupFunction::delta(e.clone()).trace_tau(), ONE);
        assert_eq!(GroupFunction::delta(w("g0")).trace_tau(), ZERO);
        let f = GroupFunction::from_terms([(e.clone(), ONE), (w("g0 g1"), real(2.0))]);
        assert_eq!(f.trace_tau(), ONE);
        assert_eq!(GroupFunction::delta(e).rd_norm(3.0), 1.0);
        assert!((GroupFunction::delta(w("g0 g1")).rd_norm(2.0) - 9.0).abs() < 1e-12);
        let avg = GroupFunction::shift_average(&w("g0 g1"), 4).unwrap();
        assert!((avg.rd_norm(1.5) - 3f64.powf(1.5) / 2.0).abs() < 1e-12);
        assert_eq!(f.rd_norm(0.0), f.l2_norm());
        let g = GroupFunction::from_terms([(w("g0"), c(1.0, 2.0)), (w("g1^-1"), real(-1.0))]);
        assert!((g.adjoint().convolve(&g).trace_tau().re - g.l2_norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn translation_is_isometric() {
        let f = GroupFunction::delta(w("g0"));
        let report = haagerup_check(&f, 4, 1000, 1).unwrap();
        assert!((report.lower - 1.0).abs() < 1e-12);
        assert_eq!(report.upper, 2.0);
        let id = haagerup_check(&GroupFunction::delta(ReducedWord::identity()), 3, 1000, 1).unwrap();
        assert!((id.lower - 1.0).abs() < 1e-12 && id.upper == 1.0);
    }

    #[test]
    fn orbit_sum_dominates_l2() {
        let f = GroupFunction::from_terms((0..4).map(|k| (ReducedWord::generator(k), ONE)));
        let report = haagerup_check(&f, 6, DEFAULT_BALL_CAP, 1).unwrap();
        assert!(report.lower >= 2.0 - 1e-12);
        assert!(report.sandwich_holds());
        assert!(haagerup_check(&f.add(&GroupFunction::delta(ReducedWord::identity())), 2, 100, 1).is_err());
    }

    #[test]
    fn shift_average_bounds() {
        let e = shift_average_group(&ReducedWord::identity(), 5, 3, 1000, 1).unwrap();
        assert!((e.lower - 1.0).abs() < 1e-12 && (e.upper - 1.0).abs() < 1e-12);
        let g = shift_average_group(&w("g0"), 4, 3, 10_000, 1).unwrap();
        assert!((g.upper - 1.0).abs() < 1e-12);
        let h = shift_average_group(&w("g0 g1"), 9, 2, 10_000, 1).unwrap();
        assert!((h.upper - 1.0).abs() < 1e-12 && h.lower >= 1.0 / 3.0 - 1e-12);
    }

    #[test]
    fn convolution_rejects_foreign_support() {
        let basis = BallBasis::new([0, 1], 2, 100).unwrap();
        assert!(convolution_operator(&GroupFunction::delta(w("g2")), &basis).is_err());
        assert!(convolution_operator(&GroupFunction::delta(w("g0 g1 g0")), &basis).is_err());
    }
}
