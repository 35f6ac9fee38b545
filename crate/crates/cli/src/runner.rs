//! Turns a parsed config into a plan, and a plan into a [`RunReport`].

use std::collections::BTreeMap;
use std::time::Instant;

use amalfree::algebra::AlgebraWithExpectation;
use amalfree::ergodic::{cesaro_expectation, decay_point, ShiftExperiment};
use amalfree::fock::{FockContext, FockOptions, DEFAULT_MAX_DIM};
use amalfree::free_group::{haagerup_check, rd_report, shift_average_group, GroupFunction, ReducedWord, DEFAULT_BALL_CAP};
use amalfree::gns::GnsModule;
use amalfree::linalg::{CMatrix, C64, DEFAULT_SEED};
use amalfree::word::{
    block_norm, family_operator, haagerup_upper, norm_lower, random_family, random_word, verify_bigsum, Word,
    WordFamily,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{self, ExperimentConfig, Node, Result};
use crate::report::{num, CheckRow, RunReport, Table};

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub max_dim: Option<usize>,
}

type Factors = BTreeMap<i64, AlgebraWithExpectation>;

#[derive(Debug, Clone)]
pub enum Plan {
    ValidateAlgebra {
        algebra: AlgebraWithExpectation,
    },
    FockReport {
        factors: Factors,
        max_level: usize,
        export: Vec<(String, Word)>,
    },
    LemmaCheck {
        contexts: Vec<(String, Factors)>,
        max_level: usize,
        words: usize,
        max_length: usize,
    },
    HaagerupSweep {
        factors: Factors,
        max_level: usize,
        families: Vec<WordFamily>,
        random_families: usize,
        max_length: usize,
        max_family_size: usize,
    },
    ErgodicDecay {
        experiment: ShiftExperiment,
        cesaro: Option<(CMatrix, C64)>,
    },
    GroupHaagerup {
        functions: Vec<GroupFunction>,
        radius: usize,
        ball_cap: usize,
    },
    GroupShift {
        word: ReducedWord,
        ns: Vec<usize>,
        radius: usize,
        ball_cap: usize,
    },
    RdReport {
        function: GroupFunction,
        s: f64,
        radius: usize,
        ball_cap: usize,
    },
}

fn lookup_in(factors: &Factors) -> impl Fn(i64) -> Option<AlgebraWithExpectation> + '_ {
    move |i| factors.get(&i).cloned()
}

fn ball_cap(p: Node<'_>) -> Result<usize> {
    Ok(p.with_opt("ball_cap", |n| n.as_positive())?.unwrap_or(DEFAULT_BALL_CAP))
}

fn at_least_two(node: Node<'_>, factors: Factors) -> Result<Factors> {
    if factors.len() < 2 {
        return Err(node.error("a free product needs at least two indices"));
    }
    Ok(factors)
}

impl Plan {
    /// Parses and checks every parameter without running anything heavy.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Plan> {
        let p = cfg.params();
        let plan = match cfg.kind.as_str() {
            "validate-algebra" => Plan::ValidateAlgebra {
                algebra: p.with("algebra", |n| n.as_algebra())?,
            },
            "fock-report" => {
                let max_level = p.with("M", |n| n.as_usize())?;
                let factors = p.with("factors", |n| at_least_two(n, config::factors(n)?))?;
                let export = p
                    .with_opt("export", |n| {
                        n.each(|i, e| {
                            let name = e.with_opt("name", |n| n.as_str().map(String::from))?.unwrap_or(format!("word{i}"));
                            Ok((name, e.with("word", |n| config::word(n, &lookup_in(&factors)))?))
                        })
                    })?
                    .unwrap_or_default();
                Plan::FockReport {
                    factors,
                    max_level,
                    export,
                }
            }
            "lemma-check" => {
                let max_level = p.with("M", |n| n.as_usize())?;
                let contexts = p.with("contexts", |n| {
                    n.each(|i, c| {
                        let name = c.with_opt("name", |n| n.as_str().map(String::from))?.unwrap_or(format!("context{i}"));
                        Ok((name, c.with("factors", |n| at_least_two(n, config::factors(n)?))?))
                    })
                })?;
                Plan::LemmaCheck {
                    contexts,
                    max_level,
                    words: p.with("words", |n| n.as_usize())?,
                    max_length: p.with("max_length", |n| {
                        let v = n.as_positive()?;
                        if v > max_level {
                            return Err(n.error(format!("word length {v} exceeds M = {max_level}")));
                        }
                        Ok(v)
                    })?,
                }
            }
            "haagerup-sweep" => {
                let max_level = p.with("M", |n| n.as_usize())?;
                let factors = p.with("factors", |n| at_least_two(n, config::factors(n)?))?;
                let families = p
                    .with_opt("families", |n| {
                        n.each(|_, fam| {
                            let words = fam.each(|_, w| config::word(w, &lookup_in(&factors)))?;
                            let family = WordFamily::new(words).map_err(|e| fam.error(e.to_string()))?;
                            family.check_separation().map_err(|e| fam.error(e.to_string()))?;
                            if family.word_length() > max_level {
                                return Err(fam.error(format!("word length exceeds M = {max_level}")));
                            }
                            Ok(family)
                        })
                    })?
                    .unwrap_or_default();
                let random_families = p.with_opt("random_families", |n| n.as_usize())?.unwrap_or(0);
                let max_length = p
                    .with_opt("max_length", |n| {
                        let v = n.as_positive()?;
                        if v > max_level {
                            return Err(n.error(format!("word length {v} exceeds M = {max_level}")));
                        }
                        Ok(v)
                    })?
                    .unwrap_or(1);
                let max_family_size = p.with_opt("max_family_size", |n| n.as_positive())?.unwrap_or(1);
                Plan::HaagerupSweep {
                    factors,
                    max_level,
                    families,
                    random_families,
                    max_length,
                    max_family_size,
                }
            }
            "ergodic-decay" => {
                let max_level = p.with("M", |n| n.as_usize())?;
                let n_max = p.with("n_max", |n| n.as_positive())?;
                let algebra = p.with("algebra", |n| n.as_algebra())?;
                let prototype = p.with("prototype", |n| config::word(n, &|_| Some(algebra.clone())))?;
                let cesaro = p.with_opt("cesaro", |n| {
                    let b = n.with("b", |b| {
                        let coords = b.as_coords()?;
                        if coords.len() != algebra.subalgebra().dim() {
                            return Err(b.error(format!("expected {} coordinates", algebra.subalgebra().dim())));
                        }
                        Ok(algebra.subalgebra().element(&coords))
                    })?;
                    let coeff = n.with_opt("coefficient", |c| c.as_complex())?.unwrap_or(C64::new(1.0, 0.0));
                    Ok((b, coeff))
                })?;
                let experiment = ShiftExperiment::new(algebra.clone(), prototype, n_max, max_level)
                    .map_err(|e| p.error(e.to_string()))?;
                Plan::ErgodicDecay { experiment, cesaro }
            }
            "group-haagerup" => Plan::GroupHaagerup {
                functions: p.with("functions", |n| n.each(|_, f| config::group_function(f)))?,
                radius: p.with("R", |n| n.as_usize())?,
                ball_cap: ball_cap(p)?,
            },
            "group-shift" => Plan::GroupShift {
                word: p.with("word", config::reduced_word)?,
                ns: p.with("n", |n| n.each(|_, v| v.as_positive()))?,
                radius: p.with("R", |n| n.as_usize())?,
                ball_cap: ball_cap(p)?,
            },
            "rd-report" => Plan::RdReport {
                function: p.with("function", config::group_function)?,
                s: p.with("s", |n| {
                    let s = n.as_f64()?;
                    if s < 0.0 {
                        return Err(n.error("s must be nonnegative"));
                    }
                    Ok(s)
                })?,
                radius: p.with("R", |n| n.as_usize())?,
                ball_cap: ball_cap(p)?,
            },
            other => unreachable!("kind {other} passed validation"),
        };
        Ok(plan)
    }
}

/// Mixes a base seed with task coordinates.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(b);
    rng.next_u64()
}

fn indices_label(indices: &[i64]) -> String {
    indices.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

struct Output {
    tables: Vec<Table>,
    checks: Vec<CheckRow>,
    extra: Value,
}

pub fn validate(cfg: &ExperimentConfig) -> Result<Plan> {
    Plan::from_config(cfg)
}

pub fn run(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunReport> {
    let plan = Plan::from_config(cfg)?;
    let seed = opts.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let fock = FockOptions {
        max_dim: opts.max_dim.or(cfg.max_dim).unwrap_or(DEFAULT_MAX_DIM),
    };
    let start = Instant::now();
    let out = execute(&plan, seed, fock)?;
    Ok(RunReport {
        kind: cfg.kind.clone(),
        seed,
        tables: out.tables,
        checks: out.checks,
        extra: out.extra,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn execute(plan: &Plan, seed: u64, fock: FockOptions) -> Result<Output> {
    match plan {
        Plan::ValidateAlgebra { algebra } => validate_algebra(algebra, seed),
        Plan::FockReport {
            factors,
            max_level,
            export,
        } => fock_report(factors, *max_level, export, fock, seed),
        Plan::LemmaCheck {
            contexts,
            max_level,
            words,
            max_length,
        } => lemma_check(contexts, *max_level, *words, *max_length, fock, seed),
        Plan::HaagerupSweep {
            factors,
            max_level,
            families,
            random_families,
            max_length,
            max_family_size,
        } => haagerup_sweep(
            factors,
            *max_level,
            families,
            *random_families,
            *max_length,
            *max_family_size,
            fock,
            seed,
        ),
        Plan::ErgodicDecay { experiment, cesaro } => ergodic_decay(experiment, cesaro.as_ref(), fock, seed),
        Plan::GroupHaagerup {
            functions,
            radius,
            ball_cap,
        } => group_haagerup(functions, *radius, *ball_cap, seed),
        Plan::GroupShift {
            word,
            ns,
            radius,
            ball_cap,
        } => group_shift(word, ns, *radius, *ball_cap, seed),
        Plan::RdReport {
            function,
            s,
            radius,
            ball_cap,
        } => rd(function, *s, *radius, *ball_cap, seed),
    }
}

fn validate_algebra(algebra: &AlgebraWithExpectation, seed: u64) -> Result<Output> {
    let (report, seconds) = timed(|| algebra.validate_with_seed(seed));
    let mut table = Table::new("validation", &["check", "status", "residual"]);
    let mut checks = Vec::new();
    for c in &report.checks {
        table.push(vec![c.name.clone(), if c.passed { "pass" } else { "fail" }.into(), num(c.residual)]);
        let mut row = CheckRow::new(format!("axiom/{}", c.name), c.passed);
        row.residual = Some(c.residual);
        row.seconds = seconds;
        checks.push(row);
    }
    let mut extra = json!({"algebra_dim": algebra.algebra().dim(), "subalgebra_dim": algebra.subalgebra().dim()});
    if report.all_passed() {
        let module = GnsModule::build(algebra)?;
        extra["gns"] = json!({
            "carrier_dim": module.carrier_dim(),
            "null_dim": module.null_dim(),
            "b_dim": module.b_dim(),
            "centered_dim": module.centered_dim(),
        });
    }
    Ok(Output {
        tables: vec![table],
        checks,
        extra,
    })
}

fn fock_report(factors: &Factors, max_level: usize, export: &[(String, Word)], fock: FockOptions, seed: u64) -> Result<Output> {
    let mut checks = Vec::new();
    for (i, spec) in factors {
        for c in spec.validate_with_seed(seed).checks {
            let mut row = CheckRow::new(format!("axiom/{i}/{}", c.name), c.passed);
            row.residual = Some(c.residual);
            checks.push(row);
        }
    }
    let (ctx, seconds) = timed(|| FockContext::build(factors.clone(), max_level, fock));
    let ctx = ctx?;
    let mut build = CheckRow::new("build", true);
    build.seconds = seconds;
    checks.push(build);

    let summary = ctx.summary();
    let mut levels = Table::new("levels", &["level", "dim", "sequences"]);
    for l in &summary.levels {
        levels.push(vec![l.level.to_string(), l.dim.to_string(), l.sequences.len().to_string()]);
    }
    let mut basis = Table::new("basis", &["position", "level", "sequence", "local", "components", "sigma_slot"]);
    for (pos, label) in ctx.labels().iter().enumerate() {
        basis.push(vec![
            pos.to_string(),
            label.level.to_string(),
            indices_label(&label.sequence),
            label.local.to_string(),
            label
                .components
                .as_ref()
                .map(|c| c.iter().map(usize::to_string).collect::<Vec<_>>().join(" "))
                .unwrap_or_default(),
            label.sigma_slot.map(|s| s.to_string()).unwrap_or_default(),
        ]);
    }
    let mut tables = vec![levels, basis];
    for (name, w) in export {
        let op = amalfree::word::word_operator(&ctx, w)?;
        let mut t = Table::new(&format!("operator_{name}"), &["row", "col", "re", "im"]);
        for (i, j, re, im) in op.coordinate_list() {
            t.push(vec![i.to_string(), j.to_string(), num(re), num(im)]);
        }
        tables.push(t);
    }
    Ok(Output {
        tables,
        checks,
        extra: serde_json::to_value(&summary).expect("summary serializes"),
    })
}

struct BigsumRow {
    context: String,
    word: usize,
    indices: Vec<i64>,
    m: usize,
    residual: f64,
    threshold: f64,
    passed: bool,
    seconds: f64,
}

fn lemma_check(
    contexts: &[(String, Factors)],
    max_level: usize,
    words: usize,
    max_length: usize,
    fock: FockOptions,
    seed: u64,
) -> Result<Output> {
    let mut rows: Vec<BigsumRow> = Vec::new();
    for (c, (name, factors)) in contexts.iter().enumerate() {
        let ctx = FockContext::build(factors.clone(), max_level, fock)?;
        let per_word: Vec<Vec<BigsumRow>> = (0..words)
            .into_par_iter()
            .map(|j| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64, j as u64));
                let n = 1 + (rng.next_u64() % max_length as u64) as usize;
                let w = random_word(&ctx, n, &mut rng)?;
                (0..=max_level - n)
                    .map(|m| {
                        let (report, seconds) = timed(|| verify_bigsum(&ctx, &w, m));
                        let report = report?;
                        Ok(BigsumRow {
                            context: name.clone(),
                            word: j,
                            indices: w.indices(),
                            m,
                            residual: report.residual,
                            threshold: report.threshold,
                            passed: report.passed,
                            seconds,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        rows.extend(per_word.into_iter().flatten());
    }
    let mut table = Table::new("bigsum", &["context", "word", "n", "indices", "m", "residual", "threshold", "status"]);
    let mut checks = Vec::new();
    for r in &rows {
        table.push(vec![
            r.context.clone(),
            r.word.to_string(),
            r.indices.len().to_string(),
            indices_label(&r.indices),
            r.m.to_string(),
            num(r.residual),
            num(r.threshold),
            if r.passed { "pass" } else { "fail" }.into(),
        ]);
        let mut check = CheckRow::residual(format!("bigsum/{}/w{}/m{}", r.context, r.word, r.m), r.residual, r.threshold, r.seconds);
        check.passed = r.passed;
        checks.push(check);
    }
    let worst = rows.iter().map(|r| r.residual / r.threshold).fold(0.0, f64::max);
    Ok(Output {
        tables: vec![table],
        checks,
        extra: json!({"rows": rows.len(), "worst_residual_over_threshold": worst}),
    })
}

#[allow(clippy::too_many_arguments)]
fn haagerup_sweep(
    factors: &Factors,
    max_level: usize,
    explicit: &[WordFamily],
    random_families: usize,
    max_length: usize,
    max_family_size: usize,
    fock: FockOptions,
    seed: u64,
) -> Result<Output> {
    let ctx = FockContext::build(factors.clone(), max_level, fock)?;
    let size_cap = max_family_size.min(factors.len());
    let mut families: Vec<WordFamily> = explicit.to_vec();
    for i in 0..random_families {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, i as u64));
        let n = 1 + i % max_length;
        let size = 1 + (rng.next_u64() % size_cap as u64) as usize;
        families.push(random_family(&ctx, n, size, &mut rng)?);
    }
    struct Row {
        n: usize,
        size: usize,
        lower: f64,
        upper: f64,
        gamma_sq: f64,
        block_max_sq: f64,
        seconds: f64,
    }
    let rows: Vec<Row> = families
        .par_iter()
        .enumerate()
        .map(|(i, family)| {
            let start = Instant::now();
            let n = family.word_length();
            let upper = haagerup_upper(family)?;
            let f = family_operator(&ctx, family)?;
            let s = derive_seed(seed, 1, i as u64);
            let lower = norm_lower(&ctx, &f, n, s)?.lower;
            let mut block_max: f64 = 0.0;
            for m in 0..=max_level - n {
                for r in m.abs_diff(n)..=(m + n).min(max_level) {
                    block_max = block_max.max(block_norm(&ctx, &f, r, m, n, s)?);
                }
            }
            Ok(Row {
                n,
                size: family.size(),
                lower,
                upper,
                gamma_sq: family.gamma().powi(2),
                block_max_sq: block_max * block_max,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "haagerup",
        &["family", "n", "size", "M", "lower", "upper", "ratio", "gamma_sq", "block_max_sq", "block_ratio"],
    );
    let mut checks = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            r.n.to_string(),
            r.size.to_string(),
            max_level.to_string(),
            num(r.lower),
            num(r.upper),
            num(r.lower / r.upper),
            num(r.gamma_sq),
            num(r.block_max_sq),
            num(r.block_max_sq / r.gamma_sq),
        ]);
        checks.push(CheckRow::bound(format!("haagerup/f{i}"), r.lower, r.upper, r.seconds));
        checks.push(CheckRow::bound(format!("blocks/f{i}"), r.block_max_sq, r.gamma_sq, 0.0));
    }
    let best_ratio = rows.iter().map(|r| r.lower / r.upper).fold(0.0, f64::max);
    Ok(Output {
        tables: vec![table],
        checks,
        extra: json!({"families": rows.len(), "total_dim": ctx.total_dim(), "max_lower_over_upper": best_ratio}),
    })
}

fn ergodic_decay(exp: &ShiftExperiment, cesaro: Option<&(CMatrix, C64)>, fock: FockOptions, seed: u64) -> Result<Output> {
    let ctx = exp.context(fock)?;
    let points = (1..=exp.n_max)
        .into_par_iter()
        .map(|n| decay_point(&ctx, &exp.prototype, n, seed))
        .collect::<amalfree::Result<Vec<_>>>()?;
    let mut table = Table::new("decay", &["n", "lower", "ell2_vacuum", "paper_bound", "ratio"]);
    let mut checks = Vec::new();
    for p in &points {
        table.push(vec![p.n.to_string(), num(p.lower), num(p.ell2_vacuum), num(p.paper_bound), num(p.ratio)]);
        checks.push(CheckRow::bound(format!("decay/n{}", p.n), p.lower, p.paper_bound, p.seconds));
        checks.push(CheckRow::bound(format!("vacuum/n{}", p.n), p.ell2_vacuum, p.lower, 0.0));
    }
    let mut tables = vec![table];
    let mut extra = json!({"total_dim": ctx.total_dim(), "window_indices": ctx.indices().collect::<Vec<_>>()});
    if let Some((b, coeff)) = cesaro {
        let (report, seconds) = timed(|| cesaro_expectation(&ctx, b, &[(*coeff, exp.prototype.clone())], exp.n_max, seed));
        let report = report?;
        let mut t = Table::new("cesaro", &["n", "deviation_lower", "upper_envelope"]);
        for p in &report.trace {
            t.push(vec![p.n.to_string(), num(p.deviation_lower), num(p.upper_envelope)]);
            checks.push(CheckRow::bound(format!("cesaro/n{}", p.n), p.deviation_lower, p.upper_envelope, 0.0));
        }
        let residual = (&report.value - b).norm();
        checks.push(CheckRow::residual("cesaro/value", residual, 1e-9 * (1.0 + b.norm()), seconds));
        extra["cesaro_value"] = json!(amalfree::linalg::matrix_to_pairs(&report.value));
        tables.push(t);
    }
    Ok(Output { tables, checks, extra })
}

fn group_row(t: &mut Table, id: String, r: &amalfree::free_group::GroupNormReport) {
    t.push(vec![
        id,
        r.length.to_string(),
        r.requested_radius.to_string(),
        r.radius.to_string(),
        r.generators.to_string(),
        r.ball_size.to_string(),
        r.domain_dim.to_string(),
        num(r.l2),
        num(r.lower),
        num(r.upper),
        num(r.lower / r.upper),
    ]);
}

const GROUP_HEADER: [&str; 11] = [
    "id",
    "p",
    "R_requested",
    "R",
    "generators",
    "ball_size",
    "domain_dim",
    "l2",
    "lower",
    "upper",
    "ratio",
];

fn sandwich_check(name: String, r: &amalfree::free_group::GroupNormReport) -> CheckRow {
    let mut c = CheckRow::bound(name, r.lower, r.upper, r.seconds);
    c.passed = r.sandwich_holds();
    c
}

fn group_haagerup(functions: &[GroupFunction], radius: usize, cap: usize, seed: u64) -> Result<Output> {
    let reports = functions
        .par_iter()
        .map(|f| haagerup_check(f, radius, cap, seed))
        .collect::<amalfree::Result<Vec<_>>>()?;
    let mut table = Table::new("group_haagerup", &GROUP_HEADER);
    let mut checks = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        group_row(&mut table, format!("f{i}"), r);
        checks.push(sandwich_check(format!("sandwich/f{i}"), r));
    }
    Ok(Output {
        tables: vec![table],
        checks,
        extra: Value::Null,
    })
}

fn group_shift(word: &ReducedWord, ns: &[usize], radius: usize, cap: usize, seed: u64) -> Result<Output> {
    let reports = ns
        .par_iter()
        .map(|&n| shift_average_group(word, n, radius, cap, seed))
        .collect::<amalfree::Result<Vec<_>>>()?;
    let mut table = Table::new("group_shift", &GROUP_HEADER);
    table.header[0] = "n".into();
    let mut checks = Vec::new();
    for (n, r) in ns.iter().zip(&reports) {
        group_row(&mut table, n.to_string(), r);
        checks.push(sandwich_check(format!("shift/n{n}"), r));
    }
    Ok(Output {
        tables: vec![table],
        checks,
        extra: json!({"word": word.to_string(), "orbit": format!("{:?}", word.orbit_class())}),
    })
}

fn rd(function: &GroupFunction, s: f64, radius: usize, cap: usize, seed: u64) -> Result<Output> {
    let (report, seconds) = timed(|| rd_report(function, s, radius, cap, seed));
    let report = report?;
    let mut table = Table::new("rd", &["length", "l2", "lower", "upper", "R"]);
    let mut checks = Vec::new();
    for r in &report.rows {
        table.push(vec![r.length.to_string(), num(r.l2), num(r.lower), num(r.upper), r.radius.to_string()]);
        let mut c = CheckRow::bound(format!("length/p{}", r.length), r.lower, r.upper, 0.0);
        c.passed &= r.l2 <= r.lower * (1.0 + 1e-12);
        checks.push(c);
    }
    checks.push(CheckRow::bound("total", report.lower, report.lengthwise_upper, seconds));
    // Cauchy–Schwarz over the lengths present: Σ (p+1)‖f_p‖₂ ≤ (Σ (p+1)^{2−2s})^{1/2} ‖f‖_{2,s}
    let factor: f64 = report
        .rows
        .iter()
        .map(|r| ((r.length + 1) as f64).powf(2.0 - 2.0 * s))
        .sum::<f64>()
        .sqrt();
    checks.push(CheckRow::bound("sobolev", report.lengthwise_upper, factor * report.rd_norm, 0.0));
    Ok(Output {
        tables: vec![table],
        checks,
        extra: json!({
            "s": s,
            "rd_norm": report.rd_norm,
            "l2": report.l2,
            "lower": report.lower,
            "lengthwise_upper": report.lengthwise_upper,
            "cauchy_schwarz_factor": factor,
        }),
    })
}
