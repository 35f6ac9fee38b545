//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach the console.

use std::process::ExitCode;
use std::time::Instant;

use amalfree::algebra::AlgebraWithExpectation;
use amalfree::ergodic::cesaro_expectation;
use amalfree::fock::{FockContext, FockOptions};
use amalfree::linalg::{real, CMatrix, DEFAULT_SEED};
use amalfree::word::{norm_lower, random_letter, Word};
use amalfree_cli::config::ExperimentConfig;
use amalfree_cli::presets::{self, PRESETS};
use amalfree_cli::report::RunReport;
use amalfree_cli::runner::{self, RunOptions};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const IDENTITY_TOL: f64 = 1e-9;
const VACUUM_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;

fn run_preset(name: &str) -> Result<RunReport, String> {
    let preset = presets::find(name).ok_or(format!("no preset {name}"))?;
    let cfg = ExperimentConfig::from_value((preset.config)()).map_err(|e| e.to_string())?;
    runner::run(&cfg, RunOptions::default()).map_err(|e| e.to_string())
}

fn floats(report: &RunReport, table: &str, column: &str) -> Vec<f64> {
    report
        .table(table)
        .and_then(|t| t.column(column))
        .unwrap_or_default()
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn failures_with_prefix(report: &RunReport, prefix: &str) -> usize {
    report
        .checks
        .iter()
        .filter(|c| c.name.starts_with(prefix) && !c.passed)
        .count()
}

fn within(secs: f64, target: f64) -> Result<(), String> {
    if secs < target {
        Ok(())
    } else {
        Err(format!("runtime {secs:.1}s over target {target}s"))
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = run_preset("lemma-check")?;
    let residual = floats(&report, "bigsum", "residual");
    let threshold = floats(&report, "bigsum", "threshold");
    let words = report.table("bigsum").unwrap().column("word").unwrap();
    let contexts = report.table("bigsum").unwrap().column("context").unwrap();
    let mut distinct: Vec<_> = contexts.iter().zip(&words).collect();
    distinct.dedup();
    let worst = residual.iter().zip(&threshold).map(|(r, t)| r / t).fold(0.0, f64::max);
    let fails = failures_with_prefix(&report, "bigsum");
    if fails > 0 {
        return Err(format!("{fails} residuals over threshold"));
    }
    within(start.elapsed().as_secs_f64(), 60.0)?;
    Ok(format!(
        "{} (context, word) pairs, {} blocks, worst residual/threshold {worst:.2e}",
        distinct.len(),
        residual.len()
    ))
}

fn criteria_2_and_3() -> (Outcome, Outcome) {
    let start = Instant::now();
    let report = match run_preset("haagerup-sweep") {
        Ok(r) => r,
        Err(e) => return (Err(e.clone()), Err(e)),
    };
    let secs = start.elapsed().as_secs_f64();
    let ns = floats(&report, "haagerup", "n");
    let sizes = floats(&report, "haagerup", "size");
    let ratio = floats(&report, "haagerup", "ratio");
    let block_ratio = floats(&report, "haagerup", "block_ratio");
    let shape_ok = ns.len() == 50 && ns.iter().all(|&n| n <= 3.0) && sizes.iter().all(|&k| k <= 6.0);
    let haagerup = {
        let fails = failures_with_prefix(&report, "haagerup/");
        if !shape_ok {
            Err(format!("unexpected family shapes ({} families)", ns.len()))
        } else if fails > 0 {
            Err(format!("{fails} violations"))
        } else {
            within(secs, 120.0).map(|_| {
                let max = ratio.iter().copied().fold(0.0, f64::max);
                format!(
                    "{} families, zero violations, max lower/upper {max:.4} (margin {:.4})",
                    ns.len(),
                    1.0 - max
                )
            })
        }
    };
    let blocks = {
        let fails = failures_with_prefix(&report, "blocks/");
        if fails > 0 || !shape_ok {
            Err(format!("{fails} violations"))
        } else {
            let max = block_ratio.iter().copied().fold(0.0, f64::max);
            Ok(format!("{} families, max block²/γ² {max:.15}", ns.len()))
        }
    };
    (haagerup, blocks)
}

fn criterion_4() -> Outcome {
    let mut notes = Vec::new();
    for (name, p) in [("fshift-p1", 1), ("fshift-p2", 2)] {
        let report = run_preset(name)?;
        let n = floats(&report, "decay", "n");
        if n.len() != 16 {
            return Err(format!("{name}: {} rows", n.len()));
        }
        let fails = failures_with_prefix(&report, "decay/") + failures_with_prefix(&report, "vacuum/");
        if fails > 0 {
            return Err(format!("{name}: {fails} violations"));
        }
        if p == 1 {
            let vacuum = floats(&report, "decay", "ell2_vacuum");
            let worst = n
                .iter()
                .zip(&vacuum)
                .map(|(n, v)| (v - 1.0 / n.sqrt()).abs())
                .fold(0.0, f64::max);
            if worst > VACUUM_TOL {
                return Err(format!("vacuum deviates from 1/√n by {worst:.2e}"));
            }
            notes.push(format!("p=1 vacuum within {worst:.1e} of 1/√n"));
        }
        let max = floats(&report, "decay", "ratio").into_iter().fold(0.0, f64::max);
        notes.push(format!("p={p} max lower/bound {max:.4}"));
    }
    Ok(notes.join(", "))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let report = run_preset("group-shift")?;
    let secs = start.elapsed().as_secs_f64();
    let ns = floats(&report, "group_shift", "n");
    let lower = floats(&report, "group_shift", "lower");
    let l2 = floats(&report, "group_shift", "l2");
    let radius = floats(&report, "group_shift", "R");
    if ns != [1.0, 4.0, 9.0, 16.0] {
        return Err(format!("unexpected n column {ns:?}"));
    }
    for ((n, lo), l) in ns.iter().zip(&lower).zip(&l2) {
        let avg = 1.0 / n.sqrt();
        if (l - avg).abs() > 1e-15 {
            return Err(format!("n={n}: ‖avg‖₂ = {l}, expected {avg}"));
        }
        if *lo < avg * (1.0 - 1e-12) || *lo > 2.0 * avg * (1.0 + 1e-12) {
            return Err(format!("n={n}: lower {lo} outside [{avg}, {}]", 2.0 * avg));
        }
    }
    within(secs, 60.0)?;
    let radii: Vec<String> = radius.iter().map(|r| r.to_string()).collect();
    Ok(format!(
        "zero violations, lower·√n = {:?}, effective radii [{}] of requested 8",
        ns.iter().zip(&lower).map(|(n, lo)| (lo * n.sqrt() * 1e4).round() / 1e4).collect::<Vec<_>>(),
        radii.join(", ")
    ))
}

fn criterion_6() -> Outcome {
    let tp = AlgebraWithExpectation::two_point();
    let diag = AlgebraWithExpectation::diagonal_in_matn(2).map_err(|e| e.to_string())?;
    let contexts = [
        FockContext::build_copies(&tp, [0, 1, 2], 4, FockOptions::default()),
        FockContext::build_copies(&diag, [0, 1], 4, FockOptions::default()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut track = |name: &str, r: f64| -> Result<(), String> {
        worst = worst.max(r);
        checked += 1;
        if r < IDENTITY_TOL {
            Ok(())
        } else {
            Err(format!("{name}: residual {r:.2e}"))
        }
    };
    for ctx in contexts {
        let ctx = ctx.map_err(|e| e.to_string())?;
        let e = |e: amalfree::Error| e.to_string();
        let below_top = ctx.proj_levels_up_to(ctx.max_level() - 1).map_err(e)?;
        let one = CMatrix::identity(ctx.base().ambient_dim(), ctx.base().ambient_dim());
        for k in ctx.indices().collect::<Vec<_>>() {
            let y = ctx.hat(&random_letter(&ctx, k, &mut rng).map_err(e)?).map_err(e)?;
            let module = ctx.module(k).map_err(e)?;
            let psi = ctx.op_psi(k, &y).map_err(e)?;
            let q = ctx.proj_first_index(k).map_err(e)?;
            let lhs = psi.adjoint().product(&psi).map_err(e)?;
            let rhs = ctx
                .op_left_b(&module.inner_product(&y, &y).map_err(e)?)
                .map_err(e)?
                .product(&ctx.identity().difference(&q).map_err(e)?)
                .map_err(e)?;
            let diff = lhs.difference(&rhs).map_err(e)?.product(&below_top).map_err(e)?;
            track("ψ*ψ", diff.frobenius())?;
            let norm_y = module.norm(&y).map_err(e)?;
            let lower = norm_lower(&ctx, &psi, 1, DEFAULT_SEED).map_err(e)?.lower;
            track("‖ψ(y)‖", (lower - norm_y).abs())?;
            track("ρ(1)", ctx.op_rho(k, &one).map_err(e)?.difference(&q).map_err(e)?.frobenius())?;
            track("λ(1)", ctx.op_lambda(k, &one).map_err(e)?.difference(&ctx.identity()).map_err(e)?.frobenius())?;
            for m in 0..=ctx.max_level() {
                let p = ctx.proj_level(m).map_err(e)?;
                let comm = q.product(&p).map_err(e)?.difference(&p.product(&q).map_err(e)?).map_err(e)?;
                track("[Q,P]", comm.frobenius())?;
            }
            let vac = psi.adjoint().product(&ctx.proj_level(0).map_err(e)?).map_err(e)?;
            track("ψ*P₀", vac.frobenius())?;
        }
    }
    Ok(format!("{checked} identities, worst residual {worst:.2e}"))
}

fn criterion_7() -> Outcome {
    let e = |e: amalfree::Error| e.to_string();
    let tp = AlgebraWithExpectation::two_point();
    let ctx = FockContext::build_copies(&tp, 0..17, 2, FockOptions::default()).map_err(e)?;
    let dim = ctx.base().ambient_dim();
    let b = CMatrix::identity(dim, dim) * real(0.75);
    for n in 1..=16 {
        let report = cesaro_expectation(&ctx, &b, &[], n, DEFAULT_SEED).map_err(e)?;
        if report.value != b {
            return Err(format!("n={n}: pure B element returned {}", report.value));
        }
    }
    let letter = tp
        .center(0, &tp.algebra().element(&amalfree::linalg::CVector::from_vec(vec![real(1.0), real(-1.0)])))
        .map_err(e)?;
    let word = Word::new(vec![letter]).map_err(e)?;
    let report = cesaro_expectation(&ctx, &b, &[(real(1.0), word)], 16, DEFAULT_SEED).map_err(e)?;
    if (&report.value - &b).norm() > 1e-12 {
        return Err(format!("mixture returned {}", report.value));
    }
    let envelope = |n: usize| report.trace[n - 1].upper_envelope;
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        worst = worst.max((envelope(n) / envelope(4 * n) - 2.0).abs());
    }
    if worst > RATIO_TOL {
        return Err(format!("envelope ratio off by {worst:.2e}"));
    }
    let decreasing = report.trace.windows(2).all(|w| w[1].upper_envelope < w[0].upper_envelope);
    if !decreasing {
        return Err("envelope not decreasing".into());
    }
    Ok(format!("b returned exactly for n ≤ 16, envelope(n)/envelope(4n) within {worst:.1e} of 2"))
}

fn criterion_8() -> Outcome {
    let mut files = 0;
    for preset in PRESETS {
        let a = run_preset(preset.name)?;
        let b = run_preset(preset.name)?;
        let mut tables_a: Vec<_> = a.tables.iter().map(|t| t.to_csv().unwrap()).collect();
        let mut tables_b: Vec<_> = b.tables.iter().map(|t| t.to_csv().unwrap()).collect();
        tables_a.push(a.checks_table().to_csv().unwrap());
        tables_b.push(b.checks_table().to_csv().unwrap());
        if tables_a != tables_b {
            return Err(format!("{} differs between runs", preset.name));
        }
        files += tables_a.len();
    }
    Ok(format!("{} presets, {files} CSV files byte-identical across two runs", PRESETS.len()))
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: &str, outcome: Outcome, secs: f64| {
        match outcome {
            Ok(msg) => println!("criterion {n}: PASS ({secs:.1}s) {msg}"),
            Err(msg) => {
                all = false;
                println!("criterion {n}: FAIL ({secs:.1}s) {msg}");
            }
        }
    };
    let timed = |f: fn() -> Outcome| {
        let start = Instant::now();
        let out = f();
        (out, start.elapsed().as_secs_f64())
    };
    let (o, s) = timed(criterion_1);
    report("1", o, s);
    let start = Instant::now();
    let (two, three) = criteria_2_and_3();
    let s = start.elapsed().as_secs_f64();
    report("2", two, s);
    report("3", three, 0.0);
    for (n, f) in [
        ("4", criterion_4 as fn() -> Outcome),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
    ] {
        let (o, s) = timed(f);
        report(n, o, s);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
