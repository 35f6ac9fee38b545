use std::collections::BTreeMap;

use amalfree::algebra::{AlgebraWithExpectation, CenteredElement};
use amalfree::fock::{FockContext, FockOperator, FockOptions};
use amalfree::linalg::{c, real, CMatrix, CVector};
use amalfree::word::{norm_lower, random_letter};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn two_point(indices: &[i64], m: usize) -> FockContext {
    FockContext::build_copies(&AlgebraWithExpectation::two_point(), indices.iter().copied(), m, FockOptions::default())
        .unwrap()
}

fn diagonal(indices: &[i64], m: usize) -> FockContext {
    let spec = AlgebraWithExpectation::diagonal_in_matn(2).unwrap();
    FockContext::build_copies(&spec, indices.iter().copied(), m, FockOptions::default()).unwrap()
}

fn contexts() -> Vec<FockContext> {
    vec![two_point(&[0, 1], 4), two_point(&[0, 1, 2], 4), diagonal(&[0, 1], 4), diagonal(&[0, 1, 2], 3)]
}

fn restrict_below_top(ctx: &FockContext, x: &FockOperator) -> FockOperator {
    x.product(&ctx.proj_levels_up_to(ctx.max_level() - 1).unwrap()).unwrap()
}

fn power(x: &FockOperator, k: usize, ctx: &FockContext) -> FockOperator {
    (0..k).fold(ctx.identity(), |acc, _| acc.product(x).unwrap())
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn creation_operators_are_isometric_off_their_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for ctx in contexts() {
        for k in ctx.indices().collect::<Vec<_>>() {
            let letter = random_letter(&ctx, k, &mut rng).unwrap();
            let y = ctx.hat(&letter).unwrap();
            let module = ctx.module(k).unwrap();
            let yy = module.inner_product(&y, &y).unwrap();
            let psi = ctx.op_psi(k, &y).unwrap();
            let lhs = psi.adjoint().product(&psi).unwrap();
            let q = ctx.identity().difference(&ctx.proj_first_index(k).unwrap()).unwrap();
            let rhs = ctx.op_left_b(&yy).unwrap().product(&q).unwrap();
            let diff = restrict_below_top(&ctx, &lhs.difference(&rhs).unwrap());
            assert!(diff.frobenius() < TOL, "ψ*ψ residual {}", diff.frobenius());

            let norm_y = module.norm(&y).unwrap();
            let lower = norm_lower(&ctx, &psi, 1, 3).unwrap().lower;
            assert!((lower - norm_y).abs() < TOL, "‖ψ(y)‖ {lower} vs ‖y‖ {norm_y}");
            assert!(psi.operator_norm() <= norm_y + TOL);

            let vac = psi.adjoint().product(&ctx.proj_level(0).unwrap()).unwrap();
            assert!(vac.frobenius() < TOL);
        }
    }
}

#[test]
fn annihilation_formula_matches_the_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for ctx in contexts() {
        for k in ctx.indices().collect::<Vec<_>>() {
            let y = ctx.hat(&random_letter(&ctx, k, &mut rng).unwrap()).unwrap();
            let direct = ctx.op_psi_adjoint(k, &y).unwrap();
            let transposed = ctx.op_psi(k, &y).unwrap().adjoint();
            assert!(direct.difference(&transposed).unwrap().frobenius() < TOL);
        }
    }
}

#[test]
fn diagonal_and_unit_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for ctx in contexts() {
        let n = ctx.base().ambient_dim();
        let one = CMatrix::identity(n, n);
        for k in ctx.indices().collect::<Vec<_>>() {
            let rho1 = ctx.op_rho(k, &one).unwrap();
            assert!(rho1.difference(&ctx.proj_first_index(k).unwrap()).unwrap().frobenius() < TOL);
            let lam1 = ctx.op_lambda(k, &one).unwrap();
            assert!(lam1.difference(&ctx.identity()).unwrap().frobenius() < TOL);

            let a = random_letter(&ctx, k, &mut rng).unwrap();
            let rho = ctx.rho(&a).unwrap();
            assert!(rho.operator_norm() <= a.norm() + TOL);

            let q = ctx.proj_first_index(k).unwrap();
            for m in 0..=ctx.max_level() {
                let p = ctx.proj_level(m).unwrap();
                let comm = q.product(&p).unwrap().difference(&p.product(&q).unwrap()).unwrap();
                assert!(comm.frobenius() < TOL);
            }
        }
    }
}

#[test]
fn lambda_splits_into_creation_diagonal_annihilation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for ctx in contexts() {
        for k in ctx.indices().collect::<Vec<_>>() {
            let a = random_letter(&ctx, k, &mut rng).unwrap();
            let sum = ctx
                .psi_hat(&a)
                .unwrap()
                .sum(&ctx.rho(&a).unwrap())
                .unwrap()
                .sum(&ctx.psi_dagger_adjoint(&a).unwrap())
                .unwrap();
            let diff = ctx.lambda(&a).unwrap().difference(&sum).unwrap();
            assert!(diff.frobenius() < TOL);
        }
    }
}

#[test]
fn lambda_is_a_star_homomorphism_below_the_top() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for ctx in contexts() {
        for k in ctx.indices().collect::<Vec<_>>() {
            let spec = ctx.factor_spec(k).unwrap();
            let a = spec.algebra().random_element(&mut rng);
            let b = spec.algebra().random_element(&mut rng);
            let la = ctx.op_lambda(k, &a).unwrap();
            let lb = ctx.op_lambda(k, &b).unwrap();
            let lab = ctx.op_lambda(k, &(&a * &b)).unwrap();
            let diff = restrict_below_top(&ctx, &la.product(&lb).unwrap().difference(&lab).unwrap());
            assert!(diff.frobenius() < TOL * (1.0 + a.norm() * b.norm()));
            let ladj = ctx.op_lambda(k, &a.adjoint()).unwrap();
            assert!(la.adjoint().difference(&ladj).unwrap().frobenius() < TOL);
        }
    }
}

#[test]
fn mixed_support_annihilation_vanishes() {
    let ctx = two_point(&[0, 1, 2], 4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..3 {
        for l in 0..3 {
            if k == l {
                continue;
            }
            let a = random_letter(&ctx, k, &mut rng).unwrap();
            let b = random_letter(&ctx, l, &mut rng).unwrap();
            let x = ctx.psi_dagger_adjoint(&a).unwrap().product(&ctx.psi_hat(&b).unwrap()).unwrap();
            assert!(x.frobenius() < TOL);
        }
    }
}

/// Two free symmetries have an arcsine-distributed sum: even moments `C(2k, k)`.
#[test]
fn free_symmetries_have_arcsine_moments() {
    let u = CMatrix::from_diagonal(&CVector::from_vec(vec![real(1.0), real(-1.0)]));
    let ctx = two_point(&[0, 1], 4);
    let x = ctx.op_lambda(0, &u).unwrap().sum(&ctx.op_lambda(1, &u).unwrap()).unwrap();
    for k in 0..=4u64 {
        let moment = ctx.phi_state(&power(&x, 2 * k as usize, &ctx)).unwrap()[(0, 0)];
        assert!((moment - real(binomial(2 * k, k))).norm() < 1e-9, "k = {k}: {moment}");
    }
    // three free symmetries: closed walks on the 3-regular tree
    let ctx = two_point(&[0, 1, 2], 3);
    let mut x = ctx.zero();
    for i in 0..3 {
        x = x.sum(&ctx.op_lambda(i, &u).unwrap()).unwrap();
    }
    for (k, expected) in [1.0, 3.0, 15.0, 87.0].iter().enumerate() {
        let moment = ctx.phi_state(&power(&x, 2 * k, &ctx)).unwrap()[(0, 0)];
        assert!((moment.re - expected).abs() < 1e-9, "k = {k}: {moment}");
    }
}

/// `M₂ = D₂ ⋊ ℤ₂`, so the product of two copies over `D₂` is `D₂ ⋊ (ℤ₂ ∗ ℤ₂)`
/// and the flips `u` behave like free symmetries with `B`-valued moments
/// `C(2k, k) · 1`.
#[test]
fn flips_over_the_diagonal_have_arcsine_moments() {
    let flip = CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)]);
    let ctx = diagonal(&[0, 1], 4);
    let x = ctx.op_lambda(0, &flip).unwrap().sum(&ctx.op_lambda(1, &flip).unwrap()).unwrap();
    for k in 0..=4u64 {
        let moment = ctx.phi_state(&power(&x, 2 * k as usize, &ctx)).unwrap();
        let expected = CMatrix::identity(2, 2) * real(binomial(2 * k, k));
        assert!((moment - expected).norm() < 1e-9);
    }
}

#[test]
fn unitary_letters_are_unitary_on_the_exact_domain() {
    let u = CMatrix::from_diagonal(&CVector::from_vec(vec![real(1.0), real(-1.0)]));
    let ctx = two_point(&[0, 1], 4);
    let l = ctx.op_lambda(0, &u).unwrap();
    let sq = restrict_below_top(&ctx, &l.product(&l).unwrap().difference(&ctx.identity()).unwrap());
    assert!(sq.frobenius() < TOL);
    let report = norm_lower(&ctx, &l, 1, 1).unwrap();
    assert!((report.lower - 1.0).abs() < 1e-12);
}

#[test]
fn non_scalar_phi_state_for_weighted_states() {
    // corner state on M₂ seen through diagonal B: φ(a) = diag(a)
    let spec = AlgebraWithExpectation::diagonal_in_matn(2).unwrap();
    let mut factors = BTreeMap::new();
    factors.insert(3, spec.clone());
    factors.insert(7, spec.clone());
    let ctx = FockContext::build(factors, 2, FockOptions::default()).unwrap();
    let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), real(2.0), real(-3.0), real(4.0)]);
    let phi = ctx.phi_state(&ctx.op_lambda(7, &a).unwrap()).unwrap();
    assert!((phi - spec.apply(&a).unwrap()).norm() < 1e-12);
    let centered = CenteredElement::new(3, &spec, &a - spec.apply(&a).unwrap()).unwrap();
    assert!(ctx.phi_state(&ctx.lambda(&centered).unwrap()).unwrap().norm() < 1e-12);
}
