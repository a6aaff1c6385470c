mod common;

use exactgrowth::functionals::*;
use exactgrowth::radial::SpaceParams;
use exactgrowth::special::beta_0k;
use exactgrowth::symmetrize::{equimeasurability_check, symmetrize, PsiTag};

/// `μ(h)` from the optimality conditions `a_k = (τ / (p (e^k + ρ)))^{1/(p−1)}`,
/// with `τ` fixed by `Σ a = h` and `ρ ≥ 0` by `Σ a^p = 1`.
fn kkt_mu(h: f64, p: f64, k: usize) -> f64 {
    let seq = |rho: f64| -> Vec<f64> {
        let v: Vec<f64> = (0..k).map(|i| (1.0 / ((i as f64).exp() + rho)).powf(1.0 / (p - 1.0))).collect();
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x * h / s).collect()
    };
    let sum_p = |a: &[f64]| a.iter().map(|x| x.powf(p)).sum::<f64>();
    let a = if sum_p(&seq(0.0)) <= 1.0 {
        seq(0.0)
    } else {
        let (mut lo, mut hi) = (-40.0f64, 80.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sum_p(&seq(mid.exp())) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        seq(hi.exp())
    };
    a.iter().enumerate().map(|(i, x)| x.powf(p) * (i as f64).exp()).sum::<f64>().powf(1.0 / p)
}

#[test]
fn descent_matches_the_optimality_conditions() {
    for h in [1.5, 2.0, 2.5, 3.0, 3.5] {
        let est = mu_h_estimate(h, 2.0, 64).unwrap();
        let oracle = kkt_mu(h, 2.0, 64);
        assert!(est.value >= oracle * (1.0 - 1e-9), "h={h}: below the infimum");
        assert!(est.value <= oracle * 1.01, "h={h}: {} vs {oracle}", est.value);
    }
    for p in [1.5, 3.0] {
        let est = mu_h_estimate(1.8, p, 64).unwrap();
        let oracle = kkt_mu(1.8, p, 64);
        assert!(est.value <= oracle * 1.02 && est.value >= oracle * (1.0 - 1e-9), "p={p}: {} vs {oracle}", est.value);
    }
}

#[test]
fn mu_grows_with_h_and_stays_in_the_window() {
    let mut last = 0.0;
    for h in [1.5f64, 2.0, 2.5, 3.0, 3.5] {
        let v = mu_h_estimate(h, 2.0, 64).unwrap().value;
        assert!(v >= last);
        last = v;
        let scaled = v * h * (-h * h / 2.0).exp();
        assert!((0.1..=10.0).contains(&scaled), "h={h}: {scaled}");
    }
}

#[test]
fn same_seed_same_answer() {
    let a = mu_h_estimate(2.0, 2.0, 32).unwrap();
    let b = mu_h_estimate(2.0, 2.0, 32).unwrap();
    assert_eq!(a, b);
}

#[test]
fn functional_is_monotone_in_beta_and_below_the_undamped_form() {
    for u in common::corpus(21, 10) {
        let mut last = 0.0;
        for beta in [0.0, 0.5, 1.0, 2.0] {
            let ip = InequalityParams::new(beta, 2.0, 2.0, 1.0).unwrap();
            let v = exact_growth_functional(&u, &ip).unwrap().value;
            assert!(v >= last);
            last = v;
            let undamped = subcritical_functional(&u, beta, 2.0, 1.0).unwrap().value;
            assert!(v <= undamped * (1.0 + 1e-12));
        }
    }
}

#[test]
fn functional_is_rearrangement_invariant() {
    let ip = InequalityParams::new(1.5, 2.0, 2.0, 3.0).unwrap();
    for u in common::corpus(22, 10) {
        let a = exact_growth_functional(&u, &ip).unwrap().value;
        let star = symmetrize(&u, 3.0, 3.0).unwrap().to_function();
        let b = exact_growth_functional(&star, &ip).unwrap().value;
        assert!((a - b).abs() <= 1e-6 * a.max(1e-300), "{a} vs {b}");
        let (l, r) = equimeasurability_check(&u, 3.0, 3.0, PsiTag::ExactGrowth { p: 2.0, beta: 1.5, q: 2.0 }).unwrap();
        assert!((l - a).abs() <= 1e-12 * a.max(1e-300) && (r - b).abs() <= 1e-12 * b.max(1e-300));
    }
}

#[test]
fn report_and_constraint_on_a_normalized_profile() {
    let params = SpaceParams::critical(2, 2.0, 3.0, 2.0);
    let beta = beta_0k(&params).unwrap();
    let grid = std::sync::Arc::new(exactgrowth::radial::RadialGrid::with_defaults(1.0, 4096).unwrap());
    let u = exactgrowth::radial::RadialFunction::from_fn(grid, |r| (1.0 - r * r).powi(3));
    let g = grad_norm(&u, &params).unwrap();
    let u = u.scale(1.0 / g);
    let ip = InequalityParams::new(beta, 2.0, 2.0, 3.0).unwrap();
    let rep = ratio_report(&u, &params, &ip).unwrap();
    assert!((rep.grad_norm - 1.0).abs() < 1e-10);
    assert!(rep.ratio.unwrap().is_finite());
    let tau = 0.5;
    let c = full_norm_constraint(&u, &params, tau).unwrap();
    let scaled = u.scale(c.powf(-1.0 / params.p));
    assert!((full_norm_constraint(&scaled, &params, tau).unwrap() - 1.0).abs() < 1e-10);
    let zero = u.scale(0.0);
    let rep = ratio_report(&zero, &params, &ip).unwrap();
    assert_eq!(rep.norm_p, 0.0);
    assert!(rep.ratio.is_none());
}
