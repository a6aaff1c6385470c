//! One PASS/FAIL line per acceptance criterion. Every criterion runs even
//! when an earlier one fails; the test fails at the end if any did.

use std::fs;
use std::sync::Arc;
use std::time::{Duration, Instant};

use exactgrowth::corpus;
use exactgrowth::extremal::{sharpness_sweep, MoserSequenceParams, SweepTable, DEFAULT_N_LIST};
use exactgrowth::functionals::{mu_h_estimate_with, DescentOptions};
use exactgrowth::ode::{biharmonic_inverse, boundary_checks, constrained_maximize, ProblemSpec};
use exactgrowth::operators::{
    apply_derivative, apply_grad_lk, apply_l, inverse_grad_lk, inverse_l, OperatorParams,
};
use exactgrowth::radial::stencil::StencilSpec;
use exactgrowth::radial::{weighted_lp_norm, RadialFunction, RadialGrid, SpaceParams};
use exactgrowth::special::{
    beta_0k, c1m_closed, coefficient_table, exp_p, hardy_constant_chain, hardy_constant_first_order,
    hardy_constant_second_order, verify_beta_identities,
};
use exactgrowth::symmetrize::{equimeasurability_check, maximal_norm_bound, symmetrize, PsiTag};
use exactgrowth_cli::config::ExperimentConfig;
use exactgrowth_cli::run::random_admissible;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn exp_p_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    for p in [2u32, 3, 4, 5] {
        for i in 0..1000 {
            let t = 50.0 * i as f64 / 999.0;
            let (mut partial, mut term) = (0.0, 1.0);
            for j in 0..=(p - 2) {
                if j > 0 {
                    term *= t / j as f64;
                }
                partial += term;
            }
            worst = worst.max((exp_p(p as f64, t) - (t.exp() - partial)).abs() / t.exp());
        }
    }
    outcome(worst <= 1e-10, format!("worst scaled error {worst:.2e} (tol 1e-10)"))
}

fn beta_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let s = random_admissible(&mut rng);
        let (a, b) = verify_beta_identities(&s).unwrap();
        worst = worst.max(rel(a, b));
    }
    outcome(worst <= 1e-12, format!("worst relative gap {worst:.2e} over 50 tuples (tol 1e-12)"))
}

fn c1m_recursion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut done) = (0.0f64, 0);
    while done < 20 {
        let gamma = rng.gen_range(1.5..6.0);
        let theta = gamma - 2.0 + rng.gen_range(0.05..0.5);
        let closed: Result<Vec<f64>, _> = (1..=8).map(|m| c1m_closed(theta, gamma, m)).collect();
        let Ok(closed) = closed else { continue };
        let table = coefficient_table(theta, gamma, 8);
        for (m, c) in closed.iter().enumerate() {
            worst = worst.max(rel(table.get(1, m + 1), *c));
        }
        done += 1;
    }
    outcome(worst <= 1e-12, format!("worst relative gap {worst:.2e} for m <= 8 (tol 1e-12)"))
}

const EXPONENTS: [f64; 3] = [0.0, 1.0, 3.0];

fn equimeasurability() -> Outcome {
    let fns = corpus::corpus(41, 100);
    let mut worst = 0.0f64;
    for u in &fns {
        for eta in EXPONENTS {
            for nu in EXPONENTS {
                for psi in [PsiTag::Power { p: 2.0 }, PsiTag::ExactGrowth { p: 2.0, beta: 1.0, q: 2.0 }] {
                    let (l, r) = equimeasurability_check(u, eta, nu, psi).unwrap();
                    worst = worst.max(rel(l, r));
                }
            }
        }
    }
    outcome(worst <= 1e-6, format!("worst relative gap {worst:.2e} over 100 functions x 9 pairs (tol 1e-6)"))
}

fn maximal_bound() -> Outcome {
    let fns = corpus::corpus(41, 100);
    let mut worst = 0.0f64;
    for u in &fns {
        for eta in EXPONENTS {
            for nu in EXPONENTS {
                let s = symmetrize(u, eta, nu).unwrap();
                for p in [1.5, 2.0, 4.0] {
                    for alpha in [-0.5, 0.0, nu * p + p - 1.5] {
                        let (lhs, bound) = maximal_norm_bound(&s, p, alpha).unwrap();
                        worst = worst.max(lhs / bound);
                    }
                }
            }
        }
    }
    outcome(worst <= 1.05, format!("worst lhs/bound {worst:.4} (allowed 1.05)"))
}

/// Smooth data vanishing at `R` with a random shape.
fn random_data(rng: &mut ChaCha8Rng, grid: &Arc<RadialGrid>) -> RadialFunction {
    let r_max = grid.r_max();
    let (a, b, c) = (rng.gen_range(0.3..1.5), rng.gen_range(-0.8..0.8), rng.gen_range(1.0..5.0));
    RadialFunction::from_fn(grid.clone(), move |r| {
        let x = r / r_max;
        a * (1.0 - x) * (1.0 + b * (c * x).sin())
    })
}

fn hardy_constants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = Arc::new(RadialGrid::with_defaults(1.0, 4096).unwrap());
    let mut worst = [0.0f64; 3];
    for _ in 0..50 {
        let p = rng.gen_range(1.5..3.0);
        let gamma = rng.gen_range(1.5..4.0);
        let d = rng.gen_range(0.2..1.0);
        let theta = gamma - 2.0 + d;
        let op = OperatorParams::new(theta, gamma);
        let v = random_data(&mut rng, &grid);
        let u = inverse_l(&v, op, 1.0).unwrap();

        // first order: u(R) = 0 and α − p + 1 > 0
        let a1 = p - 1.0 + rng.gen_range(0.2..2.0);
        let du = apply_derivative(&u, StencilSpec::default()).unwrap();
        let lhs = weighted_lp_norm(&u, p, a1 - p).unwrap();
        let rhs = hardy_constant_first_order(a1, p).unwrap() * weighted_lp_norm(&du, p, a1).unwrap();
        worst[0] = worst[0].max(lhs / rhs);

        // second order: −1 < α < p(γ−1) − 1
        let a2 = -1.0 + rng.gen_range(0.1..0.9) * p * (gamma - 1.0);
        let lhs = weighted_lp_norm(&u, p, a2).unwrap();
        let rhs = hardy_constant_second_order(gamma, a2, p).unwrap() * weighted_lp_norm(&v, p, p * d + a2).unwrap();
        worst[1] = worst[1].max(lhs / rhs);

        // chained, j = 2 and 3: 0 < α + (i−1)dp + 1 < p(γ−1) for i < j
        let j = rng.gen_range(2..=3usize);
        let room = p * (gamma - 1.0) - (j - 2) as f64 * d * p;
        if room <= 0.2 {
            continue;
        }
        let a3 = -1.0 + rng.gen_range(0.1..0.9) * room;
        let w = inverse_grad_lk(&v, 2 * j, op, 1.0).unwrap();
        let lw = apply_l(&w, op).unwrap();
        let lhs = weighted_lp_norm(&lw, p, a3).unwrap();
        let rhs = hardy_constant_chain(theta, gamma, a3, p, j).unwrap()
            * weighted_lp_norm(&v, p, a3 + (j - 1) as f64 * d * p).unwrap();
        worst[2] = worst[2].max(lhs / rhs);
    }
    let pass = worst.iter().all(|&x| x <= 1.05);
    outcome(
        pass,
        format!("worst lhs/bound: first order {:.3}, second order {:.3}, chain {:.3} (allowed 1.05)", worst[0], worst[1], worst[2]),
    )
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grid = Arc::new(RadialGrid::with_defaults(1.0, 4096).unwrap());
    let op = OperatorParams::of(&SpaceParams::critical(2, 2.0, 3.0, 3.0));
    let mut worst = 0.0f64;
    for k in 1..=4 {
        for _ in 0..10 {
            let v = random_data(&mut rng, &grid);
            let u = inverse_grad_lk(&v, k, op, 1.0).unwrap();
            let back = apply_grad_lk(&u, k, op).unwrap();
            let (vs, bs) = (v.samples().unwrap(), back.samples().unwrap());
            let sup = vs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let err = vs.iter().zip(&bs).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            worst = worst.max(err / sup);
        }
    }
    outcome(worst <= 1e-5, format!("worst relative sup error {worst:.2e} (tol 1e-5)"))
}

fn sweep(beta: f64, q: f64) -> SweepTable {
    let s = SpaceParams::critical(2, 2.0, 3.0, 3.0);
    let base = MoserSequenceParams::new(DEFAULT_N_LIST[0], 0.1, 1.0, s).unwrap();
    sharpness_sweep(beta, q, &DEFAULT_N_LIST, &base).unwrap()
}

fn sharpness_slopes() -> Outcome {
    let beta = beta_0k(&SpaceParams::critical(2, 2.0, 3.0, 3.0)).unwrap();
    let mut pass = beta == 16.0;
    let mut parts = Vec::new();
    for q in [0.0, 0.5, 1.0, 2.0] {
        let want = if q == 2.0 { 0.0 } else { 1.0 - q / 2.0 };
        let slope = sweep(beta, q).slope;
        let ok = (slope - want).abs() <= 0.15;
        pass &= ok;
        parts.push(format!("q={q}: {slope:.3} vs {want:.2}{}", if ok { "" } else { " (miss)" }));
    }
    outcome(pass, parts.join(", "))
}

fn supercritical() -> Outcome {
    let beta = 16.0;
    let base = sweep(beta, 2.0);
    let sup = sweep(1.1 * beta, 2.0);
    let increasing = sup.rows.windows(2).all(|w| w[1].ln_ratio > w[0].ln_ratio);
    let last = sup.rows.len() - 1;
    let factor = (sup.rows[last].ln_ratio - base.rows[last].ln_ratio).exp();
    outcome(
        increasing && factor >= 10.0,
        format!("factor over baseline at n=1e6: {factor:.3} (need >= 10), strictly increasing: {increasing}"),
    )
}

fn mu_h_window() -> Outcome {
    let opts = DescentOptions { restarts: 20, iterations: 10_000, seed: 10, ..DescentOptions::default() };
    let mut parts = Vec::new();
    let mut pass = true;
    for h in [1.5, 2.0, 2.5, 3.0, 3.5] {
        let mu = mu_h_estimate_with(h, 2.0, 64, opts).unwrap().value;
        let w = mu * h * (-h * h / 2.0).exp();
        pass &= (0.1..=10.0).contains(&w);
        parts.push(format!("h={h}: {w:.3}"));
    }
    outcome(pass, format!("{} (window [0.1, 10])", parts.join(", ")))
}

/// Coefficients of `(1 − (r/R)²)³` in powers of `r²`.
fn bump(r: f64) -> Vec<f64> {
    let s = 1.0 / (r * r);
    vec![1.0, -3.0 * s, 3.0 * s * s, -s * s * s]
}

/// `Δ_θ Σ a_j r^{2j} = −Σ 2j(2j−1+θ) a_j r^{2j−2}`.
fn lap(a: &[f64], theta: f64) -> Vec<f64> {
    (1..a.len()).map(|j| -(2.0 * j as f64) * (2.0 * j as f64 - 1.0 + theta) * a[j]).collect()
}

fn poly(a: &[f64], r: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, c| acc * r * r + c)
}

fn ode_manufactured() -> Outcome {
    let mut worst = [0.0f64; 3];
    for (theta, r) in [(3.0, 1.0), (2.5, 2.0), (4.0, 0.5)] {
        let grid = Arc::new(RadialGrid::with_defaults(r, 4096).unwrap());
        let a = bump(r);
        let g2 = lap(&lap(&a, theta), theta);
        let g = RadialFunction::from_fn(grid.clone(), move |x| poly(&g2, x));
        let u = biharmonic_inverse(&g, theta, r).unwrap();
        let err = grid.nodes().iter().map(|&x| (u.value(x) - poly(&a, x)).abs()).fold(0.0, f64::max);
        let b = boundary_checks(&u, theta).unwrap().relative();
        worst[0] = worst[0].max(err);
        worst[1] = worst[1].max(b[0]);
        worst[2] = worst[2].max(b[1]);
    }
    outcome(
        worst[0] <= 1e-5 && worst[1] < 1e-3 && worst[2] < 1e-3,
        format!(
            "sup error {:.2e} (tol 1e-5), second-derivative relation {:.2e}, third derivative {:.2e} (tol 1e-3)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn maximizer() -> Outcome {
    let spec = ProblemSpec::new(3.0, |r, t| 2.0 * t * (-r).exp(), true, 1.0).unwrap();
    let m = constrained_maximize(&spec, 8.0, 12).unwrap();
    let gap = rel(m.report.lambda, m.lambda_integral);
    let pass = m.report.converged && gap <= 1e-6 && m.weak_residual < 1e-4;
    outcome(
        pass,
        format!(
            "converged {}, lambda {:.6}, identity gap {gap:.2e} (tol 1e-6), weak residual {:.2e} (tol 1e-4)",
            m.report.converged, m.report.lambda, m.weak_residual
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let text = format!(
        r#"{{"command": "mu-h", "space": {{"p": 2}}, "params": {{"h": [1.5, 2.5], "restarts": 4, "iterations": 2000}}, "output_path": {:?}, "seed": 99}}"#,
        out.to_str().unwrap()
    );
    let run = || {
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(exactgrowth_cli::run(&cfg).unwrap(), 0);
        fs::read(out.with_extension("json")).unwrap()
    };
    let (a, b) = (run(), run());
    outcome(a == b, format!("two runs, {} bytes each, identical: {}", a.len(), a == b))
}

#[test]
fn acceptance() {
    let criteria: [(&str, Duration, fn() -> Outcome); 13] = [
        ("exp_p closed form", Duration::from_secs(1), exp_p_closed_form),
        ("beta identities", Duration::from_secs(1), beta_identities),
        ("c1m recursion vs closed form", Duration::from_secs(1), c1m_recursion),
        ("equimeasurability", Duration::from_secs(30), equimeasurability),
        ("maximal-function bound", Duration::from_secs(30), maximal_bound),
        ("Hardy constants", Duration::from_secs(60), hardy_constants),
        ("operator round trip", Duration::from_secs(60), round_trip),
        ("sharpness slopes", Duration::from_secs(300), sharpness_slopes),
        ("supercritical blow-up", Duration::from_secs(300), supercritical),
        ("mu(h) window", Duration::from_secs(120), mu_h_window),
        ("ODE manufactured solution", Duration::from_secs(30), ode_manufactured),
        ("maximizer self-consistency", Duration::from_secs(120), maximizer),
        ("CLI determinism", Duration::from_secs(60), determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        let status = if pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {:>2} {name}: {} [{:.2}s, budget {}s]", i + 1, o.detail, took.as_secs_f64(), budget.as_secs());
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
