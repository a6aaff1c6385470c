//! Command drivers. Each returns a table for the CSV and a JSON value for
//! the summary; nothing here touches the file system.

use std::sync::Arc;

use exactgrowth::corpus;
use exactgrowth::extremal::{sharpness_sweep_with, MoserSequenceParams, SweepOptions};
use exactgrowth::functionals::{mu_h_estimate_with, DescentOptions};
use exactgrowth::ode::{constrained_maximize, fixed_point_solve, ProblemSpec};
use exactgrowth::operators::{apply_grad_lk, inverse_grad_lk, OperatorParams};
use exactgrowth::radial::{RadialFunction, RadialGrid, SpaceParams};
use exactgrowth::special::{beta_0k, c1m_closed, coefficient_table, exp_p, verify_beta_identities};
use exactgrowth::symmetrize::{equimeasurability_check, maximal_norm_bound, symmetrize, PsiTag};
use exactgrowth::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{CommandKind, ExperimentConfig, OdeMethod};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub results: Value,
    /// Set when an iteration stopped without meeting its tolerance.
    pub nonconverged: bool,
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e7)`.
fn f(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e7).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Runs the command. The sweep re-checks the full hypotheses first; the
/// other commands check what they use inside the library calls.
pub fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    if cfg.command == CommandKind::Sweep {
        cfg.space.resolve().check_exact_growth()?;
    }
    match cfg.command {
        CommandKind::Constants => constants(cfg),
        CommandKind::Symmetrize => symmetrize_cmd(cfg),
        CommandKind::Verify => verify(cfg),
        CommandKind::Sweep => sweep(cfg),
        CommandKind::MuH => mu_h(cfg),
        CommandKind::SolveOde => solve_ode(cfg),
    }
}

fn constants(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let s = cfg.space.resolve();
    let beta = beta_0k(&s)?;
    let (lhs, rhs) = verify_beta_identities(&s)?;
    let max_m = (s.k / 2).max(1);
    let table_c = coefficient_table(s.theta, s.gamma, max_m);
    let mut table = Table::new(&["m", "c1m_recursion", "c1m_closed"]);
    for m in 1..=max_m {
        let closed = c1m_closed(s.theta, s.gamma, m).map(f).unwrap_or_default();
        table.push(vec![m.to_string(), f(table_c.get(1, m)), closed]);
    }
    let results = json!({
        "beta_0k": beta,
        "identity_lhs": lhs,
        "identity_rhs": rhs,
        "p_conj": s.p_conj(),
        "nu": s.nu(),
        "space": s,
    });
    Ok(Outcome { table, results, nonconverged: false })
}

fn symmetrize_cmd(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let (eta, nu) = (cfg.space.eta, cfg.params.nu);
    let p = cfg.space.p;
    let alpha = cfg.params.alpha.unwrap_or(eta);
    let fns = corpus::corpus(cfg.seed, cfg.params.functions);
    let mut table = Table::new(&["index", "kind", "layer_cake_lhs", "layer_cake_rhs", "relative_gap", "maximal_lhs", "maximal_bound"]);
    let (mut worst_gap, mut worst_maximal) = (0.0f64, 0.0f64);
    for (i, u) in fns.iter().enumerate() {
        let kind = if matches!(u.backing(), exactgrowth::radial::Backing::Steps { .. }) { "steps" } else { "smooth" };
        let (l, r) = equimeasurability_check(u, eta, nu, PsiTag::Power { p })?;
        let gap = (l - r).abs() / l.abs().max(f64::MIN_POSITIVE);
        let s = symmetrize(u, eta, nu)?;
        let (ml, mb) = maximal_norm_bound(&s, p, alpha)?;
        worst_gap = worst_gap.max(gap);
        worst_maximal = worst_maximal.max(ml / mb);
        table.push(vec![i.to_string(), kind.into(), f(l), f(r), f(gap), f(ml), f(mb)]);
    }
    let results = json!({
        "functions": fns.len(),
        "eta": eta,
        "nu": nu,
        "alpha": alpha,
        "worst_relative_gap": worst_gap,
        "worst_maximal_ratio": worst_maximal,
    });
    Ok(Outcome { table, results, nonconverged: false })
}

/// Admissible `(k, p, θ, γ, η)` for the constant identities, by rejection.
pub fn random_admissible(rng: &mut ChaCha8Rng) -> SpaceParams {
    loop {
        let k = rng.gen_range(1..=8);
        let p = rng.gen_range(1.2..4.0);
        let eta = rng.gen_range(-0.5..5.0);
        let gamma = rng.gen_range(1.2..6.0);
        let theta = gamma - 2.0 + rng.gen_range(0.05..1.5);
        let s = SpaceParams { k, p, alphas: vec![0.0; k + 1], theta, gamma, eta };
        if verify_beta_identities(&s).is_ok() {
            return s;
        }
    }
}

fn verify(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = Table::new(&["check", "worst", "tolerance", "pass"]);
    let mut all = true;
    let mut record = |name: &str, worst: f64, tol: f64| {
        let pass = worst <= tol;
        all &= pass;
        table.push(vec![name.into(), f(worst), f(tol), pass.to_string()]);
    };

    let mut worst = 0.0f64;
    for p in [2.0, 3.0, 4.0, 5.0] {
        for i in 0..1000 {
            let t = 50.0 * i as f64 / 999.0;
            let mut partial = 0.0;
            let mut term = 1.0;
            for j in 0..=(p as usize - 2) {
                if j > 0 {
                    term *= t / j as f64;
                }
                partial += term;
            }
            let want = t.exp() - partial;
            worst = worst.max((exp_p(p, t) - want).abs() / t.exp());
        }
    }
    record("exp_p_closed_form", worst, 1e-10);

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let s = random_admissible(&mut rng);
        let (a, b) = verify_beta_identities(&s)?;
        worst = worst.max((a - b).abs() / a.abs());
    }
    record("beta_identities", worst, 1e-12);

    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 20 {
        let gamma = rng.gen_range(1.5..6.0);
        let theta = gamma - 2.0 + rng.gen_range(0.05..0.5);
        let t = coefficient_table(theta, gamma, 8);
        let closed: Result<Vec<f64>, _> = (1..=8).map(|m| c1m_closed(theta, gamma, m)).collect();
        if let Ok(c) = closed {
            for (m, cm) in c.iter().enumerate() {
                worst = worst.max((t.get(1, m + 1) - cm).abs() / cm.abs());
            }
            done += 1;
        }
    }
    record("c1m_recursion", worst, 1e-12);

    let op = OperatorParams::new(2.0, 3.0);
    let grid = Arc::new(RadialGrid::with_defaults(cfg.grid.radius, cfg.grid.cells)?);
    let r_max = cfg.grid.radius;
    let mut worst = 0.0f64;
    for k in 1..=4 {
        let a = rng.gen_range(0.5..2.0);
        let v = RadialFunction::from_fn(grid.clone(), move |r| (-a * r * r / (r_max * r_max)).exp() * (1.0 - r / r_max));
        let u = inverse_grad_lk(&v, k, op, r_max)?;
        let back = apply_grad_lk(&u, k, op)?;
        let (vs, bs) = (v.samples().unwrap(), back.samples().unwrap());
        let sup = vs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = vs.iter().zip(&bs).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        worst = worst.max(err / sup);
    }
    record("operator_round_trip", worst, 1e-5);

    let results = json!({ "all_pass": all, "checks": table.rows.len() });
    Ok(Outcome { table, results, nonconverged: false })
}

fn sweep(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let s = cfg.space.resolve();
    let beta0 = beta_0k(&s)?;
    let q = cfg.params.q.resolve(s.p).map_err(Error::Parameter)?;
    let beta = cfg.params.beta_mult * beta0;
    let base = MoserSequenceParams::new(cfg.params.n[0], cfg.params.epsilon, cfg.grid.radius, s)?;
    let opts = SweepOptions { mode: cfg.params.mode, n_cells: cfg.grid.cells };
    let t = sharpness_sweep_with(beta, q, &cfg.params.n, &base, opts)?;
    let mut table = Table::new(&["n", "ratio", "ln_ratio", "overflowed", "a_measured", "grad_norm"]);
    for r in &t.rows {
        table.push(vec![r.n.to_string(), f(r.ratio), f(r.ln_ratio), r.overflowed.to_string(), f(r.a_measured), f(r.grad_norm)]);
    }
    let results = json!({
        "beta_0k": beta0,
        "beta": beta,
        "q": q,
        "slope": t.slope,
        "expected_slope_subcritical": 1.0 - q * (base.space.p - 1.0) / base.space.p,
        "rows": t.rows,
    });
    Ok(Outcome { table, results, nonconverged: false })
}

fn mu_h(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let p = cfg.space.p;
    let opts = DescentOptions {
        restarts: cfg.params.restarts,
        iterations: cfg.params.iterations,
        seed: cfg.seed,
        ..DescentOptions::default()
    };
    let mut table = Table::new(&["h", "mu", "window"]);
    let mut rows = Vec::new();
    for &h in &cfg.params.h {
        let est = mu_h_estimate_with(h, p, cfg.params.terms, opts)?;
        // the e^{h²/2}/h scale is the p = 2 asymptotic
        let window = if p == 2.0 { est.value * h * (-h * h / 2.0).exp() } else { f64::NAN };
        table.push(vec![f(h), f(est.value), if window.is_nan() { String::new() } else { f(window) }]);
        rows.push(json!({ "h": h, "mu": est.value, "per_restart": est.per_restart }));
    }
    Ok(Outcome { table, results: json!({ "p": p, "terms": cfg.params.terms, "rows": rows }), nonconverged: false })
}

/// Registered nonlinearities: `linear-exp` is `c·t·e^{−r}`, `cubic-exp` is
/// `c·t³·e^{−r}`.
fn nonlinearity(name: &str, c: f64) -> Result<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>, Error> {
    match name {
        "linear-exp" => Ok(Arc::new(move |r: f64, t: f64| c * t * (-r).exp())),
        "cubic-exp" => Ok(Arc::new(move |r: f64, t: f64| c * t * t * t * (-r).exp())),
        other => Err(Error::Unregistered(format!("nonlinearity {other:?}"))),
    }
}

fn solve_ode(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let pr = &cfg.params;
    let nl = nonlinearity(&pr.nonlinearity, pr.coefficient)?;
    let spec = ProblemSpec::new(cfg.space.eta, move |r, t| nl(r, t), true, pr.growth_beta)?;
    let r_max = cfg.grid.radius;
    let (report, extra) = match pr.method {
        OdeMethod::Maximize => {
            let m = constrained_maximize(&spec, r_max, cfg.seed)?;
            let extra = json!({
                "objective": m.objective,
                "lambda_integral": m.lambda_integral,
                "weak_residual": m.weak_residual,
                "degenerate": m.degenerate,
            });
            (m.report, extra)
        }
        OdeMethod::FixedPoint => {
            let grid = Arc::new(RadialGrid::with_defaults(r_max, cfg.grid.cells)?);
            let init = RadialFunction::from_fn(grid, move |r| 1.0 - (r / r_max).powi(2));
            (fixed_point_solve(&spec, pr.lambda, &init, r_max)?, json!({}))
        }
    };
    let grid = report.solution.quadrature_grid()?;
    let us = report.solution.samples().unwrap_or_default();
    let mut table = Table::new(&["r", "u"]);
    for (i, (&r, &u)) in grid.nodes().iter().zip(&us).enumerate() {
        if i % 16 == 0 || i + 1 == us.len() {
            table.push(vec![f(r), f(u)]);
        }
    }
    let results = json!({
        "eta": spec.eta,
        "theta": spec.theta,
        "lambda": report.lambda,
        "iterations": report.iterations,
        "residual": report.residual,
        "converged": report.converged,
        "boundary_checks": report.boundary_checks,
        "boundary_checks_relative": report.boundary_checks.relative(),
        "details": extra,
    });
    Ok(Outcome { table, results, nonconverged: !report.converged })
}
