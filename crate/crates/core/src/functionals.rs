//! The exact-growth functional, its subcritical and full-norm variants, and
//! the sequence bound `μ(h)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::operators::{apply_grad_lk, OperatorParams};
use crate::par;
use crate::radial::quadrature::gauss_legendre;
use crate::radial::{
    weighted_lp_integral, weighted_lp_norm, Backing, RadialFunction, RadialGrid, SpaceParams, WeightedMeasure,
};
use crate::special::ln_exp_p;

/// Exponent above which the integrand is summed in log space.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityParams {
    pub beta: f64,
    pub q: f64,
    pub p: f64,
    pub eta: f64,
}

impl InequalityParams {
    pub fn new(beta: f64, q: f64, p: f64, eta: f64) -> Result<Self> {
        let ip = Self { beta, q, p, eta };
        ip.validate()?;
        Ok(ip)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.beta, self.q, self.p, self.eta].iter().all(|x| x.is_finite());
        if !finite || self.beta < 0.0 || self.q < 0.0 || self.p <= 1.0 || self.eta <= -1.0 {
            return param(format!("inequality parameters out of range: {self:?}"));
        }
        Ok(())
    }

    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// An integral that may exceed the `f64` range. `ln_value` is always
/// meaningful; `value` is `+∞` when `overflowed` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub value: f64,
    pub ln_value: f64,
    pub overflowed: bool,
}

impl FunctionalValue {
    fn from_ln(ln_value: f64, overflowed: bool) -> Self {
        let value = ln_value.exp();
        Self { value, ln_value, overflowed: overflowed || value.is_infinite() }
    }
}

/// `ln ∫ f(|u|) r^η dr` from `ln f`, quadrature as in the layer-cake check:
/// exact on steps, a 10-point Gauss rule in `log r` per cell otherwise.
fn log_integral(u: &RadialFunction, eta: f64, ln_f: impl Fn(f64) -> f64 + Sync) -> Result<f64> {
    log_integral_on(u, eta, None, ln_f)
}

/// As [`log_integral`], on `grid` when given instead of the function's own.
pub(crate) fn log_integral_on(
    u: &RadialFunction,
    eta: f64,
    grid: Option<&RadialGrid>,
    ln_f: impl Fn(f64) -> f64 + Sync,
) -> Result<f64> {
    let m = WeightedMeasure::new(eta);
    let mut terms: Vec<f64> = Vec::new();
    match u.backing() {
        Backing::Steps { edges, values } => {
            for (j, v) in values.iter().enumerate() {
                terms.push(ln_f(v.abs()) + m.of_shell(edges[j], edges[j + 1]).ln());
            }
        }
        _ => {
            let own;
            let grid = match grid {
                Some(g) => g,
                None => {
                    own = u.quadrature_grid()?;
                    &*own
                }
            };
            let x = grid.nodes();
            let (gx, gw) = gauss_legendre(10);
            let half = 0.5 * grid.log_step();
            terms.push(ln_f(u.value(grid.r_min()).abs()) + m.of_ball(grid.r_min())?.ln());
            let cells = par::map_range(grid.n_cells(), |i| {
                let mid = x[i].ln() + half;
                gx.iter()
                    .zip(&gw)
                    .map(|(t, w)| {
                        let s = mid + half * t;
                        let r = s.exp();
                        ln_f(u.value(r).abs()) + (w * half).ln() + (eta + 1.0) * s
                    })
                    .collect::<Vec<f64>>()
            });
            terms.extend(cells.into_iter().flatten());
        }
    }
    Ok(log_sum_exp(&terms))
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

fn exponent_max(u: &RadialFunction, beta: f64, p: f64) -> Result<f64> {
    Ok(beta * u.sup_abs()?.powf(p / (p - 1.0)))
}

/// `∫_0^∞ exp_p(β|u|^{p/(p−1)}) / (1+|u|)^q r^η dr`.
pub fn exact_growth_functional(u: &RadialFunction, ip: &InequalityParams) -> Result<FunctionalValue> {
    ip.validate()?;
    let (p, beta, q, pc) = (ip.p, ip.beta, ip.q, ip.p_conj());
    let overflowed = exponent_max(u, beta, p)? > OVERFLOW_EXPONENT;
    let ln = log_integral(u, ip.eta, |t| ln_exp_p(p, beta * t.powf(pc)) - q * t.ln_1p())?;
    Ok(FunctionalValue::from_ln(ln, overflowed))
}

/// [`exact_growth_functional`] with the quadrature cells of `grid`.
pub fn exact_growth_functional_on(u: &RadialFunction, ip: &InequalityParams, grid: &RadialGrid) -> Result<FunctionalValue> {
    ip.validate()?;
    let (p, beta, q, pc) = (ip.p, ip.beta, ip.q, ip.p_conj());
    let overflowed = exponent_max(u, beta, p)? > OVERFLOW_EXPONENT;
    let ln = log_integral_on(u, ip.eta, Some(grid), |t| ln_exp_p(p, beta * t.powf(pc)) - q * t.ln_1p())?;
    Ok(FunctionalValue::from_ln(ln, overflowed))
}

/// `ln ∫ |u|^p r^η dr` with the quadrature cells of `grid`.
pub fn ln_lp_integral_on(u: &RadialFunction, p: f64, eta: f64, grid: &RadialGrid) -> Result<f64> {
    log_integral_on(u, eta, Some(grid), |t| p * t.ln())
}

/// `∫_0^∞ exp_p(β|u|^{p/(p−1)}) r^η dr`, the denominator-free form.
pub fn subcritical_functional(u: &RadialFunction, beta: f64, p: f64, eta: f64) -> Result<FunctionalValue> {
    exact_growth_functional(u, &InequalityParams::new(beta, 0.0, p, eta)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub functional_value: f64,
    pub ln_functional: f64,
    pub overflowed: bool,
    /// `‖u‖^p_{L^p_η}`.
    pub norm_p: f64,
    /// `functional_value / norm_p`; `None` when `norm_p = 0`.
    pub ratio: Option<f64>,
    pub ln_ratio: Option<f64>,
    /// `‖∇_L^k u‖_{L^p_ν}`.
    pub grad_norm: f64,
    pub params: InequalityParams,
}

pub fn ratio_report(u: &RadialFunction, params: &SpaceParams, ip: &InequalityParams) -> Result<InequalityReport> {
    params.validate()?;
    let f = exact_growth_functional(u, ip)?;
    let norm_p = weighted_lp_integral(u, ip.p, ip.eta)?;
    let grad_norm = grad_norm(u, params)?;
    let (ratio, ln_ratio) = if norm_p > 0.0 {
        (Some(f.value / norm_p), Some(f.ln_value - norm_p.ln()))
    } else {
        (None, None)
    };
    Ok(InequalityReport {
        functional_value: f.value,
        ln_functional: f.ln_value,
        overflowed: f.overflowed,
        norm_p,
        ratio,
        ln_ratio,
        grad_norm,
        params: *ip,
    })
}

/// `‖∇_L^k u‖_{L^p_ν}`.
pub fn grad_norm(u: &RadialFunction, params: &SpaceParams) -> Result<f64> {
    let g = apply_grad_lk(u, params.k, OperatorParams::of(params))?;
    weighted_lp_norm(&g, params.p, params.nu())
}

/// `‖∇_L^k u‖^p_{L^p_ν} + τ‖u‖^p_{L^p_η}`.
pub fn full_norm_constraint(u: &RadialFunction, params: &SpaceParams, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return param(format!("τ must be positive, got {tau}"));
    }
    Ok(grad_norm(u, params)?.powf(params.p) + tau * weighted_lp_integral(u, params.p, params.eta)?)
}

/// Best feasible sequence found for `μ(h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    /// `‖a‖_(e)` of the best sequence, an upper bound for `μ(h)`.
    pub value: f64,
    pub sequence: Vec<f64>,
    /// Value reached from each start.
    pub per_restart: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { restarts: 20, iterations: 10_000, step: 0.5, seed: 0 }
    }
}

/// `μ(h) = inf{‖a‖_(e) : ‖a‖₁ = h, ‖a‖_p ≤ 1}` over nonnegative `a_0..a_{K−1}`,
/// with `‖a‖_(e)^p = Σ a_k^p e^k`.
pub fn mu_h_estimate(h: f64, p: f64, k: usize) -> Result<MuEstimate> {
    mu_h_estimate_with(h, p, k, DescentOptions::default())
}

/// Projected descent in `b_k = a_k e^{k/p}`, where the objective is `Σ b_k^p`
/// and the weights move into the constraints. For a multiplier `ρ` on the
/// `p`-ball, each step is a diagonally scaled gradient step on
/// `Σ b^p (1 + ρ e^{−k})` followed by the exact projection onto
/// `{b ≥ 0, Σ b_k e^{−k/p} = h}` in the same metric; `ρ` is raised or lowered
/// every few steps by the constraint violation. The result is finally pulled
/// toward the flat sequence until `‖a‖_p ≤ 1` holds, so every returned value
/// is attained by a feasible sequence.
pub fn mu_h_estimate_with(h: f64, p: f64, k: usize, opts: DescentOptions) -> Result<MuEstimate> {
    if !(h > 1.0) || !(p > 1.0) {
        return param(format!("need h > 1 and p > 1, got h = {h}, p = {p}"));
    }
    if k < 16 {
        return param(format!("need K ≥ 16, got {k}"));
    }
    let limit = (k as f64).powf((p - 1.0) / p);
    if h >= limit {
        return Err(Error::Infeasible(format!("‖a‖₁ = {h} exceeds K^{{(p−1)/p}} = {limit} on the p-ball")));
    }
    if opts.restarts == 0 {
        return param("need at least one restart");
    }
    let runs = par::map_range(opts.restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        descend(h, p, k, &opts, &mut rng)
    });
    let per_restart: Vec<f64> = runs.iter().map(|(v, _)| *v).collect();
    let (value, sequence) = runs
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one restart");
    Ok(MuEstimate { value, sequence, per_restart })
}

fn descend(h: f64, p: f64, k: usize, opts: &DescentOptions, rng: &mut ChaCha8Rng) -> (f64, Vec<f64>) {
    let c: Vec<f64> = (0..k).map(|i| (-(i as f64) / p).exp()).collect();
    let w: Vec<f64> = (0..k).map(|i| (-(i as f64)).exp()).collect();
    // random start on the weighted simplex
    let mut b: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    let s: f64 = b.iter().zip(&c).map(|(x, ci)| x * ci).sum();
    b.iter_mut().for_each(|x| *x *= h / s);
    let mut rho: f64 = rng.gen_range(0.0f64..12.0).exp();
    let floor = 1e-8 * h;
    let block = 20;
    let mut d = vec![0.0; k];
    let mut y = vec![0.0; k];
    for it in 0..opts.iterations {
        for i in 0..k {
            let scale = 1.0 + rho * w[i];
            let bp2 = b[i].max(floor).powf(p - 2.0);
            let g = if b[i] >= floor { b[i] * bp2 } else { b[i].powf(p - 1.0) };
            d[i] = p * (p - 1.0) * bp2 * scale;
            y[i] = b[i] - opts.step * p * g * scale / d[i];
        }
        project_weighted_simplex(&y, &d, &c, h, &mut b);
        if (it + 1) % block == 0 {
            let viol: f64 = b.iter().zip(&w).map(|(x, wi)| x.powf(p) * wi).sum::<f64>() - 1.0;
            rho = (rho * (2.0 * viol.clamp(-1.0, 1.0)).exp()).clamp(1e-12, 1e40);
        }
    }
    let mut a: Vec<f64> = b.iter().zip(&c).map(|(x, ci)| x * ci).collect();
    repair(&mut a, h, p);
    let value = a.iter().enumerate().map(|(i, x)| x.powf(p) * (i as f64).exp()).sum::<f64>().powf(1.0 / p);
    (value, a)
}

/// `argmin Σ d_k (x_k − y_k)²` over `{x ≥ 0, Σ c_k x_k = h}`:
/// `x_k = max(0, y_k − λ c_k / d_k)`, with `λ` found by sweeping the sorted
/// breakpoints `y_k d_k / c_k`, between which the constraint is linear in `λ`.
fn project_weighted_simplex(y: &[f64], d: &[f64], c: &[f64], h: f64, out: &mut [f64]) {
    let n = y.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let bp: Vec<f64> = (0..n).map(|i| y[i] * d[i] / c[i]).collect();
    idx.sort_by(|&i, &j| bp[j].total_cmp(&bp[i]));
    // with the active set {bp > λ}: Σ c y − λ Σ c²/d = h
    let (mut sy, mut sc) = (0.0, 0.0);
    let mut lam = 0.0;
    for (pos, &i) in idx.iter().enumerate() {
        sy += c[i] * y[i];
        sc += c[i] * c[i] / d[i];
        lam = (sy - h) / sc;
        let next = idx.get(pos + 1).map_or(f64::NEG_INFINITY, |&j| bp[j]);
        if lam >= next {
            break;
        }
    }
    for i in 0..n {
        out[i] = (y[i] - lam * c[i] / d[i]).max(0.0);
    }
}

/// Mixes `a` with the flat sequence `h/K` until `Σ a^p ≤ 1`, keeping `Σ a = h`.
fn repair(a: &mut [f64], h: f64, p: f64) {
    let sum_p = |a: &[f64]| a.iter().map(|x| x.powf(p)).sum::<f64>();
    if sum_p(a) <= 1.0 {
        return;
    }
    let flat = h / a.len() as f64;
    let mix = |t: f64, a: &[f64]| a.iter().map(|x| (1.0 - t) * x + t * flat).collect::<Vec<f64>>();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if sum_p(&mix(mid, a)) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let fixed = mix(hi, a);
    a.copy_from_slice(&fixed);
}
