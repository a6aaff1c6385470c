//! The fourth-order radial problem `Δ_θ²u = λ^{−1} f(r,u) r^{η−θ}` on
//! `(0, R)` with Navier conditions, `Δ_θ = L_{θ,θ}`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{hypothesis, param, Result};
use crate::operators::{apply_l, cumulative_power, inverse_l_on, OperatorParams};
use crate::radial::quadrature::gauss_legendre;
use crate::radial::{RadialFunction, RadialGrid, DEFAULT_CELLS};

pub type Nonlinearity = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Nodes of the per-point rule for `F(r,t) = ∫_0^t f(r,s) ds`.
const PRIMITIVE_NODES: usize = 64;

#[derive(Clone)]
pub struct ProblemSpec {
    pub eta: f64,
    /// `(η+3)/2`.
    pub theta: f64,
    pub nonlinearity: Nonlinearity,
    /// Whether `f(r,·)` is claimed odd; checked by [`ProblemSpec::validate`].
    pub odd: bool,
    /// `β` in `|f(r,t)| ≤ C(e^{βt²} − 1)`.
    pub growth_beta: f64,
    rule: Arc<(Vec<f64>, Vec<f64>)>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("eta", &self.eta)
            .field("theta", &self.theta)
            .field("odd", &self.odd)
            .field("growth_beta", &self.growth_beta)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(eta: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, odd: bool, growth_beta: f64) -> Result<Self> {
        if !(eta > 1.0) {
            return hypothesis(format!("eta must exceed 1, got {eta}"));
        }
        if !(growth_beta > 0.0) {
            return param(format!("growth beta must be positive, got {growth_beta}"));
        }
        Ok(Self {
            eta,
            theta: (eta + 3.0) / 2.0,
            nonlinearity: Arc::new(f),
            odd,
            growth_beta,
            rule: Arc::new(gauss_legendre(PRIMITIVE_NODES)),
        })
    }

    pub fn op(&self) -> OperatorParams {
        OperatorParams::new(self.theta, self.theta)
    }

    pub fn f(&self, r: f64, t: f64) -> f64 {
        (self.nonlinearity)(r, t)
    }

    /// `F(r,t) = ∫_0^t f(r,s) ds`.
    pub fn primitive(&self, r: f64, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let h = 0.5 * t;
        let (x, w) = &*self.rule;
        h * x.iter().zip(w).map(|(x, w)| w * self.f(r, h * (x + 1.0))).sum::<f64>()
    }

    /// Smallest `C` with `|f(r,t)| ≤ C(e^{βt²} − 1)` on a sample of
    /// `r ∈ (0, r_max]`, `0 < |t| ≤ 4`.
    pub fn growth_constant(&self, r_max: f64) -> f64 {
        let mut c = 0.0f64;
        for i in 1..=64 {
            let r = r_max * i as f64 / 64.0;
            for j in 1..=200 {
                let t = 4.0 * j as f64 / 200.0;
                let bound = (self.growth_beta * t * t).exp_m1();
                c = c.max(self.f(r, t).abs() / bound).max(self.f(r, -t).abs() / bound);
            }
        }
        c
    }

    /// Checks `θ = (η+3)/2`, oddness when claimed and the growth bound.
    pub fn validate(&self, seed: u64) -> Result<()> {
        if (self.theta - (self.eta + 3.0) / 2.0).abs() > 1e-12 {
            return hypothesis(format!("theta = {} but (eta+3)/2 = {}", self.theta, (self.eta + 3.0) / 2.0));
        }
        if self.odd {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..200 {
                let r = rng.gen_range(0.0..10.0);
                let t = rng.gen_range(-3.0..3.0);
                let (a, b) = (self.f(r, t), self.f(r, -t));
                if (a + b).abs() > 1e-10 * (1.0 + a.abs()) {
                    return hypothesis(format!("f(r, .) is not odd at r = {r}, t = {t}"));
                }
            }
        }
        let c = self.growth_constant(10.0);
        if !c.is_finite() {
            return hypothesis("f exceeds C(exp(beta t^2) - 1) for every C");
        }
        Ok(())
    }
}

/// Absolute residuals of the boundary behavior, with the scales needed to
/// make them relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryChecks {
    /// `|u″(0) + Δ_θu(0)/(θ+1)|`.
    pub second_derivative_relation: f64,
    /// `|u‴(0)|`.
    pub third_derivative: f64,
    /// `|u(r_max)|`.
    pub value_at_end: f64,
    /// `|Δ_θu(r_max)|`.
    pub laplacian_at_end: f64,
    pub second_derivative_at_origin: f64,
    pub laplacian_at_origin: f64,
    pub sup_u: f64,
    pub sup_laplacian: f64,
    pub r_max: f64,
}

impl BoundaryChecks {
    /// The four residuals divided by their natural scales: `|u″(0)|`,
    /// `|u″(0)|/R`, `sup|u|` and `sup|Δ_θu|`. Zero scales give zero.
    pub fn relative(&self) -> [f64; 4] {
        let s2 = self.second_derivative_at_origin.abs();
        let rel = |x: f64, s: f64| if s > 0.0 { x / s } else { x };
        [
            rel(self.second_derivative_relation, s2),
            rel(self.third_derivative, s2 / self.r_max),
            rel(self.value_at_end, self.sup_u),
            rel(self.laplacian_at_end, self.sup_laplacian),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: RadialFunction,
    pub lambda: f64,
    pub iterations: usize,
    /// `‖u − 𝒢(λ^{−1} f(r,u) r^{η−θ})‖_sup` with `𝒢` the Navier inverse of `Δ_θ²`.
    pub residual: f64,
    pub converged: bool,
    pub boundary_checks: BoundaryChecks,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub relaxation: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { relaxation: 0.5, max_iterations: 200, tolerance: 1e-10 }
    }
}

/// `u` with `Δ_θ²u = g`, `u(R) = Δ_θu(R) = 0`.
pub fn biharmonic_inverse(g: &RadialFunction, theta: f64, r: f64) -> Result<RadialFunction> {
    Ok(biharmonic_pair(g, theta, default_grid(g, r)?)?.0)
}

/// `(u, Δ_θu)` for [`biharmonic_inverse`] on `grid`.
pub fn biharmonic_pair(g: &RadialFunction, theta: f64, grid: Arc<RadialGrid>) -> Result<(RadialFunction, RadialFunction)> {
    let op = OperatorParams::new(theta, theta);
    let w = inverse_l_on(g, op, grid.clone())?;
    let u = inverse_l_on(&w, op, grid)?;
    Ok((u, w))
}

fn default_grid(g: &RadialFunction, r: f64) -> Result<Arc<RadialGrid>> {
    if !(r > 0.0) {
        return param(format!("radius must be positive, got {r}"));
    }
    if let Some(gr) = g.grid() {
        if (gr.r_max() - r).abs() <= 1e-12 * r {
            return Ok(gr.clone());
        }
    }
    Ok(Arc::new(RadialGrid::with_defaults(r, DEFAULT_CELLS)?))
}

/// `∫_0^{r_max} f r^e dr` from nodal values, with the same local quintic
/// product rule the inverses use.
fn integral(grid: &RadialGrid, f: &[f64], e: f64) -> f64 {
    let head = f[0] * grid.r_min().powf(e + 1.0) / (e + 1.0);
    head + cumulative_power(f, grid.nodes(), grid.log_step(), e + 1.0).last().unwrap()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `λ^{−1} f(r,u) r^{η−θ}` at the nodes.
fn source(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64], inv_lambda: f64) -> Vec<f64> {
    grid.nodes()
        .iter()
        .zip(u)
        .map(|(&r, &t)| inv_lambda * spec.f(r, t) * r.powf(spec.eta - spec.theta))
        .collect()
}

fn sampled(grid: &Arc<RadialGrid>, v: Vec<f64>) -> RadialFunction {
    RadialFunction::sampled(grid.clone(), v).expect("grid-matched samples")
}

/// Damped iteration `u ← (1−ω)u + ω𝒢(λ^{−1} f(r,u) r^{η−θ})`, the first
/// step undamped.
pub fn fixed_point_solve(spec: &ProblemSpec, lambda: f64, u_init: &RadialFunction, r: f64) -> Result<SolveReport> {
    fixed_point_solve_with(spec, lambda, u_init, r, FixedPointOptions::default())
}

pub fn fixed_point_solve_with(
    spec: &ProblemSpec,
    lambda: f64,
    u_init: &RadialFunction,
    r: f64,
    opts: FixedPointOptions,
) -> Result<SolveReport> {
    if lambda == 0.0 || !lambda.is_finite() {
        return param(format!("lambda must be finite and nonzero, got {lambda}"));
    }
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return param(format!("relaxation must lie in (0, 1], got {}", opts.relaxation));
    }
    let grid = default_grid(u_init, r)?;
    let image = |u: &[f64]| -> Result<Vec<f64>> {
        let g = sampled(&grid, source(spec, &grid, u, 1.0 / lambda));
        Ok(biharmonic_pair(&g, spec.theta, grid.clone())?.0.samples().unwrap())
    };
    let mut u = image(&u_init.sample_on(&grid))?;
    let mut iterations = 1;
    let mut converged = false;
    let mut residual;
    loop {
        let t = image(&u)?;
        let diff: Vec<f64> = t.iter().zip(&u).map(|(a, b)| a - b).collect();
        residual = sup(&diff);
        let scale = sup(&t).max(sup(&u));
        if residual <= opts.tolerance * scale || residual <= 1e-14 {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        let w = opts.relaxation;
        for (ui, ti) in u.iter_mut().zip(&t) {
            *ui = (1.0 - w) * *ui + w * ti;
        }
        iterations += 1;
    }
    let solution = sampled(&grid, u);
    let boundary_checks = boundary_checks(&solution, spec.theta)?;
    Ok(SolveReport { solution, lambda, iterations, residual, converged, boundary_checks })
}

/// Boundary behavior of `u`: the origin values come from a least-squares
/// Chebyshev fit of the nodal values on `(0, R/5]`, extrapolated to `0`.
pub fn boundary_checks(u: &RadialFunction, theta: f64) -> Result<BoundaryChecks> {
    let grid = u.quadrature_grid()?;
    let op = OperatorParams::new(theta, theta);
    let us = u.sample_on(&grid);
    let lap = match u.backing() {
        crate::radial::Backing::Sampled { .. } => apply_l(u, op)?.samples().unwrap(),
        _ => apply_l(u, op)?.sample_on(&grid),
    };
    let rho = 0.2 * grid.r_max();
    let (d_u, _) = origin_derivatives(&grid, &us, rho);
    let (d_lap, _) = origin_derivatives(&grid, &lap, rho);
    let n = us.len() - 1;
    Ok(BoundaryChecks {
        second_derivative_relation: (d_u[2] + d_lap[0] / (theta + 1.0)).abs(),
        third_derivative: d_u[3].abs(),
        value_at_end: us[n].abs(),
        laplacian_at_end: lap[n].abs(),
        second_derivative_at_origin: d_u[2],
        laplacian_at_origin: d_lap[0],
        sup_u: sup(&us),
        sup_laplacian: sup(&lap),
        r_max: grid.r_max(),
    })
}

/// Degree of the Chebyshev fit near the origin.
const ORIGIN_FIT_DEGREE: usize = 9;

/// `[f(0), f′(0), f″(0), f‴(0)]` from a least-squares fit on the nodes in
/// `(10^{−3}ρ, ρ]`, with the fit's RMS misfit.
fn origin_derivatives(grid: &RadialGrid, f: &[f64], rho: f64) -> ([f64; 4], f64) {
    let pts: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .zip(f)
        .filter(|(&r, _)| r > 1e-3 * rho && r <= rho)
        .map(|(&r, &v)| (2.0 * r / rho - 1.0, v))
        .collect();
    let m = ORIGIN_FIT_DEGREE + 1;
    let a = DMatrix::from_fn(pts.len(), m, |i, j| chebyshev(j, pts[i].0));
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let c = a.clone().svd(true, true).solve(&b, 1e-14).expect("SVD solve");
    let misfit = ((&a * &c - &b).norm_squared() / pts.len() as f64).sqrt();
    let mut d = [0.0; 4];
    for (order, dm) in d.iter_mut().enumerate() {
        // T_j^{(m)}(−1) = (−1)^{j+m} Π_{i<m} (j² − i²)/(2i + 1)
        let s: f64 = (0..m)
            .map(|j| {
                let jf = j as f64;
                let prod: f64 = (0..order).map(|i| (jf * jf - (i * i) as f64) / (2 * i + 1) as f64).product();
                let sign = if (j + order) % 2 == 0 { 1.0 } else { -1.0 };
                c[j] * sign * prod
            })
            .sum();
        *dm = s * (2.0 / rho).powi(order as i32);
    }
    (d, misfit)
}

fn chebyshev(j: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if j == 0 {
        return a;
    }
    for _ in 1..j {
        let c = 2.0 * x * b - a;
        a = b;
        b = c;
    }
    b
}

/// Outcome of [`constrained_maximize`].
#[derive(Debug, Clone)]
pub struct MaximizeReport {
    /// `lambda` is the multiplier `‖Δ_θ𝒢(f(r,u)r^{η−θ})‖_{L²_θ}`.
    pub report: SolveReport,
    /// `∫ F(r,u) r^η dr`.
    pub objective: f64,
    /// `∫ f(r,u) u r^η dr`.
    pub lambda_integral: f64,
    /// Worst relative weak-form defect over the random test directions.
    pub weak_residual: f64,
    /// `‖Δ_θu − Δ_θ𝒢(f r^{η−θ})/λ‖_{L²_θ}` before each accepted step.
    pub stationarity_history: Vec<f64>,
    /// `F ≡ 0` along the iteration, so every admissible `u` is a maximizer.
    pub degenerate: bool,
}

const ASCENT_ITERATIONS: usize = 500;
const STATIONARITY_TOLERANCE: f64 = 1e-9;
/// The objective moves by `O(stationarity²)`, so below this level it is flat
/// to rounding and a failed line search means convergence.
const FLAT_STATIONARITY: f64 = 1e-6;
const WEAK_FORM_DIRECTIONS: usize = 10;

/// State of the ascent: nodal values of `u` and `Δ_θu`.
struct Pair {
    u: Vec<f64>,
    lap: Vec<f64>,
}

/// Projected ascent for `sup {∫F(r,u)r^η dr : ‖Δ_θu‖_{L²_θ} = 1}`.
///
/// The direction is `d = 𝒢(f(r,u) r^{η−θ})`, whose `Δ_θ`-inner product with
/// any `v` is `∫ f(r,u) v r^η`. Candidates `(1−s)u + s d/‖Δ_θd‖` are
/// renormalized; `s` starts at 1 and halves until the objective increases.
pub fn constrained_maximize(spec: &ProblemSpec, r: f64, seed: u64) -> Result<MaximizeReport> {
    spec.validate(seed)?;
    let grid = Arc::new(RadialGrid::with_defaults(r, DEFAULT_CELLS)?);
    let theta = spec.theta;
    let norm = |lap: &[f64]| integral(&grid, &lap.iter().map(|x| x * x).collect::<Vec<_>>(), theta).sqrt();
    let objective = |u: &[f64]| {
        let v: Vec<f64> = grid.nodes().iter().zip(u).map(|(&r, &t)| spec.primitive(r, t)).collect();
        integral(&grid, &v, spec.eta)
    };
    // direction and its Laplacian, plus the multiplier
    let direction = |u: &[f64]| -> Result<(Pair, f64)> {
        let g = sampled(&grid, source(spec, &grid, u, 1.0));
        let (d, w) = biharmonic_pair(&g, theta, grid.clone())?;
        let (d, w) = (d.samples().unwrap(), w.samples().unwrap());
        let lambda = norm(&w);
        Ok((Pair { u: d, lap: w }, lambda))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = random_direction(&grid, theta, &mut rng)?;
    let n0 = norm(&cur.lap);
    scale_pair(&mut cur, 1.0 / n0);
    let mut j = objective(&cur.u);
    let mut history = Vec::new();
    let mut converged = false;
    let mut degenerate = false;
    let mut iterations = 0;
    let mut lambda;
    loop {
        let (d, lam) = direction(&cur.u)?;
        lambda = lam;
        if lam == 0.0 {
            degenerate = true;
            break;
        }
        let target: Vec<f64> = d.lap.iter().map(|x| x / lam).collect();
        let gap: Vec<f64> = cur.lap.iter().zip(&target).map(|(a, b)| a - b).collect();
        let stat = norm(&gap);
        history.push(stat);
        if stat < STATIONARITY_TOLERANCE {
            converged = true;
            break;
        }
        if iterations >= ASCENT_ITERATIONS {
            break;
        }
        let mut s = 1.0;
        let mut accepted = None;
        while s > 1e-10 {
            let mut cand = Pair {
                u: cur.u.iter().zip(&d.u).map(|(a, b)| (1.0 - s) * a + s * b / lam).collect(),
                lap: cur.lap.iter().zip(&d.lap).map(|(a, b)| (1.0 - s) * a + s * b / lam).collect(),
            };
            let nc = norm(&cand.lap);
            scale_pair(&mut cand, 1.0 / nc);
            let jc = objective(&cand.u);
            if jc > j {
                accepted = Some((cand, jc));
                break;
            }
            s *= 0.5;
        }
        match accepted {
            Some((c, jc)) => {
                cur = c;
                j = jc;
                iterations += 1;
            }
            None => {
                converged = stat < FLAT_STATIONARITY;
                break;
            }
        }
    }
    let lambda_integral = {
        let v: Vec<f64> = grid.nodes().iter().zip(&cur.u).map(|(&r, &t)| spec.f(r, t) * t).collect();
        integral(&grid, &v, spec.eta)
    };
    let weak_residual = if degenerate {
        0.0
    } else {
        weak_form_residual(spec, &grid, &cur, lambda_integral, &mut rng)?
    };
    let residual = *history.last().unwrap_or(&0.0);
    let solution = sampled(&grid, cur.u);
    let boundary_checks = boundary_checks(&solution, theta)?;
    Ok(MaximizeReport {
        report: SolveReport {
            solution,
            lambda,
            iterations,
            residual,
            converged: converged && !degenerate,
            boundary_checks,
        },
        objective: j,
        lambda_integral,
        weak_residual,
        stationarity_history: history,
        degenerate,
    })
}

fn scale_pair(p: &mut Pair, c: f64) {
    p.u.iter_mut().for_each(|x| *x *= c);
    p.lap.iter_mut().for_each(|x| *x *= c);
}

/// `𝒢` of a random smooth bump: `(Σ_j c_j cos(jπr/R)) e^{−a r²/R²}`.
fn random_direction(grid: &Arc<RadialGrid>, theta: f64, rng: &mut ChaCha8Rng) -> Result<Pair> {
    let r_max = grid.r_max();
    let a = rng.gen_range(0.5..4.0);
    let c: Vec<f64> = (0..4).map(|j| if j == 0 { 1.0 } else { rng.gen_range(-0.4..0.4) }).collect();
    let g = RadialFunction::from_fn(grid.clone(), move |r| {
        let x = r / r_max;
        let poly: f64 = c.iter().enumerate().map(|(j, cj)| cj * (j as f64 * std::f64::consts::PI * x).cos()).sum();
        poly * (-a * x * x).exp()
    });
    let (u, w) = biharmonic_pair(&g, theta, grid.clone())?;
    Ok(Pair { u: u.samples().unwrap(), lap: w.samples().unwrap() })
}

/// `max_v |∫Δ_θuΔ_θv r^θ − λ^{−1}∫f(r,u)v r^η| / (‖Δ_θu‖‖Δ_θv‖)` over random `v`.
fn weak_form_residual(spec: &ProblemSpec, grid: &Arc<RadialGrid>, u: &Pair, lambda: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let theta = spec.theta;
    let fu: Vec<f64> = grid.nodes().iter().zip(&u.u).map(|(&r, &t)| spec.f(r, t)).collect();
    let nu = integral(grid, &u.lap.iter().map(|x| x * x).collect::<Vec<_>>(), theta).sqrt();
    let mut worst = 0.0f64;
    for _ in 0..WEAK_FORM_DIRECTIONS {
        let v = random_direction(grid, theta, rng)?;
        let lhs = integral(grid, &u.lap.iter().zip(&v.lap).map(|(a, b)| a * b).collect::<Vec<_>>(), theta);
        let rhs = integral(grid, &fu.iter().zip(&v.u).map(|(a, b)| a * b).collect::<Vec<_>>(), spec.eta) / lambda;
        let nv = integral(grid, &v.lap.iter().map(|x| x * x).collect::<Vec<_>>(), theta).sqrt();
        worst = worst.max((lhs - rhs).abs() / (nu * nv));
    }
    Ok(worst)
}
