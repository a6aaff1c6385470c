//! Half-weighted Schwarz symmetrization, distribution functions and the
//! maximal function.
//!
//! Inputs are reduced to pieces `(value, μ_η-mass)` in radial order. Step
//! functions contribute their steps exactly; sampled and closed-form inputs
//! are split into [`SUBCELLS`] log-uniform pieces per grid cell, each carrying
//! `|u|` at its `μ_η`-centroid. Sorting the pieces by value and stacking
//! their masses under `μ_ν` gives a step function that is equimeasurable with
//! the piece decomposition by construction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::par;
use crate::radial::quadrature::{gauss_legendre, integrate};
use crate::radial::{Backing, RadialFunction, RadialGrid, WeightedMeasure, DEFAULT_CELLS};
use crate::special::exp_p;

/// Pieces per grid cell for sampled and closed-form inputs.
pub const SUBCELLS: usize = 8;

/// `t ↦ μ_η({|u| > t})` at the given levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFunction {
    pub levels: Vec<f64>,
    pub measures: Vec<f64>,
}

/// The integrands `Ψ` for which equimeasurability is checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiTag {
    /// `t^p`.
    Power { p: f64 },
    /// `exp_p(β t^{p/(p−1)}) / (1+t)^q`.
    ExactGrowth { p: f64, beta: f64, q: f64 },
}

impl PsiTag {
    pub fn from_name(name: &str, p: f64, beta: f64, q: f64) -> Result<Self> {
        let tag = match name {
            "power" => PsiTag::Power { p },
            "exact_growth" => PsiTag::ExactGrowth { p, beta, q },
            other => return Err(Error::Unregistered(other.to_string())),
        };
        tag.validate()?;
        Ok(tag)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PsiTag::Power { p } if p > 0.0 => Ok(()),
            PsiTag::ExactGrowth { p, beta, q } if p > 1.0 && beta > 0.0 && q >= 0.0 => Ok(()),
            _ => param(format!("bad parameters for {self:?}")),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match *self {
            PsiTag::Power { p } => t.powf(p),
            PsiTag::ExactGrowth { p, beta, q } => exp_p(p, beta * t.powf(p / (p - 1.0))) / (1.0 + t).powf(q),
        }
    }
}

/// `u*_{η,ν}` as an exact step function, with nodal samples on a fresh grid.
#[derive(Debug, Clone)]
pub struct SymmetrizedFunction {
    grid: Arc<RadialGrid>,
    samples: Vec<f64>,
    eta: f64,
    nu: f64,
    support_radius: f64,
    /// `values[j]` on `(edges[j], edges[j+1]]`, nonincreasing.
    edges: Vec<f64>,
    values: Vec<f64>,
    /// `∫_0^{edges[j]} u* s^ν ds`
    mass: Vec<f64>,
    exact_steps: bool,
}

impl SymmetrizedFunction {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Values at the grid nodes.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// True when `u*` came from a step function and the steps are exact.
    pub fn is_exact_steps(&self) -> bool {
        self.exact_steps
    }

    /// `R*` with `μ_ν(0, R*)` equal to the `μ_η`-measure of the support.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The exact step function.
    pub fn to_function(&self) -> RadialFunction {
        RadialFunction::steps(self.edges.clone(), self.values.clone()).expect("edges are increasing")
    }

    /// The linear interpolant of the nodal samples.
    pub fn to_sampled(&self) -> RadialFunction {
        RadialFunction::sampled(self.grid.clone(), self.samples.clone()).expect("one sample per node")
    }

    /// `u**(t) = (ν+1) t^{−ν−1} ∫_0^t u* s^ν ds`, exact, for any `t > 0`.
    pub fn maximal_at(&self, t: f64) -> f64 {
        maximal_eval(self, &self.mass, t)
    }
}

fn maximal_eval(u: &SymmetrizedFunction, mass: &[f64], t: f64) -> f64 {
    let m = WeightedMeasure::new(u.nu);
    let n = u.values.len();
    let ball = m.of_ball(t).expect("ν > −1");
    if t >= u.support_radius {
        return mass[n] / ball;
    }
    // step containing t, with (e_j, e_{j+1}] convention
    let j = u.edges.partition_point(|&e| e < t).saturating_sub(1).min(n - 1);
    let inside = mass[j] + u.values[j] * m.of_shell(u.edges[j], t);
    inside / ball
}

fn check_exponents(eta: f64, nu: f64) -> Result<()> {
    if !(eta > -1.0 && nu > -1.0) {
        return param(format!("η and ν must exceed −1, got ({eta}, {nu})"));
    }
    Ok(())
}

/// A part of the input: `|u|` at its centroid and its `μ_η`-mass.
#[derive(Debug, Clone, Copy)]
struct Piece {
    value: f64,
    mass: f64,
}

/// Pieces in radial order, plus the grid size they came from.
fn pieces(u: &RadialFunction, eta: f64) -> Result<(Vec<Piece>, usize)> {
    let m = WeightedMeasure::new(eta);
    if let Backing::Steps { edges, values } = u.backing() {
        let mut out = Vec::with_capacity(values.len() + 1);
        if edges[0] > 0.0 {
            out.push(Piece { value: 0.0, mass: m.of_ball(edges[0])? });
        }
        for (j, v) in values.iter().enumerate() {
            out.push(Piece { value: v.abs(), mass: m.of_shell(edges[j], edges[j + 1]) });
        }
        return Ok((out, DEFAULT_CELLS));
    }
    let grid = u.quadrature_grid()?;
    let x = grid.nodes();
    let ratio = (grid.log_step() / SUBCELLS as f64).exp();
    let m1 = WeightedMeasure::new(eta + 1.0);
    let cells = par::map_range(grid.n_cells(), |i| {
        let mut a = x[i];
        let mut out = [Piece { value: 0.0, mass: 0.0 }; SUBCELLS];
        for (j, slot) in out.iter_mut().enumerate() {
            let b = if j + 1 == SUBCELLS { x[i + 1] } else { a * ratio };
            let mass = m.of_shell(a, b);
            let centroid = m1.of_shell(a, b) / mass;
            *slot = Piece { value: u.value(centroid).abs(), mass };
            a = b;
        }
        out
    });
    let mut out = Vec::with_capacity(grid.n_cells() * SUBCELLS + 1);
    out.push(Piece { value: u.value(grid.r_min()).abs(), mass: m.of_ball(grid.r_min())? });
    out.extend(cells.into_iter().flatten());
    Ok((out, grid.n_cells()))
}

/// Sorted steps `(edges, values)` of `u*` and the input grid size.
fn rearrange(u: &RadialFunction, eta: f64, nu: f64) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    check_exponents(eta, nu)?;
    u.support_radius()?;
    let (pieces, n_cells) = pieces(u, eta)?;
    if pieces.iter().any(|p| !p.value.is_finite() || !p.mass.is_finite()) {
        return Err(Error::Domain("non-finite value in symmetrization input".into()));
    }
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    // stable: ties keep ascending radius
    order.sort_by(|&a, &b| pieces[b].value.total_cmp(&pieces[a].value));

    let mnu = WeightedMeasure::new(nu);
    let mut edges = Vec::with_capacity(pieces.len() + 1);
    let mut values = Vec::with_capacity(pieces.len());
    edges.push(0.0);
    let mut acc = 0.0;
    for &i in &order {
        let piece = pieces[i];
        if piece.mass <= 0.0 {
            continue;
        }
        acc += piece.mass;
        let rho = mnu.radius_of(acc)?;
        if rho <= *edges.last().unwrap() {
            // mass below the resolution of the radius; merge into the previous step
            continue;
        }
        edges.push(rho);
        values.push(piece.value);
    }
    if values.is_empty() {
        return param("symmetrization of a function with empty support");
    }
    Ok((edges, values, n_cells))
}

/// `u*_{η,ν}(r) = inf{t : μ_η(|u| > t) < μ_ν(0, r)}`.
///
/// Nodal samples of a step input are the exact step values. For sampled and
/// closed-form inputs each node inverts the distribution function of the
/// piecewise-linear `|u|` at its `μ_ν`-depth, starting from the bracket the
/// sorted steps provide.
pub fn symmetrize(u: &RadialFunction, eta: f64, nu: f64) -> Result<SymmetrizedFunction> {
    let (edges, values, n_cells) = rearrange(u, eta, nu)?;
    let support_radius = *edges.last().unwrap();
    let grid = Arc::new(RadialGrid::with_defaults(support_radius, n_cells)?);
    let exact_steps = matches!(u.backing(), Backing::Steps { .. });
    let samples = if exact_steps {
        let f = RadialFunction::steps(edges.clone(), values.clone())?;
        grid.nodes().iter().map(|&r| f.value(r)).collect()
    } else {
        let profile = LinearProfile::new(u, eta)?;
        let mnu = WeightedMeasure::new(nu);
        let mut s = par::map(grid.nodes(), |&r| {
            let depth = mnu.of_ball(r).expect("ν > −1");
            let j = edges.partition_point(|&e| e < r).saturating_sub(1).min(values.len() - 1);
            profile.invert(depth, &values, j)
        });
        // guard against rounding in the inversion
        for i in 1..s.len() {
            s[i] = s[i].min(s[i - 1]);
        }
        s
    };
    let mass = running_mass(&edges, &values, nu);
    Ok(SymmetrizedFunction { grid, samples, eta, nu, support_radius, edges, values, mass, exact_steps })
}

/// `∫_0^{ρ_j} u* s^ν ds` at every edge.
fn running_mass(edges: &[f64], values: &[f64], nu: f64) -> Vec<f64> {
    let m = WeightedMeasure::new(nu);
    let mut out = Vec::with_capacity(edges.len());
    out.push(0.0);
    let mut acc = 0.0;
    for (j, v) in values.iter().enumerate() {
        acc += v * m.of_shell(edges[j], edges[j + 1]);
        out.push(acc);
    }
    out
}

/// `|u|` as the linear interpolant of its nodal magnitudes on a grid, with
/// the head `(0, r_min]` held at the first value.
struct LinearProfile {
    x: Vec<f64>,
    a: Vec<f64>,
    /// cell measures summed in double-double, so short ranges far from the
    /// origin keep their relative accuracy
    prefix: Vec<(f64, f64)>,
    /// maximal runs of cells on which `a` is nondecreasing or decreasing
    runs: Vec<(usize, usize, bool)>,
    head: f64,
    measure: WeightedMeasure,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl LinearProfile {
    fn new(u: &RadialFunction, eta: f64) -> Result<Self> {
        let grid = u.quadrature_grid()?;
        let measure = WeightedMeasure::new(eta);
        let a: Vec<f64> = u.sample_on(&grid).iter().map(|v| v.abs()).collect();
        let cells = grid.cell_measures(eta);
        let mut prefix = Vec::with_capacity(cells.len() + 1);
        let (mut hi, mut lo) = (0.0, 0.0);
        prefix.push((hi, lo));
        for &c in &cells {
            let (s, e) = two_sum(hi, c);
            hi = s;
            lo += e;
            prefix.push((hi, lo));
        }
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=cells.len() {
            let up = a[start + 1] >= a[start];
            if i == cells.len() || (a[i + 1] >= a[i]) != up {
                runs.push((start, i, up));
                start = i;
            }
        }
        Ok(Self { x: grid.nodes().to_vec(), a, prefix, runs, head: measure.of_ball(grid.r_min())?, measure })
    }

    /// Measure of cells `i..j`.
    fn span(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            return 0.0;
        }
        let (p, q) = (self.prefix[i], self.prefix[j]);
        (q.0 - p.0) + (q.1 - p.1)
    }

    /// Part of the cell `i` where `|u| > t`, given exactly one end exceeds `t`.
    fn crossing(&self, i: usize, t: f64) -> f64 {
        let (x, a) = (&self.x, &self.a);
        let (lo, hi) = (a[i], a[i + 1]);
        let c = x[i] + (t - lo) / (hi - lo) * (x[i + 1] - x[i]);
        if lo > t {
            self.measure.of_shell(x[i], c)
        } else {
            self.measure.of_shell(c, x[i + 1])
        }
    }

    /// `μ_η({|u| > t})`, crossings located by linear inverse interpolation.
    fn above(&self, t: f64) -> f64 {
        let a = &self.a;
        let mut sum = if a[0] > t { self.head } else { 0.0 };
        for &(s, e, up) in &self.runs {
            // nodes s..=e are monotone; k is the first node on the other side of t
            let nodes = &a[s..=e];
            if up {
                let k = s + nodes.partition_point(|&v| v <= t);
                sum += self.span(k, e);
                if k > s && k <= e {
                    sum += self.crossing(k - 1, t);
                }
            } else {
                let k = s + nodes.partition_point(|&v| v > t);
                sum += self.span(s, k.saturating_sub(1).max(s));
                if k > s && k <= e {
                    sum += self.crossing(k - 1, t);
                }
            }
        }
        sum
    }

    /// The level `t` with `μ_η({|u| > t}) = depth`; `values[j]` is the step
    /// value at this depth and its neighbours give the starting bracket.
    fn invert(&self, depth: f64, values: &[f64], j: usize) -> f64 {
        let n = values.len();
        let mut reach = 4;
        // bracket t_lo ≤ t ≤ t_hi with above(t_lo) ≥ depth > above(t_hi)
        let (mut t_lo, mut f_lo, mut t_hi, mut f_hi);
        loop {
            t_lo = if j + reach >= n { 0.0 } else { values[j + reach] };
            t_hi = if j < reach { values[0] * (1.0 + 1e-12) + f64::MIN_POSITIVE } else { values[j - reach] };
            f_lo = if t_lo == 0.0 { f64::INFINITY } else { self.above(t_lo) - depth };
            f_hi = self.above(t_hi) - depth;
            let ok_lo = f_lo >= 0.0;
            let ok_hi = f_hi < 0.0 || (j < reach);
            if ok_lo && ok_hi {
                break;
            }
            reach *= 4;
        }
        if f_hi >= 0.0 {
            return t_hi;
        }
        if t_lo == 0.0 {
            let f0 = self.above(0.0) - depth;
            if f0 < 0.0 {
                return 0.0;
            }
            f_lo = f0;
        }
        // Illinois false position
        let mut side = 0;
        for _ in 0..100 {
            if t_hi - t_lo <= 1e-15 * t_hi {
                break;
            }
            let t = if f_lo.is_finite() && f_lo > 0.0 {
                let guess = t_lo + (t_hi - t_lo) * f_lo / (f_lo - f_hi);
                if guess > t_lo && guess < t_hi { guess } else { 0.5 * (t_lo + t_hi) }
            } else {
                0.5 * (t_lo + t_hi)
            };
            let f = self.above(t) - depth;
            if f >= 0.0 {
                t_lo = t;
                f_lo = f;
                if side == -1 {
                    f_hi *= 0.5;
                }
                side = -1;
            } else {
                t_hi = t;
                f_hi = f;
                if side == 1 {
                    f_lo *= 0.5;
                }
                side = 1;
            }
            if f == 0.0 {
                return t;
            }
        }
        0.5 * (t_lo + t_hi)
    }
}

/// 256 geometric levels between the smallest positive and the largest `|u|`.
pub fn default_levels(u: &RadialFunction) -> Result<Vec<f64>> {
    let vals: Vec<f64> = match u.backing() {
        Backing::Steps { values, .. } => values.iter().map(|v| v.abs()).collect(),
        _ => u.sample_on(&*u.quadrature_grid()?).iter().map(|v| v.abs()).collect(),
    };
    let hi = vals.iter().cloned().fold(0.0, f64::max);
    let lo = vals.iter().cloned().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        return Ok(Vec::new());
    }
    if lo >= hi {
        return Ok(vec![hi]);
    }
    let n = 256;
    Ok((0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect())
}

/// `μ_η({|u| > t})` at each level, with sub-cell crossings located by linear
/// inverse interpolation. Exact for step functions.
pub fn distribution(u: &RadialFunction, eta: f64, levels: &[f64]) -> Result<DistributionFunction> {
    if eta <= -1.0 {
        return Err(Error::DivergentMeasure { exponent: eta });
    }
    u.support_radius()?;
    if levels.iter().any(|&t| !(t > 0.0)) || levels.windows(2).any(|w| w[1] < w[0]) {
        return param("levels must be positive and ascending");
    }
    let m = WeightedMeasure::new(eta);
    let measures = match u.backing() {
        Backing::Steps { edges, values } => {
            let masses: Vec<f64> = (0..values.len()).map(|j| m.of_shell(edges[j], edges[j + 1])).collect();
            levels
                .iter()
                .map(|&t| values.iter().zip(&masses).filter(|(v, _)| v.abs() > t).map(|(_, w)| w).sum())
                .collect()
        }
        _ => {
            let profile = LinearProfile::new(u, eta)?;
            par::map(levels, |&t| profile.above(t))
        }
    };
    Ok(DistributionFunction { levels: levels.to_vec(), measures })
}

impl SymmetrizedFunction {
    /// `μ_ν({u* > t})`: exact on the steps when the input was a step
    /// function, otherwise from the nodal samples like any sampled function.
    pub fn distribution(&self, levels: &[f64]) -> Result<DistributionFunction> {
        if self.exact_steps {
            distribution(&self.to_function(), self.nu, levels)
        } else {
            distribution(&self.to_sampled(), self.nu, levels)
        }
    }
}

/// `u**` sampled at the nodes of the symmetrized grid.
pub fn maximal_function(ustar: &SymmetrizedFunction) -> RadialFunction {
    let mass = &ustar.mass;
    let samples = ustar.grid.nodes().iter().map(|&t| maximal_eval(ustar, mass, t)).collect();
    RadialFunction::sampled(ustar.grid.clone(), samples).expect("one sample per node")
}

/// `(∫_0^∞ |u**|^p t^α dt, (ν+1)^p (p/(p−1+νp−α))^p ∫_0^R |u*|^p t^α dt)`.
///
/// Beyond `R*` the maximal function is `K t^{−ν−1}`, integrated in closed
/// form; inside, each step is integrated in `log t`.
pub fn maximal_norm_bound(ustar: &SymmetrizedFunction, p: f64, alpha: f64) -> Result<(f64, f64)> {
    let nu = ustar.nu;
    if p <= 1.0 {
        return param(format!("p must exceed 1, got {p}"));
    }
    if alpha <= -1.0 {
        return Err(Error::DivergentMeasure { exponent: alpha });
    }
    if alpha >= nu * p + p - 1.0 {
        return Err(Error::Hypothesis(format!("α = {alpha} must be below νp + p − 1 = {}", nu * p + p - 1.0)));
    }
    let mass = &ustar.mass;
    let malpha = WeightedMeasure::new(alpha);
    let rules = [gauss_legendre(2), gauss_legendre(4), gauss_legendre(6), gauss_legendre(10)];
    let integer_p = p.fract() == 0.0 && p <= 16.0;
    // bound on |d/ds ln f| for the integrand below
    let slope = (alpha + 1.0).abs() + p * (nu + 1.0);
    let n = ustar.values.len();
    let logs: Vec<f64> = ustar.edges.iter().map(|e| e.ln()).collect();
    let per_step = par::map_range(n, |j| {
        let (a, b, v) = (ustar.edges[j], ustar.edges[j + 1], ustar.values[j]);
        if j == 0 {
            // u** is constant on the first step
            let rhs = v.abs().powf(p) * malpha.of_shell(a, b);
            return (rhs, rhs);
        }
        let (sa, sb) = (logs[j], logs[j + 1]);
        let w = sb - sa;
        let a_alpha = ((alpha + 1.0) * sa).exp();
        let a_nu = ((nu + 1.0) * sa).exp();
        let rhs = v.abs().powf(p) * a_alpha * ((alpha + 1.0) * w).exp_m1() / (alpha + 1.0);
        // u**(t) = v + d t^{−ν−1}
        let d = (nu + 1.0) * mass[j] - v * a_nu;
        if integer_p && v >= 0.0 && d >= 0.0 {
            return (binomial_shell(v, d, nu, alpha, p as u32, a_alpha, a_nu, w), rhs);
        }
        let f = |s: f64| (p * (v + d * (-(nu + 1.0) * s).exp()).abs().ln() + (alpha + 1.0) * s).exp();
        let pieces = ((sb - sa) / 0.25).ceil().max(1.0) as usize;
        let h = w / pieces as f64;
        // narrow steps are resolved by a short rule
        let x = slope * h;
        let rule = if x <= 0.02 {
            &rules[0]
        } else if x <= 0.2 {
            &rules[1]
        } else if x <= 1.0 {
            &rules[2]
        } else {
            &rules[3]
        };
        let lhs = (0..pieces).map(|k| integrate(f, sa + k as f64 * h, sa + (k + 1) as f64 * h, rule)).sum();
        (lhs, rhs)
    });
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (l, r) in per_step {
        lhs += l;
        rhs += r;
    }
    let k = (nu + 1.0) * mass[n];
    let big_r = ustar.support_radius;
    let decay = (nu + 1.0) * p - alpha - 1.0;
    lhs += k.abs().powf(p) * big_r.powf(-decay) / decay;
    let constant = (nu + 1.0).powf(p) * (p / (p - 1.0 + nu * p - alpha)).powf(p);
    Ok((lhs, constant * rhs))
}

/// `∫_a^b (v + d t^{−ν−1})^p t^α dt` for integer `p` and `v, d ≥ 0`, term by
/// term; every term is nonnegative. `a_alpha = a^{α+1}`, `a_nu = a^{ν+1}`,
/// `w = ln(b/a)`.
#[allow(clippy::too_many_arguments)]
fn binomial_shell(v: f64, d: f64, nu: f64, alpha: f64, p: u32, a_alpha: f64, a_nu: f64, w: f64) -> f64 {
    // term i: binom(p, i) v^{p−i} d^i ∫_a^b t^{c−1} dt, c = α + 1 − i(ν+1),
    // and ∫_a^b t^{c−1} dt = a^c (e^{cw} − 1)/c
    let q = (-(nu + 1.0) * w).exp_m1();
    // d^i a^{c_i} = a^{α+1} (d / a^{ν+1})^i, kept in this scaled form
    let ratio = d / a_nu;
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut scaled = a_alpha;
    let mut em = ((alpha + 1.0) * w).exp_m1();
    for i in 0..=p {
        let c = alpha + 1.0 - i as f64 * (nu + 1.0);
        if i > 0 {
            binom *= (p - i + 1) as f64 / i as f64;
            scaled *= ratio;
            // e^{c_i w} − 1 from the previous term, unless it would cancel
            em = if c.abs() < 0.1 { (c * w).exp_m1() } else { em + q + em * q };
        }
        let shell = if c == 0.0 { w } else { em / c };
        total += binom * v.powi((p - i) as i32) * scaled * shell;
    }
    total
}

/// `(∫ Ψ(|u|) r^η dr, ∫ Ψ(u*) r^ν dr)`.
///
/// The left side is integrated directly: exactly for steps, and with a
/// 10-point Gauss rule per grid cell otherwise. The right side is exact on
/// the steps of `u*`.
pub fn equimeasurability_check(u: &RadialFunction, eta: f64, nu: f64, psi: PsiTag) -> Result<(f64, f64)> {
    psi.validate()?;
    check_exponents(eta, nu)?;
    let m = WeightedMeasure::new(eta);
    let lhs = match u.backing() {
        Backing::Steps { edges, values } => {
            values.iter().enumerate().map(|(j, v)| psi.eval(*v) * m.of_shell(edges[j], edges[j + 1])).sum()
        }
        _ => {
            let grid = u.quadrature_grid()?;
            let x = grid.nodes();
            let rule = gauss_legendre(10);
            let head = psi.eval(u.value(grid.r_min())) * m.of_ball(grid.r_min())?;
            let cells = par::map_range(grid.n_cells(), |i| {
                let f = |s: f64| {
                    let r = s.exp();
                    psi.eval(u.value(r)) * r.powf(eta + 1.0)
                };
                integrate(f, x[i].ln(), x[i + 1].ln(), &rule)
            });
            head + cells.iter().sum::<f64>()
        }
    };
    let (edges, values, _) = rearrange(u, eta, nu)?;
    let mnu = WeightedMeasure::new(nu);
    let rhs = values.iter().enumerate().map(|(j, v)| psi.eval(*v) * mnu.of_shell(edges[j], edges[j + 1])).sum();
    Ok((lhs, rhs))
}

/// `∫ |w′|^p r^{p−1} dr` for the linear interpolant of nodal samples.
fn gradient_energy(grid: &RadialGrid, w: &[f64], p: f64) -> f64 {
    let x = grid.nodes();
    let m = WeightedMeasure::new(p - 1.0);
    (0..grid.n_cells())
        .map(|i| ((w[i + 1] - w[i]) / (x[i + 1] - x[i])).abs().powf(p) * m.of_shell(x[i], x[i + 1]))
        .sum()
}

/// `(∫|(u*)′|^p r^{p−1}, ∫|u′|^p r^{p−1})` with `η = ν = p − 1`, derivatives
/// by cell differences of the nodal samples.
pub fn polya_szego_check(u: &RadialFunction, p: f64) -> Result<(f64, f64)> {
    if p <= 1.0 {
        return param(format!("p must exceed 1, got {p}"));
    }
    let grid = u.quadrature_grid()?;
    let before = gradient_energy(&grid, &u.sample_on(&grid), p);
    let ustar = symmetrize(u, p - 1.0, p - 1.0)?;
    let after = gradient_energy(&ustar.grid, &ustar.samples, p);
    Ok((after, before))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(r: f64) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::with_defaults(r, DEFAULT_CELLS).unwrap())
    }

    #[test]
    fn binomial_shell_matches_quadrature() {
        let rule = gauss_legendre(20);
        for (nu, alpha, p) in [(3.0, 0.0, 2u32), (1.0, -0.5, 4), (0.0, 2.0, 3), (1.0, 1.0, 2)] {
            for (a, b) in [(0.1, 0.5), (0.3, 0.3001), (1e-4, 2e-4)] {
                let (v, d) = (0.7, 0.02);
                let f = |t: f64| (v + d * t.powf(-nu - 1.0)).powi(p as i32) * t.powf(alpha);
                let want: f64 = (0..50).map(|k| {
                    let w = (b - a) / 50.0;
                    integrate(f, a + k as f64 * w, a + (k + 1) as f64 * w, &rule)
                }).sum();
                let got = binomial_shell(v, d, nu, alpha, p, a.powf(alpha + 1.0), a.powf(nu + 1.0), (b / a).ln());
                assert!((got - want).abs() <= 1e-11 * want, "{nu} {alpha} {p} [{a}, {b}]: {got} vs {want}");
            }
        }
    }

    #[test]
    fn indicator_moves_to_a_ball() {
        let (a, b) = (0.5, 1.5);
        let u = RadialFunction::steps(vec![0.0, a, b], vec![0.0, 1.0]).unwrap();
        for (eta, nu) in [(0.0, 0.0), (3.0, 1.0), (1.0, 3.0)] {
            let s = symmetrize(&u, eta, nu).unwrap();
            let rho = ((nu + 1.0) * (b.powf(eta + 1.0) - a.powf(eta + 1.0)) / (eta + 1.0)).powf(1.0 / (nu + 1.0));
            let f = s.to_function();
            assert_eq!(f.value(rho * 0.999), 1.0);
            assert_eq!(f.value(rho * 1.001), 0.0);
            assert!((s.edges()[1] - rho).abs() < 1e-13 * rho);
        }
    }

    #[test]
    fn monotone_input_is_reproduced() {
        let u = RadialFunction::from_fn(grid(1.0), |r| (1.0 - r * r).powi(2));
        let s = symmetrize(&u, 1.0, 1.0).unwrap();
        let err = s.grid().nodes().iter().zip(s.samples()).map(|(&r, v)| (v - u.value(r)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn zero_stays_zero() {
        let u = RadialFunction::from_fn(grid(1.0), |_| 0.0);
        let s = symmetrize(&u, 0.0, 2.0).unwrap();
        assert!(s.samples().iter().all(|&v| v == 0.0));
        let (l, r) = equimeasurability_check(&u, 0.0, 2.0, PsiTag::Power { p: 2.0 }).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
    }

    #[test]
    fn distribution_of_linear_ramp() {
        let u = RadialFunction::from_fn(grid(1.0), |r| 1.0 - r);
        let d = distribution(&u, 0.0, &[0.5]).unwrap();
        assert!((d.measures[0] - 0.5).abs() < 1e-12);
        let c = RadialFunction::steps(vec![0.0, 2.0], vec![3.0]).unwrap();
        let d = distribution(&c, 2.0, &[1.0, 3.0]).unwrap();
        assert!((d.measures[0] - 8.0 / 3.0).abs() < 1e-14);
        assert_eq!(d.measures[1], 0.0);
    }

    #[test]
    fn maximal_function_of_indicator() {
        let u = RadialFunction::steps(vec![0.0, 1.0, 2.0], vec![1.0, 0.0]).unwrap();
        for nu in [0.0, 1.0, 3.0] {
            let s = symmetrize(&u, nu, nu).unwrap();
            for t in [0.25f64, 0.9, 1.0, 1.5, 3.0] {
                let want = if t <= 1.0 { 1.0 } else { t.powf(-(nu + 1.0)) };
                assert!((s.maximal_at(t) - want).abs() < 1e-13, "ν={nu} t={t}");
            }
        }
    }

    #[test]
    fn maximal_of_constant_is_constant() {
        let u = RadialFunction::steps(vec![0.0, 1.0], vec![2.5]).unwrap();
        let s = symmetrize(&u, 1.0, 0.0).unwrap();
        let m = maximal_function(&s);
        assert!(m.samples().unwrap().iter().all(|v| (v - 2.5).abs() < 1e-13));
    }

    #[test]
    fn rejects_bad_exponents_and_tags() {
        let u = RadialFunction::steps(vec![0.0, 1.0], vec![1.0]).unwrap();
        assert!(symmetrize(&u, -1.0, 0.0).is_err());
        assert!(matches!(PsiTag::from_name("cosh", 2.0, 1.0, 0.0), Err(Error::Unregistered(_))));
        let open = RadialFunction::analytic(None, 0, |_, o| o[0] = 1.0);
        assert!(matches!(symmetrize(&open, 0.0, 0.0), Err(Error::UnboundedSupport)));
    }
}
