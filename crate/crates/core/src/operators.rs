//! The weighted operator `L_{θ,γ}u = −r^{−θ}(r^γ u′)′`, the generalized
//! gradient `∇_L^k`, its quadrature inverse, and the `X^{k,p}` norm.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::stencil::{derivative, radial_derivative, StencilSpec};
use crate::radial::{
    weighted_lp_integral, Backing, PowerTerm, RadialFunction, RadialGrid, SpaceParams, WeightedMeasure, DEFAULT_CELLS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub theta: f64,
    pub gamma: f64,
}

impl OperatorParams {
    pub fn new(theta: f64, gamma: f64) -> Self {
        Self { theta, gamma }
    }

    pub fn of(space: &SpaceParams) -> Self {
        Self { theta: space.theta, gamma: space.gamma }
    }
}

/// Falling factorial `a(a−1)⋯(a−i+1)`.
fn falling(a: f64, i: usize) -> f64 {
    (0..i).map(|j| a - j as f64).product()
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1.0;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + if j < i { c[i - 1][j] } else { 0.0 };
        }
    }
    c
}

/// Jet of `L u` from the jet of `u` (two orders longer).
fn l_jet(op: OperatorParams, r: f64, u: &[f64], out: &mut [f64]) {
    let n_out = out.len();
    let c = binomials(n_out);
    let (a1, a2) = (op.gamma - 1.0 - op.theta, op.gamma - op.theta);
    for (n, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..=n {
            let t1 = falling(a1, i) * r.powf(a1 - i as f64);
            let t2 = falling(a2, i) * r.powf(a2 - i as f64);
            acc += c[n][i] * (op.gamma * t1 * u[n - i + 1] + t2 * u[n - i + 2]);
        }
        *o = -acc;
    }
}

fn sampled_parts(u: &RadialFunction) -> (Arc<RadialGrid>, Vec<f64>, Vec<PowerTerm>) {
    match u.backing() {
        Backing::Sampled { grid, samples, terms } => (grid.clone(), samples.clone(), terms.clone()),
        _ => unreachable!(),
    }
}

/// `L(c r^e) = −c e(γ+e−1) r^{e+γ−2−θ}`.
fn l_of_term(t: &PowerTerm, op: OperatorParams) -> PowerTerm {
    PowerTerm::new(-t.coef * t.exponent * (op.gamma + t.exponent - 1.0), t.exponent + op.gamma - 2.0 - op.theta)
}

/// `d^j/dr^j (c r^e)`.
fn diff_term(t: &PowerTerm, j: usize) -> PowerTerm {
    PowerTerm::new(t.coef * falling(t.exponent, j), t.exponent - j as f64)
}

/// `L_{θ,γ} u`. Closed forms are differentiated exactly; sampled functions
/// use log-coordinate differences, `Lu = −r^{γ−2−θ}(D² + (γ−1)D)u`.
pub fn apply_l(u: &RadialFunction, op: OperatorParams) -> Result<RadialFunction> {
    apply_l_with(u, op, StencilSpec::default())
}

pub fn apply_l_with(u: &RadialFunction, op: OperatorParams, spec: StencilSpec) -> Result<RadialFunction> {
    match u.backing() {
        Backing::Analytic { jet, k_max } => {
            if *k_max < 2 {
                return Err(Error::InsufficientDerivatives { need: 2, have: *k_max });
            }
            let jet = jet.clone();
            let support = u.support();
            Ok(RadialFunction::analytic(support, k_max.saturating_sub(2), move |r, out| {
                if support.is_some_and(|s| r > s) {
                    out.fill(0.0);
                    return;
                }
                let mut uj = vec![0.0; out.len() + 2];
                jet(r, &mut uj);
                l_jet(op, r, &uj, out);
            }))
        }
        Backing::Sampled { .. } => {
            let (grid, dev, terms) = sampled_parts(u);
            if grid.len() < 5 {
                return Err(Error::InsufficientDerivatives { need: 2, have: 0 });
            }
            let h = grid.log_step();
            let d1 = derivative(&dev, h, 1, spec);
            let d2 = derivative(&dev, h, 2, spec);
            let e = op.gamma - 2.0 - op.theta;
            let out = grid
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, r)| -r.powf(e) * (d2[i] + (op.gamma - 1.0) * d1[i]))
                .collect();
            let terms = terms.iter().map(|t| l_of_term(t, op)).collect();
            RadialFunction::sampled_with_terms(grid, out, terms)
        }
        Backing::Steps { .. } => Err(Error::InsufficientDerivatives { need: 2, have: 0 }),
    }
}

/// `u′`.
pub fn apply_derivative(u: &RadialFunction, spec: StencilSpec) -> Result<RadialFunction> {
    match u.backing() {
        Backing::Analytic { jet, k_max } => {
            if *k_max < 1 {
                return Err(Error::InsufficientDerivatives { need: 1, have: *k_max });
            }
            let jet = jet.clone();
            let support = u.support();
            Ok(RadialFunction::analytic(support, k_max.saturating_sub(1), move |r, out| {
                if support.is_some_and(|s| r > s) {
                    out.fill(0.0);
                    return;
                }
                let mut uj = vec![0.0; out.len() + 1];
                jet(r, &mut uj);
                out.copy_from_slice(&uj[1..]);
            }))
        }
        Backing::Sampled { .. } => {
            let (grid, dev, terms) = sampled_parts(u);
            let d = radial_derivative(grid.nodes(), &dev, grid.log_step(), 1, spec);
            RadialFunction::sampled_with_terms(grid, d, terms.iter().map(|t| diff_term(t, 1)).collect())
        }
        Backing::Steps { .. } => Err(Error::InsufficientDerivatives { need: 1, have: 0 }),
    }
}

/// `∇_L^k u`: `L^{k/2} u` for even `k`, `(L^{(k−1)/2} u)′` for odd `k`.
pub fn apply_grad_lk(u: &RadialFunction, k: usize, op: OperatorParams) -> Result<RadialFunction> {
    apply_grad_lk_with(u, k, op, StencilSpec::default())
}

pub fn apply_grad_lk_with(u: &RadialFunction, k: usize, op: OperatorParams, spec: StencilSpec) -> Result<RadialFunction> {
    if u.k_max() < k {
        return Err(Error::InsufficientDerivatives { need: k, have: u.k_max() });
    }
    if let Backing::Sampled { .. } = u.backing() {
        return Ok(grad_lk_sampled(u, k, op, spec));
    }
    let mut w = u.clone();
    for _ in 0..k / 2 {
        w = apply_l_with(&w, op, spec)?;
    }
    if k % 2 == 1 {
        w = apply_derivative(&w, spec)?;
    }
    Ok(w)
}

/// `∇_L^k u = r^e P(D) u` with `D = r d/dr` and `P` of degree `k`.
///
/// Applying the composite polynomial once keeps the one-sided stencil error
/// at the ends from being differentiated again by the next stage.
pub(crate) fn grad_lk_polynomial(k: usize, op: OperatorParams) -> (Vec<f64>, f64) {
    // p[i] is the coefficient of D^i
    let mut p = vec![1.0];
    let mut e = 0.0;
    // multiply by the polynomial with coefficients q (ascending)
    let times = |p: &[f64], q: &[f64]| {
        let mut out = vec![0.0; p.len() + q.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    };
    let delta = op.gamma - 2.0 - op.theta;
    for _ in 0..k / 2 {
        // L(r^e g) = −r^{e+δ} ((D+e)² + (γ−1)(D+e)) g
        let g1 = op.gamma - 1.0;
        p = times(&p, &[-(e * e + g1 * e), -(2.0 * e + g1), -1.0]);
        e += delta;
    }
    if k % 2 == 1 {
        // (r^e g)′ = r^{e−1} (D+e) g
        p = times(&p, &[e, 1.0]);
        e -= 1.0;
    }
    (p, e)
}

fn grad_lk_sampled(u: &RadialFunction, k: usize, op: OperatorParams, spec: StencilSpec) -> RadialFunction {
    let (grid, dev, terms) = sampled_parts(u);
    let h = grid.log_step();
    let (poly, e) = grad_lk_polynomial(k, op);
    let mut acc: Vec<f64> = dev.iter().map(|d| poly[0] * d).collect();
    for (m, c) in poly.iter().enumerate().skip(1) {
        if *c == 0.0 {
            continue;
        }
        for (a, d) in acc.iter_mut().zip(derivative(&dev, h, m, spec)) {
            *a += c * d;
        }
    }
    for (a, r) in acc.iter_mut().zip(grid.nodes()) {
        *a *= r.powf(e);
    }
    let mut out_terms = terms.clone();
    for _ in 0..k / 2 {
        out_terms = out_terms.iter().map(|t| l_of_term(t, op)).collect();
    }
    if k % 2 == 1 {
        out_terms = out_terms.iter().map(|t| diff_term(t, 1)).collect();
    }
    RadialFunction::sampled_with_terms(grid, acc, out_terms).expect("grid-matched samples")
}

/// Nodes of the local interpolant in the product rule.
const PRODUCT_NODES: usize = 6;

/// `∫_0^1 τ^n e^{κτ} dτ` for `n < PRODUCT_NODES`.
fn exp_moments(kappa: f64) -> [f64; PRODUCT_NODES] {
    let mut m = [0.0; PRODUCT_NODES];
    if kappa.abs() < 2.0 {
        for (n, mn) in m.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 0.0;
            for j in 0..80 {
                if j > 0 {
                    term *= kappa / j as f64;
                }
                let t = term / (n + j + 1) as f64;
                sum += t;
                if t.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            *mn = sum;
        }
    } else {
        let e = kappa.exp();
        m[0] = (e - 1.0) / kappa;
        for n in 1..PRODUCT_NODES {
            m[n] = (e - n as f64 * m[n - 1]) / kappa;
        }
    }
    m
}

/// Weights of `∫_0^1 q(τ) e^{κτ} dτ` for the interpolant `q` through `(τ_j, f_j)`.
fn product_weights(nodes: [f64; PRODUCT_NODES], kappa: f64) -> [f64; PRODUCT_NODES] {
    let m = exp_moments(kappa);
    let mut w = [0.0; PRODUCT_NODES];
    for j in 0..PRODUCT_NODES {
        // monomial coefficients of the Lagrange basis polynomial ℓ_j
        let mut c = [0.0; PRODUCT_NODES];
        c[0] = 1.0;
        let mut denom = 1.0;
        let mut deg = 0;
        for (l, &t) in nodes.iter().enumerate() {
            if l == j {
                continue;
            }
            denom *= nodes[j] - t;
            for d in (0..=deg).rev() {
                c[d + 1] += c[d];
                c[d] *= -t;
            }
            deg += 1;
        }
        w[j] = c.iter().zip(&m).map(|(ci, mi)| ci * mi).sum::<f64>() / denom;
    }
    w
}

/// `out[i] = ∫_{r_0}^{r_i} f(r) r^{c−1} dr = ∫ f e^{cs} ds`, with `f` a local
/// quintic in `s = ln r` on each cell and the exponential integrated exactly.
pub(crate) fn cumulative_power(f: &[f64], nodes: &[f64], h: f64, c: f64) -> Vec<f64> {
    let n = f.len() - 1;
    let mut out = vec![0.0; n + 1];
    let kappa = c * h;
    if n + 1 < PRODUCT_NODES {
        let m = exp_moments(kappa);
        let (w0, w1) = (m[0] - m[1], m[1]);
        for i in 0..n {
            out[i + 1] = out[i] + h * nodes[i].powf(c) * (w0 * f[i] + w1 * f[i + 1]);
        }
        return out;
    }
    let half = PRODUCT_NODES / 2 - 1;
    // one weight set per offset of the cell inside its stencil
    let sets: Vec<[f64; PRODUCT_NODES]> = (0..PRODUCT_NODES - 1)
        .map(|o| {
            let mut t = [0.0; PRODUCT_NODES];
            for (j, tj) in t.iter_mut().enumerate() {
                *tj = j as f64 - o as f64;
            }
            product_weights(t, kappa)
        })
        .collect();
    for i in 0..n {
        let start = i.saturating_sub(half).min(n + 1 - PRODUCT_NODES);
        let w = &sets[i - start];
        let cell: f64 = (0..PRODUCT_NODES).map(|j| w[j] * f[start + j]).sum();
        out[i + 1] = out[i] + h * nodes[i].powf(c) * cell;
    }
    out
}

/// `∫_{r_i}^{R} f(r) r^{c−1} dr` split as `total − cumulative`, returning
/// `(−cumulative, total)` so the residual stays small near the origin.
fn tail_integral(grid: &RadialGrid, f: &[f64], c: f64) -> (Vec<f64>, f64) {
    let cum = cumulative_power(f, grid.nodes(), grid.log_step(), c);
    let total = *cum.last().unwrap();
    (cum.iter().map(|x| -x).collect(), total)
}

/// Samples and closed-form terms of `v` on `grid`.
fn split_on(v: &RadialFunction, grid: &Arc<RadialGrid>) -> (Vec<f64>, Vec<PowerTerm>) {
    match v.backing() {
        Backing::Sampled { grid: g, samples, terms } if g == grid => (samples.clone(), terms.clone()),
        _ => (v.sample_on(grid), Vec::new()),
    }
}

/// Assembles the result and pins the last node to zero.
fn finish(grid: Arc<RadialGrid>, mut dev: Vec<f64>, terms: Vec<PowerTerm>) -> Result<RadialFunction> {
    let r = grid.r_max();
    let tail: f64 = terms.iter().map(|t| t.at(r)).sum();
    *dev.last_mut().unwrap() = -tail;
    RadialFunction::sampled_with_terms(grid, dev, terms)
}

fn grid_for(v: &RadialFunction, r: f64) -> Result<Arc<RadialGrid>> {
    if let Some(g) = v.grid() {
        if (g.r_max() - r).abs() <= 1e-12 * r {
            return Ok(g.clone());
        }
    }
    Ok(Arc::new(RadialGrid::with_defaults(r, DEFAULT_CELLS)?))
}

/// `u(r) = ∫_r^R t^{−γ} ∫_0^t v(s) s^θ ds dt`, so `L u = v` and `u(R) = 0`.
pub fn inverse_l(v: &RadialFunction, op: OperatorParams, r: f64) -> Result<RadialFunction> {
    inverse_l_on(v, op, grid_for(v, r)?)
}

pub fn inverse_l_on(v: &RadialFunction, op: OperatorParams, grid: Arc<RadialGrid>) -> Result<RadialFunction> {
    let (mut vs, terms) = split_on(v, &grid);
    let x = grid.nodes();
    let r_max = grid.r_max();
    let mut out_terms = Vec::new();
    for t in &terms {
        let a = t.exponent + op.theta + 1.0;
        let q = t.exponent + op.theta + 2.0 - op.gamma;
        if a <= 0.0 {
            return Err(Error::DivergentMeasure { exponent: t.exponent + op.theta });
        }
        if q.abs() < 1e-9 {
            // logarithmic case: leave it to the quadrature
            for (s, &r) in vs.iter_mut().zip(x) {
                *s += t.at(r);
            }
            continue;
        }
        let c = t.coef / (a * q);
        out_terms.push(PowerTerm::new(c * r_max.powf(q), 0.0));
        out_terms.push(PowerTerm::new(-c, q));
    }
    let c = op.theta + 1.0;
    let head = if vs[0] == 0.0 { 0.0 } else { vs[0] * WeightedMeasure::new(op.theta).of_ball(grid.r_min())? };
    let inner = cumulative_power(&vs, x, grid.log_step(), c);
    // ∫_0^r v s^θ ds = r^{θ+1} J(r) with J smooth at the origin
    let j: Vec<f64> = inner.iter().zip(x).map(|(i, r)| (i + head) / r.powf(c)).collect();
    let (dev, total) = tail_integral(&grid, &j, op.theta + 2.0 - op.gamma);
    out_terms.push(PowerTerm::new(total, 0.0));
    finish(grid, dev, out_terms)
}

/// `ũ(r) = −∫_r^R v ds`, so `ũ′ = v` and `ũ(R) = 0`.
pub fn inverse_derivative_on(v: &RadialFunction, grid: Arc<RadialGrid>) -> Result<RadialFunction> {
    let (mut vs, terms) = split_on(v, &grid);
    let r_max = grid.r_max();
    let mut out_terms = Vec::new();
    for t in &terms {
        let a = t.exponent + 1.0;
        if a.abs() < 1e-9 {
            for (s, &r) in vs.iter_mut().zip(grid.nodes()) {
                *s += t.at(r);
            }
            continue;
        }
        out_terms.push(PowerTerm::new(-t.coef * r_max.powf(a) / a, 0.0));
        out_terms.push(PowerTerm::new(t.coef / a, a));
    }
    let (dev, total) = tail_integral(&grid, &vs, 1.0);
    out_terms.push(PowerTerm::new(-total, 0.0));
    finish(grid, dev.into_iter().map(|d| -d).collect(), out_terms)
}

/// `u` with `∇_L^k u = v` and the Navier conditions `L^j u(R) = 0`.
pub fn inverse_grad_lk(v: &RadialFunction, k: usize, op: OperatorParams, r: f64) -> Result<RadialFunction> {
    inverse_grad_lk_on(v, k, op, grid_for(v, r)?)
}

pub fn inverse_grad_lk_on(v: &RadialFunction, k: usize, op: OperatorParams, grid: Arc<RadialGrid>) -> Result<RadialFunction> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    let mut w = if k % 2 == 1 { inverse_derivative_on(v, grid.clone())? } else { v.clone() };
    for _ in 0..k / 2 {
        w = inverse_l_on(&w, op, grid.clone())?;
    }
    Ok(w)
}

/// Nodal values of `u^{(j)}` on the quadrature grid.
fn derivative_samples(u: &RadialFunction, j: usize, grid: &RadialGrid, spec: StencilSpec) -> Result<Vec<f64>> {
    match u.backing() {
        Backing::Analytic { .. } => {
            let mut buf = vec![0.0; j + 1];
            grid.nodes()
                .iter()
                .map(|&r| {
                    u.jet(r, &mut buf)?;
                    Ok(buf[j])
                })
                .collect()
        }
        Backing::Sampled { .. } if j > 0 => {
            let (g, dev, terms) = sampled_parts(u);
            let mut d = radial_derivative(g.nodes(), &dev, g.log_step(), j, spec);
            for t in terms.iter().map(|t| diff_term(t, j)) {
                for (di, &r) in d.iter_mut().zip(g.nodes()) {
                    *di += t.at(r);
                }
            }
            Ok(d)
        }
        Backing::Sampled { .. } => Ok(u.samples().unwrap()),
        Backing::Steps { .. } if j == 0 => Ok(u.sample_on(grid)),
        Backing::Steps { .. } => Err(Error::InsufficientDerivatives { need: j, have: 0 }),
    }
}

/// `‖u‖_{X^{k,p}} = (Σ_j ‖u^{(j)}‖^p_{L^p_{α_j}})^{1/p}`.
pub fn xkp_norm(u: &RadialFunction, params: &SpaceParams) -> Result<f64> {
    params.validate()?;
    if u.k_max() < params.k {
        return Err(Error::InsufficientDerivatives { need: params.k, have: u.k_max() });
    }
    let grid = u.quadrature_grid()?;
    let mut sum = 0.0;
    for j in 0..=params.k {
        let d = derivative_samples(u, j, &grid, StencilSpec::default())?;
        let f = RadialFunction::sampled(grid.clone(), d)?;
        sum += weighted_lp_integral(&f, params.p, params.alphas[j])?;
    }
    Ok(sum.powf(1.0 / params.p))
}

/// `|L^j u(R)|` for `j = 0..=⌊(k−1)/2⌋`.
pub fn navier_residuals(u: &RadialFunction, k: usize, op: OperatorParams) -> Result<Vec<f64>> {
    let r = u.support_radius()?;
    let mut w = u.clone();
    let mut out = Vec::new();
    for j in 0..=(k.saturating_sub(1)) / 2 {
        if j > 0 {
            w = apply_l(&w, op)?;
        }
        out.push(w.value(r).abs());
    }
    Ok(out)
}

pub const NAVIER_TOL: f64 = 1e-8;

/// Per-member outcome of [`norm_equivalence_probe`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeEntry {
    Ratio(f64),
    Rejected(String),
}

/// `‖∇_L^k u‖_{L^p_ν} / ‖u‖_{X^{k,p}}` per member; members violating the
/// Navier conditions are rejected.
pub fn norm_equivalence_probe(family: &[RadialFunction], params: &SpaceParams) -> Result<Vec<ProbeEntry>> {
    params.validate()?;
    let op = OperatorParams::of(params);
    let probe = |u: &RadialFunction| -> Result<ProbeEntry> {
        let nav = navier_residuals(u, params.k, op)?;
        if let Some((j, r)) = nav.iter().enumerate().find(|(_, r)| **r >= NAVIER_TOL) {
            return Ok(ProbeEntry::Rejected(format!("|L^{j} u(R)| = {r:e}")));
        }
        let g = apply_grad_lk(u, params.k, op)?;
        let num = crate::radial::weighted_lp_norm(&g, params.p, params.nu())?;
        let den = xkp_norm(u, params)?;
        Ok(ProbeEntry::Ratio(num / den))
    };
    crate::par::map(family, probe).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(m: f64, support: f64) -> RadialFunction {
        RadialFunction::analytic(Some(support), 12, move |r, out| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = falling(m, i) * r.powf(m - i as f64);
            }
        })
    }

    #[test]
    fn l_of_power() {
        let op = OperatorParams::new(1.5, 2.5);
        let m = 3.0;
        let lu = apply_l(&power(m, 2.0), op).unwrap();
        for r in [0.1f64, 0.7, 1.9] {
            let exact = -m * (op.gamma + m - 1.0) * r.powf(m + op.gamma - 2.0 - op.theta);
            assert!((lu.value(r) - exact).abs() < 1e-12 * exact.abs());
        }
    }

    #[test]
    fn laplacian_of_r_squared() {
        let n = 4.0;
        let lu = apply_l(&power(2.0, 1.0), OperatorParams::new(n - 1.0, n - 1.0)).unwrap();
        assert!((lu.value(0.3) + 2.0 * n).abs() < 1e-12);
    }

    #[test]
    fn grad_l4_of_r6() {
        let g = apply_grad_lk(&power(6.0, 1.0), 4, OperatorParams::new(3.0, 3.0)).unwrap();
        assert!((g.value(0.5) - 1152.0 * 0.25).abs() < 1e-9);
    }

    #[test]
    fn inverse_of_constant() {
        let op = OperatorParams::new(1.0, 2.0);
        let r_max = 1.5;
        let grid = Arc::new(RadialGrid::with_defaults(r_max, 512).unwrap());
        let v = RadialFunction::from_fn(grid.clone(), |_| 2.0);
        let u = inverse_l(&v, op, r_max).unwrap();
        let d = op.theta + 2.0 - op.gamma;
        for &r in grid.nodes().iter().step_by(37) {
            let exact = 2.0 * (r_max.powf(d) - r.powf(d)) / ((op.theta + 1.0) * d);
            assert!((u.value(r) - exact).abs() < 1e-10 * exact.abs().max(1e-3), "r={r}");
        }
        assert_eq!(u.value(r_max), 0.0);
    }

    #[test]
    fn odd_inverse_of_one() {
        let grid = Arc::new(RadialGrid::with_defaults(2.0, 256).unwrap());
        let v = RadialFunction::from_fn(grid.clone(), |_| 1.0);
        let u = inverse_grad_lk(&v, 1, OperatorParams::new(0.0, 0.0), 2.0).unwrap();
        for &r in grid.nodes() {
            assert!((u.value(r) - (r - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn divergent_inner_integral() {
        let grid = Arc::new(RadialGrid::with_defaults(1.0, 64).unwrap());
        let v = RadialFunction::from_fn(grid, |_| 1.0);
        assert!(matches!(
            inverse_l(&v, OperatorParams::new(-1.5, 0.0), 1.0),
            Err(Error::DivergentMeasure { .. })
        ));
    }

    #[test]
    fn product_rule_is_exact_for_cubics() {
        let grid = RadialGrid::geometric(0.01, 3.0, 40).unwrap();
        let x = grid.nodes();
        let h = grid.log_step();
        for c in [-2.5, 0.0, 1.0, 4.0, 40.0] {
            let f: Vec<f64> = x.iter().map(|r| { let s = r.ln(); 1.0 - s + 0.3 * s * s * s }).collect();
            let cum = cumulative_power(&f, x, h, c);
            let fine = RadialGrid::geometric(0.01, 3.0, 40 * 64).unwrap();
            let ff: Vec<f64> = fine.nodes().iter().map(|r| { let s = r.ln(); 1.0 - s + 0.3 * s * s * s }).collect();
            let reference = cumulative_power(&ff, fine.nodes(), fine.log_step(), c);
            let (a, b) = (cum[40], reference[40 * 64]);
            assert!((a - b).abs() < 1e-11 * b.abs(), "c={c}: {a} vs {b}");
        }
    }

    #[test]
    fn steps_have_no_derivatives() {
        let f = RadialFunction::steps(vec![0.0, 1.0], vec![1.0]).unwrap();
        assert!(apply_l(&f, OperatorParams::new(1.0, 1.0)).is_err());
    }
}
