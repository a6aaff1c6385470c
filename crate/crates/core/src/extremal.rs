//! Moser-type concentrating sequences: the smooth cap `φ`, the profile `H`,
//! the functions `ψ_{n,ε}(r) = H(log(R/r)/log n)`, their normalization, and
//! divergence-rate sweeps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{hypothesis, param, Error, Result};
use crate::functionals::{exact_growth_functional_on, grad_norm, ln_lp_integral_on, InequalityParams};
use crate::operators::{grad_lk_polynomial, OperatorParams};
use crate::par;
use crate::radial::quadrature::{gauss_legendre, integrate};
use crate::radial::stencil::stirling_first;
use crate::radial::{RadialFunction, RadialGrid, SpaceParams, DEFAULT_CELLS, DEFAULT_FLOOR};
use crate::special::coefficient_table;

/// Tolerated slack in the normalization check.
pub const NORMALIZATION_SLACK: f64 = 1.02;

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_N_LIST: [u64; 5] = [100, 1_000, 10_000, 100_000, 1_000_000];

/// Polynomial cap on `[0, 1]`, flat at `0` and matching the line `t` at `1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapPolynomial {
    pub k: usize,
    /// Monomial coefficients, ascending.
    pub coefficients: Vec<f64>,
}

impl CapPolynomial {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// `φ^{(d)}(x)`.
    pub fn eval(&self, x: f64, d: usize) -> f64 {
        let mut acc = 0.0;
        for (j, c) in self.coefficients.iter().enumerate().skip(d).rev() {
            acc = acc * x + c * falling(j, d);
        }
        acc
    }

    /// Largest violation of the interpolation conditions.
    pub fn residual(&self) -> f64 {
        conditions(self.k)
            .iter()
            .map(|&(x, d, v)| (self.eval(x, d) - v).abs())
            .fold(0.0, f64::max)
    }

    /// `min φ′` over `points` equispaced nodes of `[0, 1]`.
    pub fn min_slope(&self, points: usize) -> f64 {
        (0..points)
            .map(|i| self.eval(i as f64 / (points - 1) as f64, 1))
            .fold(f64::INFINITY, f64::min)
    }
}

fn falling(j: usize, d: usize) -> f64 {
    (0..d).map(|i| j as f64 - i as f64).product()
}

/// `(x, order, value)` triples: `φ^{(i)}(0) = 0` for `i ≤ k+1`, `φ(1) = φ′(1) = 1`,
/// `φ^{(i)}(1) = 0` for `2 ≤ i ≤ k−1`.
fn conditions(k: usize) -> Vec<(f64, usize, f64)> {
    let mut c: Vec<(f64, usize, f64)> = (0..=k + 1).map(|i| (0.0, i, 0.0)).collect();
    c.push((1.0, 0, 1.0));
    c.push((1.0, 1, 1.0));
    c.extend((2..k).map(|i| (1.0, i, 0.0)));
    c
}

/// The minimal-degree cap through the Hermite conditions; degree `2k+1`
/// for `k ≥ 2` and 4 for `k = 1`, where the conditions number five.
///
/// Writing `φ = x^{k+2} q(x)`, the conditions at `1` fix the Taylor
/// coefficients of `q` about `1` as those of `φ` divided by `(1+y)^{k+2}`.
/// Every coefficient is an integer, so the result is exact in `f64`.
pub fn make_cap(k: usize) -> Result<CapPolynomial> {
    if k == 0 {
        return param("cap order k must be positive");
    }
    let m = k.max(2);
    let a = k + 2;
    // Taylor data of φ about 1: φ(1) = φ′(1) = 1, higher orders zero
    let mut target = vec![0.0; m];
    target[0] = 1.0;
    target[1] = 1.0;
    // (1+y)^{−a} = Σ (−1)^j C(a+j−1, j) y^j
    let inv: Vec<f64> = (0..m).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(a + j - 1, j)).collect();
    let qy: Vec<f64> = (0..m).map(|j| (0..=j).map(|i| target[i] * inv[j - i]).sum()).collect();
    // q(x − 1) in powers of x
    let mut q = vec![0.0; m];
    for (j, c) in qy.iter().enumerate() {
        for i in 0..=j {
            let sign = if (j - i) % 2 == 0 { 1.0 } else { -1.0 };
            q[i] += c * binomial(j, i) * sign;
        }
    }
    let mut coefficients = vec![0.0; a];
    coefficients.extend(q);
    let cap = CapPolynomial { k, coefficients };
    let res = cap.residual();
    if !(res < 1e-10) {
        return Err(Error::NonConvergence(format!("Hermite residual {res:e} for k = {k}")));
    }
    let slope = cap.min_slope(1000);
    if slope < -1e-10 {
        return Err(Error::NotMonotone(slope));
    }
    Ok(cap)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// `H(t)`: `εφ(t/ε)` on `(0, ε]`, `t` on `(ε, 1−ε]`, `1 − εφ((1−t)/ε)` on
/// `(1−ε, 1]`, `1` beyond and `0` for `t ≤ 0`.
pub fn h_profile(t: f64, epsilon: f64, cap: &CapPolynomial) -> f64 {
    let mut out = [0.0];
    h_jet(t, epsilon, cap, &mut out);
    out[0]
}

/// `H^{(i)}(t)` for `i < out.len()`, one-sided inside each branch.
pub fn h_jet(t: f64, epsilon: f64, cap: &CapPolynomial, out: &mut [f64]) {
    out.fill(0.0);
    if t <= 0.0 {
        return;
    }
    if t <= epsilon {
        let x = t / epsilon;
        for (i, o) in out.iter_mut().enumerate() {
            *o = epsilon.powi(1 - i as i32) * cap.eval(x, i);
        }
    } else if t <= 1.0 - epsilon {
        out[0] = t;
        if out.len() > 1 {
            out[1] = 1.0;
        }
    } else if t <= 1.0 {
        let x = (1.0 - t) / epsilon;
        out[0] = 1.0 - epsilon * cap.eval(x, 0);
        for (i, o) in out.iter_mut().enumerate().skip(1) {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *o = -sign * epsilon.powi(1 - i as i32) * cap.eval(x, i);
        }
    } else {
        out[0] = 1.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserSequenceParams {
    pub n: u64,
    pub epsilon: f64,
    /// Outer radius `R`.
    pub radius: f64,
    pub space: SpaceParams,
}

impl MoserSequenceParams {
    pub fn new(n: u64, epsilon: f64, radius: f64, space: SpaceParams) -> Result<Self> {
        let m = Self { n, epsilon, radius, space };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return param(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return param(format!("epsilon must lie in (0, 1/2), got {}", self.epsilon));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return param(format!("radius must be positive, got {}", self.radius));
        }
        self.space.validate()
    }

    pub fn with_n(&self, n: u64) -> Self {
        Self { n, ..self.clone() }
    }

    fn ln_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// `log(R/r)/log n`.
    fn t_of(&self, r: f64) -> f64 {
        (self.radius / r).ln() / self.ln_n()
    }
}

/// `ψ_{n,ε}(r)`.
pub fn psi(r: f64, msp: &MoserSequenceParams, cap: &CapPolynomial) -> f64 {
    if r >= msp.radius {
        return 0.0;
    }
    h_profile(msp.t_of(r), msp.epsilon, cap)
}

/// `D^i ψ` for `i < out.len()`, `D = r d/dr`: `(−1/log n)^i H^{(i)}(t)`.
fn psi_log_jet(r: f64, msp: &MoserSequenceParams, cap: &CapPolynomial, out: &mut [f64]) {
    if r >= msp.radius {
        out.fill(0.0);
        return;
    }
    h_jet(msp.t_of(r), msp.epsilon, cap, out);
    let g = -1.0 / msp.ln_n();
    let mut f = 1.0;
    for o in out.iter_mut() {
        *o *= f;
        f *= g;
    }
}

/// `ψ_{n,ε}` with exact derivatives up to order `k`.
pub fn psi_function(msp: &MoserSequenceParams, cap: &CapPolynomial) -> Result<RadialFunction> {
    msp.validate()?;
    let k = msp.space.k;
    let stirling = Arc::new(stirling_first(k.max(1)));
    let (m, c) = (msp.clone(), cap.clone());
    Ok(RadialFunction::analytic(Some(msp.radius), k, move |r, out| {
        let mut d = vec![0.0; out.len()];
        psi_log_jet(r, &m, &c, &mut d);
        let own;
        let s: &[Vec<f64>] = if out.len() <= stirling.len() {
            &stirling
        } else {
            own = stirling_first(out.len() - 1);
            &own
        };
        // r^m d^m/dr^m = Σ_i s(m, i) D^i
        out[0] = d[0];
        let mut rm = 1.0;
        for mm in 1..out.len() {
            rm /= r;
            out[mm] = rm * (1..=mm).map(|i| s[mm][i] * d[i]).sum::<f64>();
        }
    }))
}

/// `|c_{1j}|` for `k = 2j`, `|j(γ−2−θ)c_{1j}|` for `k = 2j+1` (`1` when `j = 0`).
pub fn normalization_coefficient(space: &SpaceParams) -> f64 {
    let j = space.k / 2;
    if j == 0 {
        return 1.0;
    }
    let c1j = coefficient_table(space.theta, space.gamma, j).get(1, j);
    if space.k % 2 == 0 {
        c1j.abs()
    } else {
        (j as f64 * (space.gamma - 2.0 - space.theta) * c1j).abs()
    }
}

/// `‖∇_L^k ψ_{n,ε}‖_{L^p_ν}` from the exact jet, integrated in `t = log(R/r)/log n`
/// branch by branch. `ψ` is constant outside `(R/n, R)`.
pub fn psi_grad_norm(msp: &MoserSequenceParams, cap: &CapPolynomial) -> Result<f64> {
    msp.validate()?;
    let s = &msp.space;
    let (poly, e) = grad_lk_polynomial(s.k, OperatorParams::of(s));
    let (p, nu, ln_n) = (s.p, s.nu(), msp.ln_n());
    let rule = gauss_legendre(12);
    let integrand = |t: f64| {
        let r = msp.radius * (-t * ln_n).exp();
        let mut d = vec![0.0; poly.len()];
        psi_log_jet(r, msp, cap, &mut d);
        let g: f64 = poly.iter().zip(&d).map(|(c, x)| c * x).sum();
        g.abs().powf(p) * r.powf(e * p + nu + 1.0)
    };
    let eps = msp.epsilon;
    let mut total = 0.0;
    for (a, b) in [(0.0, eps), (eps, 1.0 - eps), (1.0 - eps, 1.0)] {
        let pieces = 32;
        let h = (b - a) / pieces as f64;
        for i in 0..pieces {
            let lo = a + i as f64 * h;
            total += integrate(&integrand, lo, lo + h, &rule);
        }
    }
    Ok((ln_n * total).powf(1.0 / p))
}

/// `u_{n,ε} = ψ_{n,ε}/(|c|(log n)^{(1−p)/p} A^{1/p})` with the measured `A`.
#[derive(Debug, Clone)]
pub struct NormalizedMoser {
    pub u: RadialFunction,
    /// `A_{ε,n} = ‖∇_L^k ψ‖^p (log n)^{p−1} |c|^{−p}`.
    pub a_measured: f64,
    pub psi_grad_norm: f64,
    /// Independent grid check of `‖∇_L^k u‖_{L^p_ν}`.
    pub grad_norm: f64,
    /// `u = scale · ψ`.
    pub scale: f64,
}

pub fn normalized_moser(msp: &MoserSequenceParams) -> Result<NormalizedMoser> {
    msp.validate()?;
    let s = &msp.space;
    if (s.alpha_k() - s.k as f64 * s.p + 1.0).abs() > 1e-12 * (1.0 + s.alpha_k().abs()) {
        return hypothesis(format!("alpha_k = {} is not kp - 1", s.alpha_k()));
    }
    let cap = make_cap(s.k)?;
    let gn = psi_grad_norm(msp, &cap)?;
    let c = normalization_coefficient(s);
    let ln_n = msp.ln_n();
    let p = s.p;
    let a = gn.powf(p) * ln_n.powf(p - 1.0) * c.powf(-p);
    let scale = 1.0 / (c * ln_n.powf((1.0 - p) / p) * a.powf(1.0 / p));
    let u = psi_function(msp, &cap)?.scale(scale);
    let check = grad_norm(&u, s)?;
    if !(check <= NORMALIZATION_SLACK) {
        return Err(Error::Normalization(check));
    }
    Ok(NormalizedMoser { u, a_measured: a, psi_grad_norm: gn, grad_norm: check, scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Functional divided by `‖u‖^p_{L^p_η}`.
    Ratio,
    /// The functional itself.
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub mode: SweepMode,
    /// Cells of the quadrature grid on `(r_min, R)`.
    pub n_cells: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { mode: SweepMode::Ratio, n_cells: DEFAULT_CELLS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub ratio: f64,
    pub ln_ratio: f64,
    pub ln_functional: f64,
    pub ln_norm_p: f64,
    pub overflowed: bool,
    pub a_measured: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub beta: f64,
    pub q: f64,
    pub mode: SweepMode,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln ratio` against `ln ln n` over the last
    /// `⌈N/2⌉` rows.
    pub slope: f64,
}

pub fn sharpness_sweep(beta: f64, q: f64, n_list: &[u64], base: &MoserSequenceParams) -> Result<SweepTable> {
    sharpness_sweep_with(beta, q, n_list, base, SweepOptions::default())
}

pub fn sharpness_sweep_with(
    beta: f64,
    q: f64,
    n_list: &[u64],
    base: &MoserSequenceParams,
    opts: SweepOptions,
) -> Result<SweepTable> {
    base.validate()?;
    if n_list.len() < 3 {
        return param(format!("need at least 3 values of n, got {}", n_list.len()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return param("n_list must be strictly ascending");
    }
    if opts.n_cells < 16 {
        return param(format!("n_cells too small: {}", opts.n_cells));
    }
    let s = &base.space;
    let ip = InequalityParams::new(beta, q, s.p, s.eta)?;
    let rows = par::map(n_list, |&n| sweep_row(&base.with_n(n), &ip, opts));
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let tail = &rows[rows.len() - rows.len().div_ceil(2)..];
    let xs: Vec<f64> = tail.iter().map(|r| (r.n as f64).ln().ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.ln_ratio).collect();
    Ok(SweepTable { beta, q, mode: opts.mode, rows, slope: ls_slope(&xs, &ys) })
}

fn sweep_row(msp: &MoserSequenceParams, ip: &InequalityParams, opts: SweepOptions) -> Result<SweepRow> {
    let nm = normalized_moser(msp)?;
    // the grid must reach well inside the plateau r < R/n
    let floor = DEFAULT_FLOOR.min(1e-2 / msp.n as f64);
    let grid = RadialGrid::geometric(floor * msp.radius, msp.radius, opts.n_cells)?;
    let f = exact_growth_functional_on(&nm.u, ip, &grid)?;
    let ln_norm_p = ln_lp_integral_on(&nm.u, ip.p, ip.eta, &grid)?;
    let ln_ratio = match opts.mode {
        SweepMode::Ratio => f.ln_value - ln_norm_p,
        SweepMode::Integral => f.ln_value,
    };
    Ok(SweepRow {
        n: msp.n,
        ratio: ln_ratio.exp(),
        ln_ratio,
        ln_functional: f.ln_value,
        ln_norm_p,
        overflowed: f.overflowed,
        a_measured: nm.a_measured,
        grad_norm: nm.grad_norm,
    })
}

/// Least-squares slope of `ys` on `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_k2_closed_form() {
        // x⁴(4 − 3x)
        let c = make_cap(2).unwrap();
        assert_eq!(c.degree(), 5);
        let want = [0.0, 0.0, 0.0, 0.0, 4.0, -3.0];
        for (a, b) in c.coefficients.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_matches_linear_solve() {
        use nalgebra::{DMatrix, DVector};
        for k in 1..=6 {
            let rows = conditions(k);
            let n = rows.len();
            let a = DMatrix::from_fn(n, n, |i, j| {
                let (x, d, _) = rows[i];
                if j < d { 0.0 } else { falling(j, d) * f64::powi(x, (j - d) as i32) }
            });
            let b = DVector::from_iterator(n, rows.iter().map(|r| r.2));
            let sol = a.lu().solve(&b).unwrap();
            let cap = make_cap(k).unwrap();
            assert_eq!(cap.coefficients.len(), n);
            for (x, y) in cap.coefficients.iter().zip(sol.iter()) {
                assert!((x - y).abs() < 1e-6 * (1.0 + y.abs()), "k={k}");
            }
        }
    }

    #[test]
    fn caps_satisfy_conditions() {
        for k in 1..=6 {
            let c = make_cap(k).unwrap();
            assert!(c.residual() < 1e-10, "k={k}");
            assert!(c.min_slope(1000) >= -1e-10, "k={k}");
            assert!((c.eval(1.0, 0) - 1.0).abs() < 1e-12);
        }
        assert_eq!(make_cap(1).unwrap().degree(), 4);
        assert!(make_cap(0).is_err());
    }

    #[test]
    fn profile_branches() {
        let cap = make_cap(2).unwrap();
        let e = 0.1;
        assert_eq!(h_profile(0.0, e, &cap), 0.0);
        assert_eq!(h_profile(-1.0, e, &cap), 0.0);
        assert_eq!(h_profile(0.4, e, &cap), 0.4);
        assert!((h_profile(1.0, e, &cap) - 1.0).abs() < 1e-15);
        assert_eq!(h_profile(2.0, e, &cap), 1.0);
        // C¹ across the junctions
        for t in [e, 1.0 - e] {
            let mut a = [0.0; 2];
            let mut b = [0.0; 2];
            h_jet(t - 1e-9, e, &cap, &mut a);
            h_jet(t + 1e-9, e, &cap, &mut b);
            assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn psi_landmarks() {
        let cap = make_cap(2).unwrap();
        let m = MoserSequenceParams::new(100, 0.1, 2.0, SpaceParams::critical(2, 2.0, 3.0, 3.0)).unwrap();
        assert_eq!(psi(2.0, &m, &cap), 0.0);
        assert!((psi(2.0 / 100.0, &m, &cap) - 1.0).abs() < 1e-12);
        assert!((psi(2.0 / 10.0, &m, &cap) - 0.5).abs() < 1e-12);
        assert_eq!(psi(1e-5, &m, &cap), 1.0);
    }

    #[test]
    fn jet_matches_differences() {
        let cap = make_cap(2).unwrap();
        let m = MoserSequenceParams::new(1000, 0.1, 1.0, SpaceParams::critical(2, 2.0, 3.0, 3.0)).unwrap();
        let f = psi_function(&m, &cap).unwrap();
        for r in [0.9, 0.3, 0.01, 0.0015] {
            let mut j = [0.0; 3];
            f.jet(r, &mut j).unwrap();
            let h = 1e-6 * r;
            let d1 = (f.value(r + h) - f.value(r - h)) / (2.0 * h);
            assert!((d1 - j[1]).abs() < 1e-5 * j[1].abs().max(1.0), "r={r}");
        }
    }

    #[test]
    fn slope_of_a_line() {
        assert!((ls_slope(&[1.0, 2.0, 3.0], &[2.0, 4.5, 7.0]) - 2.5).abs() < 1e-14);
    }
}
