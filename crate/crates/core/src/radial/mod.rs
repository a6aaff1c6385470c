//! Geometric grids, power-weighted measures, quadrature and the radial
//! function representation.

mod function;
mod grid;
mod params;
pub mod quadrature;
pub mod stencil;

pub use function::{Backing, Jet, PowerTerm, RadialFunction};
pub use grid::{RadialGrid, WeightedMeasure, DEFAULT_CELLS, DEFAULT_FLOOR};
pub(crate) use grid::linear_cell_weights;
pub use params::SpaceParams;

use crate::error::{param, Error, Result};

/// `∫_lo^hi f(r) r^e dr`.
///
/// Each grid cell integrates the linear interpolant of `f` against `r^e`
/// exactly; `(0, r_min)` uses `f(r_min)` times the exact measure. Step
/// functions are integrated exactly.
pub fn weighted_integral(f: &RadialFunction, measure: WeightedMeasure, lo: f64, hi: f64) -> Result<f64> {
    let e = measure.exponent;
    if lo < 0.0 || hi < lo {
        return param(format!("bad interval [{lo}, {hi}]"));
    }
    if lo == 0.0 && e <= -1.0 {
        return Err(Error::DivergentMeasure { exponent: e });
    }
    let support = f.support_radius()?;
    let hi = hi.min(support);
    if hi <= lo {
        return Ok(0.0);
    }
    if let Backing::Steps { edges, values } = f.backing() {
        let mut sum = 0.0;
        for (i, v) in values.iter().enumerate() {
            let a = edges[i].max(lo);
            let b = edges[i + 1].min(hi);
            if b > a && *v != 0.0 {
                sum += v * measure.of_shell(a, b);
            }
        }
        return Ok(sum);
    }
    let grid = f.quadrature_grid()?;
    let hi = hi.min(grid.r_max());
    let x = grid.nodes();
    let u = f.sample_on(&grid);
    let mut sum = 0.0;
    if lo < grid.r_min() {
        let b = hi.min(grid.r_min());
        if u[0] != 0.0 {
            sum += u[0] * measure.of_shell(lo, b);
        }
    }
    if hi <= grid.r_min() {
        return Ok(sum);
    }
    let i0 = if lo <= grid.r_min() { 0 } else { grid.cell_of(lo) };
    let i1 = grid.cell_of(hi);
    let h = grid.log_step();
    for i in i0..=i1 {
        let (a, b) = (x[i], x[i + 1]);
        let (c, d) = (a.max(lo), b.min(hi));
        if d <= c {
            continue;
        }
        if c == a && d == b {
            let (w0, w1) = linear_cell_weights(a, h, e);
            sum += w0 * u[i] + w1 * u[i + 1];
        } else {
            let lerp = |r: f64| u[i] + (u[i + 1] - u[i]) * (r - a) / (b - a);
            let (w0, w1) = linear_cell_weights(c, (d / c).ln(), e);
            sum += w0 * lerp(c) + w1 * lerp(d);
        }
    }
    Ok(sum)
}

/// `‖f‖_{L^p_α} = (∫_0^R |f|^p r^α dr)^{1/p}`.
pub fn weighted_lp_norm(f: &RadialFunction, p: f64, alpha: f64) -> Result<f64> {
    Ok(weighted_lp_integral(f, p, alpha)?.powf(1.0 / p))
}

/// `∫_0^R |f|^p r^α dr`. For `α ≤ −1` the function must vanish near the
/// origin.
pub fn weighted_lp_integral(f: &RadialFunction, p: f64, alpha: f64) -> Result<f64> {
    if p < 1.0 {
        return param(format!("p must be at least 1, got {p}"));
    }
    let g = f.map(move |v| v.abs().powf(p));
    let lo = if alpha > -1.0 {
        0.0
    } else {
        let start = match f.backing() {
            Backing::Steps { edges, .. } => edges[0],
            _ => f.quadrature_grid()?.r_min(),
        };
        if start <= 0.0 || g.value(start) != 0.0 {
            return Err(Error::DivergentMeasure { exponent: alpha });
        }
        start
    };
    weighted_integral(&g, WeightedMeasure::new(alpha), lo, f64::INFINITY)
}
