use crate::error::{param, Error, Result};

/// Geometric node set on `[r_min, r_max]`, uniform in `log r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    n_cells: usize,
    log_step: f64,
    nodes: Vec<f64>,
}

/// The measure `r^exponent dr` on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMeasure {
    pub exponent: f64,
}

impl WeightedMeasure {
    pub fn new(exponent: f64) -> Self {
        Self { exponent }
    }

    /// Measure of `(0, r)`.
    pub fn of_ball(&self, r: f64) -> Result<f64> {
        if self.exponent <= -1.0 {
            return Err(Error::DivergentMeasure { exponent: self.exponent });
        }
        Ok(r.powf(self.exponent + 1.0) / (self.exponent + 1.0))
    }

    /// Measure of `(a, b)` for `0 < a <= b`; stable for thin shells.
    pub fn of_shell(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        if a <= 0.0 {
            return self.of_ball(b).unwrap_or(f64::INFINITY);
        }
        power_integral(a, (b / a).ln(), self.exponent)
    }

    /// Radius `r` with `μ(0, r) = m`.
    pub fn radius_of(&self, m: f64) -> Result<f64> {
        if self.exponent <= -1.0 {
            return Err(Error::DivergentMeasure { exponent: self.exponent });
        }
        Ok(((self.exponent + 1.0) * m.max(0.0)).powf(1.0 / (self.exponent + 1.0)))
    }
}

/// `(e^{c h} - 1) / c`, continuous at `c = 0`.
fn expm1_over(c: f64, h: f64) -> f64 {
    if c == 0.0 {
        h
    } else {
        (c * h).exp_m1() / c
    }
}

/// `∫_a^{a e^h} r^e dr`.
pub(crate) fn power_integral(a: f64, h: f64, e: f64) -> f64 {
    a.powf(e + 1.0) * expm1_over(e + 1.0, h)
}

/// `E(c+1, h) - E(c, h)` with `E = expm1_over`, computed without cancellation
/// when `h` is small.
fn expm1_over_diff(c: f64, h: f64) -> f64 {
    if h * (c.abs() + 1.0) > 0.5 {
        return expm1_over(c + 1.0, h) - expm1_over(c, h);
    }
    // sum_{n>=2} ((c+1)^{n-1} - c^{n-1}) h^n / n!
    let mut sum = 0.0;
    let mut hn = h;
    let mut pc1 = 1.0;
    let mut pc = 1.0;
    let mut fact = 1.0;
    for n in 2..60 {
        hn *= h;
        fact *= n as f64;
        pc1 *= c + 1.0;
        pc *= c;
        let term = (pc1 - pc) * hn / fact;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Weights `(w0, w1)` with `∫_a^b f(r) r^e dr = w0 f(a) + w1 f(b)` for linear `f`,
/// where `b = a e^h`.
pub(crate) fn linear_cell_weights(a: f64, h: f64, e: f64) -> (f64, f64) {
    let total = power_integral(a, h, e);
    let width = a * h.exp_m1();
    let w1 = a.powf(e + 2.0) * expm1_over_diff(e + 1.0, h) / width;
    (total - w1, w1)
}

impl RadialGrid {
    pub fn geometric(r_min: f64, r_max: f64, n_cells: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max.is_finite()) {
            return param(format!("grid bounds must be positive and finite, got ({r_min}, {r_max})"));
        }
        if r_min >= r_max {
            return param(format!("r_min {r_min} must be below r_max {r_max}"));
        }
        if n_cells < 2 {
            return param(format!("need at least 2 cells, got {n_cells}"));
        }
        let log_step = (r_max / r_min).ln() / n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| r_min * (i as f64 * log_step).exp()).collect();
        nodes[0] = r_min;
        nodes[n_cells] = r_max;
        Ok(Self { r_min, r_max, n_cells, log_step, nodes })
    }

    /// Grid on `(0, r_max]` with the default floor `1e-8 r_max`.
    pub fn with_defaults(r_max: f64, n_cells: usize) -> Result<Self> {
        Self::geometric(DEFAULT_FLOOR * r_max, r_max, n_cells)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Uniform step in `log r`.
    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    pub fn ratio(&self) -> f64 {
        self.log_step.exp()
    }

    /// Index of the cell `[x_i, x_{i+1}]` containing `r`, clamped to the grid.
    pub fn cell_of(&self, r: f64) -> usize {
        if r <= self.r_min {
            return 0;
        }
        let i = ((r / self.r_min).ln() / self.log_step).floor() as isize;
        let mut i = i.clamp(0, self.n_cells as isize - 1) as usize;
        while i > 0 && self.nodes[i] > r {
            i -= 1;
        }
        while i + 1 < self.n_cells && self.nodes[i + 1] < r {
            i += 1;
        }
        i
    }

    /// Exact `r^exponent` measure of every cell.
    pub fn cell_measures(&self, exponent: f64) -> Vec<f64> {
        let h = self.log_step;
        self.nodes[..self.n_cells].iter().map(|&a| power_integral(a, h, exponent)).collect()
    }

    /// Node weights of the linear-times-exact-power rule on `[r_min, r_max]`;
    /// the head segment `(0, r_min)` is not included.
    pub fn linear_weights(&self, exponent: f64) -> Vec<f64> {
        let h = self.log_step;
        let mut w = vec![0.0; self.nodes.len()];
        for i in 0..self.n_cells {
            let (w0, w1) = linear_cell_weights(self.nodes[i], h, exponent);
            w[i] += w0;
            w[i + 1] += w1;
        }
        w
    }

    /// `∫_0^{r_max} f r^e dr` for nodal samples, head segment included.
    pub fn integrate_samples(&self, samples: &[f64], exponent: f64) -> Result<f64> {
        debug_assert_eq!(samples.len(), self.nodes.len());
        let head = if samples[0] == 0.0 {
            0.0
        } else {
            samples[0] * WeightedMeasure::new(exponent).of_ball(self.r_min)?
        };
        let h = self.log_step;
        let mut sum = head;
        for i in 0..self.n_cells {
            let (w0, w1) = linear_cell_weights(self.nodes[i], h, exponent);
            sum += w0 * samples[i] + w1 * samples[i + 1];
        }
        Ok(sum)
    }
}

pub const DEFAULT_FLOOR: f64 = 1e-8;
pub const DEFAULT_CELLS: usize = 4096;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grids() {
        let g = RadialGrid::geometric(1e-6, 1.0, 2).unwrap();
        assert!((g.nodes()[1] - 1e-3).abs() < 1e-15);
        let g = RadialGrid::geometric(0.5, 2.0, 2).unwrap();
        assert!((g.nodes()[1] - 1.0).abs() < 1e-15);
        assert_eq!(g.nodes()[2], 2.0);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(RadialGrid::geometric(0.0, 1.0, 4).is_err());
        assert!(RadialGrid::geometric(2.0, 1.0, 4).is_err());
        assert!(RadialGrid::geometric(0.1, 1.0, 1).is_err());
    }

    #[test]
    fn default_grid_ratio() {
        let g = RadialGrid::with_defaults(10.0, 4096).unwrap();
        assert_eq!(g.len(), 4097);
        let q = (10.0f64 / 1e-7).powf(1.0 / 4096.0);
        for w in g.nodes().windows(2) {
            assert!((w[1] / w[0] - q).abs() < 1e-12 * q);
        }
    }

    #[test]
    fn cell_weights_reproduce_linear_moments() {
        for &e in &[-0.5, 0.0, 1.0, 3.0, 7.5] {
            for &(a, h) in &[(0.3, 1e-4), (1e-6, 0.02), (2.0, 1.3)] {
                let b: f64 = a * f64::exp(h);
                let (w0, w1) = linear_cell_weights(a, h, e);
                let m0 = (b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0);
                let m1 = (b.powf(e + 2.0) - a.powf(e + 2.0)) / (e + 2.0);
                assert!(((w0 + w1) - m0).abs() <= 1e-12 * m0.abs());
                assert!(((w0 * a + w1 * b) - m1).abs() <= 1e-10 * m1.abs(), "e={e} a={a} h={h}");
            }
        }
    }

    #[test]
    fn cell_of_brackets() {
        let g = RadialGrid::geometric(1e-3, 1.0, 50).unwrap();
        for &r in &[1e-3, 2e-3, 0.017, 0.5, 1.0] {
            let i = g.cell_of(r);
            assert!(g.nodes()[i] <= r && r <= g.nodes()[i + 1]);
        }
    }
}
