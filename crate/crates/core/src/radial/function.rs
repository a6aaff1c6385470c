use std::fmt;
use std::sync::Arc;

use super::grid::{RadialGrid, DEFAULT_CELLS};
use crate::error::{param, Error, Result};

/// Fills `out[i]` with the `i`-th derivative at `r`, for `i < out.len()`.
pub type Jet = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// `coef · r^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn new(coef: f64, exponent: f64) -> Self {
        Self { coef, exponent }
    }

    pub fn at(&self, r: f64) -> f64 {
        if self.exponent == 0.0 {
            self.coef
        } else {
            self.coef * r.powf(self.exponent)
        }
    }
}

fn eval_terms(terms: &[PowerTerm], r: f64) -> f64 {
    terms.iter().map(|t| t.at(r)).sum()
}

#[derive(Clone)]
pub enum Backing {
    /// Nodal samples, linear between nodes, plus exact power terms. Splitting
    /// off the terms an inverse produces in closed form keeps the residual
    /// samples small near the origin, so differencing them stays accurate.
    Sampled { grid: Arc<RadialGrid>, samples: Vec<f64>, terms: Vec<PowerTerm> },
    /// Piecewise constant: `values[i]` on `(edges[i], edges[i+1]]`.
    Steps { edges: Vec<f64>, values: Vec<f64> },
    /// Closed form with derivatives up to `k_max`.
    Analytic { jet: Jet, k_max: usize },
}

#[derive(Clone)]
pub struct RadialFunction {
    backing: Backing,
    support: Option<f64>,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.backing {
            Backing::Sampled { grid, .. } => format!("Sampled({} nodes)", grid.len()),
            Backing::Steps { values, .. } => format!("Steps({})", values.len()),
            Backing::Analytic { k_max, .. } => format!("Analytic(k_max={k_max})"),
        };
        f.debug_struct("RadialFunction").field("backing", &kind).field("support", &self.support).finish()
    }
}

impl RadialFunction {
    pub fn sampled(grid: Arc<RadialGrid>, samples: Vec<f64>) -> Result<Self> {
        Self::sampled_with_terms(grid, samples, Vec::new())
    }

    /// Samples plus exact power terms; the value is their sum.
    pub fn sampled_with_terms(grid: Arc<RadialGrid>, samples: Vec<f64>, terms: Vec<PowerTerm>) -> Result<Self> {
        if samples.len() != grid.len() {
            return param(format!("{} samples for {} nodes", samples.len(), grid.len()));
        }
        let terms = terms.into_iter().filter(|t| t.coef != 0.0).collect();
        let support = Some(grid.r_max());
        Ok(Self { backing: Backing::Sampled { grid, samples, terms }, support })
    }

    /// Samples `f` at the nodes of `grid`.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let samples = grid.nodes().iter().map(|&r| f(r)).collect();
        let support = Some(grid.r_max());
        Self { backing: Backing::Sampled { grid, samples, terms: Vec::new() }, support }
    }

    pub fn steps(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.len() != values.len() + 1 || values.is_empty() {
            return param("step function needs one more edge than values");
        }
        if edges[0] < 0.0 || edges.windows(2).any(|w| w[1] <= w[0]) {
            return param("step edges must be nonnegative and strictly increasing");
        }
        let support = Some(*edges.last().unwrap());
        Ok(Self { backing: Backing::Steps { edges, values }, support })
    }

    /// Closed form supported in `(0, support]`; `None` marks unbounded support.
    pub fn analytic(support: Option<f64>, k_max: usize, jet: impl Fn(f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        Self { backing: Backing::Analytic { jet: Arc::new(jet), k_max }, support }
    }

    pub fn zero(support: f64) -> Self {
        Self::analytic(Some(support), usize::MAX, |_, out| out.fill(0.0))
    }

    pub fn backing(&self) -> &Backing {
        &self.backing
    }

    pub fn support(&self) -> Option<f64> {
        self.support
    }

    pub fn support_radius(&self) -> Result<f64> {
        self.support.ok_or(Error::UnboundedSupport)
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.backing, Backing::Sampled { .. })
    }

    pub fn grid(&self) -> Option<&Arc<RadialGrid>> {
        match &self.backing {
            Backing::Sampled { grid, .. } => Some(grid),
            _ => None,
        }
    }

    /// Absolute nodal values of a sampled function.
    pub fn samples(&self) -> Option<Vec<f64>> {
        match &self.backing {
            Backing::Sampled { grid, samples, terms } => {
                Some(samples.iter().zip(grid.nodes()).map(|(s, &r)| s + eval_terms(terms, r)).collect())
            }
            _ => None,
        }
    }

    /// Highest derivative order available. Sampled functions support any
    /// order through finite differences.
    pub fn k_max(&self) -> usize {
        match &self.backing {
            Backing::Sampled { .. } => usize::MAX,
            Backing::Steps { .. } => 0,
            Backing::Analytic { k_max, .. } => *k_max,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if let Some(s) = self.support {
            if r > s {
                return 0.0;
            }
        }
        match &self.backing {
            Backing::Sampled { grid, samples, terms } => {
                if r <= grid.r_min() {
                    return samples[0] + eval_terms(terms, grid.r_min());
                }
                let i = grid.cell_of(r);
                let x = grid.nodes();
                let t = (r - x[i]) / (x[i + 1] - x[i]);
                eval_terms(terms, r) + samples[i] + t * (samples[i + 1] - samples[i])
            }
            Backing::Steps { edges, values } => {
                if r <= edges[0] {
                    return if edges[0] == 0.0 { values[0] } else { 0.0 };
                }
                let j = edges.partition_point(|&e| e < r);
                values[j - 1]
            }
            Backing::Analytic { jet, .. } => {
                let mut out = [0.0];
                jet(r, &mut out);
                out[0]
            }
        }
    }

    /// Value and derivatives up to `out.len() - 1` of a closed form.
    pub fn jet(&self, r: f64, out: &mut [f64]) -> Result<()> {
        match &self.backing {
            Backing::Analytic { jet, k_max } => {
                if out.len() > k_max.saturating_add(1) {
                    return Err(Error::InsufficientDerivatives { need: out.len() - 1, have: *k_max });
                }
                if self.support.is_some_and(|s| r > s) {
                    out.fill(0.0);
                } else {
                    jet(r, out);
                }
                Ok(())
            }
            _ => Err(Error::InsufficientDerivatives { need: out.len().saturating_sub(1), have: 0 }),
        }
    }

    /// Values at the nodes of `grid`.
    pub fn sample_on(&self, grid: &RadialGrid) -> Vec<f64> {
        if let Backing::Sampled { grid: g, .. } = &self.backing {
            if g.as_ref() == grid {
                return self.samples().unwrap();
            }
        }
        grid.nodes().iter().map(|&r| self.value(r)).collect()
    }

    /// The grid quadrature uses: the own grid if sampled, otherwise a default
    /// grid on the support.
    pub fn quadrature_grid(&self) -> Result<Arc<RadialGrid>> {
        match &self.backing {
            Backing::Sampled { grid, .. } => Ok(grid.clone()),
            _ => Ok(Arc::new(RadialGrid::with_defaults(self.support_radius()?, DEFAULT_CELLS)?)),
        }
    }

    /// Pointwise `g(u)`. Closed forms lose their derivatives.
    pub fn map(&self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RadialFunction {
        match &self.backing {
            Backing::Sampled { grid, .. } => {
                let samples = self.samples().unwrap().into_iter().map(&g).collect();
                RadialFunction { backing: Backing::Sampled { grid: grid.clone(), samples, terms: Vec::new() }, support: self.support }
            }
            Backing::Steps { edges, values } => RadialFunction {
                backing: Backing::Steps { edges: edges.clone(), values: values.iter().map(|&v| g(v)).collect() },
                support: self.support,
            },
            Backing::Analytic { jet, .. } => {
                let jet = jet.clone();
                RadialFunction::analytic(self.support, 0, move |r, out| {
                    let mut v = [0.0];
                    jet(r, &mut v);
                    out[0] = g(v[0]);
                })
            }
        }
    }

    /// `c · u`, keeping the backing and derivatives.
    pub fn scale(&self, c: f64) -> RadialFunction {
        match &self.backing {
            Backing::Sampled { grid, samples, terms } => RadialFunction {
                backing: Backing::Sampled {
                    grid: grid.clone(),
                    samples: samples.iter().map(|s| c * s).collect(),
                    terms: terms.iter().map(|t| PowerTerm::new(c * t.coef, t.exponent)).collect(),
                },
                support: self.support,
            },
            Backing::Steps { edges, values } => RadialFunction {
                backing: Backing::Steps { edges: edges.clone(), values: values.iter().map(|v| c * v).collect() },
                support: self.support,
            },
            Backing::Analytic { jet, k_max } => {
                let jet = jet.clone();
                RadialFunction::analytic(self.support, *k_max, move |r, out| {
                    jet(r, out);
                    out.iter_mut().for_each(|x| *x *= c);
                })
            }
        }
    }

    /// `a u + b v`. Both must be sampled on the same grid or both closed form.
    pub fn combine(a: f64, u: &RadialFunction, b: f64, v: &RadialFunction) -> Result<RadialFunction> {
        let support = match (u.support, v.support) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        match (&u.backing, &v.backing) {
            (Backing::Sampled { grid: g1, samples: s1, terms: t1 }, Backing::Sampled { grid: g2, samples: s2, terms: t2 })
                if g1 == g2 =>
            {
                let samples = s1.iter().zip(s2).map(|(x, y)| a * x + b * y).collect();
                let terms = t1
                    .iter()
                    .map(|t| PowerTerm::new(a * t.coef, t.exponent))
                    .chain(t2.iter().map(|t| PowerTerm::new(b * t.coef, t.exponent)))
                    .collect();
                RadialFunction::sampled_with_terms(g1.clone(), samples, terms)
            }
            (Backing::Analytic { jet: j1, k_max: k1 }, Backing::Analytic { jet: j2, k_max: k2 }) => {
                let (j1, j2) = (j1.clone(), j2.clone());
                let (s1, s2) = (u.support, v.support);
                Ok(RadialFunction::analytic(support, (*k1).min(*k2), move |r, out| {
                    let mut tmp = vec![0.0; out.len()];
                    if s1.map_or(true, |s| r <= s) {
                        j1(r, out);
                    } else {
                        out.fill(0.0);
                    }
                    if s2.map_or(true, |s| r <= s) {
                        j2(r, &mut tmp);
                    }
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o = a * *o + b * t;
                    }
                }))
            }
            _ => param("combine needs two sampled functions on one grid or two closed forms"),
        }
    }

    /// Sampled copy on `grid`.
    pub fn resample(&self, grid: Arc<RadialGrid>) -> RadialFunction {
        let samples = self.sample_on(&grid);
        RadialFunction { support: Some(grid.r_max()), backing: Backing::Sampled { grid, samples, terms: Vec::new() } }
    }

    /// Sup of `|u|` at the nodes of the quadrature grid (exact for steps).
    pub fn sup_abs(&self) -> Result<f64> {
        if let Backing::Steps { values, .. } = &self.backing {
            return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
        let g = self.quadrature_grid()?;
        Ok(self.sample_on(&g).iter().fold(0.0, |m, v| m.max(v.abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_interpolates_linearly() {
        let g = Arc::new(RadialGrid::geometric(0.5, 2.0, 2).unwrap());
        let f = RadialFunction::from_fn(g, |r| 2.0 * r);
        assert!((f.value(0.75) - 1.5).abs() < 1e-15);
        assert_eq!(f.value(0.1), 1.0);
        assert_eq!(f.value(3.0), 0.0);
    }

    #[test]
    fn steps_are_left_continuous() {
        let f = RadialFunction::steps(vec![0.0, 1.0, 2.0], vec![3.0, 5.0]).unwrap();
        assert_eq!(f.value(1.0), 3.0);
        assert_eq!(f.value(1.0 + 1e-12), 5.0);
        assert_eq!(f.value(2.5), 0.0);
    }

    #[test]
    fn sample_count_is_checked() {
        let g = Arc::new(RadialGrid::geometric(0.5, 2.0, 2).unwrap());
        assert!(RadialFunction::sampled(g, vec![1.0; 2]).is_err());
    }

    #[test]
    fn jet_order_is_checked() {
        let f = RadialFunction::analytic(Some(1.0), 1, |r, out| {
            out[0] = r;
            if out.len() > 1 {
                out[1] = 1.0;
            }
        });
        let mut buf = [0.0; 3];
        assert!(matches!(f.jet(0.5, &mut buf), Err(Error::InsufficientDerivatives { .. })));
    }
}
