use serde::{Deserialize, Serialize};

use crate::error::{hypothesis, param, Result};

/// The tuple `(k, p, α_0..α_k, θ, γ, η)` fixing a weighted space and operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub k: usize,
    pub p: f64,
    pub alphas: Vec<f64>,
    pub theta: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl SpaceParams {
    /// Critical space: `α_k = kp − 1`, `α_i = α_k − (k−i)p`, and the
    /// `γ = (2p − 1 + (p − 1)η)/p` coupling.
    pub fn critical(k: usize, p: f64, eta: f64, theta: f64) -> Self {
        let ak = k as f64 * p - 1.0;
        let alphas = (0..=k).map(|i| ak - (k - i) as f64 * p).collect();
        let gamma = (2.0 * p - 1.0 + (p - 1.0) * eta) / p;
        Self { k, p, alphas, theta, gamma, eta }
    }

    pub fn alpha_k(&self) -> f64 {
        self.alphas[self.k]
    }

    /// Conjugate exponent `p/(p−1)`.
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `ν = α_k + ⌊k/2⌋(θ − γ)p`.
    pub fn nu(&self) -> f64 {
        self.alpha_k() + (self.k / 2) as f64 * (self.theta - self.gamma) * self.p
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return param("k must be positive");
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return param(format!("p must exceed 1, got {}", self.p));
        }
        if self.alphas.len() != self.k + 1 {
            return param(format!("expected {} alphas, got {}", self.k + 1, self.alphas.len()));
        }
        if ![self.theta, self.gamma, self.eta].iter().chain(&self.alphas).all(|x| x.is_finite()) {
            return param("non-finite parameter");
        }
        if !(self.eta > -1.0) {
            return hypothesis(format!("eta must exceed -1, got {}", self.eta));
        }
        Ok(())
    }

    /// Operator hypotheses for `k ≥ 2`: `θ + 2 > γ` and `θ > ⌊k/2⌋(θ+2−γ) − 1`.
    pub fn check_operator(&self) -> Result<()> {
        self.validate()?;
        if self.k >= 2 {
            let d = self.theta + 2.0 - self.gamma;
            if !(d > 0.0) {
                return hypothesis(format!("theta + 2 > gamma fails: {} vs {}", self.theta + 2.0, self.gamma));
            }
            let j = (self.k / 2) as f64;
            if !(self.theta > j * d - 1.0) {
                return hypothesis(format!("theta > floor(k/2)(theta+2-gamma) - 1 fails for k = {}", self.k));
            }
        }
        Ok(())
    }

    /// Full exact-growth hypotheses.
    pub fn check_exact_growth(&self) -> Result<()> {
        self.check_operator()?;
        let (p, k) = (self.p, self.k as f64);
        let ak = self.alpha_k();
        if (ak - k * p + 1.0).abs() > 1e-12 * (1.0 + ak.abs()) {
            return hypothesis(format!("alpha_k - kp + 1 = {} is not zero", ak - k * p + 1.0));
        }
        for (i, a) in self.alphas.iter().enumerate() {
            if *a < ak - (self.k - i) as f64 * p - 1e-12 {
                return hypothesis(format!("alpha_{i} = {a} below alpha_k - (k-i)p"));
            }
        }
        if self.k >= 2 {
            let g = (2.0 * p - 1.0 + (p - 1.0) * self.eta) / p;
            if (self.gamma - g).abs() > 1e-12 * (1.0 + g.abs()) {
                return hypothesis(format!("gamma = {} but the critical coupling gives {g}", self.gamma));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_k2() {
        let s = SpaceParams::critical(2, 2.0, 3.0, 3.0);
        assert_eq!(s.alphas, vec![-1.0, 1.0, 3.0]);
        assert_eq!(s.gamma, 3.0);
        assert_eq!(s.nu(), 3.0);
        s.check_exact_growth().unwrap();
    }

    #[test]
    fn rejects_bad_theta() {
        let s = SpaceParams::critical(4, 2.0, 3.0, 0.5);
        assert!(s.check_operator().is_err());
    }
}
