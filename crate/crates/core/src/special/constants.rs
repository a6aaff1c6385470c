use super::gamma::{gamma_fn, ln_gamma};
use crate::error::{hypothesis, Error, Result};
use crate::radial::SpaceParams;

/// `Γ(a)Γ(b)/Γ(c)`, switching to logarithms for large arguments.
fn gamma_ratio(a: f64, b: f64, c: f64) -> Result<f64> {
    if a.max(b).max(c) < 140.0 {
        Ok(gamma_fn(a)? * gamma_fn(b)? / gamma_fn(c)?)
    } else {
        Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(c)?).exp())
    }
}

fn check_beta_hypotheses(s: &SpaceParams) -> Result<()> {
    s.validate()?;
    if s.k >= 2 && !(s.gamma > 1.0) {
        return hypothesis(format!("gamma must exceed 1, got {}", s.gamma));
    }
    if s.k >= 3 {
        s.check_operator()?;
    }
    Ok(())
}

/// The sharp exponent constant `β_{0,k}`.
pub fn beta_0k(s: &SpaceParams) -> Result<f64> {
    check_beta_hypotheses(s)?;
    let pc = s.p_conj();
    let base = match s.k {
        1 => return Ok(s.eta + 1.0),
        2 => s.gamma - 1.0,
        k => {
            let d = s.theta + 2.0 - s.gamma;
            let x = (s.gamma - 1.0) / d;
            let kf = k as f64;
            let ratio = if k % 2 == 0 {
                gamma_ratio(kf / 2.0, x, x - (kf - 2.0) / 2.0)?
            } else {
                gamma_ratio((kf + 1.0) / 2.0, x, x - (kf - 3.0) / 2.0)?
            };
            (s.gamma - 1.0) * d.powi(k as i32 - 2) * ratio
        }
    };
    Ok((s.eta + 1.0) * base.powf(pc))
}

/// `C_i = 1/(i(θ+2−γ)[γ−1−i(θ+2−γ)])` for `i = 1..j−1`.
pub fn chain_factors(theta: f64, gamma: f64, j: usize) -> Vec<f64> {
    let d = theta + 2.0 - gamma;
    (1..j).map(|i| 1.0 / (i as f64 * d * (gamma - 1.0 - i as f64 * d))).collect()
}

/// Both sides of the Gamma-product identity behind `β_{0,k}`.
///
/// Even `k`: `β_{0,k}` against `β_{0,2} ∏ C_i^{−p/(p−1)}`. Odd `k`: the
/// Gamma ratio against `j(θ+2−γ) ∏ C_i^{−1}`.
pub fn verify_beta_identities(s: &SpaceParams) -> Result<(f64, f64)> {
    check_beta_hypotheses(s)?;
    if s.k == 1 {
        return Ok((s.eta + 1.0, s.eta + 1.0));
    }
    s.check_operator()?;
    let j = s.k / 2;
    let prod_inv: f64 = chain_factors(s.theta, s.gamma, j).iter().map(|c| 1.0 / c).product();
    let d = s.theta + 2.0 - s.gamma;
    if s.k % 2 == 0 {
        let b2 = beta_0k(&SpaceParams { k: 2, alphas: vec![0.0; 3], ..s.clone() })?;
        Ok((beta_0k(s)?, b2 * prod_inv.powf(s.p_conj())))
    } else {
        let x = (s.gamma - 1.0) / d;
        let kf = s.k as f64;
        let lhs = d.powi(s.k as i32 - 2) * gamma_ratio((kf + 1.0) / 2.0, x, x - (kf - 3.0) / 2.0)?;
        Ok((lhs, j as f64 * d * prod_inv))
    }
}

/// First-order Hardy constant `p/(α−p+1)`.
pub fn hardy_constant_first_order(alpha: f64, p: f64) -> Result<f64> {
    if !(alpha - p + 1.0 > 0.0) {
        return hypothesis(format!("alpha - p + 1 must be positive, got {}", alpha - p + 1.0));
    }
    Ok(p / (alpha - p + 1.0))
}

/// Second-order Hardy constant `p²/((α+1)[p(γ−1)−α−1])`.
pub fn hardy_constant_second_order(gamma: f64, alpha: f64, p: f64) -> Result<f64> {
    if !(gamma > 1.0 && alpha > -1.0 && alpha + 1.0 < p * (gamma - 1.0)) {
        return hypothesis(format!("need gamma > 1 and -1 < alpha < p(gamma-1) - 1 (gamma={gamma}, alpha={alpha}, p={p})"));
    }
    Ok(p * p / ((alpha + 1.0) * (p * (gamma - 1.0) - alpha - 1.0)))
}

/// Product of the iterated second-order constants relating `‖Lu‖_{L^p_α}`
/// to `‖L^j u‖_{L^p_{α+(j−1)(θ+2−γ)p}}`.
pub fn hardy_constant_chain(theta: f64, gamma: f64, alpha: f64, p: f64, j: usize) -> Result<f64> {
    let d = theta + 2.0 - gamma;
    let mut prod = 1.0;
    for i in 1..j {
        prod *= hardy_constant_second_order(gamma, alpha + (i - 1) as f64 * d * p, p)?;
    }
    Ok(prod)
}

/// `C_ε = (1 − (1+ε)^{1−p})^{1/(1−p)}`.
pub fn c_epsilon(epsilon: f64, p: f64) -> Result<f64> {
    if !(epsilon > 0.0 && p > 1.0) {
        return Err(Error::Parameter(format!("need epsilon > 0 and p > 1, got ({epsilon}, {p})")));
    }
    Ok(((-(1.0 + epsilon).powf(1.0 - p)).ln_1p() / (1.0 - p)).exp())
}
