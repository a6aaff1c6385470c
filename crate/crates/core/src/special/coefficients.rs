use super::gamma::{gamma_fn, ln_gamma};
use crate::error::{hypothesis, Result};

/// Coefficients `c_{im}` of `L^m ψ = r^{m(γ−2−θ)} Σ_i c_{im} (log n)^{−i} H^{(i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub theta: f64,
    pub gamma: f64,
    pub max_m: usize,
    rows: Vec<Vec<f64>>,
}

impl CoefficientTable {
    /// `c_{im}` for `1 ≤ i ≤ 2m`, `1 ≤ m ≤ max_m`.
    pub fn get(&self, i: usize, m: usize) -> f64 {
        assert!(m >= 1 && m <= self.max_m && i >= 1 && i <= 2 * m, "index ({i}, {m}) out of range");
        self.rows[m - 1][i - 1]
    }

    /// Row `m` as `[c_{1m}, …, c_{2m,m}]`.
    pub fn row(&self, m: usize) -> &[f64] {
        &self.rows[m - 1]
    }
}

pub fn coefficient_table(theta: f64, gamma: f64, max_m: usize) -> CoefficientTable {
    let max_m = max_m.max(1);
    let d = gamma - 2.0 - theta;
    let mut rows = vec![vec![gamma - 1.0, -1.0]];
    for m in 1..max_m {
        let mf = m as f64;
        let a = -mf * d * (gamma - 1.0 + mf * d);
        let b = gamma - 1.0 + 2.0 * mf * d;
        let c = &rows[m - 1];
        let mut next = vec![0.0; 2 * m + 2];
        next[0] = a * c[0];
        next[1] = a * c[1] + b * c[0];
        for i in 3..=2 * m {
            next[i - 1] = a * c[i - 1] + b * c[i - 2] - c[i - 3];
        }
        next[2 * m] = b * c[2 * m - 1] - c[2 * m - 2];
        next[2 * m + 1] = -c[2 * m - 1];
        rows.push(next);
    }
    CoefficientTable { theta, gamma, max_m, rows }
}

/// `c_{1m} = (γ−1)(θ+2−γ)^{2m−2} Γ(m) Γ(x)/Γ(x−m+1)`, `x = (γ−1)/(θ+2−γ)`.
pub fn c1m_closed(theta: f64, gamma: f64, m: usize) -> Result<f64> {
    let d = theta + 2.0 - gamma;
    if d == 0.0 {
        return hypothesis("closed form undefined for theta + 2 = gamma; use the recursion");
    }
    let x = (gamma - 1.0) / d;
    let mf = m as f64;
    if !(x > 0.0 && x - mf + 1.0 > 0.0) {
        return hypothesis(format!("Gamma arguments {x} and {} must be positive", x - mf + 1.0));
    }
    let ratio = if x < 140.0 && mf < 140.0 {
        gamma_fn(mf)? * gamma_fn(x)? / gamma_fn(x - mf + 1.0)?
    } else {
        (ln_gamma(mf)? + ln_gamma(x)? - ln_gamma(x - mf + 1.0)?).exp()
    };
    Ok((gamma - 1.0) * d.powi(2 * m as i32 - 2) * ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_row() {
        let t = coefficient_table(1.3, 2.7, 3);
        assert_eq!(t.get(1, 1), 2.7 - 1.0);
        assert_eq!(t.get(2, 1), -1.0);
        assert_eq!(t.row(3).len(), 6);
    }

    #[test]
    fn degenerate_first_column() {
        let t = coefficient_table(1.0, 3.0, 6);
        for m in 2..=6 {
            assert_eq!(t.get(1, m), 0.0);
        }
    }

    #[test]
    fn hand_unrolled_second_row() {
        // θ = 1, γ = 2: d = −1, a = 1·(2−1−1) = 0 so c12 = 0, c22 = (1 − 2)·1 = −1,
        // c32 = (1 − 2)(−1) − 1 = 0, c42 = 1
        let t = coefficient_table(1.0, 2.0, 2);
        assert_eq!(t.row(2), &[0.0, -1.0, 0.0, 1.0]);
        // x = 1 puts Γ(x − 1) at a pole; the recursion value 0 is the limit
        assert!(c1m_closed(1.0, 2.0, 2).is_err());
    }

    #[test]
    fn closed_form_matches() {
        let t = coefficient_table(2.0, 3.0, 2);
        let c = c1m_closed(2.0, 3.0, 2).unwrap();
        assert!((t.get(1, 2) - c).abs() < 1e-12 * c.abs());
        assert!(c1m_closed(3.0, 3.0, 2).is_err());
    }
}
