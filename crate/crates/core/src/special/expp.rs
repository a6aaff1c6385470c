use super::gamma::{gamma_fn, ln_gamma};

/// `exp_p(t) = Σ_{j≥0} t^{p−1+j} / Γ(p+j)`.
///
/// Overflows to `+∞` beyond `t ≈ 709`; use [`ln_exp_p`] there.
pub fn exp_p(p: f64, t: f64) -> f64 {
    assert!(p > 1.0, "exp_p needs p > 1");
    if t <= 0.0 {
        return 0.0;
    }
    if t > 600.0 {
        return ln_exp_p(p, t).exp();
    }
    let mut term = if t < 1.0 || p < 100.0 {
        t.powf(p - 1.0) / gamma_fn(p).expect("p > 1")
    } else {
        ((p - 1.0) * t.ln() - ln_gamma(p).expect("p > 1")).exp()
    };
    let mut sum = 0.0;
    let mut j = 0.0;
    loop {
        sum += term;
        // Γ(p+j+1) = (p+j) Γ(p+j)
        term *= t / (p + j);
        j += 1.0;
        if term < 1e-16 * sum && j > t {
            break;
        }
    }
    sum
}

/// `ln exp_p(t)`, finite for every `t > 0`.
pub fn ln_exp_p(p: f64, t: f64) -> f64 {
    assert!(p > 1.0, "ln_exp_p needs p > 1");
    if t <= 0.0 {
        return f64::NEG_INFINITY;
    }
    // terms peak near j* = t - p + 1; sum ratios to the peak in both directions
    let jstar = (t - p + 1.0).floor().max(0.0);
    let ln_peak = (p - 1.0 + jstar) * t.ln() - ln_gamma(p + jstar).expect("positive argument");
    let mut sum = 1.0;
    let mut r = 1.0;
    let mut j = jstar;
    loop {
        r *= t / (p + j);
        j += 1.0;
        sum += r;
        if r < 1e-17 * sum {
            break;
        }
    }
    let mut r = 1.0;
    let mut j = jstar;
    while j >= 1.0 {
        r *= (p + j - 1.0) / t;
        j -= 1.0;
        sum += r;
        if r < 1e-17 * sum {
            break;
        }
    }
    ln_peak + sum.ln()
}
