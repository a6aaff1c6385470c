use crate::error::{Error, Result};

const G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

fn series(z: f64) -> f64 {
    // z = x - 1
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    a
}

/// `Γ(x)` for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma requires a positive finite argument, got {x}")));
    }
    if x < 0.5 {
        return Ok(gamma_fn(x + 1.0)? / x);
    }
    if x > 140.0 {
        return Ok(ln_gamma(x)?.exp());
    }
    let z = x - 1.0;
    let t = z + G + 0.5;
    Ok((2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * series(z))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires a positive finite argument, got {x}")));
    }
    if x < 0.5 {
        return Ok(ln_gamma(x + 1.0)? - x.ln());
    }
    let z = x - 1.0;
    let t = z + G + 0.5;
    Ok(HALF_LN_TWO_PI + (z + 0.5) * t.ln() - t + series(z).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert!((gamma_fn(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_fn(5.0).unwrap() - 24.0).abs() < 1e-12);
        let h = gamma_fn(0.5).unwrap();
        assert!((h * h - std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn recurrence() {
        let mut x = 0.1;
        while x <= 50.0 {
            let a = gamma_fn(x + 1.0).unwrap();
            let b = x * gamma_fn(x).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs(), "x={x}");
            x += 0.0937;
        }
    }

    #[test]
    fn log_form_agrees() {
        for &x in &[0.3, 1.7, 12.5, 99.0, 139.0] {
            let a = gamma_fn(x).unwrap().ln();
            assert!((a - ln_gamma(x).unwrap()).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
    }
}
