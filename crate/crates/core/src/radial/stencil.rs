//! Finite differences in the log coordinate `s = ln r`.

/// Fornberg weights: `w[m][j]` approximates the `m`-th derivative at `z`
/// from values at `x[j]`.
pub fn fornberg(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil layout for log-coordinate differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilSpec {
    /// Formal accuracy order (even).
    pub accuracy: usize,
    /// Node spacing of the stencil, in cells.
    pub stride: usize,
}

impl Default for StencilSpec {
    fn default() -> Self {
        Self { accuracy: 4, stride: 1 }
    }
}

fn central_points(m: usize, accuracy: usize) -> usize {
    2 * ((m + 1) / 2) + accuracy - 1
}

/// `D^m u` at every node for uniformly spaced samples with step `h`,
/// where `D = d/ds`.
pub fn derivative(samples: &[f64], h: f64, m: usize, spec: StencilSpec) -> Vec<f64> {
    let n = samples.len();
    if m == 0 {
        return samples.to_vec();
    }
    let nc = central_points(m, spec.accuracy);
    let no = m + spec.accuracy;
    let mut stride = spec.stride.max(1);
    while stride > 1 && (no - 1) * stride >= n {
        stride -= 1;
    }
    assert!(no <= n, "need at least {no} nodes for derivative order {m}");
    let half = (nc / 2) as isize;
    let mut out = vec![0.0; n];
    let mut cache: std::collections::HashMap<Vec<isize>, Vec<f64>> = std::collections::HashMap::new();
    let scale = h.powi(m as i32);
    for i in 0..n as isize {
        let s = stride as isize;
        let offs: Vec<isize> = if i - half * s >= 0 && i + half * s < n as isize {
            (-half..=half).map(|j| j * s).collect()
        } else {
            let last = n as isize - 1;
            let width = (no as isize - 1) * s;
            let start = (i - (no as isize / 2) * s).clamp(0, last - width);
            (0..no as isize).map(|j| start + j * s - i).collect()
        };
        let w = cache.entry(offs.clone()).or_insert_with(|| {
            let xs: Vec<f64> = offs.iter().map(|&o| o as f64).collect();
            fornberg(0.0, &xs, m).swap_remove(m)
        });
        let mut acc = 0.0;
        for (o, wj) in offs.iter().zip(w.iter()) {
            acc += wj * samples[(i + o) as usize];
        }
        out[i as usize] = acc / scale;
    }
    out
}

/// Signed Stirling numbers of the first kind: `r^m d^m/dr^m = Σ_i s[m][i] D^i`.
pub fn stirling_first(max_m: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; max_m + 1]; max_m + 1];
    s[0][0] = 1.0;
    for m in 0..max_m {
        for i in 1..=m + 1 {
            s[m + 1][i] = s[m][i - 1] - m as f64 * s[m][i];
        }
    }
    s
}

/// `d^m u / dr^m` at the nodes from log-coordinate differences.
pub fn radial_derivative(nodes: &[f64], samples: &[f64], h: f64, m: usize, spec: StencilSpec) -> Vec<f64> {
    if m == 0 {
        return samples.to_vec();
    }
    let s = stirling_first(m);
    let mut acc = vec![0.0; samples.len()];
    for i in 1..=m {
        if s[m][i] == 0.0 {
            continue;
        }
        let d = derivative(samples, h, i, spec);
        for (a, di) in acc.iter_mut().zip(d) {
            *a += s[m][i] * di;
        }
    }
    acc.iter().zip(nodes).map(|(a, r)| a / r.powi(m as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_second_derivative() {
        let w = fornberg(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let expect = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w[2].iter().zip(expect) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn stirling_rows() {
        let s = stirling_first(3);
        assert_eq!(s[2][1..=2], [-1.0, 1.0]);
        assert_eq!(s[3][1..=3], [2.0, -3.0, 1.0]);
    }

    #[test]
    fn exponential_derivatives_are_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let u: Vec<f64> = (0..=n).map(|i| (1.3 * i as f64 * h).sin()).collect();
            let d = derivative(&u, h, 2, StencilSpec::default());
            (0..=n).map(|i| (d[i] + 1.69 * (1.3 * i as f64 * h).sin()).abs()).fold(0.0, f64::max)
        };
        let order = (err(40) / err(80)).log2();
        assert!(order > 3.5, "observed order {order}");
    }
}
