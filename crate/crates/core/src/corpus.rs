//! Seeded random radial functions: step functions and smooth bumps, used by
//! the consistency checks and the command-line drivers.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::radial::{RadialFunction, RadialGrid, DEFAULT_CELLS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random step function with `n` steps on `(0, R]`, possibly starting away
/// from the origin.
pub fn random_steps(rng: &mut ChaCha8Rng, n: usize) -> RadialFunction {
    let r_max: f64 = rng.gen_range(0.5..3.0);
    let mut edges: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..r_max)).collect();
    edges.sort_by(f64::total_cmp);
    let start = if rng.gen_bool(0.3) { rng.gen_range(0.0..edges[0].max(1e-3)) } else { 0.0 };
    let mut all = vec![start];
    all.extend(edges.into_iter().filter(|&e| e > start));
    all.push(r_max);
    all.dedup();
    let values = (0..all.len() - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
    RadialFunction::steps(all, values).unwrap()
}

/// Random smooth compactly supported profile, sampled on the default grid.
pub fn random_smooth(rng: &mut ChaCha8Rng) -> RadialFunction {
    let r_max: f64 = rng.gen_range(0.5..3.0);
    let amp: f64 = rng.gen_range(0.2..1.5);
    let b: [f64; 3] = [rng.gen_range(0.5..1.0), rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)];
    let k: f64 = rng.gen_range(1.0..4.0);
    let grid = Arc::new(RadialGrid::with_defaults(r_max, DEFAULT_CELLS).unwrap());
    RadialFunction::from_fn(grid, move |r| {
        let x = r / r_max;
        amp * (1.0 - x * x).powi(2) * (b[0] + b[1] * (PI * k * x).cos() + b[2] * (PI * k * x).sin())
    })
}

/// Half step functions, half smooth.
pub fn corpus(seed: u64, n: usize) -> Vec<RadialFunction> {
    let mut rng = rng(seed);
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                let steps = rng.gen_range(2..12);
                random_steps(&mut rng, steps)
            } else {
                random_smooth(&mut rng)
            }
        })
        .collect()
}
