//! Seeded low-discrepancy point sets in boxes and on spheres.
//!
//! Points come from the additive recurrence `frac(s + i·α)`, where `α` is
//! built from the generalized golden ratio of the dimension (the `R_d`
//! sequence) and `s` is a shift drawn from a seeded ChaCha stream. The point
//! set is a pure function of `(dimension, count, seed, stream)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::domain::DomainBox;

/// `count` points of `[0,1)^d`.
pub fn unit_cube(d: usize, count: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let alpha = rd_alpha(d);
    let shift = shift(d, seed, stream);
    (0..count)
        .map(|i| {
            (0..d)
                .map(|j| (shift[j] + (i as f64 + 1.0) * alpha[j]).fract())
                .collect()
        })
        .collect()
}

/// `count` points of a box.
pub fn box_points(domain: &DomainBox, count: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    unit_cube(domain.dim(), count, seed, stream)
        .iter()
        .map(|s| domain.lerp(s))
        .collect()
}

/// `count` unit vectors of `S^{n-1}`.
///
/// `n = 1` gives `±1`; `n = 2` gives equispaced angles with a seeded phase;
/// `n ≥ 3` maps an `R_n` sequence through the inverse normal CDF and
/// normalizes, which is uniform in distribution.
pub fn unit_sphere(n: usize, count: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    match n {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let phase = shift(1, seed, stream)[0];
            (0..count)
                .map(|i| {
                    let theta = std::f64::consts::TAU * (phase + i as f64 / count as f64);
                    vec![theta.cos(), theta.sin()]
                })
                .collect()
        }
        _ => {
            let normal = Normal::standard();
            unit_cube(n, count, seed, stream)
                .into_iter()
                .filter_map(|s| {
                    let g: Vec<f64> = s
                        .iter()
                        .map(|&c| normal.inverse_cdf(c.clamp(1e-12, 1.0 - 1e-12)))
                        .collect();
                    let len = g.iter().map(|c| c * c).sum::<f64>().sqrt();
                    (len > 1e-12).then(|| g.iter().map(|c| c / len).collect())
                })
                .collect()
        }
    }
}

fn shift(d: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..d).map(|_| rng.random::<f64>()).collect()
}

/// `α_j = φ_d^{-(j+1)}` with `φ_d` the positive root of `x^{d+1} = x + 1`.
fn rd_alpha(d: usize) -> Vec<f64> {
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|j| phi.powi(-(j as i32))).collect()
}
