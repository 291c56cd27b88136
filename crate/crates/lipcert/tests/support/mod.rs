//! Helpers shared by the integration suites.
#![allow(dead_code)] // each suite uses a different subset

use lipcert::{Interval, Network, RealMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random network of the given layer sizes, weights and biases uniform.
pub fn random_net(rng: &mut ChaCha8Rng, shape: &[usize]) -> Network {
    Network::new(
        shape
            .windows(2)
            .map(|w| {
                (
                    RealMatrix::from_rows(
                        (0..w[1])
                            .map(|_| (0..w[0]).map(|_| rng.gen_range(-1.0..1.0)).collect())
                            .collect(),
                    ),
                    (0..w[1]).map(|_| rng.gen_range(-0.5..0.5)).collect(),
                )
            })
            .collect(),
    )
    .unwrap()
}

/// A shape sampled between (2,4,3,2) and (4,8,8,3) componentwise.
pub fn random_shape(rng: &mut ChaCha8Rng) -> [usize; 4] {
    [
        rng.gen_range(2..=4),
        rng.gen_range(4..=8),
        rng.gen_range(3..=8),
        rng.gen_range(2..=3),
    ]
}

pub fn unit_box(dim: usize) -> Vec<Interval> {
    vec![Interval::new(0.0, 1.0); dim]
}

pub fn random_box(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<Interval> {
    (0..dim)
        .map(|_| {
            let a: f64 = rng.gen_range(-scale..scale);
            let b: f64 = rng.gen_range(-scale..scale);
            Interval::new(a.min(b), a.max(b))
        })
        .collect()
}

/// A point drawn uniformly from the box.
pub fn random_point(rng: &mut ChaCha8Rng, region: &[Interval]) -> Vec<f64> {
    region
        .iter()
        .map(|iv| {
            if iv.width() == 0.0 {
                iv.lo()
            } else {
                rng.gen_range(iv.lo()..=iv.hi())
            }
        })
        .collect()
}

/// `|a - b|` within `tol` relative to the magnitude of `b` (absolute near
/// zero).
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-9)
}
