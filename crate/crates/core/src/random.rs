//! Random instances for tests and the `verify` suite.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::measures::{Channel, FiniteDist};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat Dirichlet draw, with entries kept away from exact zero.
pub fn dist<R: Rng>(rng: &mut R, n: usize) -> FiniteDist {
    let w: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3)
        .collect();
    FiniteDist::new(w).expect("positive weights")
}

/// Dirichlet draw where each entry is zeroed with probability `zero_prob`
/// (at least one entry survives).
pub fn sparse_dist<R: Rng>(rng: &mut R, n: usize, zero_prob: f64) -> FiniteDist {
    let keep = rng.random_range(0..n);
    let w: Vec<f64> = (0..n)
        .map(|i| {
            if i != keep && rng.random::<f64>() < zero_prob {
                0.0
            } else {
                -(1.0 - rng.random::<f64>()).ln() + 1e-3
            }
        })
        .collect();
    FiniteDist::new(w).expect("non-empty support")
}

pub fn channel<R: Rng>(rng: &mut R, k: usize, n: usize) -> Channel {
    Channel::new((0..k).map(|_| dist(rng, n)).collect(), None).expect("valid rows")
}

/// Random channel with a one-dimensional cost whose minimum is zero.
pub fn costed_channel<R: Rng>(rng: &mut R, k: usize, n: usize) -> Channel {
    let ch = channel(rng, k, n);
    let zero = rng.random_range(0..k);
    let cost = (0..k)
        .map(|x| {
            vec![if x == zero {
                0.0
            } else {
                rng.random_range(0.1..1.0)
            }]
        })
        .collect();
    ch.with_cost(cost).expect("normalized cost")
}

pub fn binary_channel<R: Rng>(rng: &mut R) -> Channel {
    let a = rng.random_range(0.02..0.98);
    let b = rng.random_range(0.02..0.98);
    Channel::from_matrix(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]], None).expect("valid rows")
}
