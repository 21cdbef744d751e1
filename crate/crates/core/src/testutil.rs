//! Seeded random fixtures shared by unit tests.

use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tt::{Core, OperatorCore, TensorTrain, TtOperator};

pub fn random_vec(len: usize, seed: u64) -> Vec<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

/// Binary train with `n` cores and every internal bond equal to `chi`.
pub fn random_tt(n: usize, chi: usize, seed: u64) -> TensorTrain {
    let cores = (0..n)
        .map(|k| {
            let l = if k == 0 { 1 } else { chi };
            let r = if k == n - 1 { 1 } else { chi };
            Core::new(l, 2, r, random_vec(l * 2 * r, seed * 1000 + k as u64)).unwrap()
        })
        .collect();
    TensorTrain::new(cores).unwrap()
}

pub fn random_operator(n: usize, chi: usize, seed: u64) -> TtOperator {
    let cores = (0..n)
        .map(|k| {
            let l = if k == 0 { 1 } else { chi };
            let r = if k == n - 1 { 1 } else { chi };
            OperatorCore::new(l, 2, 2, r, random_vec(l * 4 * r, seed * 1000 + k as u64)).unwrap()
        })
        .collect();
    TtOperator::new(cores).unwrap()
}

/// `‖a − b‖ / ‖b‖` (absolute when `b` vanishes).
pub fn rel_l2(a: &[c64], b: &[c64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let nb: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    if nb > 0.0 {
        diff / nb
    } else {
        diff
    }
}
