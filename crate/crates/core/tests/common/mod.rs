#![allow(dead_code)]

use histlab::history::InstantChain;
use histlab::qcore::random::{random_ket, random_unitary};
use histlab::qcore::{Ket, OrthonormalBasis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random unitary steps and random per-instant bases.
pub fn random_chain(dim: usize, instants: usize, rng: &mut ChaCha8Rng) -> InstantChain {
    let steps = (0..instants - 1)
        .map(|_| random_unitary(dim, rng))
        .collect();
    let bases = (0..instants)
        .map(|_| OrthonormalBasis::from_matrix(random_unitary(dim, rng).matrix()).unwrap())
        .collect();
    InstantChain::new(steps, Some(bases)).unwrap()
}

pub fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> Ket {
    random_ket(dim, rng)
}

/// Digits of `flat` in base `d`, least significant first.
pub fn digits(mut flat: usize, d: usize, n: usize) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let r = flat % d;
            flat /= d;
            r
        })
        .collect()
}
