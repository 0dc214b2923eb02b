//! Independent oracles and case generators for the acceptance suite.
//!
//! The oracle here recomputes joint tails straight from the definition: walk
//! every lifetime ordering, read off the surviving sets, and accumulate
//! ordering probabilities. It shares no code with the library's quality or
//! chain-counting machinery.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use sigkit::{PermutationModel, Rational, StructureFunction};

/// Permutations of 1..=n by Heap's algorithm; deliberately a different
/// enumeration scheme (and order) than the library uses anywhere.
pub fn permutations_heap(n: usize) -> Vec<Vec<u8>> {
    let mut items: Vec<u8> = (1..=n as u8).collect();
    let mut out = vec![items.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            out.push(items.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn suffix_mask(perm: &[u8], from: usize) -> u32 {
    perm[from..]
        .iter()
        .fold(0u32, |mask, &id| mask | 1 << (id - 1))
}

/// Pr(K1 > k, K2 > l) straight from the definition: the probability-weighted
/// count of orderings whose suffix survivor sets satisfy both systems.
pub fn oracle_joint_tail(
    phi1: &StructureFunction,
    phi2: &StructureFunction,
    model: &[(Vec<u8>, Rational)],
) -> Vec<Vec<Rational>> {
    let n = phi1.n();
    let zero = Rational::new(BigInt::from(0), BigInt::from(1));
    let mut cells = vec![vec![zero; n + 1]; n + 1];
    for (perm, p) in model {
        for (k, row) in cells.iter_mut().enumerate() {
            if !phi1.value(suffix_mask(perm, k)) {
                continue;
            }
            for (l, cell) in row.iter_mut().enumerate() {
                if phi2.value(suffix_mask(perm, l)) {
                    *cell += p.clone();
                }
            }
        }
    }
    cells
}

/// The exchangeable ordering distribution as an explicit list.
pub fn uniform_ordering(n: usize) -> Vec<(Vec<u8>, Rational)> {
    let perms = permutations_heap(n);
    let p = Rational::new(BigInt::from(1), BigInt::from(perms.len()));
    perms.into_iter().map(|perm| (perm, p.clone())).collect()
}

/// Random ordering distribution with small exact rational weights.
pub fn random_ordering(rng: &mut ChaCha12Rng, n: usize) -> Vec<(Vec<u8>, Rational)> {
    let perms = permutations_heap(n);
    let mut weights: Vec<u64> = (0..perms.len()).map(|_| rng.gen_range(0..4)).collect();
    if weights.iter().all(|&w| w == 0) {
        weights[0] = 1;
    }
    let total: u64 = weights.iter().sum();
    perms
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| *w > 0)
        .map(|(perm, w)| (perm, Rational::new(BigInt::from(w), BigInt::from(total))))
        .collect()
}

pub fn model_from_ordering(n: usize, ordering: &[(Vec<u8>, Rational)]) -> PermutationModel<Rational> {
    let probs: BTreeMap<Vec<u8>, Rational> = ordering.iter().cloned().collect();
    PermutationModel::new(n, probs).expect("oracle orderings form a distribution")
}

/// Random semicoherent system from one to three random path sets.
pub fn random_structure(rng: &mut ChaCha12Rng, n: usize) -> StructureFunction {
    let full = (1u32 << n) - 1;
    let count = rng.gen_range(1..=3);
    let masks: Vec<u32> = (0..count).map(|_| rng.gen_range(1..=full)).collect();
    StructureFunction::from_path_masks(n, &masks).expect("nonempty path masks are valid")
}
