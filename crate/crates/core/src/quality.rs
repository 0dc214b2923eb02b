//! Relative quality functions of component lifetime models.
//!
//! A permutation model assigns each ordering sigma the probability that the
//! component lifetimes sort as T_{sigma(1)} < ... < T_{sigma(n)}. The quality
//! q(A) is the probability that the best |A| components are exactly A, i.e.
//! the set of the |A| largest lifetimes equals A; the bivariate q(A, B) asks
//! that simultaneously for two sets. Conventions: q(empty) = q(full) = 1 and
//! q(A, empty) = q(A, full) = q(A). Under the exchangeable (uniform) model
//! every quality value collapses to the closed form q0, a ratio of
//! factorials that is nonzero only on nested pairs.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::subsets::{factorial, full_mask, ids_from_mask, is_subset};

/// Explicit permutation enumeration caps out here; 8! = 40320 orderings.
pub const MAX_MODEL_COMPONENTS: usize = 8;

/// A sparse distribution over the n! lifetime orderings. Keys are 1-indexed
/// component ids listed from shortest-lived to longest-lived.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationModel<S> {
    n: usize,
    probs: BTreeMap<Vec<u8>, S>,
}

fn check_model_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("component count must be at least 1".into()));
    }
    if n > MAX_MODEL_COMPONENTS {
        return Err(Error::SizeLimitExceeded {
            what: "permutation model component count",
            got: n,
            limit: MAX_MODEL_COMPONENTS,
        });
    }
    Ok(())
}

fn is_permutation(perm: &[u8], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = [false; MAX_MODEL_COMPONENTS + 1];
    for &id in perm {
        let id = id as usize;
        if id == 0 || id > n || seen[id] {
            return false;
        }
        seen[id] = true;
    }
    true
}

/// All permutations of 1..=n in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current: Vec<u8> = Vec::with_capacity(n);
    let mut used = vec![false; n + 1];
    fn rec(n: usize, current: &mut Vec<u8>, used: &mut [bool], out: &mut Vec<Vec<u8>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for id in 1..=n {
            if !used[id] {
                used[id] = true;
                current.push(id as u8);
                rec(n, current, used, out);
                current.pop();
                used[id] = false;
            }
        }
    }
    rec(n, &mut current, &mut used, &mut out);
    out
}

impl<S: Scalar> PermutationModel<S> {
    /// Validates keys and that probabilities are nonnegative and sum to one.
    /// Entries equal to zero are dropped; absent orderings have probability 0.
    pub fn new(n: usize, probs: BTreeMap<Vec<u8>, S>) -> Result<Self> {
        check_model_n(n)?;
        let mut total = S::zero();
        let mut kept = BTreeMap::new();
        for (perm, p) in probs {
            if !is_permutation(&perm, n) {
                return Err(Error::InvalidParameter(format!(
                    "{perm:?} is not a permutation of 1..={n}"
                )));
            }
            if !p.at_least(&S::zero()) {
                return Err(Error::InvariantViolation(format!(
                    "ordering {perm:?} has negative probability {p}"
                )));
            }
            total = total + p.clone();
            if !p.is_zero() {
                kept.insert(perm, p);
            }
        }
        if !total.close_to(&S::one()) {
            return Err(Error::InvariantViolation(format!(
                "ordering probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { n, probs: kept })
    }

    /// The exchangeable model: every ordering has probability 1/n!.
    pub fn uniform(n: usize) -> Result<Self> {
        check_model_n(n)?;
        let total = factorial(n);
        let p = S::from_ratio(BigInt::from(1), total);
        let probs = permutations(n)
            .into_iter()
            .map(|perm| (perm, p.clone()))
            .collect();
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u8], &S)> {
        self.probs.iter().map(|(perm, p)| (perm.as_slice(), p))
    }

    pub fn prob(&self, perm: &[u8]) -> S {
        self.probs.get(perm).cloned().unwrap_or_else(S::zero)
    }

    /// q(A) for every subset A, materialized as a table over masks.
    pub fn quality(&self) -> QualityFunction<S> {
        let n = self.n;
        let mut values = vec![S::zero(); 1 << n];
        for (perm, p) in &self.probs {
            // grow the suffix set of longest-lived components one id at a time
            let mut mask = 0u32;
            for j in 1..n {
                mask |= 1 << (perm[n - j] - 1);
                values[mask as usize] = values[mask as usize].clone() + p.clone();
            }
        }
        values[0] = S::one();
        values[full_mask(n) as usize] = S::one();
        QualityFunction::new(n, values).expect("model quality satisfies the q invariants")
    }

    /// q(A, B) for every pair, tabulated sparsely over nested suffix pairs.
    pub fn bivariate_quality(&self) -> BivariateQuality<S> {
        let n = self.n;
        let mut pairs: BTreeMap<(u32, u32), S> = BTreeMap::new();
        for (perm, p) in &self.probs {
            let mut suffixes = Vec::with_capacity(n + 1);
            let mut mask = 0u32;
            suffixes.push(mask);
            for j in 1..=n {
                mask |= 1 << (perm[n - j] - 1);
                suffixes.push(mask);
            }
            for a in 0..=n {
                for b in 0..=a {
                    let entry = pairs
                        .entry((suffixes[a], suffixes[b]))
                        .or_insert_with(S::zero);
                    *entry = entry.clone() + p.clone();
                }
            }
        }
        BivariateQuality {
            n,
            source: BivariateSource::Tabulated(pairs),
        }
    }
}

/// q(A) over all 2^n subsets of a fixed component set.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityFunction<S> {
    n: usize,
    values: Vec<S>,
}

impl<S: Scalar> QualityFunction<S> {
    pub fn new(n: usize, values: Vec<S>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("component count must be at least 1".into()));
        }
        if values.len() != 1 << n {
            return Err(Error::DimensionMismatch(format!(
                "quality table has {} entries, expected {}",
                values.len(),
                1usize << n
            )));
        }
        let q = Self { n, values };
        q.validate()?;
        Ok(q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self, mask: u32) -> &S {
        &self.values[mask as usize]
    }

    fn validate(&self) -> Result<()> {
        let full = full_mask(self.n);
        if !self.values[0].close_to(&S::one()) || !self.values[full as usize].close_to(&S::one()) {
            return Err(Error::InvariantViolation(
                "q(empty) and q(full) must equal 1".into(),
            ));
        }
        let mut sums = vec![S::zero(); self.n + 1];
        for mask in 0..=full {
            let v = &self.values[mask as usize];
            if !v.at_least(&S::zero()) || !S::one().at_least(v) {
                return Err(Error::InvariantViolation(format!(
                    "q({:?}) = {v} outside [0, 1]",
                    ids_from_mask(mask)
                )));
            }
            let size = mask.count_ones() as usize;
            sums[size] = sums[size].clone() + v.clone();
        }
        for (k, sum) in sums.iter().enumerate().take(self.n).skip(1) {
            if !sum.close_to(&S::one()) {
                return Err(Error::InvariantViolation(format!(
                    "q over subsets of size {k} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BivariateSource<S> {
    /// Closed-form q0; never materializes orderings.
    Uniform,
    /// Tabulated from a permutation model, keyed (superset, subset).
    Tabulated(BTreeMap<(u32, u32), S>),
}

/// q(A, B), queryable for any pair of subsets. Zero on non-nested pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateQuality<S> {
    n: usize,
    source: BivariateSource<S>,
}

impl<S: Scalar> BivariateQuality<S> {
    /// The exchangeable case, backed by the q0 closed form; scales to the
    /// full truth-table component limit.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("component count must be at least 1".into()));
        }
        if n > crate::structure::MAX_COMPONENTS {
            return Err(Error::SizeLimitExceeded {
                what: "component count",
                got: n,
                limit: crate::structure::MAX_COMPONENTS,
            });
        }
        Ok(Self {
            n,
            source: BivariateSource::Uniform,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.source, BivariateSource::Uniform)
    }

    pub fn q(&self, a: u32, b: u32) -> S {
        let (sup, sub) = if a.count_ones() >= b.count_ones() {
            (a, b)
        } else {
            (b, a)
        };
        if !is_subset(sub, sup) {
            return S::zero();
        }
        match &self.source {
            BivariateSource::Uniform => q0_scalar(self.n, sup, sub),
            BivariateSource::Tabulated(pairs) => pairs
                .get(&(sup, sub))
                .cloned()
                .unwrap_or_else(S::zero),
        }
    }
}

/// (n - c1)! (c1 - c2)! ... (c_{m-1} - c_m)! c_m! for a descending cardinality
/// chain; the numerator of every exchangeable quality value.
pub(crate) fn chain_factorial_product(n: usize, cards_desc: &[usize]) -> BigInt {
    let mut acc = factorial(n - cards_desc[0]);
    for w in cards_desc.windows(2) {
        acc *= factorial(w[0] - w[1]);
    }
    acc * factorial(cards_desc[cards_desc.len() - 1])
}

pub(crate) fn q0_scalar<S: Scalar>(n: usize, sup: u32, sub: u32) -> S {
    debug_assert!(is_subset(sub, sup));
    let cards = [sup.count_ones() as usize, sub.count_ones() as usize];
    S::from_ratio(chain_factorial_product(n, &cards), factorial(n))
}

fn check_subset(n: usize, mask: u32) -> Result<()> {
    if mask & !full_mask(n) != 0 {
        return Err(Error::SubsetOutOfRange {
            ids: ids_from_mask(mask),
            n,
        });
    }
    Ok(())
}

/// The exchangeable-model value of q(A, B):
/// (n-|A|)! (|A|-|B|)! |B|! / n! when B is a subset of A (symmetrically when
/// A is a subset of B), and 0 when the two sets are not nested.
pub fn q0(n: usize, a: u32, b: u32) -> Result<num_rational::BigRational> {
    if n == 0 {
        return Err(Error::InvalidParameter("component count must be at least 1".into()));
    }
    check_subset(n, a)?;
    check_subset(n, b)?;
    let (sup, sub) = if a.count_ones() >= b.count_ones() {
        (a, b)
    } else {
        (b, a)
    };
    if !is_subset(sub, sup) {
        return Ok(num_rational::BigRational::from_ratio(BigInt::from(0), BigInt::from(1)));
    }
    Ok(q0_scalar(n, sup, sub))
}

/// m-variate extension of [`q0`]: nonzero only when the sets can be arranged
/// into an inclusion chain, in which case the value depends on the sorted
/// cardinalities alone.
pub fn q0_multi(n: usize, sets: &[u32]) -> Result<num_rational::BigRational> {
    if n == 0 {
        return Err(Error::InvalidParameter("component count must be at least 1".into()));
    }
    if sets.is_empty() {
        return Err(Error::EmptySetList);
    }
    for &s in sets {
        check_subset(n, s)?;
    }
    let mut ordered: Vec<u32> = sets.to_vec();
    ordered.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    if ordered.windows(2).any(|w| !is_subset(w[1], w[0])) {
        return Ok(num_rational::BigRational::from_ratio(BigInt::from(0), BigInt::from(1)));
    }
    let cards: Vec<usize> = ordered.iter().map(|s| s.count_ones() as usize).collect();
    Ok(num_rational::BigRational::from_ratio(
        chain_factorial_product(n, &cards),
        factorial(n),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsets::binomial;
    use num_rational::BigRational;
    use proptest::prelude::*;

    type Rat = BigRational;

    fn rat(num: i64, den: i64) -> Rat {
        Rat::new(BigInt::from(num), BigInt::from(den))
    }

    fn mask(ids: &[usize]) -> u32 {
        ids.iter().map(|&i| 1u32 << (i - 1)).fold(0, |a, b| a | b)
    }

    /// Random exact model: integer weights over all orderings, normalized.
    fn arb_model(n: usize) -> impl Strategy<Value = PermutationModel<Rat>> {
        let count = permutations(n).len();
        prop::collection::vec(0u64..5, count).prop_filter_map("total weight > 0", move |weights| {
            let total: u64 = weights.iter().sum();
            if total == 0 {
                return None;
            }
            let probs = permutations(n)
                .into_iter()
                .zip(&weights)
                .map(|(perm, &w)| (perm, Rat::new(BigInt::from(w), BigInt::from(total))))
                .collect();
            Some(PermutationModel::new(n, probs).unwrap())
        })
    }

    #[test]
    fn uniform_model_has_equal_probs() {
        let model = PermutationModel::<Rat>::uniform(3).unwrap();
        assert_eq!(model.iter().count(), 6);
        for (_, p) in model.iter() {
            assert_eq!(*p, rat(1, 6));
        }
        assert!(matches!(
            PermutationModel::<Rat>::uniform(9),
            Err(Error::SizeLimitExceeded { .. })
        ));
    }

    #[test]
    fn model_validation() {
        let mut probs = BTreeMap::new();
        probs.insert(vec![1, 2], rat(1, 2));
        assert!(matches!(
            PermutationModel::new(2, probs.clone()),
            Err(Error::InvariantViolation(_))
        ));
        probs.insert(vec![2, 1], rat(1, 2));
        assert!(PermutationModel::new(2, probs.clone()).is_ok());
        probs.insert(vec![2, 2], rat(0, 1));
        assert!(matches!(
            PermutationModel::new(2, probs),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn uniform_quality_is_reciprocal_binomial() {
        for n in 1..=5usize {
            let q = PermutationModel::<Rat>::uniform(n).unwrap().quality();
            for mask in 0..(1u32 << n) {
                let k = mask.count_ones() as usize;
                let expect = Rat::new(BigInt::from(1), binomial(n, k));
                assert_eq!(*q.q(mask), expect, "n={n} mask={mask:b}");
            }
        }
    }

    #[test]
    fn point_mass_on_identity_ordering() {
        // T1 < T2 < T3 surely: the best j components are always the top ids
        let mut probs = BTreeMap::new();
        probs.insert(vec![1, 2, 3], rat(1, 1));
        let q = PermutationModel::new(3, probs).unwrap().quality();
        assert_eq!(*q.q(mask(&[3])), rat(1, 1));
        assert_eq!(*q.q(mask(&[2])), rat(0, 1));
        assert_eq!(*q.q(mask(&[2, 3])), rat(1, 1));
    }

    #[test]
    fn two_component_model_quality() {
        // Pr(T1 < T2) = 3/10, so {2} is the best singleton with probability 3/10
        let mut probs = BTreeMap::new();
        probs.insert(vec![1, 2], rat(3, 10));
        probs.insert(vec![2, 1], rat(7, 10));
        let q = PermutationModel::new(2, probs).unwrap().quality();
        assert_eq!(*q.q(mask(&[2])), rat(3, 10));
        assert_eq!(*q.q(mask(&[1])), rat(7, 10));
    }

    #[test]
    fn bivariate_uniform_examples() {
        let q2 = PermutationModel::<Rat>::uniform(3).unwrap().bivariate_quality();
        // only the ordering 1 < 2 < 3 puts {2,3} on top and {3} above it
        assert_eq!(q2.q(mask(&[2, 3]), mask(&[3])), rat(1, 6));
        assert_eq!(q2.q(mask(&[3]), mask(&[2, 3])), rat(1, 6));
        assert_eq!(q2.q(mask(&[1]), mask(&[2])), rat(0, 1));
        assert_eq!(q2.q(mask(&[1, 2]), mask(&[3])), rat(0, 1));
    }

    #[test]
    fn bivariate_uniform_matches_q0_everywhere() {
        for n in 1..=5usize {
            let model = PermutationModel::<Rat>::uniform(n).unwrap();
            let tab = model.bivariate_quality();
            let closed = BivariateQuality::<Rat>::uniform(n).unwrap();
            for a in 0..(1u32 << n) {
                for b in 0..(1u32 << n) {
                    assert_eq!(tab.q(a, b), closed.q(a, b), "n={n} a={a:b} b={b:b}");
                }
            }
        }
    }

    #[test]
    fn q0_examples() {
        assert_eq!(q0(4, mask(&[1, 2]), mask(&[2])).unwrap(), rat(1, 12));
        assert_eq!(q0(4, mask(&[1, 2]), mask(&[3, 4])).unwrap(), rat(0, 1));
        assert_eq!(q0(4, mask(&[1, 2]), mask(&[1, 2])).unwrap(), rat(1, 6));
        // boundary conventions come out of the same chain formula
        assert_eq!(q0(4, mask(&[1, 2]), 0).unwrap(), rat(1, 6));
        assert_eq!(q0(4, mask(&[1, 2]), full_mask(4)).unwrap(), rat(1, 6));
        assert!(matches!(
            q0(3, mask(&[4]), 0),
            Err(Error::SubsetOutOfRange { .. })
        ));
    }

    #[test]
    fn q0_multi_examples() {
        let sets = [mask(&[1, 2, 3]), mask(&[2, 3]), mask(&[3])];
        assert_eq!(q0_multi(3, &sets).unwrap(), rat(1, 6));
        let broken = [mask(&[1]), mask(&[2]), mask(&[1, 2])];
        assert_eq!(q0_multi(3, &broken).unwrap(), rat(0, 1));
        assert_eq!(q0_multi(3, &[]).unwrap_err(), Error::EmptySetList);
        // repeated cardinalities must be the same set
        let chain = [mask(&[1, 2]), mask(&[2]), mask(&[2])];
        assert_eq!(q0_multi(3, &chain).unwrap(), rat(1, 6));
        // single set reduces to the univariate uniform quality
        assert_eq!(q0_multi(4, &[mask(&[1, 3])]).unwrap(), rat(1, 6));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn quality_invariants_hold((n, model) in (2usize..=5).prop_flat_map(|n| (Just(n), arb_model(n)))) {
            let q = model.quality();
            for k in 1..n {
                let sum: Rat = crate::subsets::masks_of_size(n, k)
                    .map(|m| q.q(m).clone())
                    .fold(rat(0, 1), |a, b| a + b);
                prop_assert_eq!(sum, rat(1, 1));
            }
        }

        #[test]
        fn bivariate_invariants_hold((n, model) in (2usize..=4).prop_flat_map(|n| (Just(n), arb_model(n)))) {
            let q = model.quality();
            let q2 = model.bivariate_quality();
            let full = full_mask(n);
            for a in 0..=full {
                // diagonal and boundary conventions
                prop_assert_eq!(q2.q(a, a), q.q(a).clone());
                prop_assert_eq!(q2.q(a, 0), q.q(a).clone());
                prop_assert_eq!(q2.q(a, full), q.q(a).clone());
                for b in 0..=a {
                    // symmetry and nesting support
                    prop_assert_eq!(q2.q(a, b), q2.q(b, a));
                    if !is_subset(a, b) && !is_subset(b, a) {
                        prop_assert_eq!(q2.q(a, b), rat(0, 1));
                    }
                }
                // summing q(A, B) over subsets B of A of a fixed size recovers q(A)
                for l in 0..=a.count_ones() as usize {
                    let sum: Rat = crate::subsets::submasks_of_size(a, l)
                        .map(|b| q2.q(a, b))
                        .fold(rat(0, 1), |acc, v| acc + v);
                    prop_assert_eq!(sum, q.q(a).clone(), "n={} a={:b} l={}", n, a, l);
                }
            }
        }
    }
}
