//! Signatures and survival tails of one or several systems sharing a pool of
//! components.
//!
//! Throughout, K denotes the failure rank of a system: the count of component
//! failures at which the system itself dies, so K ranges over 1..=n. The
//! signature entry s_k is Pr(K = k) and the tail entry is Pr(K > k). Joint
//! variants track the ranks of several systems built on the same components;
//! p_{k,l} = Pr(K1 = k, K2 = l) and the tail matrix holds Pr(K1 > k, K2 > l).
//!
//! Two evaluation routes exist for joint tails. [`joint_tail`] sums quality
//! values over pairs of satisfying sets and accepts any lifetime ordering
//! model through [`BivariateQuality`]; [`multi_tail`] generalizes to m
//! systems, either through the exchangeable closed form or by scanning the
//! orderings of an explicit [`PermutationModel`]. The routes are independent
//! on purpose and cross-checked in the tests.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quality::{chain_factorial_product, BivariateQuality, PermutationModel, QualityFunction};
use crate::scalar::Scalar;
use crate::structure::StructureFunction;
use crate::subsets::{binomial, factorial, full_mask, submasks_of_size};

/// Cap on m * n for m-variate tails; keeps the (n+1)^m cell array and the
/// per-cell chain walks tractable.
pub const MULTI_COMPONENT_BUDGET: usize = 24;

fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().expect("probability fits in f64")
}

/// Pr(K = k) for k in 1..=n. Entries are nonnegative and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureVector<S> {
    n: usize,
    values: Vec<S>,
}

impl<S: Scalar> SignatureVector<S> {
    pub fn new(n: usize, values: Vec<S>) -> Result<Self> {
        if values.len() != n || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "signature vector has {} entries, expected n = {n}",
                values.len()
            )));
        }
        let mut sum = S::zero();
        for (i, v) in values.iter().enumerate() {
            if !v.at_least(&S::zero()) {
                return Err(Error::InvariantViolation(format!(
                    "signature entry s_{} = {v} is negative",
                    i + 1
                )));
            }
            sum = sum + v.clone();
        }
        if !sum.close_to(&S::one()) {
            return Err(Error::InvariantViolation(format!(
                "signature entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Pr(K = k); panics unless 1 <= k <= n.
    pub fn prob(&self, k: usize) -> &S {
        assert!((1..=self.n).contains(&k), "signature index {k} outside 1..={}", self.n);
        &self.values[k - 1]
    }

    /// Entries s_1 .. s_n in order.
    pub fn values(&self) -> &[S] {
        &self.values
    }
}

impl SignatureVector<BigRational> {
    pub fn to_f64(&self) -> SignatureVector<f64> {
        SignatureVector {
            n: self.n,
            values: self.values.iter().map(to_f64).collect(),
        }
    }
}

/// Pr(K > k) for k in 0..=n; starts at 1, ends at 0, nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TailVector<S> {
    n: usize,
    values: Vec<S>,
}

impl<S: Scalar> TailVector<S> {
    pub fn new(n: usize, values: Vec<S>) -> Result<Self> {
        if values.len() != n + 1 || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "tail vector has {} entries, expected n + 1 = {}",
                values.len(),
                n + 1
            )));
        }
        if !values[0].close_to(&S::one()) {
            return Err(Error::InvariantViolation(format!(
                "tail starts at {}, expected 1",
                values[0]
            )));
        }
        if !values[n].close_to(&S::zero()) {
            return Err(Error::InvariantViolation(format!(
                "tail ends at {}, expected 0",
                values[n]
            )));
        }
        for w in values.windows(2) {
            if !w[0].at_least(&w[1]) {
                return Err(Error::InvariantViolation(format!(
                    "tail increases from {} to {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Pr(K > k); panics unless k <= n.
    pub fn prob(&self, k: usize) -> &S {
        assert!(k <= self.n, "tail index {k} outside 0..={}", self.n);
        &self.values[k]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

impl TailVector<BigRational> {
    pub fn to_f64(&self) -> TailVector<f64> {
        TailVector {
            n: self.n,
            values: self.values.iter().map(to_f64).collect(),
        }
    }
}

/// Pr(K1 = k, K2 = l) over 1..=n squared, row index k for the first system.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMatrix<S> {
    n: usize,
    entries: Vec<S>,
}

impl<S: Scalar> SignatureMatrix<S> {
    pub fn new(n: usize, entries: Vec<S>) -> Result<Self> {
        if entries.len() != n * n || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "signature matrix has {} entries, expected n^2 = {}",
                entries.len(),
                n * n
            )));
        }
        let mut sum = S::zero();
        for (i, v) in entries.iter().enumerate() {
            if !v.at_least(&S::zero()) {
                return Err(Error::InvariantViolation(format!(
                    "signature entry s_{{{},{}}} = {v} is negative",
                    i / n + 1,
                    i % n + 1
                )));
            }
            sum = sum + v.clone();
        }
        if !sum.close_to(&S::one()) {
            return Err(Error::InvariantViolation(format!(
                "signature entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Pr(K1 = k, K2 = l); panics unless both lie in 1..=n.
    pub fn prob(&self, k: usize, l: usize) -> &S {
        assert!(
            (1..=self.n).contains(&k) && (1..=self.n).contains(&l),
            "signature index ({k},{l}) outside 1..={}",
            self.n
        );
        &self.entries[(k - 1) * self.n + (l - 1)]
    }

    /// Row-major entries, row k fixed first.
    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    /// Signature of the first system: row sums.
    pub fn marginal_first(&self) -> SignatureVector<S> {
        let v = (1..=self.n)
            .map(|k| {
                (1..=self.n)
                    .map(|l| self.prob(k, l).clone())
                    .fold(S::zero(), |a, b| a + b)
            })
            .collect();
        SignatureVector::new(self.n, v).expect("row sums of a signature matrix form a signature")
    }

    /// Signature of the second system: column sums.
    pub fn marginal_second(&self) -> SignatureVector<S> {
        let v = (1..=self.n)
            .map(|l| {
                (1..=self.n)
                    .map(|k| self.prob(k, l).clone())
                    .fold(S::zero(), |a, b| a + b)
            })
            .collect();
        SignatureVector::new(self.n, v).expect("column sums of a signature matrix form a signature")
    }
}

impl SignatureMatrix<BigRational> {
    pub fn to_f64(&self) -> SignatureMatrix<f64> {
        SignatureMatrix {
            n: self.n,
            entries: self.entries.iter().map(to_f64).collect(),
        }
    }
}

/// Pr(K1 > k, K2 > l) over 0..=n squared; equals 1 at (0,0), vanishes on the
/// k = n and l = n edges, and is nonincreasing along rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TailMatrix<S> {
    n: usize,
    entries: Vec<S>,
}

impl<S: Scalar> TailMatrix<S> {
    pub fn new(n: usize, entries: Vec<S>) -> Result<Self> {
        let side = n + 1;
        if entries.len() != side * side || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "tail matrix has {} entries, expected (n+1)^2 = {}",
                entries.len(),
                side * side
            )));
        }
        let at = |k: usize, l: usize| &entries[k * side + l];
        if !at(0, 0).close_to(&S::one()) {
            return Err(Error::InvariantViolation(format!(
                "tail matrix starts at {}, expected 1",
                at(0, 0)
            )));
        }
        for i in 0..=n {
            if !at(n, i).close_to(&S::zero()) || !at(i, n).close_to(&S::zero()) {
                return Err(Error::InvariantViolation(
                    "tail matrix must vanish on its last row and column".into(),
                ));
            }
        }
        for k in 0..=n {
            for l in 0..=n {
                if !at(k, l).at_least(&S::zero()) {
                    return Err(Error::InvariantViolation(format!(
                        "tail entry at ({k},{l}) = {} is negative",
                        at(k, l)
                    )));
                }
                if l < n && !at(k, l).at_least(at(k, l + 1)) {
                    return Err(Error::InvariantViolation(format!(
                        "tail increases along row {k} at column {l}"
                    )));
                }
                if k < n && !at(k, l).at_least(at(k + 1, l)) {
                    return Err(Error::InvariantViolation(format!(
                        "tail increases along column {l} at row {k}"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Pr(K1 > k, K2 > l); panics unless both lie in 0..=n.
    pub fn prob(&self, k: usize, l: usize) -> &S {
        assert!(
            k <= self.n && l <= self.n,
            "tail index ({k},{l}) outside 0..={}",
            self.n
        );
        &self.entries[k * (self.n + 1) + l]
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    /// Tail of the first system alone: the l = 0 column.
    pub fn marginal_first(&self) -> TailVector<S> {
        let v = (0..=self.n).map(|k| self.prob(k, 0).clone()).collect();
        TailVector::new(self.n, v).expect("column 0 of a tail matrix is a tail")
    }

    /// Tail of the second system alone: the k = 0 row.
    pub fn marginal_second(&self) -> TailVector<S> {
        let v = (0..=self.n).map(|l| self.prob(0, l).clone()).collect();
        TailVector::new(self.n, v).expect("row 0 of a tail matrix is a tail")
    }
}

impl TailMatrix<BigRational> {
    pub fn to_f64(&self) -> TailMatrix<f64> {
        TailMatrix {
            n: self.n,
            entries: self.entries.iter().map(to_f64).collect(),
        }
    }
}

/// Pr(K1 > k1, ..., Km > km): the m-variate tail, stored row-major with the
/// last axis fastest. Each axis is indexed 0..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct TailArray<S> {
    n: usize,
    m: usize,
    values: Vec<S>,
}

impl<S: Scalar> TailArray<S> {
    pub fn new(n: usize, m: usize, values: Vec<S>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter(
                "tail array needs at least one system and one component".into(),
            ));
        }
        let side = n + 1;
        let len = side.pow(m as u32);
        if values.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "tail array has {} entries, expected (n+1)^m = {len}",
                values.len()
            )));
        }
        if !values[0].close_to(&S::one()) {
            return Err(Error::InvariantViolation(format!(
                "tail array starts at {}, expected 1",
                values[0]
            )));
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.at_least(&S::zero()) {
                return Err(Error::InvariantViolation(format!(
                    "tail array entry {idx} = {v} is negative"
                )));
            }
            let mut rest = idx;
            for _ in 0..m {
                if rest % side == n && !v.close_to(&S::zero()) {
                    return Err(Error::InvariantViolation(
                        "tail array must vanish where any index reaches n".into(),
                    ));
                }
                rest /= side;
            }
        }
        let mut stride = 1usize;
        for _ in 0..m {
            let block = stride * side;
            for chunk in (0..len).step_by(block) {
                for off in 0..stride {
                    for j in 0..n {
                        let i = chunk + off + j * stride;
                        if !values[i].at_least(&values[i + stride]) {
                            return Err(Error::InvariantViolation(format!(
                                "tail array increases along an axis at entry {i}"
                            )));
                        }
                    }
                }
            }
            stride = block;
        }
        Ok(Self { n, m, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Pr(K1 > k1, ..., Km > km); panics unless `ks` has length m with every
    /// entry at most n.
    pub fn prob(&self, ks: &[usize]) -> &S {
        assert_eq!(ks.len(), self.m, "tail array wants {} indices", self.m);
        let side = self.n + 1;
        let mut idx = 0usize;
        for &k in ks {
            assert!(k <= self.n, "tail index {k} outside 0..={}", self.n);
            idx = idx * side + k;
        }
        &self.values[idx]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

impl TailArray<BigRational> {
    pub fn to_f64(&self) -> TailArray<f64> {
        TailArray {
            n: self.n,
            m: self.m,
            values: self.values.iter().map(to_f64).collect(),
        }
    }
}

/// Satisfying masks of each cardinality, one list per size 0..=n.
fn satisfying_by_size(phi: &StructureFunction) -> Vec<Vec<u32>> {
    let n = phi.n();
    let mut lists = vec![Vec::new(); n + 1];
    for mask in 0..=full_mask(n) {
        if phi.value(mask) {
            lists[mask.count_ones() as usize].push(mask);
        }
    }
    lists
}

/// Pr(K > k) for the exchangeable lifetime model: the satisfying fraction of
/// the size-(n-k) subsets.
pub fn structure_tail<S: Scalar>(phi: &StructureFunction) -> TailVector<S> {
    let n = phi.n();
    let sat = satisfying_by_size(phi);
    let values = (0..=n)
        .map(|k| S::from_ratio(BigInt::from(sat[n - k].len()), binomial(n, n - k)))
        .collect();
    TailVector::new(n, values).expect("satisfying fractions of a semicoherent system form a tail")
}

/// The signature under the exchangeable lifetime model, as consecutive
/// differences of the structure tail.
pub fn boland_signature<S: Scalar>(phi: &StructureFunction) -> SignatureVector<S> {
    signature_from_tail(&structure_tail(phi))
        .expect("differences of a structure tail form a signature")
}

fn check_same_n(n: usize, other: usize, what: &str) -> Result<()> {
    if n != other {
        return Err(Error::DimensionMismatch(format!(
            "system has {n} components but {what} has {other}"
        )));
    }
    Ok(())
}

fn raw_probability_tail<S: Scalar>(
    phi: &StructureFunction,
    q: &QualityFunction<S>,
) -> Result<Vec<S>> {
    let n = phi.n();
    check_same_n(n, q.n(), "the quality function")?;
    let mut values = vec![S::zero(); n + 1];
    for mask in 0..=full_mask(n) {
        if phi.value(mask) {
            let k = n - mask.count_ones() as usize;
            values[k] = values[k].clone() + q.q(mask).clone();
        }
    }
    Ok(values)
}

/// Pr(K > k) under an arbitrary lifetime ordering model, summing q over the
/// satisfying sets of each cardinality. Fails if the quality table is not
/// realizable by any ordering distribution and the sums lose monotonicity.
pub fn probability_tail<S: Scalar>(
    phi: &StructureFunction,
    q: &QualityFunction<S>,
) -> Result<TailVector<S>> {
    TailVector::new(phi.n(), raw_probability_tail(phi, q)?)
}

/// Pr(K = k) under an arbitrary lifetime ordering model. Fails with a
/// negative-entry report if the quality table is not realizable.
pub fn probability_signature<S: Scalar>(
    phi: &StructureFunction,
    q: &QualityFunction<S>,
) -> Result<SignatureVector<S>> {
    let tails = raw_probability_tail(phi, q)?;
    let values = (1..=phi.n())
        .map(|k| tails[k - 1].clone() - tails[k].clone())
        .collect();
    SignatureVector::new(phi.n(), values)
}

/// s_k = Pr(K > k-1) - Pr(K > k).
pub fn signature_from_tail<S: Scalar>(tail: &TailVector<S>) -> Result<SignatureVector<S>> {
    let values = (1..=tail.n())
        .map(|k| tail.prob(k - 1).clone() - tail.prob(k).clone())
        .collect();
    SignatureVector::new(tail.n(), values)
}

/// Pr(K > k) = sum of s_j over j > k.
pub fn tail_from_signature<S: Scalar>(sig: &SignatureVector<S>) -> Result<TailVector<S>> {
    let n = sig.n();
    let mut values = vec![S::zero(); n + 1];
    for k in (0..n).rev() {
        values[k] = values[k + 1].clone() + sig.prob(k + 1).clone();
    }
    TailVector::new(n, values)
}

/// Pr(K1 > k, K2 > l) for two systems on one component pool, under the
/// ordering model behind `q`. Cost grows with the satisfying-set counts; for
/// tabulated models the component count is already capped by the model.
pub fn joint_tail<S: Scalar>(
    phi1: &StructureFunction,
    phi2: &StructureFunction,
    q: &BivariateQuality<S>,
) -> Result<TailMatrix<S>> {
    let n = phi1.n();
    check_same_n(n, phi2.n(), "the second system")?;
    check_same_n(n, q.n(), "the quality function")?;
    let sat1 = satisfying_by_size(phi1);
    let sat2 = satisfying_by_size(phi2);
    let side = n + 1;
    let entries: Vec<S> = (0..side * side)
        .into_par_iter()
        .map(|idx| {
            let (k, l) = (idx / side, idx % side);
            let (a, b) = (n - k, n - l);
            // nested pairs only: enumerate the larger set, walk its submasks
            let (sup_list, sub_size, sub_phi): (&[u32], usize, &StructureFunction) = if a >= b {
                (&sat1[a], b, phi2)
            } else {
                (&sat2[b], a, phi1)
            };
            if q.is_uniform() {
                let count: u64 = sup_list
                    .iter()
                    .map(|&sup| {
                        submasks_of_size(sup, sub_size)
                            .filter(|&sub| sub_phi.value(sub))
                            .count() as u64
                    })
                    .sum();
                let cards = [a.max(b), a.min(b)];
                S::from_ratio(
                    BigInt::from(count) * chain_factorial_product(n, &cards),
                    factorial(n),
                )
            } else {
                let mut acc = S::zero();
                for &sup in sup_list {
                    for sub in submasks_of_size(sup, sub_size) {
                        if sub_phi.value(sub) {
                            acc = acc + q.q(sup, sub);
                        }
                    }
                }
                acc
            }
        })
        .collect();
    TailMatrix::new(n, entries)
}

/// [`joint_tail`] under the exchangeable lifetime model.
pub fn joint_structure_tail<S: Scalar>(
    phi1: &StructureFunction,
    phi2: &StructureFunction,
) -> Result<TailMatrix<S>> {
    joint_tail(phi1, phi2, &BivariateQuality::uniform(phi1.n())?)
}

/// Pr(K1 = k, K2 = l) via the tail matrix of the given ordering model.
pub fn joint_signature<S: Scalar>(
    phi1: &StructureFunction,
    phi2: &StructureFunction,
    q: &BivariateQuality<S>,
) -> Result<SignatureMatrix<S>> {
    signature_matrix_from_tail(&joint_tail(phi1, phi2, q)?)
}

/// [`joint_signature`] under the exchangeable lifetime model.
pub fn joint_structure_signature<S: Scalar>(
    phi1: &StructureFunction,
    phi2: &StructureFunction,
) -> Result<SignatureMatrix<S>> {
    signature_matrix_from_tail(&joint_structure_tail(phi1, phi2)?)
}

/// p_{k,l} as the second-order difference of the tail matrix.
pub fn signature_matrix_from_tail<S: Scalar>(tail: &TailMatrix<S>) -> Result<SignatureMatrix<S>> {
    let n = tail.n();
    let mut entries = Vec::with_capacity(n * n);
    for k in 1..=n {
        for l in 1..=n {
            let v = tail.prob(k - 1, l - 1).clone() - tail.prob(k, l - 1).clone()
                - (tail.prob(k - 1, l).clone() - tail.prob(k, l).clone());
            entries.push(v);
        }
    }
    SignatureMatrix::new(n, entries)
}

/// Pr(K1 > k, K2 > l) as a double suffix sum of the signature matrix.
pub fn tail_matrix_from_signature<S: Scalar>(sig: &SignatureMatrix<S>) -> Result<TailMatrix<S>> {
    let n = sig.n();
    let side = n + 1;
    let mut entries = vec![S::zero(); side * side];
    for k in (0..n).rev() {
        for l in (0..n).rev() {
            // inclusion-exclusion on the three already-filled neighbors
            let v = entries[(k + 1) * side + l].clone() + entries[k * side + l + 1].clone()
                - entries[(k + 1) * side + l + 1].clone()
                + sig.prob(k + 1, l + 1).clone();
            entries[k * side + l] = v;
        }
    }
    TailMatrix::new(n, entries)
}

/// Pr(K1 > k1, ..., Km > km) for m systems on one component pool. `model`
/// selects the lifetime ordering distribution; `None` means exchangeable.
/// Requires m * n <= [`MULTI_COMPONENT_BUDGET`].
pub fn multi_tail<S: Scalar>(
    systems: &[&StructureFunction],
    model: Option<&PermutationModel<S>>,
) -> Result<TailArray<S>> {
    if systems.is_empty() {
        return Err(Error::EmptySetList);
    }
    let n = systems[0].n();
    for sys in systems {
        check_same_n(n, sys.n(), "another system in the list")?;
    }
    let m = systems.len();
    if m * n > MULTI_COMPONENT_BUDGET {
        return Err(Error::SizeLimitExceeded {
            what: "system count times component count",
            got: m * n,
            limit: MULTI_COMPONENT_BUDGET,
        });
    }
    match model {
        None => multi_tail_uniform(systems, n, m),
        Some(model) => {
            check_same_n(n, model.n(), "the ordering model")?;
            multi_tail_model(systems, model, n, m)
        }
    }
}

/// Exchangeable case: every inclusion chain with the same cardinality profile
/// carries the same probability, so each cell reduces to a chain count.
fn multi_tail_uniform<S: Scalar>(
    systems: &[&StructureFunction],
    n: usize,
    m: usize,
) -> Result<TailArray<S>> {
    let sat: Vec<Vec<Vec<u32>>> = systems.iter().map(|sys| satisfying_by_size(sys)).collect();
    let side = n + 1;
    let len = side.pow(m as u32);
    let n_fact = factorial(n);
    let values: Vec<S> = (0..len)
        .into_par_iter()
        .map(|idx| {
            // cardinality demanded on each axis, largest first
            let mut order: Vec<(usize, usize)> = Vec::with_capacity(m);
            let mut rest = idx;
            for axis in (0..m).rev() {
                order.push((n - rest % side, axis));
                rest /= side;
            }
            order.sort_by_key(|&(card, _)| std::cmp::Reverse(card));
            let (c0, s0) = order[0];
            let mut level: HashMap<u32, u64> =
                sat[s0][c0].iter().map(|&mask| (mask, 1u64)).collect();
            let mut prev = c0;
            for &(c, si) in &order[1..] {
                if c == prev {
                    // equal cardinalities force equal sets
                    level.retain(|&mask, _| systems[si].value(mask));
                } else {
                    let mut next: HashMap<u32, u64> = HashMap::new();
                    for (&sup, &cnt) in &level {
                        for sub in submasks_of_size(sup, c) {
                            if systems[si].value(sub) {
                                *next.entry(sub).or_insert(0) += cnt;
                            }
                        }
                    }
                    level = next;
                }
                prev = c;
            }
            let count: u64 = level.values().sum();
            let cards: Vec<usize> = order.iter().map(|x| x.0).collect();
            S::from_ratio(
                BigInt::from(count) * chain_factorial_product(n, &cards),
                n_fact.clone(),
            )
        })
        .collect();
    TailArray::new(n, m, values)
}

/// Explicit model: accumulate the joint failure-rank distribution over all
/// orderings, then take suffix sums along every axis.
fn multi_tail_model<S: Scalar>(
    systems: &[&StructureFunction],
    model: &PermutationModel<S>,
    n: usize,
    m: usize,
) -> Result<TailArray<S>> {
    let side = n + 1;
    let len = side.pow(m as u32);
    let mut values = vec![S::zero(); len];
    let mut ranks = vec![0usize; m];
    for (perm, p) in model.iter() {
        ranks.iter_mut().for_each(|r| *r = 0);
        let mut alive = full_mask(n);
        let mut remaining = m;
        for (deaths, &id) in perm.iter().enumerate() {
            alive &= !(1u32 << (id - 1));
            for (i, sys) in systems.iter().enumerate() {
                if ranks[i] == 0 && !sys.value(alive) {
                    ranks[i] = deaths + 1;
                    remaining -= 1;
                }
            }
            if remaining == 0 {
                break;
            }
        }
        // rank r contributes to tails with k < r, so store at offset r - 1
        let mut idx = 0usize;
        for &r in &ranks {
            idx = idx * side + (r - 1);
        }
        values[idx] = values[idx].clone() + p.clone();
    }
    let mut stride = 1usize;
    for _ in 0..m {
        let block = stride * side;
        for chunk in (0..len).step_by(block) {
            for off in 0..stride {
                for j in (0..n).rev() {
                    let i = chunk + off + j * stride;
                    values[i] = values[i].clone() + values[i + stride].clone();
                }
            }
        }
        stride = block;
    }
    TailArray::new(n, m, values)
}
