//! Joint reliability of two systems inspected at two times, the
//! signature-based decomposition of that probability, and checks of the
//! exchangeability conditions under which the decomposition is exact.
//!
//! The bridge object is the distribution of the component state pair
//! (X(t1), X(t2)), where X(t) is the alive mask at time t. For product-form
//! lifetime models (and mixtures of them) it has a closed form; otherwise it
//! can be estimated from cached samples. Everything downstream consumes the
//! same [`StateDistribution`], so analytic and empirical runs share code
//! paths and tolerances stay explicit.

use std::collections::HashMap;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::lifetimes::{LifetimeModel, Samples};
use crate::signature::SignatureMatrix;
use crate::structure::StructureFunction;
use crate::subsets::{binomial, full_mask};

/// Direct state enumeration walks at most 3^n structured pairs.
pub const MAX_STATE_ENUM_COMPONENTS: usize = 12;

/// The exchangeability checks enumerate 4^n state pairs.
pub const MAX_CONDITION_COMPONENTS: usize = 8;

/// Slack for comparisons between quantities both computed in closed form.
pub const ANALYTIC_TOLERANCE: f64 = 1e-12;

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "inspection time {t} must be finite and nonnegative"
        )))
    }
}

/// Source of component state-pair probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentStateModel {
    /// Closed form implied by a lifetime model.
    Analytic(LifetimeModel),
    /// Relative frequencies over a sample set drawn once at construction.
    Empirical {
        seed: u64,
        partitions: u32,
        samples: Samples,
    },
}

impl ComponentStateModel {
    pub fn analytic(model: LifetimeModel) -> Result<Self> {
        model.validate()?;
        Ok(ComponentStateModel::Analytic(model))
    }

    pub fn empirical(
        model: &LifetimeModel,
        n_samples: usize,
        seed: u64,
        partitions: u32,
    ) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        let samples = model.sample(seed, n_samples, partitions)?;
        Ok(ComponentStateModel::Empirical {
            seed,
            partitions,
            samples,
        })
    }

    pub fn n(&self) -> usize {
        match self {
            ComponentStateModel::Analytic(model) => model.n(),
            ComponentStateModel::Empirical { samples, .. } => samples.n(),
        }
    }

    /// Distribution of (X(t1), X(t2)).
    pub fn distribution(&self, t1: f64, t2: f64) -> Result<StateDistribution> {
        check_time(t1)?;
        check_time(t2)?;
        let n = self.n();
        match self {
            ComponentStateModel::Analytic(model) => {
                let terms = model
                    .product_terms()
                    .into_iter()
                    .map(|(weight, marginals)| {
                        let tables = marginals
                            .iter()
                            .map(|m| {
                                let (f1, f2) = (m.cdf(t1), m.cdf(t2));
                                [
                                    1.0 - f1.max(f2),
                                    (f2 - f1).max(0.0),
                                    (f1 - f2).max(0.0),
                                    f1.min(f2),
                                ]
                            })
                            .collect();
                        (weight, tables)
                    })
                    .collect();
                Ok(StateDistribution::Mixture { n, terms })
            }
            ComponentStateModel::Empirical { samples, .. } => {
                let mut pairs: HashMap<(u32, u32), u64> = HashMap::new();
                for row in samples.rows() {
                    let mut x = 0u32;
                    let mut y = 0u32;
                    for (i, &t) in row.iter().enumerate() {
                        if t > t1 {
                            x |= 1 << i;
                        }
                        if t > t2 {
                            y |= 1 << i;
                        }
                    }
                    *pairs.entry((x, y)).or_insert(0) += 1;
                }
                Ok(StateDistribution::Counts {
                    n,
                    pairs,
                    total: samples.count() as u64,
                })
            }
        }
    }
}

/// Distribution of the alive-mask pair at two fixed inspection times.
#[derive(Debug, Clone, PartialEq)]
pub enum StateDistribution {
    /// Weighted product terms; entry order per component is
    /// [alive-alive, alive-dead, dead-alive, dead-dead].
    Mixture {
        n: usize,
        terms: Vec<(f64, Vec<[f64; 4]>)>,
    },
    /// Observed pair counts.
    Counts {
        n: usize,
        pairs: HashMap<(u32, u32), u64>,
        total: u64,
    },
}

fn pair_type(x: u32, y: u32, i: usize) -> usize {
    match ((x >> i) & 1, (y >> i) & 1) {
        (1, 1) => 0,
        (1, 0) => 1,
        (0, 1) => 2,
        _ => 3,
    }
}

impl StateDistribution {
    pub fn n(&self) -> usize {
        match self {
            StateDistribution::Mixture { n, .. } => *n,
            StateDistribution::Counts { n, .. } => *n,
        }
    }

    /// Pr(X(t1) = x, X(t2) = y).
    pub fn pr(&self, x: u32, y: u32) -> f64 {
        match self {
            StateDistribution::Mixture { n, terms } => terms
                .iter()
                .map(|(w, tables)| {
                    w * (0..*n)
                        .map(|i| tables[i][pair_type(x, y, i)])
                        .product::<f64>()
                })
                .sum(),
            StateDistribution::Counts { pairs, total, .. } => {
                pairs.get(&(x, y)).copied().unwrap_or(0) as f64 / *total as f64
            }
        }
    }

    /// Sample size behind an empirical distribution.
    pub fn sample_total(&self) -> Option<u64> {
        match self {
            StateDistribution::Mixture { .. } => None,
            StateDistribution::Counts { total, .. } => Some(*total),
        }
    }
}

/// Pr(system 1 works at t1 and system 2 works at t2), straight from the
/// component state distribution without any signature machinery.
pub fn joint_reliability_direct(
    phi1: &StructureFunction,
    phi2: &StructureFunction,
    state: &ComponentStateModel,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let n = state.n();
    if phi1.n() != n || phi2.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "state model has {n} components but systems have {} and {}",
            phi1.n(),
            phi2.n()
        )));
    }
    match state.distribution(t1, t2)? {
        StateDistribution::Counts { pairs, total, .. } => {
            let hits: u64 = pairs
                .iter()
                .filter(|&(&(x, y), _)| phi1.value(x) && phi2.value(y))
                .map(|(_, &c)| c)
                .sum();
            Ok(hits as f64 / total as f64)
        }
        StateDistribution::Mixture { terms, .. } => {
            if n > MAX_STATE_ENUM_COMPONENTS {
                return Err(Error::SizeLimitExceeded {
                    what: "component count for state enumeration",
                    got: n,
                    limit: MAX_STATE_ENUM_COMPONENTS,
                });
            }
            // one alive mask contains the other, so walk mask/submask pairs;
            // which one is larger depends on the time order
            let (outer_phi, inner_phi, swapped) = if t1 <= t2 {
                (phi1, phi2, false)
            } else {
                (phi2, phi1, true)
            };
            let mut acc = 0.0;
            for (w, tables) in &terms {
                // indices per pair type under the outer/inner orientation:
                // inner-alive, outer-only-alive, dead at both
                let (both, fade) = if swapped { (0, 2) } else { (0, 1) };
                let mut term = 0.0;
                for outer in 0..=full_mask(n) {
                    if !outer_phi.value(outer) {
                        continue;
                    }
                    let mut dead = 1.0;
                    for (i, table) in tables.iter().enumerate() {
                        if outer >> i & 1 == 0 {
                            dead *= table[3];
                        }
                    }
                    if dead == 0.0 {
                        continue;
                    }
                    let mut alive_sum = 0.0;
                    let mut inner = outer;
                    loop {
                        if inner_phi.value(inner) {
                            let mut p = 1.0;
                            for i in 0..n {
                                if outer >> i & 1 == 1 {
                                    p *= tables[i][if inner >> i & 1 == 1 { both } else { fade }];
                                }
                            }
                            alive_sum += p;
                        }
                        if inner == 0 {
                            break;
                        }
                        inner = (inner - 1) & outer;
                    }
                    term += dead * alive_sum;
                }
                acc += w * term;
            }
            Ok(acc)
        }
    }
}

/// Pr(T_(k) > t1, T_(l) > t2) for the k-th and l-th smallest component
/// lifetimes. Exchangeable models use the trinomial closed form; everything
/// else falls back to direct evaluation with threshold systems.
pub fn order_stat_joint_reliability(
    state: &ComponentStateModel,
    k: usize,
    l: usize,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let n = state.n();
    if !(1..=n).contains(&k) || !(1..=n).contains(&l) {
        return Err(Error::OutOfRange(format!(
            "order statistic indices ({k},{l}) outside 1..={n}"
        )));
    }
    check_time(t1)?;
    check_time(t2)?;
    if let ComponentStateModel::Analytic(model) = state {
        if let LifetimeModel::ExchangeableMixture { parts, .. } = model {
            let total: f64 = parts.iter().map(|p| p.weight).sum();
            return parts
                .iter()
                .map(|p| {
                    iid_order_stat_tail(n, k, l, p.marginal.cdf(t1), p.marginal.cdf(t2))
                        .map(|v| v * p.weight / total)
                })
                .sum::<Result<f64>>();
        }
        if let Some(marginal) = model.iid_marginal() {
            return iid_order_stat_tail(n, k, l, marginal.cdf(t1), marginal.cdf(t2));
        }
    }
    let sys_k = StructureFunction::k_out_of_n(n, k)?;
    let sys_l = StructureFunction::k_out_of_n(n, l)?;
    joint_reliability_direct(&sys_k, &sys_l, state, t1, t2)
}

/// Closed form under iid lifetimes with cdf values f1 = F(t1), f2 = F(t2):
/// classify the n components by which inspection times they survive and sum
/// the trinomial probabilities compatible with both order statistics.
fn iid_order_stat_tail(n: usize, k: usize, l: usize, f1: f64, f2: f64) -> Result<f64> {
    // symmetric in the two inspections, so orient to t1 <= t2
    let (k, l, f1, f2) = if f1 <= f2 { (k, l, f1, f2) } else { (l, k, f2, f1) };
    let (a, b, c) = (f1, f2 - f1, 1.0 - f2);
    let mut acc = 0.0;
    // i dead by t1, j dying in between; T_(k) > t1 needs i < k and
    // T_(l) > t2 needs i + j < l
    for i in 0..k.min(l) {
        for j in 0..l - i {
            let m = n - i - j;
            let ways = (binomial(n, i) * binomial(n - i, j))
                .to_f64()
                .expect("trinomial coefficient fits in f64");
            acc += ways * a.powi(i as i32) * b.powi(j as i32) * c.powi(m as i32);
        }
    }
    Ok(acc)
}

/// Signature-based reconstruction of the joint reliability: the sum of
/// s_{k,l} Pr(T_(k) > t1, T_(l) > t2). Exact when the component states are
/// weakly exchangeable over time; the residual against
/// [`joint_reliability_direct`] measures the failure otherwise.
pub fn decompose_joint_reliability(
    sig: &SignatureMatrix<f64>,
    state: &ComponentStateModel,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let n = state.n();
    if sig.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "signature is {}x{} but the state model has {n} components",
            sig.n(),
            sig.n()
        )));
    }
    let mut acc = 0.0;
    for k in 1..=n {
        for l in 1..=n {
            let weight = *sig.prob(k, l);
            if weight != 0.0 {
                acc += weight * order_stat_joint_reliability(state, k, l, t1, t2)?;
            }
        }
    }
    Ok(acc)
}

/// Outcome of an exchangeability check over a grouped enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub holds: bool,
    pub pairs_checked: usize,
    pub witness: Option<ConditionWitness>,
}

/// Two state pairs in the same permutation orbit with probabilities that
/// disagree beyond the tolerance band.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionWitness {
    pub base: (u32, u32),
    pub image: (u32, u32),
    /// sigma[i] = j: component i+1 of the base occupies position j+1 of the
    /// image, preserving per-component state histories.
    pub sigma: Vec<usize>,
    pub base_prob: f64,
    pub image_prob: f64,
    pub band: f64,
}

fn difference_band(dist: &StateDistribution, p: f64, q: f64) -> f64 {
    match dist.sample_total() {
        None => ANALYTIC_TOLERANCE,
        Some(total) => {
            let n = total as f64;
            3.0 * ((p * (1.0 - p) + q * (1.0 - q) + 2.0 * p * q) / n).sqrt() + 1e-15
        }
    }
}

fn matching_permutation(n: usize, base: (u32, u32), image: (u32, u32)) -> Vec<usize> {
    let mut slots: [Vec<usize>; 4] = Default::default();
    for i in 0..n {
        slots[pair_type(image.0, image.1, i)].push(i);
    }
    let mut sigma = vec![0usize; n];
    let mut next = [0usize; 4];
    for (i, s) in sigma.iter_mut().enumerate() {
        let t = pair_type(base.0, base.1, i);
        *s = slots[t][next[t]];
        next[t] += 1;
    }
    sigma
}

fn check_orbits(
    dist: &StateDistribution,
    pairs: impl Iterator<Item = (u32, u32)>,
) -> ConditionReport {
    let n = dist.n();
    let mut reps: HashMap<u32, ((u32, u32), f64)> = HashMap::new();
    let mut checked = 0usize;
    for (x, y) in pairs {
        checked += 1;
        let mut key = 0u32;
        for i in 0..n {
            key += 1 << (8 * pair_type(x, y, i));
        }
        let p = dist.pr(x, y);
        match reps.get(&key) {
            None => {
                reps.insert(key, ((x, y), p));
            }
            Some(&(base, base_prob)) => {
                let band = difference_band(dist, base_prob, p);
                if (p - base_prob).abs() > band {
                    return ConditionReport {
                        holds: false,
                        pairs_checked: checked,
                        witness: Some(ConditionWitness {
                            base,
                            image: (x, y),
                            sigma: matching_permutation(n, base, (x, y)),
                            base_prob,
                            image_prob: p,
                            band,
                        }),
                    };
                }
            }
        }
    }
    ConditionReport {
        holds: true,
        pairs_checked: checked,
        witness: None,
    }
}

fn check_condition_size(n: usize) -> Result<()> {
    if n > MAX_CONDITION_COMPONENTS {
        return Err(Error::SizeLimitExceeded {
            what: "component count for exchangeability checks",
            got: n,
            limit: MAX_CONDITION_COMPONENTS,
        });
    }
    Ok(())
}

/// Checks whether the state-pair distribution at (t1, t2) is invariant under
/// simultaneous component relabeling: the weak exchangeability over time
/// that makes the signature decomposition exact. Probabilities are grouped
/// by the multiset of per-component state histories; all members of a group
/// must agree within the tolerance band.
pub fn check_condition_exchangeable_pair(
    state: &ComponentStateModel,
    t1: f64,
    t2: f64,
) -> Result<ConditionReport> {
    let n = state.n();
    check_condition_size(n)?;
    let dist = state.distribution(t1, t2)?;
    let full = full_mask(n);
    let pairs = (0..=full).flat_map(move |x| (0..=full).map(move |y| (x, y)));
    Ok(check_orbits(&dist, pairs))
}

/// Checks whether the single-time state vector X(t) is exchangeable:
/// Pr(X(t) = x) must depend on x only through its alive count.
pub fn check_state_exchangeability(state: &ComponentStateModel, t: f64) -> Result<ConditionReport> {
    let n = state.n();
    check_condition_size(n)?;
    let dist = state.distribution(t, t)?;
    let pairs = (0..=full_mask(n)).map(|x| (x, x));
    Ok(check_orbits(&dist, pairs))
}
