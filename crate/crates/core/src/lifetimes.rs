//! Component lifetime models, reproducible sampling, and Monte Carlo
//! estimators for signatures and ordering distributions.
//!
//! Sampling is deterministic in (seed, partitions): partition r draws from
//! stream r of a counter-based generator seeded with the seed, and partition
//! results are merged in partition order. Thread count never changes the
//! output, only how partitions are scheduled.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quality::{PermutationModel, MAX_MODEL_COMPONENTS};
use crate::signature::SignatureMatrix;
use crate::structure::{failure_rank, StructureFunction, MAX_COMPONENTS};

/// Full-vector redraws allowed per sample before giving up. Ties have
/// probability zero under any continuous marginal, so hitting this limit
/// means the model is degenerate at floating point resolution.
pub const MAX_TIE_RETRIES: u32 = 100;

/// A continuous lifetime distribution on (0, inf).
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    /// Uniform on (0, max).
    Uniform { max: f64 },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Marginal::Weibull { shape, scale } => {
                shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0
            }
            Marginal::Uniform { max } => max.is_finite() && max > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "marginal parameters must be positive and finite: {self:?}"
            )))
        }
    }

    /// Pr(T <= t); zero for t <= 0.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Marginal::Exponential { rate } => -(-rate * t).exp_m1(),
            Marginal::Weibull { shape, scale } => -(-(t / scale).powf(shape)).exp_m1(),
            Marginal::Uniform { max } => (t / max).min(1.0),
        }
    }

    /// Inverse of the cdf on [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Marginal::Exponential { rate } => -(-u).ln_1p() / rate,
            Marginal::Weibull { shape, scale } => scale * (-(-u).ln_1p()).powf(1.0 / shape),
            Marginal::Uniform { max } => u * max,
        }
    }
}

/// Joint distribution of the n component lifetimes.
#[derive(Debug, Clone, PartialEq)]
pub enum LifetimeModel {
    /// Independent draws from one marginal.
    Iid { n: usize, marginal: Marginal },
    /// Independent draws, one marginal per component.
    Independent { marginals: Vec<Marginal> },
    /// Draw a mixture part per sample, then all n components iid from it.
    /// Exchangeable but dependent when more than one part has weight.
    ExchangeableMixture { n: usize, parts: Vec<MixturePart> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixturePart {
    pub weight: f64,
    pub marginal: Marginal,
}

/// Mixture weights must sum to one within this slack; they are renormalized
/// exactly before use.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

impl LifetimeModel {
    pub fn n(&self) -> usize {
        match self {
            LifetimeModel::Iid { n, .. } => *n,
            LifetimeModel::Independent { marginals } => marginals.len(),
            LifetimeModel::ExchangeableMixture { n, .. } => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidParameter("component count must be at least 1".into()));
        }
        if n > MAX_COMPONENTS {
            return Err(Error::SizeLimitExceeded {
                what: "component count",
                got: n,
                limit: MAX_COMPONENTS,
            });
        }
        match self {
            LifetimeModel::Iid { marginal, .. } => marginal.validate(),
            LifetimeModel::Independent { marginals } => {
                marginals.iter().try_for_each(Marginal::validate)
            }
            LifetimeModel::ExchangeableMixture { parts, .. } => {
                if parts.is_empty() {
                    return Err(Error::InvalidParameter("mixture needs at least one part".into()));
                }
                let mut total = 0.0;
                for part in parts {
                    part.marginal.validate()?;
                    if !part.weight.is_finite() || part.weight < 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "mixture weight {} is not a finite nonnegative number",
                            part.weight
                        )));
                    }
                    total += part.weight;
                }
                if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                    return Err(Error::InvalidParameter(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// The common marginal when all components are exchangeable iid draws.
    pub fn iid_marginal(&self) -> Option<&Marginal> {
        match self {
            LifetimeModel::Iid { marginal, .. } => Some(marginal),
            LifetimeModel::ExchangeableMixture { parts, .. } if parts.len() == 1 => {
                Some(&parts[0].marginal)
            }
            _ => None,
        }
    }

    /// Mixture decomposition of the model as (weight, per-component
    /// marginals) product terms; single-term for the independent cases.
    pub(crate) fn product_terms(&self) -> Vec<(f64, Vec<Marginal>)> {
        match self {
            LifetimeModel::Iid { n, marginal } => vec![(1.0, vec![marginal.clone(); *n])],
            LifetimeModel::Independent { marginals } => vec![(1.0, marginals.clone())],
            LifetimeModel::ExchangeableMixture { n, parts } => {
                let total: f64 = parts.iter().map(|p| p.weight).sum();
                parts
                    .iter()
                    .map(|p| (p.weight / total, vec![p.marginal.clone(); *n]))
                    .collect()
            }
        }
    }

    fn draw_row(&self, rng: &mut ChaCha12Rng, buf: &mut [f64]) -> Result<()> {
        'attempt: for _ in 0..MAX_TIE_RETRIES {
            match self {
                LifetimeModel::Iid { marginal, .. } => {
                    for slot in buf.iter_mut() {
                        *slot = marginal.quantile(rng.gen());
                    }
                }
                LifetimeModel::Independent { marginals } => {
                    for (slot, marginal) in buf.iter_mut().zip(marginals) {
                        *slot = marginal.quantile(rng.gen());
                    }
                }
                LifetimeModel::ExchangeableMixture { parts, .. } => {
                    let total: f64 = parts.iter().map(|p| p.weight).sum();
                    let mut u = rng.gen::<f64>() * total;
                    let mut chosen = &parts[parts.len() - 1].marginal;
                    for part in parts {
                        if u < part.weight {
                            chosen = &part.marginal;
                            break;
                        }
                        u -= part.weight;
                    }
                    for slot in buf.iter_mut() {
                        *slot = chosen.quantile(rng.gen());
                    }
                }
            }
            for (i, &v) in buf.iter().enumerate() {
                if !v.is_finite() || v <= 0.0 {
                    continue 'attempt;
                }
                if buf[..i].contains(&v) {
                    continue 'attempt;
                }
            }
            return Ok(());
        }
        Err(Error::TieResampleExhausted(MAX_TIE_RETRIES))
    }

    /// Draws `count` lifetime vectors, split over `partitions` independent
    /// generator streams merged in order.
    pub fn sample(&self, seed: u64, count: usize, partitions: u32) -> Result<Samples> {
        self.validate()?;
        if partitions == 0 {
            return Err(Error::InvalidParameter("partition count must be at least 1".into()));
        }
        let n = self.n();
        let chunks = partition_sizes(count, partitions);
        let parts: Vec<Result<Vec<f64>>> = chunks
            .into_par_iter()
            .enumerate()
            .map(|(part, rows)| {
                let mut rng = stream_rng(seed, part as u64);
                let mut out = vec![0.0; rows * n];
                for row in out.chunks_mut(n) {
                    self.draw_row(&mut rng, row)?;
                }
                Ok(out)
            })
            .collect();
        let mut times = Vec::with_capacity(count * n);
        for part in parts {
            times.extend(part?);
        }
        Ok(Samples { n, times })
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn partition_sizes(count: usize, partitions: u32) -> Vec<usize> {
    let p = partitions as usize;
    (0..p)
        .map(|r| count / p + usize::from(r < count % p))
        .collect()
}

/// Lifetime vectors stored row-major, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    n: usize,
    times: Vec<f64>,
}

impl Samples {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.times.len() / self.n
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.times.chunks(self.n)
    }
}

/// Where a Monte Carlo estimate came from and how sharp it is.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub n: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub partitions: u32,
    /// Joint failure-rank counts, row-major over (k, l) in 1..=n squared.
    pub counts: Vec<u64>,
    /// Per-cell binomial standard errors of the estimated probabilities.
    pub standard_errors: Vec<f64>,
}

impl EstimateReport {
    pub fn count(&self, k: usize, l: usize) -> u64 {
        self.counts[(k - 1) * self.n + (l - 1)]
    }

    pub fn standard_error(&self, k: usize, l: usize) -> f64 {
        self.standard_errors[(k - 1) * self.n + (l - 1)]
    }
}

/// Estimates the joint signature of two systems by sampling lifetime vectors
/// and counting joint failure ranks. Streams by partition; never holds the
/// sample set in memory.
pub fn empirical_joint_signature(
    model: &LifetimeModel,
    phi1: &StructureFunction,
    phi2: &StructureFunction,
    n_samples: usize,
    seed: u64,
    partitions: u32,
) -> Result<(SignatureMatrix<f64>, EstimateReport)> {
    model.validate()?;
    let n = model.n();
    if phi1.n() != n || phi2.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "model has {n} components but systems have {} and {}",
            phi1.n(),
            phi2.n()
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    if partitions == 0 {
        return Err(Error::InvalidParameter("partition count must be at least 1".into()));
    }
    let chunks = partition_sizes(n_samples, partitions);
    let parts: Vec<Result<Vec<u64>>> = chunks
        .into_par_iter()
        .enumerate()
        .map(|(part, rows)| {
            let mut rng = stream_rng(seed, part as u64);
            let mut row = vec![0.0; n];
            let mut counts = vec![0u64; n * n];
            for _ in 0..rows {
                model.draw_row(&mut rng, &mut row)?;
                let (_, k) = failure_rank(phi1, &row);
                let (_, l) = failure_rank(phi2, &row);
                counts[(k - 1) * n + (l - 1)] += 1;
            }
            Ok(counts)
        })
        .collect();
    let mut counts = vec![0u64; n * n];
    for part in parts {
        for (total, c) in counts.iter_mut().zip(part?) {
            *total += c;
        }
    }
    let total = n_samples as f64;
    let entries: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let standard_errors = entries
        .iter()
        .map(|&p| (p * (1.0 - p) / total).sqrt())
        .collect();
    let report = EstimateReport {
        n,
        n_samples,
        seed,
        partitions,
        counts,
        standard_errors,
    };
    Ok((SignatureMatrix::new(n, entries)?, report))
}

/// Estimates the lifetime ordering distribution by sampling and sorting.
/// Only sensible for component counts the permutation model accepts.
pub fn empirical_permutation_model(
    model: &LifetimeModel,
    n_samples: usize,
    seed: u64,
    partitions: u32,
) -> Result<PermutationModel<f64>> {
    model.validate()?;
    let n = model.n();
    if n > MAX_MODEL_COMPONENTS {
        return Err(Error::SizeLimitExceeded {
            what: "permutation model component count",
            got: n,
            limit: MAX_MODEL_COMPONENTS,
        });
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    if partitions == 0 {
        return Err(Error::InvalidParameter("partition count must be at least 1".into()));
    }
    let chunks = partition_sizes(n_samples, partitions);
    let parts: Vec<Result<BTreeMap<Vec<u8>, u64>>> = chunks
        .into_par_iter()
        .enumerate()
        .map(|(part, rows)| {
            let mut rng = stream_rng(seed, part as u64);
            let mut row = vec![0.0; n];
            let mut counts: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
            for _ in 0..rows {
                model.draw_row(&mut rng, &mut row)?;
                let mut order: Vec<u8> = (1..=n as u8).collect();
                order.sort_by(|&a, &b| {
                    row[(a - 1) as usize]
                        .partial_cmp(&row[(b - 1) as usize])
                        .expect("lifetimes are finite")
                });
                *counts.entry(order).or_insert(0) += 1;
            }
            Ok(counts)
        })
        .collect();
    let mut counts: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    for part in parts {
        for (perm, c) in part? {
            *counts.entry(perm).or_insert(0) += c;
        }
    }
    let total = n_samples as f64;
    let probs = counts
        .into_iter()
        .map(|(perm, c)| (perm, c as f64 / total))
        .collect();
    PermutationModel::new(n, probs)
}
