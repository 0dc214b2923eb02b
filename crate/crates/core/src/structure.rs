//! Semicoherent structure functions and component lifetime vectors.
//!
//! A structure function maps subsets of working components to a system state
//! in {0, 1}. Semicoherence means phi(empty) = 0, phi(full) = 1 and phi is
//! monotone under inclusion; components may be irrelevant. The table is kept
//! dense, one bit per subset mask, which caps `n` at [`MAX_COMPONENTS`].

use crate::error::{Error, Result, SemicoherenceDefect};
use crate::subsets::{full_mask, mask_from_ids};

pub const MAX_COMPONENTS: usize = 24;

#[derive(Clone, PartialEq, Eq)]
pub struct StructureFunction {
    n: usize,
    table: Box<[u64]>,
}

impl std::fmt::Debug for StructureFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StructureFunction")
            .field("n", &self.n)
            .field("min_path_sets", &self.minimal_path_sets())
            .finish()
    }
}

fn words_for(n: usize) -> usize {
    (1usize << n).div_ceil(64)
}

impl StructureFunction {
    fn check_n(n: usize) -> Result<()> {
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
        Ok(())
    }

    /// Builds a structure function from a dense table indexed by subset mask
    /// (`table[mask]` is the system state when exactly the components in
    /// `mask` work) and validates semicoherence.
    pub fn from_truth_table(n: usize, table: &[bool]) -> Result<Self> {
        Self::check_n(n)?;
        if table.len() != 1usize << n {
            return Err(Error::DimensionMismatch(format!(
                "truth table has {} entries, expected 2^{} = {}",
                table.len(),
                n,
                1usize << n
            )));
        }
        let mut words = vec![0u64; words_for(n)];
        for (mask, &alive) in table.iter().enumerate() {
            if alive {
                words[mask >> 6] |= 1 << (mask & 63);
            }
        }
        let phi = Self {
            n,
            table: words.into_boxed_slice(),
        };
        phi.validate()?;
        Ok(phi)
    }

    /// Path sets given as 1-indexed component id lists. The list is
    /// deduplicated but deliberately not minimized.
    pub fn from_min_path_sets(n: usize, paths: &[Vec<usize>]) -> Result<Self> {
        Self::check_n(n)?;
        if paths.is_empty() {
            return Err(Error::EmptyPathList);
        }
        let mut masks = Vec::with_capacity(paths.len());
        for path in paths {
            let mask = mask_from_ids(path, n).map_err(|_| Error::PathOutOfRange {
                path: path.clone(),
                n,
            })?;
            masks.push(mask);
        }
        Self::from_path_masks(n, &masks)
    }

    /// Mask-level variant of [`from_min_path_sets`](Self::from_min_path_sets).
    pub fn from_path_masks(n: usize, paths: &[u32]) -> Result<Self> {
        Self::check_n(n)?;
        if paths.is_empty() {
            return Err(Error::EmptyPathList);
        }
        let full = full_mask(n);
        let mut masks: Vec<u32> = Vec::with_capacity(paths.len());
        for &path in paths {
            if path & !full != 0 {
                return Err(Error::PathOutOfRange {
                    path: crate::subsets::ids_from_mask(path),
                    n,
                });
            }
            if path == 0 {
                return Err(Error::InvalidParameter("path sets must be nonempty".into()));
            }
            masks.push(path);
        }
        masks.sort_unstable();
        masks.dedup();
        let mut words = vec![0u64; words_for(n)];
        for &path in &masks {
            // walk all supersets of the path within the full mask
            let free = full & !path;
            let mut extra = 0u32;
            loop {
                let mask = (path | extra) as usize;
                words[mask >> 6] |= 1 << (mask & 63);
                extra = extra.wrapping_sub(free) & free;
                if extra == 0 {
                    break;
                }
            }
        }
        let phi = Self {
            n,
            table: words.into_boxed_slice(),
        };
        phi.validate()?;
        Ok(phi)
    }

    /// System that works while at least `n - k + 1` components work, i.e.
    /// fails at the k-th component failure.
    pub fn k_out_of_n(n: usize, k: usize) -> Result<Self> {
        Self::check_n(n)?;
        if k == 0 || k > n {
            return Err(Error::OutOfRange(format!("k = {k} must lie in 1..={n}")));
        }
        let threshold = (n - k + 1) as u32;
        let mut words = vec![0u64; words_for(n)];
        for mask in 0..(1usize << n) {
            if (mask as u32).count_ones() >= threshold {
                words[mask >> 6] |= 1 << (mask & 63);
            }
        }
        let phi = Self {
            n,
            table: words.into_boxed_slice(),
        };
        phi.validate()?;
        Ok(phi)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn value(&self, mask: u32) -> bool {
        debug_assert!(mask <= full_mask(self.n));
        let mask = mask as usize;
        self.table[mask >> 6] >> (mask & 63) & 1 == 1
    }

    /// Convenience lookup by 1-indexed component ids.
    pub fn value_of(&self, ids: &[usize]) -> Result<bool> {
        Ok(self.value(mask_from_ids(ids, self.n)?))
    }

    /// The minimal working subsets, ascending by mask.
    pub fn minimal_path_sets(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for mask in 0..(1u32 << self.n) {
            if !self.value(mask) {
                continue;
            }
            let mut minimal = true;
            let mut bits = mask;
            while bits != 0 {
                let bit = bits & bits.wrapping_neg();
                if self.value(mask & !bit) {
                    minimal = false;
                    break;
                }
                bits ^= bit;
            }
            if minimal {
                out.push(mask);
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.value(0) {
            return Err(Error::NotSemicoherent(SemicoherenceDefect::EmptySetAlive));
        }
        let full = full_mask(self.n);
        if !self.value(full) {
            return Err(Error::NotSemicoherent(SemicoherenceDefect::FullSetDead));
        }
        for mask in 0..=full {
            if !self.value(mask) {
                continue;
            }
            let mut free = full & !mask;
            while free != 0 {
                let bit = free & free.wrapping_neg();
                if !self.value(mask | bit) {
                    return Err(Error::NotSemicoherent(SemicoherenceDefect::NotMonotone {
                        lower: mask,
                        upper: mask | bit,
                    }));
                }
                free ^= bit;
            }
        }
        Ok(())
    }
}

/// One realized vector of component lifetimes. Times must be positive,
/// finite and pairwise distinct so that failure ranks are unambiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeSample {
    times: Vec<f64>,
}

impl LifetimeSample {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidParameter("lifetime vector must be nonempty".into()));
        }
        for &t in &times {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "lifetimes must be positive and finite, got {t}"
                )));
            }
        }
        let mut sorted = times.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite times compare"));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("lifetimes must be pairwise distinct".into()));
        }
        Ok(Self { times })
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// System lifetime together with its failure rank: the system dies at the
/// `rank`-th component failure, `rank` in 1..=n.
pub fn system_lifetime(phi: &StructureFunction, sample: &LifetimeSample) -> Result<(f64, usize)> {
    if phi.n() != sample.n() {
        return Err(Error::DimensionMismatch(format!(
            "structure has {} components, sample has {}",
            phi.n(),
            sample.n()
        )));
    }
    Ok(failure_rank(phi, sample.times()))
}

/// Core of [`system_lifetime`] on a raw slice; times are assumed distinct.
pub(crate) fn failure_rank(phi: &StructureFunction, times: &[f64]) -> (f64, usize) {
    let n = phi.n();
    debug_assert_eq!(times.len(), n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).expect("finite times compare"));
    let mut alive = full_mask(n);
    for (failures, &idx) in order.iter().enumerate() {
        alive &= !(1u32 << idx);
        if !phi.value(alive) {
            return (times[idx], failures + 1);
        }
    }
    unreachable!("phi(empty) = 0 is enforced at construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(n: usize) -> StructureFunction {
        StructureFunction::from_min_path_sets(n, &[(1..=n).collect()]).unwrap()
    }

    fn parallel(n: usize) -> StructureFunction {
        let paths: Vec<Vec<usize>> = (1..=n).map(|i| vec![i]).collect();
        StructureFunction::from_min_path_sets(n, &paths).unwrap()
    }

    #[test]
    fn single_component_identity() {
        let phi = StructureFunction::from_truth_table(1, &[false, true]).unwrap();
        assert!(!phi.value(0));
        assert!(phi.value(1));
        assert_eq!(phi.minimal_path_sets(), vec![1]);
    }

    #[test]
    fn truth_table_rejects_non_monotone_with_witness() {
        // phi({1}) = 1 but phi({1,2}) = 0; boundaries are fine so the
        // monotonicity witness is what comes back
        let table = [false, true, false, false, false, false, false, true];
        let err = StructureFunction::from_truth_table(3, &table).unwrap_err();
        assert_eq!(
            err,
            Error::NotSemicoherent(SemicoherenceDefect::NotMonotone {
                lower: 0b001,
                upper: 0b011,
            })
        );
    }

    #[test]
    fn truth_table_rejects_bad_boundaries() {
        let all_dead = vec![false; 4];
        assert_eq!(
            StructureFunction::from_truth_table(2, &all_dead).unwrap_err(),
            Error::NotSemicoherent(SemicoherenceDefect::FullSetDead)
        );
        let all_alive = vec![true; 4];
        assert_eq!(
            StructureFunction::from_truth_table(2, &all_alive).unwrap_err(),
            Error::NotSemicoherent(SemicoherenceDefect::EmptySetAlive)
        );
    }

    #[test]
    fn truth_table_size_checks() {
        assert!(matches!(
            StructureFunction::from_truth_table(25, &[]),
            Err(Error::SizeLimitExceeded { .. })
        ));
        assert!(matches!(
            StructureFunction::from_truth_table(2, &[false, true, true]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn path_sets_build_expected_tables() {
        // series of {1,2} inside a 4-component system; 3 and 4 are irrelevant
        let phi = StructureFunction::from_min_path_sets(4, &[vec![1, 2]]).unwrap();
        assert!(phi.value(0b0011));
        assert!(phi.value(0b1011));
        assert!(!phi.value(0b1101));
        assert_eq!(phi.minimal_path_sets(), vec![0b0011]);

        let phi2 = StructureFunction::from_min_path_sets(4, &[vec![2, 4], vec![3, 4]]).unwrap();
        assert!(phi2.value(0b1010));
        assert!(phi2.value(0b1100));
        assert!(!phi2.value(0b0110));
        assert!(!phi2.value(0b1000));
        assert_eq!(phi2.minimal_path_sets(), vec![0b1010, 0b1100]);
    }

    #[test]
    fn path_set_errors() {
        assert_eq!(
            StructureFunction::from_min_path_sets(3, &[]).unwrap_err(),
            Error::EmptyPathList
        );
        assert_eq!(
            StructureFunction::from_min_path_sets(3, &[vec![1, 4]]).unwrap_err(),
            Error::PathOutOfRange {
                path: vec![1, 4],
                n: 3
            }
        );
        assert!(matches!(
            StructureFunction::from_min_path_sets(3, &[vec![]]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn duplicate_paths_are_collapsed_but_not_minimized() {
        let a = StructureFunction::from_min_path_sets(3, &[vec![1], vec![1], vec![1, 2]]).unwrap();
        let b = StructureFunction::from_min_path_sets(3, &[vec![1]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.minimal_path_sets(), vec![0b001]);
    }

    #[test]
    fn k_out_of_n_matches_popcount_rule() {
        let phi = StructureFunction::k_out_of_n(3, 2).unwrap();
        // works while at least 2 of 3 components work
        assert!(phi.value(0b011));
        assert!(phi.value(0b111));
        assert!(!phi.value(0b001));
        assert_eq!(StructureFunction::k_out_of_n(4, 1).unwrap(), series(4));
        assert_eq!(StructureFunction::k_out_of_n(4, 4).unwrap(), parallel(4));
        assert!(matches!(
            StructureFunction::k_out_of_n(3, 0),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            StructureFunction::k_out_of_n(3, 4),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn lifetime_sample_validation() {
        assert!(LifetimeSample::new(vec![0.5, 1.0]).is_ok());
        assert!(LifetimeSample::new(vec![]).is_err());
        assert!(LifetimeSample::new(vec![1.0, 1.0]).is_err());
        assert!(LifetimeSample::new(vec![0.0, 1.0]).is_err());
        assert!(LifetimeSample::new(vec![-1.0, 1.0]).is_err());
        assert!(LifetimeSample::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn system_lifetime_series_parallel_and_path() {
        let sample = LifetimeSample::new(vec![2.0, 0.5, 1.0]).unwrap();
        assert_eq!(system_lifetime(&series(3), &sample).unwrap(), (0.5, 1));
        assert_eq!(system_lifetime(&parallel(3), &sample).unwrap(), (2.0, 3));

        let phi = StructureFunction::from_min_path_sets(4, &[vec![1, 2]]).unwrap();
        let sample = LifetimeSample::new(vec![0.7, 2.2, 0.4, 1.5]).unwrap();
        // component 3 fails first, then component 1 kills the {1,2} path
        assert_eq!(system_lifetime(&phi, &sample).unwrap(), (0.7, 2));
    }

    #[test]
    fn system_lifetime_dimension_mismatch() {
        let sample = LifetimeSample::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            system_lifetime(&series(3), &sample),
            Err(Error::DimensionMismatch(_))
        ));
    }

    fn arb_paths(n: usize) -> impl Strategy<Value = Vec<u32>> {
        prop::collection::vec(1..(1u32 << n), 1..=4)
    }

    fn arb_times(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..100.0, n).prop_filter("distinct", |ts| {
            let mut s = ts.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s.windows(2).all(|w| w[0] != w[1])
        })
    }

    proptest! {
        // the path-set reading of the lifetime: longest min-over-path time
        #[test]
        fn lifetime_matches_path_oracle((n, paths, times) in (2usize..=8).prop_flat_map(|n| {
            (Just(n), arb_paths(n), arb_times(n))
        })) {
            let phi = StructureFunction::from_path_masks(n, &paths).unwrap();
            let sample = LifetimeSample::new(times.clone()).unwrap();
            let (lifetime, rank) = system_lifetime(&phi, &sample).unwrap();
            let oracle = paths
                .iter()
                .map(|&p| {
                    (0..n)
                        .filter(|i| p >> i & 1 == 1)
                        .map(|i| times[i])
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(lifetime, oracle);
            let mut sorted = times.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(sorted[rank - 1], lifetime);
        }

        #[test]
        fn k_out_of_n_rank_is_k((n, k, times) in (1usize..=8).prop_flat_map(|n| {
            (Just(n), 1..=n, arb_times(n))
        })) {
            let phi = StructureFunction::k_out_of_n(n, k).unwrap();
            let sample = LifetimeSample::new(times).unwrap();
            let (_, rank) = system_lifetime(&phi, &sample).unwrap();
            prop_assert_eq!(rank, k);
        }

        #[test]
        fn minimal_path_extraction_is_idempotent((n, paths) in (2usize..=7).prop_flat_map(|n| {
            (Just(n), arb_paths(n))
        })) {
            let phi = StructureFunction::from_path_masks(n, &paths).unwrap();
            let minimal = phi.minimal_path_sets();
            let rebuilt = StructureFunction::from_path_masks(n, &minimal).unwrap();
            prop_assert_eq!(&phi, &rebuilt);
            prop_assert_eq!(rebuilt.minimal_path_sets(), minimal);
        }

        // monotone tables round-trip; breaking one entry gets rejected
        #[test]
        fn monotone_accepted_flip_rejected((n, paths, pick) in (2usize..=6).prop_flat_map(|n| {
            (Just(n), arb_paths(n), 0usize..1000)
        })) {
            let phi = StructureFunction::from_path_masks(n, &paths).unwrap();
            let table: Vec<bool> = (0..(1u32 << n)).map(|m| phi.value(m)).collect();
            prop_assert_eq!(StructureFunction::from_truth_table(n, &table).unwrap(), phi.clone());

            // flip an entry whose removal must break validation: a true mask
            // with a true proper subset, or the full mask if none exists
            let full = full_mask(n);
            let mut victims: Vec<u32> = (1..=full)
                .filter(|&m| {
                    phi.value(m)
                        && (0..n).any(|i| m >> i & 1 == 1 && phi.value(m & !(1u32 << i)))
                })
                .collect();
            if victims.is_empty() {
                victims.push(full);
            }
            let victim = victims[pick % victims.len()];
            let mut broken = table;
            broken[victim as usize] = false;
            prop_assert!(StructureFunction::from_truth_table(n, &broken).is_err());
        }
    }
}
