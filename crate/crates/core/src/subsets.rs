//! Subsets of a component index set `{1, ..., n}` as bit masks (bit `i-1`
//! encodes component `i`), plus the combinatorial counting helpers the
//! signature formulas are built from.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use crate::error::{Error, Result};

#[inline]
pub fn full_mask(n: usize) -> u32 {
    debug_assert!(n <= 31);
    (1u32 << n) - 1
}

#[inline]
pub fn is_subset(a: u32, b: u32) -> bool {
    a & !b == 0
}

/// 1-indexed component ids -> mask. Duplicate ids collapse to one bit.
pub fn mask_from_ids(ids: &[usize], n: usize) -> Result<u32> {
    let mut mask = 0u32;
    for &id in ids {
        if id == 0 || id > n {
            return Err(Error::SubsetOutOfRange {
                ids: ids.to_vec(),
                n,
            });
        }
        mask |= 1 << (id - 1);
    }
    Ok(mask)
}

pub fn ids_from_mask(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect()
}

/// All masks over `n` bits with exactly `k` bits set, ascending.
pub fn masks_of_size(n: usize, k: usize) -> MaskCombinations {
    let next = if k > n {
        None
    } else if k == 0 {
        Some(0)
    } else {
        Some((1u32 << k) - 1)
    };
    MaskCombinations {
        next,
        limit: 1u64 << n,
    }
}

pub struct MaskCombinations {
    next: Option<u32>,
    limit: u64,
}

impl Iterator for MaskCombinations {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        let cur = self.next?;
        if u64::from(cur) >= self.limit {
            self.next = None;
            return None;
        }
        self.next = if cur == 0 {
            None
        } else {
            // Gosper's hack: next mask with the same popcount.
            let low = cur & cur.wrapping_neg();
            let carry = cur.wrapping_add(low);
            if carry == 0 {
                None
            } else {
                Some(carry | ((cur ^ carry) / low) >> 2)
            }
        };
        Some(cur)
    }
}

/// All submasks of `mask` with exactly `k` bits set.
pub fn submasks_of_size(mask: u32, k: usize) -> impl Iterator<Item = u32> {
    let positions: Vec<u32> = (0..32).filter(|i| mask >> i & 1 == 1).collect();
    let width = positions.len();
    masks_of_size(width, k).map(move |compressed| {
        let mut out = 0u32;
        for (j, &pos) in positions.iter().enumerate() {
            if compressed >> j & 1 == 1 {
                out |= 1 << pos;
            }
        }
        out
    })
}

pub fn factorial(k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= i;
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// lcm of C(n, k) over k = 0..=n; the natural display denominator for
/// structure-signature output.
pub fn binomial_lcm(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for k in 0..=n {
        acc = acc.lcm(&binomial(n, k));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_of_size_enumerates_binomial_many() {
        for n in 0..=10usize {
            for k in 0..=n {
                let masks: Vec<u32> = masks_of_size(n, k).collect();
                assert_eq!(BigInt::from(masks.len()), binomial(n, k), "n={n} k={k}");
                for m in &masks {
                    assert_eq!(m.count_ones() as usize, k);
                    assert!(is_subset(*m, full_mask(n)));
                }
                let mut sorted = masks.clone();
                sorted.sort_unstable();
                sorted.dedup();
                assert_eq!(sorted, masks);
            }
        }
    }

    #[test]
    fn submasks_of_size_matches_direct_filter() {
        let mask = 0b1011010u32;
        for k in 0..=5usize {
            let subs: Vec<u32> = submasks_of_size(mask, k).collect();
            let expect: Vec<u32> = (0..=mask)
                .filter(|s| is_subset(*s, mask) && s.count_ones() as usize == k)
                .collect();
            let mut got = subs.clone();
            got.sort_unstable();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn ids_round_trip() {
        let mask = mask_from_ids(&[1, 3, 4], 5).unwrap();
        assert_eq!(mask, 0b1101);
        assert_eq!(ids_from_mask(mask), vec![1, 3, 4]);
        assert!(mask_from_ids(&[0], 3).is_err());
        assert!(mask_from_ids(&[4], 3).is_err());
    }

    #[test]
    fn small_factorials_and_binomials() {
        assert_eq!(factorial(0), BigInt::from(1));
        assert_eq!(factorial(5), BigInt::from(120));
        assert_eq!(binomial(4, 2), BigInt::from(6));
        assert_eq!(binomial(24, 12), BigInt::from(2704156u64));
        assert_eq!(binomial_lcm(4), BigInt::from(12));
    }
}
