//! Prime generation and queries. Everything else in the crate consumes
//! primes through [`PrimeStore`], which is immutable once built and safe
//! for unrestricted concurrent reads.

mod cache;
mod sieve;

pub use cache::{load_cache, load_cache_expecting, save_cache};

use crate::error::{Error, Result};

/// All primes up to a fixed limit, strictly increasing. The sorted sequence
/// doubles as the counting index: π(y) is a binary search away.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeStore {
    limit: u64,
    primes: Vec<u64>,
}

/// Default segment size (integers per segment), sized so the odd-only
/// bitmap of one segment stays inside a typical L2 cache.
pub const DEFAULT_SEGMENT_SIZE: u64 = 1 << 20;

pub fn build_prime_store(limit: u64, segment_size: u64) -> Result<PrimeStore> {
    if limit < 2 {
        return Err(Error::Domain(format!(
            "prime store limit must be >= 2, got {limit}"
        )));
    }
    if segment_size < 64 {
        return Err(Error::Domain(format!(
            "segment size must be >= 64, got {segment_size}"
        )));
    }
    let primes = sieve::segmented_sieve(limit, segment_size)?;
    Ok(PrimeStore { limit, primes })
}

impl PrimeStore {
    pub fn build(limit: u64) -> Result<Self> {
        build_prime_store(limit, DEFAULT_SEGMENT_SIZE)
    }

    pub(crate) fn from_parts(limit: u64, primes: Vec<u64>) -> Self {
        PrimeStore { limit, primes }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// π(y) for real y ≤ limit: the number of primes p ≤ ⌊y⌋. A step
    /// function, right-continuous, never silently truncated above the limit.
    pub fn count_primes(&self, y: f64) -> Result<u64> {
        if y > self.limit as f64 {
            return Err(Error::OutOfRange {
                what: "count_primes y",
                value: y,
                limit: self.limit as f64,
            });
        }
        if y < 2.0 {
            return Ok(0);
        }
        let n = y.floor() as u64;
        Ok(self.primes.partition_point(|&p| p <= n) as u64)
    }

    /// The primes p with lo ≤ p < hi, as a slice of the store. Half-open
    /// to match dyadic and sieve ranges.
    pub fn primes_in_range(&self, lo: f64, hi: f64) -> Result<&[u64]> {
        if !(0.0 <= lo && lo <= hi) {
            return Err(Error::Domain(format!(
                "invalid prime range [{lo}, {hi})"
            )));
        }
        if hi > self.limit as f64 + 1.0 {
            return Err(Error::OutOfRange {
                what: "primes_in_range hi",
                value: hi,
                limit: self.limit as f64,
            });
        }
        let start = self.primes.partition_point(|&p| (p as f64) < lo);
        let end = self.primes.partition_point(|&p| (p as f64) < hi);
        Ok(&self.primes[start..end])
    }

    /// Membership test for p ≤ limit.
    pub fn is_prime(&self, n: u64) -> Result<bool> {
        if n > self.limit {
            return Err(Error::OutOfRange {
                what: "is_prime n",
                value: n as f64,
                limit: self.limit as f64,
            });
        }
        Ok(self.primes.binary_search(&n).is_ok())
    }
}


#[cfg(test)]
mod tests {
    use super::test_oracle::trial_division_primes;
    use super::*;

    #[test]
    fn tiny_limits() {
        let store = PrimeStore::build(10).unwrap();
        assert_eq!(store.primes(), &[2, 3, 5, 7]);
        let store = PrimeStore::build(2).unwrap();
        assert_eq!(store.primes(), &[2]);
        assert!(PrimeStore::build(1).is_err());
    }

    #[test]
    fn matches_trial_division_oracle() {
        let oracle = trial_division_primes(100_000);
        let store = PrimeStore::build(100_000).unwrap();
        assert_eq!(store.primes(), &oracle[..]);
    }

    #[test]
    fn pi_of_one_million() {
        let store = PrimeStore::build(1_000_000).unwrap();
        assert_eq!(store.len(), 78_498);
        assert_eq!(store.count_primes(1e6).unwrap(), 78_498);
    }

    #[test]
    fn segment_size_invariance() {
        let a = build_prime_store(300_000, 64).unwrap();
        let b = build_prime_store(300_000, 4096).unwrap();
        let c = build_prime_store(300_000, 1 << 20).unwrap();
        assert_eq!(a.primes(), b.primes());
        assert_eq!(b.primes(), c.primes());
    }

    #[test]
    fn count_primes_examples() {
        let store = PrimeStore::build(1000).unwrap();
        assert_eq!(store.count_primes(1.5).unwrap(), 0);
        assert_eq!(store.count_primes(10.0).unwrap(), 4);
        assert_eq!(store.count_primes(2.0).unwrap(), 1);
        assert!(store.count_primes(1001.0).is_err());
    }

    #[test]
    fn count_primes_monotone() {
        let store = PrimeStore::build(10_000).unwrap();
        let mut prev = 0;
        for y in 0..=10_000u64 {
            let c = store.count_primes(y as f64).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn count_equals_range_length() {
        let store = PrimeStore::build(5_000).unwrap();
        for y in [0u64, 1, 2, 3, 10, 97, 4999, 5000] {
            let count = store.count_primes(y as f64).unwrap();
            let range = store.primes_in_range(0.0, y as f64 + 1.0).unwrap();
            assert_eq!(count as usize, range.len());
        }
    }

    #[test]
    fn primes_in_range_examples() {
        let store = PrimeStore::build(200_000).unwrap();
        assert_eq!(store.primes_in_range(10.0, 20.0).unwrap(), &[11, 13, 17, 19]);
        assert!(store.primes_in_range(7.0, 7.0).unwrap().is_empty());
        // frozen from the trial-division oracle
        let oracle: Vec<u64> = trial_division_primes(100_100)
            .into_iter()
            .filter(|&p| p >= 100_000)
            .collect();
        assert_eq!(
            oracle,
            vec![100_003, 100_019, 100_043, 100_049, 100_057, 100_069]
        );
        let hi = store.primes_in_range(100_000.0, 100_100.0).unwrap();
        assert_eq!(hi, &oracle[..]);
        assert_eq!(
            store.primes_in_range(100_000.0, 100_020.0).unwrap(),
            &[100_003, 100_019]
        );
        assert!(store.primes_in_range(0.0, 300_000.0).is_err());
    }
}
