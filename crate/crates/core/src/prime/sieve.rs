//! Segmented sieve of Eratosthenes with odd-only bit packing. Segments are
//! independent work units, so the build fans out across threads; results
//! are concatenated in segment order, which keeps the output identical for
//! every parallelism degree.

use crate::error::{Error, Result};
use crate::exec;

/// Simple odd-only sieve for the base primes up to `limit` (inclusive).
fn base_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let half = (n - 1) / 2; // bits for odd numbers 3, 5, ..., <= n
    let mut composite = vec![false; half + 1];
    let mut primes = vec![2u64];
    let mut i = 0usize;
    while {
        let p = 2 * i + 3;
        p * p <= n
    } {
        if !composite[i] {
            let p = 2 * i + 3;
            let mut m = (p * p - 3) / 2;
            while m < composite.len() {
                composite[m] = true;
                m += p;
            }
        }
        i += 1;
    }
    for (j, &c) in composite.iter().enumerate() {
        let p = 2 * j + 3;
        if !c && p <= n {
            primes.push(p as u64);
        }
    }
    primes
}

/// Sieve the half-open window [lo, hi) against the odd base primes and
/// return its primes in order. `lo` must be >= 3 and odd-aligned by the
/// caller being tolerant: the bitmap starts at the first odd >= lo.
fn sieve_window(lo: u64, hi: u64, odd_base: &[u64]) -> Result<Vec<u64>> {
    debug_assert!(lo >= 3 && lo <= hi);
    let first_odd = lo | 1;
    if first_odd >= hi {
        return Ok(Vec::new());
    }
    let n_bits = ((hi - first_odd) as usize).div_ceil(2);
    let mut composite = Vec::new();
    composite.try_reserve_exact(n_bits).map_err(|_| {
        Error::Resource(format!(
            "sieve segment [{lo}, {hi}) needs {n_bits} flags; allocation failed"
        ))
    })?;
    composite.resize(n_bits, false);

    for &p in odd_base {
        if p * p >= hi {
            break;
        }
        let mut start = p * p;
        if start < first_odd {
            start = first_odd.div_ceil(p) * p;
            if start % 2 == 0 {
                start += p;
            }
        }
        let mut m = start;
        while m < hi {
            composite[((m - first_odd) / 2) as usize] = true;
            m += 2 * p;
        }
    }

    let mut out = Vec::new();
    out.try_reserve(n_bits / 8 + 16).map_err(|_| {
        Error::Resource(format!("prime buffer for segment [{lo}, {hi}) failed"))
    })?;
    for (j, &c) in composite.iter().enumerate() {
        if !c {
            out.push(first_odd + 2 * j as u64);
        }
    }
    Ok(out)
}

pub fn segmented_sieve(limit: u64, segment_size: u64) -> Result<Vec<u64>> {
    let sqrt_limit = (limit as f64).sqrt() as u64 + 1;
    let base = base_primes(sqrt_limit.max(2));
    if limit <= sqrt_limit {
        let mut primes = base;
        primes.retain(|&p| p <= limit);
        return Ok(primes);
    }
    let odd_base: Vec<u64> = base.iter().copied().filter(|&p| p > 2).collect();

    let span_lo = 3u64;
    let span = limit + 1 - span_lo;
    let n_segments = (span.div_ceil(segment_size)) as usize;
    let chunks = exec::par_map_range(0..n_segments, |i| {
        let lo = span_lo + i as u64 * segment_size;
        let hi = (lo + segment_size).min(limit + 1);
        sieve_window(lo, hi, &odd_base)
    });

    let mut total = 1usize;
    let mut collected = Vec::with_capacity(n_segments);
    for chunk in chunks {
        let chunk = chunk?;
        total += chunk.len();
        collected.push(chunk);
    }
    let mut primes = Vec::new();
    primes
        .try_reserve_exact(total)
        .map_err(|_| Error::Resource(format!("prime table of {total} entries failed")))?;
    primes.push(2);
    for chunk in collected {
        primes.extend_from_slice(&chunk);
    }
    Ok(primes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_sieve_small() {
        assert_eq!(base_primes(2), vec![2]);
        assert_eq!(base_primes(3), vec![2, 3]);
        assert_eq!(base_primes(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn exhaustive_vs_base_sieve() {
        // the segmented path must agree with the simple sieve everywhere
        for limit in [2u64, 3, 4, 5, 63, 64, 65, 100, 1000, 65_537] {
            let seg = segmented_sieve(limit, 64).unwrap();
            let simple = base_primes(limit);
            assert_eq!(seg, simple, "limit {limit}");
        }
    }

    #[test]
    fn all_small_limits_agree() {
        let reference = base_primes(2100);
        for limit in 2..=2100u64 {
            let seg = segmented_sieve(limit, 128).unwrap();
            let expect: Vec<u64> = reference.iter().copied().filter(|&p| p <= limit).collect();
            assert_eq!(seg, expect, "limit {limit}");
        }
    }
}
