//! Arithmetic-progression sieve sets and their exact identities: the
//! sifting function S(𝓜, z), Buchstab's recursion, and the comparison of
//! π(y;s,e) against S of the progression sifted to √x.

use crate::arith::{self, mod_inverse};
use crate::error::{Error, Result};
use crate::prime::PrimeStore;
use serde::Serialize;

/// The set {n/r : n ≤ y, n ≡ residue (mod modulus), r | n}, held as
/// arithmetic data; membership is O(1) and enumeration walks a progression.
/// divisor = 1 gives the undivided set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SieveSetSpec {
    pub y: f64,
    pub modulus: u64,
    pub residue: u64,
    pub divisor: u64,
}

impl SieveSetSpec {
    pub fn new(y: f64, modulus: u64, residue: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Domain("sieve set modulus must be positive".into()));
        }
        Ok(SieveSetSpec {
            y,
            modulus,
            residue: residue % modulus,
            divisor: 1,
        })
    }

    /// The divided set 𝓜_p = {m/p : m ∈ 𝓜, p | m}; divided sets compose by
    /// multiplying divisors.
    pub fn divided_by(&self, p: u64) -> SieveSetSpec {
        SieveSetSpec {
            y: self.y,
            modulus: self.modulus,
            residue: self.residue,
            divisor: self.divisor * p,
        }
    }

    /// Is m an element? m stands for n/divisor, so the test is on
    /// n = m·divisor.
    pub fn contains(&self, m: u64) -> bool {
        if m == 0 {
            return false;
        }
        match m.checked_mul(self.divisor) {
            Some(n) => n as f64 <= self.y && n % self.modulus == self.residue,
            None => false,
        }
    }

    /// Enumerate the elements m ascending. Solves divisor·m ≡ residue
    /// (mod modulus); an unsolvable congruence gives the empty set.
    pub fn elements(&self) -> Vec<u64> {
        let cap = (self.y / self.divisor as f64).floor();
        if cap < 1.0 {
            return Vec::new();
        }
        let cap = cap as u64;
        let g = arith::gcd(self.divisor % self.modulus, self.modulus);
        if self.residue % g != 0 {
            return Vec::new();
        }
        let m_red = self.modulus / g;
        let first = if m_red == 1 {
            1u64
        } else {
            let inv = mod_inverse((self.divisor / g) % m_red, m_red)
                .expect("reduced divisor is a unit");
            let r0 = arith::mul_mod((self.residue / g) % m_red, inv, m_red);
            if r0 == 0 {
                m_red
            } else {
                r0
            }
        };
        let mut out = Vec::new();
        let mut m = first;
        while m <= cap {
            out.push(m);
            m += m_red;
        }
        out
    }

    pub fn cardinality(&self) -> u64 {
        self.elements().len() as u64
    }
}

/// True when m has no prime factor below z. The convention n = 1 counts
/// (the condition is vacuous), which Buchstab's identity needs.
fn survives(m: u64, z: f64, store: &PrimeStore) -> Result<bool> {
    if m == 1 || z <= 2.0 {
        return Ok(true);
    }
    let hi = z.min(store.limit() as f64 + 1.0);
    let mut past_sqrt = false;
    for &p in store.primes_in_range(2.0, hi)? {
        if p * p > m {
            past_sqrt = true;
            break;
        }
        if m % p == 0 {
            return Ok(false);
        }
    }
    if past_sqrt {
        // nothing up to sqrt(m) divides m, so m is prime and spf(m) = m
        Ok(m as f64 >= z)
    } else {
        // every prime below z was tested
        Ok(true)
    }
}

/// S(𝓜, z): the number of elements with no prime factor below z, by direct
/// enumeration and smallest-factor tests. Exactness is the point here;
/// inclusion-exclusion is deliberately not used.
pub fn sifted_count(spec: &SieveSetSpec, z: f64, store: &PrimeStore) -> Result<u64> {
    if z < 1.0 {
        return Err(Error::Domain(format!("sifting level z must be >= 1, got {z}")));
    }
    let max_element = (spec.y / spec.divisor as f64).floor();
    if max_element > store.limit() as f64 {
        return Err(Error::OutOfRange {
            what: "sieve set cap",
            value: max_element,
            limit: store.limit() as f64,
        });
    }
    let mut count = 0u64;
    for m in spec.elements() {
        if z <= 2.0 || survives(m, z, store)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Both residuals of Buchstab's identity between sifting levels.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BuchstabResidual {
    /// S(𝓜, z₂) − [S(𝓜, z₁) − Σ_{z₁ ≤ p < z₂} S(𝓜_p, p)]; exactly 0 always.
    pub first_form: i64,
    /// Same with S(𝓜_p, z₁) in the sum; 0 only when no element of 𝓜_p has a
    /// prime factor in [z₁, p) — guaranteed in the dyadic ranges the
    /// decomposition is used in, verified rather than assumed here.
    pub second_form: i64,
}

pub fn buchstab_residual(
    spec: &SieveSetSpec,
    z_low: f64,
    z_high: f64,
    store: &PrimeStore,
) -> Result<BuchstabResidual> {
    if !(1.0 <= z_low && z_low <= z_high) {
        return Err(Error::Domain(format!(
            "need 1 <= z_low <= z_high, got {z_low}, {z_high}"
        )));
    }
    let s_high = sifted_count(spec, z_high, store)? as i64;
    let s_low = sifted_count(spec, z_low, store)? as i64;
    let mut sum_first = 0i64;
    let mut sum_second = 0i64;
    for &p in store.primes_in_range(z_low, z_high)? {
        let divided = spec.divided_by(p);
        sum_first += sifted_count(&divided, p as f64, store)? as i64;
        sum_second += sifted_count(&divided, z_low, store)? as i64;
    }
    Ok(BuchstabResidual {
        first_form: s_high - (s_low - sum_first),
        second_form: s_high - (s_low - sum_second),
    })
}

/// Exact two-sided comparison of π(y; modulus, e) with S(𝒜, √xref) where
/// 𝒜 = {n ≤ y : n ≡ e (mod modulus)}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpiDiscrepancy {
    pub lhs: u64,
    pub rhs: u64,
    pub diff: i64,
    /// √xref/modulus + 2. The 2 covers membership of n = 1 and at most one
    /// boundary semiprime p₁p₂ = xref; the main part bounds the primes
    /// below √xref in the class.
    pub budget: f64,
}

pub fn spi_discrepancy(
    store: &PrimeStore,
    y: f64,
    modulus: u64,
    e: u64,
    xref: f64,
) -> Result<SpiDiscrepancy> {
    if arith::gcd(e % modulus.max(1), modulus) != 1 {
        return Err(Error::Domain(format!(
            "residue {e} not coprime to modulus {modulus}"
        )));
    }
    if y > xref {
        return Err(Error::Domain(format!("need y <= xref, got y={y}, xref={xref}")));
    }
    let lhs = crate::apstats::count_primes_in_ap(store, y, modulus, e)?;
    let spec = SieveSetSpec::new(y, modulus, e)?;
    let rhs = sifted_count(&spec, xref.sqrt(), store)?;
    Ok(SpiDiscrepancy {
        lhs,
        rhs,
        diff: lhs as i64 - rhs as i64,
        budget: xref.sqrt() / modulus as f64 + 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prime::PrimeStore;

    fn store() -> PrimeStore {
        PrimeStore::build(100_000).unwrap()
    }

    /// Exhaustive membership + smallest-prime-factor oracle.
    fn sifted_oracle(spec: &SieveSetSpec, z: f64) -> u64 {
        let mut count = 0;
        let cap = spec.y as u64;
        for n in 1..=cap {
            if n as f64 <= spec.y && n % spec.modulus == spec.residue && n % spec.divisor == 0 {
                let m = n / spec.divisor;
                let mut spf = None;
                let mut d = 2u64;
                while d * d <= m {
                    if m % d == 0 {
                        spf = Some(d);
                        break;
                    }
                    d += 1;
                }
                let spf = spf.unwrap_or(m);
                if m == 1 || spf as f64 >= z {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn sifted_count_examples() {
        let st = store();
        let spec = SieveSetSpec::new(30.0, 7, 1).unwrap();
        assert_eq!(sifted_count(&spec, 3.0, &st).unwrap(), 3); // {1, 15, 29}
        assert_eq!(sifted_count(&spec, 2.0, &st).unwrap(), spec.cardinality());
        let spec = SieveSetSpec::new(20.0, 1, 0).unwrap();
        assert_eq!(sifted_count(&spec, 5.0, &st).unwrap(), 7); // 1,5,7,11,13,17,19
    }

    #[test]
    fn sifted_count_matches_exhaustive_oracle() {
        use rand::{Rng, SeedableRng};
        let st = store();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..60 {
            let y = rng.gen_range(50..5000) as f64;
            let modulus = rng.gen_range(1..40u64);
            let residue = rng.gen_range(0..modulus);
            let divisor = *[1u64, 1, 1, 2, 3, 5].get(rng.gen_range(0..6)).unwrap();
            let spec = SieveSetSpec {
                y,
                modulus,
                residue,
                divisor,
            };
            let z = rng.gen_range(1.0..(y.sqrt() + 2.0));
            assert_eq!(
                sifted_count(&spec, z, &st).unwrap(),
                sifted_oracle(&spec, z),
                "mismatch at {spec:?}, z = {z}"
            );
        }
    }

    #[test]
    fn divided_set_equals_divided_enumeration() {
        let st = store();
        let spec = SieveSetSpec::new(10_000.0, 9, 5).unwrap();
        let divided = spec.divided_by(7);
        // oracle: {m : m·7 ≤ y, 7m ≡ 5 (mod 9)} with spf(m) ≥ z
        for z in [1.0, 2.0, 5.0, 11.0] {
            let direct = sifted_count(&divided, z, &st).unwrap();
            let oracle = sifted_oracle(&divided, z);
            assert_eq!(direct, oracle, "z = {z}");
        }
    }

    #[test]
    fn sifting_non_increasing_in_z() {
        let st = store();
        let spec = SieveSetSpec::new(5000.0, 11, 4).unwrap();
        let mut prev = u64::MAX;
        for z in [1.0, 2.0, 3.0, 5.0, 10.0, 30.0, 70.0] {
            let c = sifted_count(&spec, z, &st).unwrap();
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn buchstab_spec_example() {
        let st = store();
        let spec = SieveSetSpec::new(20.0, 1, 0).unwrap();
        let r = buchstab_residual(&spec, 2.0, 5.0, &st).unwrap();
        assert_eq!(r.first_form, 0); // 7 = 20 − 10 − 3
        let degenerate = buchstab_residual(&spec, 4.0, 4.0, &st).unwrap();
        assert_eq!(degenerate.first_form, 0);
        assert_eq!(degenerate.second_form, 0);
    }

    #[test]
    fn buchstab_on_progression() {
        let st = store();
        let spec = SieveSetSpec::new(10_000.0, 9, 5).unwrap();
        let z_low = 10_000f64.powf(1.0 / 3.0);
        let r = buchstab_residual(&spec, z_low, 100.0, &st).unwrap();
        assert_eq!(r.first_form, 0);
    }

    #[test]
    fn buchstab_randomized_exactness() {
        use rand::{Rng, SeedableRng};
        let st = store();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..40 {
            let y = rng.gen_range(100..20_000) as f64;
            let modulus = rng.gen_range(1..60u64);
            let spec = SieveSetSpec {
                y,
                modulus,
                residue: rng.gen_range(0..modulus),
                divisor: 1,
            };
            let z_high = rng.gen_range(2.0..y.sqrt().max(3.0));
            let z_low = rng.gen_range(1.0..=z_high);
            let r = buchstab_residual(&spec, z_low, z_high, &st).unwrap();
            assert_eq!(r.first_form, 0, "at {spec:?} z = [{z_low}, {z_high})");
        }
    }

    #[test]
    fn subset_relation_a_in_b() {
        // A = {n ≤ y, n ≡ e mod s} sits inside B = {n ≤ y, n ≡ d mod q}
        // whenever q | s and e ≡ d (mod q)
        let (s, q, e) = (63u64, 21u64, 10u64);
        let d = e % q;
        let a = SieveSetSpec::new(10_000.0, s, e).unwrap();
        let b = SieveSetSpec::new(10_000.0, q, d).unwrap();
        for n in 1..=10_000u64 {
            if a.contains(n) {
                assert!(b.contains(n), "n = {n} in A but not B");
            }
        }
    }

    #[test]
    fn spi_discrepancy_within_budget() {
        let st = store();
        let r = spi_discrepancy(&st, 1e4, 101, 1, 1e4).unwrap();
        assert!(
            (r.diff as f64).abs() <= r.budget,
            "diff {} budget {}",
            r.diff,
            r.budget
        );
        assert!(spi_discrepancy(&st, 1e4, 10, 5, 1e4).is_err()); // gcd(5,10) > 1
        assert!(spi_discrepancy(&st, 2e4, 7, 1, 1e4).is_err()); // y > xref
    }

    #[test]
    fn spi_zero_diff_when_class_has_no_small_primes() {
        let st = store();
        // modulus above sqrt(xref) and 1 not in the class: the only element
        // is the prime 149 > sqrt(10^4), counted by both sides
        let r = spi_discrepancy(&st, 149.5, 150, 149, 10_000.0).unwrap();
        assert_eq!(r.lhs, 1);
        assert_eq!(r.rhs, 1);
        assert_eq!(r.diff, 0);
    }
}
