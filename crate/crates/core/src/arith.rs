//! Exact integer arithmetic for moduli: factorization, radical, totient,
//! modular inverses and CRT. All intermediate products go through `u128`
//! so that quantities up to s² ≈ 10¹⁸ stay exact.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Threshold up to which trial division by a cached prime table is used
/// before falling back to Pollard's rho.
const TRIAL_LIMIT: u64 = 1_000_000;

fn trial_primes() -> &'static [u32] {
    static TABLE: OnceLock<Vec<u32>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = TRIAL_LIMIT as usize;
        let mut composite = vec![false; n + 1];
        let mut primes = Vec::new();
        for p in 2..=n {
            if !composite[p] {
                primes.push(p as u32);
                let mut m = p * p;
                while m <= n {
                    composite[m] = true;
                    m += p;
                }
            }
        }
        primes
    })
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for 64-bit integers. The fixed witness set
/// covers all n < 3.3·10²⁴, so the test is exact on `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Pollard's rho (Brent variant) with a deterministic sequence of
/// polynomial increments. Returns a nontrivial factor of composite odd n.
fn pollard_rho(n: u64) -> u64 {
    debug_assert!(n > 1 && !is_prime_u64(n) && n % 2 == 1);
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

/// A complete factorization n = ∏ p^e with primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Product of p^e, recomputed. Equals `n` by construction.
    pub fn product(&self) -> u64 {
        self.factors
            .iter()
            .fold(1u64, |acc, &(p, e)| acc * p.pow(e))
    }

    pub fn distinct_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn is_prime_power(&self) -> bool {
        self.factors.len() == 1
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// All positive divisors, ascending.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let prev = divs.clone();
            let mut pe = 1u64;
            for _ in 0..e {
                pe *= p;
                divs.extend(prev.iter().map(|d| d * pe));
            }
        }
        divs.sort_unstable();
        divs
    }
}

/// Factor n < 2⁶⁴ by trial division over the cached table, then rho on
/// whatever survives. factorize(1) has an empty factor list.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Domain("factorize(0) is undefined".into()));
    }
    let mut rest = n;
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for &p in trial_primes() {
        let p = p as u64;
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0u32;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    // rest is 1, a prime, or a product of primes all > 10^6
    let mut stack = Vec::new();
    if rest > 1 {
        stack.push(rest);
    }
    let mut large: Vec<u64> = Vec::new();
    while let Some(m) = stack.pop() {
        if is_prime_u64(m) {
            large.push(m);
        } else {
            let d = pollard_rho(m);
            stack.push(d);
            stack.push(m / d);
        }
    }
    large.sort_unstable();
    for p in large {
        match factors.last_mut() {
            Some(last) if last.0 == p => last.1 += 1,
            _ => factors.push((p, 1)),
        }
    }
    Ok(Factorization { n, factors })
}

/// rad(n): the product of the distinct primes dividing n; rad(1) = 1.
pub fn radical(f: &Factorization) -> u64 {
    f.factors.iter().map(|&(p, _)| p).product()
}

pub fn radical_of(n: u64) -> Result<u64> {
    Ok(radical(&factorize(n)?))
}

/// Euler's totient from a factorization: ∏ p^{e−1}(p−1).
pub fn totient(f: &Factorization) -> u64 {
    f.factors
        .iter()
        .map(|&(p, e)| p.pow(e - 1) * (p - 1))
        .product()
}

/// Extended gcd: returns (g, x, y) with a·x + b·y = g.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Multiplicative inverse of a modulo m, in [1, m). Errors when gcd(a,m) > 1,
/// which usually means a coprimality bug upstream.
pub fn mod_inverse(a: u64, m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::Domain(format!("mod_inverse needs m >= 2, got {m}")));
    }
    let a_red = a % m;
    let g = gcd(a_red, m);
    if g != 1 {
        return Err(Error::NotInvertible { a, m, g });
    }
    let (_, x, _) = ext_gcd(a_red as i128, m as i128);
    let m_i = m as i128;
    Ok((((x % m_i) + m_i) % m_i) as u64)
}

/// Combine residues under pairwise coprime moduli into the unique class
/// modulo their product.
pub fn crt_combine(parts: &[(u64, u64)]) -> Result<(u64, u64)> {
    let mut r0: u128 = 0;
    let mut m0: u128 = 1;
    for &(r, m) in parts {
        if m == 0 {
            return Err(Error::Domain("crt modulus must be positive".into()));
        }
        if gcd((m0 % m as u128) as u64, m) != 1 {
            return Err(Error::Domain(format!(
                "crt moduli not pairwise coprime at modulus {m}"
            )));
        }
        // solve x ≡ r0 (mod m0), x ≡ r (mod m)
        let inv = mod_inverse((m0 % m as u128) as u64, m).map_err(|_| {
            Error::Domain(format!("crt moduli not pairwise coprime at modulus {m}"))
        })?;
        let r_m = r as u128 % m as u128;
        let diff = (r_m + m as u128 - r0 % m as u128) % m as u128;
        let t = (diff * inv as u128) % m as u128;
        r0 += m0 * t;
        m0 *= m as u128;
        if m0 > u64::MAX as u128 {
            return Err(Error::Domain("crt product exceeds 64 bits".into()));
        }
    }
    Ok(((r0 % m0) as u64, m0 as u64))
}

/// A modulus s together with its factorization, radical q = rad(s) and
/// totient φ(s) — the (s, q) pair every experiment revolves around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModulusProfile {
    pub s: u64,
    pub factorization: Factorization,
    pub radical: u64,
    pub totient: u64,
}

impl ModulusProfile {
    pub fn new(s: u64) -> Result<Self> {
        let factorization = factorize(s)?;
        let radical = radical(&factorization);
        let totient = totient(&factorization);
        Ok(ModulusProfile {
            s,
            factorization,
            radical,
            totient,
        })
    }

    pub fn is_prime_power(&self) -> bool {
        self.factorization.is_prime_power()
    }

    pub fn is_squarefree(&self) -> bool {
        self.radical == self.s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent trial-division primality check, used as the oracle
    /// against the Miller–Rabin implementation.
    fn is_prime_trial(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2u64;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn factorize_one_is_empty() {
        let f = factorize(1).unwrap();
        assert!(f.factors.is_empty());
        assert_eq!(f.product(), 1);
    }

    #[test]
    fn factorize_zero_is_domain_error() {
        assert!(factorize(0).is_err());
    }

    #[test]
    fn factorize_360() {
        let f = factorize(360).unwrap();
        assert_eq!(f.factors, vec![(2, 3), (3, 2), (5, 1)]);
    }

    #[test]
    fn factorize_mersenne_61_is_prime() {
        let m61 = (1u64 << 61) - 1;
        // oracle: deterministic primality test independent of the factorizer
        assert!(is_prime_u64(m61));
        let f = factorize(m61).unwrap();
        assert_eq!(f.factors, vec![(m61, 1)]);
    }

    #[test]
    fn factorize_round_trip_exhaustive() {
        for n in 1..=100_000u64 {
            let f = factorize(n).unwrap();
            assert_eq!(f.product(), n, "round trip failed at {n}");
            for &(p, _) in &f.factors {
                assert!(is_prime_u64(p));
            }
        }
    }

    #[test]
    fn miller_rabin_matches_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime_u64(n), is_prime_trial(n), "disagree at {n}");
        }
        for n in [(1u64 << 61) - 1, 4_294_967_291, 2_147_483_647] {
            assert!(is_prime_u64(n));
        }
    }

    #[test]
    fn pollard_rho_on_semiprimes() {
        // both factors above the trial table
        let p = 1_000_003u64;
        let q = 1_000_033u64;
        let f = factorize(p * q).unwrap();
        assert_eq!(f.factors, vec![(p, 1), (q, 1)]);
    }

    #[test]
    fn radical_examples() {
        assert_eq!(radical_of(1).unwrap(), 1);
        assert_eq!(radical_of(1500).unwrap(), 30);
        for p in [2u64, 3, 5, 13] {
            for e in 1..=5 {
                assert_eq!(radical_of(p.pow(e)).unwrap(), p);
            }
        }
        // idempotence
        for n in 1..500u64 {
            let r = radical_of(n).unwrap();
            assert_eq!(radical_of(r).unwrap(), r);
            assert_eq!(n % r, 0);
        }
    }

    #[test]
    fn radical_multiplicative_on_coprime() {
        for m in 1..80u64 {
            for n in 1..80u64 {
                if gcd(m, n) == 1 {
                    assert_eq!(
                        radical_of(m * n).unwrap(),
                        radical_of(m).unwrap() * radical_of(n).unwrap()
                    );
                }
            }
        }
    }

    fn phi_by_gcd_count(n: u64) -> u64 {
        (1..=n).filter(|&a| gcd(a, n) == 1).count() as u64
    }

    #[test]
    fn totient_examples() {
        assert_eq!(totient(&factorize(1).unwrap()), 1);
        assert_eq!(totient(&factorize(9).unwrap()), 6);
        assert_eq!(totient(&factorize(3).unwrap()), 2);
        for n in 1..=1000u64 {
            assert_eq!(totient(&factorize(n).unwrap()), phi_by_gcd_count(n));
        }
    }

    #[test]
    fn totient_of_square_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // φ(s²) = s·φ(s); gcd-counting oracle for small s
        for s in 1..=1000u64 {
            let phi_s2 = totient(&factorize(s * s).unwrap());
            assert_eq!(phi_s2, s * totient(&factorize(s).unwrap()));
            if s <= 300 {
                assert_eq!(phi_s2, phi_by_gcd_count(s * s));
            }
        }
        for _ in 0..100 {
            let s: u64 = rng.gen_range(1..=1_000_000);
            let phi_s2 = totient(&factorize(s * s).unwrap());
            assert_eq!(phi_s2, s * totient(&factorize(s).unwrap()));
        }
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(1, 17).unwrap(), 1);
        assert_eq!(mod_inverse(3, 7).unwrap(), 5);
        assert!(mod_inverse(6, 9).is_err());
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let m: u64 = rng.gen_range(2..=1_000_000_000);
            let a: u64 = rng.gen_range(1..m);
            if gcd(a, m) == 1 {
                let inv = mod_inverse(a, m).unwrap();
                assert!(inv >= 1 && inv < m);
                assert_eq!(mul_mod(a, inv, m), 1);
            }
        }
    }

    #[test]
    fn crt_examples() {
        // exhaustive oracle over 0..35
        let (r, m) = crt_combine(&[(1, 4), (2, 9)]).unwrap();
        assert_eq!(m, 36);
        let scan: Vec<u64> = (0..36).filter(|&x| x % 4 == 1 && x % 9 == 2).collect();
        assert_eq!(scan, vec![r]);
        assert_eq!(r, 29);

        let (r, m) = crt_combine(&[(3, 5)]).unwrap();
        assert_eq!((r, m), (3, 5));

        let (r, _) = crt_combine(&[(0, 4), (0, 9), (0, 25)]).unwrap();
        assert_eq!(r, 0);

        assert!(crt_combine(&[(1, 4), (2, 6)]).is_err());
    }

    #[test]
    fn modulus_profile_prime_power() {
        let prof = ModulusProfile::new(2048).unwrap();
        assert_eq!(prof.radical, 2);
        assert_eq!(prof.totient, 1024);
        assert!(prof.is_prime_power());
        let prof = ModulusProfile::new(30).unwrap();
        assert!(prof.is_squarefree());
        assert_eq!(prof.radical, 30);
    }

    #[test]
    fn divisors_of_factorization() {
        let f = factorize(12).unwrap();
        assert_eq!(f.divisors(), vec![1, 2, 3, 4, 6, 12]);
        let f = factorize(1).unwrap();
        assert_eq!(f.divisors(), vec![1]);
    }
}
