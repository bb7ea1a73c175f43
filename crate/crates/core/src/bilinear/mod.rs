//! Bilinear machinery: the type-I and type-II differences between a sparse
//! modulus s and its radical q = rad(s), their dyadic blocks, the dispersion
//! decomposition and the Perron split.

mod dispersion;
mod perron;

pub use dispersion::{dispersion_decompose, DispersionBreakdown};
pub use perron::{averaged_square_sum, perron_block, AveragedSquareReport, PerronBlockReport};

use crate::arith::{self, mod_inverse, ModulusProfile};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

/// Compensated complex accumulator (Kahan), used for every float sum whose
/// residual tolerance sits near 1e-9.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    sum: Complex64,
    comp: Complex64,
}

impl KahanComplex {
    pub fn add(&mut self, v: Complex64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> Complex64 {
        self.sum
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KahanReal {
    sum: f64,
    comp: f64,
}

impl KahanReal {
    pub fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// A coefficient sequence (a_m), (b_n), ... with |value| ≤ 1. Values must be
/// pure functions of the index so parallel order cannot change results.
pub trait Coefficients: Sync {
    fn value(&self, index: u64) -> Complex64;
}

/// A sequence supported at a single index.
#[derive(Debug, Clone, Copy)]
pub struct PointMass {
    pub index: u64,
    pub value: Complex64,
}

impl Coefficients for PointMass {
    fn value(&self, index: u64) -> Complex64 {
        if index == self.index {
            self.value
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffKind {
    /// real values in [-1, 1]
    Real,
    /// complex values on the unit circle
    Unimodular,
}

/// Deterministic coefficient sequences: each value is a pure function of
/// (seed, stream, index), so parallel evaluation order cannot change
/// anything. |value| ≤ 1 always.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoeffGen {
    pub seed: u64,
    pub stream: u64,
    pub kind: CoeffKind,
}

impl CoeffGen {
    pub fn new(seed: u64, stream: u64, kind: CoeffKind) -> Self {
        CoeffGen { seed, stream, kind }
    }

    pub fn zero() -> Self {
        // stream u64::MAX is reserved for the all-zero sequence
        CoeffGen {
            seed: 0,
            stream: u64::MAX,
            kind: CoeffKind::Real,
        }
    }

    pub fn value(&self, index: u64) -> Complex64 {
        Coefficients::value(self, index)
    }
}

impl Coefficients for CoeffGen {
    fn value(&self, index: u64) -> Complex64 {
        if self.stream == u64::MAX {
            return Complex64::new(0.0, 0.0);
        }
        let h = splitmix(self.seed ^ splitmix(self.stream ^ splitmix(index)));
        let u = (h >> 11) as f64 / (1u64 << 53) as f64;
        match self.kind {
            CoeffKind::Real => Complex64::new(2.0 * u - 1.0, 0.0),
            CoeffKind::Unimodular => {
                let theta = 2.0 * std::f64::consts::PI * u;
                Complex64::new(theta.cos(), theta.sin())
            }
        }
    }
}

/// Everything a bilinear experiment needs: the window, the (s, q) pair,
/// the residues e ≡ d (mod q), and the exponent/cap choices. The defaults
/// α = β = 1/3 and M = 2√x + 1 are the instantiation the final bounds use;
/// λ = q/s is carried as the exact integer pair.
#[derive(Debug, Clone, Serialize)]
pub struct BilinearConfig {
    pub x: f64,
    pub y: f64,
    #[serde(serialize_with = "ser_profile")]
    pub profile: ModulusProfile,
    pub residue_e: u64,
    pub residue_d: u64,
    pub alpha: f64,
    pub beta: f64,
    /// type-I cap M
    pub m_cap: f64,
    /// support threshold for (c_r): nonzero only when every prime factor
    /// of r exceeds x^epsilon
    pub epsilon: f64,
}

fn ser_profile<S: serde::Serializer>(
    p: &ModulusProfile,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = ser.serialize_struct("profile", 3)?;
    st.serialize_field("s", &p.s)?;
    st.serialize_field("q", &p.radical)?;
    st.serialize_field("phi_s", &p.totient)?;
    st.end()
}

impl BilinearConfig {
    pub fn new(x: f64, y: f64, profile: ModulusProfile, residue_e: u64) -> Result<Self> {
        if !(2.0 <= y && y <= x) {
            return Err(Error::Domain(format!("need 2 <= y <= x, got y={y}, x={x}")));
        }
        if arith::gcd(residue_e % profile.s, profile.s) != 1 {
            return Err(Error::Domain(format!(
                "residue {residue_e} not coprime to s = {}",
                profile.s
            )));
        }
        let residue_d = residue_e % profile.radical;
        let residue_e = residue_e % profile.s;
        Ok(BilinearConfig {
            x,
            y,
            profile,
            residue_e,
            residue_d,
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            m_cap: 2.0 * x.sqrt() + 1.0,
            epsilon: 0.05,
        })
    }

    /// λ = q/s as the exact integer pair.
    pub fn lambda(&self) -> (u64, u64) {
        (self.profile.radical, self.profile.s)
    }

    pub fn lambda_f64(&self) -> f64 {
        self.profile.radical as f64 / self.profile.s as f64
    }

    /// Paper instantiation of (c_r): 1 on {1} ∪ {primes > x^ε}, else 0.
    pub fn c_coefficient(&self, r: u64) -> f64 {
        if r == 1 || (arith::is_prime_u64(r) && r as f64 > self.x.powf(self.epsilon)) {
            1.0
        } else {
            0.0
        }
    }

    /// Support rule for general (c_r): every prime factor must exceed x^ε.
    pub fn c_support_ok(&self, r: u64) -> Result<bool> {
        if r == 1 {
            return Ok(true);
        }
        let bound = self.x.powf(self.epsilon);
        Ok(arith::factorize(r)?
            .distinct_primes()
            .all(|p| p as f64 > bound))
    }

    /// The inner residue classes (e·m̄ mod s, d·m̄ mod q) for (m, q) = 1.
    pub(crate) fn inner_classes(&self, m: u64) -> Result<(u64, u64)> {
        let s = self.profile.s;
        let q = self.profile.radical;
        if s == 1 {
            return Ok((0, 0));
        }
        let inv = mod_inverse(m % s, s)?;
        let u_a = arith::mul_mod(self.residue_e, inv, s);
        let u_b = if q == 1 {
            0
        } else {
            arith::mul_mod(self.residue_d % q, inv % q, q)
        };
        Ok((u_a, u_b))
    }
}

/// #{n : 1 ≤ n ≤ t, n ≡ a (mod m)} as an exact floor expression.
pub(crate) fn ap_count_to(t: f64, m: u64, a: u64) -> u64 {
    if t < 1.0 {
        return 0;
    }
    let t = t.floor() as u64;
    let a = a % m;
    if a == 0 {
        t / m
    } else if a > t {
        0
    } else {
        (t - a) / m + 1
    }
}

/// #{m : lo < m ≤ hi, m ≡ a (mod modulus)} for real endpoints.
pub(crate) fn ap_count_in(lo: f64, hi: f64, modulus: u64, a: u64) -> u64 {
    let upper = ap_count_to(hi, modulus, a);
    let lower = ap_count_to(lo, modulus, a);
    upper.saturating_sub(lower)
}

/// Iterate n ≡ a (mod m), 1 ≤ n ≤ cap, ascending.
pub(crate) fn ap_elements(cap: f64, m: u64, a: u64) -> impl Iterator<Item = u64> {
    let a = a % m;
    let first = if a == 0 { m } else { a };
    let top = if cap < 1.0 { 0 } else { cap.floor() as u64 };
    (0..)
        .map(move |k| first + k * m)
        .take_while(move |&n| n <= top)
}

/// Σ_I: the type-I difference with exact inner floor counts.
///
/// Each inner difference is bounded by 1 + q/s ≤ 2, so |Σ_I| ≤ 2M — asserted
/// as a hard inequality by the callers that know M.
pub fn type_one_difference(cfg: &BilinearConfig, a_gen: &impl Coefficients) -> Result<Complex64> {
    let s = cfg.profile.s;
    let q = cfg.profile.radical;
    let lambda = cfg.lambda_f64();
    let mut acc = KahanComplex::default();
    let m_top = cfg.m_cap.floor() as u64;
    for m in 1..=m_top {
        if arith::gcd(m % q.max(1), q) != 1 {
            continue;
        }
        let a_m = a_gen.value(m);
        if a_m == Complex64::new(0.0, 0.0) {
            continue;
        }
        let cap = cfg.y / m as f64;
        let (u_a, u_b) = cfg.inner_classes(m)?;
        let count_a = ap_count_to(cap, s, u_a) as f64;
        let count_b = ap_count_to(cap, q, u_b) as f64;
        acc.add(a_m * (count_a - lambda * count_b));
    }
    Ok(acc.value())
}

/// Σ_II: the type-II bilinear difference, m ∈ (x^α, x^{α+β}], exact inner
/// sums over the residue classes.
pub fn type_two_difference(
    cfg: &BilinearConfig,
    a_gen: &impl Coefficients,
    b_gen: &impl Coefficients,
) -> Result<Complex64> {
    let s = cfg.profile.s;
    let q = cfg.profile.radical;
    let lambda = cfg.lambda_f64();
    let m_lo = cfg.x.powf(cfg.alpha);
    let m_hi = cfg.x.powf(cfg.alpha + cfg.beta);
    let mut acc = KahanComplex::default();
    let mut m = m_lo.floor() as u64 + 1;
    while m as f64 <= m_hi {
        if arith::gcd(m % q.max(1), q) != 1 {
            m += 1;
            continue;
        }
        let a_m = a_gen.value(m);
        let cap = cfg.y / m as f64;
        let (u_a, u_b) = cfg.inner_classes(m)?;
        let mut sum_a = KahanComplex::default();
        for n in ap_elements(cap, s, u_a) {
            sum_a.add(b_gen.value(n));
        }
        let mut sum_b = KahanComplex::default();
        for n in ap_elements(cap, q, u_b) {
            sum_b.add(b_gen.value(n));
        }
        acc.add(a_m * (sum_a.value() - sum_b.value() * lambda));
        m += 1;
    }
    Ok(acc.value())
}

/// Y from the budget expression: (x²/Q² + x^{3/2} + x^{5/3}·♯𝒬/Q + x·♯𝒬)·𝓛⁴.
pub fn y_budget(x: f64, q_lower: f64, card_q: u64) -> f64 {
    let l4 = x.ln().powi(4);
    let card = card_q as f64;
    (x * x / (q_lower * q_lower) + x.powf(1.5) + x.powf(5.0 / 3.0) * card / q_lower + x * card)
        * l4
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(x: f64, y: f64, s: u64, e: u64) -> BilinearConfig {
        BilinearConfig::new(x, y, ModulusProfile::new(s).unwrap(), e).unwrap()
    }

    /// Brute-force type-I oracle: membership test mn ∈ 𝒜 directly, no
    /// modular inverses anywhere.
    fn type_one_oracle(cfg: &BilinearConfig, a_gen: &impl Coefficients) -> Complex64 {
        let s = cfg.profile.s;
        let q = cfg.profile.radical;
        let lambda = cfg.lambda_f64();
        let mut total = Complex64::new(0.0, 0.0);
        for m in 1..=(cfg.m_cap.floor() as u64) {
            if arith::gcd(m % q.max(1), q) != 1 {
                continue;
            }
            let mut inner_a = 0.0f64;
            let mut inner_b = 0.0f64;
            let mut n = 1u64;
            while (m * n) as f64 <= cfg.y {
                let mn = m * n;
                if mn % s == cfg.residue_e % s {
                    inner_a += 1.0;
                }
                if mn % q == cfg.residue_d % q {
                    inner_b += 1.0;
                }
                n += 1;
            }
            total += a_gen.value(m) * (inner_a - lambda * inner_b);
        }
        total
    }

    fn type_two_oracle(cfg: &BilinearConfig, a_gen: &impl Coefficients, b_gen: &impl Coefficients) -> Complex64 {
        let s = cfg.profile.s;
        let q = cfg.profile.radical;
        let lambda = cfg.lambda_f64();
        let m_lo = cfg.x.powf(cfg.alpha);
        let m_hi = cfg.x.powf(cfg.alpha + cfg.beta);
        let mut total = Complex64::new(0.0, 0.0);
        for m in 1..=(m_hi.floor() as u64) {
            if (m as f64) <= m_lo || arith::gcd(m % q.max(1), q) != 1 {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            let mut n = 1u64;
            while (m * n) as f64 <= cfg.y {
                let mn = m * n;
                let b = b_gen.value(n);
                if mn % s == cfg.residue_e % s {
                    inner += b;
                }
                if mn % q == cfg.residue_d % q {
                    inner -= b * lambda;
                }
                n += 1;
            }
            total += a_gen.value(m) * inner;
        }
        total
    }

    #[test]
    fn type_one_zero_coefficients() {
        let c = cfg(1e4, 1e4, 49, 3);
        let z = type_one_difference(&c, &CoeffGen::zero()).unwrap();
        assert_eq!(z, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn type_one_single_m_bound() {
        // for m = 1 the inner difference is the raw class-count gap, in [-2, 2]
        let c = cfg(1e4, 1e4, 49, 3);
        for y in [100.0, 999.0, 5000.0, 10_000.0] {
            let count_a = ap_count_to(y, 49, c.residue_e) as f64;
            let count_b = ap_count_to(y, 7, c.residue_d) as f64;
            let diff = count_a - c.lambda_f64() * count_b;
            assert!(diff.abs() <= 2.0, "inner difference {diff} out of range at y={y}");
        }
    }

    #[test]
    fn type_one_matches_brute_force() {
        let mut c = cfg(1e4, 1e4, 49, 3);
        c.m_cap = 100.0;
        let a = CoeffGen::new(42, 1, CoeffKind::Real);
        let fast = type_one_difference(&c, &a).unwrap();
        let slow = type_one_oracle(&c, &a);
        assert!(
            (fast - slow).norm() <= 1e-12 * (1.0 + slow.norm()),
            "{fast} vs {slow}"
        );
        assert!(fast.norm() <= 2.0 * c.m_cap);
    }

    #[test]
    fn type_one_bound_hard() {
        for (x, s, e, seed) in [(1e4, 25u64, 2u64, 7u64), (4e3, 27, 5, 9), (1e4, 121, 10, 3)] {
            let c = cfg(x, x, s, e);
            let a = CoeffGen::new(seed, 1, CoeffKind::Unimodular);
            let v = type_one_difference(&c, &a).unwrap();
            assert!(v.norm() <= 2.0 * c.m_cap + 1e-6);
        }
    }

    #[test]
    fn type_two_zero_b() {
        let c = cfg(1e4, 1e4, 27, 5);
        let a = CoeffGen::new(1, 1, CoeffKind::Real);
        let v = type_two_difference(&c, &a, &CoeffGen::zero()).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn type_two_vanishes_when_s_equals_q() {
        // squarefree s: λ = 1 and both inner sums run over the same class
        for s in [7u64, 30, 105] {
            let c = cfg(1e4, 1e4, s, 1);
            assert_eq!(c.profile.radical, s);
            let a = CoeffGen::new(5, 1, CoeffKind::Real);
            let b = CoeffGen::new(5, 2, CoeffKind::Unimodular);
            let v = type_two_difference(&c, &a, &b).unwrap();
            assert_eq!(v, Complex64::new(0.0, 0.0), "exact zero required at s = {s}");
        }
    }

    #[test]
    fn type_two_matches_brute_force() {
        let c = cfg(1e4, 1e4, 27, 5);
        let a = CoeffGen::new(11, 1, CoeffKind::Real);
        let b = CoeffGen::new(11, 2, CoeffKind::Unimodular);
        let fast = type_two_difference(&c, &a, &b).unwrap();
        let slow = type_two_oracle(&c, &a, &b);
        assert!(
            (fast - slow).norm() <= 1e-10 * (1.0 + slow.norm()),
            "{fast} vs {slow}"
        );
    }

    #[test]
    fn c_support_rule() {
        let c = cfg(1e4, 1e4, 25, 2);
        // x^0.05 = 10^0.2 ≈ 1.58: all primes pass
        assert_eq!(c.c_coefficient(1), 1.0);
        assert_eq!(c.c_coefficient(7), 1.0);
        assert_eq!(c.c_coefficient(6), 0.0); // composite
        assert!(c.c_support_ok(35).unwrap()); // 5·7, both > 1.58
        let mut strict = c.clone();
        strict.epsilon = 0.25; // x^0.25 = 10
        assert_eq!(strict.c_coefficient(7), 0.0);
        assert!(!strict.c_support_ok(35).unwrap());
        assert!(strict.c_support_ok(143).unwrap()); // 11·13
    }

    #[test]
    fn y_budget_examples() {
        // cardQ = 0 leaves the two ♯𝒬-free terms
        let x: f64 = 1e6;
        let q: f64 = 1e2;
        let l4 = x.ln().powi(4);
        let want = (x * x / (q * q) + x.powf(1.5)) * l4;
        assert!((y_budget(x, q, 0) - want).abs() < 1e-6 * want);

        // independent recomputation
        let got = y_budget(1e6, 1e2, 10);
        let by_hand = (1e12 / 1e4 + 1e9 + 1e10 * 10.0 / 1e2 + 1e6 * 10.0) * l4;
        assert!((got - by_hand).abs() < 1e-9 * by_hand);

        // affine in cardQ: doubling increases by less than a factor 2
        let y1 = y_budget(1e6, 1e2, 5);
        let y2 = y_budget(1e6, 1e2, 10);
        assert!(y2 < 2.0 * y1);
        assert!(y2 > y1);
    }

    #[test]
    fn type_one_budget_grid() {
        // M²·♯𝒬 ≤ Y across the admissible grid, with M = 2√x + 1
        for &x in &[3.0f64, 4.0, 10.0, 100.0, 1e4, 1e6, 1e8] {
            let m = 2.0 * x.sqrt() + 1.0;
            for &frac in &[0.05, 0.2, 1.0 / 3.0] {
                let q = x.powf(frac).max(1.0 + 1e-9);
                for &card in &[0u64, 1, u64::MAX] {
                    let card = if card == u64::MAX { q.floor() as u64 } else { card };
                    if (card as f64) > q {
                        continue;
                    }
                    let y = y_budget(x, q, card);
                    assert!(
                        m * m * card as f64 <= y * (1.0 + 1e-12),
                        "budget fails at x={x}, Q={q}, cardQ={card}: {} > {y}",
                        m * m * card as f64
                    );
                }
            }
        }
    }

    #[test]
    fn ap_count_helpers() {
        assert_eq!(ap_count_to(20.0, 7, 1), 3); // 1, 8, 15
        assert_eq!(ap_count_to(20.0, 7, 0), 2); // 7, 14
        assert_eq!(ap_count_to(0.5, 7, 1), 0);
        assert_eq!(ap_count_in(10.0, 20.0, 7, 1), 1); // 15
        let got: Vec<u64> = ap_elements(30.0, 7, 1).collect();
        assert_eq!(got, vec![1, 8, 15, 22, 29]);
        let all: Vec<u64> = ap_elements(4.0, 1, 0).collect();
        assert_eq!(all, vec![1, 2, 3, 4]);
    }
}
