//! Dirichlet characters mod q, built on CRT generators of (ℤ/q)*.
//!
//! Characters are exponent vectors against the component generators; values
//! are exact rational multiples of 2π ([`UnitPhase`]) and only become
//! complex floats inside summations, so orthogonality failures are
//! attributable to float summation alone. For the 2^k component with k ≥ 3
//! the usual two-generator structure {−1, 5} is used.

use crate::arith::{self, crt_combine, Factorization, ModulusProfile};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::HashMap;

/// Largest prime-power component that gets a full discrete-log table;
/// larger components fall back to baby-step/giant-step per evaluation.
const DLOG_TABLE_LIMIT: u64 = 1 << 20;

/// An exact root of unity e^{2πi·num/den}, reduced, 0 ≤ num < den.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct UnitPhase {
    pub num: u64,
    pub den: u64,
}

impl UnitPhase {
    pub fn new(num: u64, den: u64) -> Self {
        debug_assert!(den > 0);
        let num = num % den;
        let g = arith::gcd(num, den);
        if num == 0 {
            UnitPhase { num: 0, den: 1 }
        } else {
            UnitPhase {
                num: num / g,
                den: den / g,
            }
        }
    }

    pub fn one() -> Self {
        UnitPhase { num: 0, den: 1 }
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }

    pub fn mul(&self, other: &UnitPhase) -> UnitPhase {
        let den = self.den / arith::gcd(self.den, other.den) * other.den;
        let num =
            (self.num as u128 * (den / self.den) as u128 + other.num as u128 * (den / other.den) as u128)
                % den as u128;
        UnitPhase::new(num as u64, den)
    }

    pub fn conj(&self) -> UnitPhase {
        UnitPhase::new(self.den - self.num, self.den)
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.num == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let theta = 2.0 * std::f64::consts::PI * (self.num as f64) / (self.den as f64);
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// A character value: zero off the units, an exact root of unity on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CharValue {
    Zero,
    Root(UnitPhase),
}

impl CharValue {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            CharValue::Zero => Complex64::new(0.0, 0.0),
            CharValue::Root(p) => p.to_complex(),
        }
    }

    pub fn conj(&self) -> CharValue {
        match self {
            CharValue::Zero => CharValue::Zero,
            CharValue::Root(p) => CharValue::Root(p.conj()),
        }
    }

    pub fn mul(&self, other: &CharValue) -> CharValue {
        match (self, other) {
            (CharValue::Root(a), CharValue::Root(b)) => CharValue::Root(a.mul(b)),
            _ => CharValue::Zero,
        }
    }
}

#[derive(Debug, Clone)]
enum Dlog {
    /// residue → exponent table; u32::MAX marks non-units.
    Table(Vec<u32>),
    /// baby-step/giant-step against the stored generator.
    Bsgs,
}

/// One prime-power block p^e of the modulus with its generator structure.
#[derive(Debug, Clone)]
pub struct Component {
    pub prime: u64,
    pub exponent: u32,
    /// p^e
    pub modulus: u64,
    /// generator elements (mod p^e) with their orders; empty for 2^1,
    /// {−1, 5} for 2^k with k ≥ 3, a single primitive root otherwise
    pub generators: Vec<(u64, u64)>,
    dlog: Dlog,
}

impl Component {
    fn build(prime: u64, exponent: u32) -> Result<Self> {
        let modulus = prime.pow(exponent);
        let (generators, dlog) = if prime == 2 {
            match exponent {
                1 => (Vec::new(), Dlog::Table(vec![u32::MAX, 0])),
                2 => {
                    // cyclic of order 2 generated by 3
                    (vec![(3u64, 2u64)], Dlog::Table(vec![u32::MAX, 0, u32::MAX, 1]))
                }
                _ => {
                    let ord5 = modulus / 4;
                    let gens = vec![(modulus - 1, 2), (5, ord5)];
                    let dlog = if modulus <= DLOG_TABLE_LIMIT {
                        let mut table = vec![u32::MAX; modulus as usize];
                        let mut v = 1u64;
                        for i in 0..ord5 {
                            table[v as usize] = i as u32;
                            v = arith::mul_mod(v, 5, modulus);
                        }
                        Dlog::Table(table)
                    } else {
                        Dlog::Bsgs
                    };
                    (gens, dlog)
                }
            }
        } else {
            let g = primitive_root_mod_p(prime)?;
            let order = modulus / prime * (prime - 1);
            let g = if exponent == 1 {
                g
            } else if arith::pow_mod(g, prime - 1, prime * prime) != 1 {
                g
            } else {
                g + prime
            };
            let dlog = if modulus <= DLOG_TABLE_LIMIT {
                let mut table = vec![u32::MAX; modulus as usize];
                let mut v = 1u64;
                for i in 0..order {
                    table[v as usize] = i as u32;
                    v = arith::mul_mod(v, g, modulus);
                }
                Dlog::Table(table)
            } else {
                Dlog::Bsgs
            };
            (vec![(g, order)], dlog)
        };
        Ok(Component {
            prime,
            exponent,
            modulus,
            generators,
            dlog,
        })
    }

    /// Exponent vector of the unit n (mod p^e) against this component's
    /// generators. n must be a unit.
    fn decompose(&self, n: u64) -> Vec<u64> {
        let n = n % self.modulus;
        if self.prime == 2 {
            match self.exponent {
                1 => Vec::new(),
                2 => vec![u64::from(n == 3)],
                _ => {
                    let negate = n % 4 == 3;
                    let n5 = if negate { self.modulus - n } else { n };
                    let b = self.dlog_of(n5, 5, self.modulus / 4);
                    vec![u64::from(negate), b]
                }
            }
        } else {
            let (g, order) = self.generators[0];
            vec![self.dlog_of(n, g, order)]
        }
    }

    fn dlog_of(&self, n: u64, g: u64, order: u64) -> u64 {
        match &self.dlog {
            Dlog::Table(t) => {
                let v = t[n as usize];
                debug_assert!(v != u32::MAX, "dlog of non-unit {n} mod {}", self.modulus);
                v as u64
            }
            Dlog::Bsgs => bsgs(n, g, order, self.modulus),
        }
    }
}

/// Solve g^x ≡ n (mod m) for x in [0, order).
fn bsgs(n: u64, g: u64, order: u64, m: u64) -> u64 {
    let step = (order as f64).sqrt().ceil() as u64;
    let mut baby = HashMap::with_capacity(step as usize);
    let mut v = n % m;
    // baby steps: n·g^j
    for j in 0..step {
        baby.entry(v).or_insert(j);
        v = arith::mul_mod(v, g, m);
    }
    let giant = arith::pow_mod(g, step, m);
    let mut w = giant;
    for i in 1..=step {
        if let Some(&j) = baby.get(&w) {
            return (i * step + order - j % order) % order;
        }
        w = arith::mul_mod(w, giant, m);
    }
    panic!("bsgs: {n} is not in <{g}> mod {m}");
}

fn primitive_root_mod_p(p: u64) -> Result<u64> {
    if p == 2 {
        return Ok(1);
    }
    let phi = p - 1;
    let fact = arith::factorize(phi)?;
    'candidate: for g in 2..p {
        for f in fact.distinct_primes() {
            if arith::pow_mod(g, phi / f, p) == 1 {
                continue 'candidate;
            }
        }
        return Ok(g);
    }
    Err(Error::Domain(format!("no primitive root mod {p} (not prime?)")))
}

/// The full group of φ(q) Dirichlet characters modulo q.
#[derive(Debug, Clone)]
pub struct CharacterGroup {
    modulus: u64,
    phi: u64,
    components: Vec<Component>,
    /// orders of the generators, flattened across components
    orders: Vec<u64>,
    /// CRT lifts of the component generators to elements mod q
    global_generators: Vec<u64>,
}

pub fn build_character_group(f: &Factorization) -> Result<CharacterGroup> {
    let modulus = f.n;
    let mut components = Vec::with_capacity(f.factors.len());
    for &(p, e) in &f.factors {
        components.push(Component::build(p, e)?);
    }
    let phi = arith::totient(f);
    let mut orders = Vec::new();
    let mut global_generators = Vec::new();
    for (ci, comp) in components.iter().enumerate() {
        for &(g, order) in &comp.generators {
            orders.push(order);
            let parts: Vec<(u64, u64)> = components
                .iter()
                .enumerate()
                .map(|(cj, other)| {
                    if ci == cj {
                        (g % other.modulus, other.modulus)
                    } else {
                        (1 % other.modulus, other.modulus)
                    }
                })
                .collect();
            global_generators.push(crt_combine(&parts)?.0);
        }
    }
    debug_assert_eq!(orders.iter().product::<u64>(), phi);
    Ok(CharacterGroup {
        modulus,
        phi,
        components,
        orders,
        global_generators,
    })
}

impl CharacterGroup {
    pub fn new(modulus: u64) -> Result<Self> {
        build_character_group(&arith::factorize(modulus)?)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// φ(q) = number of characters.
    pub fn len(&self) -> u64 {
        self.phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn generator_orders(&self) -> &[u64] {
        &self.orders
    }

    /// Elements of (ℤ/q)* that generate it through the CRT decomposition.
    pub fn global_generators(&self) -> &[u64] {
        &self.global_generators
    }

    /// Exponent vector of a unit n against the flattened generators.
    fn decompose(&self, n: u64) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.orders.len());
        for comp in &self.components {
            out.extend(comp.decompose(n % comp.modulus));
        }
        out
    }

    /// The character with the given flat index (mixed-radix over the
    /// generator orders).
    pub fn character(&self, index: u64) -> CharacterHandle<'_> {
        debug_assert!(index < self.phi);
        let mut exponents = Vec::with_capacity(self.orders.len());
        let mut rest = index;
        for &ord in &self.orders {
            exponents.push(rest % ord);
            rest /= ord;
        }
        let conductor = self.conductor_of(&exponents);
        CharacterHandle {
            group: self,
            index,
            exponents,
            conductor,
        }
    }

    pub fn characters(&self) -> impl Iterator<Item = CharacterHandle<'_>> {
        (0..self.phi).map(move |i| self.character(i))
    }

    pub fn principal(&self) -> CharacterHandle<'_> {
        self.character(0)
    }

    /// Conductor from the exponent vector, component by component: the
    /// least p^f on which the component character is trivial on the kernel
    /// of reduction, multiplied across components.
    fn conductor_of(&self, exponents: &[u64]) -> u64 {
        let mut cond = 1u64;
        let mut pos = 0usize;
        for comp in &self.components {
            let n_gens = comp.generators.len();
            let exps = &exponents[pos..pos + n_gens];
            pos += n_gens;
            cond *= component_conductor(comp, exps);
        }
        cond
    }

    /// All characters whose conductor equals the modulus.
    pub fn primitive_characters(&self) -> Vec<CharacterHandle<'_>> {
        self.characters()
            .filter(|c| c.is_primitive())
            .collect()
    }

    /// 𝒳(s): characters mod s = self.modulus NOT induced by any character
    /// mod q, i.e. with conductor not dividing q. Requires q = rad(s).
    pub fn nonlifted_set(&self, q: u64) -> Result<Vec<CharacterHandle<'_>>> {
        let rad = arith::radical_of(self.modulus)?;
        if q != rad {
            return Err(Error::Domain(format!(
                "nonlifted_set: q = {q} is not rad({}) = {rad}",
                self.modulus
            )));
        }
        Ok(self
            .characters()
            .filter(|c| q % c.conductor != 0)
            .collect())
    }
}

fn component_conductor(comp: &Component, exps: &[u64]) -> u64 {
    let p = comp.prime;
    let e = comp.exponent;
    if p == 2 {
        match e {
            1 => 1,
            2 => {
                if exps[0] == 0 {
                    1
                } else {
                    4
                }
            }
            _ => {
                let (c1, c2) = (exps[0], exps[1]);
                if c2 == 0 {
                    if c1 == 0 {
                        1
                    } else {
                        4
                    }
                } else {
                    // order of the <5>-part is 2^{e-2}/gcd; conductor 2^{e-v}
                    let v = c2.trailing_zeros().min(e - 3);
                    2u64.pow(e - v)
                }
            }
        }
    } else {
        let c = exps[0];
        if c == 0 {
            return 1;
        }
        let mut v = 0u32;
        let mut m = c;
        while m % p == 0 && v < e - 1 {
            m /= p;
            v += 1;
        }
        p.pow(e - v)
    }
}

/// One character of a [`CharacterGroup`]: its exponent vector, conductor
/// and flat index.
#[derive(Debug, Clone)]
pub struct CharacterHandle<'a> {
    pub group: &'a CharacterGroup,
    pub index: u64,
    pub exponents: Vec<u64>,
    pub conductor: u64,
}

impl<'a> CharacterHandle<'a> {
    pub fn is_primitive(&self) -> bool {
        self.conductor == self.group.modulus
    }

    pub fn is_principal(&self) -> bool {
        self.exponents.iter().all(|&c| c == 0)
    }

    /// χ(n): zero off the units, an exact root of unity on them.
    pub fn eval(&self, n: u64) -> CharValue {
        let q = self.group.modulus;
        if q == 1 {
            return CharValue::Root(UnitPhase::one());
        }
        let n = n % q;
        if arith::gcd(n, q) != 1 {
            return CharValue::Zero;
        }
        let inds = self.group.decompose(n);
        // Σ_j c_j·ind_j/ord_j (mod 1), exact
        let mut phase = UnitPhase::one();
        for ((&c, &ind), &ord) in self
            .exponents
            .iter()
            .zip(inds.iter())
            .zip(self.group.orders.iter())
        {
            let term = (c as u128 * ind as u128 % ord as u128) as u64;
            phase = phase.mul(&UnitPhase::new(term, ord));
        }
        CharValue::Root(phase)
    }

    /// χ(n) as a complex number.
    pub fn eval_complex(&self, n: u64) -> Complex64 {
        self.eval(n).to_complex()
    }

    /// Pointwise product, a character of the same group.
    pub fn product(&self, other: &CharacterHandle<'a>) -> CharacterHandle<'a> {
        debug_assert!(std::ptr::eq(self.group, other.group));
        let exps: Vec<u64> = self
            .exponents
            .iter()
            .zip(&other.exponents)
            .zip(&self.group.orders)
            .map(|((&a, &b), &ord)| (a + b) % ord)
            .collect();
        let mut index = 0u64;
        for (&c, &ord) in exps.iter().zip(&self.group.orders).rev() {
            index = index * ord + c;
        }
        self.group.character(index)
    }

    pub fn conjugate(&self) -> CharacterHandle<'a> {
        let exps: Vec<u64> = self
            .exponents
            .iter()
            .zip(&self.group.orders)
            .map(|(&a, &ord)| (ord - a) % ord)
            .collect();
        let mut index = 0u64;
        for (&c, &ord) in exps.iter().zip(&self.group.orders).rev() {
            index = index * ord + c;
        }
        self.group.character(index)
    }
}

/// conductor(χ), the least modulus inducing χ.
pub fn conductor(chi: &CharacterHandle<'_>) -> u64 {
    chi.conductor
}

/// The conductor multisets behind the decomposition of 𝒳(s) into primitive
/// characters: the exact one (all non-squarefree divisors f of s, i.e.
/// f ∤ rad(s)) and the dyadic-chain form (multiples r of q with q | r | s,
/// r > q). The two agree when s is squarefree or a prime power; the exact
/// form is the one in bijection with 𝒳(s) for every s.
#[derive(Debug, Clone, Serialize)]
pub struct ConductorDecomposition {
    /// conductors of the members of 𝒳(s), with multiplicity, ascending
    pub nonlifted_conductors: Vec<(u64, usize)>,
    /// (f, #primitive characters mod f) over divisors f of s with f ∤ q
    pub exact_form: Vec<(u64, usize)>,
    /// (r, #primitive characters mod r) over q | r | s, r > q
    pub chain_form: Vec<(u64, usize)>,
    pub chain_form_matches: bool,
}

pub fn conductor_decomposition(profile: &ModulusProfile) -> Result<ConductorDecomposition> {
    let s = profile.s;
    let q = profile.radical;
    let group = CharacterGroup::new(s)?;
    let nonlifted = group.nonlifted_set(q)?;
    let mut counts: std::collections::BTreeMap<u64, usize> = Default::default();
    for chi in &nonlifted {
        *counts.entry(chi.conductor).or_insert(0) += 1;
    }
    let nonlifted_conductors: Vec<(u64, usize)> = counts.into_iter().collect();

    let mut exact_form = Vec::new();
    let mut chain_form = Vec::new();
    for f in profile.factorization.divisors() {
        if f == 1 {
            continue;
        }
        let prim = CharacterGroup::new(f)?.primitive_characters().len();
        if prim == 0 {
            continue;
        }
        if q % f != 0 {
            exact_form.push((f, prim));
        }
        if f > q && f % q == 0 {
            chain_form.push((f, prim));
        }
    }
    let chain_form_matches = nonlifted_conductors == chain_form;
    Ok(ConductorDecomposition {
        nonlifted_conductors,
        exact_form,
        chain_form,
        chain_form_matches,
    })
}
