//! Families of pairwise coprime moduli in a dyadic window (Q, 2Q].

use crate::arith::ModulusProfile;
use crate::error::{Error, Result};
use crate::prime::PrimeStore;
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyKind {
    /// One p^N per prime p ≤ prime_bound with p^N ∈ (Q, 2Q], when it exists.
    /// Distinct primes make the family pairwise coprime automatically.
    PrimePowers { prime_bound: f64 },
    /// Greedy first-fit scan of (Q, 2Q] admitting s with rad(s) ≤ radical_bound
    /// and s coprime to everything admitted before it.
    CoprimeRadicalBounded { radical_bound: f64 },
    /// Caller-supplied members, validated.
    ExplicitList,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModuliFamily {
    pub kind: FamilyKind,
    /// Lower edge Q of the window (Q, 2Q].
    pub q_lower: f64,
    #[serde(serialize_with = "serialize_members")]
    pub members: Vec<ModulusProfile>,
    /// Set when the window produced no members.
    pub warning: Option<String>,
}

fn serialize_members<S: serde::Serializer>(
    members: &[ModulusProfile],
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(members.len()))?;
    for m in members {
        seq.serialize_element(&m.s)?;
    }
    seq.end()
}

impl ModuliFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let q = self.q_lower;
        let mut used_primes: BTreeSet<u64> = BTreeSet::new();
        for m in &self.members {
            let v = m.s as f64;
            if !(v > q && v <= 2.0 * q) {
                return Err(Error::Domain(format!(
                    "member {} outside ({q}, {}]",
                    m.s,
                    2.0 * q
                )));
            }
            for p in m.factorization.distinct_primes() {
                if !used_primes.insert(p) {
                    return Err(Error::Domain(format!(
                        "members not pairwise coprime: prime {p} repeats at s = {}",
                        m.s
                    )));
                }
            }
            match &self.kind {
                FamilyKind::PrimePowers { prime_bound } => {
                    if !m.is_prime_power() {
                        return Err(Error::Domain(format!("{} is not a prime power", m.s)));
                    }
                    if (m.radical as f64) > *prime_bound {
                        return Err(Error::Domain(format!(
                            "prime {} exceeds prime bound {prime_bound}",
                            m.radical
                        )));
                    }
                }
                FamilyKind::CoprimeRadicalBounded { radical_bound } => {
                    if (m.radical as f64) > *radical_bound {
                        return Err(Error::Domain(format!(
                            "rad({}) = {} exceeds radical bound {radical_bound}",
                            m.s, m.radical
                        )));
                    }
                }
                FamilyKind::ExplicitList => {}
            }
        }
        Ok(())
    }
}

/// Build a moduli family in (Q, 2Q]. An empty window is a warning, not an
/// error. `store` supplies the primes for the prime-powers scan.
pub fn generate_family(
    store: &PrimeStore,
    q_lower: f64,
    kind: FamilyKind,
) -> Result<ModuliFamily> {
    if q_lower < 1.0 {
        return Err(Error::Domain(format!("Q must be >= 1, got {q_lower}")));
    }
    let hi = 2.0 * q_lower;
    let members: Vec<ModulusProfile> = match &kind {
        FamilyKind::PrimePowers { prime_bound } => {
            let p_cap = prime_bound.min(hi);
            if p_cap > store.limit() as f64 {
                return Err(Error::OutOfRange {
                    what: "prime bound",
                    value: p_cap,
                    limit: store.limit() as f64,
                });
            }
            let mut members = Vec::new();
            if p_cap >= 2.0 {
                for &p in store.primes_in_range(2.0, p_cap + 1.0)? {
                    // the smallest power above Q is the only candidate:
                    // consecutive powers differ by a factor p >= 2
                    let mut v = p;
                    loop {
                        let vf = v as f64;
                        if vf > q_lower {
                            if vf <= hi {
                                members.push(ModulusProfile::new(v)?);
                            }
                            break;
                        }
                        match v.checked_mul(p) {
                            Some(next) => v = next,
                            None => break,
                        }
                    }
                }
            }
            members
        }
        FamilyKind::CoprimeRadicalBounded { radical_bound } => {
            let mut used_primes: BTreeSet<u64> = BTreeSet::new();
            let mut members = Vec::new();
            let lo = q_lower.floor() as u64 + 1;
            let top = hi.floor() as u64;
            for s in lo..=top {
                if (s as f64) <= q_lower {
                    continue;
                }
                let profile = ModulusProfile::new(s)?;
                if (profile.radical as f64) > *radical_bound {
                    continue;
                }
                if profile
                    .factorization
                    .distinct_primes()
                    .any(|p| used_primes.contains(&p))
                {
                    continue;
                }
                used_primes.extend(profile.factorization.distinct_primes());
                members.push(profile);
            }
            members
        }
        FamilyKind::ExplicitList => Vec::new(),
    };
    family_from_members(q_lower, kind, members)
}

/// Wrap an explicit member list, enforcing every family invariant.
pub fn family_from_list(q_lower: f64, moduli: &[u64]) -> Result<ModuliFamily> {
    let members = moduli
        .iter()
        .map(|&s| ModulusProfile::new(s))
        .collect::<Result<Vec<_>>>()?;
    family_from_members(q_lower, FamilyKind::ExplicitList, members)
}

fn family_from_members(
    q_lower: f64,
    kind: FamilyKind,
    mut members: Vec<ModulusProfile>,
) -> Result<ModuliFamily> {
    members.sort_by_key(|m| m.s);
    let warning = if members.is_empty() {
        Some(format!(
            "family window ({q_lower}, {}] contains no admissible moduli",
            2.0 * q_lower
        ))
    } else {
        None
    };
    let family = ModuliFamily {
        kind,
        q_lower,
        members,
        warning,
    };
    family.validate()?;
    Ok(family)
}

/// The distinct radicals rad(s) over the family, ascending.
pub fn family_radicals(family: &ModuliFamily) -> Vec<u64> {
    let set: BTreeSet<u64> = family.members.iter().map(|m| m.radical).collect();
    set.into_iter().collect()
}

impl ModuliFamily {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FamilyKind::PrimePowers { .. } => "prime-powers",
            FamilyKind::CoprimeRadicalBounded { .. } => "coprime-radical",
            FamilyKind::ExplicitList => "explicit-list",
        }
    }
}
