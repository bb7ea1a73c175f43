//! The exceptional-moduli census: classify every family member by the
//! threshold π(x)/(φ(s)·𝓛^A) and report the counts next to the reference
//! bound expressions (with unit implicit constants — the reports show
//! ratios, never pass/fail on them).

use super::family::{family_radicals, ModuliFamily};
use super::{ApContext, ApErrorRecord};
use crate::error::Result;
use crate::exec;
use crate::prime::PrimeStore;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Serialize)]
pub struct MemberRecord {
    pub s: u64,
    pub q: u64,
    pub phi_s: u64,
    pub best_a: u64,
    pub best_y: f64,
    #[serde(rename = "F_star")]
    pub f_star: f64,
    pub threshold: f64,
    pub exceptional: u8,
}

/// Reference bound expressions evaluated with unit constants.
#[derive(Debug, Clone, Serialize)]
pub struct PaperBounds {
    /// 𝓛^{34+A}
    pub baker_l_34_plus_a: f64,
    /// 𝓛^{14+2A}
    pub prime_power_l_14_plus_2a: f64,
    /// 𝓛^{36+A} + 𝓛^{14+2A}·(1 + Q²·x^{−1/2})
    pub combined: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadicalRecord {
    pub q: u64,
    pub f_star_q: f64,
    /// kept means F*(x,q) ≤ π(x)/(φ(q)·𝓛^{A+2})
    pub kept_exponent_a2: bool,
    pub kept_exponent_a1: bool,
}

/// The radical-side classification that discards bad radicals before the
/// averaged argument runs. The exponent is reported for both readings of
/// the ambiguous 2B (A+1 and A+2).
#[derive(Debug, Clone, Serialize)]
pub struct RadicalSummary {
    pub records: Vec<RadicalRecord>,
    pub total: usize,
    pub discarded_exponent_a2: usize,
    pub discarded_exponent_a1: usize,
    /// 𝓛^{36+A}, the reference for the discarded count.
    pub discard_bound: f64,
    pub exponent_note: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub x: f64,
    #[serde(rename = "A")]
    pub a_param: f64,
    pub q_lower: f64,
    pub family_kind: String,
    pub log_x: f64,
    pub pi_x: u64,
    pub threshold_description: String,
    pub exceptional_count: usize,
    pub total_count: usize,
    pub paper_bounds: PaperBounds,
    /// exceptional_count / 𝓛^{14+2A} — diagnostic only.
    pub ratio_vs_l_14_plus_2a: f64,
    /// exceptional_count / combined bound — diagnostic only.
    pub ratio_vs_combined: f64,
    pub warning: Option<String>,
    pub radicals: RadicalSummary,
    pub members: Vec<MemberRecord>,
}

impl CensusReport {
    /// The CSV schema with its mandatory header row. Field order and float
    /// formatting are fixed so reruns are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,q,phi_s,best_a,best_y,F_star,threshold,exceptional\n");
        for m in &self.members {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                m.s, m.q, m.phi_s, m.best_a, m.best_y, m.f_star, m.threshold, m.exceptional
            )
            .unwrap();
        }
        out
    }

    pub fn exceptional_members(&self) -> impl Iterator<Item = &MemberRecord> {
        self.members.iter().filter(|m| m.exceptional == 1)
    }
}

/// F* for every modulus in `moduli` (ascending, distinct), fanned out over
/// the pool. Results keyed by modulus.
fn sup_errors_for(
    ctx: &ApContext<'_>,
    x: f64,
    moduli: &[u64],
) -> Result<BTreeMap<u64, ApErrorRecord>> {
    let records = exec::par_map(moduli, |&s| {
        let profile = crate::arith::ModulusProfile::new(s)?;
        ctx.sup_error(x, &profile)
    });
    let mut map = BTreeMap::new();
    for (s, rec) in moduli.iter().zip(records) {
        map.insert(*s, rec?);
    }
    Ok(map)
}

/// Run the census for a grid of threshold parameters A, computing each
/// modulus' F* exactly once.
pub fn census_with_context(
    ctx: &ApContext<'_>,
    x: f64,
    family: &ModuliFamily,
    a_grid: &[f64],
) -> Result<Vec<CensusReport>> {
    let radicals = family_radicals(family);
    let mut all_moduli: Vec<u64> = family.members.iter().map(|m| m.s).collect();
    all_moduli.extend(radicals.iter().copied());
    all_moduli.sort_unstable();
    all_moduli.dedup();
    let f_star = sup_errors_for(ctx, x, &all_moduli)?;

    let pi_x = ctx.store().count_primes(x)?;
    let log_x = x.ln();
    let mut reports = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        reports.push(assemble_report(
            x, a, family, &radicals, &f_star, pi_x, log_x,
        ));
    }
    Ok(reports)
}

/// Single-A convenience wrapper around [`census_with_context`].
pub fn exceptional_census(
    store: &PrimeStore,
    x: f64,
    family: &ModuliFamily,
    a_param: f64,
) -> Result<CensusReport> {
    let ctx = ApContext::new(store);
    Ok(census_with_context(&ctx, x, family, &[a_param])?.remove(0))
}

#[allow(clippy::too_many_arguments)]
fn assemble_report(
    x: f64,
    a_param: f64,
    family: &ModuliFamily,
    radicals: &[u64],
    f_star: &BTreeMap<u64, ApErrorRecord>,
    pi_x: u64,
    log_x: f64,
) -> CensusReport {
    let members: Vec<MemberRecord> = family
        .members
        .iter()
        .map(|profile| {
            let rec = &f_star[&profile.s];
            let threshold = pi_x as f64 / (profile.totient as f64 * log_x.powf(a_param));
            MemberRecord {
                s: profile.s,
                q: profile.radical,
                phi_s: profile.totient,
                best_a: rec.best_residue,
                best_y: rec.best_y,
                f_star: rec.value,
                threshold,
                exceptional: u8::from(rec.value > threshold),
            }
        })
        .collect();
    let exceptional_count = members.iter().filter(|m| m.exceptional == 1).count();

    let radical_records: Vec<RadicalRecord> = radicals
        .iter()
        .map(|&q| {
            let rec = &f_star[&q];
            let phi_q = crate::arith::ModulusProfile::new(q).expect("radical profile").totient;
            let thr = |exp: f64| pi_x as f64 / (phi_q as f64 * log_x.powf(exp));
            RadicalRecord {
                q,
                f_star_q: rec.value,
                kept_exponent_a2: rec.value <= thr(a_param + 2.0),
                kept_exponent_a1: rec.value <= thr(a_param + 1.0),
            }
        })
        .collect();
    let discarded_a2 = radical_records.iter().filter(|r| !r.kept_exponent_a2).count();
    let discarded_a1 = radical_records.iter().filter(|r| !r.kept_exponent_a1).count();

    let q_lower = family.q_lower;
    let bounds = PaperBounds {
        baker_l_34_plus_a: log_x.powf(34.0 + a_param),
        prime_power_l_14_plus_2a: log_x.powf(14.0 + 2.0 * a_param),
        combined: log_x.powf(36.0 + a_param)
            + log_x.powf(14.0 + 2.0 * a_param) * (1.0 + q_lower * q_lower / x.sqrt()),
    };

    CensusReport {
        x,
        a_param,
        q_lower,
        family_kind: family.kind_name().to_string(),
        log_x,
        pi_x,
        threshold_description: format!(
            "pi(x)/(phi(s) * (log x)^{a_param}) with pi(x) = {pi_x}, log x = {log_x}"
        ),
        exceptional_count,
        total_count: members.len(),
        ratio_vs_l_14_plus_2a: exceptional_count as f64 / bounds.prime_power_l_14_plus_2a,
        ratio_vs_combined: exceptional_count as f64 / bounds.combined,
        paper_bounds: bounds,
        warning: family.warning.clone(),
        radicals: RadicalSummary {
            total: radical_records.len(),
            discarded_exponent_a2: discarded_a2,
            discarded_exponent_a1: discarded_a1,
            discard_bound: log_x.powf(36.0 + a_param),
            exponent_note:
                "the averaged bound's 2B exponent is read both as 2(A+1) and 2(A+2); both classifications reported",
            records: radical_records,
        },
        members,
    }
}
