//! Numerical checkers for the two imported inequalities: the large sieve
//! for Dirichlet characters (a true theorem, asserted hard) and the
//! truncated Perron formula (whose O-constant is implicit; checked against
//! a documented calibration envelope, default 10).

use crate::bilinear::KahanComplex;
use crate::characters::CharacterGroup;
use crate::error::{Error, Result};
use crate::quadrature::integrate_vertical;
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Both sides of the large sieve inequality for one coefficient vector.
#[derive(Debug, Clone, Serialize)]
pub struct LargeSieveTrial {
    /// Q: conductors run over q ≤ Q.
    pub q_max: u64,
    /// M: the window is (M, M+N].
    pub m_offset: i64,
    /// N: window length.
    pub n_len: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// lhs/rhs when rhs > 0, else 0. Always in [0, 1] up to float slack.
    pub ratio: f64,
}

/// Σ_{q≤Q} (q/φ(q)) Σ*_{χ mod q} |Σ_{M<n≤M+N} a_n χ(n)|²  vs
/// (Q² + N − 1)·Σ |a_n|². The coefficient slice holds a_{M+1} ... a_{M+N}.
pub fn large_sieve_sides(
    q_max: u64,
    m_offset: i64,
    coefficients: &[Complex64],
) -> Result<LargeSieveTrial> {
    if q_max == 0 || coefficients.is_empty() {
        return Err(Error::Domain("large sieve needs Q >= 1 and N >= 1".into()));
    }
    let n_len = coefficients.len() as u64;
    let mut lhs = 0.0f64;
    for q in 1..=q_max {
        let group = CharacterGroup::new(q)?;
        let phi = group.len() as f64;
        let weight = q as f64 / phi;
        for chi in group.characters() {
            if !chi.is_primitive() {
                continue;
            }
            let mut inner = KahanComplex::default();
            for (j, a) in coefficients.iter().enumerate() {
                let n = m_offset + 1 + j as i64;
                let residue = n.rem_euclid(q as i64) as u64;
                inner.add(a * chi.eval_complex(residue));
            }
            lhs += weight * inner.value().norm_sqr();
        }
    }
    let norm: f64 = coefficients.iter().map(|a| a.norm_sqr()).sum();
    let rhs = ((q_max * q_max + n_len - 1) as f64) * norm;
    Ok(LargeSieveTrial {
        q_max,
        m_offset,
        n_len,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

/// One truncated-Perron comparison for a finite-support Dirichlet series.
#[derive(Debug, Clone, Serialize)]
pub struct PerronTrial {
    /// N (non-integer by default to keep the boundary term unambiguous).
    pub n_cap: f64,
    pub c: f64,
    pub t_max: f64,
    pub direct: Complex64,
    pub contour: Complex64,
    pub deviation: f64,
    /// N^c/T·Σ|c_n|n^{−c} + C_N·(1 + N·log N/T)
    pub budget: f64,
    /// C_N = max_{3N/4 ≤ n ≤ 5N/4} |c_n|
    pub c_near_n: f64,
    pub calibration: f64,
    pub within_budget: bool,
}

/// Evaluate Σ_{n≤N} c_n both directly and through the truncated contour
/// integral (1/2πi)∫_{c−iT}^{c+iT} D(z)·N^z dz/z with D exact (finite
/// support), and compare against the truncation budget.
pub fn perron_truncated(
    coeffs: &[(u64, Complex64)],
    n_cap: f64,
    c: f64,
    t_max: f64,
    calibration: f64,
) -> Result<PerronTrial> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("Perron needs c > 0, got {c}")));
    }
    if !(n_cap >= 2.0 && t_max >= 2.0) {
        return Err(Error::Domain(format!(
            "Perron needs N >= 2 and T >= 2, got N={n_cap}, T={t_max}"
        )));
    }
    for &(n, _) in coeffs {
        if n == 0 {
            return Err(Error::Domain("Dirichlet coefficients start at n = 1".into()));
        }
    }

    let mut direct = KahanComplex::default();
    for &(n, v) in coeffs {
        if (n as f64) <= n_cap {
            direct.add(v);
        }
    }
    let direct = direct.value();

    let abs_sum: f64 = coeffs.iter().map(|&(_, v)| v.norm()).sum();
    if abs_sum == 0.0 {
        return Ok(PerronTrial {
            n_cap,
            c,
            t_max,
            direct,
            contour: Complex64::new(0.0, 0.0),
            deviation: direct.norm(),
            budget: 0.0,
            c_near_n: 0.0,
            calibration,
            within_budget: direct.norm() == 0.0,
        });
    }

    let weighted: f64 = coeffs
        .iter()
        .map(|&(n, v)| v.norm() * (n as f64).powf(-c))
        .sum();
    let c_near_n = coeffs
        .iter()
        .filter(|&&(n, _)| {
            let nf = n as f64;
            nf >= 0.75 * n_cap && nf <= 1.25 * n_cap
        })
        .map(|&(_, v)| v.norm())
        .fold(0.0f64, f64::max);
    let budget =
        n_cap.powf(c) / t_max * weighted + c_near_n * (1.0 + n_cap * n_cap.ln() / t_max);

    // terms (log(N/n), c_n): integrand Σ c_n·(N/n)^z / z
    let terms: Vec<(f64, Complex64)> = coeffs
        .iter()
        .map(|&(n, v)| ((n_cap / n as f64).ln(), v))
        .collect();
    let integrand = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(lu, w) in &terms {
            acc += w * (z * lu).exp();
        }
        acc / z
    };
    let osc = terms.iter().map(|&(lu, _)| lu.abs()).fold(0.0f64, f64::max);
    let scale = abs_sum * n_cap.powf(c);
    let tol = (calibration.max(1.0) * budget * 1e-3)
        .clamp(1e-13 * scale.max(1.0), 1e-6 * scale.max(1.0));
    let contour = integrate_vertical(&integrand, c, t_max, osc, tol)?
        / (2.0 * std::f64::consts::PI);

    let deviation = (direct - contour).norm();
    Ok(PerronTrial {
        n_cap,
        c,
        t_max,
        direct,
        contour,
        deviation,
        budget,
        c_near_n,
        calibration,
        within_budget: deviation <= calibration * budget,
    })
}

/// Append records to a JSON-lines log, one object per line.
pub fn append_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| Error::Numerical(format!("jsonl serialization failed: {e}")))?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gl24, gl_panel};

    #[test]
    fn large_sieve_equality_case() {
        // Q = 1, a ≡ 1 on (0, N]: lhs = N², rhs = (1 + N − 1)·N = N²
        for n in [1usize, 5, 50] {
            let a = vec![Complex64::new(1.0, 0.0); n];
            let t = large_sieve_sides(1, 0, &a).unwrap();
            assert!((t.lhs - (n * n) as f64).abs() < 1e-9 * (n * n) as f64 + 1e-12);
            assert!((t.rhs - (n * n) as f64).abs() < 1e-12 * (n * n) as f64 + 1e-12);
            assert!((t.ratio - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn large_sieve_zero_coefficients() {
        let a = vec![Complex64::new(0.0, 0.0); 10];
        let t = large_sieve_sides(5, 3, &a).unwrap();
        assert_eq!(t.lhs, 0.0);
        assert_eq!(t.rhs, 0.0);
        assert_eq!(t.ratio, 0.0);
    }

    #[test]
    fn large_sieve_random_trials_bounded() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..40 {
            let q_max = rng.gen_range(1..=15u64);
            let n = rng.gen_range(1..=80usize);
            let m = rng.gen_range(-30..=100i64);
            let a: Vec<Complex64> = (0..n)
                .map(|_| {
                    let r: f64 = rng.gen_range(0.0..1.0);
                    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    Complex64::new(r * th.cos(), r * th.sin())
                })
                .collect();
            let t = large_sieve_sides(q_max, m, &a).unwrap();
            assert!(
                t.lhs <= t.rhs * (1.0 + 1e-9),
                "large sieve violated: {} > {}",
                t.lhs,
                t.rhs
            );
        }
    }

    #[test]
    fn large_sieve_invariant_under_unimodular_twist() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let a: Vec<Complex64> = (0..40)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let twist = Complex64::new(0.6, 0.8); // |twist| = 1
        let twisted: Vec<Complex64> = a.iter().map(|v| v * twist).collect();
        let t1 = large_sieve_sides(8, 2, &a).unwrap();
        let t2 = large_sieve_sides(8, 2, &twisted).unwrap();
        assert!((t1.lhs - t2.lhs).abs() <= 1e-9 * (1.0 + t1.lhs));
    }

    #[test]
    fn perron_point_mass_at_one() {
        let coeffs = vec![(1u64, Complex64::new(1.0, 0.0))];
        let t = perron_truncated(&coeffs, 2.5, 0.5, 100.0, 1.0).unwrap();
        assert_eq!(t.direct, Complex64::new(1.0, 0.0));
        assert!(t.c_near_n == 0.0);
        assert!(
            t.deviation <= t.budget,
            "deviation {} exceeds unit budget {}",
            t.deviation,
            t.budget
        );

        // independent oracle: composite GL-24 on a fixed fine grid
        let f = |tv: f64| {
            let z = Complex64::new(0.5, tv);
            ((z * 2.5f64.ln()).exp() / z).re
        };
        let mut oracle = 0.0;
        let panels = 40_000;
        for i in 0..panels {
            let a = -100.0 + 200.0 * i as f64 / panels as f64;
            let b = -100.0 + 200.0 * (i + 1) as f64 / panels as f64;
            oracle += gl_panel(gl24(), f, a, b);
        }
        oracle /= 2.0 * std::f64::consts::PI;
        assert!(
            (t.contour.re - oracle).abs() < 1e-8,
            "contour {} vs oracle {oracle}",
            t.contour.re
        );
    }

    #[test]
    fn perron_zero_coefficients() {
        let t = perron_truncated(&[], 5.5, 0.3, 10.0, 10.0).unwrap();
        assert_eq!(t.direct, Complex64::new(0.0, 0.0));
        assert_eq!(t.contour, Complex64::new(0.0, 0.0));
        assert!(t.within_budget);
    }

    #[test]
    fn perron_paper_shaped_parameters() {
        // c_n = 1 for n ≤ 20, N = 10.5, c = 1/log 20, T = 20·log 20
        let coeffs: Vec<(u64, Complex64)> =
            (1..=20).map(|n| (n, Complex64::new(1.0, 0.0))).collect();
        let l = 20.0f64;
        let t = perron_truncated(&coeffs, 10.5, 1.0 / l.ln(), l * l.ln(), 10.0).unwrap();
        assert_eq!(t.direct, Complex64::new(10.0, 0.0));
        assert!(
            t.deviation <= 10.0 * t.budget,
            "deviation {} vs 10×budget {}",
            t.deviation,
            10.0 * t.budget
        );
        assert!(t.within_budget);
    }

    #[test]
    fn perron_preconditions() {
        let coeffs = vec![(1u64, Complex64::new(1.0, 0.0))];
        assert!(perron_truncated(&coeffs, 1.5, 0.5, 10.0, 1.0).is_err());
        assert!(perron_truncated(&coeffs, 2.5, 0.0, 10.0, 1.0).is_err());
        assert!(perron_truncated(&coeffs, 2.5, 0.5, 1.0, 1.0).is_err());
        assert!(perron_truncated(&[(0, Complex64::new(1.0, 0.0))], 2.5, 0.5, 10.0, 1.0).is_err());
    }
}
