//! Experiment orchestration: configuration, prime-cache management, census
//! runs with CSV/JSON emission, and the regime checks for each grid point.

use crate::apstats::{census_with_context, ApContext, CensusReport, FamilyKind, ModuliFamily};
use crate::error::{Error, Result};
use crate::prime::{self, PrimeStore};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Which family the census runs over, with its bound parameters.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// prime bound 𝓛^C
    PrimePowers { c_exponent: f64 },
    /// radical bound x^exponent (default 9/40)
    CoprimeRadical { radical_exponent: f64 },
    Explicit { members: Vec<u64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub x: f64,
    pub q_lower: f64,
    pub a_grid: Vec<f64>,
    pub epsilon: f64,
    pub family: FamilySpec,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub cache_path: Option<PathBuf>,
    /// 0 = library default; 1 = sequential; n > 1 sizes the pool.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            x: 1e6,
            q_lower: 1e3,
            a_grid: vec![0.0, 1.0, 2.0],
            epsilon: 0.05,
            family: FamilySpec::PrimePowers { c_exponent: 6.0 },
            seed: 1,
            output_dir: PathBuf::from("out"),
            cache_path: None,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    /// Read a flat key = value file (# starts a comment). Unknown keys are
    /// rejected so typos do not silently fall back to defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        let mut family_kind = String::from("prime-powers");
        let mut c_exponent = 6.0f64;
        let mut radical_exponent = 9.0 / 40.0;
        let mut members: Vec<u64> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Domain(format!("config line {} has no '=': {raw}", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_f64 = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| Error::Domain(format!("bad number '{v}' for key {key}")))
            };
            match key {
                "x" => cfg.x = parse_f64(value)?,
                "Q" | "q" => cfg.q_lower = parse_f64(value)?,
                "A_grid" | "a_grid" => {
                    cfg.a_grid = value
                        .split(',')
                        .map(|t| parse_f64(t.trim()))
                        .collect::<Result<Vec<_>>>()?;
                }
                "epsilon" => cfg.epsilon = parse_f64(value)?,
                "family" => family_kind = value.to_string(),
                "C" | "c_exponent" => c_exponent = parse_f64(value)?,
                "radical_exponent" => radical_exponent = parse_f64(value)?,
                "members" => {
                    members = value
                        .split(',')
                        .map(|t| {
                            t.trim().parse::<u64>().map_err(|_| {
                                Error::Domain(format!("bad member '{t}' in config"))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                }
                "seed" => {
                    cfg.seed = value
                        .parse::<u64>()
                        .map_err(|_| Error::Domain(format!("bad seed '{value}'")))?;
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "cache" | "cache_path" => cfg.cache_path = Some(PathBuf::from(value)),
                "threads" => {
                    cfg.threads = value
                        .parse::<usize>()
                        .map_err(|_| Error::Domain(format!("bad thread count '{value}'")))?;
                }
                other => {
                    return Err(Error::Domain(format!("unknown config key '{other}'")));
                }
            }
        }
        cfg.family = match family_kind.as_str() {
            "prime-powers" => FamilySpec::PrimePowers { c_exponent },
            "coprime-radical" => FamilySpec::CoprimeRadical { radical_exponent },
            "explicit" | "explicit-list" => FamilySpec::Explicit { members },
            other => {
                return Err(Error::Domain(format!(
                    "unknown family '{other}' (prime-powers | coprime-radical | explicit)"
                )))
            }
        };
        Ok(cfg)
    }

    /// Where the prime cache lives: explicit config, else BVLAB_CACHE,
    /// else primes.bvpc under the output directory.
    pub fn resolved_cache_path(&self) -> PathBuf {
        if let Some(p) = &self.cache_path {
            return p.clone();
        }
        if let Ok(env) = std::env::var("BVLAB_CACHE") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        self.output_dir.join("primes.bvpc")
    }
}

/// Load the prime cache if it covers the limit, else build and save it.
pub fn ensure_store(config: &ExperimentConfig) -> Result<PrimeStore> {
    let limit = config.x.ceil() as u64;
    let path = config.resolved_cache_path();
    if path.exists() {
        match prime::load_cache(&path) {
            Ok(store) if store.limit() >= limit => return Ok(store),
            Ok(store) => {
                eprintln!(
                    "cache at {} covers {} < {}; rebuilding",
                    path.display(),
                    store.limit(),
                    limit
                );
            }
            Err(e) => {
                eprintln!("cache at {} unreadable ({e}); rebuilding", path.display());
            }
        }
    }
    let store = PrimeStore::build(limit)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    prime::save_cache(&store, &path)?;
    Ok(store)
}

/// The theorem-regime checks for one grid point A, reported never enforced.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeCheck {
    pub a_param: f64,
    /// Q ≥ x^ε
    pub q_above_x_epsilon: bool,
    /// Q ≤ x^{1/3}·𝓛^{−15−2A}
    pub q_below_main_cap: bool,
    pub main_cap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub a_param: f64,
    pub exceptional: usize,
    pub total: usize,
    pub ratio_vs_l_14_plus_2a: f64,
    pub ratio_vs_combined: f64,
    pub radical_discarded_a2: usize,
    pub radical_discarded_a1: usize,
    pub regime: RegimeCheck,
    /// file names under the output directory
    pub csv_file: String,
    pub json_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusRunSummary {
    pub x: f64,
    pub q_lower: f64,
    pub family_kind: String,
    pub family_size: usize,
    pub epsilon: f64,
    pub warning: Option<String>,
    pub rows: Vec<SummaryRow>,
}

impl CensusRunSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "A,exceptional,total,ratio_vs_L14_2A,ratio_vs_combined,radical_discarded_A2,radical_discarded_A1,regime_ok\n",
        );
        for r in &self.rows {
            let regime_ok = r.regime.q_above_x_epsilon && r.regime.q_below_main_cap;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.a_param,
                r.exceptional,
                r.total,
                r.ratio_vs_l_14_plus_2a,
                r.ratio_vs_combined,
                r.radical_discarded_a2,
                r.radical_discarded_a1,
                u8::from(regime_ok)
            )
            .unwrap();
        }
        out
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "census: x = {}, Q = {}, family = {} ({} members)",
            self.x, self.q_lower, self.family_kind, self.family_size
        )
        .unwrap();
        if let Some(w) = &self.warning {
            writeln!(out, "warning: {w}").unwrap();
        }
        writeln!(
            out,
            "{:>6} {:>12} {:>8} {:>14} {:>14} {:>10}",
            "A", "exceptional", "total", "vs L^(14+2A)", "vs combined", "regime"
        )
        .unwrap();
        for r in &self.rows {
            let regime_ok = r.regime.q_above_x_epsilon && r.regime.q_below_main_cap;
            writeln!(
                out,
                "{:>6} {:>12} {:>8} {:>14.6e} {:>14.6e} {:>10}",
                r.a_param,
                r.exceptional,
                r.total,
                r.ratio_vs_l_14_plus_2a,
                r.ratio_vs_combined,
                if regime_ok { "ok" } else { "outside" }
            )
            .unwrap();
        }
        out
    }
}

pub fn build_family(config: &ExperimentConfig, store: &PrimeStore) -> Result<ModuliFamily> {
    let log_x = config.x.ln();
    match &config.family {
        FamilySpec::PrimePowers { c_exponent } => crate::apstats::generate_family(
            store,
            config.q_lower,
            FamilyKind::PrimePowers {
                prime_bound: log_x.powf(*c_exponent),
            },
        ),
        FamilySpec::CoprimeRadical { radical_exponent } => crate::apstats::generate_family(
            store,
            config.q_lower,
            FamilyKind::CoprimeRadicalBounded {
                radical_bound: config.x.powf(*radical_exponent),
            },
        ),
        FamilySpec::Explicit { members } => {
            crate::apstats::family::family_from_list(config.q_lower, members)
        }
    }
}

/// Run the census over the A-grid and write one CSV + JSON per grid point,
/// plus summary.csv / summary.json. Outputs are byte-identical across
/// reruns and parallelism degrees.
pub fn run_census(config: &ExperimentConfig, store: &PrimeStore) -> Result<CensusRunSummary> {
    if config.x > store.limit() as f64 {
        return Err(Error::OutOfRange {
            what: "census x",
            value: config.x,
            limit: store.limit() as f64,
        });
    }
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::io(&config.output_dir, e))?;
    let family = build_family(config, store)?;
    let ctx = ApContext::new(store);
    let reports = census_with_context(&ctx, config.x, &family, &config.a_grid)?;

    let log_x = config.x.ln();
    let mut rows = Vec::with_capacity(reports.len());
    for report in &reports {
        let (csv_file, json_file) = write_report_files(config, report)?;
        let main_cap = config.x.powf(1.0 / 3.0) * log_x.powf(-15.0 - 2.0 * report.a_param);
        rows.push(SummaryRow {
            a_param: report.a_param,
            exceptional: report.exceptional_count,
            total: report.total_count,
            ratio_vs_l_14_plus_2a: report.ratio_vs_l_14_plus_2a,
            ratio_vs_combined: report.ratio_vs_combined,
            radical_discarded_a2: report.radicals.discarded_exponent_a2,
            radical_discarded_a1: report.radicals.discarded_exponent_a1,
            regime: RegimeCheck {
                a_param: report.a_param,
                q_above_x_epsilon: config.q_lower >= config.x.powf(config.epsilon),
                q_below_main_cap: config.q_lower <= main_cap,
                main_cap,
            },
            csv_file,
            json_file,
        });
    }
    let summary = CensusRunSummary {
        x: config.x,
        q_lower: config.q_lower,
        family_kind: family.kind_name().to_string(),
        family_size: family.len(),
        epsilon: config.epsilon,
        warning: family.warning.clone(),
        rows,
    };
    let sum_csv = config.output_dir.join("summary.csv");
    std::fs::write(&sum_csv, summary.to_csv()).map_err(|e| Error::io(&sum_csv, e))?;
    let sum_json = config.output_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Numerical(format!("summary serialization: {e}")))?;
    std::fs::write(&sum_json, json + "\n").map_err(|e| Error::io(&sum_json, e))?;
    Ok(summary)
}

fn write_report_files(config: &ExperimentConfig, report: &CensusReport) -> Result<(String, String)> {
    let tag = format!("{}_A{}", report.family_kind, report.a_param);
    let csv_name = format!("census_{tag}.csv");
    let csv_path = config.output_dir.join(&csv_name);
    std::fs::write(&csv_path, report.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
    let json_name = format!("census_{tag}.json");
    let json_path = config.output_dir.join(&json_name);
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Numerical(format!("census serialization: {e}")))?;
    std::fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;
    Ok((csv_name, json_name))
}

/// Grid-point map A ↦ exceptional count, handy for monotonicity checks.
pub fn exceptional_counts(summary: &CensusRunSummary) -> BTreeMap<String, usize> {
    summary
        .rows
        .iter()
        .map(|r| (format!("{}", r.a_param), r.exceptional))
        .collect()
}
