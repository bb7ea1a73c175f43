//! bvlab: build prime caches, run the exceptional-moduli census, drive the
//! verification suites and the dispersion / Perron / large-sieve demos.
//!
//! Exit codes: 0 = all hard assertions pass, 1 = assertion failure,
//! 2 = usage error, 3 = resource/IO error.

use bvlab_core::analytic::{append_jsonl, large_sieve_sides};
use bvlab_core::arith::ModulusProfile;
use bvlab_core::bilinear::{
    averaged_square_sum, dispersion_decompose, perron_block, BilinearConfig, CoeffGen, CoeffKind,
};
use bvlab_core::error::Error as CoreError;
use bvlab_core::lab::{ensure_store, run_census, ExperimentConfig, FamilySpec};
use bvlab_core::prime::{self, PrimeStore};
use bvlab_core::verify;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bvlab", version, about = "prime-counting error terms over sparse moduli")]
struct Cli {
    /// Parallelism degree: 0 = all cores, 1 = sequential, n = pool size.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prime cache management.
    Sieve {
        #[command(subcommand)]
        action: SieveCmd,
    },
    /// Exceptional-moduli census.
    Census {
        #[command(subcommand)]
        action: CensusCmd,
    },
    /// Run a verification suite: buchstab | dispersion | orthogonality |
    /// large-sieve | perron | spi | all.
    Verify(VerifyArgs),
    /// Dispersion decomposition demos.
    Dispersion {
        #[command(subcommand)]
        action: DispersionCmd,
    },
    /// Truncated Perron demos.
    Perron {
        #[command(subcommand)]
        action: PerronCmd,
    },
    /// Large sieve inequality demos.
    LargeSieve {
        #[command(subcommand)]
        action: LargeSieveCmd,
    },
}

#[derive(Subcommand)]
enum SieveCmd {
    /// Build the prime cache up to --limit and save it.
    Build {
        #[arg(long, default_value_t = 1e6)]
        limit: f64,
        #[arg(long, default_value_t = prime::DEFAULT_SEGMENT_SIZE)]
        segment_size: u64,
        /// Cache file (default: $BVLAB_CACHE or primes.bvpc).
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Print header information of an existing cache.
    Info {
        #[arg(long)]
        cache: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CensusCmd {
    /// Run the census over the A-grid and emit CSV/JSON reports.
    Run(CensusArgs),
}

#[derive(Args)]
struct CensusArgs {
    /// Flat key = value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long, short = 'q')]
    q_lower: Option<f64>,
    /// Comma-separated threshold exponents, e.g. "0,1,2,4".
    #[arg(long)]
    a_grid: Option<String>,
    /// prime-powers | coprime-radical | explicit
    #[arg(long)]
    family: Option<String>,
    /// Prime bound exponent C (prime-powers family: p ≤ (log x)^C).
    #[arg(long)]
    c_exponent: Option<f64>,
    /// Radical bound exponent (coprime-radical family: rad(s) ≤ x^exp).
    #[arg(long)]
    radical_exponent: Option<f64>,
    /// Comma-separated members for the explicit family.
    #[arg(long)]
    members: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name or "all".
    suite: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Prime store limit for the suites that walk primes.
    #[arg(long, default_value_t = 1e5)]
    limit: f64,
    /// Directory for machine-readable suite reports (JSON lines).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DispersionCmd {
    /// One dispersion instance with the full Σ₁..Σ₄ breakdown.
    Demo {
        #[arg(long, default_value_t = 1e4)]
        x: f64,
        #[arg(long, default_value_t = 25)]
        s: u64,
        #[arg(long, default_value_t = 2)]
        e: u64,
        /// Block start K (default x^{1/3}).
        #[arg(long)]
        k: Option<f64>,
        /// Imaginary part of z (real part is 1/log L).
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PerronCmd {
    /// Perron split of one dyadic block: direct vs contour, majorants.
    Demo {
        #[arg(long, default_value_t = 1e3)]
        x: f64,
        #[arg(long, default_value_t = 25)]
        s: u64,
        #[arg(long, default_value_t = 2)]
        e: u64,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LargeSieveCmd {
    /// A batch of random large-sieve trials; prints the worst ratio.
    Demo {
        #[arg(long, default_value_t = 10)]
        q_max: u64,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    bvlab_core::exec::set_parallelism(cli.threads);
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &CoreError) -> u8 {
    match e {
        CoreError::Domain(_) | CoreError::NotInvertible { .. } => 2,
        CoreError::Io { .. }
        | CoreError::Resource(_)
        | CoreError::Format { .. }
        | CoreError::CacheMismatch { .. } => 3,
        CoreError::OutOfRange { .. } | CoreError::Numerical(_) => 3,
    }
}

fn cache_path(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var("BVLAB_CACHE").ok().filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("primes.bvpc"))
}

fn run(command: Command) -> Result<ExitCode, CoreError> {
    match command {
        Command::Sieve { action } => sieve(action),
        Command::Census { action } => census(action),
        Command::Verify(args) => run_verify(args),
        Command::Dispersion { action } => dispersion_demo(action),
        Command::Perron { action } => perron_demo(action),
        Command::LargeSieve { action } => large_sieve_demo(action),
    }
}

fn sieve(action: SieveCmd) -> Result<ExitCode, CoreError> {
    match action {
        SieveCmd::Build {
            limit,
            segment_size,
            cache,
        } => {
            let path = cache_path(cache);
            let store = prime::build_prime_store(limit.ceil() as u64, segment_size)?;
            prime::save_cache(&store, &path)?;
            println!(
                "built prime cache: limit {}, {} primes, saved to {}",
                store.limit(),
                store.len(),
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        SieveCmd::Info { cache } => {
            let path = cache_path(cache);
            let store = prime::load_cache(&path)?;
            println!("cache: {}", path.display());
            println!("limit: {}", store.limit());
            println!("count: {}", store.len());
            if let (Some(first), Some(last)) = (store.primes().first(), store.primes().last()) {
                println!("first: {first}");
                println!("last:  {last}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn census(action: CensusCmd) -> Result<ExitCode, CoreError> {
    let CensusCmd::Run(args) = action;
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(x) = args.x {
        config.x = x;
    }
    if let Some(q) = args.q_lower {
        config.q_lower = q;
    }
    if let Some(grid) = &args.a_grid {
        config.a_grid = grid
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| CoreError::Domain(format!("bad A value '{t}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(eps) = args.epsilon {
        config.epsilon = eps;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if args.cache.is_some() {
        config.cache_path = args.cache;
    }
    if let Some(kind) = &args.family {
        config.family = match kind.as_str() {
            "prime-powers" => FamilySpec::PrimePowers {
                c_exponent: args.c_exponent.unwrap_or(6.0),
            },
            "coprime-radical" => FamilySpec::CoprimeRadical {
                radical_exponent: args.radical_exponent.unwrap_or(9.0 / 40.0),
            },
            "explicit" => {
                let members = args
                    .members
                    .as_deref()
                    .unwrap_or("")
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        t.trim()
                            .parse::<u64>()
                            .map_err(|_| CoreError::Domain(format!("bad member '{t}'")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                FamilySpec::Explicit { members }
            }
            other => {
                return Err(CoreError::Domain(format!(
                    "unknown family '{other}' (prime-powers | coprime-radical | explicit)"
                )))
            }
        };
    } else {
        // bound overrides without a kind switch
        match (&mut config.family, args.c_exponent, args.radical_exponent) {
            (FamilySpec::PrimePowers { c_exponent }, Some(c), _) => *c_exponent = c,
            (FamilySpec::CoprimeRadical { radical_exponent }, _, Some(r)) => {
                *radical_exponent = r
            }
            _ => {}
        }
    }

    let store = ensure_store(&config)?;
    let summary = run_census(&config, &store)?;
    print!("{}", summary.render_table());
    println!(
        "reports written under {} (summary.csv, summary.json)",
        config.output_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode, CoreError> {
    let store = PrimeStore::build(args.limit.ceil() as u64)?;
    let reports = if args.suite == "all" {
        verify::run_all(&store, args.seed)?
    } else {
        vec![verify::run_suite(&args.suite, &store, args.seed)?]
    };
    let mut all_passed = true;
    for r in &reports {
        println!(
            "{}: {} ({} trials, max deviation {:.3e}, {} ms)",
            r.suite,
            if r.passed { "PASS" } else { "FAIL" },
            r.trials,
            r.max_deviation,
            r.elapsed_ms
        );
        for note in &r.notes {
            println!("  note: {note}");
        }
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
        let path = dir.join("verify.jsonl");
        append_jsonl(&path, &reports)?;
        println!("machine-readable report appended to {}", path.display());
    }
    for r in &reports {
        all_passed &= r.passed;
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn dispersion_demo(action: DispersionCmd) -> Result<ExitCode, CoreError> {
    let DispersionCmd::Demo {
        x,
        s,
        e,
        k,
        t,
        seed,
        out,
    } = action;
    let profile = ModulusProfile::new(s)?;
    let q = profile.radical;
    let cfg = BilinearConfig::new(x, x, profile, e)?;
    let k = k.unwrap_or_else(|| x.powf(1.0 / 3.0));
    let l = x / k;
    let z = Complex64::new(1.0 / l.ln().max(1.0), t);
    let b = CoeffGen::new(seed, 2, CoeffKind::Real);
    let breakdown = dispersion_decompose(&cfg, k, z, &b)?;
    let a = CoeffGen::new(seed, 1, CoeffKind::Real);
    let bounds = averaged_square_sum(std::slice::from_ref(&cfg), s as f64 - 1.0, k, &a, &b)?;

    println!("dispersion demo: x = {x}, s = {s}, q = {q}, K = {k}, z = {z}");
    println!("  sigma'  = {:.12e}", breakdown.sigma_prime);
    println!("  sigma1  = {}", breakdown.sigma1);
    println!("  sigma2  = {}", breakdown.sigma2);
    println!("  sigma3  = {}", breakdown.sigma3);
    println!("  sigma4  = {}", breakdown.sigma4);
    println!(
        "  residual = {:.3e} (relative {:.3e})",
        breakdown.residual,
        breakdown.residual / (1.0 + breakdown.sigma_prime)
    );
    println!("  character form = {:.12e}", breakdown.character_form);
    println!("  character gap  = {:.3e}", breakdown.character_gap);
    println!("  |Σ(K)|² vs bound1/bound2 ratios: {:.3e} (selected {:.3e})",
        bounds.ratio_selected,
        bounds.selected_bound,
    );

    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|e2| CoreError::io(&dir, e2))?;
        #[derive(serde::Serialize)]
        struct Diagnostic<'a> {
            x: f64,
            s: u64,
            q: u64,
            #[serde(flatten)]
            breakdown: &'a bvlab_core::bilinear::DispersionBreakdown,
            bound1: f64,
            bound2: f64,
            ratio_selected: f64,
        }
        let path = dir.join("dispersion.jsonl");
        append_jsonl(
            &path,
            &[Diagnostic {
                x,
                s,
                q,
                breakdown: &breakdown,
                bound1: bounds.bound1,
                bound2: bounds.bound2,
                ratio_selected: bounds.ratio_selected,
            }],
        )?;
        println!("diagnostic appended to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn perron_demo(action: PerronCmd) -> Result<ExitCode, CoreError> {
    let PerronCmd::Demo { x, s, e, k, seed, out } = action;
    let profile = ModulusProfile::new(s)?;
    let cfg = BilinearConfig::new(x, x, profile, e)?;
    let k = k.unwrap_or_else(|| x.powf(1.0 / 3.0));
    let a = CoeffGen::new(seed, 1, CoeffKind::Real);
    let b = CoeffGen::new(seed, 2, CoeffKind::Real);
    let report = perron_block(&cfg, k, &a, &b, 1e-8)?;
    println!("perron block demo: x = {x}, s = {s}, K = {k}");
    println!("  K' = {}", report.k_prime);
    println!("  direct  = {}", report.direct);
    println!("  contour = {}", report.contour);
    println!("  |direct - contour| = {:.6e} (O(K) budget: {})", report.error, report.paper_budget);
    println!("  c = {:.6}, T = {:.3}", report.c, report.t_max);
    println!("  square integral = {:.6e}", report.square_integral);
    println!("  majorant (paper weight) = {:.6e}", report.majorant_paper);
    println!("  |direct|²/majorant = {:.6e}", report.ratio);
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|e2| CoreError::io(&dir, e2))?;
        let path = dir.join("perron.jsonl");
        append_jsonl(&path, &[&report])?;
        println!("diagnostic appended to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn large_sieve_demo(action: LargeSieveCmd) -> Result<ExitCode, CoreError> {
    let LargeSieveCmd::Demo {
        q_max,
        n,
        trials,
        seed,
        out,
    } = action;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::with_capacity(trials);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let coeffs: Vec<Complex64> = (0..n)
            .map(|_| {
                let r: f64 = rng.gen_range(0.0..=1.0);
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                Complex64::new(r * th.cos(), r * th.sin())
            })
            .collect();
        let m = rng.gen_range(-50..=500i64);
        let trial = large_sieve_sides(q_max, m, &coeffs)?;
        worst = worst.max(trial.ratio);
        results.push(trial);
    }
    println!(
        "large sieve demo: Q = {q_max}, N = {n}, {trials} trials, worst lhs/rhs = {worst:.6}"
    );
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|e2| CoreError::io(&dir, e2))?;
        let path = dir.join("large_sieve.jsonl");
        append_jsonl(&path, &results)?;
        println!("trials appended to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
