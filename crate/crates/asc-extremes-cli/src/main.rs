//! `asc-extremes`: reproducible experiment runner and limit-law calculator.
//!
//! Subcommands:
//! * `run` — seeded path averages of the top-k indicator (or a bounded
//!   test function), one CSV per seed plus a JSON manifest.
//! * `limit` — evaluate a joint or subset-marginal limit probability.
//! * `check-weights` — finite-range admissibility diagnostics for a
//!   weight scheme.
//! * `lemma` — Monte Carlo checks of the segment-coupling bounds.
//!
//! Exit codes: 0 success, 1 runtime error, 2 flag validation error,
//! 3 diagnostic failure (a weight scheme or a bound check that fails).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use asc_extremes::{
    format_significant, lemma1_gap, lemma2_cov, lemma3_gap, run_functional_path, run_path,
    subset_marginal, ConvergenceSeries, ExperimentConfig, LevelVector, LimitFamily, Mode,
    SampleModel, TestFunction, WeightScheme,
};

const EXIT_RUNTIME: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DIAGNOSTIC: u8 = 3;

#[derive(Parser)]
#[command(name = "asc-extremes", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded sample paths and write one convergence CSV per seed.
    Run(RunArgs),
    /// Print a joint or subset-marginal limit probability.
    Limit(LimitArgs),
    /// Scan a weight scheme for the admissibility conditions.
    CheckWeights(CheckWeightsArgs),
    /// Check one of the three segment-coupling bounds by Monte Carlo.
    Lemma(LemmaArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Parent distribution: exp | pareto:ALPHA | uniform
    #[arg(long)]
    model: String,
    /// Number of tracked order statistics (1..=64)
    #[arg(long)]
    k: usize,
    /// Comma-separated strictly decreasing levels x1,..,xl (decimal
    /// literals); unused in functional mode
    #[arg(long, allow_hyphen_values = true)]
    levels: Option<String>,
    /// Comma-separated strictly increasing ranks k1,..,kl (subset mode)
    #[arg(long)]
    ranks: Option<String>,
    /// Weight scheme: log | a:KAPPA | b:KAPPA | c:KAPPA | flat
    #[arg(long)]
    weights: String,
    /// Path length N_max
    #[arg(long)]
    n: u64,
    /// Comma-separated seeds; one CSV per seed
    #[arg(long)]
    seed: String,
    /// joint | subset | functional:NAME with NAME in {clip, clip:SHIFT, gcdf}
    #[arg(long, default_value = "joint")]
    mode: String,
    /// Output CSV path; multiple seeds append _seedS before the extension
    #[arg(long)]
    out: PathBuf,
    /// Also emit a gnuplot script next to the first CSV
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Args)]
struct LimitArgs {
    /// Limit family: gumbel | frechet:ALPHA | weibull:ALPHA
    #[arg(long)]
    family: String,
    /// Comma-separated strictly decreasing levels
    #[arg(long, allow_hyphen_values = true)]
    levels: String,
    /// Comma-separated ranks; defaults to 1..=len(levels)
    #[arg(long)]
    ranks: Option<String>,
}

#[derive(Args)]
struct CheckWeightsArgs {
    /// Weight scheme: log | a:KAPPA | b:KAPPA | c:KAPPA | flat
    #[arg(long)]
    weights: String,
    /// Scan range LO:HI
    #[arg(long)]
    range: String,
    /// Exponent of the monotonicity diagnostic, 0 < alpha < 1
    #[arg(long)]
    alpha: f64,
    /// Exponent of the boundedness diagnostic; defaults per family
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct LemmaArgs {
    /// Which bound to check: 1, 2 or 3
    #[arg(long)]
    which: u8,
    /// Parent distribution: exp | pareto:ALPHA | uniform
    #[arg(long)]
    model: String,
    /// Prefix length m (hypotheses: m >= k and n - m >= k)
    #[arg(long)]
    m: u64,
    /// Path length n
    #[arg(long)]
    n: u64,
    /// Rank j for the indicator-gap bound (lemma 1 only)
    #[arg(long)]
    j: Option<usize>,
    /// Number of levels k
    #[arg(long)]
    k: usize,
    /// Comma-separated levels: one for lemma 1, k for lemmas 2 and 3
    #[arg(long, allow_hyphen_values = true)]
    levels: String,
    /// Monte Carlo replications
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// A flag-validation failure: exits with code 2, message names the flag.
struct Invalid(String);

impl Invalid {
    fn new(flag: &str, message: impl std::fmt::Display) -> Self {
        Invalid(format!("--{flag}: {message}"))
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, raw: &str) -> Result<Vec<T>, Invalid>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|e| Invalid::new(flag, format!("cannot parse `{part}`: {e}")))
        })
        .collect()
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => match cmd_run(&args) {
            Ok(code) => code,
            Err(Invalid(msg)) => validation_failure(&msg),
        },
        Command::Limit(args) => match cmd_limit(&args) {
            Ok(code) => code,
            Err(Invalid(msg)) => validation_failure(&msg),
        },
        Command::CheckWeights(args) => match cmd_check_weights(&args) {
            Ok(code) => code,
            Err(Invalid(msg)) => validation_failure(&msg),
        },
        Command::Lemma(args) => match cmd_lemma(&args) {
            Ok(code) => code,
            Err(Invalid(msg)) => validation_failure(&msg),
        },
    }
}

fn validation_failure(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_VALIDATION)
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    model: &'a str,
    k: usize,
    levels: Option<Vec<f64>>,
    ranks: Option<Vec<usize>>,
    weights: &'a str,
    n_max: u64,
    mode: &'a str,
    seeds: &'a [u64],
    library_version: &'static str,
    wall_clock_seconds: f64,
    outputs: Vec<String>,
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode, Invalid> {
    let model: SampleModel = args
        .model
        .parse()
        .map_err(|e| Invalid::new("model", e))?;
    let scheme: WeightScheme = args
        .weights
        .parse()
        .map_err(|e| Invalid::new("weights", e))?;
    let seeds: Vec<u64> = parse_list("seed", &args.seed)?;
    if seeds.is_empty() {
        return Err(Invalid::new("seed", "at least one seed required"));
    }
    let levels: Option<Vec<f64>> = match &args.levels {
        Some(raw) => Some(parse_list("levels", raw)?),
        None => None,
    };
    let ranks: Option<Vec<usize>> = match &args.ranks {
        Some(raw) => Some(parse_list("ranks", raw)?),
        None => None,
    };

    let mode = build_mode(args, levels.clone(), ranks.clone())?;
    // Validate once up front so every seed either runs or none does.
    let configs: Vec<ExperimentConfig> = seeds
        .iter()
        .map(|&seed| {
            ExperimentConfig::new(model, args.k, scheme, args.n, seed, mode.clone())
                .map_err(|e| Invalid(e.to_string()))
        })
        .collect::<Result<_, _>>()?;

    let started = Instant::now();
    let outputs: Vec<PathBuf> = seeds
        .iter()
        .map(|&seed| output_path(&args.out, seed, seeds.len() > 1))
        .collect();

    let next = AtomicUsize::new(0);
    let failures: Mutex<Vec<String>> = Mutex::new(Vec::new());
    let workers = worker_count(seeds.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= configs.len() {
                    break;
                }
                let result = run_one(&configs[index], &outputs[index]);
                if let Err(message) = result {
                    failures.lock().unwrap().push(message);
                }
            });
        }
    });
    let failures = failures.into_inner().unwrap();
    if !failures.is_empty() {
        for failure in &failures {
            eprintln!("error: {failure}");
        }
        return Ok(ExitCode::from(EXIT_RUNTIME));
    }

    if args.gnuplot {
        if let Err(e) = write_gnuplot(&args.out, &outputs) {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_RUNTIME));
        }
    }

    let manifest = RunManifest {
        command: "run",
        model: &args.model,
        k: args.k,
        levels,
        ranks,
        weights: &args.weights,
        n_max: args.n,
        mode: &args.mode,
        seeds: &seeds,
        library_version: env!("CARGO_PKG_VERSION"),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let manifest_path = manifest_path(&args.out);
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = std::fs::write(&manifest_path, body + "\n") {
        eprintln!("error: cannot write {}: {e}", manifest_path.display());
        return Ok(ExitCode::from(EXIT_RUNTIME));
    }
    Ok(ExitCode::SUCCESS)
}

fn build_mode(
    args: &RunArgs,
    levels: Option<Vec<f64>>,
    ranks: Option<Vec<usize>>,
) -> Result<Mode, Invalid> {
    let indicator_levels = |required_ranks: Option<Vec<usize>>| -> Result<LevelVector, Invalid> {
        let levels = levels
            .clone()
            .ok_or_else(|| Invalid::new("levels", "required in indicator modes"))?;
        match required_ranks {
            Some(ranks) => LevelVector::with_ranks(levels, ranks)
                .map_err(|e| Invalid::new("levels", e)),
            None => LevelVector::joint(levels).map_err(|e| Invalid::new("levels", e)),
        }
    };
    match args.mode.as_str() {
        "joint" => {
            if ranks.is_some() {
                return Err(Invalid::new("ranks", "only valid with --mode subset"));
            }
            Ok(Mode::Joint {
                levels: indicator_levels(None)?,
            })
        }
        "subset" => {
            let ranks = ranks.ok_or_else(|| Invalid::new("ranks", "required in subset mode"))?;
            Ok(Mode::SubsetMarginal {
                levels: indicator_levels(Some(ranks))?,
            })
        }
        other => match other.strip_prefix("functional:") {
            Some(name) => {
                if levels.is_some() || ranks.is_some() {
                    return Err(Invalid::new(
                        "mode",
                        "functional mode takes neither --levels nor --ranks",
                    ));
                }
                Ok(Mode::Functional {
                    f: parse_test_function(name)?,
                })
            }
            None => Err(Invalid::new(
                "mode",
                format!("unknown mode `{other}`: expected joint | subset | functional:NAME"),
            )),
        },
    }
}

fn parse_test_function(name: &str) -> Result<TestFunction, Invalid> {
    match name {
        "clip" => Ok(TestFunction::clip()),
        "gcdf" => Ok(TestFunction::LimitCdf),
        other => match other.strip_prefix("clip:") {
            Some(shift) => shift
                .parse::<f64>()
                .map(|shift| TestFunction::Clip { shift })
                .map_err(|e| Invalid::new("mode", format!("bad clip shift `{shift}`: {e}"))),
            None => Err(Invalid::new(
                "mode",
                format!("unknown test function `{other}`: expected clip | clip:SHIFT | gcdf"),
            )),
        },
    }
}

fn run_one(config: &ExperimentConfig, path: &Path) -> Result<(), String> {
    let series: ConvergenceSeries = match &config.mode {
        Mode::Functional { .. } => run_functional_path(config),
        _ => run_path(config),
    }
    .map_err(|e| format!("seed {}: {e}", config.seed))?;
    std::fs::write(path, series.to_csv())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn output_path(out: &Path, seed: u64, multi: bool) -> PathBuf {
    if !multi {
        return out.to_path_buf();
    }
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}_seed{seed}"),
    };
    out.with_file_name(name)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn worker_count(seeds: usize) -> usize {
    std::env::var("ASC_EXTREMES_THREADS")
        .ok()
        .and_then(|raw| raw.parse::<usize>().ok())
        .filter(|&threads| threads >= 1)
        .unwrap_or(seeds)
        .min(seeds)
}

fn write_gnuplot(out: &Path, csvs: &[PathBuf]) -> Result<(), String> {
    let mut script = String::from(
        "set datafile separator ','\nset logscale x\nset xlabel 'N'\nset ylabel '|A_N - limit|'\nset key outside\nplot \\\n",
    );
    let plots: Vec<String> = csvs
        .iter()
        .map(|path| {
            format!(
                "  '{}' skip 1 using 1:5 with linespoints title '{}'",
                path.display(),
                path.file_stem().unwrap_or_default().to_string_lossy()
            )
        })
        .collect();
    script.push_str(&plots.join(", \\\n"));
    script.push('\n');
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".gp");
    let path = out.with_file_name(name);
    std::fs::write(&path, script).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// limit
// ---------------------------------------------------------------------------

fn cmd_limit(args: &LimitArgs) -> Result<ExitCode, Invalid> {
    let family: LimitFamily = args
        .family
        .parse()
        .map_err(|e| Invalid::new("family", e))?;
    let levels: Vec<f64> = parse_list("levels", &args.levels)?;
    let vector = match &args.ranks {
        Some(raw) => {
            let ranks: Vec<usize> = parse_list("ranks", raw)?;
            LevelVector::with_ranks(levels, ranks).map_err(|e| Invalid::new("ranks", e))?
        }
        None => LevelVector::joint(levels).map_err(|e| Invalid::new("levels", e))?,
    };
    let probability = subset_marginal(family, &vector).map_err(|e| Invalid(e.to_string()))?;
    println!("{}", format_significant(probability, 12));
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// check-weights
// ---------------------------------------------------------------------------

fn cmd_check_weights(args: &CheckWeightsArgs) -> Result<ExitCode, Invalid> {
    let scheme: WeightScheme = args
        .weights
        .parse()
        .map_err(|e| Invalid::new("weights", e))?;
    let (lo, hi) = args
        .range
        .split_once(':')
        .and_then(|(lo, hi)| Some((lo.parse::<u64>().ok()?, hi.parse::<u64>().ok()?)))
        .ok_or_else(|| Invalid::new("range", "expected LO:HI"))?;
    let rho = args.rho.unwrap_or_else(|| scheme.default_rho());
    let report = scheme
        .check_conditions((lo, hi), args.alpha, rho)
        .map_err(|e| Invalid(e.to_string()))?;
    println!("min_n_dn,monotone_violations,max_ratio,n_lo,n_hi,alpha,rho,pass");
    println!(
        "{},{},{},{},{},{},{},{}",
        format_significant(report.min_n_dn, 12),
        report.monotone_violations,
        format_significant(report.max_ratio, 12),
        report.range.0,
        report.range.1,
        format_significant(report.weight_alpha, 12),
        format_significant(report.rho, 12),
        report.passes()
    );
    Ok(if report.passes() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_DIAGNOSTIC)
    })
}

// ---------------------------------------------------------------------------
// lemma
// ---------------------------------------------------------------------------

fn cmd_lemma(args: &LemmaArgs) -> Result<ExitCode, Invalid> {
    let model: SampleModel = args
        .model
        .parse()
        .map_err(|e| Invalid::new("model", e))?;
    let levels: Vec<f64> = parse_list("levels", &args.levels)?;
    let (estimate, se, bound) = match args.which {
        1 => {
            let j = args.j.ok_or_else(|| Invalid::new("j", "required for lemma 1"))?;
            let x = *levels
                .first()
                .ok_or_else(|| Invalid::new("levels", "one level required"))?;
            let est = lemma1_gap(model, args.n, args.m, j, args.k, x, args.reps, args.seed)
                .map_err(|e| Invalid(e.to_string()))?;
            // The relocation probability is the uniform-in-x certificate;
            // report it against the k-uniform bound.
            (
                est.relocation.estimate.estimate,
                est.relocation.estimate.se,
                args.k as f64 * args.m as f64 / args.n as f64,
            )
        }
        2 | 3 => {
            if levels.len() != args.k {
                return Err(Invalid::new(
                    "levels",
                    format!("lemma {} needs exactly k = {} levels", args.which, args.k),
                ));
            }
            let vector = LevelVector::joint(levels).map_err(|e| Invalid::new("levels", e))?;
            let check = if args.which == 2 {
                lemma2_cov(model, args.m, args.n, &vector, args.reps, args.seed)
            } else {
                lemma3_gap(model, args.m, args.n, &vector, args.reps, args.seed)
            }
            .map_err(|e| Invalid(e.to_string()))?;
            (check.estimate.estimate, check.estimate.se, check.bound)
        }
        other => {
            return Err(Invalid::new("which", format!("expected 1, 2 or 3, got {other}")));
        }
    };
    let pass = estimate.abs() <= bound + 3.0 * se;
    println!("estimate,se,bound,pass");
    println!(
        "{},{},{},{}",
        format_significant(estimate, 12),
        format_significant(se, 12),
        format_significant(bound, 12),
        pass
    );
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_DIAGNOSTIC)
    })
}
