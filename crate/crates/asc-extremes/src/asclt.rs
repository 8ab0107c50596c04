//! Seeded sample-path runs of the weighted averages
//!
//! ```text
//! A_N = (1/D_N) Σ_n d_n · I{M_n^(1) ≤ u_n(x_1), …, M_n^(k) ≤ u_n(x_k)}
//! ```
//!
//! and their functional variant `Σ d_n f(a_n^{−1}(M_n^(k) − b_n)) / D_N`,
//! reported at geometric checkpoints next to the analytic limit.
//!
//! One pass, one stream: the path is consumed once into a single
//! [`TopKTracker`], norming constants are recomputed per index in O(1),
//! and the indicator accumulation starts exactly at the first index where
//! all required order statistics exist. The prefix sum `D_N` runs from the
//! weight scheme's start index; the weight mass on indices below the
//! accumulation start vanishes relative to `D_N` and is absorbed into the
//! convergence tolerance.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::limit_laws::{integral_against_hk, subset_marginal, LevelVector, TestFunction};
use crate::sample_models::{SampleModel, SeededStream};
use crate::streaming::TopKTracker;
use crate::weights::{KahanSum, WeightScheme};

/// Grid cells used for the analytic limit of functional runs.
pub const FUNCTIONAL_LIMIT_GRID: usize = 8192;

/// What a path run averages.
#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// Joint indicator of the full top-k vector; ranks are `1..=k`.
    Joint { levels: LevelVector },
    /// Indicator over a rank subset `k_1 < … < k_l`.
    SubsetMarginal { levels: LevelVector },
    /// Bounded test function of the normalized k-th maximum.
    Functional { f: TestFunction },
}

impl Mode {
    fn levels(&self) -> Option<&LevelVector> {
        match self {
            Mode::Joint { levels } | Mode::SubsetMarginal { levels } => Some(levels),
            Mode::Functional { .. } => None,
        }
    }

    /// How many order statistics the tracker must expose.
    fn tracked(&self, k: usize) -> usize {
        self.levels().map_or(k, LevelVector::max_rank)
    }
}

/// Full description of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: SampleModel,
    pub k: usize,
    pub scheme: WeightScheme,
    pub n_max: u64,
    pub checkpoints: Vec<u64>,
    pub seed: u64,
    pub mode: Mode,
}

pub const MAX_K: usize = 64;

impl ExperimentConfig {
    /// Config with the default geometric checkpoints (ratio 2 from 2^7).
    pub fn new(
        model: SampleModel,
        k: usize,
        scheme: WeightScheme,
        n_max: u64,
        seed: u64,
        mode: Mode,
    ) -> Result<Self> {
        Self::with_checkpoints(model, k, scheme, n_max, default_checkpoints(n_max), seed, mode)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_checkpoints(
        model: SampleModel,
        k: usize,
        scheme: WeightScheme,
        n_max: u64,
        checkpoints: Vec<u64>,
        seed: u64,
        mode: Mode,
    ) -> Result<Self> {
        let config = ExperimentConfig {
            model,
            k,
            scheme,
            n_max,
            checkpoints,
            seed,
            mode,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_K {
            return Err(Error::InvalidConfig(format!(
                "k must lie in 1..={MAX_K}, got {}",
                self.k
            )));
        }
        match &self.mode {
            Mode::Joint { levels } => {
                if !levels.is_full_joint() || levels.len() != self.k {
                    return Err(Error::InvalidConfig(format!(
                        "joint mode needs {} levels with ranks 1..={}",
                        self.k, self.k
                    )));
                }
            }
            Mode::SubsetMarginal { levels } => {
                if levels.max_rank() > self.k || levels.is_empty() {
                    return Err(Error::InvalidConfig(format!(
                        "subset ranks must lie in 1..={}",
                        self.k
                    )));
                }
            }
            Mode::Functional { .. } => {}
        }
        if self.checkpoints.is_empty()
            || self.checkpoints.windows(2).any(|w| w[1] <= w[0])
            || *self.checkpoints.last().unwrap() != self.n_max
        {
            return Err(Error::InvalidConfig(
                "checkpoints must be strictly increasing and end at n_max".into(),
            ));
        }
        if self.checkpoints[0] < self.accumulation_start() {
            return Err(Error::InvalidConfig(format!(
                "first checkpoint {} precedes the accumulation start {}",
                self.checkpoints[0],
                self.accumulation_start()
            )));
        }
        Ok(())
    }

    /// First index contributing to the numerator: all tracked order
    /// statistics exist and the weight scheme has started.
    pub fn accumulation_start(&self) -> u64 {
        (self.mode.tracked(self.k) as u64).max(self.scheme.start())
    }
}

/// Geometric checkpoints (ratio 2) from 2^7 up to and including `n_max`.
pub fn default_checkpoints(n_max: u64) -> Vec<u64> {
    let mut cps = Vec::new();
    let mut c = 128;
    while c < n_max {
        cps.push(c);
        c *= 2;
    }
    cps.push(n_max);
    cps
}

/// One checkpoint of a run: the weighted average next to its limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointRow {
    pub n: u64,
    pub d_cum: f64,
    pub average: f64,
    pub limit: f64,
    pub abs_error: f64,
}

/// Checkpointed output of one seeded path, with the config echoed for
/// reproducibility.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub rows: Vec<CheckpointRow>,
    pub config: ExperimentConfig,
    pub version: String,
    /// Reported quadrature error of the limit column (functional runs).
    pub limit_error: Option<f64>,
}

impl ConvergenceSeries {
    /// CSV body: `N,D_N,A_N,limit,abs_error`, one row per checkpoint.
    ///
    /// Data columns carry 12 significant digits. The abs_error column is
    /// recomputed from the printed `A_N` and `limit` values and written
    /// with full round-trip precision, so `abs_error = |A_N − limit|`
    /// holds exactly on the parsed file.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,D_N,A_N,limit,abs_error\n");
        for row in &self.rows {
            let avg = format_significant(row.average, 12);
            let limit = format_significant(row.limit, 12);
            let err = (avg.parse::<f64>().unwrap() - limit.parse::<f64>().unwrap()).abs();
            writeln!(
                out,
                "{},{},{},{},{}",
                row.n,
                format_significant(row.d_cum, 12),
                avg,
                limit,
                err
            )
            .expect("write to string");
        }
        out
    }
}

/// Format with the given number of significant digits, plain decimal.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

/// Run one seeded path in an indicator mode (Joint or SubsetMarginal).
///
/// Deterministic: identical config yields an identical series.
pub fn run_path(config: &ExperimentConfig) -> Result<ConvergenceSeries> {
    config.validate()?;
    let levels = config.mode.levels().ok_or_else(|| {
        Error::InvalidConfig("run_path expects an indicator mode; use run_functional_path".into())
    })?;
    let family = config.model.limit_family();
    let limit = subset_marginal(family, levels)?;

    let xs = levels.levels();
    let ranks = levels.ranks();
    run_loop(config, limit, None, |tracker, a, b| {
        let values = tracker.values();
        let inside = ranks
            .iter()
            .zip(xs)
            .all(|(&rank, &x)| values[rank - 1] <= a * x + b);
        if inside {
            1.0
        } else {
            0.0
        }
    })
}

/// Run one seeded path averaging a built-in bounded test function of the
/// normalized k-th maximum; the limit column is `∫ f dH_k` by quadrature.
pub fn run_functional_path(config: &ExperimentConfig) -> Result<ConvergenceSeries> {
    config.validate()?;
    let f = match &config.mode {
        Mode::Functional { f } => *f,
        _ => {
            return Err(Error::InvalidConfig(
                "run_functional_path expects Functional mode; use run_path".into(),
            ))
        }
    };
    if !f.is_builtin() {
        return Err(Error::InvalidConfig(
            "functional runs accept built-in test functions only".into(),
        ));
    }
    let family = config.model.limit_family();
    let quad = integral_against_hk(f, family, config.k, FUNCTIONAL_LIMIT_GRID)?;
    let k = config.k;
    run_loop(config, quad.value, Some(quad.error), |tracker, a, b| {
        f.eval(family, (tracker.values()[k - 1] - b) / a)
    })
}

/// Shared single-pass loop: stream, track, weigh, checkpoint.
fn run_loop(
    config: &ExperimentConfig,
    limit: f64,
    limit_error: Option<f64>,
    evaluate: impl Fn(&TopKTracker, f64, f64) -> f64,
) -> Result<ConvergenceSeries> {
    let mut tracker = TopKTracker::new(config.mode.tracked(config.k))?;
    let mut stream = SeededStream::new(config.seed);
    let mut weights = config.scheme.iter();
    let weight_start = config.scheme.start();
    let acc_start = config.accumulation_start();

    let mut acc = KahanSum::default();
    let mut d_cum = 0.0;
    let mut rows = Vec::with_capacity(config.checkpoints.len());
    let mut next_checkpoint = config.checkpoints.iter().copied().peekable();

    for n in 1..=config.n_max {
        let x = config.model.sample(&mut stream);
        tracker.insert(x);
        if n >= weight_start {
            let (_, d, cum) = weights.next().expect("weight iterator is infinite");
            d_cum = cum;
            if n >= acc_start {
                let (a, b) = config.model.norming_constants(n);
                let value = evaluate(&tracker, a, b);
                if value != 0.0 {
                    acc.add(d * value);
                }
            }
        }
        if next_checkpoint.peek() == Some(&n) {
            next_checkpoint.next();
            let average = acc.value() / d_cum;
            rows.push(CheckpointRow {
                n,
                d_cum,
                average,
                limit,
                abs_error: (average - limit).abs(),
            });
        }
    }

    Ok(ConvergenceSeries {
        rows,
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        limit_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.36787944117144233;

    fn joint_config(levels: Vec<f64>, n_max: u64, seed: u64) -> ExperimentConfig {
        let k = levels.len();
        ExperimentConfig::new(
            SampleModel::Exponential,
            k,
            WeightScheme::log_average(),
            n_max,
            seed,
            Mode::Joint {
                levels: LevelVector::joint(levels).unwrap(),
            },
        )
        .unwrap()
    }

    #[test]
    fn default_checkpoints_cover_n_max() {
        assert_eq!(default_checkpoints(1000), vec![128, 256, 512, 1000]);
        assert_eq!(default_checkpoints(128), vec![128]);
        assert_eq!(default_checkpoints(100), vec![100]);
    }

    #[test]
    fn config_validation() {
        let levels = LevelVector::joint(vec![0.5, 0.0]).unwrap();
        // k inconsistent with joint levels
        assert!(ExperimentConfig::new(
            SampleModel::Exponential,
            3,
            WeightScheme::log_average(),
            1000,
            1,
            Mode::Joint { levels: levels.clone() },
        )
        .is_err());
        // checkpoints not ending at n_max
        assert!(ExperimentConfig::with_checkpoints(
            SampleModel::Exponential,
            2,
            WeightScheme::log_average(),
            1000,
            vec![128, 999],
            1,
            Mode::Joint { levels: levels.clone() },
        )
        .is_err());
        // subset rank beyond k
        let subset = LevelVector::with_ranks(vec![0.0], vec![5]).unwrap();
        assert!(ExperimentConfig::new(
            SampleModel::Exponential,
            3,
            WeightScheme::log_average(),
            1000,
            1,
            Mode::SubsetMarginal { levels: subset },
        )
        .is_err());
    }

    #[test]
    fn mode_mismatch_rejected() {
        let config = joint_config(vec![0.5, 0.0], 256, 1);
        assert!(run_functional_path(&config).is_err());
        let functional = ExperimentConfig::new(
            SampleModel::Exponential,
            1,
            WeightScheme::log_average(),
            256,
            1,
            Mode::Functional {
                f: TestFunction::clip(),
            },
        )
        .unwrap();
        assert!(run_path(&functional).is_err());
    }

    #[test]
    fn custom_functions_rejected_in_runs() {
        let config = ExperimentConfig::new(
            SampleModel::Exponential,
            1,
            WeightScheme::log_average(),
            256,
            1,
            Mode::Functional {
                f: TestFunction::Custom {
                    f: |x| x.tanh(),
                    bound: 1.0,
                },
            },
        )
        .unwrap();
        assert!(run_functional_path(&config).is_err());
    }

    #[test]
    fn saturated_indicator_normalizes_exactly() {
        // Levels so slack the indicator is always 1: the numerator then
        // replays the denominator's accumulation and A_N == 1 exactly.
        let config = joint_config(vec![1e9, 1e8], 4096, 3);
        let series = run_path(&config).unwrap();
        for row in &series.rows {
            assert_eq!(row.average, 1.0);
        }
    }

    #[test]
    fn saturated_clip_normalizes_exactly() {
        let config = ExperimentConfig::new(
            SampleModel::Exponential,
            1,
            WeightScheme::log_average(),
            4096,
            9,
            Mode::Functional {
                f: TestFunction::Clip { shift: -30.0 },
            },
        )
        .unwrap();
        let series = run_functional_path(&config).unwrap();
        for row in &series.rows {
            assert_eq!(row.average, 1.0);
        }
        assert!((series.rows[0].limit - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weibull_boundary_levels_saturate() {
        // Uniform parent, top level stack ending at the Weibull endpoint 0:
        // every τ_j = 0, the limit is 1 and the path indicator is 1 as soon
        // as it is defined.
        let config = ExperimentConfig::new(
            SampleModel::Uniform01,
            3,
            WeightScheme::log_average(),
            2048,
            5,
            Mode::Joint {
                levels: LevelVector::joint(vec![2.0, 1.0, 0.0]).unwrap(),
            },
        )
        .unwrap();
        let series = run_path(&config).unwrap();
        let last = series.rows.last().unwrap();
        assert_eq!(last.limit, 1.0);
        assert_eq!(last.average, 1.0);
        assert_eq!(last.abs_error, 0.0);
    }

    #[test]
    fn subset_of_full_ranks_reproduces_joint_bitwise() {
        let levels = vec![0.7, 0.0];
        let joint = run_path(&joint_config(levels.clone(), 8192, 11)).unwrap();
        let subset_config = ExperimentConfig::new(
            SampleModel::Exponential,
            2,
            WeightScheme::log_average(),
            8192,
            11,
            Mode::SubsetMarginal {
                levels: LevelVector::with_ranks(levels, vec![1, 2]).unwrap(),
            },
        )
        .unwrap();
        let subset = run_path(&subset_config).unwrap();
        assert_eq!(joint.rows, subset.rows);
    }

    #[test]
    fn identical_configs_reproduce() {
        let a = run_path(&joint_config(vec![0.7, 0.0], 4096, 17)).unwrap();
        let b = run_path(&joint_config(vec![0.7, 0.0], 4096, 17)).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn raising_levels_raises_average_and_limit() {
        let low = run_path(&joint_config(vec![0.5, -0.2], 16384, 23)).unwrap();
        let high = run_path(&joint_config(vec![0.9, 0.2], 16384, 23)).unwrap();
        let (low_last, high_last) = (low.rows.last().unwrap(), high.rows.last().unwrap());
        assert!(high_last.average >= low_last.average);
        assert!(high_last.limit > low_last.limit);
    }

    #[test]
    fn log_average_path_approaches_cdf() {
        // k = 1, x = 0: the classical max-ASCLT limit is G(0) = 1/e.
        let config = joint_config(vec![0.0], 100_000, 1);
        let series = run_path(&config).unwrap();
        let last = series.rows.last().unwrap();
        assert!((last.limit - E_INV).abs() < 1e-12);
        assert!(last.abs_error < 0.2, "A_N = {}", last.average);
    }

    #[test]
    fn csv_shape_and_error_consistency() {
        let series = run_path(&joint_config(vec![0.7, 0.0], 2048, 29)).unwrap();
        let csv = series.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "N,D_N,A_N,limit,abs_error");
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 5);
            let a: f64 = cols[2].parse().unwrap();
            let l: f64 = cols[3].parse().unwrap();
            let err: f64 = cols[4].parse().unwrap();
            assert!((err - (a - l).abs()).abs() <= 1e-15);
        }
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(2.0 * E_INV, 12), "0.735758882343");
        assert_eq!(format_significant(1.5 * E_INV, 12), "0.551819161757");
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(191.25, 12), "191.250000000");
        assert_eq!(format_significant(1e-5, 12), "0.0000100000000000");
    }
}
