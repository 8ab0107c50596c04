//! Almost-sure limit theorems for extreme order statistics, made runnable.
//!
//! For an i.i.d. sequence whose normalized maxima converge to an
//! extreme-value law G, the weighted path averages
//!
//! ```text
//! A_N = (1/D_N) Σ_{n=k}^N d_n · I{M_n^(1) ≤ u_n(x_1), …, M_n^(k) ≤ u_n(x_k)}
//! ```
//!
//! converge almost surely to a deterministic joint law `H(x_1, …, x_k)`
//! whenever the positive weights `d_n` satisfy the classical admissibility
//! conditions. This crate evaluates the limit laws exactly (via a Poisson
//! exceedance-count representation), runs the seeded path averages, and
//! cross-checks both against exact finite-n formulas and Monte Carlo
//! oracles:
//!
//! * [`limit_laws`] — the three extreme-value families, the marginal
//!   limits `H_k`, the joint law `H` and its subset marginals `H*`, and
//!   quadrature against `H_k`.
//! * [`sample_models`] — parent distributions with exact quantiles,
//!   norming constants, and reproducible seeded streams.
//! * [`weights`] — weight sequences with exact prefix sums and finite-range
//!   admissibility diagnostics.
//! * [`streaming`] — the running top-k tracker.
//! * [`asclt`] — checkpointed path runs of the weighted averages.
//! * [`oracles`] — exact order-statistic CDF, finite-n Monte Carlo, and
//!   the segment-coupling bound checks.
//!
//! ```
//! use asc_extremes::{joint_limit, LevelVector, LimitFamily};
//!
//! let levels = LevelVector::joint(vec![std::f64::consts::LN_2, 0.0])?;
//! let h = joint_limit(LimitFamily::Gumbel, &levels)?;
//! assert!((h - 1.5 * (-1.0_f64).exp()).abs() < 1e-12);
//! # Ok::<(), asc_extremes::Error>(())
//! ```

pub mod asclt;
mod error;
pub mod limit_laws;
pub mod oracles;
pub mod sample_models;
pub mod streaming;
pub mod weights;

pub use asclt::{
    default_checkpoints, format_significant, run_functional_path, run_path, CheckpointRow,
    ConvergenceSeries, ExperimentConfig, Mode,
};
pub use error::{Error, Result};
pub use limit_laws::{
    constrained_poisson_prob, integral_against_hk, joint_limit, marginal_limit, subset_marginal,
    LevelVector, LimitFamily, Quadrature, TestFunction,
};
pub use oracles::{
    exact_order_stat_cdf, lemma1_gap, lemma2_cov, lemma3_gap, mc_finite_n_joint, BoundCheck,
    Lemma1Estimate, McEstimate,
};
pub use sample_models::{SampleModel, SeededStream};
pub use streaming::TopKTracker;
pub use weights::{ConditionReport, WeightKind, WeightScheme};

// The guide's code listings double as doctests, so the book cannot drift
// from the library. `cargo test --doc` runs them.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(limit_laws, "../../../book/src/limit-laws.md");
    chapter!(sample_models, "../../../book/src/sample-models.md");
    chapter!(weights, "../../../book/src/weights.md");
    chapter!(experiments, "../../../book/src/experiments.md");
    chapter!(verification, "../../../book/src/verification.md");
}
