//! Parent distributions with exact quantile functions, their max-domain
//! limit family, and the norming constants `(a_n, b_n)` that place the
//! normalized maxima in that family's domain:
//! `n · (1 − F(a_n x + b_n)) → τ(x)`.
//!
//! Sampling is inverse-transform only, so a path is a deterministic
//! function of `(seed, model)` and can be replayed exactly.

use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::limit_laws::LimitFamily;

/// A parent distribution `F` together with its extreme-value limit data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleModel {
    /// Standard exponential, Gumbel domain.
    Exponential,
    /// Pareto with tail `P(X > x) = x^{−α}` on `[1, ∞)`, Fréchet(α) domain.
    Pareto { shape: f64 },
    /// Uniform on `(0, 1)`, Weibull(1) domain.
    Uniform01,
}

impl SampleModel {
    pub fn pareto(shape: f64) -> Result<Self> {
        if shape > 0.0 && shape.is_finite() {
            Ok(SampleModel::Pareto { shape })
        } else {
            Err(Error::InvalidShape { shape })
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            SampleModel::Exponential => {
                if x > 0.0 {
                    -(-x).exp_m1()
                } else {
                    0.0
                }
            }
            SampleModel::Pareto { shape } => {
                if x > 1.0 {
                    1.0 - x.powf(-shape)
                } else {
                    0.0
                }
            }
            SampleModel::Uniform01 => x.clamp(0.0, 1.0),
        }
    }

    /// Inverse of the CDF on `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange { p });
        }
        Ok(match *self {
            SampleModel::Exponential => -(-p).ln_1p(),
            SampleModel::Pareto { shape } => (1.0 - p).powf(-1.0 / shape),
            SampleModel::Uniform01 => p,
        })
    }

    /// The max-domain limit family of this parent.
    pub fn limit_family(&self) -> LimitFamily {
        match *self {
            SampleModel::Exponential => LimitFamily::Gumbel,
            SampleModel::Pareto { shape } => LimitFamily::Frechet { shape },
            SampleModel::Uniform01 => LimitFamily::Weibull { shape: 1.0 },
        }
    }

    /// Norming constants `(a_n, b_n)` with
    /// `P(M_n ≤ a_n x + b_n) → G(x)`.
    pub fn norming_constants(&self, n: u64) -> (f64, f64) {
        let n = n as f64;
        match *self {
            SampleModel::Exponential => (1.0, n.ln()),
            SampleModel::Pareto { shape } => (n.powf(1.0 / shape), 0.0),
            SampleModel::Uniform01 => (1.0 / n, 1.0),
        }
    }

    /// Draw one variate by inverse transform; advances the stream by one.
    pub fn sample(&self, stream: &mut SeededStream) -> f64 {
        // next_open01 never returns an endpoint, so quantile cannot fail.
        self.quantile(stream.next_open01()).expect("open-interval uniform")
    }
}

impl fmt::Display for SampleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SampleModel::Exponential => write!(f, "exp"),
            SampleModel::Pareto { shape } => write!(f, "pareto:{shape}"),
            SampleModel::Uniform01 => write!(f, "uniform"),
        }
    }
}

impl FromStr for SampleModel {
    type Err = Error;

    /// Parses `exp`, `pareto:ALPHA`, `uniform`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownName {
            name: s.to_string(),
            expected: "exp | pareto:ALPHA | uniform",
        };
        match s.split_once(':') {
            None if s == "exp" => Ok(SampleModel::Exponential),
            None if s == "uniform" => Ok(SampleModel::Uniform01),
            Some(("pareto", a)) => SampleModel::pareto(a.parse().map_err(|_| unknown())?),
            _ => Err(unknown()),
        }
    }
}

/// A reproducible uniform stream: ChaCha8 keyed by the 64-bit seed, one
/// 64-bit word per variate, mapped to the open interval `(0, 1)` with
/// 53-bit resolution. Identical `(seed, position)` always yields the same
/// next variate; distinct seeds are treated as independent streams.
#[derive(Debug, Clone)]
pub struct SeededStream {
    rng: ChaCha8Rng,
    seed: u64,
    position: u64,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        SeededStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            position: 0,
        }
    }

    /// A stream fast-forwarded to `position` draws after the seed point.
    pub fn at(seed: u64, position: u64) -> Self {
        let mut s = Self::new(seed);
        // One f64 draw consumes one u64 = two ChaCha words.
        s.rng.set_word_pos(2 * position as u128);
        s.position = position;
        s
    }

    /// Derive an independent substream, e.g. one per Monte Carlo
    /// replication. A SplitMix64 step decorrelates nearby indices.
    pub fn substream(master_seed: u64, index: u64) -> Self {
        let mut z = master_seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        Self::new(z ^ (z >> 31))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    /// Next uniform in the open interval `(0, 1)`.
    pub fn next_open01(&mut self) -> f64 {
        self.position += 1;
        let bits = self.rng.next_u64() >> 11; // top 53 bits
        (bits as f64 + 0.5) * (1.0 / 9007199254740992.0) // 2^53
    }
}
