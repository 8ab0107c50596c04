//! Extreme-value limit laws and the joint law of the top-k maxima.
//!
//! The three max-stable families `G` (Gumbel, Fréchet, Weibull) come with
//! their exceedance intensity `τ(x) = −log G(x)`. The limiting distribution
//! of the j-th maximum is
//!
//! ```text
//! H_j(x) = G(x) · Σ_{i=0}^{j−1} τ(x)^i / i!
//! ```
//!
//! and the joint law of the top k maxima at levels `x_1 > … > x_k` is the
//! probability that a Poisson exceedance count process stays below the
//! staircase of caps `(0, 1, …, k−1)`: the number of points above the
//! highest level is Poisson(τ_1), each strip between consecutive levels
//! contributes an independent Poisson(τ_j − τ_{j−1}) count, and the j-th
//! maximum sits below its level exactly when the cumulative count above
//! that level is at most j−1. [`constrained_poisson_prob`] evaluates such
//! staircase probabilities exactly by dynamic programming.

use std::str::FromStr;

use crate::error::{Error, Result};

/// One of the three extreme-value limit laws.
///
/// Invariant: the shape is positive and finite for `Frechet` and `Weibull`;
/// construct through [`LimitFamily::frechet`] / [`LimitFamily::weibull`] to
/// have it checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitFamily {
    Gumbel,
    Frechet { shape: f64 },
    Weibull { shape: f64 },
}

impl LimitFamily {
    pub fn frechet(shape: f64) -> Result<Self> {
        if shape > 0.0 && shape.is_finite() {
            Ok(LimitFamily::Frechet { shape })
        } else {
            Err(Error::InvalidShape { shape })
        }
    }

    pub fn weibull(shape: f64) -> Result<Self> {
        if shape > 0.0 && shape.is_finite() {
            Ok(LimitFamily::Weibull { shape })
        } else {
            Err(Error::InvalidShape { shape })
        }
    }

    /// The CDF `G(x)`. Total on ℝ: outside the support it returns the
    /// appropriate 0 or 1 endpoint value.
    pub fn cdf(&self, x: f64) -> f64 {
        (-self.tau(x)).exp()
    }

    /// Exceedance intensity `τ(x) = −log G(x)`, `+∞` where `G(x) = 0`.
    pub fn tau(&self, x: f64) -> f64 {
        match *self {
            LimitFamily::Gumbel => (-x).exp(),
            LimitFamily::Frechet { shape } => {
                if x > 0.0 {
                    x.powf(-shape)
                } else {
                    f64::INFINITY
                }
            }
            LimitFamily::Weibull { shape } => {
                if x < 0.0 {
                    (-x).powf(shape)
                } else {
                    0.0
                }
            }
        }
    }

    /// Inverse CDF on `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange { p });
        }
        let t = -p.ln(); // tau at the quantile
        Ok(self.inverse_tau(t))
    }

    /// Inverse of `τ` on `(0, ∞)`, mapping an intensity back to a level.
    fn inverse_tau(&self, t: f64) -> f64 {
        match *self {
            LimitFamily::Gumbel => -t.ln(),
            LimitFamily::Frechet { shape } => t.powf(-1.0 / shape),
            LimitFamily::Weibull { shape } => -t.powf(1.0 / shape),
        }
    }
}

impl FromStr for LimitFamily {
    type Err = Error;

    /// Parses `gumbel`, `frechet:ALPHA`, `weibull:ALPHA`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownName {
            name: s.to_string(),
            expected: "gumbel | frechet:ALPHA | weibull:ALPHA",
        };
        match s.split_once(':') {
            None if s == "gumbel" => Ok(LimitFamily::Gumbel),
            Some(("frechet", a)) => LimitFamily::frechet(a.parse().map_err(|_| unknown())?),
            Some(("weibull", a)) => LimitFamily::weibull(a.parse().map_err(|_| unknown())?),
            _ => Err(unknown()),
        }
    }
}

/// Strictly decreasing levels paired with strictly increasing ranks.
///
/// For the full joint law the ranks are `1..=k`; subset marginals attach
/// level `x_{k_i}` to rank `k_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelVector {
    levels: Vec<f64>,
    ranks: Vec<usize>,
}

impl LevelVector {
    /// Levels for the full joint law, ranks implicitly `1..=levels.len()`.
    pub fn joint(levels: Vec<f64>) -> Result<Self> {
        let ranks = (1..=levels.len()).collect();
        Self::with_ranks(levels, ranks)
    }

    /// Levels attached to an explicit rank subset `k_1 < k_2 < … < k_l`.
    pub fn with_ranks(levels: Vec<f64>, ranks: Vec<usize>) -> Result<Self> {
        if levels.len() != ranks.len() {
            return Err(Error::LevelRankMismatch {
                levels: levels.len(),
                ranks: ranks.len(),
            });
        }
        if levels.windows(2).any(|w| !(w[1] < w[0])) || levels.iter().any(|x| x.is_nan()) {
            return Err(Error::LevelsNotDecreasing);
        }
        if ranks.first().is_some_and(|&r| r == 0) || ranks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::RanksNotIncreasing);
        }
        Ok(LevelVector { levels, ranks })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Largest rank, i.e. how many order statistics a path must expose.
    pub fn max_rank(&self) -> usize {
        self.ranks.last().copied().unwrap_or(0)
    }

    /// True when the ranks are exactly `1..=k`.
    pub fn is_full_joint(&self) -> bool {
        self.ranks.iter().enumerate().all(|(i, &r)| r == i + 1)
    }
}

/// Limiting distribution `H_k(x)` of the k-th maximum.
pub fn marginal_limit(family: LimitFamily, k: usize, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::ZeroOrder);
    }
    let t = family.tau(x);
    if t.is_infinite() {
        return Ok(0.0);
    }
    // G(x) · Σ_{i<k} τ^i / i!, terms built multiplicatively.
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..k {
        term *= t / i as f64;
        sum += term;
    }
    Ok(((-t).exp() * sum).min(1.0))
}

/// Exact `P(N_1 + … + N_i ≤ c_i for all i)` for independent Poisson counts.
///
/// `N_j ~ Poisson(lambdas[j])`, caps nondecreasing. An infinite intensity
/// makes every downstream cumulative count infinite, so the probability is
/// exactly 0. Dynamic programming over the cumulative count: `O(l · c_l²)`.
pub fn constrained_poisson_prob(lambdas: &[f64], caps: &[usize]) -> Result<f64> {
    if lambdas.len() != caps.len() {
        return Err(Error::BlockLengthMismatch {
            expected: caps.len(),
            got: lambdas.len(),
        });
    }
    if caps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::CapsDecreasing);
    }
    if let Some(&l) = lambdas.iter().find(|l| l.is_nan() || **l < 0.0) {
        return Err(Error::InvalidIntensity { lambda: l });
    }
    if lambdas.iter().any(|l| l.is_infinite()) {
        return Ok(0.0);
    }

    // dp[s] = P(S_i = s and S_1..=S_i within caps); starts as P(S_0 = 0) = 1.
    let mut dp = vec![1.0_f64];
    for (&lambda, &cap) in lambdas.iter().zip(caps) {
        let pmf = poisson_pmf_table(lambda, cap);
        let mut next = vec![0.0; cap + 1];
        for (s, &mass) in dp.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for t in s..=cap {
                next[t] += mass * pmf[t - s];
            }
        }
        dp = next;
    }
    Ok(dp.iter().sum::<f64>().min(1.0))
}

/// Poisson pmf values `P(N = 0..=cap)` via the multiplicative recurrence
/// `p_n = p_{n−1} · λ / n`. Caps stay small (≤ k − 1), so no overflow care
/// is needed.
fn poisson_pmf_table(lambda: f64, cap: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(cap + 1);
    let mut p = (-lambda).exp();
    pmf.push(p);
    for n in 1..=cap {
        p *= lambda / n as f64;
        pmf.push(p);
    }
    pmf
}

/// Joint limit law `H(x_1, …, x_k)` of the top-k maxima.
///
/// `xs` must carry the full ranks `1..=k`. The block intensities are the
/// increments of `τ` across adjacent levels and the caps are `0, 1, …, k−1`.
pub fn joint_limit(family: LimitFamily, xs: &LevelVector) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::ZeroOrder);
    }
    if !xs.is_full_joint() {
        return Err(Error::RanksNotIncreasing);
    }
    subset_marginal(family, xs)
}

/// Subset marginal `H*(x_{k_1}, …, x_{k_l})` of the joint law over the
/// ranks `k_1 < … < k_l`: the same Poisson engine with caps `k_i − 1`.
pub fn subset_marginal(family: LimitFamily, xs: &LevelVector) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::ZeroOrder);
    }
    let (lambdas, caps) = exceedance_blocks(family, xs);
    constrained_poisson_prob(&lambdas, &caps)
}

/// Block intensities (τ increments) and caps (ranks − 1) for a level vector.
fn exceedance_blocks(family: LimitFamily, xs: &LevelVector) -> (Vec<f64>, Vec<usize>) {
    let taus: Vec<f64> = xs.levels.iter().map(|&x| family.tau(x)).collect();
    let mut lambdas = Vec::with_capacity(taus.len());
    let mut prev = 0.0;
    for &t in &taus {
        // Infinite τ stays an infinite block; never form ∞ − ∞.
        lambdas.push(if t.is_infinite() { t } else { t - prev });
        prev = t;
    }
    let caps = xs.ranks.iter().map(|&r| r - 1).collect();
    (lambdas, caps)
}

/// A bounded test integrand for the functional limit theorem.
///
/// The built-ins are the bounded Lipschitz family the path averages are
/// proved for: `clip(x − shift)` and the CDF of the run's own limit family.
/// `Custom` carries a declared bound; integration rejects a non-finite one.
#[derive(Debug, Clone, Copy)]
pub enum TestFunction {
    /// `max(−1, min(1, x − shift))`.
    Clip { shift: f64 },
    /// `x ↦ G(x)` for the limit family under test.
    LimitCdf,
    /// User-supplied function with a declared sup-norm bound.
    Custom { f: fn(f64) -> f64, bound: f64 },
}

impl PartialEq for TestFunction {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TestFunction::Clip { shift: a }, TestFunction::Clip { shift: b }) => a == b,
            (TestFunction::LimitCdf, TestFunction::LimitCdf) => true,
            (
                TestFunction::Custom { f: fa, bound: ba },
                TestFunction::Custom { f: fb, bound: bb },
            ) => std::ptr::fn_addr_eq(*fa, *fb) && ba == bb,
            _ => false,
        }
    }
}

impl TestFunction {
    pub fn clip() -> Self {
        TestFunction::Clip { shift: 0.0 }
    }

    pub fn eval(&self, family: LimitFamily, x: f64) -> f64 {
        match *self {
            TestFunction::Clip { shift } => (x - shift).clamp(-1.0, 1.0),
            TestFunction::LimitCdf => family.cdf(x),
            TestFunction::Custom { f, .. } => f(x),
        }
    }

    /// Declared sup-norm bound.
    pub fn bound(&self) -> f64 {
        match *self {
            TestFunction::Clip { .. } | TestFunction::LimitCdf => 1.0,
            TestFunction::Custom { bound, .. } => bound,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, TestFunction::Custom { .. })
    }
}

/// A quadrature value together with a self-reported error estimate.
///
/// The estimate is calibrated so that doubling the grid moves the value by
/// less than `error`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// `∫ f dH_k` by a midpoint Riemann–Stieltjes sum on an equal-probability
/// grid: cell i holds H_k-mass exactly `1/m` and f is evaluated at the
/// quantile of the cell midpoint. Probability spacing keeps the rule
/// uniformly accurate for bounded f under heavy tails, and the weights sum
/// to 1 exactly.
pub fn integral_against_hk(
    f: TestFunction,
    family: LimitFamily,
    k: usize,
    grid_size: usize,
) -> Result<Quadrature> {
    if k == 0 {
        return Err(Error::ZeroOrder);
    }
    if grid_size < 2 {
        return Err(Error::GridTooSmall { got: grid_size });
    }
    if !f.bound().is_finite() {
        return Err(Error::UnboundedTestFunction);
    }
    let fine = midpoint_sum(f, family, k, grid_size);
    let coarse = midpoint_sum(f, family, k, grid_size / 2);
    // Midpoint error shrinks ~4x per doubling; 2·|Δ| leaves slack for the
    // kinks of the clip family.
    let error = (2.0 * (fine - coarse).abs()).max(1e-13);
    Ok(Quadrature { value: fine, error })
}

fn midpoint_sum(f: TestFunction, family: LimitFamily, k: usize, m: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..m {
        let p = (i as f64 + 0.5) / m as f64;
        let x = hk_quantile(family, k, p);
        sum += f.eval(family, x);
    }
    sum / m as f64
}

/// Quantile of `H_k`: solve `P(Poisson(t) ≤ k−1) = p` for the intensity t
/// by bisection, then map back to a level through `τ^{-1}`.
fn hk_quantile(family: LimitFamily, k: usize, p: f64) -> f64 {
    let tail = |t: f64| {
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..k {
            term *= t / i as f64;
            sum += term;
        }
        (-t).exp() * sum
    };
    // tail(t) falls monotonically from 1 to 0; bracket then bisect.
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while tail(hi) > p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    family.inverse_tau(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.36787944117144233;
    const TOL: f64 = 1e-12;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn cdf_reference_points() {
        close(LimitFamily::Gumbel.cdf(0.0), E_INV, TOL);
        close(LimitFamily::frechet(1.0).unwrap().cdf(1.0), E_INV, TOL);
        assert_eq!(LimitFamily::weibull(1.0).unwrap().cdf(0.0), 1.0);
        assert_eq!(LimitFamily::frechet(2.0).unwrap().cdf(-3.0), 0.0);
    }

    #[test]
    fn quantile_reference_points() {
        close(LimitFamily::Gumbel.quantile(E_INV).unwrap(), 0.0, TOL);
        close(
            LimitFamily::frechet(1.0).unwrap().quantile(E_INV).unwrap(),
            1.0,
            TOL,
        );
        close(
            LimitFamily::weibull(1.0).unwrap().quantile(E_INV).unwrap(),
            -1.0,
            TOL,
        );
        assert!(LimitFamily::Gumbel.quantile(0.0).is_err());
        assert!(LimitFamily::Gumbel.quantile(1.0).is_err());
    }

    #[test]
    fn tau_reference_points() {
        close(LimitFamily::Gumbel.tau(0.0), 1.0, TOL);
        close(LimitFamily::Gumbel.tau(std::f64::consts::LN_2), 0.5, TOL);
        assert_eq!(LimitFamily::weibull(1.0).unwrap().tau(0.0), 0.0);
        assert_eq!(LimitFamily::frechet(1.0).unwrap().tau(0.0), f64::INFINITY);
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(LimitFamily::frechet(0.0).is_err());
        assert!(LimitFamily::frechet(-1.0).is_err());
        assert!(LimitFamily::weibull(f64::NAN).is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("gumbel".parse::<LimitFamily>().unwrap(), LimitFamily::Gumbel);
        assert_eq!(
            "frechet:2.5".parse::<LimitFamily>().unwrap(),
            LimitFamily::Frechet { shape: 2.5 }
        );
        assert_eq!(
            "weibull:1".parse::<LimitFamily>().unwrap(),
            LimitFamily::Weibull { shape: 1.0 }
        );
        assert!("gauss".parse::<LimitFamily>().is_err());
        assert!("frechet:-1".parse::<LimitFamily>().is_err());
    }

    #[test]
    fn marginal_limit_reference_points() {
        close(
            marginal_limit(LimitFamily::Gumbel, 1, 0.0).unwrap(),
            E_INV,
            TOL,
        );
        close(
            marginal_limit(LimitFamily::Gumbel, 2, 0.0).unwrap(),
            2.0 * E_INV,
            TOL,
        );
        close(
            marginal_limit(LimitFamily::Gumbel, 3, 0.0).unwrap(),
            2.5 * E_INV,
            TOL,
        );
        assert!(marginal_limit(LimitFamily::Gumbel, 0, 0.0).is_err());
    }

    #[test]
    fn marginal_limit_zero_beyond_support() {
        let fr = LimitFamily::frechet(1.5).unwrap();
        assert_eq!(marginal_limit(fr, 3, -2.0).unwrap(), 0.0);
    }

    #[test]
    fn marginal_limit_saturates_in_k() {
        // H_k(x) → 1 as k → ∞ for fixed x with 0 < G(x) < 1.
        for tau in [0.5, 1.0, 5.0] {
            let x = -(tau as f64).ln(); // Gumbel level with that intensity
            let h = marginal_limit(LimitFamily::Gumbel, 50, x).unwrap();
            assert!((1.0 - h).abs() < 1e-10, "tau={tau}: H_50={h}");
        }
    }

    #[test]
    fn poisson_prob_reference_points() {
        close(constrained_poisson_prob(&[1.0], &[0]).unwrap(), E_INV, TOL);
        close(
            constrained_poisson_prob(&[0.5, 0.5], &[0, 1]).unwrap(),
            1.5 * E_INV,
            TOL,
        );
        close(
            constrained_poisson_prob(&[1.0, 0.0, 0.0], &[0, 1, 2]).unwrap(),
            E_INV,
            TOL,
        );
    }

    #[test]
    fn poisson_prob_rejects_bad_blocks() {
        assert_eq!(
            constrained_poisson_prob(&[1.0, 1.0], &[1, 0]),
            Err(Error::CapsDecreasing)
        );
        assert!(constrained_poisson_prob(&[-0.1], &[0]).is_err());
        assert!(constrained_poisson_prob(&[1.0], &[0, 1]).is_err());
    }

    #[test]
    fn poisson_prob_infinite_intensity_is_zero() {
        assert_eq!(
            constrained_poisson_prob(&[f64::INFINITY], &[5]).unwrap(),
            0.0
        );
        assert_eq!(
            constrained_poisson_prob(&[0.5, f64::INFINITY], &[0, 3]).unwrap(),
            0.0
        );
    }

    #[test]
    fn joint_limit_reference_points() {
        let xs = LevelVector::joint(vec![std::f64::consts::LN_2, 0.0]).unwrap();
        close(
            joint_limit(LimitFamily::Gumbel, &xs).unwrap(),
            1.5 * E_INV,
            TOL,
        );
        // Closed form e^{−τ₂}(1 + τ₂ − τ₁) for k = 2.
        close(
            joint_limit(LimitFamily::Gumbel, &xs).unwrap(),
            (-1.0_f64).exp() * (1.0 + 1.0 - 0.5),
            TOL,
        );
    }

    #[test]
    fn joint_limit_single_level_is_cdf() {
        for x in [-1.0, 0.0, 2.5] {
            let xs = LevelVector::joint(vec![x]).unwrap();
            close(
                joint_limit(LimitFamily::Gumbel, &xs).unwrap(),
                LimitFamily::Gumbel.cdf(x),
                TOL,
            );
        }
    }

    #[test]
    fn unordered_levels_rejected() {
        assert_eq!(
            LevelVector::joint(vec![0.0, 0.0]).unwrap_err(),
            Error::LevelsNotDecreasing
        );
        assert_eq!(
            LevelVector::joint(vec![0.0, 1.0]).unwrap_err(),
            Error::LevelsNotDecreasing
        );
    }

    #[test]
    fn subset_marginal_reference_points() {
        let single = LevelVector::with_ranks(vec![0.0], vec![2]).unwrap();
        close(
            subset_marginal(LimitFamily::Gumbel, &single).unwrap(),
            2.0 * E_INV,
            TOL,
        );

        let pair = LevelVector::with_ranks(vec![std::f64::consts::LN_2, 0.0], vec![1, 3]).unwrap();
        close(
            subset_marginal(LimitFamily::Gumbel, &pair).unwrap(),
            1.625 * E_INV,
            TOL,
        );
    }

    #[test]
    fn subset_with_full_ranks_equals_joint() {
        let levels = vec![1.3, 0.4, -0.2];
        let joint = LevelVector::joint(levels.clone()).unwrap();
        let subset = LevelVector::with_ranks(levels, vec![1, 2, 3]).unwrap();
        close(
            joint_limit(LimitFamily::Gumbel, &joint).unwrap(),
            subset_marginal(LimitFamily::Gumbel, &subset).unwrap(),
            TOL,
        );
    }

    #[test]
    fn degenerate_weibull_levels_give_mass_one() {
        // Levels at or above the Weibull upper endpoint have τ = 0.
        let w = LimitFamily::weibull(1.0).unwrap();
        let xs = LevelVector::joint(vec![2.0, 1.0, 0.0]).unwrap();
        close(joint_limit(w, &xs).unwrap(), 1.0, TOL);
    }

    #[test]
    fn integral_total_mass() {
        for family in [
            LimitFamily::Gumbel,
            LimitFamily::frechet(2.0).unwrap(),
            LimitFamily::weibull(1.0).unwrap(),
        ] {
            for k in [1, 3] {
                let f = TestFunction::Custom {
                    f: |_| 1.0,
                    bound: 1.0,
                };
                let q = integral_against_hk(f, family, k, 4096).unwrap();
                close(q.value, 1.0, 1e-9);
            }
        }
    }

    #[test]
    fn integral_probability_transform() {
        // ∫ G dG = 1/2 for k = 1.
        let q = integral_against_hk(TestFunction::LimitCdf, LimitFamily::Gumbel, 1, 8192).unwrap();
        close(q.value, 0.5, 1e-6);
    }

    #[test]
    fn integral_rejects_bad_input() {
        assert!(integral_against_hk(TestFunction::clip(), LimitFamily::Gumbel, 1, 1).is_err());
        let unbounded = TestFunction::Custom {
            f: |x| x,
            bound: f64::INFINITY,
        };
        assert_eq!(
            integral_against_hk(unbounded, LimitFamily::Gumbel, 1, 64),
            Err(Error::UnboundedTestFunction)
        );
    }

    #[test]
    fn integral_refinement_within_reported_error() {
        for k in [1, 2] {
            let q = integral_against_hk(TestFunction::clip(), LimitFamily::Gumbel, k, 2048).unwrap();
            let q2 =
                integral_against_hk(TestFunction::clip(), LimitFamily::Gumbel, k, 4096).unwrap();
            assert!(
                (q2.value - q.value).abs() <= q.error,
                "k={k}: delta {} vs error {}",
                (q2.value - q.value).abs(),
                q.error
            );
        }
    }
}
