//! Helpers shared across the integration test binaries.
#![allow(dead_code)]

pub fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted[sorted.len() / 2]
}

/// Brute-force staircase probability `P(S_i ≤ c_i for all i)`: enumerate
/// every count vector with admissible partial sums and add up products of
/// Poisson pmf values computed from factorials. Independent of the DP.
pub fn staircase_by_enumeration(lambdas: &[f64], caps: &[usize]) -> f64 {
    fn pmf(lambda: f64, n: usize) -> f64 {
        let factorial: f64 = (1..=n).map(|i| i as f64).product();
        lambda.powi(n as i32) * (-lambda).exp() / factorial
    }
    fn recurse(lambdas: &[f64], caps: &[usize], block: usize, partial: usize, weight: f64) -> f64 {
        if block == lambdas.len() {
            return weight;
        }
        let mut total = 0.0;
        for count in 0..=(caps[block] - partial) {
            total += recurse(
                lambdas,
                caps,
                block + 1,
                partial + count,
                weight * pmf(lambdas[block], count),
            );
        }
        total
    }
    recurse(lambdas, caps, 0, 0, 1.0)
}
