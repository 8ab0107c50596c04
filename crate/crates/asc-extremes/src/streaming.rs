//! Running top-k order statistics of a stream.

use crate::error::{Error, Result};

/// Streaming container of the k largest values seen so far, sorted
/// descending: `top(1) ≥ top(2) ≥ … ≥ top(k)`.
///
/// An insertion-sorted buffer beats a heap at these sizes (k ≤ ~64):
/// inserts are O(k) worst case and most observations fall below the
/// current k-th maximum and cost one comparison. Duplicates are kept with
/// stable multiset semantics, so the tracker is total on all inputs even
/// though ties are a.s. impossible under a continuous parent.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKTracker {
    capacity: usize,
    values: Vec<f64>,
    count: u64,
}

impl TopKTracker {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::ZeroOrder);
        }
        Ok(TopKTracker {
            capacity,
            values: Vec::with_capacity(capacity),
            count: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Observations consumed so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// The tracked maxima, descending. Holds `min(count, k)` entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn insert(&mut self, x: f64) {
        self.count += 1;
        if self.values.len() == self.capacity {
            if x <= self.values[self.capacity - 1] {
                return;
            }
            self.values.pop();
        }
        // First index whose value is not above x; ties insert after equals.
        let pos = self.values.partition_point(|&v| v > x || v == x);
        self.values.insert(pos, x);
    }

    /// The j-th largest value seen (1-indexed).
    pub fn top(&self, j: usize) -> Result<f64> {
        if j == 0 || j > self.values.len() {
            return Err(Error::OrderStatisticUndefined {
                requested: j,
                available: self.values.len(),
            });
        }
        Ok(self.values[j - 1])
    }

    /// The joint event `M^(j) ≤ thresholds[j−1]` for every `j = 1..=k`.
    ///
    /// Thresholds must be nonincreasing (they come from `a_n x_j + b_n`
    /// with decreasing levels and `a_n > 0`) and all k order statistics
    /// must exist.
    pub fn joint_indicator(&self, thresholds: &[f64]) -> Result<bool> {
        if thresholds.len() != self.capacity {
            return Err(Error::ThresholdCountMismatch {
                expected: self.capacity,
                got: thresholds.len(),
            });
        }
        if thresholds.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::ThresholdsNotNonincreasing);
        }
        if (self.count as usize) < self.capacity {
            return Err(Error::OrderStatisticUndefined {
                requested: self.capacity,
                available: self.values.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(thresholds)
            .all(|(value, threshold)| value <= threshold))
    }
}
