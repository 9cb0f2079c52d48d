//! Empirical distribution functions.

use crate::error::{Error, Result};

/// `#{s > x} / n`.
pub fn empirical_ccdf(samples: &[f64], x: f64) -> f64 {
    assert!(!samples.is_empty(), "empirical_ccdf needs samples");
    samples.iter().filter(|&&s| s > x).count() as f64 / samples.len() as f64
}

/// An ascending copy of a sample, for repeated tail queries.
#[derive(Debug, Clone)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("sample is empty".into()));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("sample contains NaN".into()));
        }
        let mut values = samples.to_vec();
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `#{s > x}`.
    pub fn count_above(&self, x: f64) -> usize {
        self.values.len() - self.values.partition_point(|&v| v <= x)
    }

    pub fn ccdf(&self, x: f64) -> f64 {
        self.count_above(x) as f64 / self.values.len() as f64
    }

    /// Empirical upper `p`-quantile: the `(k+1)`-th largest value with
    /// `k = ceil(p n)`, so that without ties exactly `k` values exceed it.
    pub fn upper_quantile(&self, p: f64) -> f64 {
        let n = self.values.len();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n.max(2) - 1);
        self.values[n.saturating_sub(k + 1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccdf_examples() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_ccdf(&s, 2.5), 0.5);
        assert_eq!(empirical_ccdf(&s, 0.0), 1.0);
        assert_eq!(empirical_ccdf(&s, 9.0), 0.0);
        let sorted = SortedSample::new(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        for x in [0.0, 1.0, 2.5, 4.0, 9.0] {
            assert_eq!(sorted.ccdf(x), empirical_ccdf(&s, x));
        }
        assert_eq!(sorted.upper_quantile(0.25), 3.0);
        assert_eq!(sorted.upper_quantile(0.5), 2.0);
        assert_eq!(sorted.count_above(sorted.upper_quantile(0.5)), 2);
    }
}
