//! Hill estimator of the tail index.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Positive values in descending order.
fn descending_positive(samples: &[f64]) -> Vec<f64> {
    let mut pos: Vec<f64> = samples.iter().copied().filter(|&v| v > 0.0).collect();
    pos.sort_by(|a, b| b.total_cmp(a));
    pos
}

fn check_k(k: usize, positive: usize) -> Result<()> {
    if k < 2 || k >= positive {
        return Err(Error::InvalidInput(format!(
            "hill needs 2 <= k < #positive samples ({positive}), got k = {k}"
        )));
    }
    Ok(())
}

fn estimate(desc: &[f64], k: usize, log_sum: f64) -> Result<f64> {
    let threshold = desc[k];
    if desc[0] == threshold {
        return Err(Error::DegenerateTail { k });
    }
    Ok(k as f64 / (log_sum - k as f64 * threshold.ln()))
}

/// `[ (1/k) sum_{i<=k} log(X_(i) / X_(k+1)) ]^-1` over the descending order
/// statistics of the positive samples.
pub fn hill(samples: &[f64], k: usize) -> Result<f64> {
    let desc = descending_positive(samples);
    check_k(k, desc.len())?;
    let threshold = desc[k];
    if desc[0] == threshold {
        return Err(Error::DegenerateTail { k });
    }
    let mean_excess = desc[..k].iter().map(|v| (v / threshold).ln()).sum::<f64>() / k as f64;
    Ok(1.0 / mean_excess)
}

/// Hill estimates on up to `points` values of `k`, log-spaced over
/// `[n/200, n/10]` with `n` the number of positive samples. Degenerate `k` are
/// skipped.
pub fn hill_curve(samples: &[f64], points: usize) -> BTreeMap<usize, f64> {
    let desc = descending_positive(samples);
    let n = desc.len();
    let lo = (n / 200).max(2);
    let hi = (n / 10).min(n.saturating_sub(1));
    let mut out = BTreeMap::new();
    if hi < lo || points == 0 {
        return out;
    }
    let ks: Vec<usize> = if points == 1 || hi == lo {
        vec![lo]
    } else {
        let ratio = (hi as f64 / lo as f64).ln();
        let mut ks: Vec<usize> = (0..points)
            .map(|i| (lo as f64 * (ratio * i as f64 / (points - 1) as f64).exp()).round() as usize)
            .map(|k| k.clamp(lo, hi))
            .collect();
        ks.dedup();
        ks
    };
    let mut prefix = 0.0;
    let mut done = 0;
    for k in ks {
        while done < k {
            prefix += desc[done].ln();
            done += 1;
        }
        if let Ok(a) = estimate(&desc, k, prefix) {
            out.insert(k, a);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec;

    fn pareto_grid(n: usize) -> Vec<f64> {
        let d = DistributionSpec::pareto(2.0, 1.0).unwrap();
        (1..=n)
            .map(|i| d.upper_quantile((i as f64 - 0.5) / n as f64))
            .collect()
    }

    #[test]
    fn pareto_quantile_grid() {
        let a = hill(&pareto_grid(100_000), 1000).unwrap();
        assert!((1.9..=2.1).contains(&a), "{a}");
    }

    #[test]
    fn degenerate_and_bad_k() {
        assert!(matches!(
            hill(&[3.0; 100], 10),
            Err(Error::DegenerateTail { k: 10 })
        ));
        assert!(hill(&[1.0, 2.0, 3.0], 1).is_err());
        assert!(hill(&[1.0, 2.0, 3.0], 3).is_err());
        // nonpositive values are ignored
        assert!(hill(&[-1.0, 0.0, 1.0, 2.0], 2).is_err());
    }

    #[test]
    fn power_of_two_scaling_is_exact() {
        let s = pareto_grid(10_000);
        let scaled: Vec<f64> = s.iter().map(|v| v * 8.0).collect();
        assert_eq!(hill(&s, 500).unwrap(), hill(&scaled, 500).unwrap());
    }

    #[test]
    fn curve_matches_pointwise() {
        let s = pareto_grid(20_000);
        let curve = hill_curve(&s, 20);
        assert!(curve.len() > 10);
        assert_eq!(*curve.keys().next().unwrap(), 100);
        assert_eq!(*curve.keys().last().unwrap(), 2000);
        for (&k, &a) in &curve {
            assert!((a - hill(&s, k).unwrap()).abs() < 1e-10 * a);
        }
    }
}
