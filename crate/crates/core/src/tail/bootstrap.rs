//! Percentile bootstrap bands.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::SeedNode;

/// Fewest resamples accepted.
pub const MIN_RESAMPLES: usize = 200;

/// Resample count, band level and stream for a bootstrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub level: f64,
    pub seed: SeedNode,
}

impl BootstrapSpec {
    pub fn new(resamples: usize, level: f64, seed: SeedNode) -> Result<Self> {
        if resamples < MIN_RESAMPLES {
            return Err(Error::InvalidInput(format!(
                "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
            )));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidParameter {
                name: "level",
                value: level,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(Self {
            resamples,
            level,
            seed,
        })
    }
}

/// Linear-interpolation percentile of an ascending slice.
pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    if w == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Turns `B` replicate statistic vectors into per-component percentile bands.
/// NaN replicates are ignored.
pub(crate) fn bands_from_replicates(
    reps: &[Vec<f64>],
    width: usize,
    level: f64,
) -> Vec<(f64, f64)> {
    let tail = 0.5 * (1.0 - level);
    (0..width)
        .map(|j| {
            let mut col: Vec<f64> = reps.iter().map(|r| r[j]).filter(|v| !v.is_nan()).collect();
            col.sort_unstable_by(f64::total_cmp);
            (percentile(&col, tail), percentile(&col, 1.0 - tail))
        })
        .collect()
}

fn resample<R: Rng + ?Sized>(xs: &[f64], rng: &mut R) -> Vec<f64> {
    (0..xs.len())
        .map(|_| xs[rng.gen_range(0..xs.len())])
        .collect()
}

/// Percentile band of `statistic(a*, b*)` over resamples drawn with
/// replacement from `a` and `b` independently. Resample `r` uses the stream
/// `spec.seed.child(r)`.
pub fn bootstrap_band<F>(
    a: &[f64],
    b: &[f64],
    spec: &BootstrapSpec,
    statistic: F,
) -> Result<Vec<(f64, f64)>>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64> + Sync,
{
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput(
            "bootstrap needs nonempty samples".into(),
        ));
    }
    let width = statistic(a, b).len();
    let reps: Vec<Vec<f64>> = (0..spec.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = spec.seed.child(r as u64).rng();
            let ra = resample(a, &mut rng);
            let rb = resample(b, &mut rng);
            statistic(&ra, &rb)
        })
        .collect();
    Ok(bands_from_replicates(&reps, width, spec.level))
}

/// Bin counts of a size-`n` resample with replacement from a sample whose bin
/// counts are `counts`: a multinomial draw via successive binomials.
pub(crate) fn resample_counts<R: Rng + ?Sized>(counts: &[u64], rng: &mut R) -> Vec<u64> {
    let total: u64 = counts.iter().sum();
    let mut left_draws = total;
    let mut left_mass = total;
    let mut out = Vec::with_capacity(counts.len());
    for &c in counts {
        let k = if left_draws == 0 || c == 0 {
            0
        } else if c >= left_mass {
            left_draws
        } else {
            let p = c as f64 / left_mass as f64;
            Binomial::new(left_draws, p)
                .expect("p in (0, 1)")
                .sample(rng)
        };
        out.push(k);
        left_draws -= k;
        left_mass -= c;
    }
    out
}
