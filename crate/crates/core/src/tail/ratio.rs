//! Tail-ratio curves at matched denominator quantiles.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bands_from_replicates, resample_counts, BootstrapSpec};
use super::ccdf::SortedSample;
use super::hill::hill_curve;
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};

/// Exceedance floor applied when none is configured.
pub const DEFAULT_MIN_EXCEEDANCES: usize = 100;

/// Number of `k` values in a report's Hill curve.
pub const HILL_CURVE_POINTS: usize = 60;

/// Reference tail of a ratio: a second sample or a closed-form law.
#[derive(Debug, Clone, Copy)]
pub enum Denominator<'a> {
    Sample(&'a [f64]),
    Analytic(&'a DistributionSpec),
}

/// Empirical `P(num > x) / P(den > x)` on a grid of denominator quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// Surviving upper-tail probabilities, largest first.
    pub quantile_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub ccdf_num: Vec<f64>,
    pub ccdf_den: Vec<f64>,
    pub ratio: Vec<f64>,
    pub ratio_ci_low: Vec<f64>,
    pub ratio_ci_high: Vec<f64>,
    pub exceedances_num: Vec<usize>,
    /// `None` for an analytic denominator.
    pub exceedances_den: Option<Vec<usize>>,
    pub hill_curve: BTreeMap<usize, f64>,
    pub n_num: usize,
    pub n_den: Option<usize>,
    /// Grid probabilities dropped by the exceedance floor.
    pub dropped: Vec<f64>,
}

impl TailReport {
    /// Number of grid points whose band contains `target`.
    pub fn band_hits(&self, target: f64) -> usize {
        self.ratio_ci_low
            .iter()
            .zip(&self.ratio_ci_high)
            .filter(|(lo, hi)| **lo <= target && target <= **hi)
            .count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "p,x,ccdf_num,ccdf_den,ratio,ci_low,ci_high")?;
        for i in 0..self.x_grid.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.quantile_grid[i],
                self.x_grid[i],
                self.ccdf_num[i],
                self.ccdf_den[i],
                self.ratio[i],
                self.ratio_ci_low[i],
                self.ratio_ci_high[i]
            )?;
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("quantile grid is empty".into()));
    }
    if let Some(p) = grid.iter().find(|p| !(**p > 0.0 && **p < 0.5)) {
        return Err(Error::InvalidInput(format!(
            "grid probabilities must lie in (0, 0.5), got {p}"
        )));
    }
    let mut g = grid.to_vec();
    g.sort_by(|a, b| b.total_cmp(a));
    g.dedup();
    Ok(g)
}

/// Counts strictly above each (increasing) threshold, from bin counts
/// `bins[j] = #{x_j < s <= x_(j+1)}` with the last bin open.
fn suffix_counts(bins: &[u64]) -> Vec<u64> {
    let mut out = vec![0; bins.len()];
    let mut acc = 0;
    for j in (0..bins.len()).rev() {
        acc += bins[j];
        out[j] = acc;
    }
    out
}

/// Full bin vector (below-grid bin first) from exceedance counts.
fn bins_of(n: usize, above: &[usize]) -> Vec<u64> {
    let mut bins = Vec::with_capacity(above.len() + 1);
    bins.push((n - above[0]) as u64);
    for j in 0..above.len() {
        let next = above.get(j + 1).copied().unwrap_or(0);
        bins.push((above[j] - next) as u64);
    }
    bins
}

/// Point estimates only; the band collapses onto the ratio.
pub fn tail_ratio(
    num: &[f64],
    den: Denominator<'_>,
    grid: &[f64],
    min_exceedances: usize,
) -> Result<TailReport> {
    build(num, den, grid, min_exceedances, None)
}

/// Point estimates with a percentile bootstrap band.
///
/// The x-grid is held at its full-sample values, so for each resample only
/// the exceedance counts change. Those are drawn directly from the multinomial
/// law of the bin counts, which is the same distribution full resampling
/// gives for this statistic.
pub fn tail_ratio_with_band(
    num: &[f64],
    den: Denominator<'_>,
    grid: &[f64],
    min_exceedances: usize,
    bootstrap: &BootstrapSpec,
) -> Result<TailReport> {
    build(num, den, grid, min_exceedances, Some(bootstrap))
}

fn build(
    num: &[f64],
    den: Denominator<'_>,
    grid: &[f64],
    min_exceedances: usize,
    bootstrap: Option<&BootstrapSpec>,
) -> Result<TailReport> {
    let grid = check_grid(grid)?;
    let num_sorted = SortedSample::new(num)?;
    let n_num = num_sorted.len();
    let den_sorted = match den {
        Denominator::Sample(s) => Some(SortedSample::new(s)?),
        Denominator::Analytic(d) => {
            d.validate()?;
            None
        }
    };

    let mut kept_p = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    let mut above_num = Vec::new();
    let mut above_den = Vec::new();
    let mut ccdf_den = Vec::new();
    let mut dropped = Vec::new();
    for &p in &grid {
        let x = match (&den_sorted, den) {
            (Some(s), _) => s.upper_quantile(p),
            (None, Denominator::Analytic(d)) => d.upper_quantile(p),
            _ => unreachable!(),
        };
        let a = num_sorted.count_above(x);
        let (b, cd) = match &den_sorted {
            Some(s) => {
                let b = s.count_above(x);
                (Some(b), b as f64 / s.len() as f64)
            }
            None => match den {
                Denominator::Analytic(d) => (None, d.ccdf(x)),
                _ => unreachable!(),
            },
        };
        let enough = a >= min_exceedances && b.map_or(true, |b| b >= min_exceedances) && cd > 0.0;
        // lattice-valued samples can map neighbouring p onto one x
        let increasing = xs.last().map_or(true, |&last| x > last);
        if enough && increasing {
            kept_p.push(p);
            xs.push(x);
            above_num.push(a);
            if let Some(b) = b {
                above_den.push(b);
            }
            ccdf_den.push(cd);
        } else {
            dropped.push(p);
        }
    }
    if xs.is_empty() {
        return Err(Error::EmptyGrid { min_exceedances });
    }

    let ccdf_num: Vec<f64> = above_num.iter().map(|&a| a as f64 / n_num as f64).collect();
    let ratio: Vec<f64> = ccdf_num.iter().zip(&ccdf_den).map(|(a, b)| a / b).collect();

    let (ratio_ci_low, ratio_ci_high) = match bootstrap {
        None => (ratio.clone(), ratio.clone()),
        Some(spec) => {
            let num_bins = bins_of(n_num, &above_num);
            let den_bins = den_sorted.as_ref().map(|s| bins_of(s.len(), &above_den));
            let reps: Vec<Vec<f64>> = (0..spec.resamples)
                .into_par_iter()
                .map(|r| {
                    let mut rng = spec.seed.child(r as u64).rng();
                    let a = suffix_counts(&resample_counts(&num_bins, &mut rng)[1..]);
                    let b = den_bins
                        .as_ref()
                        .map(|bins| suffix_counts(&resample_counts(bins, &mut rng)[1..]));
                    (0..xs.len())
                        .map(|j| {
                            let pa = a[j] as f64 / n_num as f64;
                            let pb = match (&b, &den_sorted) {
                                (Some(b), Some(s)) => b[j] as f64 / s.len() as f64,
                                _ => ccdf_den[j],
                            };
                            if pb > 0.0 {
                                pa / pb
                            } else {
                                f64::NAN
                            }
                        })
                        .collect()
                })
                .collect();
            let bands = bands_from_replicates(&reps, xs.len(), spec.level);
            // percentile bands of a skewed ratio can exclude the point
            // estimate by a hair; widen to keep low <= ratio <= high
            bands
                .iter()
                .zip(&ratio)
                .map(|(&(lo, hi), &r)| (lo.min(r), hi.max(r)))
                .unzip()
        }
    };

    Ok(TailReport {
        quantile_grid: kept_p,
        x_grid: xs,
        ccdf_num,
        ccdf_den,
        ratio,
        ratio_ci_low,
        ratio_ci_high,
        exceedances_num: above_num,
        exceedances_den: den_sorted.as_ref().map(|_| above_den),
        hill_curve: hill_curve(num, HILL_CURVE_POINTS),
        n_num,
        n_den: den_sorted.as_ref().map(SortedSample::len),
        dropped,
    })
}
