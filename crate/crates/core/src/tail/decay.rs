//! Least-squares fit of a geometric decay `s_n ~ K eta^n`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `eta = exp(slope)`.
    pub rate: f64,
    /// Fitted `K`.
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Fits `log s_n = log K + n log eta`. Needs at least four positive entries.
pub fn geometric_decay_fit(series: &BTreeMap<u32, f64>) -> Result<DecayFit> {
    if series.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "decay fit needs at least 4 points, got {}",
            series.len()
        )));
    }
    if let Some((&n, _)) = series.iter().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositive { n });
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .map(|(&n, &v)| (f64::from(n), v.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        rate: slope.exp(),
        prefactor: intercept.exp(),
        r_squared,
    })
}
