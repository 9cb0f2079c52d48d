//! Closed-form tail constants, moment bounds and decay rates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::law::{BranchingLaw, Regime};

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.comp
    }
}

fn domain(msg: String) -> Error {
    Error::Domain(msg)
}

fn check_zn_args(e_q: f64, rho: f64, rho_alpha: f64, alpha: f64) -> Result<()> {
    if !(e_q > 0.0 && e_q.is_finite()) {
        return Err(domain(format!("E[Q] must be positive, got {e_q}")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(domain(format!("rho must lie in [0, 1), got {rho}")));
    }
    if !(0.0..1.0).contains(&rho_alpha) {
        return Err(domain(format!(
            "rho_alpha must lie in [0, 1), got {rho_alpha}"
        )));
    }
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(domain(format!("alpha must exceed 1, got {alpha}")));
    }
    Ok(())
}

fn check_rho_alpha(rho_alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho_alpha) {
        Ok(())
    } else {
        Err(domain(format!(
            "rho_alpha must lie in [0, 1), got {rho_alpha}"
        )))
    }
}

/// `1 - (1 - y)^alpha` without cancellation for small `y`.
fn one_minus_pow_complement(y: f64, alpha: f64) -> f64 {
    -(alpha * (-y).ln_1p()).exp_m1()
}

/// `H_n = E[Q]^alpha (1-rho)^-alpha sum_{k=0}^n rho_alpha^k (1 - rho^(n-k))^alpha`,
/// the constant in `P(R^(n) > x) ~ H_n P(Z_N > x)`.
pub fn h_n_zn(e_q: f64, rho: f64, rho_alpha: f64, alpha: f64, n: u32) -> Result<f64> {
    check_zn_args(e_q, rho, rho_alpha, alpha)?;
    let mut acc = Neumaier::default();
    for k in 0..=n {
        let inner = 1.0 - rho.powi((n - k) as i32);
        acc.add(rho_alpha.powi(k as i32) * inner.powf(alpha));
    }
    Ok(e_q.powf(alpha) * (1.0 - rho).powf(-alpha) * acc.total())
}

/// `H = E[Q]^alpha / ((1-rho)^alpha (1-rho_alpha))`.
pub fn h_limit_zn(e_q: f64, rho: f64, rho_alpha: f64, alpha: f64) -> Result<f64> {
    check_zn_args(e_q, rho, rho_alpha, alpha)?;
    Ok(e_q.powf(alpha) / ((1.0 - rho).powf(alpha) * (1.0 - rho_alpha)))
}

/// `H - H_n`, summed term by term so that it stays accurate long after the
/// difference of the two constants has underflowed to rounding noise.
pub fn h_gap_zn(e_q: f64, rho: f64, rho_alpha: f64, alpha: f64, n: u32) -> Result<f64> {
    check_zn_args(e_q, rho, rho_alpha, alpha)?;
    let mut acc = Neumaier::default();
    acc.add(rho_alpha.powi(n as i32 + 1) / (1.0 - rho_alpha));
    for k in 0..=n {
        let y = rho.powi((n - k) as i32);
        acc.add(rho_alpha.powi(k as i32) * one_minus_pow_complement(y, alpha));
    }
    Ok(e_q.powf(alpha) * (1.0 - rho).powf(-alpha) * acc.total())
}

/// `sum_{k=0}^n rho_alpha^k`, the constant in `P(R^(n) > x) ~ H_n P(Q > x)`.
pub fn h_n_q(rho_alpha: f64, n: u32) -> Result<f64> {
    if !(rho_alpha >= 0.0 && rho_alpha.is_finite()) {
        return Err(domain(format!(
            "rho_alpha must be finite and nonnegative, got {rho_alpha}"
        )));
    }
    let mut acc = Neumaier::default();
    for k in 0..=n {
        acc.add(rho_alpha.powi(k as i32));
    }
    Ok(acc.total())
}

/// `1 / (1 - rho_alpha)`.
pub fn h_limit_q(rho_alpha: f64) -> Result<f64> {
    check_rho_alpha(rho_alpha)?;
    Ok(1.0 / (1.0 - rho_alpha))
}

/// `1/(1-rho_alpha) - H_n`, exactly `rho_alpha^(n+1) / (1 - rho_alpha)`.
pub fn h_gap_q(rho_alpha: f64, n: u32) -> Result<f64> {
    check_rho_alpha(rho_alpha)?;
    Ok(rho_alpha.powi(n as i32 + 1) / (1.0 - rho_alpha))
}

/// `E[R^(n)] = E[Q] (1 - rho^(n+1)) / (1 - rho)`.
pub fn mean_r_partial(e_q: f64, rho: f64, n: u32) -> f64 {
    if rho == 1.0 {
        return e_q * (n + 1) as f64;
    }
    e_q * (1.0 - rho.powi(n as i32 + 1)) / (1.0 - rho)
}

/// `E[W_n] = E[Q] rho^n`.
pub fn mean_w(e_q: f64, rho: f64, n: u32) -> f64 {
    e_q * rho.powi(n as i32)
}

fn rho_alpha_of(law: &BranchingLaw, alpha: f64) -> Result<f64> {
    law.rho_beta_analytic(alpha).require("rho_alpha")
}

/// `rho_alpha + c E[X]^alpha` for one-shot sums `sum_i C_i X_i + Q` whose
/// weight total satisfies `P(Z_N > x) ~ c P(X > x)`.
pub fn sum_constant_zn(law: &BranchingLaw, alpha: f64, e_x: f64, c_ratio: f64) -> Result<f64> {
    if !(c_ratio > 0.0) {
        return Err(domain(format!(
            "tail-equivalence constant must be positive, got {c_ratio}"
        )));
    }
    Ok(rho_alpha_of(law, alpha)? + c_ratio * e_x.powf(alpha))
}

/// `rho_alpha + c` for one-shot sums whose innovation satisfies
/// `P(Q > x) ~ c P(X > x)`.
pub fn sum_constant_q(law: &BranchingLaw, alpha: f64, c_ratio: f64) -> Result<f64> {
    if !(c_ratio > 0.0) {
        return Err(domain(format!(
            "tail-equivalence constant must be positive, got {c_ratio}"
        )));
    }
    Ok(rho_alpha_of(law, alpha)? + c_ratio)
}

/// `(E[C])^alpha`, the factor in `P(Z_N > x) ~ (E C)^alpha P(N > x)` for
/// i.i.d. weights independent of `N`.
pub fn jessen_mikosch_zn_constant(law: &BranchingLaw, alpha: f64) -> Result<f64> {
    match law {
        BranchingLaw::IndependentIid { c, .. } => Ok(c.mean().require("E[C]")?.powf(alpha)),
        other => Err(Error::ModelMismatch(format!(
            "needs an independent_iid law, got {}",
            other.model_name()
        ))),
    }
}

/// `lim P(Z_N > x) / P(X > x)` from the two power tails.
pub fn z_n_tail_ratio(law: &BranchingLaw, x: &DistributionSpec) -> Result<f64> {
    let z = law
        .z_n_tail()
        .ok_or_else(|| Error::ModelMismatch("Z_N is not regularly varying".into()))?;
    ratio_of_tails(z.index, z.scale, x)
}

/// `lim P(Q > x) / P(X > x)` from the two power tails.
pub fn q_tail_ratio(law: &BranchingLaw, x: &DistributionSpec) -> Result<f64> {
    let q = law
        .q_law()
        .power_tail()
        .ok_or_else(|| Error::ModelMismatch("Q is not regularly varying".into()))?;
    ratio_of_tails(q.index, q.scale, x)
}

fn ratio_of_tails(index: f64, scale: f64, x: &DistributionSpec) -> Result<f64> {
    let t = x
        .power_tail()
        .ok_or_else(|| Error::ModelMismatch(format!("{x} is not regularly varying")))?;
    if (t.index - index).abs() > 1e-12 {
        return Err(Error::ModelMismatch(format!(
            "tail indices differ: {index} against {}",
            t.index
        )));
    }
    Ok(scale / t.scale)
}

/// `E[(Q^+)^beta] rho_beta^n`, the bound on `E[(W_n^+)^beta]` for `beta` in `(0, 1]`.
pub fn moment_bound_w(law: &BranchingLaw, beta: f64, n: u32) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain(format!(
            "an explicit bound exists only for beta in (0, 1], got {beta}; use moment_decay_rate_w"
        )));
    }
    let q = law
        .q_law()
        .positive_part_moment(beta)
        .require("E[(Q^+)^beta]")?;
    let rho_beta = law.rho_beta_analytic(beta).require("rho_beta")?;
    Ok(q * rho_beta.powi(n as i32))
}

/// Geometric rate `rho v rho_beta` of `E[(W_n^+)^beta]` for `beta > 1`; the
/// prefactor is not available in closed form.
pub fn moment_decay_rate_w(law: &BranchingLaw, beta: f64) -> Result<f64> {
    if !(beta > 1.0) {
        return Err(domain(format!("rate form applies to beta > 1, got {beta}")));
    }
    let rho = law.rho_beta_analytic(1.0).require("rho")?;
    let rho_beta = law.rho_beta_analytic(beta).require("rho_beta")?;
    Ok(rho.max(rho_beta))
}

/// `rho v rho_alpha`: every `eta` above it bounds the uniform tail decay.
pub fn predicted_decay_rate(law: &BranchingLaw, alpha: f64) -> Result<f64> {
    let rho = law.rho_beta_analytic(1.0).require("rho")?;
    let rho_alpha = rho_alpha_of(law, alpha)?;
    let rate = rho.max(rho_alpha);
    if rate >= 1.0 {
        return Err(domain(format!("rho v rho_alpha = {rate} is not below 1")));
    }
    Ok(rate)
}

/// Default test rate `(1 + rho v rho_alpha) / 2`.
pub fn default_eta(rate: f64) -> f64 {
    0.5 * (1.0 + rate)
}

/// All constants for one law and tail index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub alpha: f64,
    pub rho: f64,
    pub rho_alpha: f64,
    pub e_q: f64,
    /// `H_n` keyed by generation.
    pub h_n_table: BTreeMap<u32, f64>,
    pub h_limit: f64,
    pub regime: Regime,
    pub eta: f64,
}

impl TheoryConstants {
    /// Tail constants matching `regime`, with `H_n` tabulated for
    /// `n <= depth`.
    pub fn compute(law: &BranchingLaw, alpha: f64, regime: Regime, depth: u32) -> Result<Self> {
        let rho = law.rho_beta_analytic(1.0).require("rho")?;
        let rho_alpha = rho_alpha_of(law, alpha)?;
        let e_q = law.q_law().mean().require("E[Q]")?;
        let (h_n_table, h_limit) = match regime {
            Regime::ZnDominates => (
                (0..=depth)
                    .map(|n| h_n_zn(e_q, rho, rho_alpha, alpha, n).map(|h| (n, h)))
                    .collect::<Result<_>>()?,
                h_limit_zn(e_q, rho, rho_alpha, alpha)?,
            ),
            Regime::QDominates => (
                (0..=depth)
                    .map(|n| h_n_q(rho_alpha, n).map(|h| (n, h)))
                    .collect::<Result<_>>()?,
                h_limit_q(rho_alpha)?,
            ),
            other => {
                return Err(Error::RegimeMismatch(format!(
                    "no tail constant is available in regime {other}"
                )))
            }
        };
        Ok(TheoryConstants {
            alpha,
            rho,
            rho_alpha,
            e_q,
            h_n_table,
            h_limit,
            regime,
            eta: default_eta(predicted_decay_rate(law, alpha)?),
        })
    }
}
