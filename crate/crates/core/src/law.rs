//! Joint laws of the root vector `(Q, N, C_1, ..., C_N)`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dist::{DistributionSpec, Moment, PowerTail};
use crate::error::{Error, Result};

/// `|rho_alpha - 1|` below this is treated as the critical (Kesten) case.
pub const KESTEN_TOLERANCE: f64 = 1e-9;
const INDEX_TOLERANCE: f64 = 1e-9;

/// One realisation of the root vector. `N` is `weights.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSample {
    pub q: f64,
    pub weights: Vec<f64>,
}

impl RootSample {
    pub fn n(&self) -> usize {
        self.weights.len()
    }
}

/// `Z_N = sum_i C_i`; zero for an empty list.
pub fn z_n(sample: &RootSample) -> f64 {
    sample.weights.iter().sum()
}

/// The dependency models available for `(Q, N, C_1, ..., C_N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawRepr", into = "LawRepr")]
pub enum BranchingLaw {
    /// `Q`, `N` and the `C_i` mutually independent, `C_i` i.i.d.
    IndependentIid {
        q: DistributionSpec,
        n: DistributionSpec,
        c: DistributionSpec,
    },
    /// `C_i = c` for every child.
    DeterministicWeight {
        q: DistributionSpec,
        n: DistributionSpec,
        c: f64,
    },
    /// `Q = 1 - d`, `C_i = d / D_i` with i.i.d. out-degrees `D_i >= 1`.
    PageRankLike {
        d: f64,
        n: DistributionSpec,
        out_degree: DistributionSpec,
    },
    /// `C_i = c / max(N, 1)^gamma`: weights depend on the number of children.
    InverseN {
        q: DistributionSpec,
        n: DistributionSpec,
        c: f64,
        gamma: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(
    tag = "model",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
enum LawRepr {
    #[serde(rename = "independent_iid")]
    IndependentIid {
        q: DistributionSpec,
        n: DistributionSpec,
        c: DistributionSpec,
    },
    DeterministicWeight {
        q: DistributionSpec,
        n: DistributionSpec,
        c: f64,
    },
    #[serde(rename = "pagerank_like")]
    PageRankLike {
        d: f64,
        n: DistributionSpec,
        out_degree: DistributionSpec,
    },
    InverseN {
        q: DistributionSpec,
        n: DistributionSpec,
        c: f64,
        gamma: f64,
    },
}

impl TryFrom<LawRepr> for BranchingLaw {
    type Error = Error;

    fn try_from(r: LawRepr) -> Result<Self> {
        let law = match r {
            LawRepr::IndependentIid { q, n, c } => BranchingLaw::IndependentIid { q, n, c },
            LawRepr::DeterministicWeight { q, n, c } => {
                BranchingLaw::DeterministicWeight { q, n, c }
            }
            LawRepr::PageRankLike { d, n, out_degree } => {
                BranchingLaw::PageRankLike { d, n, out_degree }
            }
            LawRepr::InverseN { q, n, c, gamma } => BranchingLaw::InverseN { q, n, c, gamma },
        };
        law.validate()?;
        Ok(law)
    }
}

impl From<BranchingLaw> for LawRepr {
    fn from(l: BranchingLaw) -> Self {
        match l {
            BranchingLaw::IndependentIid { q, n, c } => LawRepr::IndependentIid { q, n, c },
            BranchingLaw::DeterministicWeight { q, n, c } => {
                LawRepr::DeterministicWeight { q, n, c }
            }
            BranchingLaw::PageRankLike { d, n, out_degree } => {
                LawRepr::PageRankLike { d, n, out_degree }
            }
            BranchingLaw::InverseN { q, n, c, gamma } => LawRepr::InverseN { q, n, c, gamma },
        }
    }
}

fn check_count_law(n: &DistributionSpec, min: f64, what: &str) -> Result<()> {
    n.validate()?;
    if !n.is_integer_valued() || n.support().0 < min {
        return Err(Error::InvalidLaw(format!(
            "{what} must be integer valued on {{{min}, {}, ...}}, got {n}",
            min + 1.0
        )));
    }
    Ok(())
}

fn check_innovation(q: &DistributionSpec) -> Result<()> {
    q.validate()?;
    let (lo, hi) = q.support();
    if lo == 0.0 && hi == 0.0 {
        return Err(Error::InvalidLaw("P(|Q| > 0) must be positive".into()));
    }
    Ok(())
}

fn check_weight(name: &'static str, c: f64) -> Result<()> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: c,
            reason: "weights must be finite and nonnegative",
        })
    }
}

impl BranchingLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            BranchingLaw::IndependentIid { q, n, c } => {
                check_innovation(q)?;
                check_count_law(n, 0.0, "N")?;
                c.validate()?;
                if c.support().0 < 0.0 {
                    return Err(Error::InvalidLaw(format!(
                        "weights must be nonnegative, got {c}"
                    )));
                }
                Ok(())
            }
            BranchingLaw::DeterministicWeight { q, n, c } => {
                check_innovation(q)?;
                check_count_law(n, 0.0, "N")?;
                check_weight("c", *c)
            }
            BranchingLaw::PageRankLike { d, n, out_degree } => {
                if !(*d > 0.0 && *d < 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "d",
                        value: *d,
                        reason: "damping factor must lie in (0, 1)",
                    });
                }
                check_count_law(n, 0.0, "N")?;
                check_count_law(out_degree, 1.0, "out-degree")
            }
            BranchingLaw::InverseN { q, n, c, gamma } => {
                check_innovation(q)?;
                check_count_law(n, 0.0, "N")?;
                check_weight("c", *c)?;
                if !(gamma.is_finite() && *gamma >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "gamma",
                        value: *gamma,
                        reason: "must be finite and nonnegative",
                    });
                }
                Ok(())
            }
        }
    }

    pub fn model_name(&self) -> &'static str {
        match self {
            BranchingLaw::IndependentIid { .. } => "independent_iid",
            BranchingLaw::DeterministicWeight { .. } => "deterministic_weight",
            BranchingLaw::PageRankLike { .. } => "pagerank_like",
            BranchingLaw::InverseN { .. } => "inverse_n",
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("laws always serialize");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Marginal law of `Q`.
    pub fn q_law(&self) -> DistributionSpec {
        match self {
            BranchingLaw::IndependentIid { q, .. }
            | BranchingLaw::DeterministicWeight { q, .. }
            | BranchingLaw::InverseN { q, .. } => q.clone(),
            BranchingLaw::PageRankLike { d, .. } => DistributionSpec::constant(1.0 - d),
        }
    }

    pub fn n_law(&self) -> &DistributionSpec {
        match self {
            BranchingLaw::IndependentIid { n, .. }
            | BranchingLaw::DeterministicWeight { n, .. }
            | BranchingLaw::PageRankLike { n, .. }
            | BranchingLaw::InverseN { n, .. } => n,
        }
    }

    /// `E[N]`.
    pub fn mean_offspring(&self) -> Moment {
        self.n_law().mean()
    }

    /// Draws one root vector, streaming the weights to `on_weight` instead of
    /// materialising them. Returns `Q`.
    ///
    /// Uniforms are consumed in the order `Q`, `N`, then per child its weight
    /// draws followed by whatever `on_weight` itself consumes.
    #[inline]
    pub fn draw_root_with<R, F>(&self, rng: &mut R, mut on_weight: F) -> f64
    where
        R: Rng + ?Sized,
        F: FnMut(&mut R, f64),
    {
        match self {
            BranchingLaw::IndependentIid { q, n, c } => {
                let qv = q.sample(rng);
                let count = n.sample(rng) as u64;
                for _ in 0..count {
                    let w = c.sample(rng);
                    on_weight(rng, w);
                }
                qv
            }
            BranchingLaw::DeterministicWeight { q, n, c } => {
                let qv = q.sample(rng);
                let count = n.sample(rng) as u64;
                for _ in 0..count {
                    on_weight(rng, *c);
                }
                qv
            }
            BranchingLaw::PageRankLike { d, n, out_degree } => {
                let count = n.sample(rng) as u64;
                for _ in 0..count {
                    let deg = out_degree.sample(rng);
                    on_weight(rng, d / deg);
                }
                1.0 - d
            }
            BranchingLaw::InverseN { q, n, c, gamma } => {
                let qv = q.sample(rng);
                let count = n.sample(rng) as u64;
                let w = c / (count.max(1) as f64).powf(*gamma);
                for _ in 0..count {
                    on_weight(rng, w);
                }
                qv
            }
        }
    }

    /// One joint draw of `(Q, N, C_1, ..., C_N)`.
    pub fn draw_root<R: Rng + ?Sized>(&self, rng: &mut R) -> RootSample {
        let mut weights = Vec::new();
        let q = self.draw_root_with(rng, |_, w| weights.push(w));
        RootSample { q, weights }
    }

    /// Closed-form `rho_beta = E[sum_i C_i^beta]`.
    pub fn rho_beta_analytic(&self, beta: f64) -> Moment {
        assert!(beta > 0.0, "beta must be positive");
        match self {
            BranchingLaw::IndependentIid { n, c, .. } => n.mean().times(c.power_mean(beta)),
            BranchingLaw::DeterministicWeight { n, c, .. } => {
                if *c == 0.0 {
                    Moment::Finite(0.0)
                } else {
                    n.mean().map(|m| c.powf(beta) * m)
                }
            }
            BranchingLaw::PageRankLike { d, n, out_degree } => n
                .mean()
                .times(out_degree.power_mean(-beta))
                .map(|v| d.powf(beta) * v),
            BranchingLaw::InverseN { n, c, gamma, .. } => {
                if *c == 0.0 {
                    Moment::Finite(0.0)
                } else {
                    n.power_mean(1.0 - gamma * beta).map(|v| c.powf(beta) * v)
                }
            }
        }
    }

    /// Monte Carlo estimate of `rho_beta` with its standard error.
    pub fn rho_beta_mc<R: Rng + ?Sized>(
        &self,
        beta: f64,
        m: usize,
        rng: &mut R,
    ) -> Result<(f64, f64)> {
        if m < 1000 {
            return Err(Error::InvalidInput(format!(
                "rho_beta_mc needs m >= 1000, got {m}"
            )));
        }
        // Welford, so a constant summand gives a standard error of exactly zero
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for i in 0..m {
            let mut s = 0.0;
            self.draw_root_with(rng, |_, w| s += w.powf(beta));
            let delta = s - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (s - mean);
        }
        let var = m2 / (m - 1) as f64;
        Ok((mean, (var / m as f64).sqrt()))
    }

    /// Power-law tail of `Z_N`, when it is regularly varying.
    pub fn z_n_tail(&self) -> Option<PowerTail> {
        match self {
            BranchingLaw::DeterministicWeight { n, c, .. } => {
                if *c == 0.0 {
                    return None;
                }
                n.power_tail().map(|t| PowerTail {
                    index: t.index,
                    scale: t.scale * c.powf(t.index),
                })
            }
            BranchingLaw::IndependentIid { n, c, .. } => {
                let tn = n.power_tail();
                let tc = c.power_tail();
                let index = tn
                    .map_or(f64::INFINITY, |t| t.index)
                    .min(tc.map_or(f64::INFINITY, |t| t.index));
                if !index.is_finite() {
                    return None;
                }
                let mut scale = 0.0;
                if let Some(t) = tn.filter(|t| t.index == index) {
                    // randomly stopped sum dominated by a large count
                    scale += c.mean().value()?.powf(index) * t.scale;
                }
                if let Some(t) = tc.filter(|t| t.index == index) {
                    // dominated by a single large weight
                    scale += n.mean().value()? * t.scale;
                }
                if scale > 0.0 {
                    Some(PowerTail { index, scale })
                } else {
                    None
                }
            }
            BranchingLaw::PageRankLike { d, n, out_degree } => {
                let t = n.power_tail()?;
                let inv = out_degree.power_mean(-1.0).value()?;
                Some(PowerTail {
                    index: t.index,
                    scale: t.scale * (d * inv).powf(t.index),
                })
            }
            BranchingLaw::InverseN { n, c, gamma, .. } => {
                if *gamma >= 1.0 || *c == 0.0 {
                    return None;
                }
                let t = n.power_tail()?;
                let index = t.index / (1.0 - gamma);
                Some(PowerTail {
                    index,
                    scale: t.scale * c.powf(index),
                })
            }
        }
    }

    /// Right-tail index of `Z_N` (infinite when all its moments are finite).
    pub fn z_n_tail_index(&self) -> f64 {
        self.z_n_tail().map_or(f64::INFINITY, |t| t.index)
    }

    /// Hypothesis check and classification of the tail regime for index `alpha`.
    pub fn validate_regime(&self, alpha: f64, epsilon: f64) -> RegimeReport {
        let rho_m = self.rho_beta_analytic(1.0);
        let rho_alpha_m = if alpha > 0.0 {
            self.rho_beta_analytic(alpha)
        } else {
            Moment::Unavailable
        };
        let as_f64 = |m: Moment| match m {
            Moment::Finite(v) => v,
            Moment::Infinite => f64::INFINITY,
            Moment::Unavailable => f64::NAN,
        };
        let rho = as_f64(rho_m);
        let rho_alpha = as_f64(rho_alpha_m);
        let mut violations = Vec::new();
        let report = |regime, violated_hypotheses| RegimeReport {
            alpha,
            epsilon,
            rho,
            rho_alpha,
            regime,
            violated_hypotheses,
        };

        if !(alpha > 1.0) {
            violations.push(format!("alpha > 1 (alpha = {alpha})"));
        }
        if !(epsilon > 0.0) {
            violations.push(format!("epsilon > 0 (epsilon = {epsilon})"));
        }
        if !violations.is_empty() {
            return report(Regime::Invalid, violations);
        }
        if rho_alpha.is_finite() && (rho_alpha - 1.0).abs() <= KESTEN_TOLERANCE {
            return report(
                Regime::KestenCritical,
                vec![format!("rho_alpha = 1 excluded (rho_alpha = {rho_alpha})")],
            );
        }

        let z_index = self.z_n_tail_index();
        let q_law = self.q_law();
        let q_index = q_law.tail_index();
        if z_index.is_infinite() && q_index.is_infinite() {
            return report(Regime::SubcriticalLight, violations);
        }
        let heaviest = z_index.min(q_index);
        let heavy_z = (z_index - alpha).abs() <= INDEX_TOLERANCE;
        let heavy_q = (q_index - alpha).abs() <= INDEX_TOLERANCE;
        if heaviest < alpha - INDEX_TOLERANCE {
            violations.push(format!(
                "alpha equals the heaviest tail index (Z_N index {z_index}, Q index {q_index})"
            ));
            return report(Regime::Invalid, violations);
        }
        if !heavy_z && !heavy_q {
            violations.push(format!(
                "Z_N or Q regularly varying with index alpha (Z_N index {z_index}, Q index {q_index})"
            ));
            return report(Regime::Invalid, violations);
        }
        if heavy_z && heavy_q {
            violations.push("exactly one of Z_N and Q regularly varying with index alpha".into());
            return report(Regime::Invalid, violations);
        }

        if !(rho < 1.0) {
            violations.push(format!("rho < 1 (rho = {rho})"));
        }
        if !(rho_alpha < 1.0) {
            violations.push(format!("rho_alpha < 1 (rho_alpha = {rho_alpha})"));
        }
        let boosted = alpha + epsilon;
        if heavy_z {
            if !(q_index > boosted) {
                violations.push(format!(
                    "E[|Q|^(alpha+epsilon)] < infinity (Q index {q_index})"
                ));
            }
            if !self.rho_beta_analytic(boosted).is_finite() {
                violations.push("rho_(alpha+epsilon) < infinity".into());
            }
            match q_law.mean() {
                Moment::Finite(m) if m > 0.0 => {}
                other => violations.push(format!("E[Q] > 0 (E[Q] = {other:?})")),
            }
        } else if !(z_index > boosted) {
            violations.push(format!(
                "E[Z_N^(alpha+epsilon)] < infinity (Z_N index {z_index})"
            ));
        }
        let regime = if !violations.is_empty() {
            Regime::Invalid
        } else if heavy_z {
            Regime::ZnDominates
        } else {
            Regime::QDominates
        };
        report(regime, violations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    ZnDominates,
    QDominates,
    KestenCritical,
    SubcriticalLight,
    Invalid,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::ZnDominates => "ZN_DOMINATES",
            Regime::QDominates => "Q_DOMINATES",
            Regime::KestenCritical => "KESTEN_CRITICAL",
            Regime::SubcriticalLight => "SUBCRITICAL_LIGHT",
            Regime::Invalid => "INVALID",
        };
        f.write_str(s)
    }
}

/// Outcome of [`BranchingLaw::validate_regime`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub rho_alpha: f64,
    pub regime: Regime,
    pub violated_hypotheses: Vec<String>,
}
