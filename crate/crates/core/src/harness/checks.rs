//! Diagnostics comparing simulated pools with theory.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{DecayCheckConfig, FixedPointCheckConfig};
use crate::error::{Error, Result};
use crate::law::BranchingLaw;
use crate::rng::SeedNode;
use crate::sim::{
    evolve_chain, evolve_pool_rstar, exact_pool, initial_pool_q, population_pool, PoolKind,
    SamplePool,
};
use crate::tail::{
    geometric_decay_fit, ks_critical_value, ks_distance, tail_ratio, DecayFit, Denominator,
};
use crate::theory;

/// Pool mean of one generation against its exact expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCheck {
    pub kind: PoolKind,
    pub n: u32,
    pub predicted: f64,
    pub observed: f64,
    /// Standard error including the error inherited from earlier generations.
    pub stderr: f64,
    pub pass: bool,
}

/// Accumulates [`MeanCheck`]s while a chain of pools is generated.
///
/// Population pools are not independent across generations: generation `n`
/// resamples generation `n-1`, whose own mean error is passed on scaled by
/// `rho`. The standard error therefore follows
/// `se_n^2 = s_n^2 / M + rho^2 se_(n-1)^2`.
#[derive(Debug, Clone)]
pub struct MeanTracker {
    kind: PoolKind,
    e_q: f64,
    rho: f64,
    sigma: f64,
    max_generation: u32,
    inherited_var: f64,
    checks: Vec<MeanCheck>,
}

impl MeanTracker {
    pub fn new(
        law: &BranchingLaw,
        kind: PoolKind,
        max_generation: u32,
        sigma: f64,
    ) -> Result<Self> {
        let rho = law.rho_beta_analytic(1.0).require("rho")?;
        let e_q = law.q_law().mean().require("E[Q]")?;
        if kind == PoolKind::RStar {
            return Err(Error::PoolKind {
                expected: "W or R_PARTIAL".into(),
                found: kind.to_string(),
            });
        }
        Ok(Self {
            kind,
            e_q,
            rho,
            sigma,
            max_generation,
            inherited_var: 0.0,
            checks: Vec::new(),
        })
    }

    /// Feed pools in generation order starting at 0.
    pub fn observe(&mut self, pool: &SamplePool) {
        let n = pool.generation();
        if n > self.max_generation {
            return;
        }
        let (observed, se) = pool.mean_and_se();
        let var = se * se + self.rho * self.rho * self.inherited_var;
        self.inherited_var = var;
        if n == 0 {
            return;
        }
        let predicted = match self.kind {
            PoolKind::W => theory::mean_w(self.e_q, self.rho, n),
            _ => theory::mean_r_partial(self.e_q, self.rho, n),
        };
        let stderr = var.sqrt();
        self.checks.push(MeanCheck {
            kind: self.kind,
            n,
            predicted,
            observed,
            stderr,
            pass: (observed - predicted).abs() <= self.sigma * stderr,
        });
    }

    pub fn finish(self) -> Vec<MeanCheck> {
        self.checks
    }
}

/// Mean checks for generations `1..=generations` of a fresh population chain.
pub fn mean_checks(
    law: &BranchingLaw,
    kind: PoolKind,
    m: usize,
    generations: u32,
    sigma: f64,
    seed: SeedNode,
) -> Result<Vec<MeanCheck>> {
    let mut tracker = MeanTracker::new(law, kind, generations, sigma)?;
    let initial = initial_pool_q(law, kind, m, seed.named("initial"))?;
    evolve_chain(law, initial, generations, seed.named("steps"), |p| {
        tracker.observe(p)
    })?;
    Ok(tracker.finish())
}

/// Geometric decay of `r_n = max_x P(W_n > x) / P(den > x)` over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub series: BTreeMap<u32, f64>,
    /// Generations whose grid was emptied by the exceedance floor.
    pub missing: Vec<u32>,
    pub fit: Option<DecayFit>,
    /// `rho v rho_alpha`.
    pub admissible_rate: f64,
    /// Largest accepted fitted rate, `(1 + rho v rho_alpha) / 2 + slack`.
    pub rate_threshold: f64,
    pub min_r_squared: f64,
    pub pass: bool,
}

/// Collects `r_n` from `W_n` pools as they are generated.
#[derive(Debug)]
pub struct DecayTracker<'a> {
    config: DecayCheckConfig,
    den: Denominator<'a>,
    grid: &'a [f64],
    min_exceedances: usize,
    series: BTreeMap<u32, f64>,
    missing: Vec<u32>,
    error: Option<Error>,
}

impl<'a> DecayTracker<'a> {
    pub fn new(
        config: DecayCheckConfig,
        den: Denominator<'a>,
        grid: &'a [f64],
        min_exceedances: usize,
    ) -> Self {
        Self {
            config,
            den,
            grid,
            min_exceedances,
            series: BTreeMap::new(),
            missing: Vec::new(),
            error: None,
        }
    }

    pub fn observe(&mut self, pool: &SamplePool) {
        let n = pool.generation();
        if n < self.config.from || n > self.config.to || self.error.is_some() {
            return;
        }
        match tail_ratio(pool.values(), self.den, self.grid, self.min_exceedances) {
            Ok(rep) => {
                let r = rep.ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                self.series.insert(n, r);
            }
            Err(Error::EmptyGrid { .. }) => self.missing.push(n),
            Err(e) => self.error = Some(e),
        }
    }

    pub fn finish(self, law: &BranchingLaw, alpha: f64) -> Result<DecayCheck> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let admissible_rate = theory::predicted_decay_rate(law, alpha)?;
        let rate_threshold = theory::default_eta(admissible_rate) + self.config.slack;
        let fit = if self.missing.is_empty() {
            match geometric_decay_fit(&self.series) {
                Ok(f) => Some(f),
                Err(Error::NonPositive { .. }) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let pass = fit
            .is_some_and(|f| f.rate <= rate_threshold && f.r_squared >= self.config.min_r_squared);
        Ok(DecayCheck {
            series: self.series,
            missing: self.missing,
            fit,
            admissible_rate,
            rate_threshold,
            min_r_squared: self.config.min_r_squared,
            pass,
        })
    }
}

/// Forgetting of the initial condition by `R*_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCheck {
    pub initial_values: (f64, f64),
    /// KS distance between the two iterations at each step.
    pub ks_series: BTreeMap<u32, f64>,
    pub monotone_after: u32,
    pub monotone: bool,
    pub ks_threshold: f64,
    pub final_distance: f64,
    /// KS distance between the final iterate and an independent `R^(n)` pool
    /// of the same depth.
    pub ks_vs_partial: f64,
    pub pass: bool,
}

/// KS distances between two fixed-point iterations started from constant
/// pools `a` and `b`. Both iterations use the same streams, so they share
/// every root vector and resampling index. Returns the series and the final
/// iterate started from `a`.
pub fn fixed_point_ks_series(
    law: &BranchingLaw,
    m: usize,
    a: f64,
    b: f64,
    steps: u32,
    seed: SeedNode,
) -> Result<(BTreeMap<u32, f64>, SamplePool)> {
    let mut pa = SamplePool::initial(law, PoolKind::RStar, vec![a; m])?;
    let mut pb = SamplePool::initial(law, PoolKind::RStar, vec![b; m])?;
    let mut series = BTreeMap::new();
    series.insert(0, ks_distance(pa.values(), pb.values()));
    for s in 0..steps {
        let step_seed = seed.child(u64::from(s));
        pa = evolve_pool_rstar(law, &pa, step_seed)?;
        pb = evolve_pool_rstar(law, &pb, step_seed)?;
        series.insert(s + 1, ks_distance(pa.values(), pb.values()));
    }
    Ok((series, pa))
}

/// Runs the fixed-point check. `reference` is an `R^(steps)` pool built
/// independently of `seed`.
pub fn fixed_point_check(
    law: &BranchingLaw,
    m: usize,
    config: &FixedPointCheckConfig,
    reference: &SamplePool,
    seed: SeedNode,
) -> Result<FixedPointCheck> {
    let (a, b) = (config.initial_values[0], config.initial_values[1]);
    let (ks_series, last) = fixed_point_ks_series(law, m, a, b, config.steps, seed)?;
    let monotone = ks_series
        .range(config.monotone_after..)
        .zip(ks_series.range(config.monotone_after + 1..))
        .all(|((_, prev), (_, next))| next <= prev);
    let final_distance = ks_series[&config.steps];
    let ks_vs_partial = ks_distance(last.values(), reference.values());
    let pass =
        monotone && final_distance < config.ks_threshold && ks_vs_partial < config.ks_threshold;
    Ok(FixedPointCheck {
        initial_values: (a, b),
        ks_series,
        monotone_after: config.monotone_after,
        monotone,
        ks_threshold: config.ks_threshold,
        final_distance,
        ks_vs_partial,
        pass,
    })
}

/// Exact tree samples against a population pool at the same depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactVsPopulation {
    pub depth: u32,
    pub samples: usize,
    pub distance: f64,
    /// Two-sample KS critical value at level 1%.
    pub critical_value: f64,
    pub pass: bool,
}

/// KS distance between `m` exact draws of `R^(depth)` and an `m`-element
/// population pool of the same generation.
pub fn exact_vs_population(
    law: &BranchingLaw,
    depth: u32,
    m: usize,
    seed: SeedNode,
) -> Result<ExactVsPopulation> {
    let exact = exact_pool(law, PoolKind::RPartial, m, depth, seed.named("exact"))?;
    let pop = population_pool(law, PoolKind::RPartial, m, depth, seed.named("population"))?;
    let distance = ks_distance(exact.values(), pop.values());
    let critical_value = ks_critical_value(m, m, 0.01);
    Ok(ExactVsPopulation {
        depth,
        samples: m,
        distance,
        critical_value,
        pass: distance < critical_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec;

    #[test]
    fn mean_checks_on_a_light_law() {
        let law = BranchingLaw::IndependentIid {
            q: DistributionSpec::exponential(1.0).unwrap(),
            n: DistributionSpec::constant(2.0),
            c: DistributionSpec::uniform(0.0, 0.6).unwrap(),
        };
        for kind in [PoolKind::W, PoolKind::RPartial] {
            let checks = mean_checks(&law, kind, 50_000, 6, 4.0, SeedNode::root(1)).unwrap();
            assert_eq!(checks.len(), 6);
            assert!(checks.iter().all(|c| c.pass), "{checks:?}");
        }
    }

    #[test]
    fn coupled_iterations_forget_their_start() {
        let law = BranchingLaw::DeterministicWeight {
            q: DistributionSpec::exponential(1.0).unwrap(),
            n: DistributionSpec::constant(2.0),
            c: 0.1,
        };
        let (series, _) =
            fixed_point_ks_series(&law, 5000, 0.0, 100.0, 12, SeedNode::root(2)).unwrap();
        assert_eq!(series[&0], 1.0);
        assert!(series[&12] < 0.01, "{series:?}");
    }

    #[test]
    fn exact_matches_population_on_a_small_law() {
        let law = BranchingLaw::DeterministicWeight {
            q: DistributionSpec::exponential(1.0).unwrap(),
            n: DistributionSpec::zeta_tail(3.0).unwrap(),
            c: 0.3,
        };
        let r = exact_vs_population(&law, 3, 20_000, SeedNode::root(3)).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
