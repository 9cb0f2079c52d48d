//! End-to-end verification of one scenario: simulate, compare the tail
//! ratio with its constant, run the configured diagnostics.

pub mod checks;
pub mod config;
pub mod report;

use std::collections::BTreeMap;

pub use checks::{
    exact_vs_population, fixed_point_check, fixed_point_ks_series, mean_checks, DecayCheck,
    DecayTracker, ExactVsPopulation, FixedPointCheck, MeanCheck, MeanTracker,
};
pub use config::{
    Checks, DecayCheckConfig, Dominant, FixedPointCheckConfig, MeanCheckConfig, ScenarioConfig,
    SCHEMA_VERSION,
};
pub use report::{HillCheck, Target, Verdict, VerificationReport};

use crate::error::{Error, Result};
use crate::law::{Regime, RegimeReport};
use crate::rng::SeedNode;
use crate::sim::{evolve_chain, initial_pool_q, weighted_sum_pool, z_n_pool, PoolKind, SamplePool};
use crate::tail::{hill, tail_ratio_with_band, BootstrapSpec, Denominator, TailReport};
use crate::theory::{self, TheoryConstants};

/// Runs a scenario on `cfg.replicas` threads, or all cores.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    run_scenario_with(cfg, None)
}

/// Like [`run_scenario`] with an explicit thread count taking precedence
/// over the config. The report does not depend on it.
pub fn run_scenario_with(
    cfg: &ScenarioConfig,
    threads: Option<usize>,
) -> Result<VerificationReport> {
    cfg.validate()?;
    let regime = cfg.check_regime()?;
    match threads.or(cfg.replicas) {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {t} worker threads: {e}")))?
            .install(|| execute(cfg, regime)),
        None => execute(cfg, regime),
    }
}

struct Outcome {
    target: Target,
    tail: TailReport,
    numerator_hill: Option<HillCheck>,
    mean_checks: Vec<MeanCheck>,
    decay_check: Option<DecayCheck>,
    fixed_point_check: Option<FixedPointCheck>,
}

fn execute(cfg: &ScenarioConfig, regime: RegimeReport) -> Result<VerificationReport> {
    let master = SeedNode::root(cfg.seed);
    let constants = TheoryConstants::compute(&cfg.law, cfg.alpha, regime.regime, cfg.depth)?;
    let bootstrap = BootstrapSpec::new(
        cfg.bootstrap_b,
        cfg.bootstrap_level,
        master.named("bootstrap"),
    )?;

    let outcome = match cfg.dominant {
        Dominant::Zn | Dominant::Q => tree_scenario(cfg, &constants, &bootstrap, master)?,
        Dominant::SumAppendix => sum_scenario(cfg, &regime, &bootstrap, master)?,
    };

    let band_hits = outcome.tail.band_hits(outcome.target.value);
    let mut verdict = BTreeMap::new();
    let need = cfg.min_band_hits();
    let mut detail = format!(
        "band contains {} = {:.6} at {band_hits} of {} grid points (need {need})",
        outcome.target.name,
        outcome.target.value,
        cfg.quantile_grid.len()
    );
    if !outcome.tail.dropped.is_empty() {
        detail.push_str(&format!(
            "; dropped for fewer than {} exceedances: {:?}",
            cfg.min_exceedances, outcome.tail.dropped
        ));
    }
    verdict.insert(
        "tail_band".to_string(),
        Verdict {
            pass: band_hits >= need,
            detail,
        },
    );
    if let Some(h) = &outcome.numerator_hill {
        verdict.insert(
            "hill".to_string(),
            Verdict {
                pass: h.pass,
                detail: format!(
                    "alpha_hat({}) = {:.4}, alpha = {} +- {}",
                    h.k, h.estimate, h.alpha, h.tolerance
                ),
            },
        );
    }
    if !outcome.mean_checks.is_empty() {
        let failed: Vec<String> = outcome
            .mean_checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}@{}", c.kind, c.n))
            .collect();
        verdict.insert(
            "mean".to_string(),
            Verdict {
                pass: failed.is_empty(),
                detail: if failed.is_empty() {
                    format!("{} generations within tolerance", outcome.mean_checks.len())
                } else {
                    format!("outside tolerance: {}", failed.join(", "))
                },
            },
        );
    }
    if let Some(d) = &outcome.decay_check {
        let detail = match (&d.fit, d.missing.is_empty()) {
            (Some(f), _) => format!(
                "fitted rate {:.4} (threshold {:.4}), r^2 {:.4} (min {})",
                f.rate, d.rate_threshold, f.r_squared, d.min_r_squared
            ),
            (None, false) => format!("no grid point left at generations {:?}", d.missing),
            (None, true) => "ratio vanished, no fit possible".to_string(),
        };
        verdict.insert(
            "decay".to_string(),
            Verdict {
                pass: d.pass,
                detail,
            },
        );
    }
    if let Some(fp) = &outcome.fixed_point_check {
        verdict.insert(
            "fixed_point".to_string(),
            Verdict {
                pass: fp.pass,
                detail: format!(
                    "KS {:.5} after {} steps, {:.5} against R^(n) (threshold {}), monotone from step {}: {}",
                    fp.final_distance,
                    fp.ks_series.keys().last().copied().unwrap_or(0),
                    fp.ks_vs_partial,
                    fp.ks_threshold,
                    fp.monotone_after,
                    fp.monotone
                ),
            },
        );
    }
    let passed = verdict.values().all(|v| v.pass);

    let mut hill_summary: BTreeMap<usize, f64> = outcome.tail.hill_curve.clone();
    if let Some(h) = &outcome.numerator_hill {
        hill_summary.insert(h.k, h.estimate);
    }
    let ks_series = outcome
        .fixed_point_check
        .as_ref()
        .map(|f| f.ks_series.clone())
        .unwrap_or_default();

    let mut scenario = cfg.clone();
    scenario.replicas = None;
    Ok(VerificationReport {
        scenario,
        regime,
        constants,
        target: outcome.target,
        tail: outcome.tail,
        band_hits,
        hill_summary: hill_summary.into_iter().collect(),
        hill_check: outcome.numerator_hill,
        mean_checks: outcome.mean_checks,
        decay_check: outcome.decay_check,
        fixed_point_check: outcome.fixed_point_check,
        ks_series,
        verdict,
        passed,
    })
}

fn hill_check(cfg: &ScenarioConfig, sample: &[f64]) -> Result<Option<HillCheck>> {
    let Some(k) = cfg.hill_k else { return Ok(None) };
    let estimate = hill(sample, k)?;
    Ok(Some(HillCheck {
        k,
        estimate,
        alpha: cfg.alpha,
        tolerance: cfg.hill_tolerance,
        pass: (estimate - cfg.alpha).abs() <= cfg.hill_tolerance,
    }))
}

fn tree_scenario(
    cfg: &ScenarioConfig,
    constants: &TheoryConstants,
    bootstrap: &BootstrapSpec,
    master: SeedNode,
) -> Result<Outcome> {
    let law = &cfg.law;
    let m = cfg.pool_size;
    let q_law = law.q_law();
    let z_pool = match cfg.dominant {
        Dominant::Zn => Some(z_n_pool(law, m, master.named("z_n"))),
        _ => None,
    };
    let den = match &z_pool {
        Some(z) => Denominator::Sample(z),
        None => Denominator::Analytic(&q_law),
    };

    // One R chain serves the tail comparison, the R mean checks and the
    // reference pool of the fixed-point check.
    let mean_cfg = cfg.checks.mean.clone();
    let fp_cfg = cfg.checks.fixed_point.clone();
    let mut r_means = mean_cfg
        .as_ref()
        .map(|c| MeanTracker::new(law, PoolKind::RPartial, c.generations, c.sigma))
        .transpose()?;
    let fp_steps = fp_cfg.as_ref().map(|c| c.steps);
    let r_len = cfg
        .depth
        .max(mean_cfg.as_ref().map_or(0, |c| c.generations))
        .max(fp_steps.unwrap_or(0));
    let r_seed = master.named("r_chain");
    let mut tail_pool: Option<SamplePool> = None;
    let mut reference: Option<SamplePool> = None;
    let initial = initial_pool_q(law, PoolKind::RPartial, m, r_seed.named("initial"))?;
    let last = evolve_chain(law, initial, r_len, r_seed.named("steps"), |p| {
        if let Some(t) = r_means.as_mut() {
            t.observe(p);
        }
        if p.generation() == cfg.depth && p.generation() < r_len {
            tail_pool = Some(p.clone());
        }
        if Some(p.generation()) == fp_steps {
            reference = Some(p.clone());
        }
    })?;
    let r_pool = tail_pool.unwrap_or(last);

    let tail = tail_ratio_with_band(
        r_pool.values(),
        den,
        &cfg.quantile_grid,
        cfg.min_exceedances,
        bootstrap,
    )?;
    let numerator_hill = hill_check(cfg, r_pool.values())?;
    drop(r_pool);

    let mut mean_checks = r_means.map(MeanTracker::finish).unwrap_or_default();

    let decay_cfg = cfg.checks.decay.clone();
    let w_len = mean_cfg
        .as_ref()
        .map_or(0, |c| c.generations)
        .max(decay_cfg.as_ref().map_or(0, |c| c.to));
    let mut decay_check = None;
    if w_len > 0 {
        let mut w_means = mean_cfg
            .as_ref()
            .map(|c| MeanTracker::new(law, PoolKind::W, c.generations, c.sigma))
            .transpose()?;
        let mut decay =
            decay_cfg.map(|c| DecayTracker::new(c, den, &cfg.quantile_grid, cfg.min_exceedances));
        let w_seed = master.named("w_chain");
        let initial = initial_pool_q(law, PoolKind::W, m, w_seed.named("initial"))?;
        evolve_chain(law, initial, w_len, w_seed.named("steps"), |p| {
            if let Some(t) = w_means.as_mut() {
                t.observe(p);
            }
            if let Some(t) = decay.as_mut() {
                t.observe(p);
            }
        })?;
        if let Some(t) = w_means {
            let mut w = t.finish();
            w.append(&mut mean_checks);
            mean_checks = w;
        }
        decay_check = decay.map(|t| t.finish(law, cfg.alpha)).transpose()?;
    }

    let fixed_point_check = match (&fp_cfg, &reference) {
        (Some(c), Some(r)) => Some(fixed_point_check(
            law,
            m,
            c,
            r,
            master.named("fixed_point"),
        )?),
        _ => None,
    };

    let target = match cfg.dominant {
        Dominant::Zn => Target {
            name: "h_limit_zn".into(),
            value: constants.h_limit,
        },
        _ => Target {
            name: "h_limit_q".into(),
            value: constants.h_limit,
        },
    };
    Ok(Outcome {
        target,
        tail,
        numerator_hill,
        mean_checks,
        decay_check,
        fixed_point_check,
    })
}

fn sum_scenario(
    cfg: &ScenarioConfig,
    regime: &RegimeReport,
    bootstrap: &BootstrapSpec,
    master: SeedNode,
) -> Result<Outcome> {
    let law = &cfg.law;
    let x = cfg
        .x_dist
        .as_ref()
        .ok_or_else(|| Error::Config("SUM_APPENDIX scenarios need x_dist".into()))?;
    let target = match regime.regime {
        Regime::ZnDominates => {
            let e_x = x.mean().require("E[X]")?;
            if e_x <= 0.0 {
                return Err(Error::Config(format!(
                    "x_dist must have positive mean, got {e_x}"
                )));
            }
            let c = theory::z_n_tail_ratio(law, x)?;
            Target {
                name: "sum_constant_zn".into(),
                value: theory::sum_constant_zn(law, cfg.alpha, e_x, c)?,
            }
        }
        _ => {
            let c = theory::q_tail_ratio(law, x)?;
            Target {
                name: "sum_constant_q".into(),
                value: theory::sum_constant_q(law, cfg.alpha, c)?,
            }
        }
    };
    let sums = weighted_sum_pool(law, x, cfg.pool_size, master.named("sums"));
    let tail = tail_ratio_with_band(
        &sums,
        Denominator::Analytic(x),
        &cfg.quantile_grid,
        cfg.min_exceedances,
        bootstrap,
    )?;
    let numerator_hill = hill_check(cfg, &sums)?;
    Ok(Outcome {
        target,
        tail,
        numerator_hill,
        mean_checks: Vec::new(),
        decay_check: None,
        fixed_point_check: None,
    })
}
