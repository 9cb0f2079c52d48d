//! Samplers for `W_n`, `R^(n)` and the fixed-point iteration `R*_n`.
//!
//! Two routes are provided. [`exact`] expands the weighted branching tree
//! generation by generation. The pool functions here implement population
//! dynamics: each new sample draws a fresh root vector and combines `N`
//! values resampled with replacement from the previous generation.

pub mod exact;
pub mod io;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::BranchingLaw;
use crate::rng::SeedNode;

pub use exact::{
    exact_pool, sample_r_exact, sample_w_exact, sample_weighted_sum, weighted_sum_pool, z_n_pool,
    ExactSample, ExactSampler, DEFAULT_NODE_BUDGET,
};

/// Pool sizes below this are accepted but too small for tail statistics.
pub const MIN_STATISTICAL_POOL: usize = 10_000;

/// Which recursion a pool samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoolKind {
    /// `W_n`, the generation-`n` layer.
    #[serde(rename = "W")]
    W,
    /// `R^(n)`, all layers up to `n`.
    #[serde(rename = "R_PARTIAL")]
    RPartial,
    /// `R*_n`, the fixed-point iteration from an arbitrary start.
    #[serde(rename = "R_STAR")]
    RStar,
}

impl PoolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolKind::W => "W",
            PoolKind::RPartial => "R_PARTIAL",
            PoolKind::RStar => "R_STAR",
        }
    }

    fn adds_innovation(self) -> bool {
        !matches!(self, PoolKind::W)
    }
}

impl std::fmt::Display for PoolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Approximately i.i.d. samples of one generation of one recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePool {
    values: Vec<f64>,
    generation: u32,
    kind: PoolKind,
    law_fingerprint: String,
    seed_lineage: Vec<String>,
}

impl SamplePool {
    /// Checks that `values` is nonempty and finite.
    pub fn new(
        values: Vec<f64>,
        generation: u32,
        kind: PoolKind,
        law_fingerprint: String,
        seed_lineage: Vec<String>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPool("pool is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPool(format!(
                "value {} at index {i} is not finite",
                values[i]
            )));
        }
        Ok(Self {
            values,
            generation,
            kind,
            law_fingerprint,
            seed_lineage,
        })
    }

    /// A generation-0 pool with user-supplied values, e.g. the start of `R*`.
    pub fn initial(law: &BranchingLaw, kind: PoolKind, values: Vec<f64>) -> Result<Self> {
        Self::new(
            values,
            0,
            kind,
            law.fingerprint(),
            vec!["initial:user".into()],
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn kind(&self) -> PoolKind {
        self.kind
    }

    pub fn law_fingerprint(&self) -> &str {
        &self.law_fingerprint
    }

    pub fn seed_lineage(&self) -> &[String] {
        &self.seed_lineage
    }

    /// Sample mean and its naive (i.i.d.) standard error.
    pub fn mean_and_se(&self) -> (f64, f64) {
        let m = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / m;
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let var = if self.values.len() > 1 {
            ss / (m - 1.0)
        } else {
            0.0
        };
        (mean, (var / m).sqrt())
    }
}

fn lineage_entry(tag: &str, seed: SeedNode) -> String {
    format!("{tag}:{:016x}", seed.key())
}

/// Generation-0 pool of `m` i.i.d. draws of `Q`; the start of both `W` and `R^(n)`.
pub fn initial_pool_q(
    law: &BranchingLaw,
    kind: PoolKind,
    m: usize,
    seed: SeedNode,
) -> Result<SamplePool> {
    if m == 0 {
        return Err(Error::InvalidPool("pool size must be positive".into()));
    }
    let q = law.q_law();
    let values = (0..m)
        .into_par_iter()
        .map(|i| q.sample(&mut seed.child(i as u64).rng()))
        .collect();
    SamplePool::new(
        values,
        0,
        kind,
        law.fingerprint(),
        vec![lineage_entry("q", seed)],
    )
}

fn check_fingerprint(law: &BranchingLaw, pool: &SamplePool) -> Result<String> {
    let fp = law.fingerprint();
    if fp != pool.law_fingerprint {
        return Err(Error::FingerprintMismatch {
            pool: pool.law_fingerprint.clone(),
            law: fp,
        });
    }
    Ok(fp)
}

fn check_kind(pool: &SamplePool, expected: PoolKind) -> Result<()> {
    if pool.kind != expected {
        return Err(Error::PoolKind {
            expected: expected.to_string(),
            found: pool.kind.to_string(),
        });
    }
    Ok(())
}

/// One population-dynamics step. Output sample `i` uses the stream
/// `seed.child(i)`, so the result does not depend on thread scheduling, and
/// two pools evolved with the same seed share their root vectors and
/// resampling indices.
fn evolve(law: &BranchingLaw, pool: &SamplePool, seed: SeedNode) -> Result<SamplePool> {
    let fingerprint = check_fingerprint(law, pool)?;
    let input = pool.values.as_slice();
    let m = input.len();
    let add_q = pool.kind.adds_innovation();
    let values: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            let mut acc = 0.0;
            let q = law.draw_root_with(&mut rng, |r, c| {
                acc += c * input[r.gen_range(0..m)];
            });
            if add_q {
                acc + q
            } else {
                acc
            }
        })
        .collect();
    let mut lineage = pool.seed_lineage.clone();
    lineage.push(lineage_entry("evolve", seed));
    SamplePool::new(values, pool.generation + 1, pool.kind, fingerprint, lineage)
}

/// `W_n =d sum_k C_k W_(n-1),k` applied to a `W` pool.
pub fn evolve_pool_w(law: &BranchingLaw, pool: &SamplePool, seed: SeedNode) -> Result<SamplePool> {
    check_kind(pool, PoolKind::W)?;
    evolve(law, pool, seed)
}

/// `R^(n) =d sum_j C_j R^(n-1)_j + Q` applied to an `R_PARTIAL` pool.
pub fn evolve_pool_r(law: &BranchingLaw, pool: &SamplePool, seed: SeedNode) -> Result<SamplePool> {
    check_kind(pool, PoolKind::RPartial)?;
    evolve(law, pool, seed)
}

/// One step of the fixed-point iteration on an `R_STAR` pool.
pub fn evolve_pool_rstar(
    law: &BranchingLaw,
    pool: &SamplePool,
    seed: SeedNode,
) -> Result<SamplePool> {
    check_kind(pool, PoolKind::RStar)?;
    evolve(law, pool, seed)
}

/// Runs `steps` generations from `initial`, with step `s` seeded by
/// `seed.child(s)`. `visit` sees every pool, the initial one included, and the
/// last pool is returned. Only two generations are held in memory.
pub fn evolve_chain(
    law: &BranchingLaw,
    initial: SamplePool,
    steps: u32,
    seed: SeedNode,
    mut visit: impl FnMut(&SamplePool),
) -> Result<SamplePool> {
    check_fingerprint(law, &initial)?;
    visit(&initial);
    let mut pool = initial;
    for s in 0..steps {
        pool = evolve(law, &pool, seed.child(u64::from(s)))?;
        visit(&pool);
    }
    Ok(pool)
}

/// Population pool of `W_n` or `R^(n)` at generation `depth`, started from
/// fresh `Q` draws.
pub fn population_pool(
    law: &BranchingLaw,
    kind: PoolKind,
    m: usize,
    depth: u32,
    seed: SeedNode,
) -> Result<SamplePool> {
    if kind == PoolKind::RStar {
        return Err(Error::PoolKind {
            expected: "W or R_PARTIAL".into(),
            found: kind.to_string(),
        });
    }
    let initial = initial_pool_q(law, kind, m, seed.named("initial"))?;
    evolve_chain(law, initial, depth, seed.named("steps"), |_| {})
}

/// `R*_(n+1) = Q* + sum_i C*_i R*_n,i` for `steps` steps from an arbitrary
/// `R_STAR` pool. Returns `steps + 1` pools, the initial one first.
pub fn iterate_fixed_point(
    law: &BranchingLaw,
    initial: &SamplePool,
    steps: u32,
    seed: SeedNode,
) -> Result<Vec<SamplePool>> {
    check_kind(initial, PoolKind::RStar)?;
    let mut out = Vec::with_capacity(steps as usize + 1);
    evolve_chain(law, initial.clone(), steps, seed, |p| out.push(p.clone()))?;
    Ok(out)
}
