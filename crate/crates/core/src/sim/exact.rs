//! Exact samples by depth-first expansion of the weighted branching tree.
//!
//! Memory is proportional to the depth; time to the realised tree size.

use rand::Rng;
use rayon::prelude::*;

use super::{PoolKind, SamplePool};
use crate::dist::{DistributionSpec, Moment};
use crate::error::{Error, Result};
use crate::law::BranchingLaw;
use crate::rng::SeedNode;

/// Default cap on the expected number of tree nodes.
pub const DEFAULT_NODE_BUDGET: f64 = 1e7;

/// A realised tree may overshoot its expected size; abort beyond this multiple.
const REALIZED_CAP_FACTOR: f64 = 10.0;

/// One exact sample together with the number of nodes generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSample {
    pub value: f64,
    pub nodes: u64,
}

/// Exact tree sampler with a node budget.
#[derive(Debug, Clone)]
pub struct ExactSampler<'a> {
    law: &'a BranchingLaw,
    budget: f64,
    mean_offspring: Moment,
    q_law: DistributionSpec,
}

impl<'a> ExactSampler<'a> {
    pub fn new(law: &'a BranchingLaw) -> Self {
        Self::with_budget(law, DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(law: &'a BranchingLaw, budget: f64) -> Self {
        Self {
            law,
            budget,
            mean_offspring: law.mean_offspring(),
            q_law: law.q_law(),
        }
    }

    /// Expected tree size `sum_{k<=depth} E[N]^k`.
    pub fn expected_nodes(&self, depth: u32) -> f64 {
        match self.mean_offspring {
            Moment::Finite(m) => (0..=depth).map(|k| m.powi(k as i32)).sum(),
            _ if depth == 0 => 1.0,
            _ => f64::INFINITY,
        }
    }

    fn check_budget(&self, depth: u32) -> Result<()> {
        let projected = self.expected_nodes(depth);
        if projected > self.budget {
            return Err(Error::BudgetExceeded {
                projected,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Expands `depth` generations. With `layer_only`, only generation
    /// `depth` contributes (`W_n`); otherwise all generations do (`R^(n)`).
    fn expand<R: Rng + ?Sized>(
        &self,
        depth: u32,
        layer_only: bool,
        rng: &mut R,
    ) -> Result<ExactSample> {
        self.check_budget(depth)?;
        let mut walk = Walk {
            law: self.law,
            q_law: &self.q_law,
            layer_only,
            nodes: 1,
            cap: (self.budget * REALIZED_CAP_FACTOR) as u64,
        };
        let value = walk.node(depth, rng).ok_or(Error::BudgetExceeded {
            projected: walk.nodes as f64,
            budget: self.budget,
        })?;
        Ok(ExactSample {
            value,
            nodes: walk.nodes,
        })
    }

    /// One exact draw of `R^(depth)`.
    pub fn sample_r<R: Rng + ?Sized>(&self, depth: u32, rng: &mut R) -> Result<ExactSample> {
        self.expand(depth, false, rng)
    }

    /// One exact draw of `W_n`.
    pub fn sample_w<R: Rng + ?Sized>(&self, n: u32, rng: &mut R) -> Result<ExactSample> {
        self.expand(n, true, rng)
    }
}

/// Depth-first state of one expansion.
struct Walk<'a> {
    law: &'a BranchingLaw,
    q_law: &'a DistributionSpec,
    layer_only: bool,
    nodes: u64,
    cap: u64,
}

impl Walk<'_> {
    /// Value of a subtree with `depth` generations below its root, summed as
    /// `acc + Q` with `acc = sum_i C_i child_i` accumulated in child order.
    /// Population pools combine their inputs the same way, so equal trees give
    /// bit-identical values. `None` once the node cap is hit.
    fn node<R: Rng + ?Sized>(&mut self, depth: u32, rng: &mut R) -> Option<f64> {
        if depth == 0 {
            return Some(self.q_law.sample(rng));
        }
        let mut acc = 0.0;
        let mut ok = true;
        let law = self.law;
        let q = law.draw_root_with(rng, |r, c| {
            if !ok {
                return;
            }
            self.nodes += 1;
            match (self.nodes <= self.cap)
                .then(|| self.node(depth - 1, r))
                .flatten()
            {
                Some(v) => acc += c * v,
                None => ok = false,
            }
        });
        if !ok {
            return None;
        }
        Some(if self.layer_only { acc } else { acc + q })
    }
}

/// `R^(depth)` by full tree expansion, default budget.
pub fn sample_r_exact<R: Rng + ?Sized>(law: &BranchingLaw, depth: u32, rng: &mut R) -> Result<f64> {
    ExactSampler::new(law).sample_r(depth, rng).map(|s| s.value)
}

/// `W_n` by full tree expansion, default budget.
pub fn sample_w_exact<R: Rng + ?Sized>(law: &BranchingLaw, n: u32, rng: &mut R) -> Result<f64> {
    ExactSampler::new(law).sample_w(n, rng).map(|s| s.value)
}

/// `m` independent exact draws of `W_n` or `R^(n)` as a pool, in parallel.
pub fn exact_pool(
    law: &BranchingLaw,
    kind: PoolKind,
    m: usize,
    depth: u32,
    seed: SeedNode,
) -> Result<SamplePool> {
    let sampler = ExactSampler::new(law);
    let layer_only = match kind {
        PoolKind::W => true,
        PoolKind::RPartial => false,
        PoolKind::RStar => {
            return Err(Error::PoolKind {
                expected: "W or R_PARTIAL".into(),
                found: kind.to_string(),
            })
        }
    };
    sampler.check_budget(depth)?;
    let values = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            sampler.expand(depth, layer_only, &mut rng).map(|s| s.value)
        })
        .collect::<Result<Vec<_>>>()?;
    SamplePool::new(
        values,
        depth,
        kind,
        law.fingerprint(),
        vec![format!("exact:{:016x}", seed.key())],
    )
}

/// One draw of `sum_{i<=N} C_i X_i + Q` with `X_i` i.i.d. from `x`.
pub fn sample_weighted_sum<R: Rng + ?Sized>(
    law: &BranchingLaw,
    x: &DistributionSpec,
    rng: &mut R,
) -> f64 {
    let mut acc = 0.0;
    let q = law.draw_root_with(rng, |r, c| acc += c * x.sample(r));
    acc + q
}

/// `m` independent draws of `sum_i C_i X_i + Q`; draw `i` uses `seed.child(i)`.
pub fn weighted_sum_pool(
    law: &BranchingLaw,
    x: &DistributionSpec,
    m: usize,
    seed: SeedNode,
) -> Vec<f64> {
    (0..m)
        .into_par_iter()
        .map(|i| sample_weighted_sum(law, x, &mut seed.child(i as u64).rng()))
        .collect()
}

/// `m` independent draws of `Z_N = sum_i C_i`; draw `i` uses `seed.child(i)`.
pub fn z_n_pool(law: &BranchingLaw, m: usize, seed: SeedNode) -> Vec<f64> {
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut z = 0.0;
            law.draw_root_with(&mut seed.child(i as u64).rng(), |_, c| z += c);
            z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedNode;

    fn det(n: f64, c: f64) -> BranchingLaw {
        BranchingLaw::DeterministicWeight {
            q: DistributionSpec::constant(1.0),
            n: DistributionSpec::constant(n),
            c,
        }
    }

    #[test]
    fn deterministic_examples() {
        let mut rng = SeedNode::root(1).rng();
        assert_eq!(sample_r_exact(&det(1.0, 0.5), 2, &mut rng).unwrap(), 1.75);
        assert_eq!(sample_r_exact(&det(2.0, 0.25), 1, &mut rng).unwrap(), 1.5);
        assert_eq!(sample_w_exact(&det(1.0, 0.5), 3, &mut rng).unwrap(), 0.125);
        assert_eq!(sample_w_exact(&det(2.0, 0.25), 2, &mut rng).unwrap(), 0.25);
    }

    #[test]
    fn depth_zero_is_a_draw_of_q() {
        let law = BranchingLaw::DeterministicWeight {
            q: DistributionSpec::exponential(2.0).unwrap(),
            n: DistributionSpec::constant(3.0),
            c: 0.2,
        };
        let seed = SeedNode::root(2);
        let a = sample_r_exact(&law, 0, &mut seed.rng()).unwrap();
        let b = sample_w_exact(&law, 0, &mut seed.rng()).unwrap();
        let q = law.q_law().sample(&mut seed.rng());
        assert_eq!(a, q);
        assert_eq!(b, q);
    }

    #[test]
    fn node_count_matches_tree() {
        // N = 3 fixed: 1 + 3 + 9 nodes
        let s = ExactSampler::new(&det(3.0, 0.1))
            .sample_r(2, &mut SeedNode::root(3).rng())
            .unwrap();
        assert_eq!(s.nodes, 13);
    }

    #[test]
    fn budget_is_enforced() {
        let law = det(10.0, 0.05);
        let err = ExactSampler::with_budget(&law, 1e3).sample_r(4, &mut SeedNode::root(4).rng());
        assert!(matches!(err, Err(Error::BudgetExceeded { .. })));
        assert!(ExactSampler::with_budget(&law, 1e3)
            .sample_r(2, &mut SeedNode::root(4).rng())
            .is_ok());
    }

    #[test]
    fn telescoping_on_deterministic_laws() {
        for (n, c) in [(1.0, 0.5), (2.0, 0.25), (3.0, 0.3)] {
            let law = det(n, c);
            let mut rng = SeedNode::root(5).rng();
            for k in 1..6 {
                let r_k = sample_r_exact(&law, k, &mut rng).unwrap();
                let r_km1 = sample_r_exact(&law, k - 1, &mut rng).unwrap();
                let w_k = sample_w_exact(&law, k, &mut rng).unwrap();
                assert!((r_k - r_km1 - w_k).abs() <= 1e-13 * r_k, "{n} {c} {k}");
            }
        }
    }

    #[test]
    fn weighted_sum_examples() {
        let mut rng = SeedNode::root(6).rng();
        let law = det(2.0, 0.5);
        assert_eq!(
            sample_weighted_sum(&law, &DistributionSpec::constant(3.0), &mut rng),
            4.0
        );
        let barren = BranchingLaw::DeterministicWeight {
            q: DistributionSpec::exponential(1.0).unwrap(),
            n: DistributionSpec::constant(0.0),
            c: 0.5,
        };
        let seed = SeedNode::root(7);
        let v = sample_weighted_sum(&barren, &DistributionSpec::constant(3.0), &mut seed.rng());
        assert_eq!(v, barren.q_law().sample(&mut seed.rng()));
    }

    #[test]
    fn weighted_sum_mean() {
        let law = BranchingLaw::IndependentIid {
            q: DistributionSpec::exponential(1.0).unwrap(),
            n: DistributionSpec::zeta_tail(3.0).unwrap(),
            c: DistributionSpec::uniform(0.0, 0.4).unwrap(),
        };
        let x = DistributionSpec::lognormal(0.0, 0.5).unwrap();
        let rho = law.rho_beta_analytic(1.0).value().unwrap();
        let expected = rho * x.mean().value().unwrap() + 1.0;
        let mut rng = SeedNode::root(8).rng();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_weighted_sum(&law, &x, &mut rng))
            .collect();
        let m = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / m;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        assert!(
            (mean - expected).abs() < 4.0 * (var / m).sqrt(),
            "{mean} vs {expected}"
        );
    }
}
