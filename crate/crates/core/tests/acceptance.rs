//! Acceptance suite: every criterion at its stated tolerance, one line each.
//!
//! Run with `cargo test -p branchtail-core --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::path::PathBuf;

use branchtail::harness::{
    exact_vs_population, mean_checks, run_scenario, ScenarioConfig, VerificationReport,
};
use branchtail::sim::PoolKind;
use branchtail::tail::geometric_decay_fit;
use branchtail::theory;
use branchtail::{BranchingLaw, DistributionSpec, SeedNode};

const ZETA2: f64 = PI * PI / 6.0;

struct Ledger {
    failed: Vec<u32>,
}

impl Ledger {
    fn record(&mut self, id: u32, pass: bool, detail: String) {
        println!("[{}] {id} {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"));
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn run(name: &str) -> VerificationReport {
    run_scenario(&scenario(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn zeta(alpha: f64) -> DistributionSpec {
    DistributionSpec::zeta_tail(alpha).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn band_line(report: &VerificationReport) -> String {
    let t = &report.tail;
    let points: Vec<String> = t
        .quantile_grid
        .iter()
        .enumerate()
        .map(|(i, p)| {
            format!(
                "p={p}: {:.4} [{:.4}, {:.4}]",
                t.ratio[i], t.ratio_ci_low[i], t.ratio_ci_high[i]
            )
        })
        .collect();
    format!(
        "{} = {:.6} inside band at {}/{} points ({})",
        report.target.name,
        report.target.value,
        report.band_hits,
        report.scenario.quantile_grid.len(),
        points.join("; ")
    )
}

/// Four families with small parameters and `rho < 1`.
fn small_laws() -> Vec<BranchingLaw> {
    let expq = DistributionSpec::exponential(1.0).unwrap();
    vec![
        BranchingLaw::IndependentIid {
            q: expq.clone(),
            n: zeta(3.0),
            c: DistributionSpec::uniform(0.0, 0.5).unwrap(),
        },
        BranchingLaw::DeterministicWeight {
            q: DistributionSpec::uniform(0.0, 2.0).unwrap(),
            n: zeta(3.0),
            c: 0.4,
        },
        BranchingLaw::PageRankLike {
            d: 0.85,
            n: zeta(3.0),
            out_degree: zeta(2.5),
        },
        BranchingLaw::InverseN {
            q: expq,
            n: zeta(3.0),
            c: 0.6,
            gamma: 0.5,
        },
    ]
}

fn zn_baseline(ledger: &mut Ledger) {
    let report = run("zn-baseline");
    let cfg = &report.scenario;
    assert_eq!(cfg.pool_size, 1_000_000);
    assert_eq!(cfg.depth, 30);
    assert_eq!(cfg.bootstrap_b, 1000);
    assert_eq!(cfg.quantile_grid, vec![1e-2, 3e-3, 1e-3]);
    let BranchingLaw::DeterministicWeight { c, .. } = cfg.law else {
        panic!("zn-baseline must use deterministic weights")
    };
    assert!(close(c * ZETA2, 0.4, 1e-15));
    // rho_2 = c^2 E[N] with E[N] = zeta(2).
    let h = 1.0 / ((1.0 - 0.4f64).powi(2) * (1.0 - c * c * ZETA2));
    assert!(
        close(report.target.value, h, 1e-12),
        "{} vs {h}",
        report.target.value
    );

    ledger.record(1, report.band_hits >= 2, band_line(&report));

    let hill = report.hill_check.as_ref().expect("zn-baseline pins hill_k");
    assert_eq!(hill.k, 1000);
    ledger.record(
        2,
        (1.8..=2.2).contains(&hill.estimate),
        format!(
            "alpha_hat(k=1000) = {:.4}, required in [1.8, 2.2]",
            hill.estimate
        ),
    );

    let decay = report
        .decay_check
        .as_ref()
        .expect("zn-baseline runs the decay check");
    let threshold = (1.0 + 0.4f64.max(c * c * ZETA2)) / 2.0 + 0.05;
    assert!(close(decay.rate_threshold, threshold, 1e-12));
    let pass = decay
        .fit
        .is_some_and(|f| f.rate <= threshold && f.r_squared >= 0.9);
    let detail = match decay.fit {
        Some(f) => format!(
            "rate {:.4} (max {threshold:.4}), r^2 {:.4}",
            f.rate, f.r_squared
        ),
        None => format!(
            "r_n = {:?}; grid emptied at n = {:?}, no fit over n = 2..8 (max rate {threshold:.4})",
            decay.series, decay.missing
        ),
    };
    ledger.record(6, pass, detail);

    let fp = report
        .fixed_point_check
        .as_ref()
        .expect("zn-baseline runs the fixed-point check");
    assert_eq!(fp.initial_values, (0.0, 100.0));
    let monotone = (3..15).all(|k| fp.ks_series[&(k + 1)] <= fp.ks_series[&k]);
    let at15 = fp.ks_series[&15];
    ledger.record(
        7,
        monotone && at15 < 0.01 && fp.ks_vs_partial < 0.01,
        format!(
            "KS(0 vs 100) monotone after 3: {monotone}, at step 15: {at15:.5}; KS(R*_15, R^(15)) = {:.5}; both required < 0.01",
            fp.ks_vs_partial
        ),
    );
}

fn q_baseline(ledger: &mut Ledger) {
    let report = run("q-baseline");
    let cfg = &report.scenario;
    assert_eq!(cfg.quantile_grid, vec![1e-2, 1e-3]);
    // rho_2.5 = 2 E[C^2.5], C ~ Uniform(0, 0.6).
    let rho_a = 2.0 * 0.6f64.powf(2.5) / 3.5;
    assert!(close(report.target.value, 1.0 / (1.0 - rho_a), 1e-12));
    ledger.record(3, report.band_hits >= 1, band_line(&report));
}

fn sum_appendix(ledger: &mut Ledger) {
    let report = run("sum-appendix");
    let cfg = &report.scenario;
    assert_eq!(cfg.pool_size, 10_000_000);
    assert_eq!(cfg.quantile_grid, vec![1e-3]);
    // Z_N = 0.2 N has tail 0.04 x^-2 against x^-2 for X; E[X] = 2; rho_2 = 0.04 zeta(2).
    let expected = 0.04 * ZETA2 + 0.04 * 4.0;
    assert!(
        close(report.target.value, expected, 1e-9),
        "{}",
        report.target.value
    );
    ledger.record(4, report.band_hits >= 1, band_line(&report));
}

fn mean_identities(ledger: &mut Ledger) {
    let mut laws = small_laws();
    laws.push(scenario("zn-baseline").law);
    laws.push(scenario("q-baseline").law);
    let mut failures = Vec::new();
    let mut total = 0;
    for (i, law) in laws.iter().enumerate() {
        assert!(law.rho_beta_analytic(1.0).value().is_some_and(|r| r < 1.0));
        for kind in [PoolKind::W, PoolKind::RPartial] {
            let checks =
                mean_checks(law, kind, 200_000, 10, 4.0, SeedNode::root(500 + i as u64)).unwrap();
            assert_eq!(checks.len(), 10);
            total += checks.len();
            failures.extend(
                checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| format!("{}:{}@{}", law.model_name(), c.kind, c.n)),
            );
        }
    }
    ledger.record(
        5,
        failures.is_empty(),
        format!(
            "{} of {total} pool means within 4 SE over {} laws{}",
            total - failures.len(),
            laws.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; outside: {}", failures.join(", "))
            }
        ),
    );
}

fn theory_consistency(ledger: &mut Ledger) {
    let cases = [
        (1.0, 0.4, 0.4 * 0.4 / ZETA2, 2.0),
        (1.0, 0.5, 0.2, 2.0),
        (2.5, 0.3, 0.6, 1.5),
        (0.7, 0.8, 0.1, 3.0),
    ];
    let mut worst_identity = 0.0f64;
    let mut notes = Vec::new();
    let mut pass = true;
    for &(e_q, rho, rho_a, alpha) in &cases {
        for n in 0..50 {
            let lhs = theory::h_n_zn(e_q, rho, rho_a, alpha, n + 1).unwrap();
            let mean_r = e_q * (1.0 - rho.powi(n as i32 + 1)) / (1.0 - rho);
            let rhs =
                rho_a * theory::h_n_zn(e_q, rho, rho_a, alpha, n).unwrap() + mean_r.powf(alpha);
            worst_identity = worst_identity.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
        let bound = rho.max(rho_a) + 1e-6;
        let gaps = (60..=100)
            .map(|n| (n, theory::h_gap_zn(e_q, rho, rho_a, alpha, n).unwrap()))
            .collect();
        let fit = geometric_decay_fit(&gaps).unwrap();
        pass &= fit.rate <= bound;
        notes.push(format!("zn {:.4}<={:.4}", fit.rate, bound));

        let gaps = (60..=100)
            .map(|n| (n, theory::h_gap_q(rho_a, n).unwrap()))
            .collect();
        let fit = geometric_decay_fit(&gaps).unwrap();
        pass &= fit.rate <= rho_a + 1e-6;
        notes.push(format!("q {:.4}<={:.4}", fit.rate, rho_a + 1e-6));
    }
    pass &= worst_identity <= 1e-12;
    ledger.record(
        8,
        pass,
        format!(
            "induction identity worst error {worst_identity:.2e} (max 1e-12); gap rates {}",
            notes.join(", ")
        ),
    );
}

fn exact_vs_pool(ledger: &mut Ledger) {
    let mut pass = true;
    let mut notes = Vec::new();
    for (i, law) in small_laws().iter().enumerate() {
        let r = exact_vs_population(law, 3, 100_000, SeedNode::root(900 + i as u64)).unwrap();
        pass &= r.pass;
        notes.push(format!("{} {:.5}", law.model_name(), r.distance));
    }
    let crit = branchtail::tail::ks_critical_value(100_000, 100_000, 0.01);
    ledger.record(
        9,
        pass,
        format!(
            "KS distances {} against critical value {crit:.5}",
            notes.join(", ")
        ),
    );
}

#[test]
fn acceptance_criteria() {
    let mut ledger = Ledger { failed: Vec::new() };
    zn_baseline(&mut ledger);
    q_baseline(&mut ledger);
    sum_appendix(&mut ledger);
    mean_identities(&mut ledger);
    theory_consistency(&mut ledger);
    exact_vs_pool(&mut ledger);
    ledger.failed.sort_unstable();
    assert!(
        ledger.failed.is_empty(),
        "failed criteria: {:?}",
        ledger.failed
    );
}
