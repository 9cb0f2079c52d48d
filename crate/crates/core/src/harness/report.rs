//! Verification reports and their on-disk layout.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::checks::{DecayCheck, FixedPointCheck, MeanCheck};
use super::config::ScenarioConfig;
use crate::error::Result;
use crate::law::RegimeReport;
use crate::tail::TailReport;
use crate::theory::TheoryConstants;

/// The constant the tail ratio should approach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// `h_limit_zn`, `h_limit_q`, `sum_constant_zn` or `sum_constant_q`.
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillCheck {
    pub k: usize,
    pub estimate: f64,
    pub alpha: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: ScenarioConfig,
    pub regime: RegimeReport,
    pub constants: TheoryConstants,
    pub target: Target,
    pub tail: TailReport,
    pub band_hits: usize,
    pub hill_summary: Vec<(usize, f64)>,
    pub hill_check: Option<HillCheck>,
    pub mean_checks: Vec<MeanCheck>,
    pub decay_check: Option<DecayCheck>,
    pub fixed_point_check: Option<FixedPointCheck>,
    pub ks_series: BTreeMap<u32, f64>,
    pub verdict: BTreeMap<String, Verdict>,
    pub passed: bool,
}

impl VerificationReport {
    /// Writes `report.json`, `tail.csv`, `hill.csv` and `decay.csv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut json = BufWriter::new(File::create(dir.join("report.json"))?);
        serde_json::to_writer_pretty(&mut json, self)?;
        writeln!(json)?;
        json.flush()?;

        let mut tail = BufWriter::new(File::create(dir.join("tail.csv"))?);
        self.tail.write_csv(&mut tail)?;
        tail.flush()?;

        let mut hill = BufWriter::new(File::create(dir.join("hill.csv"))?);
        writeln!(hill, "k,alpha_hat")?;
        for (k, a) in &self.hill_summary {
            writeln!(hill, "{k},{a}")?;
        }
        hill.flush()?;

        let mut decay = BufWriter::new(File::create(dir.join("decay.csv"))?);
        writeln!(decay, "n,ratio_max")?;
        if let Some(d) = &self.decay_check {
            for (n, r) in &d.series {
                writeln!(decay, "{n},{r}")?;
            }
        }
        decay.flush()?;
        Ok(())
    }

    /// One line per verdict, `PASS`/`FAIL` first.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "scenario {}: {} (target {} = {:.6})\n",
            self.scenario.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.target.name,
            self.target.value
        );
        for (name, v) in &self.verdict {
            out.push_str(&format!(
                "  [{}] {name}: {}\n",
                if v.pass { "PASS" } else { "FAIL" },
                v.detail
            ));
        }
        out
    }
}
