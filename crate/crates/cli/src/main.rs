//! `branchtail` command line: constants, pools, tail ratios and scenario verification.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use branchtail::harness::{run_scenario_with, ScenarioConfig};
use branchtail::sim::{self, io, PoolKind, SamplePool};
use branchtail::tail::{self, BootstrapSpec, Denominator, TailReport, DEFAULT_MIN_EXCEEDANCES};
use branchtail::{SeedNode, TheoryConstants};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "branchtail",
    version,
    about = "Tail asymptotics of weighted branching fixed points"
)]
struct Cli {
    /// Master seed, overriding the one in a config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores by default
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format for tables
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    W,
    R,
    Rstar,
}

impl From<Kind> for PoolKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::W => PoolKind::W,
            Kind::R => PoolKind::RPartial,
            Kind::Rstar => PoolKind::RStar,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the regime and theoretical constants of a scenario as JSON
    Constants { config: PathBuf },
    /// Sample a pool of W_n, R^(n) or R*_n
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::R)]
        kind: Kind,
        /// Generation; the config depth by default
        #[arg(long)]
        generation: Option<u32>,
        /// Constant starting value of an R* iteration
        #[arg(long, default_value_t = 0.0)]
        init: f64,
        /// Expand full trees instead of population dynamics
        #[arg(long)]
        exact: bool,
        /// Write a one-column CSV instead of the binary pool format
        #[arg(long)]
        csv: bool,
    },
    /// Tail ratio of two pools on a grid of denominator quantiles
    Tail {
        #[arg(long)]
        num: PathBuf,
        #[arg(long)]
        den: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.003, 0.001])]
        grid: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_MIN_EXCEEDANCES)]
        min_exceedances: usize,
        /// Bootstrap resamples; no band when absent
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Run a scenario end to end and write its report directory
    Verify {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-sample Kolmogorov-Smirnov distance between two pools
    Ks { a: PathBuf, b: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> anyhow::Result<ScenarioConfig> {
    let mut cfg =
        ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_values(path: &Path) -> anyhow::Result<Vec<f64>> {
    let ctx = || format!("reading {}", path.display());
    if path.extension().is_some_and(|e| e == "csv") {
        Ok(io::read_csv_values(std::fs::File::open(path).with_context(ctx)?).with_context(ctx)?)
    } else {
        Ok(io::read_pool(path).with_context(ctx)?.into_values())
    }
}

/// `Ok(false)` means a verification ran and failed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    match cli.command {
        Command::Constants { config } => {
            let cfg = load_config(&config, cli.seed)?;
            let regime = cfg.check_regime()?;
            let constants =
                TheoryConstants::compute(&cfg.law, cfg.alpha, regime.regime, cfg.depth)?;
            let out = serde_json::json!({ "regime": regime, "constants": constants });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Simulate {
            config,
            out,
            kind,
            generation,
            init,
            exact,
            csv,
        } => {
            let cfg = load_config(&config, cli.seed)?;
            let n = generation.unwrap_or(cfg.depth);
            let seed = SeedNode::root(cfg.seed).named("simulate");
            let kind = PoolKind::from(kind);
            let pool = match kind {
                PoolKind::RStar => {
                    if exact {
                        bail!("--exact does not apply to R* iterations");
                    }
                    let start = SamplePool::initial(&cfg.law, kind, vec![init; cfg.pool_size])?;
                    sim::evolve_chain(&cfg.law, start, n, seed, |_| {})?
                }
                _ if exact => sim::exact_pool(&cfg.law, kind, cfg.pool_size, n, seed)?,
                _ => sim::population_pool(&cfg.law, kind, cfg.pool_size, n, seed)?,
            };
            if csv {
                io::write_csv(pool.values(), &out)?;
            } else {
                io::write_pool(&pool, &out)?;
            }
            eprintln!(
                "wrote {} {} values of generation {n} to {}",
                pool.len(),
                kind,
                out.display()
            );
        }
        Command::Tail {
            num,
            den,
            grid,
            min_exceedances,
            bootstrap,
            level,
        } => {
            let num = load_values(&num)?;
            let den = load_values(&den)?;
            let report: TailReport = match bootstrap {
                Some(b) => {
                    let spec = BootstrapSpec::new(
                        b,
                        level,
                        SeedNode::root(cli.seed.unwrap_or(0)).named("bootstrap"),
                    )?;
                    tail::tail_ratio_with_band(
                        &num,
                        Denominator::Sample(&den),
                        &grid,
                        min_exceedances,
                        &spec,
                    )?
                }
                None => tail::tail_ratio(&num, Denominator::Sample(&den), &grid, min_exceedances)?,
            };
            match cli.format {
                Format::Csv => report.write_csv(std::io::stdout().lock())?,
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        Command::Verify { config, out } => {
            let cfg = load_config(&config, cli.seed)?;
            let report = run_scenario_with(&cfg, cli.threads)?;
            report.write_dir(&out)?;
            print!("{}", report.summary());
            return Ok(report.passed);
        }
        Command::Ks { a, b } => {
            let a = load_values(&a)?;
            let b = load_values(&b)?;
            let d = tail::ks_distance(&a, &b);
            match cli.format {
                Format::Csv => println!("{d:?}"),
                Format::Json => println!(
                    "{}",
                    serde_json::json!({ "distance": d, "n_a": a.len(), "n_b": b.len() })
                ),
            }
        }
    }
    Ok(true)
}
