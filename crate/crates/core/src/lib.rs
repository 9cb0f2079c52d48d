//! Tail asymptotics of the linear branching fixed point `R = sum_i C_i R_i + Q`.
//!
//! Laws of the root vector live in [`law`], closed-form constants in
//! [`theory`], the population-dynamics sampler in [`sim`], tail estimators
//! in [`tail`] and the end-to-end verification runner in [`harness`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod harness;
pub mod law;
pub mod rng;
pub mod sim;
pub mod tail;
pub mod theory;

pub use dist::{DistributionSpec, Moment, PowerTail};
pub use error::{Error, Result};
pub use harness::{run_scenario, run_scenario_with, Dominant, ScenarioConfig, VerificationReport};
pub use law::{BranchingLaw, Regime, RegimeReport, RootSample};
pub use rng::{SeedNode, StreamRng};
pub use sim::{PoolKind, SamplePool};
pub use tail::{BootstrapSpec, Denominator, TailReport};
pub use theory::TheoryConstants;
