//! Empirical tail statistics: CCDFs, Hill estimates, tail-ratio curves with
//! bootstrap bands, KS distances and geometric decay fits.

pub mod bootstrap;
pub mod ccdf;
pub mod decay;
pub mod hill;
pub mod ks;
pub mod ratio;

pub use bootstrap::{bootstrap_band, BootstrapSpec, MIN_RESAMPLES};
pub use ccdf::{empirical_ccdf, SortedSample};
pub use decay::{geometric_decay_fit, DecayFit};
pub use hill::{hill, hill_curve};
pub use ks::{ks_critical_value, ks_distance, ks_distance_sorted};
pub use ratio::{
    tail_ratio, tail_ratio_with_band, Denominator, TailReport, DEFAULT_MIN_EXCEEDANCES,
};
