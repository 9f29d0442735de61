//! Random permutations whose cycles of length `m` carry weight `θ_m`, with
//! emphasis on logarithmic weights `θ_m = ln^k m`.
//!
//! The crate computes the normalization `h_n` and exact laws of cycle
//! statistics from power-series recurrences, evaluates saddle-point
//! asymptotics, measures total-variation distance to the Poisson limit, and
//! samples cycle types exactly.

pub mod asympt;
pub mod error;
pub mod exact;
pub mod observables;
pub mod sampler;
pub mod series;
pub mod stats;
pub mod tvd;
pub mod weights;

pub use error::{Error, Result};
pub use exact::{CycleType, DistributionTable, HTable};
pub use series::{LogSpaceSeries, TruncatedSeries};
pub use weights::WeightModel;
