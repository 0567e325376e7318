//! Hashing with chaining under the linear mod-p and multiply-shift families:
//! longest-chain measurement, Monte Carlo and exhaustive estimators, and
//! executable checks of the counting arguments behind the max-load bound.

pub mod chaintable;
pub mod error;
pub mod experiment;
pub mod hashfn;
pub mod keysets;
pub mod lemma_oracle;
pub mod modmath;
pub mod report;

pub use chaintable::{ChainedTable, LoadProfile};
pub use error::{Error, Result};
pub use experiment::{FamilyConfig, TrialBatch, TrialOptions};
pub use hashfn::{BucketHash, HashFamilyId, HashFunction, LinearModPParams, MultiplyShiftParams};
pub use keysets::{KeySetSpec, KeySetVariant};
pub use lemma_oracle::{LemmaInstance, Universe};
pub use modmath::{IntervalZr, Prime64};

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
