//! Simulation and measurement harness for generative-evaluative agreement:
//! how well a model's scoring of its own skill-conditioned output recovers
//! the skill levels it was asked to portray.
//!
//! The pipeline is cohort sampling ([`cohort`]), the generate-then-score
//! engine ([`engine`]) over pluggable [`backends`], and the agreement
//! statistics in [`analytics`]. Everything is driven by a [`GeaConfig`].

pub mod analytics;
pub mod backends;
pub mod cohort;
pub mod config;
pub mod engine;
pub mod error;
pub mod num;
pub mod store;
pub mod taxonomy;

pub use config::GeaConfig;
pub use error::{GeaError, Result, TransportError};
pub use num::Real;

/// The proficiency scale at the default precision.
pub type Scale = taxonomy::ProficiencyScale<f64>;
/// Single-precision scale, for memory-bound sweeps.
pub type ScaleF32 = taxonomy::ProficiencyScale<f32>;
/// Bootstrap interval at the default precision.
pub type Ci = analytics::Interval<f64>;
/// Exact stage mean.
pub type StageRatio = num_rational::Ratio<u32>;
