//! Core library for riskbench, a benchmarking suite for player risk
//! detection models.
//!
//! The crate is split by responsibility:
//!
//! - [`canonical`]: the canonical event schema, CSV codec, harmonizer for
//!   operator exports and event validation.
//! - [`synthgen`]: deterministic, seeded generator of labeled synthetic
//!   gambling datasets.
//! - [`registry`]: dataset cards, versioned storage and integrity checks.
//! - [`tasks`]: label rules, player splits and task bundle materialization.
//! - [`scoring`]: submission validation and the prevalence-aware metric suite.

pub mod canonical;
pub mod registry;
pub mod scoring;
pub mod synthgen;
pub mod tasks;

pub mod fsutil;

pub use canonical::{EventKind, EventRecord, Timestamp, ValidationReport, Vertical};
pub use registry::{DatasetCard, DatasetRef, Registry};
pub use scoring::{ScoreReport, PredictionSet};
pub use synthgen::{generate, PlayerLabel, SyntheticConfig};
pub use tasks::{LabelRule, TaskBundle, TaskSpec};
