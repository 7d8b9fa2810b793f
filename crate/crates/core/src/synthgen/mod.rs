//! Deterministic synthetic dataset generator.
//!
//! A [`SyntheticConfig`] fully determines the output: each player draws a
//! latent risk value from a dedicated random stream, the latent value drives
//! both the PGSI-style ground truth and the behavioral markers in the event
//! log, and exactly `round(prevalence * n_players)` players are flagged.

mod config;
mod generate;
mod labels;
mod pgsi;
mod presets;
mod rng;
mod simulate;

pub use config::{
    BehaviorParams, CohortShare, Economics, EngagementMix, EngagementTier, LabelParams, SyntheticConfig,
    TierActivity, TierProfiles, VerticalMix,
};
pub use generate::{
    generate, player_id, GeneratedDataset, GenerationManifest, LabelAllocation, RowCounts, GENERATOR_NAME,
    GENERATOR_VERSION,
};
pub use labels::{labels_to_csv, parse_labels, write_labels, LabelFileError, LabelSource, PlayerLabel, LABEL_HEADER};
pub use pgsi::{latent_from_uniform, pgsi_from_latent, PGSI_MAX, PGSI_NOISE_SPREAD};
pub use presets::{preset, PRESET_NAMES};
pub use rng::{player_stream, StreamPurpose};
pub use simulate::{simulate_player_events, vertical_game, PlayerProfile, SimulationParams, VerticalGame};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("generator config cannot be satisfied: {0}")]
    InfeasibleConfig(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
