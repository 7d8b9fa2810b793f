use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{events_to_csv, EventKind, EventRecord, Timestamp, Vertical, SECONDS_PER_DAY};
use crate::fsutil::{sha256_hex, to_json_bytes};
use crate::registry::{CardCounts, DatasetCard, CARD_FILE, EVENTS_FILE, LABELS_FILE, MANIFEST_FILE};

use super::config::{EngagementTier, SyntheticConfig};
use super::labels::{labels_to_csv, LabelSource, PlayerLabel};
use super::pgsi::{latent_from_uniform, pgsi_from_latent};
use super::rng::{player_stream, StreamPurpose};
use super::simulate::{simulate_player_events, PlayerProfile, SimulationParams};
use super::SynthError;

pub const GENERATOR_NAME: &str = "riskbench-synthgen";
pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub players: u64,
    pub sessions: u64,
    pub deposits: u64,
    pub withdrawals: u64,
    pub rows: u64,
    pub at_risk: u64,
}

/// How the exact prevalence was reached: the `target` highest-scoring
/// players are flagged, then scores are moved across the threshold where
/// the noisy score disagrees with the allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAllocation {
    pub target_at_risk: u64,
    pub pgsi_threshold: u8,
    pub scores_raised: u64,
    pub scores_lowered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub generator: String,
    pub generator_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub counts: RowCounts,
    pub label_allocation: LabelAllocation,
    pub distributions: Vec<String>,
    pub config: SyntheticConfig,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub events: Vec<EventRecord>,
    pub labels: Vec<PlayerLabel>,
    pub card: DatasetCard,
    pub manifest: GenerationManifest,
}

impl GeneratedDataset {
    /// Writes `events.csv`, `labels.csv`, `card.json` and `manifest.json`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), SynthError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(EVENTS_FILE), events_to_csv(&self.events))?;
        fs::write(dir.join(LABELS_FILE), labels_to_csv(&self.labels))?;
        fs::write(dir.join(CARD_FILE), to_json_bytes(&self.card))?;
        fs::write(dir.join(MANIFEST_FILE), to_json_bytes(&self.manifest))?;
        Ok(())
    }
}

pub fn player_id(index: u32) -> String {
    format!("P{:07}", u64::from(index) + 1)
}

struct DrawnPlayer {
    profile: PlayerProfile,
    latent: f64,
    raw_pgsi: u8,
    vse_flag: u8,
}

fn draw_player(config: &SyntheticConfig, index: u32) -> DrawnPlayer {
    let mut rng = player_stream(config.seed, StreamPurpose::Profile, u64::from(index));
    let tier = pick(&config.engagement_mix.weights(), rng.random::<f64>());
    let vertical: Vertical = pick(&config.vertical_mix.weights(), rng.random::<f64>());
    let cohorts: Vec<(usize, f64)> = config.cohorts.iter().map(|c| c.proportion).enumerate().collect();
    let cohort = &config.cohorts[pick(&cohorts, rng.random::<f64>())].tag;
    let enroll_day = if config.enrollment_window_days > 1 {
        rng.random_range(0..config.enrollment_window_days)
    } else {
        0
    };
    let latent = latent_from_uniform(rng.random::<f64>(), config.labels.latent_shape);
    let raw_pgsi = pgsi_from_latent(latent, rng.random_range(-1.0..=1.0));
    let vse_p = (config.labels.vse_base + config.labels.vse_gain * latent).clamp(0.0, 1.0);
    let vse_flag = u8::from(rng.random_bool(vse_p));
    DrawnPlayer {
        profile: PlayerProfile {
            player_id: player_id(index),
            tier,
            vertical,
            cohort: cohort.clone(),
            enrolled_at: Timestamp::from_date(config.start_date)
                .plus_seconds(i64::from(enroll_day) * SECONDS_PER_DAY),
        },
        latent,
        raw_pgsi,
        vse_flag,
    }
}

/// Picks the category whose cumulative weight first exceeds `u`; the last
/// category with positive weight absorbs rounding slack.
fn pick<T: Copy>(weights: &[(T, f64)], u: f64) -> T {
    let mut acc = 0.0;
    for &(item, w) in weights {
        acc += w;
        if w > 0.0 && u < acc {
            return item;
        }
    }
    weights
        .iter()
        .rev()
        .find(|(_, w)| *w > 0.0)
        .map(|(item, _)| *item)
        .expect("validated mix has a positive weight")
}

/// Generates a dataset. The output is a pure function of `config`.
pub fn generate(config: &SyntheticConfig) -> Result<GeneratedDataset, SynthError> {
    config.validate()?;
    let players: Vec<DrawnPlayer> = (0..config.n_players)
        .into_par_iter()
        .map(|i| draw_player(config, i))
        .collect();

    let threshold = config.labels.pgsi_threshold;
    let target = config.at_risk_count() as usize;
    let mut order: Vec<usize> = (0..players.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&players[a], &players[b]);
        pb.raw_pgsi
            .cmp(&pa.raw_pgsi)
            .then(pb.latent.total_cmp(&pa.latent))
            .then(a.cmp(&b))
    });
    let mut flagged = vec![false; players.len()];
    for &i in &order[..target] {
        flagged[i] = true;
    }

    let mut allocation = LabelAllocation {
        target_at_risk: target as u64,
        pgsi_threshold: threshold,
        scores_raised: 0,
        scores_lowered: 0,
    };
    let labels: Vec<PlayerLabel> = players
        .iter()
        .zip(&flagged)
        .map(|(p, &at_risk)| {
            let score = if at_risk && p.raw_pgsi < threshold {
                allocation.scores_raised += 1;
                threshold
            } else if !at_risk && p.raw_pgsi >= threshold {
                allocation.scores_lowered += 1;
                threshold - 1
            } else {
                p.raw_pgsi
            };
            PlayerLabel {
                player_id: p.profile.player_id.clone(),
                pgsi_score: Some(score),
                vse_flag: Some(p.vse_flag),
                risk_flag: u8::from(at_risk),
                label_source: LabelSource::Pgsi,
                cohort: p.profile.cohort.clone(),
            }
        })
        .collect();

    let params = SimulationParams {
        horizon_days: config.time_horizon_days,
        signal_strength: config.signal_strength,
        economics: &config.economics,
        tiers: &config.tiers,
        behavior: &config.behavior,
    };
    let mut events: Vec<EventRecord> = players
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, p)| {
            let mut rng = player_stream(config.seed, StreamPurpose::Events, i as u64);
            simulate_player_events(p.latent, &p.profile, &params, &mut rng)
        })
        .collect();
    // Player ids are zero padded, so this is player order then time order.
    events.sort_by(|a, b| a.player_id.cmp(&b.player_id).then(a.start_time.cmp(&b.start_time)));

    let count = |kind: EventKind| events.iter().filter(|e| e.kind() == kind).count() as u64;
    let counts = RowCounts {
        players: players.len() as u64,
        sessions: count(EventKind::Session),
        deposits: count(EventKind::Deposit),
        withdrawals: count(EventKind::Withdrawal),
        rows: events.len() as u64,
        at_risk: target as u64,
    };
    let card = config.card.fill(
        config.time_horizon_days,
        CardCounts {
            players: counts.players,
            sessions: counts.sessions,
            rows: counts.rows,
        },
    );
    let manifest = GenerationManifest {
        generator: GENERATOR_NAME.to_string(),
        generator_version: GENERATOR_VERSION.to_string(),
        config_sha256: sha256_hex(config.to_json().as_bytes()),
        seed: config.seed,
        counts,
        label_allocation: allocation,
        distributions: distribution_notes(config),
        config: config.clone(),
    };
    Ok(GeneratedDataset {
        events,
        labels,
        card,
        manifest,
    })
}

fn distribution_notes(config: &SyntheticConfig) -> Vec<String> {
    let tiers = EngagementTier::ALL
        .iter()
        .map(|t| {
            let a = config.tiers.get(*t);
            let span = a.active_span_days.map_or("whole horizon".to_string(), |d| format!("first {d} days"));
            format!(
                "{t}: active day probability {}, Poisson sessions per active day with mean {}, {span}",
                a.active_day_probability, a.sessions_per_active_day
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    vec![
        format!("latent risk ~ Beta(1, {})", config.labels.latent_shape),
        "pgsi_score = clamp(round(27 * latent^2 + 3 * U(-1, 1)), 0, 27), then top-k allocation for exact prevalence"
            .to_string(),
        format!(
            "vse_flag ~ Bernoulli({} + {} * latent)",
            config.labels.vse_base, config.labels.vse_gain
        ),
        format!("activity: {tiers}"),
        "session start times uniform within the day; bets per session 1 + Poisson; wins Binomial".to_string(),
        "base stake and deposit amounts log-normal; behavioral effects scale with latent * signal_strength"
            .to_string(),
    ]
}
