use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::canonical::{text_enum, Vertical};
use crate::registry::CardTemplate;

use super::SynthError;

const MIX_TOLERANCE: f64 = 1e-9;

text_enum!(
    /// Engagement tier of a synthetic player.
    EngagementTier {
        New => "NEW",
        Casual => "CASUAL",
        Regular => "REGULAR",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE", deny_unknown_fields)]
pub struct EngagementMix {
    pub new: f64,
    pub casual: f64,
    pub regular: f64,
}

impl EngagementMix {
    pub fn weights(&self) -> [(EngagementTier, f64); 3] {
        [
            (EngagementTier::New, self.new),
            (EngagementTier::Casual, self.casual),
            (EngagementTier::Regular, self.regular),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE", deny_unknown_fields)]
pub struct VerticalMix {
    pub lottery: f64,
    pub casino: f64,
    pub sports: f64,
}

impl VerticalMix {
    pub fn weights(&self) -> [(Vertical, f64); 3] {
        [
            (Vertical::Lottery, self.lottery),
            (Vertical::Casino, self.casino),
            (Vertical::Sports, self.sports),
        ]
    }
}

/// Per-vertical return-to-player fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE", deny_unknown_fields)]
pub struct Economics {
    pub lottery: f64,
    pub casino: f64,
    pub sports: f64,
}

impl Economics {
    pub fn rtp(&self, vertical: Vertical) -> f64 {
        match vertical {
            Vertical::Lottery => self.lottery,
            Vertical::Casino => self.casino,
            Vertical::Sports => self.sports,
        }
    }
}

impl Default for Economics {
    fn default() -> Self {
        Self {
            lottery: 0.5,
            casino: 0.95,
            sports: 0.93,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortShare {
    pub tag: String,
    pub proportion: f64,
}

/// Activity pattern of one engagement tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierActivity {
    /// Probability that a given day in the active span has play.
    pub active_day_probability: f64,
    /// Mean number of sessions on an active day (at least 1).
    pub sessions_per_active_day: f64,
    /// Days from enrollment during which the tier is active at all;
    /// `None` means the whole horizon.
    #[serde(default)]
    pub active_span_days: Option<u32>,
}

/// Activity parameters per tier. The tier cutoffs are configuration, not
/// constants: the defaults below are one reasonable reading of "new",
/// "casual" and "regular".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE", deny_unknown_fields)]
pub struct TierProfiles {
    pub new: TierActivity,
    pub casual: TierActivity,
    pub regular: TierActivity,
}

impl TierProfiles {
    pub fn get(&self, tier: EngagementTier) -> &TierActivity {
        match tier {
            EngagementTier::New => &self.new,
            EngagementTier::Casual => &self.casual,
            EngagementTier::Regular => &self.regular,
        }
    }
}

impl Default for TierProfiles {
    fn default() -> Self {
        Self {
            new: TierActivity {
                active_day_probability: 0.6,
                sessions_per_active_day: 2.5,
                active_span_days: Some(7),
            },
            casual: TierActivity {
                active_day_probability: 0.15,
                sessions_per_active_day: 1.5,
                active_span_days: None,
            },
            regular: TierActivity {
                active_day_probability: 0.6,
                sessions_per_active_day: 2.5,
                active_span_days: None,
            },
        }
    }
}

/// Baseline and risk-driven intensities of the behavioral markers. Every
/// `*_gain` is multiplied by `latent * signal_strength`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorParams {
    /// Probability of chasing (raising the next stake) after a losing session.
    pub chase_base: f64,
    pub chase_gain: f64,
    /// Stake multiplier applied to the session after a chase.
    pub chase_factor: f64,
    /// Extra deposit attempts per active day (Poisson mean).
    pub deposit_base: f64,
    pub deposit_gain: f64,
    /// Probability that a deposit attempt is declined.
    pub decline_base: f64,
    pub decline_gain: f64,
    /// Relative stake growth reached at the end of the horizon.
    pub escalation_gain: f64,
    /// Log-normal shape of the per-player base stake.
    pub stake_sigma: f64,
    /// Probability of withdrawing a winning day's balance.
    pub withdrawal_probability: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            chase_base: 0.15,
            chase_gain: 0.6,
            chase_factor: 1.5,
            deposit_base: 0.3,
            deposit_gain: 1.5,
            decline_base: 0.05,
            decline_gain: 0.45,
            escalation_gain: 1.0,
            stake_sigma: 0.6,
            withdrawal_probability: 0.5,
        }
    }
}

/// Knobs of the latent-to-label stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelParams {
    /// PGSI score at or above which a player counts as at risk.
    pub pgsi_threshold: u8,
    /// Shape `b` of the Beta(1, b) latent risk distribution.
    pub latent_shape: f64,
    /// Self-exclusion probability at latent 0 and its increase at latent 1.
    pub vse_base: f64,
    pub vse_gain: f64,
}

impl Default for LabelParams {
    fn default() -> Self {
        Self {
            pgsi_threshold: 5,
            latent_shape: 4.0,
            vse_base: 0.01,
            vse_gain: 0.25,
        }
    }
}

/// Full description of a synthetic dataset. Generation is a pure function
/// of this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_players: u32,
    /// Days of activity tracked per player, counted from enrollment.
    pub time_horizon_days: u32,
    pub engagement_mix: EngagementMix,
    pub vertical_mix: VerticalMix,
    pub cohorts: Vec<CohortShare>,
    pub prevalence: f64,
    pub signal_strength: f64,
    #[serde(default)]
    pub economics: Economics,
    /// First possible enrollment date (UTC).
    pub start_date: NaiveDate,
    /// Enrollment dates are spread uniformly over this many days.
    #[serde(default)]
    pub enrollment_window_days: u32,
    #[serde(default)]
    pub tiers: TierProfiles,
    #[serde(default)]
    pub behavior: BehaviorParams,
    #[serde(default)]
    pub labels: LabelParams,
    pub card: CardTemplate,
}

impl SyntheticConfig {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let config: SyntheticConfig =
            serde_json::from_str(text).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Number of at-risk players the generator allocates.
    pub fn at_risk_count(&self) -> u32 {
        (self.prevalence * f64::from(self.n_players)).round() as u32
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.n_players == 0 {
            return invalid("n_players must be positive".into());
        }
        check_mix("engagement_mix", self.engagement_mix.weights().iter().map(|w| w.1))?;
        check_mix("vertical_mix", self.vertical_mix.weights().iter().map(|w| w.1))?;
        if self.cohorts.is_empty() {
            return invalid("cohorts must list at least one cohort".into());
        }
        check_mix("cohorts", self.cohorts.iter().map(|c| c.proportion))?;
        if !(0.0..=1.0).contains(&self.prevalence) {
            return invalid(format!("prevalence {} is outside [0, 1]", self.prevalence));
        }
        if !(self.signal_strength >= 0.0 && self.signal_strength.is_finite()) {
            return invalid(format!("signal_strength {} must be finite and >= 0", self.signal_strength));
        }
        for (vertical, _) in self.vertical_mix.weights() {
            let rtp = self.economics.rtp(vertical);
            if !(rtp > 0.0 && rtp <= 1.0) {
                return invalid(format!("return-to-player for {vertical} must be in (0, 1], got {rtp}"));
            }
        }
        for (tier, _) in self.engagement_mix.weights() {
            let t = self.tiers.get(tier);
            if !(0.0..=1.0).contains(&t.active_day_probability) || t.sessions_per_active_day.is_nan() || t.sessions_per_active_day < 1.0 {
                return invalid(format!("activity parameters for {tier} are out of range"));
            }
        }
        let b = &self.behavior;
        for (name, p) in [
            ("chase_base", b.chase_base),
            ("decline_base", b.decline_base),
            ("withdrawal_probability", b.withdrawal_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("{name} must be a probability"));
            }
        }
        if b.chase_factor.is_nan() || b.chase_factor < 1.0 || b.chase_gain < 0.0 || b.decline_gain < 0.0 || b.deposit_gain < 0.0 {
            return invalid("behavior gains must be non-negative and chase_factor >= 1".into());
        }
        if !(1..=27).contains(&self.labels.pgsi_threshold) || self.labels.latent_shape.is_nan() || self.labels.latent_shape <= 0.0 {
            return invalid("label parameters are out of range".into());
        }

        if self.time_horizon_days == 0 {
            return Err(SynthError::InfeasibleConfig(
                "time_horizon_days must be at least 1 day".into(),
            ));
        }
        if self.engagement_mix.new > 0.0 && self.tiers.new.active_span_days == Some(0) {
            return Err(SynthError::InfeasibleConfig(
                "NEW players need an active span of at least 1 day".into(),
            ));
        }
        if self.tiers.new.active_span_days.is_some_and(|d| d > 7) {
            return Err(SynthError::InfeasibleConfig(
                "NEW players are only active within their first 7 days".into(),
            ));
        }
        if self.prevalence > 0.0 && self.prevalence * f64::from(self.n_players) < 1.0 {
            return Err(SynthError::InfeasibleConfig(format!(
                "prevalence {} over {} players yields no at-risk player",
                self.prevalence, self.n_players
            )));
        }
        Ok(())
    }
}

fn check_mix(name: &str, weights: impl Iterator<Item = f64>) -> Result<(), SynthError> {
    let mut total = 0.0;
    for w in weights {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(SynthError::InvalidConfig(format!("{name} has a negative or non-finite share")));
        }
        total += w;
    }
    if (total - 1.0).abs() > MIX_TOLERANCE {
        return Err(SynthError::InvalidConfig(format!("{name} sums to {total}, expected 1")));
    }
    Ok(())
}
