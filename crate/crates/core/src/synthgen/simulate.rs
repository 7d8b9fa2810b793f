//! Behavioral simulation of a single player.
//!
//! Activity days are drawn per tier; each active day carries a Poisson
//! number of sessions placed uniformly in the day (a Poisson process
//! conditioned on its count). Stakes are log-normal per player. Every
//! risk-driven effect is scaled by `latent * signal_strength`, so with zero
//! signal the simulated behavior has the same law for every latent value.

use rand::Rng;
use rand_distr::{Binomial, Distribution, LogNormal, Poisson};

use crate::canonical::{
    Activity, EventRecord, SessionActivity, Timestamp, Transaction, TransactionStatus, Vertical, SECONDS_PER_DAY,
};

use super::config::{BehaviorParams, Economics, EngagementTier, TierProfiles};

/// Static attributes of a synthetic player.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerProfile {
    pub player_id: String,
    pub tier: EngagementTier,
    pub vertical: Vertical,
    pub cohort: String,
    pub enrolled_at: Timestamp,
}

/// Dataset-wide simulation parameters.
#[derive(Debug, Clone, Copy)]
pub struct SimulationParams<'a> {
    pub horizon_days: u32,
    pub signal_strength: f64,
    pub economics: &'a Economics,
    pub tiers: &'a TierProfiles,
    pub behavior: &'a BehaviorParams,
}

/// Game characteristics of a vertical.
#[derive(Debug, Clone, Copy)]
pub struct VerticalGame {
    pub products: &'static [&'static str],
    pub win_probability: f64,
    pub mean_bets_per_session: f64,
    /// Median stake per bet, cents.
    pub median_stake: f64,
    pub seconds_per_bet: f64,
}

pub fn vertical_game(vertical: Vertical) -> VerticalGame {
    match vertical {
        Vertical::Lottery => VerticalGame {
            products: &["DRAW", "INSTANT"],
            win_probability: 0.1,
            mean_bets_per_session: 3.0,
            median_stake: 300.0,
            seconds_per_bet: 40.0,
        },
        Vertical::Casino => VerticalGame {
            products: &["SLOTS", "TABLE", "LIVE_DEALER"],
            win_probability: 0.45,
            mean_bets_per_session: 30.0,
            median_stake: 100.0,
            seconds_per_bet: 20.0,
        },
        Vertical::Sports => VerticalGame {
            products: &["FIXED_ODDS", "PROP", "PARLAY"],
            win_probability: 0.45,
            mean_bets_per_session: 4.0,
            median_stake: 500.0,
            seconds_per_bet: 90.0,
        },
    }
}

pub const PAYMENT_METHODS: [&str; 4] = ["CARD", "PAYPAL", "BANK_TRANSFER", "E_WALLET"];

const MEDIAN_DEPOSIT_CENTS: f64 = 2_500.0;
const DEPOSIT_SIGMA: f64 = 0.7;
const MAX_CHASE_STEPS: i32 = 3;

/// Simulates the whole horizon of one player. Events come back sorted by
/// start time; the first event always lies inside the horizon.
pub fn simulate_player_events<R: Rng + ?Sized>(
    latent: f64,
    profile: &PlayerProfile,
    params: &SimulationParams<'_>,
    rng: &mut R,
) -> Vec<EventRecord> {
    let risk = latent.clamp(0.0, 1.0) * params.signal_strength;
    let behavior = params.behavior;
    let game = vertical_game(profile.vertical);
    let rtp = params.economics.rtp(profile.vertical);
    let horizon = params.horizon_days.max(1);

    let chase_probability = (behavior.chase_base + behavior.chase_gain * risk).clamp(0.0, 1.0);
    let decline_probability = (behavior.decline_base + behavior.decline_gain * risk).clamp(0.0, 1.0);
    let extra_deposits = behavior.deposit_base + behavior.deposit_gain * risk;

    let base_stake = LogNormal::new(game.median_stake.ln(), behavior.stake_sigma)
        .expect("valid log-normal")
        .sample(rng);
    let method = PAYMENT_METHODS[rng.random_range(0..PAYMENT_METHODS.len())];
    let payout_ratio = rtp / game.win_probability;

    let mut events = Vec::new();
    let mut chase_steps = 0i32;
    for day in active_days(profile.tier, params.tiers, horizon, rng) {
        let day_start = profile.enrolled_at.plus_seconds(i64::from(day) * SECONDS_PER_DAY);
        let activity = params.tiers.get(profile.tier);
        let sessions = 1 + poisson(rng, activity.sessions_per_active_day - 1.0);
        let mut starts: Vec<i64> = (0..sessions).map(|_| rng.random_range(0..SECONDS_PER_DAY)).collect();
        starts.sort_unstable();

        let deposits = 1 + poisson(rng, extra_deposits);
        for n in 0..deposits {
            let offset = if n == 0 {
                (starts[0] - rng.random_range(60..900)).max(0)
            } else {
                rng.random_range(0..SECONDS_PER_DAY)
            };
            let amount = LogNormal::new(MEDIAN_DEPOSIT_CENTS.ln(), DEPOSIT_SIGMA)
                .expect("valid log-normal")
                .sample(rng);
            let status = if rng.random_bool(decline_probability) {
                TransactionStatus::Declined
            } else {
                TransactionStatus::Approved
            };
            events.push(EventRecord {
                player_id: profile.player_id.clone(),
                start_time: day_start.plus_seconds(offset),
                cohort: profile.cohort.clone(),
                activity: Activity::Deposit(Transaction {
                    amount: round_to_whole_units(amount).max(500),
                    method: method.to_string(),
                    status,
                }),
            });
        }

        let escalation = 1.0 + behavior.escalation_gain * risk * f64::from(day) / f64::from(horizon);
        let mut day_net = 0i64;
        let mut last_end = day_start;
        for start in starts {
            let stake = (base_stake * escalation * behavior.chase_factor.powi(chase_steps))
                .round()
                .max(1.0) as i64;
            let bets = 1 + poisson(rng, game.mean_bets_per_session - 1.0);
            let wins = Binomial::new(u64::from(bets), game.win_probability)
                .expect("valid binomial")
                .sample(rng) as i64;
            let payout = (stake as f64 * payout_ratio).round() as i64;
            let total_staked = i64::from(bets) * stake;
            let net_outcome = wins * payout - total_staked;
            let duration = (f64::from(bets) * game.seconds_per_bet * rng.random_range(0.5..1.5)).max(1.0) as i64;
            let product = game.products[rng.random_range(0..game.products.len())];

            let start_time = day_start.plus_seconds(start);
            let end_time = start_time.plus_seconds(duration);
            last_end = last_end.max(end_time);
            day_net += net_outcome;
            events.push(EventRecord {
                player_id: profile.player_id.clone(),
                start_time,
                cohort: profile.cohort.clone(),
                activity: Activity::Session(SessionActivity {
                    end_time,
                    bet_count: bets,
                    total_staked,
                    net_outcome,
                    product: product.to_string(),
                    vertical: profile.vertical,
                }),
            });

            chase_steps = if net_outcome < 0 && rng.random_bool(chase_probability) {
                (chase_steps + 1).min(MAX_CHASE_STEPS)
            } else {
                0
            };
        }

        if day_net > 0 && rng.random_bool(behavior.withdrawal_probability) {
            events.push(EventRecord {
                player_id: profile.player_id.clone(),
                start_time: last_end.plus_seconds(rng.random_range(60..1800)),
                cohort: profile.cohort.clone(),
                activity: Activity::Withdrawal(Transaction {
                    amount: day_net,
                    method: method.to_string(),
                    status: TransactionStatus::Approved,
                }),
            });
        }
    }
    events.sort_by_key(|e| e.start_time);
    events
}

/// Day offsets (from enrollment) on which the player plays.
fn active_days<R: Rng + ?Sized>(tier: EngagementTier, tiers: &TierProfiles, horizon: u32, rng: &mut R) -> Vec<u32> {
    let activity = tiers.get(tier);
    let span = activity.active_span_days.map_or(horizon, |d| d.min(horizon)).max(1);
    let mut days: Vec<u32> = (0..span)
        .filter(|_| rng.random_bool(activity.active_day_probability))
        .collect();
    if tier == EngagementTier::Regular {
        // Regular players show up every week of the horizon.
        for week_start in (0..horizon).step_by(7) {
            let week_end = (week_start + 7).min(horizon);
            if !days.iter().any(|d| (week_start..week_end).contains(d)) {
                days.push(rng.random_range(week_start..week_end));
            }
        }
        days.sort_unstable();
    }
    if days.is_empty() {
        days.push(rng.random_range(0..span));
    }
    days
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u32
}

fn round_to_whole_units(cents: f64) -> i64 {
    ((cents / 100.0).round() * 100.0) as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{validate_events, EventKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn profile(tier: EngagementTier, vertical: Vertical) -> PlayerProfile {
        PlayerProfile {
            player_id: "P0000001".into(),
            tier,
            vertical,
            cohort: "north".into(),
            enrolled_at: Timestamp::parse("2025-05-01T00:00:00Z").unwrap(),
        }
    }

    fn params<'a>(horizon: u32, signal: f64, economics: &'a Economics, tiers: &'a TierProfiles, behavior: &'a BehaviorParams) -> SimulationParams<'a> {
        SimulationParams {
            horizon_days: horizon,
            signal_strength: signal,
            economics,
            tiers,
            behavior,
        }
    }

    fn declined_rate(events: &[EventRecord]) -> (u32, u32) {
        let deposits: Vec<_> = events.iter().filter(|e| e.kind() == EventKind::Deposit).collect();
        let declined = deposits
            .iter()
            .filter(|e| e.transaction().unwrap().status == TransactionStatus::Declined)
            .count();
        (declined as u32, deposits.len() as u32)
    }

    #[test]
    fn output_validates_and_starts_inside_the_horizon() {
        let (e, t, b) = (Economics::default(), TierProfiles::default(), BehaviorParams::default());
        let p = params(30, 1.0, &e, &t, &b);
        for (i, tier) in EngagementTier::ALL.iter().enumerate() {
            let prof = profile(*tier, Vertical::ALL[i % 3]);
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let events = simulate_player_events(0.7, &prof, &p, &mut rng);
            assert!(validate_events(&events).pass);
            let first = events.iter().find(|e| e.is_session()).unwrap();
            assert!(first.start_time.seconds_since(prof.enrolled_at) < 30 * SECONDS_PER_DAY);
        }
    }

    #[test]
    fn new_players_stay_within_their_first_week() {
        let (e, t, b) = (Economics::default(), TierProfiles::default(), BehaviorParams::default());
        let p = params(90, 1.0, &e, &t, &b);
        let prof = profile(EngagementTier::New, Vertical::Casino);
        for seed in 0..50 {
            let events = simulate_player_events(0.5, &prof, &p, &mut ChaCha8Rng::seed_from_u64(seed));
            for ev in events.iter().filter(|e| e.is_session()) {
                assert!(ev.start_time.seconds_since(prof.enrolled_at) < 7 * SECONDS_PER_DAY);
            }
        }
    }

    #[test]
    fn regular_players_are_active_most_weeks() {
        let (e, t, b) = (Economics::default(), TierProfiles::default(), BehaviorParams::default());
        let horizon = 84;
        let p = params(horizon, 1.0, &e, &t, &b);
        let prof = profile(EngagementTier::Regular, Vertical::Sports);
        for seed in 0..50 {
            let events = simulate_player_events(0.5, &prof, &p, &mut ChaCha8Rng::seed_from_u64(seed));
            let mut weeks: Vec<i64> = events
                .iter()
                .filter(|e| e.is_session())
                .map(|e| e.start_time.seconds_since(prof.enrolled_at) / (7 * SECONDS_PER_DAY))
                .collect();
            weeks.dedup();
            assert!(weeks.len() as f64 >= 0.6 * f64::from(horizon / 7));
        }
    }

    #[test]
    fn zero_signal_makes_latent_irrelevant() {
        let (e, t, b) = (Economics::default(), TierProfiles::default(), BehaviorParams::default());
        let p = params(14, 0.0, &e, &t, &b);
        let prof = profile(EngagementTier::Regular, Vertical::Casino);
        for seed in 0..20 {
            let low = simulate_player_events(0.05, &prof, &p, &mut ChaCha8Rng::seed_from_u64(seed));
            let high = simulate_player_events(0.95, &prof, &p, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(low, high);
        }
    }

    #[test]
    fn declined_deposits_rise_with_latent_risk() {
        let (e, t, b) = (Economics::default(), TierProfiles::default(), BehaviorParams::default());
        let p = params(7, 1.0, &e, &t, &b);
        let prof = profile(EngagementTier::Regular, Vertical::Casino);
        let rates = |latent: f64, offset: u64| -> Vec<f64> {
            (0..1000)
                .map(|i| {
                    let events = simulate_player_events(latent, &prof, &p, &mut ChaCha8Rng::seed_from_u64(offset + i));
                    let (declined, total) = declined_rate(&events);
                    f64::from(declined) / f64::from(total)
                })
                .collect()
        };
        let high = rates(0.9, 0);
        let low = rates(0.1, 10_000);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        let (mh, ml) = (mean(&high), mean(&low));
        let pooled_se = (var(&high, mh) / 1000.0 + var(&low, ml) / 1000.0).sqrt();
        assert!(mh - ml >= 2.0 * pooled_se, "gap {} se {}", mh - ml, pooled_se);
    }

    #[test]
    fn casino_house_edge_matches_rtp() {
        let (e, t, b) = (Economics::default(), TierProfiles::default(), BehaviorParams::default());
        let p = params(30, 1.0, &e, &t, &b);
        let prof = profile(EngagementTier::Regular, Vertical::Casino);
        let (mut staked, mut net) = (0i64, 0i64);
        let mut seed = 0;
        while staked < 50_000_000 {
            for ev in simulate_player_events(0.3, &prof, &p, &mut ChaCha8Rng::seed_from_u64(seed)) {
                if let Some(s) = ev.session() {
                    staked += s.total_staked;
                    net += s.net_outcome;
                }
            }
            seed += 1;
        }
        let edge = net as f64 / staked as f64;
        assert!((-0.06..=-0.04).contains(&edge), "edge {edge}");
    }
}
