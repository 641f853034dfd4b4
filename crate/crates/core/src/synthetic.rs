//! Seeded generator for event and metadata tables with known structure.
//!
//! Every avatar draws a mean count for each hotkey feature; each of its
//! traces then draws counts around that mean. Profiles are resampled until
//! every pair of avatars is at least `min_separation` standard deviations
//! apart in hotkey space. Optional alias pairs share one profile and one
//! account id, which makes them real aliases for the account tier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    Action, AvatarIdentity, DatasetError, HotkeyAction, Outcome, Result, TraceEvent, TraceMeta,
    HOTKEY_FEATURES, HOTKEY_KEYS,
};

const SERVERS: [&str; 3] = ["eu", "us", "kr"];
const MAX_PROFILE_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub avatars: usize,
    pub traces_per_avatar: usize,
    pub tau: f64,
    pub hotkey_mean_min: f64,
    pub hotkey_mean_max: f64,
    pub hotkey_std: f64,
    /// Minimum distance between profile means, in units of `hotkey_std`.
    pub min_separation: f64,
    /// Mean number of hotkey events per trace placed after `tau`.
    pub late_events: f64,
    /// Avatars `2k` and `2k + 1` for `k < alias_pairs` share profile and account.
    pub alias_pairs: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            avatars: 50,
            traces_per_avatar: 30,
            tau: 90.0,
            hotkey_mean_min: 2.0,
            hotkey_mean_max: 20.0,
            hotkey_std: 1.0,
            min_separation: 4.0,
            late_events: 5.0,
            alias_pairs: 0,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DatasetError::InvalidParameter(msg));
        if self.avatars == 0 || self.traces_per_avatar == 0 {
            return bad("avatars and traces_per_avatar must be positive".into());
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.hotkey_std.is_finite() && self.hotkey_std > 0.0) {
            return bad(format!(
                "hotkey_std must be positive, got {}",
                self.hotkey_std
            ));
        }
        if !(0.0 <= self.hotkey_mean_min
            && self.hotkey_mean_min < self.hotkey_mean_max
            && self.hotkey_mean_max.is_finite())
        {
            return bad("need 0 <= hotkey_mean_min < hotkey_mean_max".into());
        }
        if !(self.min_separation >= 0.0 && self.late_events >= 0.0) {
            return bad("min_separation and late_events must be non-negative".into());
        }
        if 2 * self.alias_pairs > self.avatars {
            return bad(format!(
                "{} alias pairs need {} avatars",
                self.alias_pairs,
                2 * self.alias_pairs
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub events: Vec<TraceEvent>,
    pub meta: Vec<TraceMeta>,
    /// Hotkey mean vector per avatar, in feature order.
    pub profiles: Vec<Vec<f64>>,
    pub identities: Vec<AvatarIdentity>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn millis(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn hotkey_action(feature: usize) -> Action {
    let key = (feature / 3) as u8;
    debug_assert!((key as usize) < HOTKEY_KEYS);
    Action::Hotkey {
        action: HotkeyAction::ALL[feature % 3],
        key,
    }
}

fn draw_profiles(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let min_dist = spec.min_separation * spec.hotkey_std;
    let mut profiles: Vec<Vec<f64>> = Vec::with_capacity(spec.avatars);
    for i in 0..spec.avatars {
        if i % 2 == 1 && i / 2 < spec.alias_pairs {
            profiles.push(profiles[i - 1].clone());
            continue;
        }
        let mut attempts = 0;
        loop {
            let candidate: Vec<f64> = (0..HOTKEY_FEATURES)
                .map(|_| rng.random_range(spec.hotkey_mean_min..spec.hotkey_mean_max))
                .collect();
            if profiles.iter().all(|p| distance(p, &candidate) >= min_dist) {
                profiles.push(candidate);
                break;
            }
            attempts += 1;
            if attempts == MAX_PROFILE_ATTEMPTS {
                return Err(DatasetError::InvalidParameter(format!(
                    "could not place {} profiles {} std apart",
                    spec.avatars, spec.min_separation
                )));
            }
        }
    }
    Ok(profiles)
}

fn identities(spec: &SyntheticSpec) -> Vec<AvatarIdentity> {
    (0..spec.avatars)
        .map(|i| {
            let account = if i / 2 < spec.alias_pairs {
                1000 + i / 2 * 2
            } else {
                1000 + i
            };
            let server = SERVERS[i % SERVERS.len()];
            let name = format!("avatar{i:03}");
            AvatarIdentity::new(format!("{server}/{account}/{name}"))
                .with_account(account.to_string())
                .with_server(server)
                .with_name(name)
        })
        .collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let profiles = draw_profiles(spec, &mut rng)?;
    let identities = identities(spec);
    let noise = Normal::new(0.0, spec.hotkey_std).expect("std validated");
    let mut other_means: Vec<f64> = (0..spec.avatars)
        .map(|_| rng.random_range(20.0..80.0))
        .collect();
    for k in 0..spec.alias_pairs {
        other_means[2 * k + 1] = other_means[2 * k];
    }

    let mut events = Vec::new();
    let mut meta = Vec::with_capacity(spec.avatars * spec.traces_per_avatar);
    for (a, identity) in identities.iter().enumerate() {
        let twin = a % 2 == 1 && a / 2 < spec.alias_pairs;
        let faction = ((if twin { a - 1 } else { a }) % 3) as u32;
        for t in 0..spec.traces_per_avatar {
            let trace_id = format!("a{a:03}-t{t:03}");
            let duration_s = millis(spec.tau + rng.random_range(30.0..900.0));
            let mut trace: Vec<TraceEvent> = Vec::new();
            let push = |trace: &mut Vec<TraceEvent>, timestamp: f64, action: Action| {
                trace.push(TraceEvent {
                    trace_id: trace_id.clone(),
                    timestamp,
                    action,
                });
            };
            for (f, &mean) in profiles[a].iter().enumerate() {
                let count = (mean + noise.sample(&mut rng)).round().max(0.0) as usize;
                for _ in 0..count {
                    let ts = millis(rng.random_range(0.0..=spec.tau));
                    push(&mut trace, ts, hotkey_action(f));
                }
            }
            let others = (other_means[a] + 2.0 * noise.sample(&mut rng))
                .round()
                .max(0.0) as usize;
            for _ in 0..others {
                let ts = millis(rng.random_range(0.0..=spec.tau));
                push(&mut trace, ts, Action::Other);
            }
            let late = (spec.late_events * rng.random::<f64>() * 2.0).round() as usize;
            for _ in 0..late {
                let ts = millis(rng.random_range(spec.tau + 0.001..=duration_s));
                push(
                    &mut trace,
                    ts,
                    hotkey_action(rng.random_range(0..HOTKEY_FEATURES)),
                );
            }
            trace.sort_by(|x, y| x.timestamp.total_cmp(&y.timestamp));
            events.extend(trace);
            let outcome = if rng.random::<bool>() {
                Outcome::Winner
            } else {
                Outcome::Loser
            };
            meta.push(TraceMeta {
                trace_id,
                avatar: identity.clone(),
                faction,
                outcome,
                duration_s,
            });
        }
    }
    Ok(SyntheticData {
        events,
        meta,
        profiles,
        identities,
    })
}
