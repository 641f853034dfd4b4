use std::collections::HashMap;

use super::{DatasetError, FeatureVector, Result, TraceEvent, TraceMeta};
use super::{APM_INDEX, FACTION_INDEX, FEATURE_COUNT, OUTCOME_INDEX};

/// Builds one feature vector per metadata row, counting only events at or
/// before `tau` seconds. Output follows the order of `meta`.
pub fn extract_features(
    events: &[TraceEvent],
    tau: f64,
    meta: &[TraceMeta],
) -> Result<Vec<FeatureVector>> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(DatasetError::InvalidParameter(format!(
            "tau must be > 0, got {tau}"
        )));
    }

    let mut index: HashMap<&str, usize> = HashMap::with_capacity(meta.len());
    let mut identities: HashMap<&str, &super::AvatarIdentity> = HashMap::new();
    for (i, m) in meta.iter().enumerate() {
        if index.insert(m.trace_id.as_str(), i).is_some() {
            return Err(DatasetError::DuplicateTrace(m.trace_id.clone()));
        }
        if !(m.duration_s.is_finite() && m.duration_s >= 0.0) {
            return Err(DatasetError::InvalidParameter(format!(
                "trace `{}` has invalid duration {}",
                m.trace_id, m.duration_s
            )));
        }
        match identities.get(m.avatar.label.as_str()) {
            Some(prev) if **prev != m.avatar => {
                return Err(DatasetError::ConflictingIdentity(m.avatar.label.clone()))
            }
            Some(_) => {}
            None => {
                identities.insert(m.avatar.label.as_str(), &m.avatar);
            }
        }
    }

    let mut hotkeys = vec![[0u32; super::HOTKEY_FEATURES]; meta.len()];
    let mut actions = vec![0u64; meta.len()];
    for ev in events {
        let Some(&slot) = index.get(ev.trace_id.as_str()) else {
            return Err(DatasetError::UnknownTrace(ev.trace_id.clone()));
        };
        if !(ev.timestamp.is_finite() && ev.timestamp >= 0.0) {
            return Err(DatasetError::InvalidTimestamp {
                trace_id: ev.trace_id.clone(),
                timestamp: ev.timestamp,
            });
        }
        if ev.timestamp > tau {
            continue;
        }
        actions[slot] += 1;
        if let Some(f) = ev.action.feature_index() {
            hotkeys[slot][f] += 1;
        }
    }

    Ok(meta
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut features = [0.0; FEATURE_COUNT];
            for (dst, &count) in features.iter_mut().zip(hotkeys[i].iter()) {
                *dst = f64::from(count);
            }
            features[FACTION_INDEX] = f64::from(m.faction);
            features[OUTCOME_INDEX] = m.outcome.as_feature();
            let window = tau.min(m.duration_s);
            features[APM_INDEX] = if window > 0.0 {
                60.0 * actions[i] as f64 / window
            } else {
                0.0
            };
            FeatureVector {
                trace_id: m.trace_id.clone(),
                avatar: m.avatar.clone(),
                features,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Action, AvatarIdentity, HotkeyAction, Outcome, APM_INDEX};

    fn meta(id: &str, label: &str, duration: f64) -> TraceMeta {
        TraceMeta {
            trace_id: id.into(),
            avatar: AvatarIdentity::new(label),
            faction: 1,
            outcome: Outcome::Winner,
            duration_s: duration,
        }
    }

    fn hk(id: &str, t: f64, action: HotkeyAction, key: u8) -> TraceEvent {
        TraceEvent {
            trace_id: id.into(),
            timestamp: t,
            action: Action::hotkey(action, key).unwrap(),
        }
    }

    fn other(id: &str, t: f64) -> TraceEvent {
        TraceEvent {
            trace_id: id.into(),
            timestamp: t,
            action: Action::Other,
        }
    }

    fn idx(action: HotkeyAction, key: u8) -> usize {
        Action::hotkey(action, key)
            .unwrap()
            .feature_index()
            .unwrap()
    }

    #[test]
    fn empty_trace_has_zero_counts_and_apm() {
        let out = extract_features(&[], 30.0, &[meta("t1", "a", 600.0)]).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].features[..30].iter().all(|&c| c == 0.0));
        assert_eq!(out[0].features[APM_INDEX], 0.0);
        assert_eq!(out[0].features[FACTION_INDEX], 1.0);
        assert_eq!(out[0].features[OUTCOME_INDEX], 1.0);
    }

    #[test]
    fn events_after_tau_are_excluded() {
        let events = vec![
            hk("t1", 5.0, HotkeyAction::Assign, 1),
            hk("t1", 12.0, HotkeyAction::Select, 1),
            hk("t1", 40.0, HotkeyAction::Select, 1),
        ];
        let out = extract_features(&events, 30.0, &[meta("t1", "a", 600.0)]).unwrap();
        let f = &out[0].features;
        assert_eq!(f[idx(HotkeyAction::Assign, 1)], 1.0);
        assert_eq!(f[idx(HotkeyAction::Select, 1)], 1.0);
        assert_eq!(f[..30].iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn tau_boundary_is_inclusive() {
        let events = vec![hk("t1", 30.0, HotkeyAction::Remove, 0)];
        let out = extract_features(&events, 30.0, &[meta("t1", "a", 600.0)]).unwrap();
        assert_eq!(out[0].features[idx(HotkeyAction::Remove, 0)], 1.0);
    }

    #[test]
    fn apm_over_truncated_window() {
        // 90 actions in the first 30 s of a 600 s game: 60 * 90 / 30.
        let events: Vec<_> = (0..90).map(|i| other("t1", i as f64 / 3.0)).collect();
        let out = extract_features(&events, 30.0, &[meta("t1", "a", 600.0)]).unwrap();
        assert_eq!(out[0].features[APM_INDEX], 180.0);
    }

    #[test]
    fn apm_window_shrinks_to_short_games() {
        let events: Vec<_> = (0..10).map(|i| other("t1", i as f64)).collect();
        let out = extract_features(&events, 90.0, &[meta("t1", "a", 20.0)]).unwrap();
        assert_eq!(out[0].features[APM_INDEX], 30.0);
    }

    #[test]
    fn unknown_trace_is_rejected_by_id() {
        let err =
            extract_features(&[other("ghost", 1.0)], 30.0, &[meta("t1", "a", 60.0)]).unwrap_err();
        assert!(matches!(err, DatasetError::UnknownTrace(id) if id == "ghost"));
    }

    #[test]
    fn negative_timestamp_is_rejected() {
        let err =
            extract_features(&[other("t1", -0.5)], 30.0, &[meta("t1", "a", 60.0)]).unwrap_err();
        assert!(matches!(err, DatasetError::InvalidTimestamp { .. }));
    }

    #[test]
    fn conflicting_identity_is_rejected() {
        let mut m2 = meta("t2", "a", 60.0);
        m2.avatar.account_id = Some("42".into());
        let err = extract_features(&[], 30.0, &[meta("t1", "a", 60.0), m2]).unwrap_err();
        assert!(matches!(err, DatasetError::ConflictingIdentity(_)));
    }

    #[test]
    fn event_order_does_not_matter() {
        let mut events = vec![
            hk("t1", 1.0, HotkeyAction::Assign, 3),
            other("t1", 2.0),
            hk("t1", 3.0, HotkeyAction::Select, 3),
            hk("t1", 50.0, HotkeyAction::Select, 3),
            hk("t1", 4.0, HotkeyAction::Select, 9),
        ];
        let metas = [meta("t1", "a", 100.0)];
        let forward = extract_features(&events, 30.0, &metas).unwrap();
        events.reverse();
        let backward = extract_features(&events, 30.0, &metas).unwrap();
        assert_eq!(forward, backward);
    }
}
