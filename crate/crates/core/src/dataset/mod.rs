//! Game traces, their hotkey feature vectors, and the dataset transforms
//! applied before classification: horizon truncation, minimum-trace
//! filtering and surrogate injection.

mod extract;
mod filter;
pub mod io;
mod surrogate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::extract_features;
pub use filter::{filter_min_traces, trace_counts};
pub use surrogate::{
    inject_surrogates, SkippedAvatar, SurrogateManifest, SurrogateOutcome, SurrogatePair,
};

/// Number of hotkey slots (keys 0 through 9).
pub const HOTKEY_KEYS: usize = 10;
/// Number of hotkey features: every key crossed with assign, remove, select.
pub const HOTKEY_FEATURES: usize = HOTKEY_KEYS * 3;
pub const FACTION_INDEX: usize = HOTKEY_FEATURES;
pub const OUTCOME_INDEX: usize = HOTKEY_FEATURES + 1;
pub const APM_INDEX: usize = HOTKEY_FEATURES + 2;
pub const FEATURE_COUNT: usize = HOTKEY_FEATURES + 3;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("event references unknown trace `{0}` (no metadata row)")]
    UnknownTrace(String),
    #[error("duplicate metadata for trace `{0}`")]
    DuplicateTrace(String),
    #[error("trace `{trace_id}` has invalid timestamp {timestamp}")]
    InvalidTimestamp { trace_id: String, timestamp: f64 },
    #[error("avatar `{0}` appears with conflicting identity fields")]
    ConflictingIdentity(String),
    #[error("no avatar has at least {theta} traces; the minimum-trace filter removed everything")]
    EmptyAfterFilter { theta: usize },
    #[error("surrogate label `{0}` collides with an existing avatar label")]
    LabelCollision(String),
    #[error("unknown faction `{0}`")]
    UnknownFaction(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// A virtual identity. `label` is the class label handed to classifiers;
/// the remaining fields are only consulted as ground-truth indicators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AvatarIdentity {
    pub label: String,
    pub account_id: Option<String>,
    pub server: Option<String>,
    pub name: Option<String>,
}

impl AvatarIdentity {
    pub fn new(label: impl Into<String>) -> Self {
        AvatarIdentity {
            label: label.into(),
            account_id: None,
            server: None,
            name: None,
        }
    }

    pub fn with_account(mut self, account_id: impl Into<String>) -> Self {
        self.account_id = Some(account_id.into());
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_server(mut self, server: impl Into<String>) -> Self {
        self.server = Some(server.into());
        self
    }

    /// Copy of this identity under a different class label.
    pub fn relabeled(&self, label: impl Into<String>) -> Self {
        AvatarIdentity {
            label: label.into(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HotkeyAction {
    Assign,
    Remove,
    Select,
}

impl HotkeyAction {
    pub const ALL: [HotkeyAction; 3] = [
        HotkeyAction::Assign,
        HotkeyAction::Remove,
        HotkeyAction::Select,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HotkeyAction::Assign => "assign",
            HotkeyAction::Remove => "remove",
            HotkeyAction::Select => "select",
        }
    }

    fn offset(self) -> usize {
        match self {
            HotkeyAction::Assign => 0,
            HotkeyAction::Remove => 1,
            HotkeyAction::Select => 2,
        }
    }
}

/// What happened at an event. Hotkey actions always carry their key, other
/// actions never do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Hotkey { action: HotkeyAction, key: u8 },
    Other,
}

impl Action {
    pub fn hotkey(action: HotkeyAction, key: u8) -> Result<Action> {
        if usize::from(key) >= HOTKEY_KEYS {
            return Err(DatasetError::InvalidParameter(format!(
                "hotkey {key} outside 0..=9"
            )));
        }
        Ok(Action::Hotkey { action, key })
    }

    /// Position of this action's counter in a feature vector.
    pub fn feature_index(self) -> Option<usize> {
        match self {
            Action::Hotkey { action, key } => Some(usize::from(key) * 3 + action.offset()),
            Action::Other => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub trace_id: String,
    /// Seconds from game start.
    pub timestamp: f64,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Loser,
    Winner,
}

impl Outcome {
    pub fn as_feature(self) -> f64 {
        match self {
            Outcome::Winner => 1.0,
            Outcome::Loser => 0.0,
        }
    }
}

/// Per-trace metadata that does not come from the event stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub trace_id: String,
    pub avatar: AvatarIdentity,
    /// Encoded through a [`FactionDictionary`].
    pub faction: u32,
    pub outcome: Outcome,
    pub duration_s: f64,
}

/// Declared mapping from faction names to the integer feature value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactionDictionary {
    names: Vec<String>,
}

impl Default for FactionDictionary {
    fn default() -> Self {
        FactionDictionary::new(["protoss", "terran", "zerg", "random"])
    }
}

impl FactionDictionary {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        FactionDictionary {
            names: names.into_iter().map(|s| s.into().to_lowercase()).collect(),
        }
    }

    /// Accepts either a declared name (case-insensitive) or a literal code.
    pub fn encode(&self, raw: &str) -> Result<u32> {
        let raw = raw.trim();
        if let Ok(code) = raw.parse::<u32>() {
            return Ok(code);
        }
        let lower = raw.to_lowercase();
        self.names
            .iter()
            .position(|n| *n == lower)
            .map(|i| i as u32)
            .ok_or_else(|| DatasetError::UnknownFaction(raw.to_string()))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Fixed, dataset-wide order of feature columns.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for key in 0..HOTKEY_KEYS {
        for action in HotkeyAction::ALL {
            names.push(format!("hotkey_{key}_{}", action.as_str()));
        }
    }
    names.push("faction".into());
    names.push("outcome".into());
    names.push("apm".into());
    names
}

/// One trace reduced to its feature vector, tagged with the avatar that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub trace_id: String,
    pub avatar: AvatarIdentity,
    pub features: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn label(&self) -> &str {
        &self.avatar.label
    }
}

/// Truncation horizon and minimum trace count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub tau: f64,
    pub theta: usize,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(DatasetError::InvalidParameter(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if self.theta < 1 {
            return Err(DatasetError::InvalidParameter("theta must be >= 1".into()));
        }
        Ok(())
    }
}

/// How surrogate avatars are carved out of real ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateSpec {
    /// Fraction of the most active avatars that get split.
    pub gamma: f64,
    /// Share of an avatar's traces assigned to the first surrogate.
    pub beta: f64,
    pub seed: u64,
}

impl SurrogateSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(DatasetError::InvalidParameter(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.beta >= 0.5 && self.beta < 1.0) {
            return Err(DatasetError::InvalidParameter(format!(
                "beta must lie in [0.5, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

impl fmt::Display for HotkeyAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_names_are_fixed_and_complete() {
        let names = feature_names();
        assert_eq!(names.len(), FEATURE_COUNT);
        assert_eq!(names[0], "hotkey_0_assign");
        assert_eq!(names[4], "hotkey_1_remove");
        assert_eq!(names[29], "hotkey_9_select");
        assert_eq!(names[FACTION_INDEX], "faction");
        assert_eq!(names[OUTCOME_INDEX], "outcome");
        assert_eq!(names[APM_INDEX], "apm");
    }

    #[test]
    fn hotkey_index_matches_name() {
        let names = feature_names();
        let idx = Action::hotkey(HotkeyAction::Select, 7)
            .unwrap()
            .feature_index()
            .unwrap();
        assert_eq!(names[idx], "hotkey_7_select");
        assert!(Action::hotkey(HotkeyAction::Assign, 10).is_err());
        assert_eq!(Action::Other.feature_index(), None);
    }

    #[test]
    fn faction_dictionary_encodes_names_and_codes() {
        let dict = FactionDictionary::default();
        assert_eq!(dict.encode("Zerg").unwrap(), 2);
        assert_eq!(dict.encode("3").unwrap(), 3);
        assert!(matches!(
            dict.encode("kerrigan"),
            Err(DatasetError::UnknownFaction(_))
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(DatasetSpec { tau: 0.0, theta: 1 }.validate().is_err());
        assert!(DatasetSpec {
            tau: 90.0,
            theta: 0
        }
        .validate()
        .is_err());
        assert!(DatasetSpec {
            tau: 90.0,
            theta: 20
        }
        .validate()
        .is_ok());
        let ok = SurrogateSpec {
            gamma: 0.2,
            beta: 0.5,
            seed: 1,
        };
        assert!(ok.validate().is_ok());
        assert!(SurrogateSpec { beta: 0.3, ..ok }.validate().is_err());
        assert!(SurrogateSpec { beta: 1.0, ..ok }.validate().is_err());
        assert!(SurrogateSpec { gamma: 0.0, ..ok }.validate().is_err());
        assert!(SurrogateSpec { gamma: 1.0, ..ok }.validate().is_ok());
    }
}
