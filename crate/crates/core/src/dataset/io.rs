//! CSV readers and writers for event logs, trace metadata and feature
//! tables.
//!
//! Events: `trace_id,timestamp,action_type,key` (`key` empty unless the
//! action is assign/remove/select).
//! Metadata: `trace_id,avatar_label,account_id,server,name,faction,outcome,duration_s`.
//! Features: `trace_id,avatar_label,` followed by [`feature_names`].

use std::io::{Read, Write};

use serde::Deserialize;

use super::{
    feature_names, Action, AvatarIdentity, DatasetError, FactionDictionary, FeatureVector,
    HotkeyAction, Outcome, Result, TraceEvent, TraceMeta, FEATURE_COUNT,
};

pub const EVENT_HEADER: [&str; 4] = ["trace_id", "timestamp", "action_type", "key"];
pub const META_HEADER: [&str; 8] = [
    "trace_id",
    "avatar_label",
    "account_id",
    "server",
    "name",
    "faction",
    "outcome",
    "duration_s",
];

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[String]) -> Result<()> {
    let found: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if found != expected {
        return Err(DatasetError::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.join(",")
            ),
        });
    }
    Ok(())
}

fn parse_err(record: &csv::StringRecord, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        line: record.position().map_or(0, |p| p.line()),
        message: message.into(),
    }
}

fn opt(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty()).then(|| s.to_string())
}

#[derive(Deserialize)]
struct EventRow {
    trace_id: String,
    timestamp: f64,
    action_type: String,
    key: Option<u8>,
}

/// Reads an event log and sorts it by trace, then timestamp (stable).
pub fn read_events<R: Read>(reader: R) -> Result<Vec<TraceEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(&mut rdr, &EVENT_HEADER.map(String::from))?;
    let headers = rdr.headers()?.clone();
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row: EventRow = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(&record, e.to_string()))?;
        let hotkey = match row.action_type.to_lowercase().as_str() {
            "assign" => Some(HotkeyAction::Assign),
            "remove" => Some(HotkeyAction::Remove),
            "select" => Some(HotkeyAction::Select),
            "other" => None,
            other => return Err(parse_err(&record, format!("unknown action_type `{other}`"))),
        };
        let action = match (hotkey, row.key) {
            (Some(a), Some(k)) => {
                Action::hotkey(a, k).map_err(|e| parse_err(&record, e.to_string()))?
            }
            (None, None) => Action::Other,
            (Some(_), None) => return Err(parse_err(&record, "hotkey action without a key")),
            (None, Some(_)) => return Err(parse_err(&record, "key given for a non-hotkey action")),
        };
        if !(row.timestamp.is_finite() && row.timestamp >= 0.0) {
            return Err(DatasetError::InvalidTimestamp {
                trace_id: row.trace_id,
                timestamp: row.timestamp,
            });
        }
        events.push(TraceEvent {
            trace_id: row.trace_id,
            timestamp: row.timestamp,
            action,
        });
    }
    events.sort_by(|a, b| {
        a.trace_id
            .cmp(&b.trace_id)
            .then_with(|| a.timestamp.total_cmp(&b.timestamp))
    });
    Ok(events)
}

pub fn write_events<W: Write>(writer: W, events: &[TraceEvent]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(EVENT_HEADER)?;
    for ev in events {
        let (kind, key) = match ev.action {
            Action::Hotkey { action, key } => (action.as_str(), key.to_string()),
            Action::Other => ("other", String::new()),
        };
        wtr.write_record([ev.trace_id.as_str(), &ev.timestamp.to_string(), kind, &key])?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_outcome(raw: &str) -> Option<Outcome> {
    match raw.trim().to_lowercase().as_str() {
        "winner" | "win" | "1" => Some(Outcome::Winner),
        "loser" | "loss" | "0" => Some(Outcome::Loser),
        _ => None,
    }
}

pub fn read_meta<R: Read>(reader: R, factions: &FactionDictionary) -> Result<Vec<TraceMeta>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(&mut rdr, &META_HEADER.map(String::from))?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != META_HEADER.len() {
            return Err(parse_err(&record, "wrong number of fields"));
        }
        let label = record[1].trim();
        if label.is_empty() {
            return Err(parse_err(&record, "empty avatar_label"));
        }
        let faction = factions
            .encode(&record[5])
            .map_err(|e| parse_err(&record, e.to_string()))?;
        let outcome = parse_outcome(&record[6])
            .ok_or_else(|| parse_err(&record, format!("unknown outcome `{}`", &record[6])))?;
        let duration_s: f64 = record[7]
            .trim()
            .parse()
            .map_err(|_| parse_err(&record, format!("bad duration_s `{}`", &record[7])))?;
        out.push(TraceMeta {
            trace_id: record[0].trim().to_string(),
            avatar: AvatarIdentity {
                label: label.to_string(),
                account_id: opt(&record[2]),
                server: opt(&record[3]),
                name: opt(&record[4]),
            },
            faction,
            outcome,
            duration_s,
        });
    }
    Ok(out)
}

pub fn write_meta<W: Write>(writer: W, meta: &[TraceMeta]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(META_HEADER)?;
    for m in meta {
        let outcome = match m.outcome {
            Outcome::Winner => "winner",
            Outcome::Loser => "loser",
        };
        wtr.write_record([
            m.trace_id.as_str(),
            &m.avatar.label,
            m.avatar.account_id.as_deref().unwrap_or(""),
            m.avatar.server.as_deref().unwrap_or(""),
            m.avatar.name.as_deref().unwrap_or(""),
            &m.faction.to_string(),
            outcome,
            &m.duration_s.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn feature_header() -> Vec<String> {
    let mut header = vec!["trace_id".to_string(), "avatar_label".to_string()];
    header.extend(feature_names());
    header
}

/// Reads a feature table. Only the avatar label is known on this path; the
/// other identity fields stay empty.
pub fn read_features<R: Read>(reader: R) -> Result<Vec<FeatureVector>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(&mut rdr, &feature_header())?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != FEATURE_COUNT + 2 {
            return Err(parse_err(&record, "wrong number of fields"));
        }
        let mut features = [0.0; FEATURE_COUNT];
        for (i, slot) in features.iter_mut().enumerate() {
            let raw = &record[i + 2];
            *slot = raw.parse().map_err(|_| {
                parse_err(
                    &record,
                    format!("column {} is not a number: `{raw}`", i + 3),
                )
            })?;
        }
        out.push(FeatureVector {
            trace_id: record[0].to_string(),
            avatar: AvatarIdentity::new(&record[1]),
            features,
        });
    }
    Ok(out)
}

pub fn write_features<W: Write>(writer: W, dataset: &[FeatureVector]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(feature_header())?;
    for fv in dataset {
        let mut row = Vec::with_capacity(FEATURE_COUNT + 2);
        row.push(fv.trace_id.clone());
        row.push(fv.avatar.label.clone());
        row.extend(fv.features.iter().map(|x| x.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
