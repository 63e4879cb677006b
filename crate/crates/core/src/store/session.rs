//! Append-only session log: one JSON file per session in a store directory,
//! named by insertion sequence so listing order is insertion order.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use super::StoreError;
use crate::dsp::VitalEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    /// Unique id within the store.
    pub id: String,
    /// Free-form scenario description.
    pub scenario: String,
    /// Path of the trace file this session recorded.
    pub trace_path: String,
    /// Estimates logged during the session.
    pub estimates: Vec<VitalEstimate>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Existing (sequence, id, filename) triples in sequence order.
fn scan(store: &Path) -> Result<Vec<(u64, String, String)>, StoreError> {
    let mut entries = Vec::new();
    if !store.exists() {
        return Ok(entries);
    }
    for entry in fs::read_dir(store)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(stem) = name.strip_suffix(".json") else {
            continue;
        };
        let Some((seq, id)) = stem.split_once('_') else {
            continue;
        };
        let Ok(seq) = seq.parse::<u64>() else {
            continue;
        };
        entries.push((seq, id.to_string(), name));
    }
    entries.sort_by_key(|(seq, _, _)| *seq);
    Ok(entries)
}

/// Durably appends a record; duplicate ids are rejected.
pub fn append_session(store: &Path, record: &SessionRecord) -> Result<(), StoreError> {
    if !valid_id(&record.id) {
        return Err(StoreError::InvalidSessionId(record.id.clone()));
    }
    fs::create_dir_all(store)?;
    let existing = scan(store)?;
    if existing.iter().any(|(_, id, _)| *id == record.id) {
        return Err(StoreError::DuplicateSessionId(record.id.clone()));
    }
    let next_seq = existing.last().map(|(seq, _, _)| seq + 1).unwrap_or(0);
    let path = store.join(format!("{next_seq:06}_{}.json", record.id));
    let json = serde_json::to_string_pretty(record).expect("session record serializes");
    fs::write(path, json)?;
    Ok(())
}

/// All records in insertion order.
pub fn list_sessions(store: &Path) -> Result<Vec<SessionRecord>, StoreError> {
    let mut records = Vec::new();
    for (_, _, name) in scan(store)? {
        let path = store.join(&name);
        let text = fs::read_to_string(&path)?;
        let record = serde_json::from_str(&text).map_err(|source| StoreError::SessionCorrupt {
            path: path.display().to_string(),
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}
