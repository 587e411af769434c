//! File-backed persistence.
//!
//! Layout under the store root:
//!
//! ```text
//! assessments/<id>/events.jsonl   append-only event log, one record per line
//! assessments/<id>/snapshot.json  derived summary plus final results, if any
//! ```
//!
//! The event log is the source of truth; the snapshot records the SHA-256 of
//! the log it was derived from.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::report::AssessmentResults;
use crate::scoring::{ProcessProfile, ResponseSheet};
use crate::session::{AssessmentSession, Phase, SessionId};

const ASSESSMENTS: &str = "assessments";
const EVENTS: &str = "events.jsonl";
const SNAPSHOT: &str = "snapshot.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("assessment {0} not found")]
    NotFound(String),
    #[error("invalid assessment id {0:?}")]
    InvalidId(String),
    #[error("corrupt event log for {id} after seq {seq}: {reason}")]
    CorruptLog {
        id: String,
        seq: u64,
        reason: String,
    },
    #[error("corrupt snapshot for {id}: {reason}")]
    CorruptSnapshot { id: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: SessionId,
    pub organization_name: String,
    pub model_version: String,
    pub phase: Phase,
    pub created_at: DateTime<Utc>,
    pub closed_at: Option<DateTime<Utc>>,
    pub event_count: usize,
    pub events_sha256: String,
    pub sheet: Option<ResponseSheet>,
    pub profile: Option<ProcessProfile>,
    pub results: Option<AssessmentResults>,
}

/// Listing entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentSummary {
    pub id: SessionId,
    pub organization_name: String,
    pub phase: Phase,
    pub created_at: DateTime<Utc>,
    pub overall: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct AssessmentFilter {
    /// Case-insensitive substring of the organization name.
    pub organization: Option<String>,
    pub phase: Option<Phase>,
    pub created_after: Option<DateTime<Utc>>,
    pub created_before: Option<DateTime<Utc>>,
}

impl AssessmentFilter {
    fn matches(&self, s: &Snapshot) -> bool {
        if let Some(org) = &self.organization {
            if !s
                .organization_name
                .to_lowercase()
                .contains(&org.to_lowercase())
            {
                return false;
            }
        }
        self.phase.is_none_or(|p| p == s.phase)
            && self.created_after.is_none_or(|t| s.created_at >= t)
            && self.created_before.is_none_or(|t| s.created_at < t)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

fn check_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

/// Writes via a sibling temp file and rename; skips the write if the content is unchanged.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if fs::read(path).ok().as_deref() == Some(bytes) {
        return Ok(());
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join(ASSESSMENTS))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        check_id(id)?;
        Ok(self.root.join(ASSESSMENTS).join(id))
    }

    /// Persists the log and a snapshot. A finalized session keeps its sheet and profile;
    /// previously saved results survive as long as the log is unchanged.
    pub fn save_session(&self, session: &AssessmentSession) -> Result<Snapshot, StoreError> {
        let previous = self.load_snapshot(&session.id.0).ok();
        let log = session.to_jsonl();
        let hash = sha256_hex(log.as_bytes());
        let results = previous
            .filter(|p| p.events_sha256 == hash)
            .and_then(|p| p.results);
        self.write(session, log, hash, results)
    }

    /// Persists a finalized session together with its results.
    pub fn save_assessment(
        &self,
        session: &AssessmentSession,
        results: &AssessmentResults,
    ) -> Result<Snapshot, StoreError> {
        let log = session.to_jsonl();
        let hash = sha256_hex(log.as_bytes());
        self.write(session, log, hash, Some(results.clone()))
    }

    fn write(
        &self,
        session: &AssessmentSession,
        log: String,
        hash: String,
        results: Option<AssessmentResults>,
    ) -> Result<Snapshot, StoreError> {
        let dir = self.dir(&session.id.0)?;
        fs::create_dir_all(&dir)?;
        let finalized = session.phase >= Phase::Reporting;
        let sheet = if finalized {
            session.response_sheet().ok()
        } else {
            None
        };
        let snapshot = Snapshot {
            id: session.id.clone(),
            organization_name: session.plan.organization_name.clone(),
            model_version: session.plan.model_version.clone(),
            phase: session.phase,
            created_at: session.created_at,
            closed_at: session.closed_at,
            event_count: session.log.len(),
            events_sha256: hash,
            profile: results.as_ref().map(|r| r.profile.clone()),
            sheet,
            results,
        };
        write_atomic(&dir.join(EVENTS), log.as_bytes())?;
        let json = serde_json::to_vec_pretty(&snapshot).expect("snapshot serializes");
        write_atomic(&dir.join(SNAPSHOT), &json)?;
        Ok(snapshot)
    }

    pub fn exists(&self, id: &str) -> bool {
        self.dir(id)
            .map(|d| d.join(EVENTS).is_file())
            .unwrap_or(false)
    }

    /// Replays the stored event log.
    pub fn load_session(&self, id: &str) -> Result<AssessmentSession, StoreError> {
        let path = self.dir(id)?.join(EVENTS);
        let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::NotFound(id.to_string()),
            _ => StoreError::Io(e),
        })?;
        AssessmentSession::from_jsonl(&text).map_err(|e| StoreError::CorruptLog {
            id: id.to_string(),
            seq: e.seq,
            reason: e.reason,
        })
    }

    pub fn load_snapshot(&self, id: &str) -> Result<Snapshot, StoreError> {
        let path = self.dir(id)?.join(SNAPSHOT);
        let bytes = fs::read(&path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::NotFound(id.to_string()),
            _ => StoreError::Io(e),
        })?;
        serde_json::from_slice(&bytes).map_err(|e| StoreError::CorruptSnapshot {
            id: id.to_string(),
            reason: e.to_string(),
        })
    }

    /// Loads a session and its snapshot, checking that the snapshot describes this log.
    pub fn load_assessment(&self, id: &str) -> Result<(AssessmentSession, Snapshot), StoreError> {
        let session = self.load_session(id)?;
        let snapshot = self.load_snapshot(id)?;
        let hash = sha256_hex(session.to_jsonl().as_bytes());
        if hash != snapshot.events_sha256 {
            return Err(StoreError::CorruptSnapshot {
                id: id.to_string(),
                reason: "snapshot was derived from a different event log".into(),
            });
        }
        Ok((session, snapshot))
    }

    /// Summaries of stored assessments matching `filter`, oldest first.
    pub fn list_assessments(
        &self,
        filter: &AssessmentFilter,
    ) -> Result<Vec<AssessmentSummary>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join(ASSESSMENTS))? {
            let entry = entry?;
            let Some(name) = entry.file_name().to_str().map(str::to_string) else {
                continue;
            };
            if check_id(&name).is_err() || !entry.path().join(SNAPSHOT).is_file() {
                continue;
            }
            let snap = self.load_snapshot(&name)?;
            if filter.matches(&snap) {
                out.push(AssessmentSummary {
                    overall: snap.profile.as_ref().map(|p| p.overall.display_2dp()),
                    id: snap.id,
                    organization_name: snap.organization_name,
                    phase: snap.phase,
                    created_at: snap.created_at,
                });
            }
        }
        out.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.id.cmp(&b.id))
        });
        Ok(out)
    }
}
