use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::sync::{Arc, Mutex, MutexGuard};

use tokio::sync::broadcast;
use upcase_core::report::{generate_results, AssessmentResults, SessionMetadata};
use upcase_core::session::{AssessmentSession, EventRecord, ParticipantId, Phase};
use upcase_core::store::{sha256_hex, AssessmentFilter, FileStore, StoreError};
use upcase_core::ReferenceModel;

use crate::error::ApiError;

const TOKENS_FILE: &str = "tokens.json";

pub(crate) struct Entry {
    pub session: AssessmentSession,
    pub token_hash: String,
    pub results: Option<AssessmentResults>,
    pub tx: broadcast::Sender<EventRecord>,
}

impl Entry {
    fn new(
        session: AssessmentSession,
        token_hash: String,
        results: Option<AssessmentResults>,
    ) -> Self {
        let (tx, _) = broadcast::channel(256);
        Self {
            session,
            token_hash,
            results,
            tx,
        }
    }

    /// Checks the join token and that the caller is on the roster.
    pub fn authorize(&self, token: &str, participant: &ParticipantId) -> Result<(), ApiError> {
        if sha256_hex(token.as_bytes()) != self.token_hash {
            return Err(ApiError::forbidden("invalid session token"));
        }
        if self.session.participant(participant).is_none() {
            return Err(ApiError::forbidden(format!(
                "{participant} is not a participant"
            )));
        }
        Ok(())
    }

    pub fn check_token(&self, token: &str) -> Result<(), ApiError> {
        if sha256_hex(token.as_bytes()) != self.token_hash {
            return Err(ApiError::forbidden("invalid session token"));
        }
        Ok(())
    }
}

pub(crate) struct Shared {
    pub model: ReferenceModel,
    pub store: FileStore,
    pub sessions: Mutex<HashMap<String, Entry>>,
}

/// Application state shared by all handlers.
#[derive(Clone)]
pub struct AppState {
    pub(crate) inner: Arc<Shared>,
}

impl AppState {
    /// Opens the store and reloads every persisted session that has a known token.
    pub fn new(model: ReferenceModel, store: FileStore) -> Result<Self, StoreError> {
        let tokens = read_tokens(&store);
        let mut sessions = HashMap::new();
        for summary in store.list_assessments(&AssessmentFilter::default())? {
            let id = summary.id.0;
            let Some(hash) = tokens.get(&id) else {
                tracing::warn!(%id, "skipping stored session without a token");
                continue;
            };
            let session = store.load_session(&id)?;
            let results = store.load_snapshot(&id)?.results;
            sessions.insert(id, Entry::new(session, hash.clone(), results));
        }
        Ok(Self {
            inner: Arc::new(Shared {
                model,
                store,
                sessions: Mutex::new(sessions),
            }),
        })
    }

    pub fn model(&self) -> &ReferenceModel {
        &self.inner.model
    }

    pub(crate) fn sessions(&self) -> MutexGuard<'_, HashMap<String, Entry>> {
        self.inner
            .sessions
            .lock()
            .unwrap_or_else(|p| p.into_inner())
    }

    pub(crate) fn insert(&self, session: AssessmentSession, token: &str) -> Result<(), ApiError> {
        let id = session.id.0.clone();
        let hash = sha256_hex(token.as_bytes());
        self.inner.store.save_session(&session)?;
        let mut sessions = self.sessions();
        sessions.insert(id, Entry::new(session, hash, None));
        let tokens: BTreeMap<&str, &str> = sessions
            .iter()
            .map(|(k, e)| (k.as_str(), e.token_hash.as_str()))
            .collect();
        let path = self.inner.store.root().join(TOKENS_FILE);
        fs::write(
            path,
            serde_json::to_vec_pretty(&tokens).expect("tokens serialize"),
        )
        .map_err(StoreError::from)?;
        Ok(())
    }

    /// Persists an entry after a command and publishes the new events.
    pub(crate) fn commit(&self, entry: &mut Entry, events: &[EventRecord]) -> Result<(), ApiError> {
        if events.is_empty() {
            return Ok(());
        }
        if entry.session.phase >= Phase::Reporting && entry.results.is_none() {
            entry.results = Some(self.results_for(&entry.session)?);
        }
        match &entry.results {
            Some(r) => self.inner.store.save_assessment(&entry.session, r)?,
            None => self.inner.store.save_session(&entry.session)?,
        };
        for e in events {
            let _ = entry.tx.send(e.clone());
        }
        Ok(())
    }

    fn results_for(&self, session: &AssessmentSession) -> Result<AssessmentResults, ApiError> {
        let sheet = session.response_sheet()?;
        let profile = upcase_core::build_profile(&sheet, &self.inner.model)
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        let meta = SessionMetadata {
            organization_name: session.plan.organization_name.clone(),
            assessment_date: session.created_at.date_naive().to_string(),
            participants: session
                .participants
                .iter()
                .filter(|p| session.present.contains(&p.id))
                .map(|p| p.display_name.clone())
                .collect(),
            evidence: session.evidence_index(),
        };
        Ok(generate_results(
            &sheet,
            &profile,
            &self.inner.model,
            &meta,
        )?)
    }
}

fn read_tokens(store: &FileStore) -> BTreeMap<String, String> {
    fs::read(store.root().join(TOKENS_FILE))
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok())
        .unwrap_or_default()
}
