//! HTTP API for assessment meetings.
//!
//! A session is created with a plan and returns a join token. Every later
//! call on the session carries the token in `x-upcase-token` and the caller's
//! participant id in `x-upcase-participant`; responses are projected for the
//! caller's role, so unrevealed votes never leave the server.
//!
//! Errors are JSON `{"error", "message"}` with 400 for invalid input, 403 for
//! role or token violations, 404 for unknown ids and 409 for state conflicts.

mod config;
mod error;
mod state;

use std::convert::Infallible;

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio_stream::wrappers::BroadcastStream;
use upcase_core::report::{render_report, ReportFormat};
use upcase_core::session::{
    project_event, AssessmentPlan, AssessmentSession, Participant, ParticipantId, Phase, Role,
    RoundOutcome, SessionEvent, SessionId, SessionView, DEFAULT_ROUND_CAP,
};
use upcase_core::stats::{cronbach_alpha, icc, kappa_row, IccVariant, RatingVector, CATEGORIES};
use upcase_core::store::{AssessmentFilter, FileStore};
use upcase_core::{load_reference_model, Rating, ReferenceModel};

pub use config::{Config, ConfigError};
pub use error::{status_of, ApiError, ApiJson, ApiQuery};
pub use state::AppState;

pub const TOKEN_HEADER: &str = "x-upcase-token";
pub const PARTICIPANT_HEADER: &str = "x-upcase-participant";

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/model", get(get_model))
        .route("/api/assessments", get(list_assessments))
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/join", post(join))
        .route("/api/sessions/{id}/phase", post(phase))
        .route("/api/sessions/{id}/vote", post(vote))
        .route("/api/sessions/{id}/justify", post(justify))
        .route("/api/sessions/{id}/resolve", post(resolve))
        .route("/api/sessions/{id}/consensus", post(consensus))
        .route("/api/sessions/{id}/results", get(results))
        .route("/api/sessions/{id}/report", get(report))
        .route("/api/sessions/{id}/events", get(events))
        .route("/api/stats/kappa", post(stats_kappa))
        .route("/api/stats/icc", post(stats_icc))
        .route("/api/stats/alpha", post(stats_alpha))
        .with_state(state)
}

/// Builds the state from `config` and serves until the process is stopped.
pub async fn serve(config: Config) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let model = match &config.model_path {
        Some(p) => load_reference_model(std::fs::File::open(p)?)?,
        None => ReferenceModel::canonical(),
    };
    let store = FileStore::open(&config.data_dir)?;
    let state = AppState::new(model, store)?;
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|e| format!("cannot bind {}: {e}", config.bind))?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %config.data_dir.display(), "listening");
    axum::serve(listener, router(state)).await?;
    Ok(())
}

fn credentials(headers: &HeaderMap) -> ApiResult<(String, ParticipantId)> {
    let get = |name: &str| {
        headers
            .get(name)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string)
            .ok_or_else(|| ApiError::forbidden(format!("missing {name} header")))
    };
    Ok((get(TOKEN_HEADER)?, ParticipantId(get(PARTICIPANT_HEADER)?)))
}

/// Runs `f` on an authorized session entry, then persists and publishes its events.
fn with_session<T>(
    state: &AppState,
    id: &str,
    headers: &HeaderMap,
    f: impl FnOnce(
        &mut AssessmentSession,
        &ParticipantId,
    ) -> ApiResult<(T, Vec<upcase_core::session::EventRecord>)>,
) -> ApiResult<(T, SessionView)> {
    let (token, who) = credentials(headers)?;
    let mut sessions = state.sessions();
    let entry = sessions
        .get_mut(id)
        .ok_or_else(|| ApiError::not_found(format!("session {id} not found")))?;
    entry.authorize(&token, &who)?;
    let (out, events) = f(&mut entry.session, &who)?;
    state.commit(entry, &events)?;
    let view = SessionView::project(&entry.session, &who)?;
    Ok((out, view))
}

async fn get_model(State(state): State<AppState>) -> Json<ReferenceModel> {
    Json(state.model().clone())
}

async fn list_assessments(
    State(state): State<AppState>,
    ApiQuery(filter): ApiQuery<AssessmentFilter>,
) -> ApiResult<Response> {
    Ok(Json(state.inner.store.list_assessments(&filter)?).into_response())
}

#[derive(Debug, Deserialize)]
pub struct PlannedParticipant {
    pub id: Option<String>,
    pub display_name: String,
    pub role: Role,
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub organization_name: String,
    #[serde(default)]
    pub scope_note: String,
    #[serde(default)]
    pub schedule_note: String,
    pub participants: Vec<PlannedParticipant>,
    pub model_version: Option<String>,
    pub round_cap: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub join_token: String,
    pub participants: Vec<Participant>,
}

async fn create(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreateRequest>,
) -> ApiResult<Response> {
    if req.organization_name.trim().is_empty() {
        return Err(ApiError::bad_request("organization_name is empty"));
    }
    let participants = req
        .participants
        .into_iter()
        .enumerate()
        .map(|(i, p)| Participant {
            id: ParticipantId(p.id.unwrap_or_else(|| format!("p{}", i + 1))),
            display_name: p.display_name.trim().to_string(),
            role: p.role,
        })
        .collect();
    let plan = AssessmentPlan {
        organization_name: req.organization_name.trim().to_string(),
        scope_note: req.scope_note,
        schedule_note: req.schedule_note,
        participants,
        model_version: req
            .model_version
            .unwrap_or_else(|| state.model().version.clone()),
    };
    let session = AssessmentSession::create(
        SessionId::generate(),
        plan,
        state.model(),
        req.round_cap.unwrap_or(DEFAULT_ROUND_CAP),
    )?;
    let token = uuid::Uuid::new_v4().simple().to_string();
    let body = CreateResponse {
        session_id: session.id.0.clone(),
        join_token: token.clone(),
        participants: session.participants.clone(),
    };
    state.insert(session, &token)?;
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Debug, Deserialize)]
pub struct JoinRequest {
    pub token: String,
    pub display_name: String,
    pub role: Role,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JoinResponse {
    pub participant_id: ParticipantId,
    pub role: Role,
    pub view: SessionView,
}

async fn join(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<JoinRequest>,
) -> ApiResult<Json<JoinResponse>> {
    let mut sessions = state.sessions();
    let entry = sessions
        .get_mut(&id)
        .ok_or_else(|| ApiError::not_found(format!("session {id} not found")))?;
    entry.check_token(&req.token)?;
    let (pid, events) = entry.session.join(&req.display_name, req.role)?;
    state.commit(entry, &events)?;
    let view = SessionView::project(&entry.session, &pid)?;
    Ok(Json(JoinResponse {
        participant_id: pid,
        role: req.role,
        view,
    }))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<SessionView>> {
    let ((), view) = with_session(&state, &id, &headers, |_, _| Ok(((), Vec::new())))?;
    Ok(Json(view))
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PhaseAction {
    BeginCollection,
    Finalize,
    Close,
}

#[derive(Debug, Deserialize)]
struct PhaseRequest {
    action: PhaseAction,
}

fn require_moderator(
    session: &AssessmentSession,
    who: &ParticipantId,
    action: &'static str,
) -> ApiResult<()> {
    match session.participant(who) {
        Some(p) if p.role == Role::Moderator => Ok(()),
        Some(p) => Err(upcase_core::session::SessionError::RoleViolation {
            participant: who.clone(),
            role: p.role,
            action,
        }
        .into()),
        None => Err(ApiError::forbidden(format!("{who} is not a participant"))),
    }
}

async fn phase(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<PhaseRequest>,
) -> ApiResult<Json<SessionView>> {
    let model = state.model().clone();
    let ((), view) = with_session(&state, &id, &headers, |s, who| {
        require_moderator(s, who, "change the phase")?;
        let events = match req.action {
            PhaseAction::BeginCollection => s.begin_collection()?,
            PhaseAction::Finalize => s.finalize(&model)?.2,
            PhaseAction::Close => s.close()?,
        };
        Ok(((), events))
    })?;
    Ok(Json(view))
}

#[derive(Debug, Deserialize)]
struct VoteRequest {
    rating: Rating,
}

async fn vote(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<VoteRequest>,
) -> ApiResult<Json<SessionView>> {
    let ((), view) = with_session(&state, &id, &headers, |s, who| {
        Ok(((), s.cast_vote(who, req.rating)?))
    })?;
    Ok(Json(view))
}

#[derive(Debug, Deserialize)]
struct JustifyRequest {
    text: String,
}

async fn justify(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<JustifyRequest>,
) -> ApiResult<Json<SessionView>> {
    let ((), view) = with_session(&state, &id, &headers, |s, who| {
        Ok(((), s.submit_justification(who, &req.text)?))
    })?;
    Ok(Json(view))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResolveResponse {
    pub outcome: RoundOutcome,
    pub view: SessionView,
}

async fn resolve(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<ResolveResponse>> {
    let (outcome, view) = with_session(&state, &id, &headers, |s, who| Ok(s.resolve_round(who)?))?;
    Ok(Json(ResolveResponse { outcome, view }))
}

#[derive(Debug, Deserialize)]
struct ConsensusRequest {
    rating: Rating,
    #[serde(default)]
    evidence: Vec<String>,
}

async fn consensus(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<ConsensusRequest>,
) -> ApiResult<Json<SessionView>> {
    let ((), view) = with_session(&state, &id, &headers, |s, who| {
        Ok(((), s.record_consensus(who, req.rating, req.evidence)?))
    })?;
    Ok(Json(view))
}

fn finished_results(
    state: &AppState,
    id: &str,
    headers: &HeaderMap,
) -> ApiResult<upcase_core::report::AssessmentResults> {
    let (token, who) = credentials(headers)?;
    let sessions = state.sessions();
    let entry = sessions
        .get(id)
        .ok_or_else(|| ApiError::not_found(format!("session {id} not found")))?;
    entry.authorize(&token, &who)?;
    entry.results.clone().ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "not_finalized",
            format!(
                "session is {}; results exist once it is finalized",
                entry.session.phase
            ),
        )
    })
}

async fn results(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<upcase_core::report::AssessmentResults>> {
    Ok(Json(finished_results(&state, &id, &headers)?))
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

async fn report(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiQuery(q): ApiQuery<ReportQuery>,
) -> ApiResult<Response> {
    let format: ReportFormat = q.format.as_deref().unwrap_or("markdown").parse()?;
    let results = finished_results(&state, &id, &headers)?;
    Ok((
        [(header::CONTENT_TYPE, format.content_type())],
        render_report(&results, format),
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    after: u64,
    /// Keep the response open and stream new events as they happen.
    #[serde(default)]
    follow: bool,
}

fn ndjson_line(rec: &upcase_core::session::EventRecord, role: Role) -> Option<Bytes> {
    project_event(rec, role).map(|e| {
        let mut line = serde_json::to_vec(&e).expect("stream event serializes");
        line.push(b'\n');
        Bytes::from(line)
    })
}

fn is_close(rec: &upcase_core::session::EventRecord) -> bool {
    matches!(
        rec.event,
        SessionEvent::PhaseChanged {
            to: Phase::Closed,
            ..
        }
    )
}

async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiQuery(q): ApiQuery<EventsQuery>,
) -> ApiResult<Response> {
    let (token, who) = credentials(&headers)?;
    let (backlog, rx, role, closed) = {
        let sessions = state.sessions();
        let entry = sessions
            .get(&id)
            .ok_or_else(|| ApiError::not_found(format!("session {id} not found")))?;
        entry.authorize(&token, &who)?;
        let role = entry
            .session
            .participant(&who)
            .map(|p| p.role)
            .expect("authorized");
        let backlog: Vec<_> = entry
            .session
            .log
            .iter()
            .filter(|r| r.seq > q.after)
            .cloned()
            .collect();
        (
            backlog,
            entry.tx.subscribe(),
            role,
            entry.session.phase == Phase::Closed,
        )
    };
    let last = backlog.last().map_or(q.after, |r| r.seq);
    let head = stream::iter(
        backlog
            .into_iter()
            .filter_map(move |r| ndjson_line(&r, role))
            .map(Ok::<_, Infallible>),
    );
    let body = if q.follow && !closed {
        let live = BroadcastStream::new(rx)
            .filter_map(|r| async move { r.ok() })
            .filter(move |r| std::future::ready(r.seq > last))
            .scan(false, |done, r| {
                let out = (!*done).then_some(r.clone());
                *done |= is_close(&r);
                std::future::ready(out)
            })
            .filter_map(move |r| {
                std::future::ready(ndjson_line(&r, role).map(Ok::<_, Infallible>))
            });
        Body::from_stream(head.chain(live))
    } else {
        Body::from_stream(head)
    };
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

#[derive(Debug, Deserialize)]
struct KappaRequest {
    a: Vec<u32>,
    b: Vec<u32>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    categories: Option<usize>,
}

async fn stats_kappa(ApiJson(req): ApiJson<KappaRequest>) -> ApiResult<Response> {
    let a = RatingVector::new("a", req.a)?;
    let b = RatingVector::new("b", req.b)?;
    let row = kappa_row(
        req.label.as_deref().unwrap_or("a vs b"),
        &a,
        &b,
        req.categories.unwrap_or(CATEGORIES),
    )?;
    Ok(Json(row).into_response())
}

#[derive(Debug, Deserialize)]
struct MatrixRequest {
    matrix: Vec<Vec<f64>>,
    #[serde(default)]
    variant: Option<IccVariant>,
}

async fn stats_icc(ApiJson(req): ApiJson<MatrixRequest>) -> ApiResult<Response> {
    let variants = match req.variant {
        Some(v) => vec![v],
        None => IccVariant::ALL.to_vec(),
    };
    let results = variants
        .into_iter()
        .map(|v| icc(&req.matrix, v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Json(results).into_response())
}

async fn stats_alpha(ApiJson(req): ApiJson<MatrixRequest>) -> ApiResult<Response> {
    Ok(Json(cronbach_alpha(&req.matrix)?).into_response())
}
