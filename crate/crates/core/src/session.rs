//! Assessment meetings as an event-sourced state machine.
//!
//! A session moves through `planning -> collecting -> generating -> reporting
//! -> closed`. During collection the moderator presents the indicators in id
//! order and the assessors rate each one with assessment poker: votes stay
//! hidden until every eligible assessor has voted, then the round reveals at
//! once. A split round is justified and re-voted until the vote is unanimous,
//! or the moderator records an override with a written justification.
//!
//! Every command validates against the current state, emits one or more
//! [`EventRecord`]s and applies them. [`AssessmentSession::replay`] rebuilds
//! the same state from the log alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ReferenceModel;
use crate::scoring::{build_profile, ProcessProfile, Rating, ResponseSheet, ScoringError};

pub const DEFAULT_ROUND_CAP: u32 = 5;

/// Prefix marking the first evidence entry as an override justification.
pub const JUSTIFICATION_TAG: &str = "justification:";

pub const BRIEFING_SCRIPT: &str = "\
Welcome to the usability process self-assessment. The purpose of this meeting is to \
determine how far our team performs the practices of the usability process. We will use \
assessment poker: for each questionnaire item the moderator reads the indicator and, if \
needed, the description, techniques, work products and glossary. Each assessor then picks a \
card in secret (N: not achieved, P: partially achieved, F: fully achieved). All cards are \
turned over at once. If opinions differ, assessors briefly justify their choice and vote \
again until consensus is reached. The moderator may ask for examples of work products to \
validate the rating and then records the consensus answer. The output is the process \
profile and a report of strengths, weaknesses and improvement opportunities.";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl SessionId {
    pub fn generate() -> Self {
        Self(uuid::Uuid::new_v4().simple().to_string())
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(pub String);

impl ParticipantId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sponsor,
    Moderator,
    Assessor,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Sponsor => "sponsor",
            Role::Moderator => "moderator",
            Role::Assessor => "assessor",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: ParticipantId,
    pub display_name: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentPlan {
    pub organization_name: String,
    #[serde(default)]
    pub scope_note: String,
    #[serde(default)]
    pub schedule_note: String,
    pub participants: Vec<Participant>,
    pub model_version: String,
}

impl AssessmentPlan {
    pub fn validate(&self) -> Result<(), SessionError> {
        let moderators = self
            .participants
            .iter()
            .filter(|p| p.role == Role::Moderator)
            .count();
        if moderators != 1 {
            return Err(SessionError::InvalidPlan(format!(
                "exactly one moderator required, found {moderators}"
            )));
        }
        if !self.participants.iter().any(|p| p.role == Role::Assessor) {
            return Err(SessionError::InvalidPlan(
                "at least one assessor required".into(),
            ));
        }
        let mut ids = BTreeSet::new();
        for p in &self.participants {
            if !ids.insert(&p.id) {
                return Err(SessionError::InvalidPlan(format!(
                    "duplicate participant id {}",
                    p.id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Planning,
    Collecting,
    Generating,
    Reporting,
    Closed,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Planning => "planning",
            Phase::Collecting => "collecting",
            Phase::Generating => "generating",
            Phase::Reporting => "reporting",
            Phase::Closed => "closed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rating", rename_all = "snake_case")]
pub enum RoundOutcome {
    Consensus(Rating),
    NewRoundRequired,
    /// The round cap was reached without unanimity; the moderator must override.
    OverrideRequired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PokerRound {
    pub round_number: u32,
    /// Assessors expected to vote in this round.
    pub voters: BTreeSet<ParticipantId>,
    pub votes: BTreeMap<ParticipantId, Rating>,
    pub revealed: bool,
    pub justifications: BTreeMap<ParticipantId, String>,
    pub outcome: Option<RoundOutcome>,
}

impl PokerRound {
    fn new(round_number: u32, voters: BTreeSet<ParticipantId>) -> Self {
        Self {
            round_number,
            voters,
            votes: BTreeMap::new(),
            revealed: false,
            justifications: BTreeMap::new(),
            outcome: None,
        }
    }

    /// The common rating if the revealed votes are unanimous.
    pub fn unanimous(&self) -> Option<Rating> {
        if !self.revealed {
            return None;
        }
        let mut values = self.votes.values();
        let first = *values.next()?;
        values.all(|v| *v == first).then_some(first)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub indicator_id: u32,
    pub rounds: Vec<PokerRound>,
    pub consensus: Option<Rating>,
    pub evidence: Vec<String>,
    pub override_justification: Option<String>,
}

impl ItemRecord {
    fn new(indicator_id: u32) -> Self {
        Self {
            indicator_id,
            rounds: Vec::new(),
            consensus: None,
            evidence: Vec::new(),
            override_justification: None,
        }
    }

    pub fn current_round(&self) -> Option<&PokerRound> {
        self.rounds.last()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum SessionEvent {
    SessionCreated {
        session_id: SessionId,
        plan: AssessmentPlan,
        indicator_ids: Vec<u32>,
        round_cap: u32,
    },
    ParticipantJoined {
        participant: Participant,
    },
    PhaseChanged {
        from: Phase,
        to: Phase,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        briefing: Option<String>,
    },
    ItemOpened {
        indicator_id: u32,
        round_number: u32,
        voters: BTreeSet<ParticipantId>,
    },
    VoteCast {
        indicator_id: u32,
        round_number: u32,
        rating: Rating,
        voted_count: usize,
        expected_count: usize,
    },
    RoundRevealed {
        indicator_id: u32,
        round_number: u32,
        votes: BTreeMap<ParticipantId, Rating>,
    },
    JustificationSubmitted {
        indicator_id: u32,
        round_number: u32,
        text: String,
    },
    RoundResolved {
        indicator_id: u32,
        round_number: u32,
        outcome: RoundOutcome,
    },
    RoundReopened {
        indicator_id: u32,
        round_number: u32,
    },
    ConsensusRecorded {
        indicator_id: u32,
        rating: Rating,
        evidence: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        override_justification: Option<String>,
    },
}

impl SessionEvent {
    pub fn type_name(&self) -> &'static str {
        match self {
            SessionEvent::SessionCreated { .. } => "session_created",
            SessionEvent::ParticipantJoined { .. } => "participant_joined",
            SessionEvent::PhaseChanged { .. } => "phase_changed",
            SessionEvent::ItemOpened { .. } => "item_opened",
            SessionEvent::VoteCast { .. } => "vote_cast",
            SessionEvent::RoundRevealed { .. } => "round_revealed",
            SessionEvent::JustificationSubmitted { .. } => "justification_submitted",
            SessionEvent::RoundResolved { .. } => "round_resolved",
            SessionEvent::RoundReopened { .. } => "round_reopened",
            SessionEvent::ConsensusRecorded { .. } => "consensus_recorded",
        }
    }
}

/// One line of the event log: `seq`, `timestamp`, `type`, `actor`, `payload`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    pub actor: Option<ParticipantId>,
    #[serde(flatten)]
    pub event: SessionEvent,
}

impl EventRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }
}

/// Coarse classification used to map errors onto transport status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Forbidden,
    NotFound,
    Conflict,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("wrong phase: expected {expected}, session is {actual}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("no assessors")]
    NoAssessors,
    #[error("unknown participant {0}")]
    UnknownParticipant(ParticipantId),
    #[error("{participant} ({role}) may not {action}")]
    RoleViolation {
        participant: ParticipantId,
        role: Role,
        action: &'static str,
    },
    #[error("no open item")]
    NoOpenItem,
    #[error("round {0} is already revealed")]
    RoundRevealed(u32),
    #[error("round {0} is not revealed yet")]
    RoundNotRevealed(u32),
    #[error("{0} joined after this item opened and votes from the next item on")]
    NotEligible(ParticipantId),
    #[error("rating {recorded} contradicts the unanimous vote {unanimous}; an override justification is required")]
    ConsensusContradiction { recorded: Rating, unanimous: Rating },
    #[error("the last round is not unanimous; an override justification is required")]
    OverrideRequired,
    #[error("a session has exactly one moderator")]
    DuplicateModerator,
    #[error("unresolved: {0:?}")]
    Incomplete(Vec<u32>),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

impl SessionError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            SessionError::InvalidPlan(_)
            | SessionError::ConsensusContradiction { .. }
            | SessionError::OverrideRequired
            | SessionError::DuplicateModerator
            | SessionError::Invalid(_)
            | SessionError::Scoring(_) => ErrorKind::Validation,
            SessionError::UnknownParticipant(_) | SessionError::RoleViolation { .. } => {
                ErrorKind::Forbidden
            }
            SessionError::WrongPhase { .. }
            | SessionError::NoAssessors
            | SessionError::NoOpenItem
            | SessionError::RoundRevealed(_)
            | SessionError::RoundNotRevealed(_)
            | SessionError::NotEligible(_)
            | SessionError::Incomplete(_) => ErrorKind::Conflict,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::InvalidPlan(_) => "invalid_plan",
            SessionError::WrongPhase { .. } => "wrong_phase",
            SessionError::NoAssessors => "no_assessors",
            SessionError::UnknownParticipant(_) => "unknown_participant",
            SessionError::RoleViolation { .. } => "role_violation",
            SessionError::NoOpenItem => "no_open_item",
            SessionError::RoundRevealed(_) => "round_revealed",
            SessionError::RoundNotRevealed(_) => "round_not_revealed",
            SessionError::NotEligible(_) => "not_eligible",
            SessionError::ConsensusContradiction { .. } => "consensus_contradiction",
            SessionError::OverrideRequired => "override_required",
            SessionError::DuplicateModerator => "duplicate_moderator",
            SessionError::Incomplete(_) => "incomplete",
            SessionError::Invalid(_) => "invalid",
            SessionError::Scoring(_) => "scoring",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("corrupt event log at seq {seq}: {reason}")]
pub struct ReplayError {
    /// Last sequence number that was applied successfully (0 if none).
    pub seq: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentSession {
    pub id: SessionId,
    pub phase: Phase,
    pub plan: AssessmentPlan,
    /// Roster: planned participants plus anyone who joined later.
    pub participants: Vec<Participant>,
    pub present: BTreeSet<ParticipantId>,
    pub items: BTreeMap<u32, ItemRecord>,
    pub current_item: Option<u32>,
    pub round_cap: u32,
    pub briefing: Option<String>,
    pub created_at: DateTime<Utc>,
    pub closed_at: Option<DateTime<Utc>>,
    pub log: Vec<EventRecord>,
}

/// Builds a session in the planning phase with one empty record per indicator.
pub fn create_session(
    plan: AssessmentPlan,
    model: &ReferenceModel,
) -> Result<AssessmentSession, SessionError> {
    AssessmentSession::create(SessionId::generate(), plan, model, DEFAULT_ROUND_CAP)
}

impl AssessmentSession {
    pub fn create(
        id: SessionId,
        plan: AssessmentPlan,
        model: &ReferenceModel,
        round_cap: u32,
    ) -> Result<Self, SessionError> {
        plan.validate()?;
        if plan.model_version != model.version {
            return Err(SessionError::InvalidPlan(format!(
                "plan targets model {}, loaded model is {}",
                plan.model_version, model.version
            )));
        }
        if round_cap == 0 {
            return Err(SessionError::InvalidPlan(
                "round cap must be at least 1".into(),
            ));
        }
        let created = EventRecord {
            seq: 1,
            timestamp: Utc::now(),
            actor: None,
            event: SessionEvent::SessionCreated {
                session_id: id,
                plan,
                indicator_ids: model.indicator_ids(),
                round_cap,
            },
        };
        Self::replay(std::slice::from_ref(&created))
            .map_err(|e| SessionError::Invalid(e.to_string()))
    }

    /// Rebuilds a session from its event log.
    pub fn replay(events: &[EventRecord]) -> Result<Self, ReplayError> {
        let first = events.first().ok_or_else(|| ReplayError {
            seq: 0,
            reason: "empty log".into(),
        })?;
        let SessionEvent::SessionCreated {
            session_id,
            plan,
            indicator_ids,
            round_cap,
        } = &first.event
        else {
            return Err(ReplayError {
                seq: 0,
                reason: "log does not start with session_created".into(),
            });
        };
        if first.seq != 1 {
            return Err(ReplayError {
                seq: 0,
                reason: format!("first event has seq {}", first.seq),
            });
        }
        let mut session = AssessmentSession {
            id: session_id.clone(),
            phase: Phase::Planning,
            participants: plan.participants.clone(),
            plan: plan.clone(),
            present: BTreeSet::new(),
            items: indicator_ids
                .iter()
                .map(|&id| (id, ItemRecord::new(id)))
                .collect(),
            current_item: None,
            round_cap: *round_cap,
            briefing: None,
            created_at: first.timestamp,
            closed_at: None,
            log: vec![first.clone()],
        };
        for rec in &events[1..] {
            session.apply(rec.clone())?;
        }
        Ok(session)
    }

    pub fn last_seq(&self) -> u64 {
        self.log.last().map_or(0, |r| r.seq)
    }

    pub fn participant(&self, id: &ParticipantId) -> Option<&Participant> {
        self.participants.iter().find(|p| &p.id == id)
    }

    pub fn moderator(&self) -> &Participant {
        self.participants
            .iter()
            .find(|p| p.role == Role::Moderator)
            .expect("plan validation guarantees a moderator")
    }

    pub fn present_assessors(&self) -> BTreeSet<ParticipantId> {
        self.participants
            .iter()
            .filter(|p| p.role == Role::Assessor && self.present.contains(&p.id))
            .map(|p| p.id.clone())
            .collect()
    }

    pub fn unresolved(&self) -> Vec<u32> {
        self.items
            .values()
            .filter(|i| i.consensus.is_none())
            .map(|i| i.indicator_id)
            .collect()
    }

    pub fn resolved_count(&self) -> usize {
        self.items
            .values()
            .filter(|i| i.consensus.is_some())
            .count()
    }

    fn current_record(&self) -> Option<&ItemRecord> {
        self.current_item.and_then(|id| self.items.get(&id))
    }

    fn apply(&mut self, rec: EventRecord) -> Result<(), ReplayError> {
        let last = self.last_seq();
        let fail = |reason: String| ReplayError { seq: last, reason };
        if rec.seq != last + 1 {
            return Err(fail(format!(
                "expected seq {}, found {}",
                last + 1,
                rec.seq
            )));
        }
        match &rec.event {
            SessionEvent::SessionCreated { .. } => {
                return Err(fail("duplicate session_created".into()));
            }
            SessionEvent::ParticipantJoined { participant } => {
                if self.participant(&participant.id).is_none() {
                    self.participants.push(participant.clone());
                }
                self.present.insert(participant.id.clone());
            }
            SessionEvent::PhaseChanged { from, to, briefing } => {
                if *from != self.phase || to <= from {
                    return Err(fail(format!(
                        "illegal transition {from} -> {to} from {}",
                        self.phase
                    )));
                }
                self.phase = *to;
                if briefing.is_some() {
                    self.briefing = briefing.clone();
                }
                if *to == Phase::Closed {
                    self.closed_at = Some(rec.timestamp);
                }
            }
            SessionEvent::ItemOpened {
                indicator_id,
                round_number,
                voters,
            } => {
                let item = self
                    .items
                    .get_mut(indicator_id)
                    .ok_or_else(|| fail(format!("unknown item {indicator_id}")))?;
                item.rounds
                    .push(PokerRound::new(*round_number, voters.clone()));
                self.current_item = Some(*indicator_id);
            }
            SessionEvent::VoteCast {
                indicator_id,
                round_number,
                rating,
                ..
            } => {
                let voter = rec
                    .actor
                    .clone()
                    .ok_or_else(|| fail("vote without actor".into()))?;
                let round = self.round_mut(*indicator_id, *round_number).map_err(fail)?;
                round.votes.insert(voter, *rating);
            }
            SessionEvent::RoundRevealed {
                indicator_id,
                round_number,
                ..
            } => {
                self.round_mut(*indicator_id, *round_number)
                    .map_err(fail)?
                    .revealed = true;
            }
            SessionEvent::JustificationSubmitted {
                indicator_id,
                round_number,
                text,
            } => {
                let who = rec
                    .actor
                    .clone()
                    .ok_or_else(|| fail("justification without actor".into()))?;
                let round = self.round_mut(*indicator_id, *round_number).map_err(fail)?;
                round.justifications.insert(who, text.clone());
            }
            SessionEvent::RoundResolved {
                indicator_id,
                round_number,
                outcome,
            } => {
                self.round_mut(*indicator_id, *round_number)
                    .map_err(fail)?
                    .outcome = Some(*outcome);
            }
            SessionEvent::RoundReopened {
                indicator_id,
                round_number,
            } => {
                let item = self
                    .items
                    .get_mut(indicator_id)
                    .ok_or_else(|| fail(format!("unknown item {indicator_id}")))?;
                let voters = item
                    .rounds
                    .last()
                    .map(|r| r.voters.clone())
                    .ok_or_else(|| fail("reopen without a previous round".into()))?;
                item.rounds.push(PokerRound::new(*round_number, voters));
            }
            SessionEvent::ConsensusRecorded {
                indicator_id,
                rating,
                evidence,
                override_justification,
            } => {
                let item = self
                    .items
                    .get_mut(indicator_id)
                    .ok_or_else(|| fail(format!("unknown item {indicator_id}")))?;
                item.consensus = Some(*rating);
                item.evidence = evidence.clone();
                item.override_justification = override_justification.clone();
                if self.current_item == Some(*indicator_id) {
                    self.current_item = None;
                }
            }
        }
        self.log.push(rec);
        Ok(())
    }

    fn round_mut(
        &mut self,
        indicator_id: u32,
        round_number: u32,
    ) -> Result<&mut PokerRound, String> {
        let item = self
            .items
            .get_mut(&indicator_id)
            .ok_or_else(|| format!("unknown item {indicator_id}"))?;
        item.rounds
            .last_mut()
            .filter(|r| r.round_number == round_number)
            .ok_or_else(|| format!("item {indicator_id} has no open round {round_number}"))
    }

    fn emit(&mut self, actor: Option<&ParticipantId>, event: SessionEvent) -> EventRecord {
        let rec = EventRecord {
            seq: self.last_seq() + 1,
            timestamp: Utc::now(),
            actor: actor.cloned(),
            event,
        };
        self.apply(rec.clone())
            .expect("commands only emit events valid for the current state");
        rec
    }

    fn expect_phase(&self, expected: Phase) -> Result<(), SessionError> {
        if self.phase != expected {
            return Err(SessionError::WrongPhase {
                expected,
                actual: self.phase,
            });
        }
        Ok(())
    }

    fn require_role(
        &self,
        who: &ParticipantId,
        role: Role,
        action: &'static str,
    ) -> Result<(), SessionError> {
        let p = self
            .participant(who)
            .ok_or_else(|| SessionError::UnknownParticipant(who.clone()))?;
        if p.role != role {
            return Err(SessionError::RoleViolation {
                participant: who.clone(),
                role: p.role,
                action,
            });
        }
        Ok(())
    }

    /// Marks a participant present. A planned participant with the same display
    /// name and role is claimed; otherwise a new participant joins the roster.
    /// Rejoining returns the existing id without a new event.
    pub fn join(
        &mut self,
        display_name: &str,
        role: Role,
    ) -> Result<(ParticipantId, Vec<EventRecord>), SessionError> {
        if self.phase == Phase::Closed {
            return Err(SessionError::WrongPhase {
                expected: Phase::Collecting,
                actual: self.phase,
            });
        }
        let name = display_name.trim();
        if name.is_empty() {
            return Err(SessionError::Invalid("display name is empty".into()));
        }
        if let Some(existing) = self
            .participants
            .iter()
            .find(|p| p.display_name == name && p.role == role)
            .cloned()
        {
            if self.present.contains(&existing.id) {
                return Ok((existing.id, Vec::new()));
            }
            let rec = self.emit(
                Some(&existing.id),
                SessionEvent::ParticipantJoined {
                    participant: existing.clone(),
                },
            );
            return Ok((existing.id, vec![rec]));
        }
        if role == Role::Moderator {
            return Err(SessionError::DuplicateModerator);
        }
        let participant = Participant {
            id: ParticipantId(uuid::Uuid::new_v4().simple().to_string()),
            display_name: name.to_string(),
            role,
        };
        let id = participant.id.clone();
        let rec = self.emit(Some(&id), SessionEvent::ParticipantJoined { participant });
        Ok((id, vec![rec]))
    }

    /// Marks a planned participant present by id.
    pub fn mark_present(&mut self, id: &ParticipantId) -> Result<Vec<EventRecord>, SessionError> {
        let p = self
            .participant(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownParticipant(id.clone()))?;
        if self.present.contains(id) {
            return Ok(Vec::new());
        }
        Ok(vec![self.emit(
            Some(id),
            SessionEvent::ParticipantJoined { participant: p },
        )])
    }

    /// Opens data collection: attaches the briefing script and opens the first item.
    pub fn begin_collection(&mut self) -> Result<Vec<EventRecord>, SessionError> {
        self.expect_phase(Phase::Planning)?;
        if self.present_assessors().is_empty() {
            return Err(SessionError::NoAssessors);
        }
        let moderator = self.moderator().id.clone();
        let mut out = vec![self.emit(
            Some(&moderator),
            SessionEvent::PhaseChanged {
                from: Phase::Planning,
                to: Phase::Collecting,
                briefing: Some(BRIEFING_SCRIPT.to_string()),
            },
        )];
        out.extend(self.open_next_item());
        Ok(out)
    }

    fn open_next_item(&mut self) -> Option<EventRecord> {
        let next = self.unresolved().into_iter().next()?;
        let voters = self.present_assessors();
        Some(self.emit(
            None,
            SessionEvent::ItemOpened {
                indicator_id: next,
                round_number: 1,
                voters,
            },
        ))
    }

    /// Records (or replaces) an assessor's hidden card. The round reveals as soon
    /// as every eligible assessor has voted.
    pub fn cast_vote(
        &mut self,
        assessor: &ParticipantId,
        card: Rating,
    ) -> Result<Vec<EventRecord>, SessionError> {
        self.expect_phase(Phase::Collecting)?;
        self.require_role(assessor, Role::Assessor, "vote")?;
        let item = self.current_record().ok_or(SessionError::NoOpenItem)?;
        let round = item.current_round().ok_or(SessionError::NoOpenItem)?;
        if round.revealed {
            return Err(SessionError::RoundRevealed(round.round_number));
        }
        if !round.voters.contains(assessor) {
            return Err(SessionError::NotEligible(assessor.clone()));
        }
        let indicator_id = item.indicator_id;
        let round_number = round.round_number;
        let expected_count = round.voters.len();
        let voted_count = round.votes.len() + usize::from(!round.votes.contains_key(assessor));

        let mut out = vec![self.emit(
            Some(assessor),
            SessionEvent::VoteCast {
                indicator_id,
                round_number,
                rating: card,
                voted_count,
                expected_count,
            },
        )];
        if voted_count == expected_count {
            let votes = self.items[&indicator_id]
                .current_round()
                .map(|r| r.votes.clone())
                .unwrap_or_default();
            out.push(self.emit(
                None,
                SessionEvent::RoundRevealed {
                    indicator_id,
                    round_number,
                    votes,
                },
            ));
        }
        Ok(out)
    }

    /// An assessor explains a deviating card after the reveal.
    pub fn submit_justification(
        &mut self,
        assessor: &ParticipantId,
        text: &str,
    ) -> Result<Vec<EventRecord>, SessionError> {
        self.expect_phase(Phase::Collecting)?;
        self.require_role(assessor, Role::Assessor, "justify a vote")?;
        let text = text.trim();
        if text.is_empty() {
            return Err(SessionError::Invalid("justification is empty".into()));
        }
        let item = self.current_record().ok_or(SessionError::NoOpenItem)?;
        let round = item.current_round().ok_or(SessionError::NoOpenItem)?;
        if !round.revealed {
            return Err(SessionError::RoundNotRevealed(round.round_number));
        }
        if !round.voters.contains(assessor) {
            return Err(SessionError::NotEligible(assessor.clone()));
        }
        let (indicator_id, round_number) = (item.indicator_id, round.round_number);
        Ok(vec![self.emit(
            Some(assessor),
            SessionEvent::JustificationSubmitted {
                indicator_id,
                round_number,
                text: text.to_string(),
            },
        )])
    }

    /// Decides a revealed round: unanimous votes give a consensus candidate,
    /// otherwise a new round opens (or, at the round cap, an override is required).
    /// Resolving an already resolved round returns the stored outcome.
    pub fn resolve_round(
        &mut self,
        moderator: &ParticipantId,
    ) -> Result<(RoundOutcome, Vec<EventRecord>), SessionError> {
        self.expect_phase(Phase::Collecting)?;
        self.require_role(moderator, Role::Moderator, "resolve a round")?;
        let item = self.current_record().ok_or(SessionError::NoOpenItem)?;
        let round = item.current_round().ok_or(SessionError::NoOpenItem)?;
        if !round.revealed {
            return Err(SessionError::RoundNotRevealed(round.round_number));
        }
        if let Some(outcome) = round.outcome {
            return Ok((outcome, Vec::new()));
        }
        let (indicator_id, round_number) = (item.indicator_id, round.round_number);
        let outcome = match round.unanimous() {
            Some(r) => RoundOutcome::Consensus(r),
            None if round_number >= self.round_cap => RoundOutcome::OverrideRequired,
            None => RoundOutcome::NewRoundRequired,
        };
        let mut out = vec![self.emit(
            Some(moderator),
            SessionEvent::RoundResolved {
                indicator_id,
                round_number,
                outcome,
            },
        )];
        if outcome == RoundOutcome::NewRoundRequired {
            out.push(self.emit(
                Some(moderator),
                SessionEvent::RoundReopened {
                    indicator_id,
                    round_number: round_number + 1,
                },
            ));
        }
        Ok((outcome, out))
    }

    /// The moderator closes the current item. A rating that departs from a
    /// unanimous final round, or any rating after a split final round, needs an
    /// override justification as the first evidence entry (`justification: ...`).
    pub fn record_consensus(
        &mut self,
        moderator: &ParticipantId,
        rating: Rating,
        evidence: Vec<String>,
    ) -> Result<Vec<EventRecord>, SessionError> {
        self.expect_phase(Phase::Collecting)?;
        self.require_role(moderator, Role::Moderator, "record consensus")?;
        let item = self.current_record().ok_or(SessionError::NoOpenItem)?;
        let round = item.current_round().ok_or(SessionError::NoOpenItem)?;
        if !round.revealed {
            return Err(SessionError::RoundNotRevealed(round.round_number));
        }

        let mut evidence: Vec<String> = evidence
            .into_iter()
            .map(|e| e.trim().to_string())
            .filter(|e| !e.is_empty())
            .collect();
        let override_justification = match evidence.first() {
            Some(first) if first.to_ascii_lowercase().starts_with(JUSTIFICATION_TAG) => {
                let text = first[JUSTIFICATION_TAG.len()..].trim().to_string();
                evidence.remove(0);
                if text.is_empty() {
                    return Err(SessionError::Invalid(
                        "override justification is empty".into(),
                    ));
                }
                Some(text)
            }
            _ => None,
        };
        match round.unanimous() {
            Some(u) if u != rating && override_justification.is_none() => {
                return Err(SessionError::ConsensusContradiction {
                    recorded: rating,
                    unanimous: u,
                })
            }
            None if override_justification.is_none() => return Err(SessionError::OverrideRequired),
            _ => {}
        }

        let indicator_id = item.indicator_id;
        let mut out = vec![self.emit(
            Some(moderator),
            SessionEvent::ConsensusRecorded {
                indicator_id,
                rating,
                evidence,
                override_justification,
            },
        )];
        out.extend(self.open_next_item());
        Ok(out)
    }

    /// The consensus answers as a response sheet, once every item is resolved.
    pub fn response_sheet(&self) -> Result<ResponseSheet, SessionError> {
        let missing = self.unresolved();
        if !missing.is_empty() {
            return Err(SessionError::Incomplete(missing));
        }
        let mut sheet = ResponseSheet::new(
            self.plan.model_version.clone(),
            self.plan.organization_name.clone(),
        );
        for item in self.items.values() {
            sheet
                .ratings
                .insert(item.indicator_id, item.consensus.expect("checked above"));
        }
        Ok(sheet)
    }

    /// Moves collecting -> generating -> reporting and scores the consensus sheet.
    pub fn finalize(
        &mut self,
        model: &ReferenceModel,
    ) -> Result<(ResponseSheet, ProcessProfile, Vec<EventRecord>), SessionError> {
        self.expect_phase(Phase::Collecting)?;
        let sheet = self.response_sheet()?;
        let profile = build_profile(&sheet, model)?;
        let moderator = self.moderator().id.clone();
        let out = vec![
            self.emit(
                Some(&moderator),
                SessionEvent::PhaseChanged {
                    from: Phase::Collecting,
                    to: Phase::Generating,
                    briefing: None,
                },
            ),
            self.emit(
                Some(&moderator),
                SessionEvent::PhaseChanged {
                    from: Phase::Generating,
                    to: Phase::Reporting,
                    briefing: None,
                },
            ),
        ];
        Ok((sheet, profile, out))
    }

    pub fn close(&mut self) -> Result<Vec<EventRecord>, SessionError> {
        self.expect_phase(Phase::Reporting)?;
        let moderator = self.moderator().id.clone();
        Ok(vec![self.emit(
            Some(&moderator),
            SessionEvent::PhaseChanged {
                from: Phase::Reporting,
                to: Phase::Closed,
                briefing: None,
            },
        )])
    }

    /// Evidence per item, for reporting.
    pub fn evidence_index(&self) -> BTreeMap<u32, Vec<String>> {
        self.items
            .values()
            .map(|i| (i.indicator_id, i.evidence.clone()))
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.log {
            out.push_str(&rec.to_json_line());
            out.push('\n');
        }
        out
    }

    /// Parses a JSON-lines log and replays it. Parse failures report the last good seq.
    pub fn from_jsonl(text: &str) -> Result<Self, ReplayError> {
        let mut events = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: EventRecord = serde_json::from_str(line).map_err(|e| ReplayError {
                seq: events.last().map_or(0, |r: &EventRecord| r.seq),
                reason: e.to_string(),
            })?;
            events.push(rec);
        }
        Self::replay(&events)
    }
}

/// What a participant may see of a round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundView {
    pub round_number: u32,
    pub revealed: bool,
    pub expected_count: usize,
    pub vote_count: usize,
    /// Every vote, present only once the round is revealed.
    pub votes: Option<BTreeMap<ParticipantId, Rating>>,
    /// The viewer's own hidden card.
    pub own_vote: Option<Rating>,
    /// Who has voted so far (moderator only, before reveal).
    pub voted: Option<Vec<ParticipantId>>,
    pub justifications: BTreeMap<ParticipantId, String>,
    pub outcome: Option<RoundOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemView {
    pub indicator_id: u32,
    pub consensus: Option<Rating>,
    pub evidence: Vec<String>,
    pub override_justification: Option<String>,
    pub rounds: Vec<RoundView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantView {
    pub id: ParticipantId,
    pub display_name: String,
    pub role: Role,
    pub present: bool,
}

/// Role-scoped projection of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: SessionId,
    pub phase: Phase,
    pub organization_name: String,
    pub model_version: String,
    pub viewer: ParticipantId,
    pub viewer_role: Role,
    pub participants: Vec<ParticipantView>,
    pub current_item: Option<u32>,
    pub resolved_count: usize,
    pub item_count: usize,
    pub round_cap: u32,
    pub briefing: Option<String>,
    pub items: Vec<ItemView>,
    pub created_at: DateTime<Utc>,
    pub closed_at: Option<DateTime<Utc>>,
    pub last_seq: u64,
}

impl SessionView {
    pub fn project(
        session: &AssessmentSession,
        viewer: &ParticipantId,
    ) -> Result<Self, SessionError> {
        let who = session
            .participant(viewer)
            .ok_or_else(|| SessionError::UnknownParticipant(viewer.clone()))?;
        let items = session
            .items
            .values()
            .map(|item| ItemView {
                indicator_id: item.indicator_id,
                consensus: item.consensus,
                evidence: item.evidence.clone(),
                override_justification: item.override_justification.clone(),
                rounds: item
                    .rounds
                    .iter()
                    .map(|r| RoundView {
                        round_number: r.round_number,
                        revealed: r.revealed,
                        expected_count: r.voters.len(),
                        vote_count: r.votes.len(),
                        votes: r.revealed.then(|| r.votes.clone()),
                        own_vote: if r.revealed {
                            None
                        } else {
                            r.votes.get(viewer).copied()
                        },
                        voted: (!r.revealed && who.role == Role::Moderator)
                            .then(|| r.votes.keys().cloned().collect()),
                        justifications: r.justifications.clone(),
                        outcome: r.outcome,
                    })
                    .collect(),
            })
            .collect();
        Ok(SessionView {
            id: session.id.clone(),
            phase: session.phase,
            organization_name: session.plan.organization_name.clone(),
            model_version: session.plan.model_version.clone(),
            viewer: viewer.clone(),
            viewer_role: who.role,
            participants: session
                .participants
                .iter()
                .map(|p| ParticipantView {
                    id: p.id.clone(),
                    display_name: p.display_name.clone(),
                    role: p.role,
                    present: session.present.contains(&p.id),
                })
                .collect(),
            current_item: session.current_item,
            resolved_count: session.resolved_count(),
            item_count: session.items.len(),
            round_cap: session.round_cap,
            briefing: session.briefing.clone(),
            items,
            created_at: session.created_at,
            closed_at: session.closed_at,
            last_seq: session.last_seq(),
        })
    }
}

/// An event as delivered on a participant's live stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(rename = "type")]
    pub kind: String,
    pub actor: Option<ParticipantId>,
    pub payload: serde_json::Value,
}

/// Role-scoped projection of one log entry. Individual votes are reduced to
/// counts; everything else passes through. `session_created` is not streamed.
pub fn project_event(rec: &EventRecord, viewer_role: Role) -> Option<StreamEvent> {
    let (kind, actor, payload) = match &rec.event {
        SessionEvent::SessionCreated { .. } => return None,
        SessionEvent::VoteCast {
            indicator_id,
            round_number,
            voted_count,
            expected_count,
            ..
        } => (
            "vote_progress".to_string(),
            if viewer_role == Role::Moderator {
                rec.actor.clone()
            } else {
                None
            },
            serde_json::json!({
                "indicator_id": indicator_id,
                "round_number": round_number,
                "voted_count": voted_count,
                "expected_count": expected_count,
            }),
        ),
        other => {
            let mut value = serde_json::to_value(other).expect("event serializes");
            let payload = value
                .get_mut("payload")
                .map(serde_json::Value::take)
                .unwrap_or(serde_json::Value::Null);
            (other.type_name().to_string(), rec.actor.clone(), payload)
        }
    };
    Some(StreamEvent {
        seq: rec.seq,
        timestamp: rec.timestamp,
        kind,
        actor,
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(assessors: usize) -> AssessmentPlan {
        let mut participants = vec![Participant {
            id: ParticipantId::new("mod"),
            display_name: "Moderator".into(),
            role: Role::Moderator,
        }];
        for i in 0..assessors {
            participants.push(Participant {
                id: ParticipantId::new(format!("a{i}")),
                display_name: format!("Assessor {i}"),
                role: Role::Assessor,
            });
        }
        AssessmentPlan {
            organization_name: "Org".into(),
            scope_note: String::new(),
            schedule_note: String::new(),
            participants,
            model_version: "1.0".into(),
        }
    }

    fn started(assessors: usize) -> (AssessmentSession, ReferenceModel) {
        let model = ReferenceModel::canonical();
        let mut s = create_session(plan(assessors), &model).unwrap();
        for i in 0..assessors {
            s.mark_present(&ParticipantId::new(format!("a{i}")))
                .unwrap();
        }
        s.begin_collection().unwrap();
        (s, model)
    }

    fn a(i: usize) -> ParticipantId {
        ParticipantId::new(format!("a{i}"))
    }

    fn m() -> ParticipantId {
        ParticipantId::new("mod")
    }

    #[test]
    fn create_examples() {
        let model = ReferenceModel::canonical();
        let s = create_session(plan(2), &model).unwrap();
        assert_eq!(s.phase, Phase::Planning);
        assert_eq!(s.items.len(), 16);
        assert!(s
            .items
            .values()
            .all(|i| i.rounds.is_empty() && i.consensus.is_none()));

        let mut p = plan(2);
        p.participants.retain(|p| p.role != Role::Moderator);
        assert!(matches!(
            create_session(p, &model),
            Err(SessionError::InvalidPlan(_))
        ));

        let mut p = plan(2);
        p.participants.push(Participant {
            id: ParticipantId::new("mod2"),
            display_name: "Second".into(),
            role: Role::Moderator,
        });
        assert!(matches!(
            create_session(p, &model),
            Err(SessionError::InvalidPlan(_))
        ));

        assert!(matches!(
            create_session(plan(0), &model),
            Err(SessionError::InvalidPlan(_))
        ));
    }

    #[test]
    fn begin_collection_examples() {
        let (s, _) = started(2);
        assert_eq!(s.phase, Phase::Collecting);
        assert_eq!(s.current_item, Some(1));
        assert!(s.briefing.as_deref().unwrap().contains("assessment poker"));

        let mut s2 = s.clone();
        assert!(matches!(
            s2.begin_collection(),
            Err(SessionError::WrongPhase { .. })
        ));

        let model = ReferenceModel::canonical();
        let mut absent = create_session(plan(2), &model).unwrap();
        assert_eq!(absent.begin_collection(), Err(SessionError::NoAssessors));
    }

    #[test]
    fn unanimous_round_reveals_and_resolves() {
        let (mut s, _) = started(2);
        let ev = s.cast_vote(&a(0), Rating::P).unwrap();
        assert_eq!(ev.len(), 1);
        assert!(!s.items[&1].rounds[0].revealed);
        let ev = s.cast_vote(&a(1), Rating::P).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1].event.type_name(), "round_revealed");
        let (outcome, _) = s.resolve_round(&m()).unwrap();
        assert_eq!(outcome, RoundOutcome::Consensus(Rating::P));
        // idempotent
        let (again, ev) = s.resolve_round(&m()).unwrap();
        assert_eq!(again, outcome);
        assert!(ev.is_empty());
    }

    #[test]
    fn vote_revision_before_reveal() {
        let (mut s, _) = started(2);
        s.cast_vote(&a(0), Rating::N).unwrap();
        s.cast_vote(&a(0), Rating::F).unwrap();
        assert!(!s.items[&1].rounds[0].revealed);
        s.cast_vote(&a(1), Rating::F).unwrap();
        let round = &s.items[&1].rounds[0];
        assert!(round.revealed);
        assert_eq!(round.votes[&a(0)], Rating::F);
        assert_eq!(round.unanimous(), Some(Rating::F));
        // and replaying the log yields the same tally
        let replayed = AssessmentSession::replay(&s.log).unwrap();
        assert_eq!(replayed, s);
    }

    #[test]
    fn vote_errors() {
        let (mut s, _) = started(1);
        assert!(matches!(
            s.cast_vote(&m(), Rating::F),
            Err(SessionError::RoleViolation { .. })
        ));
        assert!(matches!(
            s.cast_vote(&ParticipantId::new("ghost"), Rating::F),
            Err(SessionError::UnknownParticipant(_))
        ));
        s.cast_vote(&a(0), Rating::F).unwrap();
        assert_eq!(
            s.cast_vote(&a(0), Rating::N),
            Err(SessionError::RoundRevealed(1))
        );
    }

    #[test]
    fn split_round_opens_new_round() {
        let (mut s, _) = started(2);
        s.cast_vote(&a(0), Rating::N).unwrap();
        s.cast_vote(&a(1), Rating::F).unwrap();
        s.submit_justification(&a(0), "no documented purpose")
            .unwrap();
        s.submit_justification(&a(1), "purpose is in the proposal")
            .unwrap();
        let (outcome, ev) = s.resolve_round(&m()).unwrap();
        assert_eq!(outcome, RoundOutcome::NewRoundRequired);
        assert_eq!(ev.last().unwrap().event.type_name(), "round_reopened");
        let item = &s.items[&1];
        assert_eq!(item.rounds.len(), 2);
        assert_eq!(item.rounds[1].round_number, 2);
        assert_eq!(item.rounds[0].justifications.len(), 2);
    }

    #[test]
    fn single_assessor_is_unanimous() {
        let (mut s, _) = started(1);
        s.cast_vote(&a(0), Rating::P).unwrap();
        assert_eq!(
            s.resolve_round(&m()).unwrap().0,
            RoundOutcome::Consensus(Rating::P)
        );
    }

    #[test]
    fn resolve_before_reveal_fails() {
        let (mut s, _) = started(2);
        s.cast_vote(&a(0), Rating::P).unwrap();
        assert_eq!(
            s.resolve_round(&m()).unwrap_err(),
            SessionError::RoundNotRevealed(1)
        );
    }

    #[test]
    fn round_cap_forces_override() {
        let model = ReferenceModel::canonical();
        let mut s = AssessmentSession::create(SessionId::generate(), plan(2), &model, 2).unwrap();
        s.mark_present(&a(0)).unwrap();
        s.mark_present(&a(1)).unwrap();
        s.begin_collection().unwrap();
        for _ in 0..2 {
            s.cast_vote(&a(0), Rating::N).unwrap();
            s.cast_vote(&a(1), Rating::F).unwrap();
            s.resolve_round(&m()).unwrap();
        }
        let item = &s.items[&1];
        assert_eq!(item.rounds.len(), 2);
        assert_eq!(item.rounds[1].outcome, Some(RoundOutcome::OverrideRequired));
        assert_eq!(
            s.record_consensus(&m(), Rating::P, vec![]),
            Err(SessionError::OverrideRequired)
        );
        s.record_consensus(
            &m(),
            Rating::P,
            vec!["justification: split persisted, settle on middle".into()],
        )
        .unwrap();
        assert_eq!(s.items[&1].consensus, Some(Rating::P));
        assert!(s.items[&1].override_justification.is_some());
    }

    #[test]
    fn consensus_examples() {
        let (mut s, _) = started(2);
        s.cast_vote(&a(0), Rating::F).unwrap();
        s.cast_vote(&a(1), Rating::F).unwrap();
        assert!(matches!(
            s.record_consensus(&a(0), Rating::F, vec![]),
            Err(SessionError::RoleViolation { .. })
        ));
        s.record_consensus(&m(), Rating::F, vec!["personas document".into()])
            .unwrap();
        assert_eq!(s.items[&1].consensus, Some(Rating::F));
        assert_eq!(s.items[&1].evidence, vec!["personas document".to_string()]);
        assert_eq!(s.current_item, Some(2));

        s.cast_vote(&a(0), Rating::N).unwrap();
        s.cast_vote(&a(1), Rating::N).unwrap();
        assert_eq!(
            s.record_consensus(&m(), Rating::F, vec![]),
            Err(SessionError::ConsensusContradiction {
                recorded: Rating::F,
                unanimous: Rating::N
            })
        );
        s.record_consensus(
            &m(),
            Rating::F,
            vec!["Justification: requirements doc found".into()],
        )
        .unwrap();
        assert_eq!(
            s.items[&2].override_justification.as_deref(),
            Some("requirements doc found")
        );
    }

    #[test]
    fn consensus_needs_revealed_round() {
        let (mut s, _) = started(2);
        assert_eq!(
            s.record_consensus(&m(), Rating::P, vec![]),
            Err(SessionError::RoundNotRevealed(1))
        );
    }

    fn run_all(s: &mut AssessmentSession, ratings: &[Rating], assessors: usize) {
        for r in ratings {
            for i in 0..assessors {
                s.cast_vote(&a(i), *r).unwrap();
            }
            s.record_consensus(&m(), *r, vec![]).unwrap();
        }
    }

    #[test]
    fn finalize_examples() {
        let (mut s, model) = started(2);
        run_all(&mut s, &[Rating::N; 15], 2);
        assert_eq!(s.current_item, Some(16));
        assert_eq!(
            s.finalize(&model).unwrap_err(),
            SessionError::Incomplete(vec![16])
        );
        assert_eq!(
            s.finalize(&model).unwrap_err().to_string(),
            "unresolved: [16]"
        );
        run_all(&mut s, &[Rating::N], 2);
        assert_eq!(s.current_item, None);
        let (sheet, profile, _) = s.finalize(&model).unwrap();
        assert_eq!(s.phase, Phase::Reporting);
        assert_eq!(sheet.ratings.len(), 16);
        assert_eq!(profile.overall.ratio(), 0.into());
        assert_eq!(profile.capability_level, 0);
        s.close().unwrap();
        assert_eq!(s.phase, Phase::Closed);
        assert!(s.closed_at.is_some());
    }

    #[test]
    fn late_joiner_enters_at_next_item() {
        let (mut s, _) = started(1);
        let (late, _) = s.join("Late Larry", Role::Assessor).unwrap();
        assert_eq!(
            s.cast_vote(&late, Rating::P),
            Err(SessionError::NotEligible(late.clone()))
        );
        s.cast_vote(&a(0), Rating::P).unwrap();
        s.record_consensus(&m(), Rating::P, vec![]).unwrap();
        assert!(s.items[&2].rounds[0].voters.contains(&late));
        // rejoin is idempotent
        let (again, ev) = s.join("Late Larry", Role::Assessor).unwrap();
        assert_eq!(again, late);
        assert!(ev.is_empty());
        assert_eq!(
            s.join("Another Mod", Role::Moderator).unwrap_err(),
            SessionError::DuplicateModerator
        );
    }

    #[test]
    fn join_claims_planned_participant() {
        let model = ReferenceModel::canonical();
        let mut s = create_session(plan(2), &model).unwrap();
        let (id, ev) = s.join("Assessor 1", Role::Assessor).unwrap();
        assert_eq!(id, a(1));
        assert_eq!(ev.len(), 1);
        assert_eq!(s.participants.len(), 3);
    }

    #[test]
    fn views_hide_unrevealed_votes() {
        let (mut s, _) = started(2);
        s.mark_present(&m()).unwrap();
        s.cast_vote(&a(0), Rating::F).unwrap();
        let other = SessionView::project(&s, &a(1)).unwrap();
        let r = &other.items[0].rounds[0];
        assert_eq!(r.votes, None);
        assert_eq!(r.own_vote, None);
        assert_eq!(r.voted, None);
        assert_eq!(r.vote_count, 1);
        let own = SessionView::project(&s, &a(0)).unwrap();
        assert_eq!(own.items[0].rounds[0].own_vote, Some(Rating::F));
        let moderator = SessionView::project(&s, &m()).unwrap();
        assert_eq!(moderator.items[0].rounds[0].voted, Some(vec![a(0)]));
        assert_eq!(moderator.items[0].rounds[0].votes, None);
        let json = serde_json::to_string(&other).unwrap();
        assert!(!json.contains("\"F\""), "{json}");
    }

    #[test]
    fn stream_projection_reduces_votes_to_counts() {
        let (mut s, _) = started(2);
        let ev = s.cast_vote(&a(0), Rating::F).unwrap();
        let projected = project_event(&ev[0], Role::Assessor).unwrap();
        assert_eq!(projected.kind, "vote_progress");
        assert_eq!(projected.actor, None);
        assert_eq!(projected.payload["voted_count"], 1);
        assert!(!serde_json::to_string(&projected).unwrap().contains("\"F\""));
        let ev = s.cast_vote(&a(1), Rating::N).unwrap();
        let revealed = project_event(&ev[1], Role::Assessor).unwrap();
        assert_eq!(revealed.kind, "round_revealed");
        assert_eq!(revealed.payload["votes"]["a0"], "F");
        assert!(project_event(&s.log[0], Role::Moderator).is_none());
    }

    #[test]
    fn jsonl_round_trip_and_corruption() {
        let (mut s, _) = started(2);
        s.cast_vote(&a(0), Rating::F).unwrap();
        s.cast_vote(&a(1), Rating::F).unwrap();
        let text = s.to_jsonl();
        assert_eq!(AssessmentSession::from_jsonl(&text).unwrap(), s);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            for key in ["seq", "timestamp", "type", "actor", "payload"] {
                assert!(v.get(key).is_some(), "missing {key} in {line}");
            }
        }
        let truncated = &text[..text.len() - 20];
        let err = AssessmentSession::from_jsonl(truncated).unwrap_err();
        assert_eq!(err.seq, s.last_seq() - 1);

        let mut events = s.log.clone();
        events.remove(3);
        assert!(AssessmentSession::replay(&events).is_err());
    }

    #[test]
    fn error_kinds() {
        assert_eq!(SessionError::NoAssessors.kind(), ErrorKind::Conflict);
        assert_eq!(SessionError::OverrideRequired.kind(), ErrorKind::Validation);
        assert_eq!(
            SessionError::UnknownParticipant(ParticipantId::new("x")).kind(),
            ErrorKind::Forbidden
        );
    }
}
