use std::fs;

use upcase_core::casestudy::{codes, Rater};
use upcase_core::report::{generate_results, SessionMetadata};
use upcase_core::session::{
    create_session, AssessmentPlan, AssessmentSession, Participant, ParticipantId, Phase, Role,
};
use upcase_core::store::{AssessmentFilter, FileStore, StoreError};
use upcase_core::{Rating, ReferenceModel};

fn plan(org: &str) -> AssessmentPlan {
    let p = |id: &str, role| Participant {
        id: ParticipantId::new(id),
        display_name: id.to_uppercase(),
        role,
    };
    AssessmentPlan {
        organization_name: org.into(),
        scope_note: "whole team".into(),
        schedule_note: "one morning".into(),
        participants: vec![
            p("mod", Role::Moderator),
            p("a1", Role::Assessor),
            p("a2", Role::Assessor),
        ],
        model_version: "1.0".into(),
    }
}

/// Runs a full meeting where both assessors always agree with the given codes.
fn finished(org: &str, answers: &[u8]) -> AssessmentSession {
    let model = ReferenceModel::canonical();
    let mut s = create_session(plan(org), &model).unwrap();
    let (a1, a2, m) = (
        ParticipantId::new("a1"),
        ParticipantId::new("a2"),
        ParticipantId::new("mod"),
    );
    s.mark_present(&a1).unwrap();
    s.mark_present(&a2).unwrap();
    s.begin_collection().unwrap();
    for &code in answers {
        let r = Rating::from_value(u32::from(code)).unwrap();
        s.cast_vote(&a1, r).unwrap();
        s.cast_vote(&a2, r).unwrap();
        let evidence = if r == Rating::F {
            vec!["minutes".to_string()]
        } else {
            vec![]
        };
        s.record_consensus(&m, r, evidence).unwrap();
    }
    s
}

#[test]
fn finalized_assessment_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let store = FileStore::open(dir.path()).unwrap();
    let model = ReferenceModel::canonical();
    let mut s = finished("Org 4", &codes(4, Rater::Team));
    let (sheet, profile, _) = s.finalize(&model).unwrap();
    let meta = SessionMetadata {
        organization_name: "Org 4".into(),
        assessment_date: "2026-03-01".into(),
        participants: vec!["MOD".into(), "A1".into(), "A2".into()],
        evidence: s.evidence_index(),
    };
    let results = generate_results(&sheet, &profile, &model, &meta).unwrap();
    let snap = store.save_assessment(&s, &results).unwrap();

    let (loaded, loaded_snap) = store.load_assessment(&s.id.0).unwrap();
    assert_eq!(loaded, s);
    assert_eq!(loaded_snap, snap);
    assert_eq!(loaded.response_sheet().unwrap(), sheet);
    assert_eq!(loaded_snap.results.unwrap(), results);
    assert_eq!(loaded_snap.profile.unwrap(), profile);

    // Resaving unchanged content keeps the hash and the stored results.
    let again = store.save_session(&loaded).unwrap();
    assert_eq!(again.events_sha256, snap.events_sha256);
    assert!(again.results.is_some());
}

#[test]
fn corrupt_log_reports_last_valid_seq() {
    let dir = tempfile::tempdir().unwrap();
    let store = FileStore::open(dir.path()).unwrap();
    let s = finished("Org 1", &codes(1, Rater::Team)[..3]);
    store.save_session(&s).unwrap();
    let path = dir
        .path()
        .join("assessments")
        .join(&s.id.0)
        .join("events.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let keep = lines.len() - 2;
    lines[keep] = "{\"seq\": not json";
    fs::write(&path, lines.join("\n")).unwrap();
    match store.load_session(&s.id.0) {
        Err(StoreError::CorruptLog { seq, .. }) => assert_eq!(seq, keep as u64),
        other => panic!("expected corrupt log, got {other:?}"),
    }
    assert!(store.load_assessment(&s.id.0).is_err());
}

#[test]
fn listing_filters_and_sorts() {
    let dir = tempfile::tempdir().unwrap();
    let store = FileStore::open(dir.path()).unwrap();
    let first = finished("Alpha Labs", &[]);
    let second = finished("Beta Soft", &[1, 1]);
    store.save_session(&second).unwrap();
    store.save_session(&first).unwrap();

    let all = store
        .list_assessments(&AssessmentFilter::default())
        .unwrap();
    assert_eq!(all.len(), 2);
    assert_eq!(all[0].id, first.id);
    assert!(all[0].created_at <= all[1].created_at);

    let beta = store
        .list_assessments(&AssessmentFilter {
            organization: Some("beta".into()),
            ..Default::default()
        })
        .unwrap();
    assert_eq!(beta.len(), 1);
    assert_eq!(beta[0].phase, Phase::Collecting);

    let none = store
        .list_assessments(&AssessmentFilter {
            phase: Some(Phase::Closed),
            ..Default::default()
        })
        .unwrap();
    assert!(none.is_empty());
}

#[test]
fn rejects_unknown_and_unsafe_ids() {
    let dir = tempfile::tempdir().unwrap();
    let store = FileStore::open(dir.path()).unwrap();
    assert!(matches!(
        store.load_session("missing"),
        Err(StoreError::NotFound(_))
    ));
    assert!(matches!(
        store.load_session("../etc"),
        Err(StoreError::InvalidId(_))
    ));
}
