//! Self-assessment of usability process capability for small organizations.
//!
//! - [`model`]: process reference model and assessment model as loadable data
//! - [`scoring`]: rating scale, achievement percentages and process profiles
//! - [`stats`]: kappa, intraclass correlation and Cronbach's alpha
//! - [`session`]: event-sourced assessment meetings with assessment poker
//! - [`report`]: strengths, weaknesses and improvement opportunities
//! - [`store`]: file-backed persistence of sessions and finalized assessments
//!
//! `session` and `store` sit behind the default `sessions` feature. Without it
//! the crate builds for `wasm32-unknown-unknown`.

pub mod casestudy;
pub mod model;
pub mod report;
pub mod scoring;
#[cfg(feature = "sessions")]
pub mod session;
pub mod stats;
#[cfg(feature = "sessions")]
pub mod store;

pub use model::{
    load_reference_model, lookup_indicator, validate_reference_model, ReferenceModel, SubProcessId,
};
pub use report::{generate_results, render_report, AssessmentResults, ReportFormat};
pub use scoring::{build_profile, AchievementPercentage, ProcessProfile, Rating, ResponseSheet};
#[cfg(feature = "sessions")]
pub use session::{
    create_session, AssessmentPlan, AssessmentSession, Participant, ParticipantId, Phase, Role,
};
#[cfg(feature = "sessions")]
pub use store::FileStore;
