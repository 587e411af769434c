//! Assessment results and their rendering.
//!
//! Results are derived from a consensus response sheet and its profile:
//! items rated F are strengths, N and P are weaknesses, and each weakness
//! becomes an improvement opportunity built from the indicator's practice,
//! description and suggested techniques. Rendering is deterministic.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ReferenceModel, SubProcessId, UNSPECIFIED};
use crate::scoring::{build_profile, ProcessProfile, Rating, ResponseSheet, ScoringError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("profile does not match the response sheet")]
    ProfileMismatch,
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("unknown indicator {0}")]
    UnknownIndicator(u32),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Context of the assessment meeting that produced a response sheet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMetadata {
    pub organization_name: String,
    pub assessment_date: String,
    pub participants: Vec<String>,
    #[serde(default)]
    pub evidence: BTreeMap<u32, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultsMetadata {
    pub organization_name: String,
    pub assessment_date: String,
    pub participants: Vec<String>,
    pub model_version: String,
    pub respondent_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub indicator_id: u32,
    pub sub_process: SubProcessId,
    pub statement: String,
    pub rating: Rating,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImprovementOpportunity {
    pub indicator_id: u32,
    pub sub_process: SubProcessId,
    pub current_rating: Rating,
    pub practice: String,
    pub description: Option<String>,
    pub techniques: Vec<String>,
    pub work_products: Vec<String>,
}

impl ImprovementOpportunity {
    /// One-line recommendation.
    pub fn summary(&self) -> String {
        let mut s = format!("Item {}: {}", self.indicator_id, self.practice);
        if !self.techniques.is_empty() {
            let _ = write!(
                s,
                " Suggested techniques: {}.",
                self.techniques.join(", ").trim_end_matches('.')
            );
        }
        if !self.work_products.is_empty() {
            let _ = write!(
                s,
                " Expected work products: {}.",
                self.work_products.join(", ").trim_end_matches('.')
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentResults {
    pub metadata: ResultsMetadata,
    pub profile: ProcessProfile,
    pub strengths: Vec<Finding>,
    pub weaknesses: Vec<Finding>,
    /// Not-achieved items first, then partially achieved, each in id order.
    pub improvement_opportunities: Vec<ImprovementOpportunity>,
    pub evidence_index: BTreeMap<u32, Vec<String>>,
    /// Items rated F without any supporting evidence.
    pub unvalidated_strengths: Vec<u32>,
    pub lowest_sub_processes: Vec<SubProcessId>,
    pub highest_sub_processes: Vec<SubProcessId>,
}

fn specified(values: &[String]) -> Vec<String> {
    values
        .iter()
        .filter(|v| v.as_str() != UNSPECIFIED)
        .cloned()
        .collect()
}

pub fn generate_results(
    sheet: &ResponseSheet,
    profile: &ProcessProfile,
    model: &ReferenceModel,
    metadata: &SessionMetadata,
) -> Result<AssessmentResults, ReportError> {
    if &build_profile(sheet, model)? != profile {
        return Err(ReportError::ProfileMismatch);
    }

    let mut strengths = Vec::new();
    let mut weaknesses = Vec::new();
    let mut opportunities = Vec::new();
    for (&id, &rating) in &sheet.ratings {
        let ind = model
            .indicators
            .iter()
            .find(|i| i.id == id)
            .ok_or(ReportError::UnknownIndicator(id))?;
        let finding = Finding {
            indicator_id: id,
            sub_process: ind.sub_process,
            statement: ind.statement.clone(),
            rating,
        };
        if rating == Rating::F {
            strengths.push(finding);
        } else {
            weaknesses.push(finding);
            opportunities.push(ImprovementOpportunity {
                indicator_id: id,
                sub_process: ind.sub_process,
                current_rating: rating,
                practice: ind.practice.clone(),
                description: (ind.description != UNSPECIFIED).then(|| ind.description.clone()),
                techniques: specified(&ind.techniques),
                work_products: specified(&ind.work_products),
            });
        }
    }
    opportunities.sort_by_key(|o| (o.current_rating, o.indicator_id));

    let evidence_index: BTreeMap<u32, Vec<String>> = sheet
        .ratings
        .keys()
        .map(|id| (*id, metadata.evidence.get(id).cloned().unwrap_or_default()))
        .collect();
    let unvalidated_strengths = strengths
        .iter()
        .filter(|f| evidence_index[&f.indicator_id].is_empty())
        .map(|f| f.indicator_id)
        .collect();

    Ok(AssessmentResults {
        metadata: ResultsMetadata {
            organization_name: metadata.organization_name.clone(),
            assessment_date: metadata.assessment_date.clone(),
            participants: metadata.participants.clone(),
            model_version: sheet.model_version.clone(),
            respondent_label: sheet.respondent_label.clone(),
        },
        profile: profile.clone(),
        strengths,
        weaknesses,
        improvement_opportunities: opportunities,
        evidence_index,
        unvalidated_strengths,
        lowest_sub_processes: profile.lowest_sub_processes(),
        highest_sub_processes: profile.highest_sub_processes(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Html,
    Json,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "html" => Ok(ReportFormat::Html),
            "json" => Ok(ReportFormat::Json),
            _ => Err(ReportError::UnsupportedFormat(s.to_string())),
        }
    }
}

impl ReportFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "text/markdown; charset=utf-8",
            ReportFormat::Html => "text/html; charset=utf-8",
            ReportFormat::Json => "application/json",
        }
    }
}

pub fn render_report(results: &AssessmentResults, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Markdown => render_markdown(results).into_bytes(),
        ReportFormat::Html => render_html(results).into_bytes(),
        ReportFormat::Json => serde_json::to_vec_pretty(results).expect("results serialize"),
    }
}

/// Rows of the profile table as (process, score, rating).
pub fn profile_rows(profile: &ProcessProfile) -> Vec<(String, String, String)> {
    let mut rows = vec![(
        "Usability process".to_string(),
        profile.overall.display_compact(),
        profile.overall_rating.to_string(),
    )];
    for (id, s) in &profile.per_sub_process {
        rows.push((
            id.to_string(),
            s.score.display_compact(),
            s.rating.to_string(),
        ));
    }
    rows
}

fn sp_list(ids: &[SubProcessId]) -> String {
    ids.iter()
        .map(|s| s.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn summary_lines(r: &AssessmentResults) -> Vec<String> {
    let mut lines = vec![format!(
        "{} improvement opportunities were identified, focused on {}.",
        r.improvement_opportunities.len(),
        sp_list(&r.lowest_sub_processes)
    )];
    for o in r.improvement_opportunities.iter().take(3) {
        lines.push(format!("Priority: {}", o.summary()));
    }
    lines.push(format!(
        "The usability process achieves {}% (rating {}), capability level {}.",
        r.profile.overall.display_compact(),
        r.profile.overall_rating,
        r.profile.capability_level
    ));
    lines.push(format!(
        "{} items are fully achieved; the strongest sub-process is {}.",
        r.strengths.len(),
        sp_list(&r.highest_sub_processes)
    ));
    lines
}

fn render_markdown(r: &AssessmentResults) -> String {
    let m = &r.metadata;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Usability process assessment: {}\n",
        m.organization_name
    );
    let _ = writeln!(out, "- Date: {}", m.assessment_date);
    let _ = writeln!(out, "- Participants: {}", m.participants.join(", "));
    let _ = writeln!(out, "- Model version: {}\n", m.model_version);

    out.push_str("## Summary\n\n");
    for line in summary_lines(r) {
        let _ = writeln!(out, "{line}\n");
    }

    out.push_str("## Process profile\n\n");
    out.push_str("| Process | Score | Rating |\n|---|---|---|\n");
    for (name, score, rating) in profile_rows(&r.profile) {
        let _ = writeln!(out, "| {name} | {score} | {rating} |");
    }
    let _ = writeln!(out, "\nCapability level: {}\n", r.profile.capability_level);

    out.push_str("## Improvement opportunities\n\n");
    for o in &r.improvement_opportunities {
        let _ = writeln!(
            out,
            "### Item {} ({}, rated {})\n",
            o.indicator_id, o.sub_process, o.current_rating
        );
        let _ = writeln!(out, "{}\n", o.practice);
        if let Some(d) = &o.description {
            let _ = writeln!(out, "{d}\n");
        }
        if !o.techniques.is_empty() {
            let _ = writeln!(out, "- Techniques: {}", o.techniques.join(", "));
        }
        if !o.work_products.is_empty() {
            let _ = writeln!(out, "- Work products: {}", o.work_products.join(", "));
        }
        out.push('\n');
    }

    out.push_str("## Weaknesses\n\n");
    for f in &r.weaknesses {
        let _ = writeln!(
            out,
            "- {} ({}, {}): {}",
            f.indicator_id, f.sub_process, f.rating, f.statement
        );
    }
    out.push_str("\n## Strengths\n\n");
    for f in &r.strengths {
        let flag = if r.unvalidated_strengths.contains(&f.indicator_id) {
            " (no evidence recorded)"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "- {} ({}): {}{flag}",
            f.indicator_id, f.sub_process, f.statement
        );
    }

    let with_evidence: Vec<_> = r
        .evidence_index
        .iter()
        .filter(|(_, e)| !e.is_empty())
        .collect();
    if !with_evidence.is_empty() {
        out.push_str("\n## Evidence\n\n");
        for (id, ev) in with_evidence {
            let _ = writeln!(out, "- {id}: {}", ev.join("; "));
        }
    }
    out
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn render_html(r: &AssessmentResults) -> String {
    let m = &r.metadata;
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head><meta charset=\"utf-8\"><title>Usability process assessment: {0}</title></head>\n<body>\n<h1>Usability process assessment: {0}</h1>\n",
        esc(&m.organization_name)
    );
    let _ = writeln!(
        out,
        "<p>Date: {} &middot; Participants: {} &middot; Model version: {}</p>",
        esc(&m.assessment_date),
        esc(&m.participants.join(", ")),
        esc(&m.model_version)
    );
    out.push_str("<h2>Summary</h2>\n");
    for line in summary_lines(r) {
        let _ = writeln!(out, "<p>{}</p>", esc(&line));
    }
    out.push_str("<h2>Process profile</h2>\n<table>\n<tr><th>Process</th><th>Score</th><th>Rating</th></tr>\n");
    for (name, score, rating) in profile_rows(&r.profile) {
        let _ = writeln!(
            out,
            "<tr><td>{}</td><td>{score}</td><td>{rating}</td></tr>",
            esc(&name)
        );
    }
    let _ = writeln!(
        out,
        "</table>\n<p>Capability level: {}</p>",
        r.profile.capability_level
    );

    out.push_str("<h2>Improvement opportunities</h2>\n<ol>\n");
    for o in &r.improvement_opportunities {
        let _ = writeln!(out, "<li>{}</li>", esc(&o.summary()));
    }
    out.push_str("</ol>\n<h2>Weaknesses</h2>\n<ul>\n");
    for f in &r.weaknesses {
        let _ = writeln!(
            out,
            "<li>{} ({}, {}): {}</li>",
            f.indicator_id,
            f.sub_process,
            f.rating,
            esc(&f.statement)
        );
    }
    out.push_str("</ul>\n<h2>Strengths</h2>\n<ul>\n");
    for f in &r.strengths {
        let flag = if r.unvalidated_strengths.contains(&f.indicator_id) {
            " <em>(no evidence recorded)</em>"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "<li>{} ({}): {}{flag}</li>",
            f.indicator_id,
            f.sub_process,
            esc(&f.statement)
        );
    }
    out.push_str("</ul>\n</body>\n</html>\n");
    out
}
