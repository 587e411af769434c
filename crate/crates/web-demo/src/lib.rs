//! Browser demo: score a profile, compare two raters and check internal
//! consistency without a server.
//!
//! Each operation takes plain text and returns JSON. The `*_js` wrappers are
//! the wasm-bindgen exports; the plain functions are what the tests drive.

use serde::Serialize;
use upcase_core::stats::{
    cronbach_alpha, kappa_row, parse_matrix_csv, parse_pair_csv, KappaRow, StatsError, CATEGORIES,
};
use upcase_core::{build_profile, Rating, ReferenceModel, ResponseSheet};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize, PartialEq)]
pub struct ProfileRow {
    pub process: String,
    pub score: String,
    pub rating: char,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct ProfileSummary {
    pub rows: Vec<ProfileRow>,
    pub capability_level: u8,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct AlphaSummary {
    pub alpha: Option<f64>,
    pub k: usize,
    pub note: Option<String>,
    pub alpha_if_deleted: Vec<(usize, Option<f64>)>,
}

/// Scores sixteen ratings given as N/P/F letters or 0/1/2 codes, separated by
/// whitespace or commas, in indicator order.
pub fn score_profile(ratings: &str) -> Result<ProfileSummary, String> {
    let parsed = ratings
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<Rating>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let model = ReferenceModel::canonical();
    let sheet = ResponseSheet::from_ordered(model.version.clone(), "demo", &parsed);
    let profile = build_profile(&sheet, &model).map_err(|e| e.to_string())?;
    let mut rows = vec![ProfileRow {
        process: "Usability process".into(),
        score: profile.overall.display_compact(),
        rating: profile.overall_rating.letter(),
    }];
    rows.extend(profile.per_sub_process.iter().map(|(id, r)| ProfileRow {
        process: id.to_string(),
        score: r.score.display_compact(),
        rating: r.rating.letter(),
    }));
    Ok(ProfileSummary {
        rows,
        capability_level: profile.capability_level,
    })
}

/// Kappa under every weighting for a two-column CSV of codes 0..2.
pub fn kappa_all(csv: &str) -> Result<KappaRow, String> {
    let (a, b) = parse_pair_csv(csv).map_err(|e| e.to_string())?;
    kappa_row("pair", &a, &b, CATEGORIES).map_err(|e| e.to_string())
}

/// Cronbach's alpha and alpha-if-item-deleted for a respondents x items CSV.
pub fn alpha(csv: &str) -> Result<AlphaSummary, String> {
    let matrix = parse_matrix_csv(csv).map_err(|e| e.to_string())?;
    match cronbach_alpha(&matrix) {
        Ok(r) => Ok(AlphaSummary {
            alpha: Some(r.alpha),
            k: r.k,
            note: None,
            alpha_if_deleted: r.alpha_if_deleted.into_iter().collect(),
        }),
        Err(StatsError::Indeterminate(why)) => Ok(AlphaSummary {
            alpha: None,
            k: matrix.first().map_or(0, Vec::len),
            note: Some(why),
            alpha_if_deleted: Vec::new(),
        }),
        Err(e) => Err(e.to_string()),
    }
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = scoreProfile)]
pub fn score_profile_js(ratings: &str) -> Result<String, JsError> {
    to_js(score_profile(ratings))
}

#[wasm_bindgen(js_name = kappaAll)]
pub fn kappa_all_js(csv: &str) -> Result<String, JsError> {
    to_js(kappa_all(csv))
}

#[wasm_bindgen(js_name = alpha)]
pub fn alpha_js(csv: &str) -> Result<String, JsError> {
    to_js(alpha(csv))
}
