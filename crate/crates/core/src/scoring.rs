//! Measurement framework: rating scale, achievement percentages, attribute
//! ratings and the process profile.
//!
//! Achievement percentages are kept as exact rationals. A percentage for `n`
//! indicators is `sum / (2n) * 100`, so the denominator always divides `2n`
//! and no rounding happens until presentation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{ReferenceModel, SubProcessId};

/// Three-point rating scale. Ordering follows the numeric encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rating {
    /// Not achieved.
    N,
    /// Partially achieved.
    P,
    /// Fully achieved.
    F,
}

impl Rating {
    pub const ALL: [Rating; 3] = [Rating::N, Rating::P, Rating::F];

    pub fn value(self) -> u32 {
        rating_value(self)
    }

    pub fn from_value(v: u32) -> Option<Rating> {
        match v {
            0 => Some(Rating::N),
            1 => Some(Rating::P),
            2 => Some(Rating::F),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Rating::N => 'N',
            Rating::P => 'P',
            Rating::F => 'F',
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Rating::N => "Not achieved",
            Rating::P => "Partially achieved",
            Rating::F => "Fully achieved",
        }
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Rating {
    type Err = ScoringError;

    /// Accepts the letters N/P/F or the numeric codes 0/1/2.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "N" | "0" => Ok(Rating::N),
            "P" | "1" => Ok(Rating::P),
            "F" | "2" => Ok(Rating::F),
            other => Err(ScoringError::InvalidRating(other.to_string())),
        }
    }
}

pub fn rating_value(r: Rating) -> u32 {
    match r {
        Rating::N => 0,
        Rating::P => 1,
        Rating::F => 2,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoringError {
    #[error("cannot compute an achievement percentage over zero indicators")]
    Empty,
    #[error("percentage {0} outside [0, 100]")]
    OutOfRange(String),
    #[error("unknown sub-process: {0}")]
    UnknownSubProcess(SubProcessId),
    #[error("missing ratings for items: {0:?}")]
    Incomplete(Vec<u32>),
    #[error("ratings for items not in model: {0:?}")]
    UnknownItems(Vec<u32>),
    #[error("sheet is for model version {sheet}, model is {model}")]
    VersionMismatch { sheet: String, model: String },
    #[error("invalid rating: {0:?}")]
    InvalidRating(String),
    #[error("malformed response sheet: {0}")]
    Malformed(String),
}

/// An exact achievement percentage in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AchievementPercentage(Ratio<u64>);

impl AchievementPercentage {
    pub fn new(value: Ratio<u64>) -> Result<Self, ScoringError> {
        if value > Ratio::from_integer(100) {
            return Err(ScoringError::OutOfRange(value.to_string()));
        }
        Ok(Self(value))
    }

    pub fn from_integer(v: u64) -> Result<Self, ScoringError> {
        Self::new(Ratio::from_integer(v))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn as_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Two-decimal presentation, half away from zero on the exact value.
    pub fn display_2dp(&self) -> String {
        let hundredths = self.0 * Ratio::from_integer(100);
        let rounded = hundredths.round().to_integer();
        format!("{}.{:02}", rounded / 100, rounded % 100)
    }

    /// Two-decimal rounding with trailing zeros dropped: `90`, `62.5`, `34.38`.
    pub fn display_compact(&self) -> String {
        let s = self.display_2dp();
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl fmt::Display for AchievementPercentage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_2dp())
    }
}

#[derive(Serialize, Deserialize)]
struct PercentageRepr {
    value: f64,
    exact: String,
}

impl Serialize for AchievementPercentage {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PercentageRepr {
            value: self.as_f64(),
            exact: format!("{}/{}", self.0.numer(), self.0.denom()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AchievementPercentage {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = PercentageRepr::deserialize(d)?;
        let (n, den) = repr
            .exact
            .split_once('/')
            .ok_or_else(|| D::Error::custom("exact percentage must be n/d"))?;
        let n: u64 = n.trim().parse().map_err(D::Error::custom)?;
        let den: u64 = den.trim().parse().map_err(D::Error::custom)?;
        if den == 0 {
            return Err(D::Error::custom("zero denominator"));
        }
        AchievementPercentage::new(Ratio::new(n, den)).map_err(D::Error::custom)
    }
}

/// `(sum of rating values) / (2 * count) * 100`, exactly.
pub fn achievement_percentage(ratings: &[Rating]) -> Result<AchievementPercentage, ScoringError> {
    if ratings.is_empty() {
        return Err(ScoringError::Empty);
    }
    let sum: u64 = ratings.iter().map(|r| u64::from(r.value())).sum();
    let max = 2 * ratings.len() as u64;
    AchievementPercentage::new(Ratio::new(sum * 100, max))
}

/// N on `[0, 15]`, P on `(15, 85]`, F on `(85, 100]`.
pub fn attribute_rating(p: AchievementPercentage) -> Rating {
    let v = p.ratio();
    if v <= Ratio::from_integer(15) {
        Rating::N
    } else if v <= Ratio::from_integer(85) {
        Rating::P
    } else {
        Rating::F
    }
}

/// Same rule over an unchecked real-valued percentage.
pub fn attribute_rating_f64(p: f64) -> Result<Rating, ScoringError> {
    if !(0.0..=100.0).contains(&p) {
        return Err(ScoringError::OutOfRange(p.to_string()));
    }
    Ok(if p <= 15.0 {
        Rating::N
    } else if p <= 85.0 {
        Rating::P
    } else {
        Rating::F
    })
}

/// Level 1 (performed) needs the overall attribute fully achieved.
pub fn capability_level(overall_rating: Rating) -> u8 {
    match overall_rating {
        Rating::F => 1,
        Rating::N | Rating::P => 0,
    }
}

/// One organization's (or one rater's) answers to the questionnaire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSheet {
    pub model_version: String,
    pub respondent_label: String,
    #[serde(with = "id_map")]
    pub ratings: BTreeMap<u32, Rating>,
}

mod id_map {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Rating;

    pub fn serialize<S: Serializer>(m: &BTreeMap<u32, Rating>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, Rating>, D::Error> {
        let raw = BTreeMap::<String, Rating>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<u32>()
                    .map(|id| (id, v))
                    .map_err(|_| D::Error::custom(format!("item id {k:?} is not an integer")))
            })
            .collect()
    }
}

impl ResponseSheet {
    pub fn new(model_version: impl Into<String>, respondent_label: impl Into<String>) -> Self {
        Self {
            model_version: model_version.into(),
            respondent_label: respondent_label.into(),
            ratings: BTreeMap::new(),
        }
    }

    /// Builds a sheet from ratings listed in indicator-id order starting at 1.
    pub fn from_ordered(
        model_version: impl Into<String>,
        respondent_label: impl Into<String>,
        ratings: &[Rating],
    ) -> Self {
        let mut sheet = Self::new(model_version, respondent_label);
        for (i, r) in ratings.iter().enumerate() {
            sheet.ratings.insert(i as u32 + 1, *r);
        }
        sheet
    }

    pub fn from_json(text: &str) -> Result<Self, ScoringError> {
        serde_json::from_str(text).map_err(|e| ScoringError::Malformed(e.to_string()))
    }

    /// Two columns: item id and rating letter (or 0/1/2). A header row is optional.
    pub fn from_csv(
        text: &str,
        model_version: impl Into<String>,
        respondent_label: impl Into<String>,
    ) -> Result<Self, ScoringError> {
        let mut sheet = Self::new(model_version, respondent_label);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| ScoringError::Malformed(e.to_string()))?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            if record.len() != 2 {
                return Err(ScoringError::Malformed(format!(
                    "line {}: expected 2 columns, found {}",
                    line + 1,
                    record.len()
                )));
            }
            let id = match record[0].parse::<u32>() {
                Ok(id) => id,
                Err(_) if line == 0 => continue,
                Err(_) => {
                    return Err(ScoringError::Malformed(format!(
                        "line {}: item id {:?} is not an integer",
                        line + 1,
                        &record[0]
                    )))
                }
            };
            let rating: Rating = record[1].parse()?;
            if sheet.ratings.insert(id, rating).is_some() {
                return Err(ScoringError::Malformed(format!("item {id} rated twice")));
            }
        }
        Ok(sheet)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sheet serializes")
    }

    /// Ratings in indicator-id order.
    pub fn ordered(&self) -> Vec<Rating> {
        self.ratings.values().copied().collect()
    }

    /// Checks that every indicator of the model has exactly one rating and no extras.
    pub fn check_complete(&self, model: &ReferenceModel) -> Result<(), ScoringError> {
        let ids = model.indicator_ids();
        let missing: Vec<u32> = ids
            .iter()
            .copied()
            .filter(|id| !self.ratings.contains_key(id))
            .collect();
        if !missing.is_empty() {
            return Err(ScoringError::Incomplete(missing));
        }
        let unknown: Vec<u32> = self
            .ratings
            .keys()
            .copied()
            .filter(|id| ids.binary_search(id).is_err())
            .collect();
        if !unknown.is_empty() {
            return Err(ScoringError::UnknownItems(unknown));
        }
        Ok(())
    }
}

/// Achievement percentage over the indicators of one sub-process.
pub fn subprocess_score(
    sheet: &ResponseSheet,
    sp: SubProcessId,
    model: &ReferenceModel,
) -> Result<AchievementPercentage, ScoringError> {
    if model.sub_process(sp).is_none() {
        return Err(ScoringError::UnknownSubProcess(sp));
    }
    sheet.check_complete(model)?;
    let ratings: Vec<Rating> = model
        .indicators_of(sp)
        .map(|ind| sheet.ratings[&ind.id])
        .collect();
    achievement_percentage(&ratings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredRating {
    pub score: AchievementPercentage,
    pub rating: Rating,
}

impl ScoredRating {
    pub fn of(score: AchievementPercentage) -> Self {
        Self {
            score,
            rating: attribute_rating(score),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessProfile {
    pub overall: AchievementPercentage,
    pub overall_rating: Rating,
    pub per_sub_process: BTreeMap<SubProcessId, ScoredRating>,
    pub capability_level: u8,
}

impl ProcessProfile {
    /// Sub-processes sharing the lowest score, in id order.
    pub fn lowest_sub_processes(&self) -> Vec<SubProcessId> {
        let min = self.per_sub_process.values().map(|s| s.score).min();
        self.per_sub_process
            .iter()
            .filter(|(_, s)| Some(s.score) == min)
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn highest_sub_processes(&self) -> Vec<SubProcessId> {
        let max = self.per_sub_process.values().map(|s| s.score).max();
        self.per_sub_process
            .iter()
            .filter(|(_, s)| Some(s.score) == max)
            .map(|(id, _)| *id)
            .collect()
    }

    /// Plain-text table: overall row then one row per sub-process.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<18} {:>7} {}\n",
            "Usability process",
            self.overall.display_2dp(),
            self.overall_rating
        );
        for (id, s) in &self.per_sub_process {
            out.push_str(&format!(
                "{:<18} {:>7} {}\n",
                id.as_str(),
                s.score.display_2dp(),
                s.rating
            ));
        }
        out.push_str(&format!("Capability level: {}\n", self.capability_level));
        out
    }
}

/// Scores every sub-process and the whole usability process.
pub fn build_profile(
    sheet: &ResponseSheet,
    model: &ReferenceModel,
) -> Result<ProcessProfile, ScoringError> {
    if sheet.model_version != model.version {
        return Err(ScoringError::VersionMismatch {
            sheet: sheet.model_version.clone(),
            model: model.version.clone(),
        });
    }
    sheet.check_complete(model)?;

    let mut per_sub_process = BTreeMap::new();
    for sp in &model.sub_processes {
        let score = subprocess_score(sheet, sp.id, model)?;
        per_sub_process.insert(sp.id, ScoredRating::of(score));
    }
    let overall = achievement_percentage(&sheet.ordered())?;
    let overall_rating = attribute_rating(overall);
    Ok(ProcessProfile {
        overall,
        overall_rating,
        per_sub_process,
        capability_level: capability_level(overall_rating),
    })
}
