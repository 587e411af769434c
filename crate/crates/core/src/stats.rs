//! Reliability and internal-consistency statistics: Cohen's kappa (unweighted,
//! linear and quadratic), intraclass correlation (one-way, two-way consistency,
//! two-way agreement) and Cronbach's alpha with item deletion.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of rating categories on the questionnaire scale (0, 1, 2).
pub const CATEGORIES: usize = 3;

pub const VARIANCE_CONVENTION: &str = "sample variance (n - 1 denominator)";
pub const ICC_ARRANGEMENT: &str =
    "subjects = (item, organization) pairs within the section; raters = {team, observer}";
pub const KAPPA_BANDS: &str = "excellent > 0.75; 0.40 to 0.75 fair to good; poor < 0.40";
pub const ICC_BANDS: &str = "excellent > 0.75; satisfactory 0.40 to 0.75; unsatisfactory < 0.40";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("rating vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("category {value} out of range for {k} categories")]
    CategoryOutOfRange { value: u32, k: usize },
    #[error("no observations")]
    Empty,
    #[error("indeterminate: {0}")]
    Indeterminate(String),
    #[error("bad dimensions: {0}")]
    Dimension(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// One rater's ordinal codes over a list of items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingVector {
    pub label: String,
    pub values: Vec<u32>,
}

impl RatingVector {
    pub fn new(label: impl Into<String>, values: Vec<u32>) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::Empty);
        }
        if let Some(&value) = values.iter().find(|&&v| v as usize >= CATEGORIES) {
            return Err(StatsError::CategoryOutOfRange {
                value,
                k: CATEGORIES,
            });
        }
        Ok(Self {
            label: label.into(),
            values,
        })
    }

    pub fn from_codes(label: impl Into<String>, codes: &[u8]) -> Result<Self, StatsError> {
        Self::new(label, codes.iter().map(|&c| u32::from(c)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, StatsError> {
        let k = counts.len();
        if k == 0 || counts.iter().any(|row| row.len() != k) {
            return Err(StatsError::Dimension(
                "contingency table must be square".into(),
            ));
        }
        let n = counts.iter().flatten().sum();
        if n == 0 {
            return Err(StatsError::Empty);
        }
        Ok(Self { counts, n })
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn contingency_table(
    a: &RatingVector,
    b: &RatingVector,
    k: usize,
) -> Result<ContingencyTable, StatsError> {
    if a.values.len() != b.values.len() {
        return Err(StatsError::LengthMismatch(a.values.len(), b.values.len()));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (&x, &y) in a.values.iter().zip(&b.values) {
        for v in [x, y] {
            if v as usize >= k {
                return Err(StatsError::CategoryOutOfRange { value: v, k });
            }
        }
        counts[x as usize][y as usize] += 1;
    }
    ContingencyTable::from_counts(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    None,
    Linear,
    Quadratic,
}

impl Weighting {
    pub const ALL: [Weighting; 3] = [Weighting::None, Weighting::Linear, Weighting::Quadratic];

    /// Disagreement weight between categories `i` and `j`.
    pub fn disagreement(self, i: usize, j: usize) -> f64 {
        let d = i.abs_diff(j) as f64;
        match self {
            Weighting::None => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            Weighting::Linear => d,
            Weighting::Quadratic => d * d,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::None => "none",
            Weighting::Linear => "linear",
            Weighting::Quadratic => "quadratic",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weighting {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "unweighted" => Ok(Weighting::None),
            "linear" => Ok(Weighting::Linear),
            "quadratic" => Ok(Weighting::Quadratic),
            other => Err(StatsError::Malformed(format!(
                "unknown weighting {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaBand {
    Poor,
    FairToGood,
    Excellent,
}

impl KappaBand {
    pub fn of(kappa: f64) -> Self {
        if kappa > 0.75 {
            KappaBand::Excellent
        } else if kappa >= 0.40 {
            KappaBand::FairToGood
        } else {
            KappaBand::Poor
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KappaBand::Poor => "poor",
            KappaBand::FairToGood => "fair to good",
            KappaBand::Excellent => "excellent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub coefficient: f64,
    pub weighting: Weighting,
    pub band: KappaBand,
}

/// `1 - sum(w * observed) / sum(w * expected)` over cell proportions.
pub fn cohen_kappa(
    table: &ContingencyTable,
    weighting: Weighting,
) -> Result<KappaResult, StatsError> {
    if table.n == 0 {
        return Err(StatsError::Empty);
    }
    let k = table.k();
    let n = table.n as f64;
    let rows: Vec<f64> = table
        .counts
        .iter()
        .map(|r| r.iter().sum::<u64>() as f64 / n)
        .collect();
    let cols: Vec<f64> = (0..k)
        .map(|j| table.counts.iter().map(|r| r[j]).sum::<u64>() as f64 / n)
        .collect();

    let mut observed = 0.0;
    let mut expected = 0.0;
    for i in 0..k {
        for j in 0..k {
            let w = weighting.disagreement(i, j);
            observed += w * table.counts[i][j] as f64 / n;
            expected += w * rows[i] * cols[j];
        }
    }
    if expected == 0.0 {
        return Err(StatsError::Indeterminate(
            "expected disagreement is zero (both raters constant)".into(),
        ));
    }
    let coefficient = 1.0 - observed / expected;
    Ok(KappaResult {
        coefficient,
        weighting,
        band: KappaBand::of(coefficient),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IccVariant {
    #[serde(rename = "oneway_1_1", alias = "oneway")]
    OneWay,
    #[serde(rename = "twoway_consistency_3_1", alias = "consistency")]
    TwoWayConsistency,
    #[serde(rename = "twoway_agreement_2_1", alias = "agreement")]
    TwoWayAgreement,
}

impl IccVariant {
    pub const ALL: [IccVariant; 3] = [
        IccVariant::OneWay,
        IccVariant::TwoWayConsistency,
        IccVariant::TwoWayAgreement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IccVariant::OneWay => "oneway_1_1",
            IccVariant::TwoWayConsistency => "twoway_consistency_3_1",
            IccVariant::TwoWayAgreement => "twoway_agreement_2_1",
        }
    }
}

impl fmt::Display for IccVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IccVariant {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oneway" | "oneway_1_1" | "1,1" | "icc1" => Ok(IccVariant::OneWay),
            "consistency" | "twoway_consistency_3_1" | "3,1" | "icc3" => {
                Ok(IccVariant::TwoWayConsistency)
            }
            "agreement" | "twoway_agreement_2_1" | "2,1" | "icc2" => {
                Ok(IccVariant::TwoWayAgreement)
            }
            other => Err(StatsError::Malformed(format!(
                "unknown ICC variant {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IccBand {
    Unsatisfactory,
    Satisfactory,
    Excellent,
}

impl IccBand {
    pub fn of(icc: f64) -> Self {
        if icc > 0.75 {
            IccBand::Excellent
        } else if icc >= 0.40 {
            IccBand::Satisfactory
        } else {
            IccBand::Unsatisfactory
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            IccBand::Unsatisfactory => "unsatisfactory",
            IccBand::Satisfactory => "satisfactory",
            IccBand::Excellent => "excellent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccResult {
    pub coefficient: Option<f64>,
    pub variant: IccVariant,
    pub defined: bool,
    pub band: Option<IccBand>,
}

impl IccResult {
    fn undefined(variant: IccVariant) -> Self {
        Self {
            coefficient: None,
            variant,
            defined: false,
            band: None,
        }
    }

    fn value(variant: IccVariant, coefficient: f64) -> Self {
        Self {
            coefficient: Some(coefficient),
            variant,
            defined: true,
            band: Some(IccBand::of(coefficient)),
        }
    }
}

/// Mean squares of the two-way ANOVA decomposition of a subjects x raters matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaTable {
    pub subjects: usize,
    pub raters: usize,
    /// Between subjects.
    pub msb: f64,
    /// Within subjects (one-way residual).
    pub msw: f64,
    /// Between raters.
    pub msc: f64,
    /// Two-way residual.
    pub mse: f64,
    pub ss_total: f64,
}

// Sum of squared deviations from the mean, via pairwise differences so that
// identical values contribute exactly zero.
fn pairwise_ss(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let d = values[i] - values[j];
            acc += d * d;
        }
    }
    acc / values.len() as f64
}

pub fn anova(matrix: &[Vec<f64>]) -> Result<AnovaTable, StatsError> {
    let n = matrix.len();
    if n < 2 {
        return Err(StatsError::Dimension(format!(
            "need at least 2 subjects, got {n}"
        )));
    }
    let k = matrix[0].len();
    if k < 2 {
        return Err(StatsError::Dimension(format!(
            "need at least 2 raters, got {k}"
        )));
    }
    if let Some(bad) = matrix.iter().position(|row| row.len() != k) {
        return Err(StatsError::Dimension(format!(
            "row {} has {} cells, expected {k}",
            bad + 1,
            matrix[bad].len()
        )));
    }
    if matrix.iter().flatten().any(|x| !x.is_finite()) {
        return Err(StatsError::Dimension(
            "matrix contains missing or non-finite cells".into(),
        ));
    }

    let (nf, kf) = (n as f64, k as f64);
    let row_means: Vec<f64> = matrix.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| matrix.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();

    let ssb = kf * pairwise_ss(&row_means);
    let ssc = nf * pairwise_ss(&col_means);
    let ssw: f64 = matrix.iter().map(|r| pairwise_ss(r)).sum();
    let sse = (ssw - ssc).max(0.0);
    let ss_total = ssb + ssw;

    Ok(AnovaTable {
        subjects: n,
        raters: k,
        msb: ssb / (nf - 1.0),
        msw: ssw / (nf * (kf - 1.0)),
        msc: ssc / (kf - 1.0),
        mse: sse / ((nf - 1.0) * (kf - 1.0)),
        ss_total,
    })
}

/// Intraclass correlation; indeterminate estimators come back with `defined = false`.
pub fn icc(matrix: &[Vec<f64>], variant: IccVariant) -> Result<IccResult, StatsError> {
    let t = anova(matrix)?;
    if t.ss_total == 0.0 {
        return Ok(IccResult::undefined(variant));
    }
    let kf = t.raters as f64;
    let nf = t.subjects as f64;
    let (num, den) = match variant {
        IccVariant::OneWay => (t.msb - t.msw, t.msb + (kf - 1.0) * t.msw),
        IccVariant::TwoWayConsistency => (t.msb - t.mse, t.msb + (kf - 1.0) * t.mse),
        IccVariant::TwoWayAgreement => (
            t.msb - t.mse,
            t.msb + (kf - 1.0) * t.mse + kf * (t.msc - t.mse) / nf,
        ),
    };
    if den.abs() <= f64::EPSILON * t.ss_total {
        return Ok(IccResult::undefined(variant));
    }
    Ok(IccResult::value(variant, num / den))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: f64,
    pub k: usize,
    /// Alpha recomputed without each item (1-based item position). `None` where
    /// the reduced instrument has fewer than two items or no total variance.
    pub alpha_if_deleted: BTreeMap<usize, Option<f64>>,
    pub variance_convention: String,
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn alpha_of(matrix: &[Vec<f64>], items: &[usize]) -> Result<f64, StatsError> {
    let k = items.len();
    if k < 2 {
        return Err(StatsError::Dimension(format!(
            "need at least 2 items, got {k}"
        )));
    }
    let item_var: f64 = items
        .iter()
        .map(|&j| sample_variance(&matrix.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = matrix
        .iter()
        .map(|r| items.iter().map(|&j| r[j]).sum())
        .collect();
    let total_var = sample_variance(&totals);
    if total_var == 0.0 {
        return Err(StatsError::Indeterminate(
            "respondent totals have zero variance".into(),
        ));
    }
    let kf = k as f64;
    Ok(kf / (kf - 1.0) * (1.0 - item_var / total_var))
}

/// Cronbach's alpha over a respondents x items matrix, plus the item-deletion table.
pub fn cronbach_alpha(matrix: &[Vec<f64>]) -> Result<AlphaResult, StatsError> {
    let n = matrix.len();
    if n < 2 {
        return Err(StatsError::Dimension(format!(
            "need at least 2 respondents, got {n}"
        )));
    }
    let k = matrix[0].len();
    if let Some(bad) = matrix.iter().position(|row| row.len() != k) {
        return Err(StatsError::Dimension(format!(
            "respondent {} has {} items, expected {k}",
            bad + 1,
            matrix[bad].len()
        )));
    }
    let all: Vec<usize> = (0..k).collect();
    let alpha = alpha_of(matrix, &all)?;
    let alpha_if_deleted = (0..k)
        .map(|drop| {
            let rest: Vec<usize> = all.iter().copied().filter(|&j| j != drop).collect();
            (drop + 1, alpha_of(matrix, &rest).ok())
        })
        .collect();
    Ok(AlphaResult {
        alpha,
        k,
        alpha_if_deleted,
        variance_convention: VARIANCE_CONVENTION.to_string(),
    })
}

/// Kappa for one pair of raters under one weighting; `None` when indeterminate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaEntry {
    pub weighting: Weighting,
    pub coefficient: Option<f64>,
    pub band: Option<KappaBand>,
    pub defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub label: String,
    pub n: u64,
    pub agreements: u64,
    pub entries: Vec<KappaEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccRow {
    pub section: String,
    pub subjects: usize,
    pub results: Vec<IccResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub kappa_default_weighting: Weighting,
    pub kappa_bands: String,
    pub icc_bands: String,
    pub icc_arrangement: String,
    pub variance_convention: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub kappa: Vec<KappaRow>,
    pub icc: Vec<IccRow>,
    pub alpha: Option<AlphaResult>,
    /// Set when alpha could not be computed (for example zero total variance).
    pub alpha_note: Option<String>,
    pub metadata: ReportMetadata,
}

/// A named group of item positions (0-based) within the rating vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub label: String,
    pub items: Vec<usize>,
}

/// Bundles kappa for every pair, section-wise ICC and alpha into one document.
/// Kappa under every weighting for one rater pair; indeterminate coefficients are
/// reported as undefined entries rather than errors.
pub fn kappa_row(
    label: &str,
    a: &RatingVector,
    b: &RatingVector,
    k: usize,
) -> Result<KappaRow, StatsError> {
    let table = contingency_table(a, b, k)?;
    let entries = Weighting::ALL
        .iter()
        .map(|&w| match cohen_kappa(&table, w) {
            Ok(r) => Ok(KappaEntry {
                weighting: w,
                coefficient: Some(r.coefficient),
                band: Some(r.band),
                defined: true,
            }),
            Err(StatsError::Indeterminate(_)) => Ok(KappaEntry {
                weighting: w,
                coefficient: None,
                band: None,
                defined: false,
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(KappaRow {
        label: label.to_string(),
        n: table.n,
        agreements: table.diagonal(),
        entries,
    })
}

pub fn reliability_report(
    pairs: &[(String, RatingVector, RatingVector)],
    sections: &[Section],
    item_matrix: Option<&[Vec<f64>]>,
) -> Result<ReliabilityReport, StatsError> {
    let kappa = pairs
        .iter()
        .map(|(label, a, b)| kappa_row(label, a, b, CATEGORIES))
        .collect::<Result<Vec<_>, _>>()?;

    let mut icc_rows = Vec::new();
    if !pairs.is_empty() {
        for section in sections {
            let mut matrix = Vec::new();
            for &item in &section.items {
                for (_, a, b) in pairs {
                    let (Some(&x), Some(&y)) = (a.values.get(item), b.values.get(item)) else {
                        return Err(StatsError::Dimension(format!(
                            "section {} references item position {item} beyond the rating vectors",
                            section.label
                        )));
                    };
                    matrix.push(vec![f64::from(x), f64::from(y)]);
                }
            }
            let results = IccVariant::ALL
                .iter()
                .map(|&v| icc(&matrix, v))
                .collect::<Result<Vec<_>, _>>()?;
            icc_rows.push(IccRow {
                section: section.label.clone(),
                subjects: matrix.len(),
                results,
            });
        }
    }

    let (alpha, alpha_note) = match item_matrix {
        None => (None, None),
        Some(m) => match cronbach_alpha(m) {
            Ok(a) => (Some(a), None),
            Err(StatsError::Indeterminate(msg)) => (None, Some(format!("undefined: {msg}"))),
            Err(e) => return Err(e),
        },
    };

    Ok(ReliabilityReport {
        kappa,
        icc: icc_rows,
        alpha,
        alpha_note,
        metadata: ReportMetadata {
            kappa_default_weighting: Weighting::Linear,
            kappa_bands: KAPPA_BANDS.to_string(),
            icc_bands: ICC_BANDS.to_string(),
            icc_arrangement: ICC_ARRANGEMENT.to_string(),
            variance_convention: VARIANCE_CONVENTION.to_string(),
        },
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}"))
        .unwrap_or_else(|| "undefined".to_string())
}

impl ReliabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::from("# Reliability report\n\n## Weighted kappa\n\n");
        md.push_str(&format!("Bands: {}.\n\n", self.metadata.kappa_bands));
        if self.kappa.is_empty() {
            md.push_str("_No rater pairs supplied._\n");
        } else {
            md.push_str(
                "| Pair | n | Agreements | Unweighted | Linear | Quadratic | Band (linear) |\n",
            );
            md.push_str("|---|---|---|---|---|---|---|\n");
            for row in &self.kappa {
                let get = |w| row.entries.iter().find(|e| e.weighting == w);
                let band = get(Weighting::Linear)
                    .and_then(|e| e.band)
                    .map(KappaBand::label)
                    .unwrap_or("undefined");
                md.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} | {} |\n",
                    row.label,
                    row.n,
                    row.agreements,
                    fmt_opt(get(Weighting::None).and_then(|e| e.coefficient)),
                    fmt_opt(get(Weighting::Linear).and_then(|e| e.coefficient)),
                    fmt_opt(get(Weighting::Quadratic).and_then(|e| e.coefficient)),
                    band
                ));
            }
        }

        md.push_str("\n## Intraclass correlation\n\n");
        md.push_str(&format!(
            "Arrangement: {}. Bands: {}.\n\n",
            self.metadata.icc_arrangement, self.metadata.icc_bands
        ));
        if !self.icc.is_empty() {
            md.push_str(
                "| Section | Subjects | ICC(1,1) | ICC(3,1) | ICC(2,1) |\n|---|---|---|---|---|\n",
            );
            for row in &self.icc {
                let get = |v| {
                    row.results
                        .iter()
                        .find(|r| r.variant == v)
                        .and_then(|r| r.coefficient)
                };
                md.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    row.section,
                    row.subjects,
                    fmt_opt(get(IccVariant::OneWay)),
                    fmt_opt(get(IccVariant::TwoWayConsistency)),
                    fmt_opt(get(IccVariant::TwoWayAgreement)),
                ));
            }
        }

        md.push_str("\n## Cronbach's alpha\n\n");
        match (&self.alpha, &self.alpha_note) {
            (Some(a), _) => {
                md.push_str(&format!(
                    "alpha = {:.4} over {} items ({}).\n\n| Item removed | alpha |\n|---|---|\n",
                    a.alpha, a.k, a.variance_convention
                ));
                for (item, v) in &a.alpha_if_deleted {
                    md.push_str(&format!("| {item} | {} |\n", fmt_opt(*v)));
                }
            }
            (None, Some(note)) => md.push_str(&format!("{note}\n")),
            (None, None) => md.push_str("_No item matrix supplied._\n"),
        }
        md
    }
}

fn parse_rows(text: &str) -> Result<Vec<Vec<String>>, StatsError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| StatsError::Malformed(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn drop_header(rows: &mut Vec<Vec<String>>) {
    if let Some(first) = rows.first() {
        if first.iter().any(|f| f.parse::<f64>().is_err()) {
            rows.remove(0);
        }
    }
}

/// Numeric CSV matrix; a non-numeric first row is treated as a header.
pub fn parse_matrix_csv(text: &str) -> Result<Vec<Vec<f64>>, StatsError> {
    let mut rows = parse_rows(text)?;
    drop_header(&mut rows);
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        StatsError::Malformed(format!("row {}: {f:?} is not a number", i + 1))
                    })
                })
                .collect()
        })
        .collect()
}

/// Two-column CSV, one row per item: first rater's code, second rater's code.
pub fn parse_pair_csv(text: &str) -> Result<(RatingVector, RatingVector), StatsError> {
    let mut rows = parse_rows(text)?;
    let mut labels = ("a".to_string(), "b".to_string());
    if let Some(first) = rows.first() {
        if first.len() == 2 && first.iter().any(|f| f.parse::<u32>().is_err()) {
            labels = (first[0].clone(), first[1].clone());
            rows.remove(0);
        }
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 2 {
            return Err(StatsError::Malformed(format!(
                "row {}: expected 2 columns, found {}",
                i + 1,
                row.len()
            )));
        }
        let parse = |f: &str| {
            f.parse::<u32>().map_err(|_| {
                StatsError::Malformed(format!("row {}: {f:?} is not a category code", i + 1))
            })
        };
        a.push(parse(&row[0])?);
        b.push(parse(&row[1])?);
    }
    Ok((
        RatingVector::new(labels.0, a)?,
        RatingVector::new(labels.1, b)?,
    ))
}
