//! Responses collected in the four observed case studies: each organization's
//! consensus answers (team) and an independent observer's answers for the
//! 16 questionnaire items of model version 1.0.
//!
//! Used as fixtures by the tests, the CLI examples and the browser demo.

use crate::scoring::{Rating, ResponseSheet};

/// Rows are items 1..=16; columns are org1 T, org1 O, org2 T, org2 O, org3 T, org3 O, org4 T, org4 O.
pub const OBSERVED_RESPONSES: [[u8; 8]; 16] = [
    [2, 2, 2, 2, 1, 2, 2, 2],
    [0, 0, 1, 0, 1, 0, 1, 0],
    [0, 0, 1, 0, 1, 0, 0, 0],
    [1, 1, 1, 1, 1, 1, 0, 0],
    [0, 1, 1, 1, 0, 1, 1, 1],
    [1, 0, 2, 1, 2, 1, 1, 1],
    [1, 2, 2, 2, 2, 2, 1, 2],
    [0, 2, 1, 2, 1, 2, 2, 2],
    [1, 1, 2, 1, 2, 1, 1, 0],
    [1, 1, 1, 2, 2, 1, 1, 1],
    [1, 1, 2, 2, 2, 2, 2, 1],
    [1, 2, 2, 2, 2, 2, 2, 1],
    [2, 2, 2, 2, 2, 2, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 2, 0],
    [0, 0, 2, 1, 0, 0, 0, 0],
];

pub const ORGANIZATIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rater {
    Team,
    Observer,
}

fn column(org: usize, rater: Rater) -> usize {
    assert!(
        (1..=ORGANIZATIONS).contains(&org),
        "organization {org} out of 1..=4"
    );
    2 * (org - 1) + usize::from(rater == Rater::Observer)
}

/// Raw 0/1/2 codes for one organization and rater, in item order.
pub fn codes(org: usize, rater: Rater) -> Vec<u8> {
    let c = column(org, rater);
    OBSERVED_RESPONSES.iter().map(|row| row[c]).collect()
}

pub fn ratings(org: usize, rater: Rater) -> Vec<Rating> {
    codes(org, rater)
        .into_iter()
        .map(|v| Rating::from_value(u32::from(v)).expect("codes are 0..=2"))
        .collect()
}

pub fn sheet(org: usize, rater: Rater) -> ResponseSheet {
    let who = match rater {
        Rater::Team => "team",
        Rater::Observer => "observer",
    };
    ResponseSheet::from_ordered("1.0", format!("org{org} {who}"), &ratings(org, rater))
}

/// Respondents x items matrix (8 rows: every column of the table as one respondent).
pub fn item_matrix() -> Vec<Vec<f64>> {
    (0..8)
        .map(|c| {
            OBSERVED_RESPONSES
                .iter()
                .map(|row| f64::from(row[c]))
                .collect()
        })
        .collect()
}
