use serde::{Deserialize, Serialize};

use super::ttest::{one_sample_t, Summary, TTest};
use super::StatsError;

/// Items in questionnaire order: six S1 items, five S2 items, then the
/// three reverse-scored S3 items.
pub const NARS_ITEMS: usize = 14;
const S1: std::ops::Range<usize> = 0..6;
const S2: std::ops::Range<usize> = 6..11;
const S3: std::ops::Range<usize> = 11..14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarsScore {
    pub s1: u32,
    pub s2: u32,
    pub s3: u32,
}

impl NarsScore {
    /// Subscale totals of a respondent answering 3 throughout.
    pub const NEUTRAL: NarsScore = NarsScore { s1: 18, s2: 15, s3: 9 };
}

pub fn nars_score(items: &[u8]) -> Result<NarsScore, StatsError> {
    if items.len() != NARS_ITEMS {
        return Err(StatsError::Invalid(format!("expected {NARS_ITEMS} items, got {}", items.len())));
    }
    if let Some(bad) = items.iter().find(|v| !(1..=5).contains(*v)) {
        return Err(StatsError::Invalid(format!("item value {bad} outside 1..=5")));
    }
    let sum = |r: std::ops::Range<usize>| items[r].iter().map(|&v| u32::from(v)).sum::<u32>();
    let reversed = items[S3].iter().map(|&v| 6 - u32::from(v)).sum();
    Ok(NarsScore { s1: sum(S1), s2: sum(S2), s3: reversed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarsRow {
    pub subscale: String,
    pub expected: f64,
    pub summary: Summary,
    pub test: TTest,
}

/// One-sample t-test of each subscale against its neutral total.
pub fn nars_table(scores: &[NarsScore]) -> Result<Vec<NarsRow>, StatsError> {
    let n = NarsScore::NEUTRAL;
    let columns: [(&str, u32, fn(&NarsScore) -> u32); 3] =
        [("S1", n.s1, |s| s.s1), ("S2", n.s2, |s| s.s2), ("S3", n.s3, |s| s.s3)];
    columns
        .iter()
        .map(|(name, expected, get)| {
            let values: Vec<f64> = scores.iter().map(|s| get(s) as f64).collect();
            let summary = Summary::of(&values)?;
            Ok(NarsRow {
                subscale: name.to_string(),
                expected: *expected as f64,
                summary,
                test: one_sample_t(summary, *expected as f64)?,
            })
        })
        .collect()
}
