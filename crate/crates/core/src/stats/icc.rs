use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccResult {
    pub icc: f64,
    /// Two-way random effects, absolute agreement, mean of k raters.
    pub model: String,
    pub ms_rows: f64,
    pub ms_cols: f64,
    pub ms_error: f64,
    pub items: usize,
    pub raters: usize,
}

/// ICC(2,k) of an items × raters matrix.
pub fn icc_2k(ratings: &[Vec<f64>]) -> Result<IccResult, StatsError> {
    let n = ratings.len();
    if n < 2 {
        return Err(StatsError::TooFew { what: "items", needed: 2, got: n });
    }
    let k = ratings[0].len();
    if k < 2 {
        return Err(StatsError::TooFew { what: "raters", needed: 2, got: k });
    }
    if let Some(row) = ratings.iter().find(|r| r.len() != k) {
        return Err(StatsError::LengthMismatch(k, row.len()));
    }
    if ratings.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::MissingCell("non-finite rating".into()));
    }
    let grand = ratings.iter().flatten().sum::<f64>() / (n * k) as f64;
    let ss_total: f64 = ratings.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    if ss_total == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let ss_rows: f64 = ratings.iter().map(|r| (r.iter().sum::<f64>() / k as f64 - grand).powi(2)).sum::<f64>() * k as f64;
    let ss_cols: f64 = (0..k)
        .map(|j| (ratings.iter().map(|r| r[j]).sum::<f64>() / n as f64 - grand).powi(2))
        .sum::<f64>()
        * n as f64;
    let ss_error = (ss_total - ss_rows - ss_cols).max(0.0);
    let ms_rows = ss_rows / (n - 1) as f64;
    let ms_cols = ss_cols / (k - 1) as f64;
    let ms_error = ss_error / ((n - 1) * (k - 1)) as f64;
    let denom = ms_rows + (ms_cols - ms_error) / n as f64;
    if denom == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(IccResult {
        icc: (ms_rows - ms_error) / denom,
        model: "ICC(2,k)".into(),
        ms_rows,
        ms_cols,
        ms_error,
        items: n,
        raters: k,
    })
}
