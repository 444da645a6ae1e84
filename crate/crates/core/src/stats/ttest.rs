use serde::{Deserialize, Serialize};

use super::special::{t_quantile, t_two_sided_p};
use super::StatsError;

/// Sample mean, standard deviation (n − 1) and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Summary, StatsError> {
        let n = values.len();
        if n < 2 {
            return Err(StatsError::TooFew { what: "values", needed: 2, got: n });
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Summary { mean, sd: var.sqrt(), n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
    pub mean: f64,
    pub se: f64,
    /// 95 % confidence interval of the mean.
    pub ci95: (f64, f64),
}

pub fn one_sample_t(summary: Summary, mu: f64) -> Result<TTest, StatsError> {
    if summary.n < 2 {
        return Err(StatsError::TooFew { what: "values", needed: 2, got: summary.n });
    }
    if !(summary.sd > 0.0) {
        return Err(StatsError::ZeroVariance);
    }
    let df = (summary.n - 1) as f64;
    let se = summary.sd / (summary.n as f64).sqrt();
    let t = (summary.mean - mu) / se;
    let half = t_quantile(0.975, df) * se;
    Ok(TTest {
        t,
        df,
        p: t_two_sided_p(t, df),
        mean: summary.mean,
        se,
        ci95: (summary.mean - half, summary.mean + half),
    })
}

pub fn one_sample_t_values(values: &[f64], mu: f64) -> Result<TTest, StatsError> {
    one_sample_t(Summary::of(values)?, mu)
}

/// Paired t-test on `a − b`.
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = Summary::of(&diffs)?;
    if s.sd == 0.0 && s.mean == 0.0 {
        let df = (s.n - 1) as f64;
        return Ok(TTest { t: 0.0, df, p: 1.0, mean: 0.0, se: 0.0, ci95: (0.0, 0.0) });
    }
    one_sample_t(s, 0.0)
}
