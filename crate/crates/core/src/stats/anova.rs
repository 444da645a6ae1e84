use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::{chi2_sf, f_sf};
use super::StatsError;

/// Mauchly p below this triggers the Greenhouse-Geisser correction.
pub const SPHERICITY_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
}

impl Factor {
    pub fn new(name: impl Into<String>, levels: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Factor { name: name.into(), levels: levels.into_iter().map(Into::into).collect() }
    }
}

/// Subjects × cells, cells in row-major order of the factors (last factor
/// varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmDataset {
    pub factors: Vec<Factor>,
    pub subjects: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl RmDataset {
    pub fn new(factors: Vec<Factor>, subjects: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if factors.is_empty() {
            return Err(StatsError::Invalid("no factors".into()));
        }
        if let Some(f) = factors.iter().find(|f| f.levels.len() < 2) {
            return Err(StatsError::Invalid(format!("factor {} needs at least 2 levels", f.name)));
        }
        if subjects.len() != values.len() {
            return Err(StatsError::LengthMismatch(subjects.len(), values.len()));
        }
        let cells: usize = factors.iter().map(|f| f.levels.len()).product();
        for (s, row) in subjects.iter().zip(&values) {
            if row.len() != cells {
                return Err(StatsError::MissingCell(format!("subject {s} has {} of {cells} cells", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::MissingCell(format!("subject {s} has a non-finite cell")));
            }
        }
        Ok(RmDataset { factors, subjects, values })
    }

    pub fn cells(&self) -> usize {
        self.factors.iter().map(|f| f.levels.len()).product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mauchly {
    pub w: f64,
    pub chi2: f64,
    pub df: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectResult {
    pub name: String,
    pub factors: Vec<usize>,
    pub ss_effect: f64,
    pub ss_error: f64,
    pub df_effect: f64,
    pub df_error: f64,
    pub f: f64,
    pub p: f64,
    pub partial_eta_sq: f64,
    pub epsilon_gg: f64,
    pub df_effect_gg: f64,
    pub df_error_gg: f64,
    pub p_gg: f64,
    /// Absent for one-df effects, and when the sample is too small to test.
    pub mauchly: Option<Mauchly>,
    /// Whether the Greenhouse-Geisser values are the ones to report.
    pub corrected: bool,
}

impl EffectResult {
    pub fn reported_p(&self) -> f64 {
        if self.corrected {
            self.p_gg
        } else {
            self.p
        }
    }

    pub fn reported_df(&self) -> (f64, f64) {
        if self.corrected {
            (self.df_effect_gg, self.df_error_gg)
        } else {
            (self.df_effect, self.df_error)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub subjects: usize,
    pub effects: Vec<EffectResult>,
}

impl AnovaTable {
    pub fn effect(&self, name: &str) -> Option<&EffectResult> {
        self.effects.iter().find(|e| e.name == name)
    }
}

/// Orthonormal Helmert contrasts, (levels − 1) × levels.
fn contrasts(levels: usize) -> DMatrix<f64> {
    DMatrix::from_fn(levels - 1, levels, |r, c| {
        let r1 = r + 1;
        let norm = ((r1 * (r1 + 1)) as f64).sqrt();
        if c < r1 {
            1.0 / norm
        } else if c == r1 {
            -(r1 as f64) / norm
        } else {
            0.0
        }
    })
}

fn averaging(levels: usize) -> DMatrix<f64> {
    DMatrix::from_element(1, levels, 1.0 / (levels as f64).sqrt())
}

/// Non-empty factor subsets, mains first, then by size and order.
fn effect_subsets(k: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> =
        (1u32..(1 << k)).map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect()).collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// Greenhouse-Geisser ε of a cell covariance matrix, via double centring.
pub fn gg_epsilon(covariance: &[Vec<f64>]) -> Result<f64, StatsError> {
    let k = covariance.len();
    if k < 2 {
        return Err(StatsError::TooFew { what: "levels", needed: 2, got: k });
    }
    if covariance.iter().any(|r| r.len() != k) {
        return Err(StatsError::Invalid("covariance matrix is not square".into()));
    }
    let scale = covariance.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..k {
        for j in 0..i {
            if (covariance[i][j] - covariance[j][i]).abs() > 1e-9 * scale.max(1.0) {
                return Err(StatsError::Invalid("covariance matrix is not symmetric".into()));
            }
        }
    }
    let row_mean: Vec<f64> = covariance.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / k as f64;
    let centred = |i: usize, j: usize| covariance[i][j] - row_mean[i] - row_mean[j] + grand;
    let trace: f64 = (0..k).map(|i| centred(i, i)).sum();
    let sum_sq: f64 = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| centred(i, j).powi(2)).sum();
    if sum_sq <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((trace * trace / ((k - 1) as f64 * sum_sq)).clamp(1.0 / (k - 1) as f64, 1.0))
}

/// Mauchly's sphericity test on the covariance of orthonormal contrasts
/// from `n` subjects. `None` when the test is undefined (one df, or fewer
/// subjects than needed for a non-singular estimate).
pub fn mauchly(contrast_cov: &DMatrix<f64>, n: usize) -> Option<Mauchly> {
    let p = contrast_cov.nrows();
    if p < 2 || n < p + 1 {
        return None;
    }
    let trace = contrast_cov.trace();
    if trace <= 0.0 {
        return None;
    }
    let w = (contrast_cov.determinant() / (trace / p as f64).powi(p as i32)).clamp(0.0, 1.0);
    let pf = p as f64;
    let factor = (n - 1) as f64 - (2.0 * pf * pf + pf + 2.0) / (6.0 * pf);
    let chi2 = if w > 0.0 { -factor * w.ln() } else { f64::INFINITY };
    let df = pf * (pf + 1.0) / 2.0 - 1.0;
    Some(Mauchly { w, chi2, df, p: chi2_sf(chi2, df) })
}

fn epsilon_of(cov: &DMatrix<f64>) -> f64 {
    let p = cov.nrows() as f64;
    let tr = cov.trace();
    let tr2 = (cov * cov).trace();
    if tr2 <= 0.0 {
        return 1.0;
    }
    (tr * tr / (p * tr2)).clamp(1.0 / p, 1.0)
}

/// Full within-subjects decomposition: every main effect and interaction,
/// each tested against its own subject × effect error term.
pub fn rm_anova(data: &RmDataset) -> Result<AnovaTable, StatsError> {
    let n = data.subjects.len();
    if n < 3 {
        return Err(StatsError::TooFew { what: "subjects", needed: 3, got: n });
    }
    let x = DMatrix::from_fn(n, data.cells(), |s, c| data.values[s][c]);
    let mut effects = Vec::new();
    for subset in effect_subsets(data.factors.len()) {
        let c = data
            .factors
            .iter()
            .enumerate()
            .map(|(i, f)| if subset.contains(&i) { contrasts(f.levels.len()) } else { averaging(f.levels.len()) })
            .reduce(|acc, m| acc.kronecker(&m))
            .expect("at least one factor");
        // Rows: subjects; columns: the effect's contrast scores.
        let y = &x * c.transpose();
        let p = y.ncols();
        let mean = DVector::from_fn(p, |j, _| y.column(j).mean());
        let centred = DMatrix::from_fn(n, p, |s, j| y[(s, j)] - mean[j]);
        let ss_effect = n as f64 * mean.norm_squared();
        let ss_error = centred.norm_squared();
        let df_effect = p as f64;
        let df_error = (p * (n - 1)) as f64;
        let f = if ss_effect == 0.0 {
            0.0
        } else if ss_error == 0.0 {
            f64::INFINITY
        } else {
            (ss_effect / df_effect) / (ss_error / df_error)
        };
        let cov = centred.transpose() * &centred / (n - 1) as f64;
        let epsilon = epsilon_of(&cov);
        let test = mauchly(&cov, n);
        let corrected = p > 1 && test.is_none_or(|m| m.p < SPHERICITY_ALPHA);
        let p_of = |d1: f64, d2: f64| if f.is_infinite() { 0.0 } else { f_sf(f, d1, d2) };
        let eta_denom = ss_effect + ss_error;
        effects.push(EffectResult {
            name: subset.iter().map(|&i| data.factors[i].name.as_str()).collect::<Vec<_>>().join("*"),
            factors: subset,
            ss_effect,
            ss_error,
            df_effect,
            df_error,
            f,
            p: p_of(df_effect, df_error),
            partial_eta_sq: if eta_denom > 0.0 { ss_effect / eta_denom } else { 0.0 },
            epsilon_gg: epsilon,
            df_effect_gg: epsilon * df_effect,
            df_error_gg: epsilon * df_error,
            p_gg: p_of(epsilon * df_effect, epsilon * df_error),
            mauchly: test,
            corrected,
        });
    }
    Ok(AnovaTable { subjects: n, effects })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contrasts_are_orthonormal() {
        for l in 2..6 {
            let c = contrasts(l);
            let g = &c * c.transpose();
            assert!((g - DMatrix::identity(l - 1, l - 1)).norm() < 1e-12);
            assert!(c.column_sum().norm() < 1e-12);
        }
    }

    #[test]
    fn constant_data_gives_zero_f() {
        let f = vec![Factor::new("a", ["1", "2", "3"]), Factor::new("b", ["x", "y"])];
        let d = RmDataset::new(f, vec!["s1".into(), "s2".into(), "s3".into()], vec![vec![50.0; 6]; 3]).unwrap();
        let t = rm_anova(&d).unwrap();
        assert_eq!(t.effects.len(), 3);
        assert!(t.effects.iter().all(|e| e.f == 0.0 && e.p == 1.0));
    }

    #[test]
    fn epsilon_bounds() {
        assert_eq!(gg_epsilon(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(), 1.0);
        let cs: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 3.0 } else { 1.2 }).collect()).collect();
        assert!((gg_epsilon(&cs).unwrap() - 1.0).abs() < 1e-9);
        // All variance along one contrast direction.
        let v = [1.0, -1.0, 0.0];
        let rank_one: Vec<Vec<f64>> = v.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        assert!((gg_epsilon(&rank_one).unwrap() - 0.5).abs() < 1e-12);
        assert!(gg_epsilon(&[vec![1.0]]).is_err());
    }

    #[test]
    fn rejects_small_or_ragged_data() {
        let f = vec![Factor::new("a", ["1", "2"])];
        let d = RmDataset::new(f.clone(), vec!["s1".into(), "s2".into()], vec![vec![1.0, 2.0]; 2]).unwrap();
        assert!(matches!(rm_anova(&d), Err(StatsError::TooFew { .. })));
        assert!(matches!(
            RmDataset::new(f, vec!["s1".into()], vec![vec![1.0]]),
            Err(StatsError::MissingCell(_))
        ));
    }
}
