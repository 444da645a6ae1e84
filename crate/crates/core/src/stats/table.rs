//! Ingestion of the session metrics table and export of result tables.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::anova::{AnovaTable, Factor, RmDataset};
use super::bayes::effect_bayes_factor;
use super::nars::NarsRow;
use super::ttest::Summary;
use super::StatsError;
use crate::session::{InterfaceKind, MetricsRow};
use crate::stimulus::TmrCondition;
use crate::voice::VoiceCondition;

const INTERFACES: [InterfaceKind; 2] = [InterfaceKind::Plain, InterfaceKind::Embodied];

pub fn read_metrics_csv(reader: impl Read) -> Result<Vec<MetricsRow>, StatsError> {
    Ok(csv::Reader::from_reader(reader).deserialize().collect::<Result<_, _>>()?)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn voice_index(row: &MetricsRow) -> Option<usize> {
    VoiceCondition::EXPERIMENTAL
        .iter()
        .position(|v| close(v.delta_f0, row.delta_f0) && close(v.delta_vtl, row.delta_vtl))
}

fn tmr_index(row: &MetricsRow) -> Option<usize> {
    TmrCondition::EXPERIMENTAL_DB.iter().position(|t| close(*t, row.tmr))
}

/// The 2 (interface) × 4 (voice) × 3 (TMR) dataset. Every participant
/// must have all 24 cells.
pub fn dataset_from_rows(rows: &[MetricsRow]) -> Result<RmDataset, StatsError> {
    let per_subject = INTERFACES.len() * VoiceCondition::EXPERIMENTAL.len() * TmrCondition::EXPERIMENTAL_DB.len();
    let mut cells: BTreeMap<&str, Vec<Option<f64>>> = BTreeMap::new();
    for row in rows {
        let (Some(v), Some(t)) = (voice_index(row), tmr_index(row)) else {
            return Err(StatsError::Invalid(format!(
                "row for {} has an unknown condition (tmr {}, f0 {}, vtl {})",
                row.participant, row.tmr, row.delta_f0, row.delta_vtl
            )));
        };
        let i = INTERFACES.iter().position(|k| *k == row.interface).expect("both interfaces listed");
        let slot = &mut cells.entry(&row.participant).or_insert_with(|| vec![None; per_subject])[(i * 4 + v) * 3 + t];
        if slot.replace(row.percent_correct).is_some() {
            return Err(StatsError::Invalid(format!("duplicate cell for {}", row.participant)));
        }
    }
    let mut subjects = Vec::new();
    let mut values = Vec::new();
    for (participant, row) in cells {
        let complete: Option<Vec<f64>> = row.into_iter().collect();
        let complete =
            complete.ok_or_else(|| StatsError::MissingCell(format!("participant {participant} is missing cells")))?;
        subjects.push(participant.to_string());
        values.push(complete);
    }
    let factors = vec![
        Factor::new("interface", INTERFACES.iter().map(|k| k.to_string())),
        Factor::new("voice", VoiceCondition::EXPERIMENTAL.iter().map(|v| v.to_string())),
        Factor::new("tmr", TmrCondition::EXPERIMENTAL_DB.iter().map(|t| t.to_string())),
    ];
    RmDataset::new(factors, subjects, values)
}

/// Per-participant data-collection durations (minutes) on the plain and
/// embodied interface, for participants with both.
pub fn duration_pairs(rows: &[MetricsRow]) -> (Vec<String>, Vec<f64>, Vec<f64>) {
    let mut by: BTreeMap<&str, [Option<f64>; 2]> = BTreeMap::new();
    for row in rows {
        let i = usize::from(row.interface == InterfaceKind::Embodied);
        by.entry(&row.participant).or_default()[i].get_or_insert(row.duration_min);
    }
    let mut ids = Vec::new();
    let (mut plain, mut embodied) = (Vec::new(), Vec::new());
    for (p, [a, b]) in by {
        if let (Some(a), Some(b)) = (a, b) {
            ids.push(p.to_string());
            plain.push(a);
            embodied.push(b);
        }
    }
    (ids, plain, embodied)
}

/// Mean intelligibility per interface × TMR × voice cell across participants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub interface: InterfaceKind,
    pub tmr: f64,
    pub delta_f0: f64,
    pub delta_vtl: f64,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

pub fn intelligibility_series(rows: &[MetricsRow]) -> Vec<SeriesPoint> {
    let mut groups: BTreeMap<(InterfaceKind, usize, usize), Vec<f64>> = BTreeMap::new();
    for row in rows {
        if let (Some(v), Some(t)) = (voice_index(row), tmr_index(row)) {
            groups.entry((row.interface, t, v)).or_default().push(row.percent_correct);
        }
    }
    groups
        .into_iter()
        .map(|((interface, t, v), values)| {
            let sd = Summary::of(&values).map(|s| s.sd).unwrap_or(0.0);
            let voice = VoiceCondition::EXPERIMENTAL[v];
            SeriesPoint {
                interface,
                tmr: TmrCondition::EXPERIMENTAL_DB[t],
                delta_f0: voice.delta_f0,
                delta_vtl: voice.delta_vtl,
                mean: values.iter().sum::<f64>() / values.len() as f64,
                sd,
                n: values.len(),
            }
        })
        .collect()
}

/// One row per effect: correction, reported df, F, p, partial η², GG ε,
/// Mauchly W and p, and the BIC Bayes factor.
pub fn write_anova_csv<W: Write>(table: &AnovaTable, out: W) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "effect",
        "correction",
        "df1",
        "df2",
        "f",
        "p",
        "partial_eta_sq",
        "epsilon_gg",
        "mauchly_w",
        "mauchly_p",
        "bf10",
    ])?;
    for e in &table.effects {
        let (df1, df2) = e.reported_df();
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        w.write_record([
            e.name.clone(),
            if e.corrected { "greenhouse-geisser" } else { "none" }.to_string(),
            format!("{df1:.3}"),
            format!("{df2:.3}"),
            format!("{:.3}", e.f),
            format!("{:.4}", e.reported_p()),
            format!("{:.3}", e.partial_eta_sq),
            format!("{:.4}", e.epsilon_gg),
            opt(e.mauchly.map(|m| m.w)),
            opt(e.mauchly.map(|m| m.p)),
            format!("{:.4e}", effect_bayes_factor(e, table.subjects).bf10),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: subscale, expected, mean, sd, ci_low, ci_high, t, df, p.
pub fn write_ttest_csv<W: Write>(rows: &[NarsRow], out: W) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subscale", "expected", "mean", "sd", "ci_low", "ci_high", "t", "df", "p"])?;
    for r in rows {
        w.write_record([
            r.subscale.clone(),
            format!("{}", r.expected),
            format!("{:.3}", r.summary.mean),
            format!("{:.3}", r.summary.sd),
            format!("{:.2}", r.test.ci95.0),
            format!("{:.2}", r.test.ci95.1),
            format!("{:.3}", r.test.t),
            format!("{}", r.test.df),
            format!("{:.4}", r.test.p),
        ])?;
    }
    w.flush()?;
    Ok(())
}
