use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::events::{Event, EventRecord};
use super::log::LogHeader;
use super::{InterfaceKind, SessionError};
use crate::stimulus::{TrialCondition, TrialPhase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub cell: usize,
    pub condition: TrialCondition,
    pub correct: usize,
    pub total: usize,
    pub percent_correct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub participant: String,
    pub interface: InterfaceKind,
    /// First experimental stimulus onset to last experimental response.
    pub duration_s: f64,
    pub duration_min: f64,
    pub mean_inter_response_s: f64,
    pub experimental_correct: usize,
    pub experimental_total: usize,
    /// Every cell, baseline included.
    pub cells: Vec<CellScore>,
}

/// One row of the analysis table: a masked cell of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub participant: String,
    pub interface: InterfaceKind,
    pub tmr: f64,
    pub delta_f0: f64,
    pub delta_vtl: f64,
    pub percent_correct: f64,
    pub duration_min: f64,
}

/// Timing and scoring of a finished data-collection phase, computed
/// directly from the log records.
pub fn session_metrics(header: &LogHeader, records: &[EventRecord]) -> Result<SessionMetrics, SessionError> {
    let experimental: BTreeMap<usize, _> = header
        .trials
        .iter()
        .filter(|t| t.phase == TrialPhase::Experimental)
        .map(|t| (t.index, t))
        .collect();
    let first_onset = records
        .iter()
        .find_map(|r| match r.event {
            Event::StimulusOnset { phase: TrialPhase::Experimental, .. } => Some(r.t),
            _ => None,
        })
        .ok_or_else(|| SessionError::Incomplete("no experimental trial was presented".into()))?;

    let mut cells: BTreeMap<usize, CellScore> = BTreeMap::new();
    let mut response_times = Vec::new();
    let mut correct_total = 0;
    for r in records {
        if let Event::Response { phase: TrialPhase::Experimental, index, correct, .. } = r.event {
            let spec = experimental
                .get(&index)
                .ok_or_else(|| SessionError::MalformedLog(format!("response to unknown trial {index}")))?;
            response_times.push(r.t);
            correct_total += usize::from(correct);
            let cell = spec.cell.unwrap_or(usize::MAX);
            let score = cells.entry(cell).or_insert(CellScore {
                cell,
                condition: spec.condition,
                correct: 0,
                total: 0,
                percent_correct: 0.0,
            });
            score.total += 1;
            score.correct += usize::from(correct);
        }
    }
    if response_times.len() != experimental.len() {
        return Err(SessionError::Incomplete(format!(
            "{} of {} experimental responses logged",
            response_times.len(),
            experimental.len()
        )));
    }
    for c in cells.values_mut() {
        c.percent_correct = 100.0 * c.correct as f64 / c.total as f64;
    }
    let last = *response_times.last().expect("at least one response");
    let duration_s = last - first_onset;
    let mean_inter_response_s = if response_times.len() > 1 {
        (last - response_times[0]) / (response_times.len() - 1) as f64
    } else {
        0.0
    };
    Ok(SessionMetrics {
        participant: header.config.participant.clone(),
        interface: header.config.interface,
        duration_s,
        duration_min: duration_s / 60.0,
        mean_inter_response_s,
        experimental_correct: correct_total,
        experimental_total: response_times.len(),
        cells: cells.into_values().collect(),
    })
}

impl SessionMetrics {
    /// Analysis rows; the baseline cell is left out.
    pub fn rows(&self) -> Vec<MetricsRow> {
        self.cells
            .iter()
            .filter_map(|c| {
                let tmr = c.condition.tmr.db()?;
                let voice = c.condition.voice?;
                Some(MetricsRow {
                    participant: self.participant.clone(),
                    interface: self.interface,
                    tmr,
                    delta_f0: voice.delta_f0,
                    delta_vtl: voice.delta_vtl,
                    percent_correct: c.percent_correct,
                    duration_min: self.duration_min,
                })
            })
            .collect()
    }
}

/// Columns: participant, interface, tmr, delta_f0, delta_vtl,
/// percent_correct, duration_min.
pub fn write_metrics_csv<'a, W: Write>(
    rows: impl IntoIterator<Item = &'a MetricsRow>,
    out: W,
) -> Result<(), SessionError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
