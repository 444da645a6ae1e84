use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::events::{BreakStep, Event, EventRecord};
use super::{InterfaceKind, SessionConfig, SessionError, TrialPlan};
use crate::stimulus::{Color, Number, TrialPhase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Intro,
    Training,
    DataCollection,
    Break,
    Done,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Intro => "intro",
            Phase::Training => "training",
            Phase::DataCollection => "data_collection",
            Phase::Break => "break",
            Phase::Done => "done",
        })
    }
}

impl Phase {
    fn can_become(self, to: Phase) -> bool {
        use Phase::*;
        matches!(
            (self, to),
            (Intro, Training) | (Training, DataCollection) | (DataCollection, Break) | (Break, DataCollection) | (DataCollection, Done)
        )
    }

    fn serves(self) -> Option<TrialPhase> {
        match self {
            Phase::Training => Some(TrialPhase::Training),
            Phase::DataCollection => Some(TrialPhase::Experimental),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingTrial {
    pub phase: TrialPhase,
    pub index: usize,
    pub onset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredResponse {
    pub phase: TrialPhase,
    pub index: usize,
    pub color: Color,
    pub number: Number,
    pub correct: bool,
    pub t: f64,
    pub response_time: f64,
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub interface: InterfaceKind,
    pub phase: Phase,
    pub intro_shown: bool,
    pub pending: Option<PendingTrial>,
    pub training_total: usize,
    pub experimental_total: usize,
    pub training: Tally,
    pub experimental: Tally,
    /// Experimental tallies keyed by condition-grid cell.
    pub cells: BTreeMap<usize, Tally>,
    pub awaiting_confirmation: bool,
    pub break_after: Vec<usize>,
    pub breaks_offered: Vec<usize>,
    pub break_step: Option<BreakStep>,
    pub responses: Vec<ScoredResponse>,
    pub feedback_seconds: f64,
    pub events: u64,
    pub last_t: f64,
}

impl SessionState {
    pub fn initial(config: &SessionConfig, plan: &TrialPlan) -> Self {
        SessionState {
            interface: config.interface,
            phase: Phase::Intro,
            intro_shown: false,
            pending: None,
            training_total: plan.training.len(),
            experimental_total: plan.experimental.len(),
            training: Tally::default(),
            experimental: Tally::default(),
            cells: BTreeMap::new(),
            awaiting_confirmation: false,
            break_after: config.break_after.clone(),
            breaks_offered: Vec::new(),
            break_step: None,
            responses: Vec::new(),
            feedback_seconds: 0.0,
            events: 0,
            last_t: f64::NEG_INFINITY,
        }
    }

    /// Fold a whole log.
    pub fn replay<'a>(
        config: &SessionConfig,
        plan: &TrialPlan,
        records: impl IntoIterator<Item = &'a EventRecord>,
    ) -> Result<Self, SessionError> {
        let mut state = SessionState::initial(config, plan);
        for rec in records {
            state.apply(rec, plan)?;
        }
        Ok(state)
    }

    /// Completed responses in the current serving phase.
    pub fn done_in(&self, phase: TrialPhase) -> usize {
        match phase {
            TrialPhase::Training => self.training.total,
            TrialPhase::Experimental => self.experimental.total,
        }
    }

    /// A break is owed before the next experimental trial.
    pub fn break_due(&self) -> bool {
        let done = self.experimental.total;
        self.phase == Phase::DataCollection
            && self.pending.is_none()
            && done < self.experimental_total
            && self.break_after.contains(&done)
            && !self.breaks_offered.contains(&done)
    }

    /// Validate `rec` against the current state and apply it. On error the
    /// state is unchanged.
    pub fn apply(&mut self, rec: &EventRecord, plan: &TrialPlan) -> Result<(), SessionError> {
        if rec.seq != self.events || !(rec.t >= self.last_t) || !rec.t.is_finite() {
            return Err(SessionError::NonMonotonic { seq: rec.seq, t: rec.t });
        }
        let illegal = |reason: String| SessionError::IllegalEvent { seq: rec.seq, event: rec.event.name(), reason };
        let require = |ok: bool, reason: &str| if ok { Ok(()) } else { Err(illegal(reason.to_string())) };

        match &rec.event {
            Event::AgentIntroduction { .. } | Event::StartScreen => {
                let expected = match self.interface {
                    InterfaceKind::Embodied => "agent_introduction",
                    InterfaceKind::Plain => "start_screen",
                };
                require(rec.seq == 0 && !self.intro_shown, "must be the first event")?;
                require(rec.event.name() == expected, "does not match the interface")?;
                self.intro_shown = true;
            }
            Event::PhaseChanged { from, to } => {
                require(*from == self.phase && from.can_become(*to), "illegal transition")?;
                let ok = match (from, to) {
                    (Phase::Intro, _) => self.intro_shown,
                    (Phase::Training, _) => {
                        self.training.total == self.training_total && !self.awaiting_confirmation
                    }
                    (Phase::DataCollection, Phase::Break) => self.break_due(),
                    (Phase::DataCollection, Phase::Done) => {
                        self.pending.is_none() && self.experimental.total == self.experimental_total
                    }
                    (Phase::Break, _) => self.break_step.is_none(),
                    _ => false,
                };
                require(ok, "preconditions not met")?;
                self.phase = *to;
            }
            Event::StimulusOnset { phase, index, .. } => {
                require(self.phase.serves() == Some(*phase), "wrong phase")?;
                require(self.pending.is_none() && !self.awaiting_confirmation, "a trial is already open")?;
                require(*index == self.done_in(*phase) + 1 && plan.trial(*phase, *index).is_some(), "out of order")?;
                require(!self.break_due(), "break offer must come first")?;
                self.pending = Some(PendingTrial { phase: *phase, index: *index, onset: rec.t });
            }
            Event::Response { phase, index, color, number, correct, response_time, request_id } => {
                let pending = self.pending.ok_or_else(|| illegal("no open trial".into()))?;
                require(pending.phase == *phase && pending.index == *index, "does not answer the open trial")?;
                let spec = plan.trial(*phase, *index).ok_or_else(|| illegal("unknown trial".into()))?;
                let truth = spec.target;
                require(*correct == (truth.color == *color && truth.number == *number), "score mismatch")?;
                if let Some(id) = request_id {
                    require(!self.responses.iter().any(|r| r.request_id.as_ref() == Some(id)), "request id reused")?;
                }
                match phase {
                    TrialPhase::Training => self.training.add(*correct),
                    TrialPhase::Experimental => {
                        self.experimental.add(*correct);
                        if let Some(cell) = spec.cell {
                            self.cells.entry(cell).or_default().add(*correct);
                        }
                    }
                }
                self.responses.push(ScoredResponse {
                    phase: *phase,
                    index: *index,
                    color: *color,
                    number: *number,
                    correct: *correct,
                    t: rec.t,
                    response_time: *response_time,
                    request_id: request_id.clone(),
                });
                self.pending = None;
            }
            Event::Feedback { directive } => {
                require(self.pending.is_none() && !self.responses.is_empty(), "feedback without a response")?;
                self.feedback_seconds += directive.duration();
            }
            Event::TrainingComplete => {
                require(
                    self.phase == Phase::Training
                        && self.pending.is_none()
                        && self.training.total == self.training_total
                        && !self.awaiting_confirmation,
                    "training not finished",
                )?;
                self.awaiting_confirmation = true;
            }
            Event::AdvanceConfirmed { .. } => {
                require(self.awaiting_confirmation, "nothing to confirm")?;
                self.awaiting_confirmation = false;
            }
            Event::BreakOffered { after_trial, step } => {
                require(self.phase == Phase::Break && self.break_step.is_none(), "not in a break")?;
                require(*after_trial == self.experimental.total && !self.breaks_offered.contains(after_trial), "wrong trial")?;
                let expected = match self.interface {
                    InterfaceKind::Plain => BreakStep::Pause,
                    InterfaceKind::Embodied => BreakStep::Offer,
                };
                require(*step == expected, "wrong break style for the interface")?;
                self.breaks_offered.push(*after_trial);
                self.break_step = Some(*step);
            }
            Event::BreakReply { step, .. } => {
                require(self.phase == Phase::Break && self.break_step == Some(*step), "no such question pending")?;
                self.break_step = None;
            }
            Event::BreakQuestion { step } => {
                require(self.phase == Phase::Break && self.break_step.is_none(), "a question is already pending")?;
                require(matches!(step, BreakStep::Stretch | BreakStep::Ready), "not a follow-up question")?;
                self.break_step = Some(*step);
            }
            Event::StretchRoutine | Event::BreakWait { .. } | Event::BreakEnded => {
                require(self.phase == Phase::Break && self.break_step.is_none(), "not between break questions")?;
            }
            Event::SessionDone => {
                require(self.phase == Phase::Done, "session not finished")?;
            }
        }
        self.events += 1;
        self.last_t = rec.t;
        Ok(())
    }
}
