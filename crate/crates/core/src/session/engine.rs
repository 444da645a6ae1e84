use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::agent::{AgentAdapter, EyeColor};
use super::events::{BreakStep, Confirmer, Event, EventRecord, FeedbackDirective};
use super::log::{EventSink, LogHeader, SessionSummary};
use super::state::{Phase, SessionState};
use super::{InterfaceKind, SessionConfig, SessionError, TrialPlan, BREAK_WAIT_SECONDS};
use crate::stimulus::{Color, Number, TrialPhase, TrialSpec};

const INTRODUCTION: &str = "Hello, I am your listening partner. Listen for the colour and number and show me what you heard.";
const ASK_BREAK: &str = "Would you like to take a break?";
const ASK_STRETCH: &str = "Would you like to join me in a stretch?";
const ASK_READY: &str = "Are you ready to continue?";

/// What the caller should do next.
#[derive(Debug, Clone, PartialEq)]
pub enum NextStep {
    Trial(TrialSpec),
    /// Training is over; waiting for the head touch or researcher.
    AwaitConfirmation,
    Break(BreakStep),
    Done,
}

/// The step after a response, without trial content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NextHint {
    NextTrial,
    AwaitConfirmation,
    BreakOffer,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseInput {
    pub color: Color,
    pub number: Number,
    #[serde(default)]
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub phase: TrialPhase,
    pub index: usize,
    pub correct: bool,
    pub feedback: FeedbackDirective,
    pub next: NextHint,
    /// True when this answers a retried request id.
    pub replayed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakProgress {
    /// The question now awaiting a reply, if the break continues.
    pub question: Option<BreakStep>,
    pub resumed: bool,
    pub stretched: bool,
    /// Seconds of enforced waiting this reply started.
    pub waited: f64,
}

/// A live session: state, the log it came from, and its side channels.
pub struct Session {
    config: SessionConfig,
    plan: TrialPlan,
    state: SessionState,
    records: Vec<EventRecord>,
    sink: Box<dyn EventSink>,
    agent: Box<dyn AgentAdapter>,
    outcomes: HashMap<String, (ResponseInput, SubmitOutcome)>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session").field("config", &self.config).field("state", &self.state).finish_non_exhaustive()
    }
}

impl Session {
    /// Open the log and show the introduction.
    pub fn start(
        config: SessionConfig,
        trials: &[TrialSpec],
        mut sink: Box<dyn EventSink>,
        agent: Box<dyn AgentAdapter>,
        at: f64,
    ) -> Result<Session, SessionError> {
        let plan = TrialPlan::from_trials(trials)?;
        config.validate(plan.experimental.len())?;
        sink.begin(&LogHeader::new(config.clone(), plan.all().cloned().collect()))?;
        let state = SessionState::initial(&config, &plan);
        let mut session =
            Session { config, plan, state, records: Vec::new(), sink, agent, outcomes: HashMap::new() };
        match session.config.interface {
            InterfaceKind::Embodied => {
                session.agent.speak(INTRODUCTION);
                session.emit(at, Event::AgentIntroduction { text: INTRODUCTION.into() })?;
            }
            InterfaceKind::Plain => session.emit(at, Event::StartScreen)?,
        }
        Ok(session)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn plan(&self) -> &TrialPlan {
        &self.plan
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn header(&self) -> LogHeader {
        LogHeader::new(self.config.clone(), self.plan.all().cloned().collect())
    }

    /// The trial awaiting a response.
    pub fn current_trial(&self) -> Option<&TrialSpec> {
        self.state.pending.and_then(|p| self.plan.trial(p.phase, p.index))
    }

    fn emit(&mut self, at: f64, event: Event) -> Result<(), SessionError> {
        let t = if at < self.state.last_t { self.state.last_t } else { at };
        let record = EventRecord { seq: self.state.events, t, event };
        let before = self.state.clone();
        self.state.apply(&record, &self.plan)?;
        if let Err(e) = self.sink.append(&record) {
            self.state = before;
            return Err(e);
        }
        self.records.push(record);
        Ok(())
    }

    fn boundary(&mut self) -> Result<(), SessionError> {
        self.sink.phase_boundary(&SessionSummary::of(&self.config, &self.state))
    }

    fn embodied(&self) -> bool {
        self.config.interface == InterfaceKind::Embodied
    }

    /// Leave the introduction and start training.
    pub fn begin(&mut self, at: f64) -> Result<(), SessionError> {
        if self.state.phase != Phase::Intro {
            return Err(SessionError::WrongPhase(self.state.phase));
        }
        self.emit(at, Event::PhaseChanged { from: Phase::Intro, to: Phase::Training })?;
        self.boundary()
    }

    pub fn next_trial(&mut self, at: f64) -> Result<NextStep, SessionError> {
        match self.state.phase {
            Phase::Intro => return Err(SessionError::WrongPhase(Phase::Intro)),
            Phase::Done => return Ok(NextStep::Done),
            Phase::Break => {
                let step = self.state.break_step.ok_or(SessionError::NoBreakPending)?;
                return Ok(NextStep::Break(step));
            }
            Phase::Training | Phase::DataCollection => {}
        }
        if let Some(spec) = self.current_trial() {
            return Ok(NextStep::Trial(spec.clone()));
        }
        if self.state.awaiting_confirmation {
            return Ok(NextStep::AwaitConfirmation);
        }
        if self.state.break_due() {
            let after_trial = self.state.experimental.total;
            let step = if self.embodied() { BreakStep::Offer } else { BreakStep::Pause };
            self.emit(at, Event::PhaseChanged { from: Phase::DataCollection, to: Phase::Break })?;
            if self.embodied() {
                self.agent.speak(ASK_BREAK);
            }
            self.emit(at, Event::BreakOffered { after_trial, step })?;
            self.boundary()?;
            return Ok(NextStep::Break(step));
        }
        let phase = if self.state.phase == Phase::Training { TrialPhase::Training } else { TrialPhase::Experimental };
        let index = self.state.done_in(phase) + 1;
        let spec = self.plan.trial(phase, index).cloned().ok_or(SessionError::NoPendingTrial)?;
        self.emit(at, Event::StimulusOnset { phase, index, stimulus: spec.stimulus.clone() })?;
        if self.embodied() {
            self.agent.eye_color(EyeColor::Green);
        }
        Ok(NextStep::Trial(spec))
    }

    pub fn submit_response(&mut self, input: ResponseInput, at: f64) -> Result<SubmitOutcome, SessionError> {
        if let Some(id) = &input.request_id {
            if let Some((previous, outcome)) = self.outcomes.get(id) {
                if previous.color == input.color && previous.number == input.number {
                    return Ok(SubmitOutcome { replayed: true, ..outcome.clone() });
                }
                return Err(SessionError::RequestIdReused(id.clone()));
            }
        }
        if self.state.phase == Phase::Intro {
            return Err(SessionError::WrongPhase(Phase::Intro));
        }
        let Some(pending) = self.state.pending else {
            return Err(match self.state.responses.last() {
                Some(r) => SessionError::DuplicateSubmission { phase: r.phase, index: r.index },
                None => SessionError::NoPendingTrial,
            });
        };
        let truth = self.plan.trial(pending.phase, pending.index).ok_or(SessionError::NoPendingTrial)?.target;
        let correct = truth.color == input.color && truth.number == input.number;
        self.emit(
            at,
            Event::Response {
                phase: pending.phase,
                index: pending.index,
                color: input.color,
                number: input.number,
                correct,
                response_time: (at - pending.onset).max(0.0),
                request_id: input.request_id.clone(),
            },
        )?;

        let lat = self.config.latencies;
        let feedback = match (self.config.interface, correct) {
            (InterfaceKind::Embodied, true) => FeedbackDirective::Nod { duration: lat.nod },
            (InterfaceKind::Embodied, false) => FeedbackDirective::Shake { duration: lat.shake },
            (InterfaceKind::Plain, true) => FeedbackDirective::None,
            (InterfaceKind::Plain, false) => {
                FeedbackDirective::Highlight { color: truth.color, number: truth.number, duration: lat.highlight }
            }
        };
        if self.embodied() {
            self.agent.eye_color(EyeColor::Neutral);
            match feedback {
                FeedbackDirective::Nod { duration } => self.agent.nod(duration),
                FeedbackDirective::Shake { duration } => self.agent.shake(duration),
                _ => {}
            }
        }
        if feedback != FeedbackDirective::None {
            self.emit(at, Event::Feedback { directive: feedback })?;
        }

        let next = match pending.phase {
            TrialPhase::Training if self.state.training.total == self.state.training_total => {
                self.emit(at, Event::TrainingComplete)?;
                NextHint::AwaitConfirmation
            }
            TrialPhase::Training => NextHint::NextTrial,
            TrialPhase::Experimental if self.state.experimental.total == self.state.experimental_total => {
                self.emit(at, Event::PhaseChanged { from: Phase::DataCollection, to: Phase::Done })?;
                self.emit(at, Event::SessionDone)?;
                self.boundary()?;
                NextHint::Done
            }
            TrialPhase::Experimental if self.state.break_due() => NextHint::BreakOffer,
            TrialPhase::Experimental => NextHint::NextTrial,
        };
        let outcome =
            SubmitOutcome { phase: pending.phase, index: pending.index, correct, feedback, next, replayed: false };
        if let Some(id) = input.request_id.clone() {
            self.outcomes.insert(id, (input, outcome.clone()));
        }
        Ok(outcome)
    }

    /// Move from training to data collection.
    pub fn confirm_advance(&mut self, by: Confirmer, at: f64) -> Result<(), SessionError> {
        if self.state.phase != Phase::Training || !self.state.awaiting_confirmation {
            return Err(SessionError::WrongPhase(self.state.phase));
        }
        self.emit(at, Event::AdvanceConfirmed { by })?;
        self.emit(at, Event::PhaseChanged { from: Phase::Training, to: Phase::DataCollection })?;
        self.boundary()
    }

    /// Answer the pending break question.
    ///
    /// Embodied flow: break? no → resume; yes → stretch? yes → routine,
    /// no → 10 s wait; then ready? yes → resume, no → 10 s wait → resume.
    /// A plain pause is dismissed by any reply.
    pub fn break_reply(&mut self, answer: bool, at: f64) -> Result<BreakProgress, SessionError> {
        if self.state.phase != Phase::Break {
            return Err(SessionError::WrongPhase(self.state.phase));
        }
        let step = self.state.break_step.ok_or(SessionError::NoBreakPending)?;
        self.emit(at, Event::BreakReply { step, answer })?;
        let mut progress = BreakProgress { question: None, resumed: false, stretched: false, waited: 0.0 };
        let mut t = at;
        let follow_up = match (step, answer) {
            (BreakStep::Pause, _) | (BreakStep::Offer, false) | (BreakStep::Ready, true) => None,
            (BreakStep::Offer, true) => Some(BreakStep::Stretch),
            (BreakStep::Stretch, true) => {
                self.agent.stretch();
                self.emit(t, Event::StretchRoutine)?;
                progress.stretched = true;
                Some(BreakStep::Ready)
            }
            (BreakStep::Stretch, false) | (BreakStep::Ready, false) => {
                self.emit(t, Event::BreakWait { seconds: BREAK_WAIT_SECONDS })?;
                progress.waited += BREAK_WAIT_SECONDS;
                t += BREAK_WAIT_SECONDS;
                (step == BreakStep::Stretch).then_some(BreakStep::Ready)
            }
        };
        match follow_up {
            Some(question) => {
                self.agent.speak(if question == BreakStep::Stretch { ASK_STRETCH } else { ASK_READY });
                self.emit(t, Event::BreakQuestion { step: question })?;
                progress.question = Some(question);
            }
            None => {
                self.emit(t, Event::BreakEnded)?;
                self.emit(t, Event::PhaseChanged { from: Phase::Break, to: Phase::DataCollection })?;
                self.boundary()?;
                progress.resumed = true;
            }
        }
        Ok(progress)
    }
}
