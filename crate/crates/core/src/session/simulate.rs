use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::agent::AgentAdapter;
use super::engine::{NextStep, ResponseInput, Session};
use super::events::{Confirmer, FeedbackDirective};
use super::log::EventSink;
use super::{InterfaceKind, SessionConfig, SessionError};
use crate::stimulus::{Color, Number, SentenceId, TrialSpec};

/// A stand-in listener with fixed accuracy.
#[derive(Debug, Clone)]
pub struct SimulatedParticipant {
    pub p_correct: f64,
    /// Probability of answering yes to any break question.
    pub p_yes: f64,
    rng: ChaCha8Rng,
}

impl SimulatedParticipant {
    pub fn new(p_correct: f64, p_yes: f64, seed: u64) -> Self {
        SimulatedParticipant { p_correct, p_yes, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// The truth with probability `p_correct`, otherwise a uniformly
    /// chosen wrong pair.
    pub fn respond(&mut self, truth: &SentenceId) -> (Color, Number) {
        if self.rng.random_bool(self.p_correct.clamp(0.0, 1.0)) {
            return (truth.color, truth.number);
        }
        loop {
            let color = Color::ALL[self.rng.random_range(0..Color::ALL.len())];
            let number = Number::new(Number::LEGAL[self.rng.random_range(0..Number::LEGAL.len())])
                .expect("legal number");
            if (color, number) != (truth.color, truth.number) {
                return (color, number);
            }
        }
    }

    pub fn reply(&mut self) -> bool {
        self.rng.random_bool(self.p_yes.clamp(0.0, 1.0))
    }

    fn reaction(&mut self, range: (f64, f64)) -> f64 {
        if range.1 > range.0 {
            self.rng.random_range(range.0..range.1)
        } else {
            range.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    pub start_t: f64,
    pub intro_seconds: f64,
    /// Stimulus playback before the response window opens.
    pub stimulus_seconds: f64,
    pub reaction_seconds: (f64, f64),
    pub confirm_seconds: f64,
    pub stretch_seconds: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            start_t: 0.0,
            intro_seconds: 20.0,
            stimulus_seconds: 3.0,
            reaction_seconds: (0.8, 2.5),
            confirm_seconds: 5.0,
            stretch_seconds: 30.0,
        }
    }
}

/// Run a whole session on a virtual clock and return it finished.
pub fn simulate_session(
    config: SessionConfig,
    trials: &[TrialSpec],
    participant: &mut SimulatedParticipant,
    sink: Box<dyn EventSink>,
    agent: Box<dyn AgentAdapter>,
    options: SimulationOptions,
) -> Result<Session, SessionError> {
    let mut t = options.start_t;
    let confirmer = match config.interface {
        InterfaceKind::Embodied => Confirmer::HeadTouch,
        InterfaceKind::Plain => Confirmer::Researcher,
    };
    let mut session = Session::start(config, trials, sink, agent, t)?;
    t += options.intro_seconds;
    session.begin(t)?;
    loop {
        match session.next_trial(t)? {
            NextStep::Trial(spec) => {
                t += options.stimulus_seconds + participant.reaction(options.reaction_seconds);
                let (color, number) = participant.respond(&spec.target);
                let outcome = session.submit_response(ResponseInput { color, number, request_id: None }, t)?;
                if outcome.feedback != FeedbackDirective::None {
                    t += outcome.feedback.duration();
                }
            }
            NextStep::AwaitConfirmation => {
                t += options.confirm_seconds;
                session.confirm_advance(confirmer, t)?;
            }
            NextStep::Break(_) => {
                t += participant.reaction(options.reaction_seconds);
                let progress = session.break_reply(participant.reply(), t)?;
                t += progress.waited;
                if progress.stretched {
                    t += options.stretch_seconds;
                }
            }
            NextStep::Done => return Ok(session),
        }
    }
}
