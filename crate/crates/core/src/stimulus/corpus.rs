use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{read_wav, write_wav, AudioBuffer};
use crate::synth::{self, Syllable, VOWELS};

use super::{derive_seed, CallSign, SentenceId, StimulusError};

/// A recorded (or synthesized) CRM sentence.
#[derive(Debug, Clone)]
pub struct Sentence {
    pub id: SentenceId,
    pub audio: Arc<AudioBuffer>,
}

/// The full sentence set of one language: 48 "dog" and 48 "cat" sentences.
#[derive(Debug, Clone)]
pub struct Corpus {
    sentences: BTreeMap<SentenceId, Sentence>,
    sample_rate: u32,
}

/// Reference F0 of the synthetic talker.
pub const SYNTHETIC_F0_HZ: f64 = 242.0;

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Result<Self, StimulusError> {
        let sample_rate = sentences
            .first()
            .map(|s| s.audio.sample_rate())
            .ok_or_else(|| StimulusError::IncompleteCorpus("no sentences".into()))?;
        if let Some(odd) = sentences.iter().find(|s| s.audio.sample_rate() != sample_rate) {
            return Err(StimulusError::IncompleteCorpus(format!(
                "{} is at {} Hz, corpus at {} Hz",
                odd.id,
                odd.audio.sample_rate(),
                sample_rate
            )));
        }
        let sentences: BTreeMap<_, _> = sentences.into_iter().map(|s| (s.id, s)).collect();
        let corpus = Corpus { sentences, sample_rate };
        corpus.validate()?;
        Ok(corpus)
    }

    fn validate(&self) -> Result<(), StimulusError> {
        for call_sign in CallSign::ALL {
            let missing: Vec<String> = SentenceId::all_for(call_sign)
                .into_iter()
                .filter(|id| !self.sentences.contains_key(id))
                .map(|id| id.to_string())
                .collect();
            if !missing.is_empty() {
                return Err(StimulusError::IncompleteCorpus(format!("missing {}", missing.join(", "))));
            }
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn get(&self, id: &SentenceId) -> Option<&Sentence> {
        self.sentences.get(id)
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.sentences.values()
    }

    pub fn with_call_sign(&self, call_sign: CallSign) -> Vec<Sentence> {
        self.sentences.values().filter(|s| s.id.call_sign == call_sign).cloned().collect()
    }

    /// Load `<call>_<color>_<number>.wav` files from `dir`. Other files are
    /// ignored.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, StimulusError> {
        let mut sentences = Vec::new();
        for entry in std::fs::read_dir(dir.as_ref())? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("wav") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse().ok()) else {
                continue;
            };
            sentences.push(Sentence { id, audio: Arc::new(read_wav(&path)?) });
        }
        Corpus::new(sentences)
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(), StimulusError> {
        std::fs::create_dir_all(dir.as_ref())?;
        for s in self.sentences.values() {
            write_wav(dir.as_ref().join(format!("{}.wav", s.id)), &s.audio)?;
        }
        Ok(())
    }

    /// A stand-in corpus from the built-in source-filter talker
    /// ("show the <call sign> where the <colour> <number> is"), F0 ≈ 242 Hz.
    pub fn synthetic(seed: u64, sample_rate: u32) -> Self {
        let sentences = CallSign::ALL
            .into_iter()
            .flat_map(SentenceId::all_for)
            .map(|id| Sentence { id, audio: Arc::new(synthetic_sentence(id, seed, sample_rate)) })
            .collect();
        Corpus::new(sentences).expect("synthetic corpus is complete")
    }
}

fn stream_of(id: SentenceId) -> u64 {
    let call = match id.call_sign {
        CallSign::Dog => 0,
        CallSign::Cat => 1,
    };
    (call * 64 + id.color.index() * 8 + id.number.index()) as u64
}

fn synthetic_sentence(id: SentenceId, seed: u64, sample_rate: u32) -> AudioBuffer {
    let sentence_seed = derive_seed(seed, stream_of(id));
    let mut rng = ChaCha8Rng::seed_from_u64(sentence_seed);
    let call_vowel = match id.call_sign {
        CallSign::Dog => VOWELS[4],
        CallSign::Cat => VOWELS[5],
    };
    let number_vowel = VOWELS[(id.number.index() + 3) % VOWELS.len()];
    let vowels = [
        VOWELS[4],
        VOWELS[7],
        call_vowel,
        VOWELS[3],
        VOWELS[7],
        VOWELS[id.color.index()],
        number_vowel,
        VOWELS[6],
    ];
    let syllables: Vec<Syllable> = vowels
        .iter()
        .map(|&formants| Syllable {
            formants,
            voiced_seconds: rng.random_range(0.16..0.26),
            gap_seconds: rng.random_range(0.03..0.07),
        })
        .collect();
    synth::utterance(&syllables, SYNTHETIC_F0_HZ, sentence_seed, sample_rate)
}
