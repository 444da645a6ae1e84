//! Shift F0 and vocal-tract length of a sentence into each masker voice
//! and report the resulting pitch.
//!
//! cargo run -p crm-core --example voice_morph

use crm_core::stimulus::{CallSign, Color, Corpus, Number, SentenceId};
use crm_core::voice::{apply_voice, estimate_f0, VoiceCondition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::synthetic(7, 44_100);
    let id = SentenceId::new(CallSign::Cat, Color::Green, Number::new(2)?);
    let source = &corpus.get(&id).ok_or("sentence missing")?.audio;
    let f0 = estimate_f0(source)?;
    println!("source {id}: F0 {:.1} Hz ({:.0}% voiced)", f0.hz, 100.0 * f0.voiced_fraction);

    for voice in VoiceCondition::EXPERIMENTAL {
        let morphed = apply_voice(source, voice)?;
        let est = estimate_f0(&morphed)?;
        println!(
            "{voice}: F0 {:.1} Hz (expected {:.1}), {} samples",
            est.hz,
            f0.hz * voice.f0_ratio(),
            morphed.len()
        );
    }
    Ok(())
}
