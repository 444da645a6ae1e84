//! Measure, normalize and ramp one synthetic sentence, then write it out.
//!
//! cargo run -p crm-core --example audio_levels [out_dir]

use std::path::PathBuf;

use crm_core::audio::{apply_raised_cosine_ramps, read_wav, rms_level_db, scale_to_rms, write_wav, LevelDb};
use crm_core::stimulus::{CallSign, Color, Corpus, Number, SentenceId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("crm-audio-levels"));
    std::fs::create_dir_all(&out)?;

    let corpus = Corpus::synthetic(1, 44_100);
    let id = SentenceId::new(CallSign::Dog, Color::Blue, Number::new(4)?);
    let sentence = corpus.get(&id).ok_or("sentence missing")?;
    println!("{id}: {:.3} s at {} Hz, level {}", sentence.audio.duration_seconds(), sentence.audio.sample_rate(), rms_level_db(&sentence.audio)?);

    let normalized = scale_to_rms(&sentence.audio, LevelDb::fs(-25.0))?;
    let ramped = apply_raised_cosine_ramps(&normalized, 10.0)?;
    println!("normalized: {}, peak {:.3}", rms_level_db(&ramped)?, ramped.peak());

    let path = out.join(format!("{id}.wav"));
    write_wav(&path, &ramped)?;
    let back = read_wav(&path)?;
    println!("wrote {} ({} samples, re-read level {})", path.display(), back.len(), rms_level_db(&back)?);
    Ok(())
}
