//! Speech-shaped calibration noise and third-octave levels of speech,
//! noise and a deliberately tilted "playback" of the noise.
//!
//! cargo run -p crm-core --example calibration

use crm_core::audio::AudioBuffer;
use crm_core::calibration::{calibration_report, shaped_noise, third_octave_levels};
use crm_core::stimulus::Corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 44_100;
    let corpus = Corpus::synthetic(3, fs);
    let speech: Vec<AudioBuffer> = corpus.sentences().map(|s| (*s.audio).clone()).collect();
    let noise = shaped_noise(&speech, 10.0, 42)?;

    // A crude first-difference filter stands in for a bright loudspeaker.
    let mut prev = 0.0f32;
    let bright: Vec<f32> = noise
        .samples()
        .iter()
        .map(|&x| {
            let y = x - 0.6 * prev;
            prev = x;
            y
        })
        .collect();

    let joined: Vec<f32> = speech.iter().flat_map(|b| b.samples().iter().copied()).collect();
    let reports = [
        third_octave_levels(&AudioBuffer::new(joined, fs)?)?.labelled("speech"),
        third_octave_levels(&noise)?.labelled("noise"),
        third_octave_levels(&AudioBuffer::new(bright, fs)?)?.labelled("bright_speaker"),
    ];
    let report = calibration_report(&reports, 65.0)?;
    for s in &report.series {
        let worst = s.deviation_db.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let flagged: Vec<String> = s.flagged_hz.iter().map(|f| format!("{f:.0} Hz")).collect();
        println!("{:<15} worst band deviation {:5.2} dB, flagged [{}]", s.label, worst, flagged.join(", "));
    }
    report.write_csv(std::io::stdout().lock())?;
    Ok(())
}
