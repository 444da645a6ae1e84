use crm_core::audio::AudioBuffer;
use crm_core::calibration::{band_edges, shaped_noise, third_octave_levels};
use crm_core::stimulus::Corpus;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

const FS: u32 = 44_100;

fn white(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Brick-wall low-pass by zeroing DFT bins, written independently of the
/// library's filtering.
fn brick_wall(x: &[f64], cutoff: f64) -> AudioBuffer {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * FS as f64 / n as f64;
        if f > cutoff {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    AudioBuffer::new(buf.iter().map(|c| (0.05 * c.re / n as f64) as f32).collect(), FS).unwrap()
}

#[test]
fn shaped_noise_tracks_speech_corpus() {
    let corpus = Corpus::synthetic(3, FS);
    let buffers: Vec<AudioBuffer> = corpus.sentences().map(|s| (*s.audio).clone()).collect();
    let noise = shaped_noise(&buffers, 10.0, 42).unwrap();
    let joined: Vec<f32> = buffers.iter().flat_map(|b| b.samples().iter().copied()).collect();
    let reference = third_octave_levels(&AudioBuffer::new(joined, FS).unwrap()).unwrap();
    let measured = third_octave_levels(&noise).unwrap();
    for (r, m) in reference.bands.iter().zip(&measured.bands) {
        assert!((r.level_db - m.level_db).abs() < 2.0, "{} Hz: ref {:.2} noise {:.2}", r.center_hz, r.level_db, m.level_db);
    }
}

#[test]
fn flat_corpus_gives_flat_noise() {
    let flat = AudioBuffer::new(white(3 * FS as usize, 1).iter().map(|v| (0.1 * v) as f32).collect(), FS).unwrap();
    let noise = shaped_noise(&[flat.clone()], 8.0, 2).unwrap();
    let a = third_octave_levels(&flat).unwrap();
    let b = third_octave_levels(&noise).unwrap();
    for (x, y) in a.bands.iter().zip(&b.bands) {
        assert!((x.level_db - y.level_db).abs() < 2.0);
    }
}

#[test]
fn low_passed_corpus_suppresses_upper_bands() {
    let lp = brick_wall(&white(4 * FS as usize, 5), 2000.0);
    let noise = shaped_noise(&[lp], 6.0, 8).unwrap();
    let r = third_octave_levels(&noise).unwrap();
    let pass = r.level_at(1000.0).unwrap();
    for b in r.bands.iter().filter(|b| band_edges(b.center_hz).0 > 2500.0) {
        assert!(pass - b.level_db >= 20.0, "{} Hz only {:.1} dB down", b.center_hz, pass - b.level_db);
    }
}

#[test]
fn band_power_sum_matches_wideband_rms() {
    let lp = brick_wall(&white(3 * FS as usize, 9), 8000.0);
    let r = third_octave_levels(&lp).unwrap();
    let rms_db = 20.0 * lp.rms().unwrap().log10();
    // Energy below the lowest band edge is ~1 % of an 8 kHz flat spectrum.
    assert!((r.overall_db - rms_db).abs() < 0.5, "{} vs {}", r.overall_db, rms_db);
    let sum: f64 = r.bands.iter().map(|b| 10f64.powf(b.level_db / 10.0)).sum();
    assert!((10.0 * sum.log10() - r.overall_db).abs() < 0.2);
}
