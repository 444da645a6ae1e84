//! Calibration noise and third-octave level reports.
//!
//! Levels are dB FS unless a report has been given a calibration offset, in
//! which case they are nominal dB SPL (FS level plus offset).

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{seconds_to_samples, AudioBuffer, AudioError, LevelRef};
use crate::spectrum::{welch, PowerSpectrum};

/// Welch frame used for both the corpus average and band analysis.
pub const ANALYSIS_FRAME: usize = 8192;
/// Reported level for bands with no energy.
pub const LEVEL_FLOOR_DB: f64 = -200.0;
pub const MIN_ANALYSIS_SECONDS: f64 = 1.0;
pub const DEVIATION_FLAG_DB: f64 = 6.0;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("reference corpus is empty")]
    EmptyCorpus,
    #[error("corpus mixes sample rates {0} and {1}")]
    SampleRateMismatch(u32, u32),
    #[error("analysis needs at least {MIN_ANALYSIS_SECONDS} s of audio, got {0:.3} s")]
    TooShort(f64),
    #[error("duration must be positive, got {0}")]
    InvalidDuration(f64),
    #[error("no reports to compare")]
    NoReports,
    #[error("report {0:?} uses a different band grid from the reference")]
    MismatchedBands(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Base-10 third-octave centres from 100 Hz to 10 kHz.
pub fn third_octave_centers() -> Vec<f64> {
    (-10..=10).map(|k| 1000.0 * 10f64.powf(k as f64 / 10.0)).collect()
}

pub fn band_edges(center: f64) -> (f64, f64) {
    let half = 10f64.powf(1.0 / 20.0);
    (center / half, center * half)
}

fn power_to_db(power: f64) -> f64 {
    if power > 0.0 {
        (10.0 * power.log10()).max(LEVEL_FLOOR_DB)
    } else {
        LEVEL_FLOOR_DB
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLevel {
    pub center_hz: f64,
    pub level_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThirdOctaveReport {
    pub label: String,
    pub reference: LevelRef,
    pub bands: Vec<BandLevel>,
    /// Power sum of the bands.
    pub overall_db: f64,
}

impl ThirdOctaveReport {
    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Convert FS levels to nominal SPL. Applying an offset to a report
    /// that is already SPL adds to the existing offset.
    pub fn with_spl_offset(mut self, offset_db: f64) -> Self {
        let shift = |v: f64| if v <= LEVEL_FLOOR_DB { v } else { v + offset_db };
        for b in &mut self.bands {
            b.level_db = shift(b.level_db);
        }
        self.overall_db = shift(self.overall_db);
        self.reference = LevelRef::SoundPressure;
        self
    }

    pub fn level_at(&self, center_hz: f64) -> Option<f64> {
        self.bands
            .iter()
            .find(|b| (b.center_hz / center_hz - 1.0).abs() < 1e-6)
            .map(|b| b.level_db)
    }

    fn from_spectrum(spectrum: &PowerSpectrum) -> Self {
        let powers: Vec<(f64, f64)> = third_octave_centers()
            .into_iter()
            .map(|c| {
                let (lo, hi) = band_edges(c);
                (c, spectrum.band_power(lo, hi))
            })
            .collect();
        let total: f64 = powers.iter().map(|(_, p)| p).sum();
        ThirdOctaveReport {
            label: String::new(),
            reference: LevelRef::FullScale,
            bands: powers
                .into_iter()
                .map(|(center_hz, p)| BandLevel { center_hz, level_db: power_to_db(p) })
                .collect(),
            overall_db: power_to_db(total),
        }
    }
}

/// Third-octave band levels in dB FS by FFT power binning.
pub fn third_octave_levels(buffer: &AudioBuffer) -> Result<ThirdOctaveReport, CalibrationError> {
    let seconds = buffer.duration_seconds();
    if seconds < MIN_ANALYSIS_SECONDS {
        return Err(CalibrationError::TooShort(seconds));
    }
    Ok(ThirdOctaveReport::from_spectrum(&welch(buffer.samples(), buffer.sample_rate(), ANALYSIS_FRAME)))
}

/// Power-averaged spectrum of the corpus, each buffer weighted equally.
pub fn average_spectrum(corpus: &[AudioBuffer]) -> Result<PowerSpectrum, CalibrationError> {
    let first = corpus.first().ok_or(CalibrationError::EmptyCorpus)?;
    let rate = first.sample_rate();
    let mut acc = vec![0.0; ANALYSIS_FRAME / 2 + 1];
    for buf in corpus {
        if buf.sample_rate() != rate {
            return Err(CalibrationError::SampleRateMismatch(rate, buf.sample_rate()));
        }
        for (a, p) in acc.iter_mut().zip(welch(buf.samples(), rate, ANALYSIS_FRAME).power) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|a| *a /= corpus.len() as f64);
    Ok(PowerSpectrum { power: acc, bin_hz: rate as f64 / ANALYSIS_FRAME as f64 })
}

/// Gaussian noise whose spectrum and overall level follow the corpus average.
pub fn shaped_noise(corpus: &[AudioBuffer], duration: f64, seed: u64) -> Result<AudioBuffer, CalibrationError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(CalibrationError::InvalidDuration(duration));
    }
    let reference = average_spectrum(corpus)?;
    let rate = corpus[0].sample_rate();
    let n = seconds_to_samples(duration, rate).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum: Vec<Complex<f64>> =
        (0..n).map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut spectrum);

    let bin_hz = rate as f64 / n as f64;
    let last = reference.power.len() - 1;
    let density = |f: f64| {
        let x = (f / reference.bin_hz).min(last as f64);
        let i = x.floor() as usize;
        let frac = x - i as f64;
        let hi = reference.power[(i + 1).min(last)];
        reference.power[i] * (1.0 - frac) + hi * frac
    };
    for (k, c) in spectrum.iter_mut().enumerate() {
        *c *= density(k.min(n - k) as f64 * bin_hz).sqrt();
    }

    // Welch leakage smears steep spectral edges once when the reference is
    // measured and again when the noise is; equalise per band to undo it.
    let bands: Vec<(f64, f64, f64)> = third_octave_centers()
        .into_iter()
        .map(|c| {
            let (lo, hi) = band_edges(c);
            (lo, hi, reference.band_power(lo, hi))
        })
        .collect();
    let target_ms: f64 = reference.power.iter().sum();
    let mut samples = synthesize(&mut planner, &spectrum, target_ms);
    for _ in 0..EQUALISATION_PASSES {
        let measured = welch(&samples, rate, ANALYSIS_FRAME);
        for &(lo, hi, want) in &bands {
            let have = measured.band_power(lo, hi);
            if want <= 0.0 || have <= 0.0 {
                continue;
            }
            let gain = (want / have).sqrt();
            for (k, c) in spectrum.iter_mut().enumerate() {
                let f = k.min(n - k) as f64 * bin_hz;
                if f >= lo && f < hi {
                    *c *= gain;
                }
            }
        }
        samples = synthesize(&mut planner, &spectrum, target_ms);
    }
    Ok(AudioBuffer::new(samples, rate)?)
}

const EQUALISATION_PASSES: usize = 2;

/// Inverse FFT scaled to mean square `target_ms`.
fn synthesize(planner: &mut FftPlanner<f64>, spectrum: &[Complex<f64>], target_ms: f64) -> Vec<f32> {
    let mut buf = spectrum.to_vec();
    planner.plan_fft_inverse(buf.len()).process(&mut buf);
    let ms = buf.iter().map(|c| c.re * c.re).sum::<f64>() / buf.len() as f64;
    let gain = if ms > 0.0 { (target_ms / ms).sqrt() } else { 0.0 };
    buf.iter().map(|c| (c.re * gain) as f32).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSeries {
    pub label: String,
    /// Band levels after scaling the overall level to the target.
    pub levels_spl: Vec<f64>,
    /// Difference from the reference series, per band.
    pub deviation_db: Vec<f64>,
    /// Centres of bands deviating by more than [`DEVIATION_FLAG_DB`].
    pub flagged_hz: Vec<f64>,
}

/// Band-by-band comparison of several playback chains. The first series is
/// the reference shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub target_spl: f64,
    pub centers_hz: Vec<f64>,
    pub series: Vec<CalibrationSeries>,
}

pub fn calibration_report(
    interfaces: &[ThirdOctaveReport],
    target_spl: f64,
) -> Result<CalibrationReport, CalibrationError> {
    let reference = interfaces.first().ok_or(CalibrationError::NoReports)?;
    let centers: Vec<f64> = reference.bands.iter().map(|b| b.center_hz).collect();
    let normalize = |r: &ThirdOctaveReport| -> Vec<f64> {
        let offset = target_spl - r.overall_db;
        r.bands.iter().map(|b| b.level_db + offset).collect()
    };
    let ref_levels = normalize(reference);
    let mut series = Vec::with_capacity(interfaces.len());
    for report in interfaces {
        let same_grid = report.bands.len() == centers.len()
            && report.bands.iter().zip(&centers).all(|(b, c)| (b.center_hz / c - 1.0).abs() < 1e-9);
        if !same_grid {
            return Err(CalibrationError::MismatchedBands(report.label.clone()));
        }
        let levels = normalize(report);
        let deviation: Vec<f64> = levels.iter().zip(&ref_levels).map(|(l, r)| l - r).collect();
        let flagged_hz = deviation
            .iter()
            .zip(&centers)
            .filter(|(d, _)| d.abs() > DEVIATION_FLAG_DB)
            .map(|(_, c)| *c)
            .collect();
        series.push(CalibrationSeries {
            label: report.label.clone(),
            levels_spl: levels,
            deviation_db: deviation,
            flagged_hz,
        });
    }
    Ok(CalibrationReport { target_spl, centers_hz: centers, series })
}

impl CalibrationReport {
    /// One row per band: centre, then level and deviation per series.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CalibrationError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["band_hz".to_string()];
        for s in &self.series {
            header.push(format!("{}_db_spl", s.label));
            header.push(format!("{}_deviation_db", s.label));
        }
        w.write_record(&header)?;
        for (i, c) in self.centers_hz.iter().enumerate() {
            let mut row = vec![format!("{c:.1}")];
            for s in &self.series {
                row.push(format!("{:.2}", s.levels_spl[i]));
                row.push(format!("{:.2}", s.deviation_db[i]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
