use crm_core::audio::{read_wav, AudioBuffer, LevelDb};
use crm_core::stats::special::chi2_sf;
use crm_core::stimulus::{
    build_condition_grid, mix_trial, pregenerate_corpus, render_trial, splice_masker, CallSign, Corpus, Manifest,
    RenderOptions, SentenceId, TmrCondition, MASKER_LEAD_SECONDS, MANIFEST_FILE, SEGMENT_MAX_SECONDS,
    SEGMENT_MIN_SECONDS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: u32 = 44_100;

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

#[test]
fn masker_timing_and_segment_uniformity() {
    let corpus = Corpus::synthetic(11, FS);
    let pool: Vec<_> = corpus.with_call_sign(CallSign::Cat);
    let dogs = SentenceId::all_for(CallSign::Dog);
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let lo = (SEGMENT_MIN_SECONDS * FS as f64).round() as usize;
    let hi = (SEGMENT_MAX_SECONDS * FS as f64).round() as usize;
    const BINS: usize = 10;
    let mut counts = [0usize; BINS];
    for _ in 0..200 {
        let target = dogs[rng.random_range(0..dogs.len())];
        let target_len = corpus.get(&target).unwrap().audio.len();
        let m = splice_masker(&pool, &target, target_len, &mut rng).unwrap();
        let diff = m.audio.len() as i64 - target_len as i64;
        assert!((diff - FS as i64).abs() <= 1, "masker − target = {diff} samples");
        for seg in &m.segments {
            assert!((lo..=hi).contains(&seg.len));
            assert!(!seg.source.shares_keyword_with(&target));
            assert_eq!(seg.source.call_sign, CallSign::Cat);
            counts[((seg.len - lo) * BINS / (hi - lo + 1)).min(BINS - 1)] += 1;
        }
        assert_eq!(m.segments.iter().map(|s| s.kept).sum::<usize>(), m.audio.len());
    }
    let total: usize = counts.iter().sum();
    let expected = total as f64 / BINS as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = chi2_sf(chi2, (BINS - 1) as f64);
    assert!(p > 0.01, "segment lengths not uniform: χ² {chi2:.2}, p {p:.4}, {counts:?}");
}

#[test]
fn mixed_tmr_matches_nominal() {
    let corpus = Corpus::synthetic(3, FS);
    let pool: Vec<_> = corpus.with_call_sign(CallSign::Cat);
    let target_id = SentenceId::all_for(CallSign::Dog)[17];
    let target = &corpus.get(&target_id).unwrap().audio;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let masker = splice_masker(&pool, &target_id, target.len(), &mut rng).unwrap().audio;
    let lead = (MASKER_LEAD_SECONDS * FS as f64).round() as usize;
    for tmr in TmrCondition::EXPERIMENTAL_DB {
        let mix = mix_trial(target, Some(&masker), TmrCondition::Masked(tmr), LevelDb::fs(-20.0)).unwrap();
        let g = mix.target_gain;
        let out: Vec<f64> = mix.audio.samples().iter().map(|&v| v as f64).collect();
        let target_part: Vec<f64> = target.samples().iter().map(|&v| v as f64 * g).collect();
        let mut masker_part = out.clone();
        for (m, t) in masker_part[lead..].iter_mut().zip(&target_part) {
            *m -= t;
        }
        let measured = 20.0 * (rms(&target_part) / rms(&masker_part)).log10();
        assert!((measured - tmr).abs() < 0.1, "nominal {tmr} measured {measured}");
        assert!((20.0 * rms(&out).log10() + 20.0).abs() < 0.1);
    }
}

#[test]
fn baseline_has_no_masker() {
    let corpus = Corpus::synthetic(3, FS);
    let target = &corpus.get(&SentenceId::all_for(CallSign::Dog)[0]).unwrap().audio;
    let mix = mix_trial(target, None, TmrCondition::Baseline, LevelDb::fs(-20.0)).unwrap();
    assert_eq!(mix.audio.len(), target.len());
    assert!(mix.masker_gain.is_none());
    assert!(mix_trial(target, None, TmrCondition::Masked(0.0), LevelDb::fs(-20.0)).is_err());
}

#[test]
fn pregenerated_stimuli_on_disk() {
    let corpus = Corpus::synthetic(8, FS);
    let grid = build_condition_grid();
    let dir = tempfile::tempdir().unwrap();
    let manifest = pregenerate_corpus(&grid, &corpus, 42, dir.path(), RenderOptions::default()).unwrap();
    assert_eq!(manifest.trials.len(), 95);
    let on_disk = Manifest::read(dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(on_disk, manifest);
    let wavs = std::fs::read_dir(dir.path().join("stimuli")).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav")).count();
    assert_eq!(wavs, 95);
    let tmr_counts = TmrCondition::EXPERIMENTAL_DB.map(|db| manifest.experimental().filter(|t| t.condition.tmr.db() == Some(db)).count());
    assert_eq!(tmr_counts, [28, 28, 28]);
    let first = &manifest.trials[5];
    let audio: AudioBuffer = read_wav(dir.path().join(first.stimulus.as_ref().unwrap())).unwrap();
    let again = render_trial(first, &corpus, RenderOptions::default()).unwrap();
    assert_eq!(audio.len(), again.mixed.audio.len());
    let max_err = audio.samples().iter().zip(again.mixed.audio.samples()).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    assert!(max_err <= 1.0 / 32768.0 + 1e-6, "rendering is not deterministic: {max_err}");
}
