//! Pregeneration of every stimulus a session needs, and the manifest that
//! indexes them.
//!
//! Manifest format (`manifest.jsonl`, version 1): the first line is a
//! [`ManifestHeader`] object, every following line one [`TrialSpec`]:
//! training trials first, then the experimental block in presentation order.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, LevelDb};
use crate::voice::apply_voice;

use super::{
    build_experimental_set, build_training_set, mix_trial, splice_masker, CallSign, ConditionGrid, Corpus,
    MixedTrial, SplicedMasker, StimulusError, TrialPhase, TrialSpec,
};

pub const MANIFEST_SCHEMA: &str = "crm-stimulus-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema: String,
    pub version: u32,
    pub seed: u64,
    pub sample_rate: u32,
    pub presentation_level_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub trials: Vec<TrialSpec>,
}

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    /// Overall RMS of every rendered stimulus.
    pub presentation_level: LevelDb,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { presentation_level: LevelDb::fs(-20.0) }
    }
}

impl Manifest {
    /// Trial plan for `seed` without rendering any audio.
    pub fn plan(grid: &ConditionGrid, seed: u64, sample_rate: u32, options: RenderOptions) -> Manifest {
        let mut trials = build_training_set(seed);
        trials.extend(build_experimental_set(grid, seed));
        Manifest {
            header: ManifestHeader {
                schema: MANIFEST_SCHEMA.into(),
                version: MANIFEST_VERSION,
                seed,
                sample_rate,
                presentation_level_db: options.presentation_level.db(),
            },
            trials,
        }
    }

    pub fn training(&self) -> impl Iterator<Item = &TrialSpec> {
        self.trials.iter().filter(|t| t.phase == TrialPhase::Training)
    }

    pub fn experimental(&self) -> impl Iterator<Item = &TrialSpec> {
        self.trials.iter().filter(|t| t.phase == TrialPhase::Experimental)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), StimulusError> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        let line = |v: &dyn erased::Json| v.to_line();
        writeln!(out, "{}", line(&self.header))?;
        for t in &self.trials {
            writeln!(out, "{}", line(t))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Manifest, StimulusError> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut lines = reader.lines();
        let header_line = lines.next().ok_or_else(|| StimulusError::Manifest("empty file".into()))??;
        let header: ManifestHeader =
            serde_json::from_str(&header_line).map_err(|e| StimulusError::Manifest(format!("header: {e}")))?;
        if header.schema != MANIFEST_SCHEMA || header.version != MANIFEST_VERSION {
            return Err(StimulusError::Manifest(format!(
                "unsupported schema {} v{}",
                header.schema, header.version
            )));
        }
        let mut trials = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            trials.push(
                serde_json::from_str(&line).map_err(|e| StimulusError::Manifest(format!("line {}: {e}", n + 2)))?,
            );
        }
        Ok(Manifest { header, trials })
    }
}

mod erased {
    pub trait Json {
        fn to_line(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_line(&self) -> String {
            serde_json::to_string(self).expect("manifest records serialize")
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderedTrial {
    pub mixed: MixedTrial,
    /// The unmorphed splice, absent for baseline trials.
    pub masker: Option<SplicedMasker>,
}

/// Synthesize one trial's stimulus.
pub fn render_trial(spec: &TrialSpec, corpus: &Corpus, options: RenderOptions) -> Result<RenderedTrial, StimulusError> {
    let target = corpus
        .get(&spec.target)
        .ok_or_else(|| StimulusError::IncompleteCorpus(format!("missing {}", spec.target)))?;
    let Some(voice) = spec.condition.voice.filter(|_| !spec.condition.tmr.is_baseline()) else {
        let mixed = mix_trial(&target.audio, None, spec.condition.tmr, options.presentation_level)?;
        return Ok(RenderedTrial { mixed, masker: None });
    };
    let pool = corpus.with_call_sign(CallSign::Cat);
    let spliced = splice_masker(&pool, &spec.target, target.audio.len(), &mut spec.masker_rng())?;
    let morphed = apply_voice(&spliced.audio, voice)?;
    let mixed = mix_trial(&target.audio, Some(&morphed), spec.condition.tmr, options.presentation_level)?;
    Ok(RenderedTrial { mixed, masker: Some(spliced) })
}

fn stimulus_name(spec: &TrialSpec) -> String {
    match spec.phase {
        TrialPhase::Training => format!("stimuli/training_{:02}.wav", spec.index),
        TrialPhase::Experimental => format!("stimuli/trial_{:03}.wav", spec.index),
    }
}

/// Render all training and experimental stimuli into `out_dir` and write
/// the manifest next to them. Trials render in parallel; each draws only
/// from its own seed, so the output does not depend on scheduling.
pub fn pregenerate_corpus(
    grid: &ConditionGrid,
    corpus: &Corpus,
    seed: u64,
    out_dir: impl AsRef<Path>,
    options: RenderOptions,
) -> Result<Manifest, StimulusError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir.join("stimuli"))?;
    let mut manifest = Manifest::plan(grid, seed, corpus.sample_rate(), options);
    manifest.trials.par_iter_mut().try_for_each(|spec| {
        let rendered = render_trial(spec, corpus, options)?;
        let name = stimulus_name(spec);
        write_wav(out_dir.join(&name), &rendered.mixed.audio)?;
        spec.stimulus = Some(name);
        Ok::<_, StimulusError>(())
    })?;
    manifest.write(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
