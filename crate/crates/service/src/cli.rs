//! Command-line front end: the HTTP service plus batch tools for stimuli,
//! calibration and analysis.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use crm_core::audio::{read_wav, write_wav, AudioBuffer};
use crm_core::calibration::{calibration_report, shaped_noise, third_octave_levels};
use crm_core::session::FeedbackLatencies;
use crm_core::stats::{
    backchannel_tally, bootstrap_feedback_duration, dataset_from_rows, duration_pairs, icc_2k, intelligibility_series, nars_score, nars_table,
    one_sample_t, paired_t, read_coded_behaviours, read_metrics_csv, rm_anova, write_anova_csv, write_ttest_csv,
    Behavior, Summary,
};
use crm_core::stimulus::{build_condition_grid, pregenerate_corpus, Corpus, RenderOptions};
use serde::Serialize;
use thiserror::Error;

use crate::config::{AgentMode, ServiceConfig};
use crate::registry::AppState;
use crate::routes::router;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Audio(#[from] crm_core::audio::AudioError),
    #[error(transparent)]
    Stimulus(#[from] crm_core::stimulus::StimulusError),
    #[error(transparent)]
    Calibration(#[from] crm_core::calibration::CalibrationError),
    #[error(transparent)]
    Stats(#[from] crm_core::stats::StatsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(name = "crm", version, about = "Speech-in-speech CRM testing: service, stimuli, calibration and statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP session service.
    Serve(ServeArgs),
    /// Write the built-in synthetic talker's 96 sentences as a corpus.
    SynthCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 44_100)]
        sample_rate: u32,
    },
    /// Render one participant's 95 stimuli and manifest.
    Pregenerate {
        #[arg(long)]
        corpus_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Speech-shaped calibration noise and a third-octave level report.
    Calibrate(CalibrateArgs),
    /// Three-way repeated-measures ANOVA of a metrics table.
    Anova {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write mean intelligibility per interface × TMR × voice here.
        #[arg(long)]
        series_out: Option<PathBuf>,
    },
    /// Paired test of session durations (--metrics) or a one-sample test
    /// from summary statistics (--mean --sd --n --mu).
    Ttest(TtestArgs),
    /// Inter-coder reliability of coded backchannel behaviours.
    Icc {
        #[arg(long)]
        coded: PathBuf,
        /// Also write per-coder counts here.
        #[arg(long)]
        tally_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score NARS questionnaires and test each subscale against neutral.
    Nars {
        /// One row per participant: optional id, then 14 item responses.
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feedback time added by the embodied interface.
    Bootstrap {
        #[arg(long, default_value_t = 0.9)]
        p_correct: f64,
        #[arg(long, default_value_t = 91)]
        trials: usize,
        #[arg(long, default_value_t = 2.5)]
        nod: f64,
        #[arg(long, default_value_t = 3.2)]
        shake: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CRM_CORPUS_DIR")]
    pub corpus_dir: PathBuf,
    #[arg(long, env = "CRM_DATA_DIR")]
    pub data_dir: PathBuf,
    #[arg(long, env = "CRM_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, env = "CRM_AGENT_MODE", value_enum, default_value_t = AgentMode::Simulated)]
    pub agent_mode: AgentMode,
    /// Experimental trials after which a break is offered.
    #[arg(long, env = "CRM_BREAK_AFTER", value_delimiter = ',', default_values_t = [31, 61])]
    pub break_after: Vec<usize>,
    #[arg(long, env = "CRM_NOD_SECONDS", default_value_t = 2.5)]
    pub nod_seconds: f64,
    #[arg(long, env = "CRM_SHAKE_SECONDS", default_value_t = 3.2)]
    pub shake_seconds: f64,
    #[arg(long, env = "CRM_HIGHLIGHT_SECONDS", default_value_t = 0.75)]
    pub highlight_seconds: f64,
}

impl ServeArgs {
    pub fn config(&self) -> ServiceConfig {
        ServiceConfig {
            corpus_dir: self.corpus_dir.clone(),
            data_dir: self.data_dir.clone(),
            listen: self.listen,
            agent_mode: self.agent_mode,
            break_after: self.break_after.clone(),
            latencies: FeedbackLatencies { nod: self.nod_seconds, shake: self.shake_seconds, highlight: self.highlight_seconds },
        }
    }
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Directory of corpus sentence WAVs.
    #[arg(long)]
    pub corpus_dir: PathBuf,
    /// Noise length in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Level every series is normalized to, dB SPL.
    #[arg(long, default_value_t = 65.0)]
    pub target_spl: f64,
    /// Where calibration_noise.wav and calibration_report.csv go.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Recording of the noise played through an output path, as label=file.wav.
    #[arg(long, value_parser = parse_labelled)]
    pub measured: Vec<(String, PathBuf)>,
}

fn parse_labelled(s: &str) -> Result<(String, PathBuf), String> {
    let (label, path) = s.split_once('=').ok_or_else(|| format!("expected label=path, got {s:?}"))?;
    if label.is_empty() || label.contains(',') {
        return Err(format!("bad label {label:?}"));
    }
    Ok((label.to_string(), PathBuf::from(path)))
}

#[derive(Debug, Args)]
pub struct TtestArgs {
    #[arg(long, conflicts_with_all = ["mean", "sd", "n", "mu"])]
    pub metrics: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    #[arg(long)]
    pub sd: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// With --metrics, also write each participant's two durations here.
    #[arg(long, requires = "metrics", conflicts_with_all = ["mean", "sd", "n", "mu"])]
    pub series_out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve(args) => serve_blocking(args.config()),
        Command::SynthCorpus { out, seed, sample_rate } => {
            Corpus::synthetic(seed, sample_rate).write_dir(&out)?;
            eprintln!("wrote 96 sentences to {}", out.display());
            Ok(())
        }
        Command::Pregenerate { corpus_dir, out, seed } => {
            let corpus = Corpus::load_dir(&corpus_dir)?;
            let manifest = pregenerate_corpus(&build_condition_grid(), &corpus, seed, &out, RenderOptions::default())?;
            eprintln!("rendered {} stimuli into {}", manifest.trials.len(), out.display());
            Ok(())
        }
        Command::Calibrate(args) => calibrate(&args),
        Command::Anova { metrics, out, series_out } => {
            let rows = read_metrics_csv(File::open(metrics)?)?;
            if let Some(p) = series_out {
                write_rows(&p, intelligibility_series(&rows))?;
            }
            let table = rm_anova(&dataset_from_rows(&rows)?)?;
            write_anova_csv(&table, output(out.as_deref())?)?;
            Ok(())
        }
        Command::Ttest(args) => ttest(&args),
        Command::Icc { coded, tally_out, out } => icc(&coded, tally_out.as_deref(), out.as_deref()),
        Command::Nars { items, out } => {
            let scores = read_nars_items(&items)?;
            write_ttest_csv(&nars_table(&scores)?, output(out.as_deref())?)?;
            Ok(())
        }
        Command::Bootstrap { p_correct, trials, nod, shake, reps, seed } => {
            print_json(&bootstrap_feedback_duration(p_correct, trials, (nod, shake), reps, seed)?)
        }
    }
}

fn serve_blocking(config: ServiceConfig) -> Result<(), CliError> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build()?.block_on(serve(config))
}

/// Bind and serve until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.data_dir)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    log::info!(
        "listening on {} (corpora {:?}, agent {:?})",
        listener.local_addr()?,
        config.installed_languages(),
        config.agent_mode
    );
    let app = router(Arc::new(AppState::new(config)));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let corpus = Corpus::load_dir(&args.corpus_dir)?;
    let buffers: Vec<AudioBuffer> = corpus.sentences().map(|s| (*s.audio).clone()).collect();
    let noise = shaped_noise(&buffers, args.duration, args.seed)?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_wav(args.out_dir.join("calibration_noise.wav"), &noise)?;

    let joined: Vec<f32> = buffers.iter().flat_map(|b| b.samples().iter().copied()).collect();
    let mut reports = vec![
        third_octave_levels(&AudioBuffer::new(joined, corpus.sample_rate())?)?.labelled("speech"),
        third_octave_levels(&noise)?.labelled("noise"),
    ];
    for (label, path) in &args.measured {
        reports.push(third_octave_levels(&read_wav(path)?)?.labelled(label.clone()));
    }
    let report = calibration_report(&reports, args.target_spl)?;
    report.write_csv(File::create(args.out_dir.join("calibration_report.csv"))?)?;
    for s in report.series.iter().filter(|s| !s.flagged_hz.is_empty()) {
        log::warn!("{}: bands deviating from the speech spectrum by more than 6 dB: {:?}", s.label, s.flagged_hz);
    }
    eprintln!("wrote calibration_noise.wav and calibration_report.csv to {}", args.out_dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct DurationTest {
    participants: Vec<String>,
    plain_min: Summary,
    embodied_min: Summary,
    test: crm_core::stats::TTest,
}

pub fn ttest(args: &TtestArgs) -> Result<(), CliError> {
    if let Some(path) = &args.metrics {
        let rows = read_metrics_csv(File::open(path)?)?;
        let (participants, plain, embodied) = duration_pairs(&rows);
        if let Some(p) = &args.series_out {
            #[derive(Serialize)]
            struct Pair<'a> {
                participant: &'a str,
                plain_min: f64,
                embodied_min: f64,
            }
            let pairs = participants.iter().zip(plain.iter().zip(&embodied));
            write_rows(p, pairs.map(|(id, (&a, &b))| Pair { participant: id, plain_min: a, embodied_min: b }))?;
        }
        return print_json(&DurationTest {
            participants,
            plain_min: Summary::of(&plain)?,
            embodied_min: Summary::of(&embodied)?,
            test: paired_t(&plain, &embodied)?,
        });
    }
    match (args.mean, args.sd, args.n, args.mu) {
        (Some(mean), Some(sd), Some(n), Some(mu)) => print_json(&one_sample_t(Summary { mean, sd, n }, mu)?),
        _ => Err(CliError::Usage("give --metrics, or all of --mean --sd --n --mu".into())),
    }
}

/// Rows of 14 item responses, optionally preceded by an id column. A
/// header row is skipped.
pub fn read_nars_items(path: &Path) -> Result<Vec<crm_core::stats::NarsScore>, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path)?;
    let mut scores = Vec::new();
    for record in reader.records() {
        let record = record?;
        let fields: Vec<&str> = record.iter().collect();
        let items = match fields.len() {
            14 => &fields[..],
            15 => &fields[1..],
            n => return Err(CliError::Usage(format!("NARS row has {n} fields, expected 14 items (plus optional id)"))),
        };
        let Ok(values) = items.iter().map(|v| v.parse::<u8>()).collect::<Result<Vec<u8>, _>>() else {
            if scores.is_empty() {
                continue;
            }
            return Err(CliError::Usage(format!("non-numeric NARS row {fields:?}")));
        };
        scores.push(nars_score(&values)?);
    }
    Ok(scores)
}

#[derive(Debug, Serialize)]
struct IccRow {
    behavior: Behavior,
    icc: Option<f64>,
    ms_rows: Option<f64>,
    ms_cols: Option<f64>,
    ms_error: Option<f64>,
    segments: usize,
    coders: usize,
    note: String,
}

fn icc(coded: &Path, tally_out: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let events = read_coded_behaviours(File::open(coded)?)?;
    let tally = backchannel_tally(&events);
    if let Some(p) = tally_out {
        tally.write_csv(File::create(p)?)?;
    }
    let mut w = csv::Writer::from_writer(output(out)?);
    for behavior in Behavior::ALL {
        let matrix = tally.rating_matrix(behavior);
        let coders = matrix.first().map_or(0, Vec::len);
        let row = match icc_2k(&matrix) {
            Ok(r) => IccRow {
                behavior,
                icc: Some(r.icc),
                ms_rows: Some(r.ms_rows),
                ms_cols: Some(r.ms_cols),
                ms_error: Some(r.ms_error),
                segments: r.items,
                coders: r.raters,
                note: r.model,
            },
            Err(e) => IccRow {
                behavior,
                icc: None,
                ms_rows: None,
                ms_cols: None,
                ms_error: None,
                segments: matrix.len(),
                coders,
                note: e.to_string(),
            },
        };
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
