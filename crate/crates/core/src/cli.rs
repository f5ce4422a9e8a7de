//! The `audiogestalt` command line.
//!
//! Exit codes: 0 success, 1 validation/runtime error, 2 usage error.
//! Machine-readable results go to stdout (or `--out`); diagnostics go to
//! stderr.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::datamodel::{
    load_gestalt_scores, load_manifest, load_predictions, load_tags, AudioComponent, Dataset, FusionConfig,
    GestaltFeatures, Manifest, PredictionTable, Split, VideoRecord,
};
use crate::dsp::{self, DspParams};
use crate::exec::{with_jobs, Exec};
use crate::fusion::{fused_csv, predict_all, Pathway};
use crate::gestalt::{
    self, familiarity, feature_report, gestalt_csv, gestalt_score, imageability, load_feature_file, musicality,
    normalize_features, GestaltWeights, ImageabilityMapping, MusicRule, NormalizationStats, DEFAULT_MUSIC_LABELS,
};
use crate::metrics::spearman;
use crate::optimizer::{rscv, rscv_gestalt_weights, rscv_weights, sweep_csv, threshold_sweep, SearchSpace};
use crate::synthgen::{self, NoiseLevels, SynthMode, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "audiogestalt", version, about = "Audio-gestalt gated late fusion for video memorability")]
struct Cli {
    /// RNG seed for searches and synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores). Output does not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Write the primary result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// More diagnostics on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// WAV file to a three-channel MFCC/delta/delta-delta tensor file.
    Mfcc(MfccArgs),
    /// Gestalt features and scores from tags and per-video feature predictions.
    Gestalt(GestaltArgs),
    /// Fused prediction per video.
    Fuse(DataArgs),
    /// Spearman correlation of fused predictions against ground truth.
    Evaluate(DataArgs),
    /// Randomized search over fusion weights and the gestalt threshold.
    Optimize(OptimizeArgs),
    /// Randomized search over the four gestalt weights.
    OptimizeGestalt(OptimizeGestaltArgs),
    /// Spearman at each gestalt threshold of a `start:stop:step` range.
    Sweep(SweepArgs),
    /// Generate a synthetic dataset with planted structure.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct MfccArgs {
    #[arg(long)]
    wav: PathBuf,
    #[arg(long, default_value_t = 2048)]
    n_fft: usize,
    #[arg(long, default_value_t = 256)]
    hop_length: usize,
    #[arg(long, default_value_t = 128)]
    n_mels: usize,
    #[arg(long, default_value_t = 20)]
    n_mfcc: usize,
    #[arg(long, default_value_t = 9)]
    delta_width: usize,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// One or more prediction CSVs; columns are merged.
    #[arg(long, required = true, num_args = 1..)]
    predictions: Vec<PathBuf>,
    /// Gestalt CSV with a `gestalt` column. Videos without a score take the without-audio pathway.
    #[arg(long)]
    gestalt: Option<PathBuf>,
    /// `paper` or a path to a JSON fusion config.
    #[arg(long, default_value = "paper")]
    config: String,
    /// train, validation, test or all.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Debug, Args)]
struct GestaltArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// CSV `video_id,imageability,hcu,arousal,familiarity`; empty imageability or
    /// familiarity cells are derived from the video's tag file.
    #[arg(long)]
    features: PathBuf,
    /// Four comma-separated weights (imageability, hcu, arousal, familiarity).
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value = "relative")]
    music_rule: String,
    #[arg(long, default_value = "inverse")]
    imageability: String,
    /// Extra labels counted as music (repeatable).
    #[arg(long = "music-label")]
    music_labels: Vec<String>,
    /// Split whose min/max normalizes every video.
    #[arg(long, default_value = "train")]
    stats_split: String,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Write the distribution report (JSON) here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 0.01)]
    weight_step: f64,
    #[arg(long, default_value_t = 0.01)]
    threshold_step: f64,
    /// Ungated search over these prediction columns (comma-separated).
    #[arg(long, value_delimiter = ',')]
    components: Option<Vec<String>>,
    #[arg(long)]
    audio_component: Option<String>,
    #[arg(long)]
    plain_captions: bool,
}

#[derive(Debug, Args)]
struct OptimizeGestaltArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Gestalt feature CSV (see `gestalt --features`).
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "0:1:0.01")]
    thresholds: String,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.8)]
    gestalt_split: f64,
    #[arg(long, default_value = "noisy")]
    mode: String,
    #[arg(long)]
    frame_noise: Option<f64>,
    #[arg(long)]
    caption_noise: Option<f64>,
    #[arg(long)]
    audio_noise: Option<f64>,
    /// Directory receiving manifest.jsonl, predictions.csv and gestalt.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.to_string())
    }
}

type CmdResult = Result<String, Failure>;

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    let jobs = cli.jobs;
    let result = with_jobs(jobs, || execute(&cli));
    match result {
        Ok(output) => match &cli.out {
            Some(path) if !matches!(cli.command, Command::Mfcc(_)) => match fs::write(path, output) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {}: {e}", path.display());
                    1
                }
            },
            _ => {
                let _ = stdout.write_all(output.as_bytes());
                0
            }
        },
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}\n\nUsage: audiogestalt <COMMAND> [OPTIONS]\nRun `audiogestalt --help` for details.");
            2
        }
        Err(Failure::Run(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

fn execute(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Mfcc(a) => cmd_mfcc(cli, a),
        Command::Gestalt(a) => cmd_gestalt(cli, a),
        Command::Fuse(a) => cmd_fuse(cli, a),
        Command::Evaluate(a) => cmd_evaluate(cli, a),
        Command::Optimize(a) => cmd_optimize(cli, a),
        Command::OptimizeGestalt(a) => cmd_optimize_gestalt(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Synth(a) => cmd_synth(cli, a),
    }
}

fn json_out(v: &impl serde::Serialize) -> CmdResult {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// `None` selects every split.
fn parse_split(raw: Option<&str>, default: Option<Split>) -> Result<Option<Split>, Failure> {
    match raw {
        None => Ok(default),
        Some("all") => Ok(None),
        Some(s) => s.parse::<Split>().map(Some).map_err(Failure::Usage),
    }
}

fn parse_config(raw: &str) -> Result<FusionConfig, Failure> {
    if raw == "paper" {
        return Ok(FusionConfig::paper());
    }
    Ok(FusionConfig::load(raw)?)
}

/// `start:stop:step`, endpoints inclusive when `step` divides the span.
pub fn parse_range(raw: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("range `{raw}` must be start:stop:step"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(format!("range `{raw}` needs step > 0 and start <= stop"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

struct Loaded {
    manifest: Manifest,
    predictions: PredictionTable,
    gestalt: Option<HashMap<String, f64>>,
    cfg: FusionConfig,
}

fn load_inputs(a: &DataArgs) -> Result<Loaded, Failure> {
    let manifest = load_manifest(&a.manifest)?;
    let mut predictions = load_predictions(&a.predictions[0])?;
    for p in &a.predictions[1..] {
        predictions = predictions.merge(&load_predictions(p)?)?;
    }
    let gestalt = a.gestalt.as_ref().map(load_gestalt_scores).transpose()?;
    let cfg = parse_config(&a.config)?;
    let unmatched = Dataset::join(&manifest.records, &predictions, None)?.unmatched_prediction_rows;
    if unmatched > 0 {
        log::warn!("{unmatched} prediction rows have no manifest record and are ignored");
    }
    Ok(Loaded { manifest, predictions, gestalt, cfg })
}

fn join(l: &Loaded, split: Option<Split>) -> Result<Dataset, Failure> {
    let records = l.manifest.records_in(split);
    if records.is_empty() {
        return Err(Failure::Run(format!("no manifest records in split {}", split.map_or("all", Split::as_str))));
    }
    let report = Dataset::join(&records, &l.predictions, l.gestalt.as_ref())?;
    Ok(report.dataset)
}

fn split_label(split: Option<Split>) -> &'static str {
    split.map_or("all", Split::as_str)
}

fn cmd_mfcc(cli: &Cli, a: &MfccArgs) -> CmdResult {
    let out = cli.out.as_ref().ok_or_else(|| Failure::Usage("mfcc requires --out <tensor file>".into()))?;
    let (samples, sample_rate) = dsp::load_wav(&a.wav)?;
    let params = DspParams {
        sample_rate,
        n_fft: a.n_fft,
        hop_length: a.hop_length,
        n_mels: a.n_mels,
        n_mfcc: a.n_mfcc,
        delta_width: a.delta_width,
        ..DspParams::default()
    };
    let tensor = dsp::extract_tensor(&samples, &params)?;
    dsp::write_tensor(&tensor, out)?;
    json_out(&json!({
        "tensor": out,
        "channels": 3,
        "rows": tensor.rows(),
        "cols": tensor.cols(),
        "sample_rate": sample_rate,
        "samples": samples.len(),
    }))
}

/// Raw gestalt features for every manifest record that has a feature row.
fn raw_features(
    manifest: &Manifest,
    rows: &[gestalt::FeatureRow],
    labels: &[String],
    rule: MusicRule,
    mapping: ImageabilityMapping,
) -> Result<Vec<(VideoRecord, GestaltFeatures)>, Failure> {
    let by_id: HashMap<&str, &gestalt::FeatureRow> = rows.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut out = Vec::new();
    let mut skipped = 0;
    for rec in &manifest.records {
        let Some(row) = by_id.get(rec.id.as_str()) else {
            skipped += 1;
            continue;
        };
        let (Some(hcu), Some(arousal)) = (row.hcu, row.arousal) else {
            return Err(Failure::Run(format!("video `{}`: hcu and arousal are required", rec.id)));
        };
        let needs_tags = row.imageability.is_none() || row.familiarity.is_none();
        let tags = if needs_tags {
            let tag_ref = rec.tag_path.as_ref().ok_or_else(|| {
                Failure::Run(format!("video `{}`: no tag file to derive imageability/familiarity", rec.id))
            })?;
            Some(load_tags(manifest.resolve(tag_ref))?)
        } else {
            None
        };
        let img = row
            .imageability
            .unwrap_or_else(|| imageability(musicality(tags.as_ref().expect("loaded"), labels, rule), mapping));
        let fam = row.familiarity.unwrap_or_else(|| familiarity(tags.as_ref().expect("loaded")));
        out.push((rec.clone(), GestaltFeatures::raw(img, hcu, arousal, fam)));
    }
    if skipped > 0 {
        log::warn!("{skipped} manifest records have no gestalt feature row");
    }
    Ok(out)
}

fn normalized_features(
    manifest: &Manifest,
    features: &Path,
    stats_split: Option<Split>,
) -> Result<Vec<(VideoRecord, GestaltFeatures)>, Failure> {
    let labels: Vec<String> = DEFAULT_MUSIC_LABELS.iter().map(|s| s.to_string()).collect();
    let rows = load_feature_file(features)?;
    let raw = raw_features(manifest, &rows, &labels, MusicRule::Relative, ImageabilityMapping::Inverse)?;
    normalize_against(raw, stats_split)
}

fn normalize_against(
    raw: Vec<(VideoRecord, GestaltFeatures)>,
    stats_split: Option<Split>,
) -> Result<Vec<(VideoRecord, GestaltFeatures)>, Failure> {
    let mut source: Vec<GestaltFeatures> =
        raw.iter().filter(|(r, _)| stats_split.map_or(true, |s| r.split == s)).map(|(_, f)| *f).collect();
    let label = if source.is_empty() {
        log::warn!("no videos in the stats split; normalizing over all videos");
        source = raw.iter().map(|(_, f)| *f).collect();
        "all"
    } else {
        split_label(stats_split)
    };
    let stats = NormalizationStats::from_features(&source, label)?;
    let feats: Vec<GestaltFeatures> = raw.iter().map(|(_, f)| *f).collect();
    let normalized = normalize_features(&feats, &stats, Exec::Parallel);
    Ok(raw.into_iter().map(|(r, _)| r).zip(normalized).collect())
}

fn cmd_gestalt(cli: &Cli, a: &GestaltArgs) -> CmdResult {
    let manifest = load_manifest(&a.manifest)?;
    let rule: MusicRule = a.music_rule.parse().map_err(Failure::Usage)?;
    let mapping: ImageabilityMapping = a.imageability.parse().map_err(Failure::Usage)?;
    let weights = match &a.weights {
        None => GestaltWeights::paper(),
        Some(raw) => {
            let v: Vec<f64> = raw
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Failure::Usage(format!("bad --weights `{raw}`")))?;
            let arr: [f64; 4] = v.try_into().map_err(|_| Failure::Usage("--weights needs four values".into()))?;
            GestaltWeights::from_array(arr)?
        }
    };
    let mut labels: Vec<String> = DEFAULT_MUSIC_LABELS.iter().map(|s| s.to_string()).collect();
    labels.extend(a.music_labels.iter().cloned());
    let stats_split = parse_split(Some(&a.stats_split), None)?;

    let rows = load_feature_file(&a.features)?;
    let raw = raw_features(&manifest, &rows, &labels, rule, mapping)?;
    if raw.is_empty() {
        return Err(Failure::Run("no manifest record has gestalt features".into()));
    }
    let normalized = normalize_against(raw, stats_split)?;
    let ids: Vec<String> = normalized.iter().map(|(r, _)| r.id.clone()).collect();
    let feats: Vec<GestaltFeatures> = normalized.iter().map(|(_, f)| *f).collect();
    let scores = feats.iter().map(|f| gestalt_score(f, &weights)).collect::<Result<Vec<_>, _>>()?;

    if let Some(report_path) = &a.report {
        let report = feature_report(&feats, &scores, a.bins)?;
        fs::write(report_path, serde_json::to_string_pretty(&report)?)?;
    }
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(gestalt_csv(&ids, &feats, &scores)),
        Format::Json => {
            let rows: Vec<_> = ids
                .iter()
                .zip(&feats)
                .zip(&scores)
                .map(|((id, f), s)| json!({"video_id": id, "features": f, "gestalt": s}))
                .collect();
            json_out(&rows)
        }
    }
}

fn cmd_fuse(cli: &Cli, a: &DataArgs) -> CmdResult {
    let loaded = load_inputs(a)?;
    let split = parse_split(a.split.as_deref(), None)?;
    let data = join(&loaded, split)?;
    let rows = predict_all(&data, &loaded.cfg, Exec::Parallel)?;
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(fused_csv(&rows)),
        Format::Json => json_out(&rows),
    }
}

fn cmd_evaluate(cli: &Cli, a: &DataArgs) -> CmdResult {
    let loaded = load_inputs(a)?;
    let split = parse_split(a.split.as_deref(), None)?;
    let data = join(&loaded, split)?;
    let rows = predict_all(&data, &loaded.cfg, Exec::Parallel)?;
    let fused: Vec<f64> = rows.iter().map(|r| r.fused_score).collect();
    let rho = spearman(&fused, &data.ground_truth)?;
    let with = rows.iter().filter(|r| r.pathway == Pathway::WithAudio).count();
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => json_out(&json!({
            "spearman": rho,
            "n": rows.len(),
            "with_audio": with,
            "without_audio": rows.len() - with,
            "split": split_label(split),
            "config": loaded.cfg,
        })),
        Format::Csv => Ok(format!(
            "spearman,n,with_audio,without_audio\n{rho:?},{},{with},{}\n",
            rows.len(),
            rows.len() - with
        )),
    }
}

fn search_space(cli: &Cli, s: &SearchArgs, step: f64) -> SearchSpace {
    SearchSpace { n_iterations: s.iterations, n_folds: s.folds, seed: cli.seed, weight_step: step, ..SearchSpace::default() }
}

fn require_json(cli: &Cli, what: &str) -> Result<(), Failure> {
    if cli.format == Some(Format::Csv) {
        return Err(Failure::Usage(format!("{what} only emits JSON")));
    }
    Ok(())
}

fn cmd_optimize(cli: &Cli, a: &OptimizeArgs) -> CmdResult {
    require_json(cli, "optimize")?;
    let loaded = load_inputs(&a.data)?;
    let split = parse_split(a.data.split.as_deref(), Some(Split::Train))?;
    let data = join(&loaded, split)?;
    let mut space = search_space(cli, &a.search, a.weight_step);
    space.threshold_step = a.threshold_step;
    if let Some(components) = &a.components {
        let r = rscv_weights(&data, components, &space, Exec::Parallel)?;
        return json_out(&json!({ "mode": "ungated", "split": split_label(split), "result": r }));
    }
    let mut base = loaded.cfg.clone();
    if let Some(ac) = &a.audio_component {
        base.audio_component = ac.parse::<AudioComponent>().map_err(Failure::Usage)?;
    }
    base.plain_captions |= a.plain_captions;
    let r = rscv(&data, &base, &space, Exec::Parallel)?;
    json_out(&json!({ "mode": "gated", "split": split_label(split), "result": r }))
}

fn cmd_optimize_gestalt(cli: &Cli, a: &OptimizeGestaltArgs) -> CmdResult {
    require_json(cli, "optimize-gestalt")?;
    let loaded = load_inputs(&a.data)?;
    let split = parse_split(a.data.split.as_deref(), Some(Split::Train))?;
    let featured = normalized_features(&loaded.manifest, &a.features, Some(Split::Train))?;
    let (records, features): (Vec<VideoRecord>, Vec<GestaltFeatures>) =
        featured.into_iter().filter(|(r, _)| split.map_or(true, |s| r.split == s)).unzip();
    if records.is_empty() {
        return Err(Failure::Run("no videos with gestalt features in the search split".into()));
    }
    let data = Dataset::join(&records, &loaded.predictions, None)?.dataset;
    let space = search_space(cli, &a.search, a.step);
    let r = rscv_gestalt_weights(&features, &data, &loaded.cfg, &space, Exec::Parallel)?;
    json_out(&json!({ "split": split_label(split), "result": r }))
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> CmdResult {
    let thresholds = parse_range(&a.thresholds).map_err(Failure::Usage)?;
    let loaded = load_inputs(&a.data)?;
    let split = parse_split(a.data.split.as_deref(), None)?;
    let data = join(&loaded, split)?;
    let points = threshold_sweep(&data, &loaded.cfg, &thresholds, Exec::Parallel)?;
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(sweep_csv(&points)),
        Format::Json => json_out(&points),
    }
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> CmdResult {
    let mode: SynthMode = a.mode.parse().map_err(Failure::Usage)?;
    let defaults = NoiseLevels::default();
    let spec = SynthSpec {
        n_videos: a.n,
        seed: cli.seed,
        mode,
        gestalt_split: a.gestalt_split,
        noise: NoiseLevels {
            frame: a.frame_noise.unwrap_or(defaults.frame),
            caption: a.caption_noise.unwrap_or(defaults.caption),
            audio: a.audio_noise.unwrap_or(defaults.audio),
        },
        ..SynthSpec::default()
    };
    let data = synthgen::generate(&spec)?;
    data.write_to(&a.out_dir)?;
    json_out(&json!({
        "out_dir": a.out_dir,
        "videos": data.records.len(),
        "clamped_cells": data.clamped_cells,
        "spec": spec,
    }))
}
