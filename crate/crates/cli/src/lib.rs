//! Command-line front end: wires the segmentation pipeline end to end and
//! emits CSV artifacts.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 numeric
//! failure (divergence).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use pcgseg_core::config::PipelineConfig;
use pcgseg_core::error::Error;
use pcgseg_core::io::checkpoint::{
    load_checkpoint_full, save_checkpoint_with_meta, Checkpoint, CheckpointMeta,
};
use pcgseg_core::io::csvio::{read_annotations, read_labels, write_labels};
use pcgseg_core::io::wav::read_wav;
use pcgseg_core::io::features::write_features;
use pcgseg_core::labeling::{label_states, LabelingConfig};
use pcgseg_core::metrics::{report, roc_curve, FoldMetrics, MetricsReport};
use pcgseg_core::pipeline;
use pcgseg_core::synth::{generate_dataset, SynthConfig};
use pcgseg_core::training::kfold::kfold_split;
use pcgseg_core::training::train::{run_cv, select_best_model, RecordingData};
use pcgseg_core::types::{State, ALL_STATES};
use pcgseg_core::Result;

#[derive(Parser)]
#[command(name = "pcgseg", version, about = "Heart-sound segmentation toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic PCG dataset (recordings, annotations, labels).
    Synth {
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of recordings.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Additive white-noise standard deviation.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Minimum recording duration in seconds.
        #[arg(long, default_value_t = 8.0)]
        dur_lo: f64,
        /// Maximum recording duration in seconds.
        #[arg(long, default_value_t = 12.0)]
        dur_hi: f64,
    },
    /// Derive per-sample state labels from a recording and its ECG annotations.
    Label {
        #[arg(long)]
        wav: PathBuf,
        /// ECG annotation CSV (r_peak,t_end sample indices).
        #[arg(long)]
        ann: PathBuf,
        /// Output run-length label CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract band-limited FSST features from a recording.
    Features {
        #[arg(long)]
        wav: PathBuf,
        /// Output feature file.
        #[arg(long)]
        out: PathBuf,
        /// Pipeline config file (key = value lines).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train models under K-fold cross validation.
    Train {
        /// Dataset directory (recordings/, labels/).
        #[arg(long)]
        data: PathBuf,
        /// Output directory for checkpoints and reports.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Overrides the config's training seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a trained model on a labeled dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output metrics CSV.
        #[arg(long)]
        report: PathBuf,
        /// Output ROC curve CSV.
        #[arg(long)]
        roc: PathBuf,
    },
    /// Segment a recording into S1/systole/S2/diastole runs.
    Segment {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        wav: PathBuf,
        /// Output run-length label CSV.
        #[arg(long)]
        out: PathBuf,
        /// Requested feature settings; must match the model's embedded config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the requested
/// command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes, not usage errors.
            use clap::error::ErrorKind::*;
            let code = match e.kind() {
                DisplayHelp | DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence(_) => 3,
                Error::InvalidArgument(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Synth { out, n, seed, noise, dur_lo, dur_hi } => {
            cmd_synth(&out, n, seed, noise, (dur_lo, dur_hi))
        }
        Cmd::Label { wav, ann, out } => cmd_label(&wav, &ann, &out),
        Cmd::Features { wav, out, config } => cmd_features(&wav, &out, config.as_deref()),
        Cmd::Train { data, out, config, folds, seed } => {
            cmd_train(&data, &out, config.as_deref(), folds, seed)
        }
        Cmd::Eval { model, data, report, roc } => cmd_eval(&model, &data, &report, &roc),
        Cmd::Segment { model, wav, out, config } => {
            cmd_segment(&model, &wav, &out, config.as_deref())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            PipelineConfig::from_config_str(&text)
        }
    }
}

pub fn cmd_synth(
    out: &Path,
    n: usize,
    seed: u64,
    noise: f64,
    duration_s: (f64, f64),
) -> Result<()> {
    let base = SynthConfig { seed, noise_std: noise, ..SynthConfig::default() };
    let ids = generate_dataset(&base, n, duration_s, out)?;
    println!("wrote {} recordings under {}", ids.len(), out.display());
    Ok(())
}

pub fn cmd_label(wav: &Path, ann: &Path, out: &Path) -> Result<()> {
    let signal = read_wav(wav)?;
    let ann = read_annotations(ann)?;
    let labels = label_states(&signal, &ann, &LabelingConfig::default())?;
    write_labels(&labels, out)?;
    println!("wrote {} sample labels to {}", labels.len(), out.display());
    Ok(())
}

pub fn cmd_features(wav: &Path, out: &Path, config: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let signal = read_wav(wav)?;
    let features = pipeline::extract_features(&signal, &cfg)?;
    write_features(&features, out)?;
    println!(
        "wrote {}x{} feature matrix to {}",
        features.q(),
        features.p(),
        out.display()
    );
    Ok(())
}

/// Loads every recording under `data/recordings` together with its label
/// file, extracting features at the pipeline rate.
fn load_dataset(data: &Path, cfg: &PipelineConfig) -> Result<Vec<RecordingData>> {
    let rec_dir = data.join("recordings");
    let lab_dir = data.join("labels");
    let mut wavs: Vec<PathBuf> = fs::read_dir(&rec_dir)
        .map_err(|e| Error::io(&rec_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "wav"))
        .collect();
    wavs.sort();
    if wavs.is_empty() {
        return Err(Error::format("dataset", &rec_dir, "no .wav recordings found"));
    }
    let mut recordings = Vec::with_capacity(wavs.len());
    for wav in &wavs {
        let id = wav
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::format("dataset", wav, "non-UTF-8 file name"))?
            .to_string();
        let signal = read_wav(wav)?;
        let features = pipeline::extract_features(&signal, cfg)?;
        let lab_path = lab_dir.join(format!("{id}.csv"));
        let labels = read_labels(&lab_path, cfg.fs)?;
        if labels.len() != features.p() {
            return Err(Error::format(
                "dataset",
                &lab_path,
                format!(
                    "label length {} does not match {} feature columns",
                    labels.len(),
                    features.p()
                ),
            ));
        }
        recordings.push(RecordingData { id, features, labels });
    }
    Ok(recordings)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_train(
    data: &Path,
    out: &Path,
    config: Option<&Path>,
    folds: usize,
    seed: Option<u64>,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.hp.seed = s;
    }
    cfg.validate()?;
    let recordings = load_dataset(data, &cfg)?;
    let ids: Vec<String> = recordings.iter().map(|r| r.id.clone()).collect();
    let plan = kfold_split(&ids, folds, cfg.hp.seed)?;
    let reports = run_cv(&recordings, &plan, &cfg)?;

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut fold_metrics: Vec<FoldMetrics> = Vec::with_capacity(reports.len());
    for (i, fold) in reports.iter().enumerate() {
        let meta = CheckpointMeta { config: cfg.clone(), stats: fold.stats.clone() };
        save_checkpoint_with_meta(
            &fold.report.model,
            Some(&meta),
            &out.join(format!("fold{i}.pcgm")),
        )?;
        let single = report(std::slice::from_ref(&fold.metrics))?;
        write_text(&out.join(format!("fold{i}_metrics.csv")), &single.to_csv())?;
        fold_metrics.push(fold.metrics.clone());
    }
    let summary = report(&fold_metrics)?;
    write_text(&out.join("report.csv"), &summary.to_csv())?;

    let best = select_best_model(&reports)?;
    let meta = CheckpointMeta {
        config: cfg.clone(),
        stats: reports[best].stats.clone(),
    };
    save_checkpoint_with_meta(&reports[best].report.model, Some(&meta), &out.join("best.pcgm"))?;
    println!(
        "trained {} folds; best model from fold {best} (test avg AUC {})",
        reports.len(),
        reports[best]
            .metrics
            .avg_auc
            .map_or("undefined".to_string(), |a| format!("{a:.4}")),
    );
    Ok(())
}

fn load_model_with_meta(path: &Path) -> Result<(Checkpoint, CheckpointMeta)> {
    let ckpt = load_checkpoint_full(path)?;
    let meta = ckpt.meta.clone().ok_or_else(|| {
        Error::format(
            "checkpoint",
            path,
            "model carries no embedded pipeline config and feature stats",
        )
    })?;
    Ok((ckpt, meta))
}

pub fn cmd_eval(model: &Path, data: &Path, report_path: &Path, roc_path: &Path) -> Result<()> {
    let (ckpt, meta) = load_model_with_meta(model)?;
    let recordings = load_dataset(data, &meta.config)?;

    let mut pred: Vec<State> = Vec::new();
    let mut truth: Vec<State> = Vec::new();
    let mut scores: Vec<Vec<f64>> = vec![Vec::new(); ALL_STATES.len()];
    for rec in &recordings {
        let probs =
            pipeline::segment_probs(&rec.features, &meta.stats, &ckpt.model, &meta.config)?;
        pred.extend(pcgseg_core::framing::probs_to_states(&probs));
        truth.extend(rec.labels.states.iter().copied());
        for (c, bucket) in scores.iter_mut().enumerate() {
            bucket.extend(probs.row(c).iter().copied());
        }
    }
    let fm = FoldMetrics::evaluate(&pred, &truth, &scores)?;
    let rep: MetricsReport = report(std::slice::from_ref(&fm))?;
    write_text(report_path, &rep.to_csv())?;

    let mut roc_csv = String::from("state,fpr,tpr\n");
    for state in ALL_STATES {
        let is_pos: Vec<bool> = truth.iter().map(|t| *t == state).collect();
        match roc_curve(&scores[state.class_index()], &is_pos) {
            Ok(curve) => {
                for (fpr, tpr) in &curve.points {
                    roc_csv.push_str(&format!("{},{fpr},{tpr}\n", state.token()));
                }
            }
            Err(_) => eprintln!(
                "warning: ROC undefined for state {} (single-class truth)",
                state.token()
            ),
        }
    }
    write_text(roc_path, &roc_csv)?;
    println!(
        "evaluated {} recordings: ACC {:.4}, macro F1 {}",
        recordings.len(),
        rep.accuracy,
        rep.macro_f1
            .map_or("undefined".to_string(), |f| format!("{f:.4}")),
    );
    Ok(())
}

pub fn cmd_segment(model: &Path, wav: &Path, out: &Path, config: Option<&Path>) -> Result<()> {
    let (ckpt, meta) = load_model_with_meta(model)?;
    if let Some(cfg_path) = config {
        let requested = load_config(Some(cfg_path))?;
        if requested.feature_settings() != meta.config.feature_settings() {
            return Err(Error::format(
                "checkpoint",
                model,
                "model's embedded pipeline config does not match the requested feature settings",
            ));
        }
    }
    let signal = read_wav(wav)?;
    let features = pipeline::extract_features(&signal, &meta.config)?;
    let (labels, _) = pipeline::predict(&features, &meta.stats, &ckpt.model, &meta.config)?;
    write_labels(&labels, out)?;
    println!(
        "segmented {} samples into {} runs; wrote {}",
        labels.len(),
        labels.runs().len(),
        out.display()
    );
    Ok(())
}
