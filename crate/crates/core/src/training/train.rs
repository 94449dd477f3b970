//! Mini-batch training loop with LR drops and validation-patience early
//! stopping, plus the K-fold cross-validation driver.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;
use crate::dsp::{self, FeatureMatrix, FeatureStats};
use crate::error::{Error, Result};
use crate::framing::{self, FramingSpec, Patch};
use crate::metrics::FoldMetrics;
use crate::nn::adam::{adam_step, clip_gradients, AdamState};
use crate::nn::model::{compute_gradients, evaluate_loss};
use crate::nn::params::ModelParams;
use crate::pipeline;
use crate::types::{LabelSequence, State, ALL_STATES};

use super::hyperparams::Hyperparams;
use super::kfold::FoldPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EpochsDone,
    Patience,
}

/// One fold's training trace and resulting model.
pub struct TrainReport {
    /// Batch-mean loss per optimizer iteration.
    pub train_losses: Vec<f64>,
    /// (iteration, mean validation loss) at every evaluation point.
    pub val_losses: Vec<(usize, f64)>,
    pub stop: StopReason,
    /// Parameters at the minimum validation loss.
    pub model: ModelParams,
}

/// Early-stopping state: counts consecutive validation losses strictly
/// above the running minimum.
#[derive(Debug, Clone)]
pub struct PatienceTracker {
    patience: usize,
    min: f64,
    above: usize,
}

impl PatienceTracker {
    pub fn new(patience: usize) -> Self {
        PatienceTracker {
            patience,
            min: f64::INFINITY,
            above: 0,
        }
    }

    /// Feeds one validation loss; returns true when training should stop.
    pub fn observe(&mut self, loss: f64) -> bool {
        if loss > self.min {
            self.above += 1;
        } else {
            self.above = 0;
            self.min = loss;
        }
        self.above >= self.patience
    }
}

/// Index of the evaluation at which the patience rule fires on a recorded
/// loss sequence, if it fires at all.
pub fn early_stop_index(losses: &[f64], patience: usize) -> Option<usize> {
    let mut tracker = PatienceTracker::new(patience);
    losses.iter().position(|&l| tracker.observe(l))
}

const VALIDATE_EVERY: usize = 20;

/// Trains one model on `train`, monitoring `val`.
///
/// Per iteration: batch gradient, elementwise clip, ADAM step with
/// lr = lr0 * drop_factor^(epoch / drop_period). Validation runs every 20
/// iterations and at each epoch end; training stops early once validation
/// loss has exceeded its running minimum on `validation_patience`
/// consecutive evaluations. The returned model is the snapshot at the
/// minimum validation loss.
pub fn train_fold(
    train: &[Patch],
    val: &[Patch],
    input_dim: usize,
    hidden: usize,
    hp: &Hyperparams,
) -> Result<TrainReport> {
    hp.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut model = ModelParams::init(&mut rng, input_dim, hidden, ALL_STATES.len());
    let mut adam = AdamState::new(&model);

    let mut train_losses = Vec::new();
    let mut val_losses: Vec<(usize, f64)> = Vec::new();
    let mut tracker = PatienceTracker::new(hp.validation_patience);
    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut iter = 0usize;
    let mut stop = StopReason::EpochsDone;

    'epochs: for epoch in 0..hp.epochs {
        let lr = hp.lr_for_epoch(epoch);
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        let n_batches = order.chunks(hp.mini_batch).count();
        for (b, chunk) in order.chunks(hp.mini_batch).enumerate() {
            let batch: Vec<&Patch> = chunk.iter().map(|&i| &train[i]).collect();
            let (mut grads, loss) = compute_gradients(&model, &batch, hp.dropout_p, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "training loss {loss} at iteration {iter}"
                )));
            }
            clip_gradients(&mut grads, hp.grad_threshold)?;
            adam_step(&mut model, &grads, &mut adam, lr)?;
            iter += 1;
            train_losses.push(loss);

            let epoch_end = b + 1 == n_batches;
            if iter % VALIDATE_EVERY == 0 || epoch_end {
                let vl = evaluate_loss(&model, val)?;
                val_losses.push((iter, vl));
                if vl < best_val {
                    best_val = vl;
                    best = model.clone();
                }
                if tracker.observe(vl) {
                    stop = StopReason::Patience;
                    break 'epochs;
                }
            }
        }
    }

    let model = if val_losses.is_empty() { model } else { best };
    Ok(TrainReport {
        train_losses,
        val_losses,
        stop,
        model,
    })
}

/// One recording's precomputed features and ground-truth labels.
pub struct RecordingData {
    pub id: String,
    pub features: FeatureMatrix,
    pub labels: LabelSequence,
}

/// Everything produced by one cross-validation round.
pub struct FoldReport {
    pub report: TrainReport,
    pub metrics: FoldMetrics,
    /// Standardization stats from this fold's training recordings.
    pub stats: FeatureStats,
    pub test_ids: Vec<String>,
}

fn patches_for(
    ids: &[&str],
    recs: &[RecordingData],
    stats: &FeatureStats,
    spec: FramingSpec,
) -> Result<Vec<Patch>> {
    let mut out = Vec::new();
    for rec in recs.iter().filter(|r| ids.contains(&r.id.as_str())) {
        let std = dsp::standardize(&rec.features, stats)?;
        out.extend(framing::cut(&std, Some(&rec.labels), spec, &rec.id)?);
    }
    Ok(out)
}

/// Runs every cross-validation round of `plan`: per round, standardization
/// stats come from that round's training recordings only, one model is
/// trained, and test metrics are computed on stitched per-sample
/// predictions over the held-out recordings.
pub fn run_cv(
    recordings: &[RecordingData],
    plan: &FoldPlan,
    cfg: &PipelineConfig,
) -> Result<Vec<FoldReport>> {
    cfg.validate()?;
    if recordings.is_empty() {
        return Err(Error::InvalidArgument("no recordings".into()));
    }
    let input_dim = recordings[0].features.q();
    for r in recordings {
        if r.features.q() != input_dim {
            return Err(Error::DimensionMismatch(format!(
                "recording {} has {} feature rows, expected {}",
                r.id,
                r.features.q(),
                input_dim
            )));
        }
    }
    let spec = FramingSpec::new(cfg.patch_len, cfg.stride)?;
    let mut reports = Vec::with_capacity(plan.k());

    for round in 0..plan.k() {
        let (train_ids, val_ids, test_ids) = plan.roles(round);
        let train_mats: Vec<&FeatureMatrix> = recordings
            .iter()
            .filter(|r| train_ids.contains(&r.id.as_str()))
            .map(|r| &r.features)
            .collect();
        let stats = FeatureStats::from_rows(train_mats.iter().map(|m| &m.values))?;

        let train = patches_for(&train_ids, recordings, &stats, spec)?;
        let val = patches_for(&val_ids, recordings, &stats, spec)?;
        let hp = Hyperparams {
            seed: cfg.hp.seed.wrapping_add(round as u64),
            ..cfg.hp.clone()
        };
        let report = train_fold(&train, &val, input_dim, cfg.hidden, &hp)?;

        // Stitched per-sample evaluation over the held-out recordings.
        let mut pred: Vec<State> = Vec::new();
        let mut truth: Vec<State> = Vec::new();
        let mut scores: Vec<Vec<f64>> = vec![Vec::new(); ALL_STATES.len()];
        for rec in recordings.iter().filter(|r| test_ids.contains(&r.id.as_str())) {
            let probs = pipeline::segment_probs(&rec.features, &stats, &report.model, cfg)?;
            pred.extend(framing::probs_to_states(&probs));
            truth.extend(rec.labels.states.iter().copied());
            for (c, bucket) in scores.iter_mut().enumerate() {
                bucket.extend(probs.row(c).iter().copied());
            }
        }
        let metrics = FoldMetrics::evaluate(&pred, &truth, &scores)?;

        reports.push(FoldReport {
            report,
            metrics,
            stats,
            test_ids: test_ids.iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(reports)
}

/// Index of the fold whose model has the highest class-averaged test AUC;
/// ties go to the lower fold index. Folds without a defined AUC lose to
/// any fold with one.
pub fn select_best_model(folds: &[FoldReport]) -> Result<usize> {
    if folds.is_empty() {
        return Err(Error::InvalidArgument("no fold reports".into()));
    }
    let mut best = 0usize;
    let mut best_auc = folds[0].metrics.avg_auc.unwrap_or(f64::NEG_INFINITY);
    for (i, f) in folds.iter().enumerate().skip(1) {
        let a = f.metrics.avg_auc.unwrap_or(f64::NEG_INFINITY);
        if a > best_auc {
            best = i;
            best_auc = a;
        }
    }
    Ok(best)
}
