//! Per-state confusion counting, ACC/P+/Se/F1, ROC curves and AUC, and
//! cross-fold aggregation.

use crate::error::{Error, Result};
use crate::types::{LabelSequence, State, ALL_STATES};

/// One-vs-rest confusion counts for a single state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Per-timestep one-vs-rest counting of `state`.
pub fn confusion(pred: &LabelSequence, truth: &LabelSequence, state: State) -> Result<ConfusionCounts> {
    confusion_states(&pred.states, &truth.states, state)
}

pub fn confusion_states(pred: &[State], truth: &[State], state: State) -> Result<ConfusionCounts> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "prediction length {} vs truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == state, t == state) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// (TP+TN)/(TP+TN+FP+FN); `None` when no timesteps were counted.
pub fn accuracy(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tp + c.tn, c.total())
}

/// TP/(TP+FP); `None` (undefined) when the denominator is zero.
pub fn precision(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tp, c.tp + c.fp)
}

/// TP/(TP+FN); `None` when the denominator is zero.
pub fn sensitivity(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tp, c.tp + c.fn_)
}

/// 2 P Se / (P + Se); `None` when either factor is undefined or both are 0.
pub fn f1(c: &ConfusionCounts) -> Option<f64> {
    let p = precision(c)?;
    let se = sensitivity(c)?;
    if p + se == 0.0 {
        return None;
    }
    Some(2.0 * p * se / (p + se))
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// Fraction of timesteps whose predicted state equals the truth.
pub fn multiclass_accuracy(pred: &[State], truth: &[State]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "prediction length {} vs truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("empty sequences".into()));
    }
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / pred.len() as f64)
}

/// ROC curve: (FPR, TPR) points with (0,0) and (1,1) included, sorted by
/// FPR then TPR.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

/// Sweeps thresholds over the unique score values in descending order;
/// a sample is predicted positive when its score >= threshold.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores vs {} truth values",
            scores.len(),
            truth.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("non-finite score".into()));
    }
    let pos = truth.iter().filter(|&&t| t).count() as f64;
    let neg = truth.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::InvalidArgument(
            "degenerate truth: need at least one positive and one negative".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut i = 0;
    while i < order.len() {
        // Consume every sample tied at this threshold at once.
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push((fp / neg, tp / pos));
    }
    if *points.last().unwrap() != (1.0, 1.0) {
        points.push((1.0, 1.0));
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve over FPR.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Per-state metrics of a single fold's test set.
#[derive(Debug, Clone)]
pub struct StateMetrics {
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
}

/// One fold's test-set evaluation.
#[derive(Debug, Clone)]
pub struct FoldMetrics {
    /// Indexed by [`State::class_index`].
    pub per_state: Vec<StateMetrics>,
    /// Sample-level multiclass accuracy.
    pub accuracy: f64,
    /// Class-averaged AUC (the per-fold model-selection score).
    pub avg_auc: Option<f64>,
}

impl FoldMetrics {
    /// Computes every fold metric from stitched predictions. `scores[c]`
    /// holds the per-timestep probability of class c.
    pub fn evaluate(pred: &[State], truth: &[State], scores: &[Vec<f64>]) -> Result<FoldMetrics> {
        let mut per_state = Vec::with_capacity(4);
        let mut auc_sum = 0.0;
        let mut auc_n = 0usize;
        for state in ALL_STATES {
            let c = confusion_states(pred, truth, state)?;
            let onevsrest: Vec<bool> = truth.iter().map(|&t| t == state).collect();
            let auc_val = roc_curve(&scores[state.class_index()], &onevsrest)
                .ok()
                .map(|curve| auc(&curve));
            if let Some(a) = auc_val {
                auc_sum += a;
                auc_n += 1;
            }
            per_state.push(StateMetrics {
                precision: precision(&c),
                sensitivity: sensitivity(&c),
                f1: f1(&c),
                auc: auc_val,
            });
        }
        Ok(FoldMetrics {
            per_state,
            accuracy: multiclass_accuracy(pred, truth)?,
            avg_auc: (auc_n > 0).then(|| auc_sum / auc_n as f64),
        })
    }
}

/// Cross-fold aggregate: per-state averages, a macro "Average" row and the
/// mean multiclass accuracy. Undefined per-fold metrics are excluded from
/// averages with a warning on stderr.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub per_state: Vec<StateMetrics>,
    pub macro_precision: Option<f64>,
    pub macro_sensitivity: Option<f64>,
    pub macro_f1: Option<f64>,
    pub accuracy: f64,
    pub avg_auc: Option<f64>,
    pub folds: usize,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>, what: &str) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut skipped = 0usize;
    for v in values {
        match v {
            Some(x) => {
                sum += x;
                n += 1;
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        eprintln!("warning: {skipped} undefined {what} value(s) excluded from average");
    }
    (n > 0).then(|| sum / n as f64)
}

/// Averages fold metrics into the final report.
pub fn report(folds: &[FoldMetrics]) -> Result<MetricsReport> {
    if folds.is_empty() {
        return Err(Error::InvalidArgument("no folds to report".into()));
    }
    let mut per_state = Vec::with_capacity(4);
    for state in ALL_STATES {
        let i = state.class_index();
        per_state.push(StateMetrics {
            precision: mean_defined(folds.iter().map(|f| f.per_state[i].precision), "precision"),
            sensitivity: mean_defined(
                folds.iter().map(|f| f.per_state[i].sensitivity),
                "sensitivity",
            ),
            f1: mean_defined(folds.iter().map(|f| f.per_state[i].f1), "F1"),
            auc: mean_defined(folds.iter().map(|f| f.per_state[i].auc), "AUC"),
        });
    }
    let macro_precision = mean_defined(per_state.iter().map(|s| s.precision), "macro precision");
    let macro_sensitivity =
        mean_defined(per_state.iter().map(|s| s.sensitivity), "macro sensitivity");
    let macro_f1 = mean_defined(per_state.iter().map(|s| s.f1), "macro F1");
    let accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64;
    let avg_auc = mean_defined(folds.iter().map(|f| f.avg_auc), "fold AUC");
    Ok(MetricsReport {
        per_state,
        macro_precision,
        macro_sensitivity,
        macro_f1,
        accuracy,
        avg_auc,
        folds: folds.len(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "undefined".to_string(),
    }
}

impl MetricsReport {
    /// CSV rendering: per-state rows, then the macro Average row and ACC.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,precision,sensitivity,f1,auc\n");
        for state in ALL_STATES {
            let s = &self.per_state[state.class_index()];
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                state.token(),
                fmt_opt(s.precision),
                fmt_opt(s.sensitivity),
                fmt_opt(s.f1),
                fmt_opt(s.auc),
            ));
        }
        out.push_str(&format!(
            "Average,{},{},{},{}\n",
            fmt_opt(self.macro_precision),
            fmt_opt(self.macro_sensitivity),
            fmt_opt(self.macro_f1),
            fmt_opt(self.avg_auc),
        ));
        out.push_str(&format!("ACC,{:.6},,,\n", self.accuracy));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_states(rng: &mut impl Rng, n: usize) -> Vec<State> {
        (0..n)
            .map(|_| State::from_class_index(rng.random_range(0..4)).unwrap())
            .collect()
    }

    #[test]
    fn confusion_matches_naive_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let n = rng.random_range(10..200);
            let pred = random_states(&mut rng, n);
            let truth = random_states(&mut rng, n);
            for state in ALL_STATES {
                let c = confusion_states(&pred, &truth, state).unwrap();
                let mut naive = ConfusionCounts::default();
                for (p, t) in pred.iter().zip(&truth) {
                    match (*p == state, *t == state) {
                        (true, true) => naive.tp += 1,
                        (true, false) => naive.fp += 1,
                        (false, true) => naive.fn_ += 1,
                        (false, false) => naive.tn += 1,
                    }
                }
                assert_eq!(c, naive);
                assert_eq!(c.total() as usize, n);
            }
        }
    }

    #[test]
    fn derived_rates_on_hand_example() {
        // tp=8, fp=2, fn=4, tn=6.
        let c = ConfusionCounts { tp: 8, fp: 2, fn_: 4, tn: 6 };
        assert!((accuracy(&c).unwrap() - 14.0 / 20.0).abs() < 1e-15);
        assert!((precision(&c).unwrap() - 0.8).abs() < 1e-15);
        assert!((sensitivity(&c).unwrap() - 8.0 / 12.0).abs() < 1e-15);
        let p = 0.8;
        let s = 8.0 / 12.0;
        assert!((f1(&c).unwrap() - 2.0 * p * s / (p + s)).abs() < 1e-15);
    }

    #[test]
    fn undefined_rates_are_none() {
        // No predicted positives -> precision undefined.
        let c = ConfusionCounts { tp: 0, fp: 0, fn_: 3, tn: 7 };
        assert!(precision(&c).is_none());
        assert_eq!(sensitivity(&c), Some(0.0));
        // No actual positives -> sensitivity (and F1) undefined.
        let c = ConfusionCounts { tp: 0, fp: 2, fn_: 0, tn: 8 };
        assert!(sensitivity(&c).is_none());
        assert!(f1(&c).is_none());
    }

    #[test]
    fn perfect_separation_has_auc_one() {
        let scores = [0.9, 0.8, 0.7, 0.2, 0.1];
        let truth = [true, true, true, false, false];
        let curve = roc_curve(&scores, &truth).unwrap();
        assert!((auc(&curve) - 1.0).abs() < 1e-15);
        assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn random_scores_auc_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let truth: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        let a = auc(&roc_curve(&scores, &truth).unwrap());
        assert!((a - 0.5).abs() < 0.05, "auc {a}");
    }

    // Probability that a positive outranks a negative, ties counted half.
    fn auc_mann_whitney(scores: &[f64], truth: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &t) in truth.iter().enumerate() {
            if !t {
                continue;
            }
            for (j, &u) in truth.iter().enumerate() {
                if u {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn trapezoid_auc_equals_rank_statistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..30 {
            let n = rng.random_range(10..120);
            // Quantized scores force ties through both code paths.
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.random::<f64>() * 8.0).round() / 8.0)
                .collect();
            let truth: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            if truth.iter().all(|&t| t) || truth.iter().all(|&t| !t) {
                continue;
            }
            let a = auc(&roc_curve(&scores, &truth).unwrap());
            let b = auc_mann_whitney(&scores, &truth);
            assert!((a - b).abs() < 1e-12, "trial {trial}: {a} vs {b}");
        }
    }

    #[test]
    fn degenerate_truth_rejected() {
        assert!(roc_curve(&[0.1, 0.2], &[true, true]).is_err());
        assert!(roc_curve(&[0.1, 0.2], &[false, false]).is_err());
        assert!(roc_curve(&[0.1, f64::NAN], &[true, false]).is_err());
    }

    #[test]
    fn multiclass_accuracy_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pred = random_states(&mut rng, 500);
        let truth = random_states(&mut rng, 500);
        let acc = multiclass_accuracy(&pred, &truth).unwrap();
        let naive =
            pred.iter().zip(&truth).filter(|(p, t)| p == t).count() as f64 / 500.0;
        assert_eq!(acc, naive);
    }

    #[test]
    fn fold_evaluation_and_report() {
        use State::*;
        let truth = vec![S1, S1, Systole, S2, Diastole, Diastole];
        let pred = vec![S1, Systole, Systole, S2, Diastole, S1];
        // Scores: probability 1 at predicted class (arbitrary but valid).
        let mut scores = vec![vec![0.0; truth.len()]; 4];
        for (t, p) in pred.iter().enumerate() {
            scores[p.class_index()][t] = 1.0;
        }
        let fold = FoldMetrics::evaluate(&pred, &truth, &scores).unwrap();
        assert!((fold.accuracy - 4.0 / 6.0).abs() < 1e-15);

        let rep = report(&[fold.clone(), fold]).unwrap();
        assert!((rep.accuracy - 4.0 / 6.0).abs() < 1e-15);
        let csv = rep.to_csv();
        assert!(csv.starts_with("state,precision,sensitivity,f1,auc\n"));
        assert!(csv.contains("\nAverage,"));
        assert!(csv.contains("\nACC,"));
        assert_eq!(csv.lines().count(), 7);
    }
}
