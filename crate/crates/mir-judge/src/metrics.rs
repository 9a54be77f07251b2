//! Detection metrics.
//!
//! Beats: corrupted beats are classified into correct (TP), additional (FP),
//! and missing (FN) positions, then scored against the judge's predicted
//! error intervals with CPR, EDR_P, EDR_N, and their support-weighted
//! average WS. Chord/key verdicts are scored as binary classification with
//! weighted precision, recall, and F1.

use crate::corrupt::{beat_truth_times, match_beat_indices, CorruptionLog};
use crate::symbolic::BeatGrid;
use crate::verdict::IntervalSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no beats at all: TP, FP, and FN are all empty")]
    AllSetsEmpty,
    #[error("empty input")]
    EmptyInput,
}

/// Beat positions classified against the reference grid (times in seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatEvalSets {
    /// Correctly identified beats (present in both grids).
    pub tp: Vec<f64>,
    /// Additional beats (only in the corrupted grid).
    pub fp: Vec<f64>,
    /// Missing beats (only in the reference grid).
    pub fn_: Vec<f64>,
}

/// Classifies corrupted beats against the reference grid.
///
/// With a corruption log the sets come from exact replay bookkeeping; without
/// one they come from greedy one-to-one tolerance matching. The two methods
/// agree on every grid the corruptor produces.
pub fn classify_beats(
    corrupted: &BeatGrid,
    reference: &BeatGrid,
    tolerance: f64,
    log: Option<&CorruptionLog>,
) -> BeatEvalSets {
    if let Some(log) = log {
        let (tp, fp, fn_) = beat_truth_times(reference, log);
        return BeatEvalSets { tp, fp, fn_ };
    }
    let matches = match_beat_indices(corrupted.beats(), reference.beats(), tolerance);
    let mut tp = Vec::new();
    let mut fp = Vec::new();
    let mut matched_ref = vec![false; reference.len()];
    for (candidate_time, matched) in corrupted.beats().iter().zip(&matches) {
        match matched {
            Some(ref_index) => {
                matched_ref[*ref_index] = true;
                tp.push(*candidate_time);
            }
            None => fp.push(*candidate_time),
        }
    }
    let fn_: Vec<f64> = reference
        .beats()
        .iter()
        .enumerate()
        .filter(|(i, _)| !matched_ref[*i])
        .map(|(_, t)| *t)
        .collect();
    BeatEvalSets { tp, fp, fn_ }
}

/// Micro-poolable counts behind the beat detection metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatDetectionCounts {
    /// TP beats not covered by any predicted interval.
    pub tp_passed: usize,
    pub tp_total: usize,
    /// FP beats covered by a predicted interval.
    pub fp_detected: usize,
    pub fp_total: usize,
    /// FN beats covered by a predicted interval.
    pub fn_detected: usize,
    pub fn_total: usize,
}

impl BeatDetectionCounts {
    pub fn new() -> BeatDetectionCounts {
        BeatDetectionCounts::default()
    }

    /// Pools one segment's classification against its predicted intervals.
    pub fn accumulate(&mut self, sets: &BeatEvalSets, intervals: &IntervalSet) {
        self.tp_total += sets.tp.len();
        self.tp_passed += sets.tp.iter().filter(|t| !intervals.contains(**t)).count();
        self.fp_total += sets.fp.len();
        self.fp_detected += sets.fp.iter().filter(|t| intervals.contains(**t)).count();
        self.fn_total += sets.fn_.len();
        self.fn_detected += sets.fn_.iter().filter(|t| intervals.contains(**t)).count();
    }

    /// Computes CPR / EDR_P / EDR_N / WS; a component with an empty
    /// denominator is undefined and excluded from WS entirely.
    pub fn metrics(&self) -> Result<BeatMetrics, MetricsError> {
        if self.tp_total + self.fp_total + self.fn_total == 0 {
            return Err(MetricsError::AllSetsEmpty);
        }
        let ratio = |num: usize, den: usize| -> Option<f64> {
            (den > 0).then(|| num as f64 / den as f64)
        };
        let cpr = ratio(self.tp_passed, self.tp_total);
        let edr_p = ratio(self.fp_detected, self.fp_total);
        let edr_n = ratio(self.fn_detected, self.fn_total);
        let mut weighted_sum = 0.0;
        let mut weight_total = 0usize;
        for (value, support) in [
            (cpr, self.tp_total),
            (edr_p, self.fp_total),
            (edr_n, self.fn_total),
        ] {
            if let Some(v) = value {
                weighted_sum += v * support as f64;
                weight_total += support;
            }
        }
        let ws = (weight_total > 0).then(|| weighted_sum / weight_total as f64);
        Ok(BeatMetrics {
            cpr,
            edr_p,
            edr_n,
            ws,
            support_tp: self.tp_total,
            support_fp: self.fp_total,
            support_fn: self.fn_total,
        })
    }
}

/// Beat error-detection scores; `None` marks an undefined component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatMetrics {
    pub cpr: Option<f64>,
    pub edr_p: Option<f64>,
    pub edr_n: Option<f64>,
    pub ws: Option<f64>,
    pub support_tp: usize,
    pub support_fp: usize,
    pub support_fn: usize,
}

/// Scores one segment's beat verdict.
pub fn beat_metrics(
    sets: &BeatEvalSets,
    intervals: &IntervalSet,
) -> Result<BeatMetrics, MetricsError> {
    let mut counts = BeatDetectionCounts::new();
    counts.accumulate(sets, intervals);
    counts.metrics()
}

/// Weighted precision / recall / F1 over the two classes (correct,
/// incorrect), weighted by true class support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support_correct: usize,
    pub support_incorrect: usize,
}

/// Scores per-label incorrect flags against ground truth.
///
/// `true` means "flagged incorrect". Per-class precision for a class with no
/// predicted positives is 0.
pub fn weighted_prf(predicted: &[bool], truth: &[bool]) -> Result<WeightedPrf, MetricsError> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(MetricsError::EmptyInput);
    }
    // Class order: correct (false), incorrect (true).
    let mut tp = [0usize; 2];
    let mut predicted_count = [0usize; 2];
    let mut truth_count = [0usize; 2];
    for (&pred, &actual) in predicted.iter().zip(truth) {
        let p = pred as usize;
        let a = actual as usize;
        predicted_count[p] += 1;
        truth_count[a] += 1;
        if p == a {
            tp[p] += 1;
        }
    }
    // Support-weighted sums divided once at the end, mirroring the textbook
    // (support_0 * metric_0 + support_1 * metric_1) / total form.
    let total = predicted.len() as f64;
    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut f1_sum = 0.0;
    for class in 0..2 {
        let support = truth_count[class] as f64;
        let class_precision = if predicted_count[class] > 0 {
            tp[class] as f64 / predicted_count[class] as f64
        } else {
            0.0
        };
        let class_recall = if truth_count[class] > 0 {
            tp[class] as f64 / truth_count[class] as f64
        } else {
            0.0
        };
        let class_f1 = if class_precision + class_recall > 0.0 {
            2.0 * class_precision * class_recall / (class_precision + class_recall)
        } else {
            0.0
        };
        precision_sum += support * class_precision;
        recall_sum += support * class_recall;
        f1_sum += support * class_f1;
    }
    Ok(WeightedPrf {
        precision: precision_sum / total,
        recall: recall_sum / total,
        f1: f1_sum / total,
        support_correct: truth_count[0],
        support_incorrect: truth_count[1],
    })
}

/// Per-level result bundle: whichever of the two metric families applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub beat: Option<BeatMetrics>,
    pub classification: Option<WeightedPrf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrupt::{corrupt_beats, RateConfig};
    use crate::verdict::IntervalSet;

    fn grid(times: &[f64]) -> BeatGrid {
        BeatGrid::new(times.to_vec()).unwrap()
    }

    #[test]
    fn identical_grids_classify_as_all_tp() {
        let g = grid(&[1.0, 2.0, 3.0]);
        let sets = classify_beats(&g, &g, 0.07, None);
        assert_eq!(sets.tp, vec![1.0, 2.0, 3.0]);
        assert!(sets.fp.is_empty());
        assert!(sets.fn_.is_empty());
    }

    #[test]
    fn missing_beat_is_a_false_negative() {
        let reference = grid(&[1.0, 2.0, 3.0]);
        let corrupted = grid(&[1.0, 2.0]);
        let sets = classify_beats(&corrupted, &reference, 0.07, None);
        assert_eq!(sets.tp, vec![1.0, 2.0]);
        assert!(sets.fp.is_empty());
        assert_eq!(sets.fn_, vec![3.0]);
    }

    #[test]
    fn out_of_tolerance_beat_is_both_fp_and_fn() {
        let reference = grid(&[1.0]);
        let corrupted = grid(&[1.1]);
        let sets = classify_beats(&corrupted, &reference, 0.07, None);
        assert!(sets.tp.is_empty());
        assert_eq!(sets.fp, vec![1.1]);
        assert_eq!(sets.fn_, vec![1.0]);
    }

    #[test]
    fn beat_metrics_hand_example() {
        // TP {1.0, 2.0}, FP {1.5}, FN {3.0}, I = {[1.4, 1.6]}:
        // CPR 1.0, EDR_P 1.0, EDR_N 0.0, WS = (2 + 1 + 0) / 4 = 0.75.
        let sets = BeatEvalSets { tp: vec![1.0, 2.0], fp: vec![1.5], fn_: vec![3.0] };
        let intervals = IntervalSet::new(vec![(1.4, 1.6)]);
        let m = beat_metrics(&sets, &intervals).unwrap();
        assert_eq!(m.cpr, Some(1.0));
        assert_eq!(m.edr_p, Some(1.0));
        assert_eq!(m.edr_n, Some(0.0));
        assert_eq!(m.ws, Some(0.75));
    }

    #[test]
    fn empty_intervals_pass_everything() {
        let sets = BeatEvalSets { tp: vec![1.0, 2.0], fp: vec![1.5], fn_: vec![3.0] };
        let m = beat_metrics(&sets, &IntervalSet::new(vec![])).unwrap();
        assert_eq!(m.cpr, Some(1.0));
        assert_eq!(m.edr_p, Some(0.0));
        assert_eq!(m.edr_n, Some(0.0));
    }

    #[test]
    fn total_coverage_flags_everything() {
        let sets = BeatEvalSets { tp: vec![1.0, 2.0], fp: vec![1.5], fn_: vec![3.0] };
        let m = beat_metrics(&sets, &IntervalSet::new(vec![(0.0, 100.0)])).unwrap();
        assert_eq!(m.cpr, Some(0.0));
        assert_eq!(m.edr_p, Some(1.0));
        assert_eq!(m.edr_n, Some(1.0));
        assert_eq!(m.ws, Some(0.5));
    }

    #[test]
    fn undefined_components_are_excluded_from_ws() {
        let sets = BeatEvalSets { tp: vec![1.0, 2.0], fp: vec![], fn_: vec![] };
        let m = beat_metrics(&sets, &IntervalSet::new(vec![])).unwrap();
        assert_eq!(m.cpr, Some(1.0));
        assert_eq!(m.edr_p, None);
        assert_eq!(m.edr_n, None);
        assert_eq!(m.ws, Some(1.0));

        let empty = BeatEvalSets { tp: vec![], fp: vec![], fn_: vec![] };
        assert_eq!(
            beat_metrics(&empty, &IntervalSet::new(vec![])),
            Err(MetricsError::AllSetsEmpty)
        );
    }

    #[test]
    fn ws_stays_between_component_extremes() {
        let sets = BeatEvalSets {
            tp: vec![1.0, 2.0, 3.0],
            fp: vec![1.5, 2.5],
            fn_: vec![4.0],
        };
        let intervals = IntervalSet::new(vec![(1.4, 1.6), (3.9, 4.1)]);
        let m = beat_metrics(&sets, &intervals).unwrap();
        let components = [m.cpr.unwrap(), m.edr_p.unwrap(), m.edr_n.unwrap()];
        let ws = m.ws.unwrap();
        let min = components.iter().copied().fold(f64::INFINITY, f64::min);
        let max = components.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(ws >= min && ws <= max);
    }

    #[test]
    fn log_and_matcher_classification_agree() {
        let reference = BeatGrid::new((0..500).map(|i| i as f64 * 0.5).collect()).unwrap();
        for seed in 0..20 {
            let (corrupted, log) = corrupt_beats(&reference, &RateConfig::default(), seed).unwrap();
            let by_match = classify_beats(&corrupted, &reference, 0.07, None);
            let by_log = classify_beats(&corrupted, &reference, 0.07, Some(&log));
            assert_eq!(by_match, by_log, "seed {seed}");
        }
    }

    #[test]
    fn weighted_prf_perfect_case() {
        let truth = vec![false, true, false, true];
        let m = weighted_prf(&truth, &truth).unwrap();
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn weighted_prf_hand_example() {
        // truth [C,C,I,C], predicted [C,I,I,C]:
        // weighted p = (3*1.0 + 1*0.5)/4 = 0.875, weighted r = (3*(2/3) + 1)/4 = 0.75.
        let truth = vec![false, false, true, false];
        let predicted = vec![false, true, true, false];
        let m = weighted_prf(&predicted, &truth).unwrap();
        assert!((m.precision - 0.875).abs() < 1e-12);
        assert!((m.recall - 0.75).abs() < 1e-12);
        assert_eq!(m.support_correct, 3);
        assert_eq!(m.support_incorrect, 1);
    }

    #[test]
    fn zero_predicted_positives_scores_zero_precision() {
        let truth = vec![true, true, false];
        let predicted = vec![false, false, false];
        let m = weighted_prf(&predicted, &truth).unwrap();
        // incorrect class has no predicted positives: its precision term is 0.
        assert!((m.precision - (1.0 / 3.0) * (1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_flags_are_rejected() {
        assert_eq!(weighted_prf(&[], &[]), Err(MetricsError::EmptyInput));
        assert_eq!(weighted_prf(&[true], &[]), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn enlarging_intervals_is_monotone() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(404);
        for _ in 0..300 {
            let draw = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<f64> {
                let mut v: Vec<f64> = (0..rng.gen_range(1..n)).map(|_| rng.gen_range(0.0..30.0)).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            };
            let sets = BeatEvalSets {
                tp: draw(&mut rng, 15),
                fp: draw(&mut rng, 8),
                fn_: draw(&mut rng, 8),
            };
            let base: Vec<(f64, f64)> = (0..rng.gen_range(0..4))
                .map(|_| {
                    let lo = rng.gen_range(0.0..28.0);
                    (lo, lo + rng.gen_range(0.0..5.0))
                })
                .collect();
            let mut larger = base.clone();
            let lo = rng.gen_range(0.0..28.0);
            larger.push((lo, lo + rng.gen_range(0.0..6.0)));

            let small = beat_metrics(&sets, &IntervalSet::new(base)).unwrap();
            let big = beat_metrics(&sets, &IntervalSet::new(larger)).unwrap();
            assert!(big.cpr.unwrap() <= small.cpr.unwrap());
            assert!(big.edr_p.unwrap() >= small.edr_p.unwrap());
            assert!(big.edr_n.unwrap() >= small.edr_n.unwrap());
        }
    }
}
