//! Seeded error injection for beat, chord, and key annotations.
//!
//! Every corruption emits an exact audit log that replays to the corrupted
//! annotation and later serves as evaluation ground truth. Equal inputs,
//! rates, and seeds always produce identical output.

use crate::notation::{
    all_keys, parse_chord, parse_key, render_chord, render_key, ChordLabel, Degree, KeyLabel,
    PitchClass, Quality,
};
use crate::symbolic::BeatGrid;
use crate::Task;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorruptError {
    #[error("infeasible rates: {0}")]
    InfeasibleRates(String),
    #[error("beat grid needs at least 2 beats, has {0}")]
    DegenerateGrid(usize),
    #[error("cannot corrupt an empty label list")]
    EmptyInput,
    #[error("rate {0} outside [0, 1]")]
    RateOutOfRange(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("log does not apply to this annotation: {0}")]
    Mismatch(String),
}

/// Beat error fractions, each relative to the grid's beat count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatRates {
    pub insert: f64,
    pub delete: f64,
    pub offset: f64,
}

impl Default for BeatRates {
    fn default() -> BeatRates {
        BeatRates { insert: 0.09, delete: 0.12, offset: 0.09 }
    }
}

/// Per-attribute chord corruption probabilities.
///
/// At the default 0.10 per attribute the expected label-level accuracy is
/// 0.9^3 = 0.729.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordRates {
    pub root: f64,
    pub quality: f64,
    pub inversion: f64,
}

impl Default for ChordRates {
    fn default() -> ChordRates {
        ChordRates { root: 0.10, quality: 0.10, inversion: 0.10 }
    }
}

/// Full injection configuration for all three tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    #[serde(default)]
    pub beat: BeatRates,
    #[serde(default)]
    pub chord: ChordRates,
    /// Probability of replacing each key label with one of the other 23.
    #[serde(default = "default_key_rate")]
    pub key: f64,
    /// Matching tolerance in seconds; offsets always exceed it.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_key_rate() -> f64 {
    0.30
}

fn default_tolerance() -> f64 {
    0.070
}

impl Default for RateConfig {
    fn default() -> RateConfig {
        RateConfig {
            beat: BeatRates::default(),
            chord: ChordRates::default(),
            key: default_key_rate(),
            tolerance: default_tolerance(),
        }
    }
}

impl RateConfig {
    pub fn validate(&self) -> Result<(), CorruptError> {
        for rate in [
            self.beat.insert,
            self.beat.delete,
            self.beat.offset,
            self.chord.root,
            self.chord.quality,
            self.chord.inversion,
            self.key,
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(CorruptError::RateOutOfRange(rate));
            }
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(CorruptError::BadTolerance(self.tolerance));
        }
        Ok(())
    }
}

/// One injected beat error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum BeatOp {
    Insert { time: f64 },
    Delete { original_index: usize, original_time: f64 },
    Offset { original_index: usize, original_time: f64, shifted_time: f64 },
}

/// One replaced label (chord or key), stored as canonical strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelOp {
    pub index: usize,
    pub original: String,
    pub corrupted: String,
    pub attributes_changed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionOps {
    Beats(Vec<BeatOp>),
    Labels(Vec<LabelOp>),
}

/// Exact record of one corruption run; replaying it on the original
/// annotation reproduces the corrupted annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionLog {
    pub task: Task,
    pub seed: u64,
    pub rates: RateConfig,
    pub ops: CorruptionOps,
}

impl CorruptionLog {
    pub fn beat_ops(&self) -> &[BeatOp] {
        match &self.ops {
            CorruptionOps::Beats(ops) => ops,
            CorruptionOps::Labels(_) => &[],
        }
    }

    pub fn label_ops(&self) -> &[LabelOp] {
        match &self.ops {
            CorruptionOps::Labels(ops) => ops,
            CorruptionOps::Beats(_) => &[],
        }
    }

    /// Per-label truth flags (true = corrupted) for a label-task log.
    pub fn truth_flags(&self, label_count: usize) -> Vec<bool> {
        let mut flags = vec![false; label_count];
        for op in self.label_ops() {
            if op.index < label_count {
                flags[op.index] = true;
            }
        }
        flags
    }
}

const MIN_SEPARATION: f64 = 1e-3;
const MAX_RESAMPLE_ATTEMPTS: usize = 100;

/// Injects beat errors: extra beats between neighbors, deletions, and offsets
/// whose magnitude always exceeds the tolerance but stays under half the
/// local inter-beat interval.
pub fn corrupt_beats(
    grid: &BeatGrid,
    config: &RateConfig,
    seed: u64,
) -> Result<(BeatGrid, CorruptionLog), CorruptError> {
    config.validate()?;
    let n = grid.len();
    if n < 2 {
        return Err(CorruptError::DegenerateGrid(n));
    }
    let beats = grid.beats();
    let tolerance = config.tolerance;

    let n_insert = (config.beat.insert * n as f64).round() as usize;
    let n_delete = (config.beat.delete * n as f64).round() as usize;
    let n_offset = (config.beat.offset * n as f64).round() as usize;
    if n_insert + n_delete + n_offset > n {
        return Err(CorruptError::InfeasibleRates(format!(
            "{n_insert} inserts + {n_delete} deletes + {n_offset} offsets exceed {n} beats"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Deletes and offsets pick distinct victims without replacement. Offsets
    // target interior beats only: an edge beat has no two-sided local
    // inter-beat interval to bound the shift.
    let mut delete_indices: Vec<usize> =
        rand::seq::index::sample(&mut rng, n, n_delete).into_iter().collect();
    delete_indices.sort_unstable();
    let deleted_set: std::collections::HashSet<usize> = delete_indices.iter().copied().collect();
    let interior: Vec<usize> = (1..n.saturating_sub(1)).filter(|i| !deleted_set.contains(i)).collect();
    if interior.len() < n_offset {
        return Err(CorruptError::InfeasibleRates(format!(
            "{n_offset} offsets need interior beats but only {} remain",
            interior.len()
        )));
    }
    let mut offset_indices: Vec<usize> = rand::seq::index::sample(&mut rng, interior.len(), n_offset)
        .into_iter()
        .map(|k| interior[k])
        .collect();
    offset_indices.sort_unstable();

    let local_bound = |index: usize| -> f64 {
        let mut local = f64::INFINITY;
        if index > 0 {
            local = local.min(beats[index] - beats[index - 1]);
        }
        if index + 1 < n {
            local = local.min(beats[index + 1] - beats[index]);
        }
        0.5 * local
    };

    let draw_offset_time = |rng: &mut ChaCha8Rng, index: usize| -> Option<f64> {
        let bound = local_bound(index);
        if bound <= tolerance + 1e-9 {
            return None;
        }
        let mut magnitude = rng.gen_range(tolerance..bound);
        // The tolerance itself must be exceeded strictly.
        for _ in 0..8 {
            if magnitude > tolerance {
                break;
            }
            magnitude = rng.gen_range(tolerance..bound);
        }
        let negative = rng.gen_bool(0.5);
        let shifted = if negative { beats[index] - magnitude } else { beats[index] + magnitude };
        Some(if shifted < 0.0 { beats[index] + magnitude } else { shifted })
    };

    let mut offsets: Vec<(usize, f64)> = Vec::with_capacity(n_offset);
    for index in offset_indices {
        match draw_offset_time(&mut rng, index) {
            Some(shifted) => offsets.push((index, shifted)),
            None => {
                return Err(CorruptError::InfeasibleRates(format!(
                    "beat {index} has inter-beat gaps too small to offset beyond {tolerance} s"
                )))
            }
        }
    }

    // Inserts go strictly between adjacent original beats, at least one
    // tolerance away from both.
    let feasible_gaps: Vec<usize> = (0..n - 1)
        .filter(|&j| beats[j + 1] - beats[j] > 2.0 * tolerance + 1e-9)
        .collect();
    let draw_insert_time = |rng: &mut ChaCha8Rng| -> Option<f64> {
        if feasible_gaps.is_empty() {
            return None;
        }
        let j = feasible_gaps[rng.gen_range(0..feasible_gaps.len())];
        Some(rng.gen_range(beats[j] + tolerance..beats[j + 1] - tolerance))
    };

    let mut inserts: Vec<f64> = Vec::with_capacity(n_insert);
    for _ in 0..n_insert {
        match draw_insert_time(&mut rng) {
            Some(t) => inserts.push(t),
            None => {
                return Err(CorruptError::InfeasibleRates(
                    "no inter-beat gap is wide enough for an insert".to_string(),
                ))
            }
        }
    }

    // Resolve collisions (beats closer than 1 ms) by resampling the
    // offending op, bounded to a fixed number of attempts.
    let deleted: std::collections::HashSet<usize> = delete_indices.iter().copied().collect();
    let offset_set: std::collections::HashSet<usize> =
        offsets.iter().map(|(i, _)| *i).collect();
    let mut attempts = 0;
    loop {
        // kind: 0 = kept original, 1 = offset op k, 2 = insert op k
        let mut working: Vec<(f64, u8, usize)> = Vec::with_capacity(n - n_delete + n_insert);
        for (i, &t) in beats.iter().enumerate() {
            if !deleted.contains(&i) && !offset_set.contains(&i) {
                working.push((t, 0, i));
            }
        }
        for (k, (_, shifted)) in offsets.iter().enumerate() {
            working.push((*shifted, 1, k));
        }
        for (k, &t) in inserts.iter().enumerate() {
            working.push((t, 2, k));
        }
        working.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut offender: Option<(u8, usize)> = None;
        for pair in working.windows(2) {
            if pair[1].0 - pair[0].0 < MIN_SEPARATION {
                // Resample an op, preferring inserts; two kept originals are
                // the input's own spacing and pass through.
                let candidates = [pair[1], pair[0]];
                if let Some(hit) = candidates.iter().find(|(_, kind, _)| *kind == 2) {
                    offender = Some((hit.1, hit.2));
                    break;
                }
                if let Some(hit) = candidates.iter().find(|(_, kind, _)| *kind == 1) {
                    offender = Some((hit.1, hit.2));
                    break;
                }
            }
        }

        match offender {
            None => {
                let times: Vec<f64> = working.iter().map(|(t, _, _)| *t).collect();
                let corrupted = BeatGrid::new(times).map_err(|e| {
                    CorruptError::InfeasibleRates(format!("corrupted grid invalid: {e}"))
                })?;
                let mut ops: Vec<BeatOp> = Vec::new();
                for &i in &delete_indices {
                    ops.push(BeatOp::Delete { original_index: i, original_time: beats[i] });
                }
                for (i, shifted) in &offsets {
                    ops.push(BeatOp::Offset {
                        original_index: *i,
                        original_time: beats[*i],
                        shifted_time: *shifted,
                    });
                }
                let mut insert_times = inserts.clone();
                insert_times.sort_by(f64::total_cmp);
                for t in insert_times {
                    ops.push(BeatOp::Insert { time: t });
                }
                let log = CorruptionLog {
                    task: Task::Beat,
                    seed,
                    rates: *config,
                    ops: CorruptionOps::Beats(ops),
                };
                return Ok((corrupted, log));
            }
            Some((kind, k)) => {
                attempts += 1;
                if attempts > MAX_RESAMPLE_ATTEMPTS {
                    return Err(CorruptError::InfeasibleRates(
                        "could not resolve beat collisions within the attempt budget".to_string(),
                    ));
                }
                if kind == 2 {
                    inserts[k] = draw_insert_time(&mut rng).ok_or_else(|| {
                        CorruptError::InfeasibleRates("no insertable gap left".to_string())
                    })?;
                } else {
                    let index = offsets[k].0;
                    offsets[k].1 = draw_offset_time(&mut rng, index).ok_or_else(|| {
                        CorruptError::InfeasibleRates("no offsettable room left".to_string())
                    })?;
                }
            }
        }
    }
}

/// Applies a beat log back onto the original grid.
pub fn replay_beats(original: &BeatGrid, log: &CorruptionLog) -> Result<BeatGrid, ReplayError> {
    if log.task != Task::Beat {
        return Err(ReplayError::Mismatch(format!("log is for task {}", log.task)));
    }
    let beats = original.beats();
    let mut removed = vec![false; beats.len()];
    let mut replaced: Vec<f64> = Vec::new();
    for op in log.beat_ops() {
        match op {
            BeatOp::Delete { original_index, .. } => {
                let i = *original_index;
                if i >= beats.len() {
                    return Err(ReplayError::Mismatch(format!("delete index {i} out of range")));
                }
                removed[i] = true;
            }
            BeatOp::Offset { original_index, shifted_time, .. } => {
                let i = *original_index;
                if i >= beats.len() {
                    return Err(ReplayError::Mismatch(format!("offset index {i} out of range")));
                }
                removed[i] = true;
                replaced.push(*shifted_time);
            }
            BeatOp::Insert { time } => replaced.push(*time),
        }
    }
    let mut times: Vec<f64> = beats
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed[*i])
        .map(|(_, t)| *t)
        .collect();
    times.extend(replaced);
    times.sort_by(f64::total_cmp);
    BeatGrid::new(times).map_err(|e| ReplayError::Mismatch(e.to_string()))
}

/// Ground-truth beat classification derived from the log alone:
/// (correct beats, additional beats, missing beats), each sorted.
pub fn beat_truth_times(original: &BeatGrid, log: &CorruptionLog) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let beats = original.beats();
    let mut touched = vec![false; beats.len()];
    let mut fp: Vec<f64> = Vec::new();
    let mut fn_: Vec<f64> = Vec::new();
    for op in log.beat_ops() {
        match op {
            BeatOp::Delete { original_index, .. } => {
                touched[*original_index] = true;
                fn_.push(beats[*original_index]);
            }
            BeatOp::Offset { original_index, shifted_time, .. } => {
                touched[*original_index] = true;
                fn_.push(beats[*original_index]);
                fp.push(*shifted_time);
            }
            BeatOp::Insert { time } => fp.push(*time),
        }
    }
    let tp: Vec<f64> = beats
        .iter()
        .enumerate()
        .filter(|(i, _)| !touched[*i])
        .map(|(_, t)| *t)
        .collect();
    fp.sort_by(f64::total_cmp);
    fn_.sort_by(f64::total_cmp);
    (tp, fp, fn_)
}

/// Positions of the log's additional beats within the corrupted grid.
///
/// Times in the log are bit-identical to grid entries, so exact search works.
pub fn corrupted_error_indices(corrupted: &BeatGrid, log: &CorruptionLog) -> Vec<usize> {
    let beats = corrupted.beats();
    let mut indices: Vec<usize> = Vec::new();
    let mut push_time = |t: f64| {
        if let Ok(i) = beats.binary_search_by(|probe| probe.total_cmp(&t)) {
            indices.push(i);
        }
    };
    for op in log.beat_ops() {
        match op {
            BeatOp::Insert { time } => push_time(*time),
            BeatOp::Offset { shifted_time, .. } => push_time(*shifted_time),
            BeatOp::Delete { .. } => {}
        }
    }
    indices.sort_unstable();
    indices.dedup();
    indices
}

/// Matches candidate beats to reference beats greedily in time order; each
/// candidate takes the nearest still-unmatched reference within tolerance.
pub fn match_beat_indices(
    candidate: &[f64],
    reference: &[f64],
    tolerance: f64,
) -> Vec<Option<usize>> {
    let mut used = vec![false; reference.len()];
    let mut matches = Vec::with_capacity(candidate.len());
    for &t in candidate {
        let start = reference.partition_point(|&r| r < t);
        let mut best: Option<(f64, usize)> = None;
        // Walk outward in both directions while within tolerance.
        let mut left = start;
        while left > 0 {
            left -= 1;
            let d = t - reference[left];
            if d > tolerance {
                break;
            }
            if !used[left] && best.is_none_or(|(bd, bi)| d < bd || (d == bd && left < bi)) {
                best = Some((d, left));
            }
        }
        let mut right = start;
        while right < reference.len() {
            let d = reference[right] - t;
            if d > tolerance {
                break;
            }
            if !used[right] && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, right));
            }
            right += 1;
        }
        match best {
            Some((_, i)) => {
                used[i] = true;
                matches.push(Some(i));
            }
            None => matches.push(None),
        }
    }
    matches
}

/// Conventional beat F-measure under greedy one-to-one tolerance matching.
/// Both grids empty scores 1.0.
pub fn beat_f_measure(candidate: &BeatGrid, reference: &BeatGrid, tolerance: f64) -> f64 {
    if candidate.is_empty() && reference.is_empty() {
        return 1.0;
    }
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let matched = match_beat_indices(candidate.beats(), reference.beats(), tolerance)
        .iter()
        .filter(|m| m.is_some())
        .count() as f64;
    let precision = matched / candidate.len() as f64;
    let recall = matched / reference.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn sample_other_pitch_class(rng: &mut ChaCha8Rng, current: PitchClass) -> PitchClass {
    let pool: Vec<PitchClass> = PitchClass::all().filter(|pc| *pc != current).collect();
    pool[rng.gen_range(0..pool.len())]
}

fn sample_other_quality(rng: &mut ChaCha8Rng, current: Quality) -> Quality {
    let pool: Vec<Quality> = Quality::ALL.iter().copied().filter(|q| *q != current).collect();
    pool[rng.gen_range(0..pool.len())]
}

fn sample_other_bass(
    rng: &mut ChaCha8Rng,
    quality: Quality,
    current: Option<Degree>,
) -> Option<Degree> {
    let mut pool: Vec<Option<Degree>> = vec![None];
    pool.extend(quality.bass_degrees().map(Some));
    pool.retain(|b| *b != current);
    pool[rng.gen_range(0..pool.len())]
}

fn changed_attributes(original: &ChordLabel, corrupted: &ChordLabel) -> Vec<String> {
    let mut changed = Vec::new();
    if original.root != corrupted.root {
        changed.push("root".to_string());
    }
    if original.quality != corrupted.quality {
        changed.push("quality".to_string());
    }
    if original.bass != corrupted.bass {
        changed.push("inversion".to_string());
    }
    changed
}

/// Corrupts each chord's root, quality, and inversion independently at the
/// configured per-attribute rates; a corrupted attribute is always replaced
/// with a different value from its domain.
pub fn corrupt_chords(
    labels: &[ChordLabel],
    rates: &ChordRates,
    seed: u64,
) -> Result<(Vec<ChordLabel>, CorruptionLog), CorruptError> {
    if labels.is_empty() {
        return Err(CorruptError::EmptyInput);
    }
    for rate in [rates.root, rates.quality, rates.inversion] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(CorruptError::RateOutOfRange(rate));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corrupted = Vec::with_capacity(labels.len());
    let mut ops: Vec<LabelOp> = Vec::new();
    for (index, original) in labels.iter().enumerate() {
        let hit_root = rng.gen_bool(rates.root);
        let hit_quality = rng.gen_bool(rates.quality);
        let hit_inversion = rng.gen_bool(rates.inversion);

        let root = if hit_root { sample_other_pitch_class(&mut rng, original.root) } else { original.root };
        let quality =
            if hit_quality { sample_other_quality(&mut rng, original.quality) } else { original.quality };
        let mut bass = original.bass;
        // A quality change can strand the old bass outside the new interval
        // set; root position is the fallback.
        if let Some(degree) = bass {
            if !quality.contains(degree) {
                bass = None;
            }
        }
        if hit_inversion {
            bass = sample_other_bass(&mut rng, quality, bass);
        }

        let label = ChordLabel::new(root, quality, bass)
            .expect("sampled bass degrees come from the quality's own table");
        if label != *original {
            ops.push(LabelOp {
                index,
                original: render_chord(original),
                corrupted: render_chord(&label),
                attributes_changed: changed_attributes(original, &label),
            });
        }
        corrupted.push(label);
    }
    let log = CorruptionLog {
        task: Task::Chord,
        seed,
        rates: RateConfig { chord: *rates, ..RateConfig::default() },
        ops: CorruptionOps::Labels(ops),
    };
    Ok((corrupted, log))
}

/// Replaces each key label with probability `rate` by a uniform draw over the
/// other 23 keys; a replaced label never equals its original.
pub fn corrupt_keys(labels: &[KeyLabel], rate: f64, seed: u64) -> (Vec<KeyLabel>, CorruptionLog) {
    assert!((0.0..=1.0).contains(&rate), "key corruption rate {rate} outside [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys = all_keys();
    let mut corrupted = Vec::with_capacity(labels.len());
    let mut ops: Vec<LabelOp> = Vec::new();
    for (index, original) in labels.iter().enumerate() {
        if rng.gen_bool(rate) {
            let pool: Vec<KeyLabel> = keys.iter().copied().filter(|k| k != original).collect();
            let replacement = pool[rng.gen_range(0..pool.len())];
            ops.push(LabelOp {
                index,
                original: render_key(original),
                corrupted: render_key(&replacement),
                attributes_changed: vec!["key".to_string()],
            });
            corrupted.push(replacement);
        } else {
            corrupted.push(*original);
        }
    }
    let log = CorruptionLog {
        task: Task::Key,
        seed,
        rates: RateConfig { key: rate, ..RateConfig::default() },
        ops: CorruptionOps::Labels(ops),
    };
    (corrupted, log)
}

/// Applies a label log back onto the original list (chords or keys render to
/// the same canonical strings the log stores).
pub fn replay_chords(
    originals: &[ChordLabel],
    log: &CorruptionLog,
) -> Result<Vec<ChordLabel>, ReplayError> {
    if log.task != Task::Chord {
        return Err(ReplayError::Mismatch(format!("log is for task {}", log.task)));
    }
    let mut out = originals.to_vec();
    for op in log.label_ops() {
        if op.index >= out.len() {
            return Err(ReplayError::Mismatch(format!("index {} out of range", op.index)));
        }
        if render_chord(&out[op.index]) != op.original {
            return Err(ReplayError::Mismatch(format!(
                "original mismatch at {}: {} vs {}",
                op.index,
                render_chord(&out[op.index]),
                op.original
            )));
        }
        out[op.index] =
            parse_chord(&op.corrupted).map_err(|e| ReplayError::Mismatch(e.to_string()))?;
    }
    Ok(out)
}

pub fn replay_keys(
    originals: &[KeyLabel],
    log: &CorruptionLog,
) -> Result<Vec<KeyLabel>, ReplayError> {
    if log.task != Task::Key {
        return Err(ReplayError::Mismatch(format!("log is for task {}", log.task)));
    }
    let mut out = originals.to_vec();
    for op in log.label_ops() {
        if op.index >= out.len() {
            return Err(ReplayError::Mismatch(format!("index {} out of range", op.index)));
        }
        out[op.index] = parse_key(&op.corrupted).map_err(|e| ReplayError::Mismatch(e.to_string()))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steady_grid(count: usize, ibi: f64) -> BeatGrid {
        BeatGrid::new((0..count).map(|i| i as f64 * ibi).collect()).unwrap()
    }

    fn zero_rates() -> RateConfig {
        RateConfig {
            beat: BeatRates { insert: 0.0, delete: 0.0, offset: 0.0 },
            ..RateConfig::default()
        }
    }

    #[test]
    fn zero_rates_are_identity() {
        let grid = steady_grid(100, 0.5);
        let (out, log) = corrupt_beats(&grid, &zero_rates(), 7).unwrap();
        assert_eq!(out, grid);
        assert!(log.beat_ops().is_empty());
    }

    #[test]
    fn corruption_is_deterministic() {
        let grid = steady_grid(200, 0.5);
        let config = RateConfig::default();
        let (a, log_a) = corrupt_beats(&grid, &config, 42).unwrap();
        let (b, log_b) = corrupt_beats(&grid, &config, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(log_a, log_b);
        let (c, _) = corrupt_beats(&grid, &config, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn beat_log_replays_exactly() {
        let grid = steady_grid(300, 0.4);
        let (corrupted, log) = corrupt_beats(&grid, &RateConfig::default(), 11).unwrap();
        let replayed = replay_beats(&grid, &log).unwrap();
        assert_eq!(corrupted, replayed);
    }

    #[test]
    fn delete_all_beats_empties_the_grid() {
        let grid = steady_grid(50, 0.5);
        let config = RateConfig {
            beat: BeatRates { insert: 0.0, delete: 1.0, offset: 0.0 },
            ..RateConfig::default()
        };
        let (out, log) = corrupt_beats(&grid, &config, 3).unwrap();
        assert!(out.is_empty());
        assert_eq!(log.beat_ops().len(), 50);
    }

    #[test]
    fn offsets_exceed_tolerance() {
        let grid = steady_grid(200, 0.5);
        let config = RateConfig {
            beat: BeatRates { insert: 0.0, delete: 0.0, offset: 0.3 },
            ..RateConfig::default()
        };
        let (_, log) = corrupt_beats(&grid, &config, 5).unwrap();
        let mut seen = 0;
        for op in log.beat_ops() {
            if let BeatOp::Offset { original_time, shifted_time, .. } = op {
                let shift = (shifted_time - original_time).abs();
                assert!(shift > config.tolerance, "shift {shift} within tolerance");
                assert!(shift < 0.25 + 1e-9, "shift {shift} exceeds half the inter-beat interval");
                seen += 1;
            }
        }
        assert_eq!(seen, 60);
    }

    #[test]
    fn inserts_stay_between_neighbors_and_clear_of_them() {
        let grid = steady_grid(100, 0.5);
        let config = RateConfig {
            beat: BeatRates { insert: 0.2, delete: 0.0, offset: 0.0 },
            ..RateConfig::default()
        };
        let (_, log) = corrupt_beats(&grid, &config, 9).unwrap();
        let beats = grid.beats();
        let mut seen = 0;
        for op in log.beat_ops() {
            if let BeatOp::Insert { time } = op {
                let j = beats.partition_point(|b| b < time);
                assert!(j > 0 && j < beats.len(), "insert at {time} outside the grid span");
                assert!(time - beats[j - 1] >= config.tolerance - 1e-12);
                assert!(beats[j] - time >= config.tolerance - 1e-12);
                seen += 1;
            }
        }
        assert_eq!(seen, 20);
    }

    #[test]
    fn infeasible_rates_are_rejected() {
        let grid = steady_grid(10, 0.5);
        let config = RateConfig {
            beat: BeatRates { insert: 0.5, delete: 0.5, offset: 0.5 },
            ..RateConfig::default()
        };
        assert!(matches!(
            corrupt_beats(&grid, &config, 1),
            Err(CorruptError::InfeasibleRates(_))
        ));
        assert!(matches!(
            corrupt_beats(&steady_grid(1, 0.5), &RateConfig::default(), 1),
            Err(CorruptError::DegenerateGrid(1))
        ));
    }

    #[test]
    fn f_measure_identity_and_edge_cases() {
        let grid = steady_grid(100, 0.5);
        assert_eq!(beat_f_measure(&grid, &grid, 0.07), 1.0);
        let empty = BeatGrid::new(vec![]).unwrap();
        assert_eq!(beat_f_measure(&empty, &empty, 0.07), 1.0);
        assert_eq!(beat_f_measure(&empty, &grid, 0.07), 0.0);
    }

    #[test]
    fn f_measure_hand_example() {
        // reference [1.0, 2.0], candidate [1.0]: P = 1, R = 0.5, F = 2/3.
        let reference = BeatGrid::new(vec![1.0, 2.0]).unwrap();
        let candidate = BeatGrid::new(vec![1.0]).unwrap();
        let f = beat_f_measure(&candidate, &reference, 0.07);
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn f_measure_respects_tolerance() {
        let reference = BeatGrid::new(vec![1.0]).unwrap();
        let candidate = BeatGrid::new(vec![1.1]).unwrap();
        assert_eq!(beat_f_measure(&candidate, &reference, 0.07), 0.0);
        assert!(beat_f_measure(&candidate, &reference, 0.11) > 0.99);
    }

    #[test]
    fn nine_twelve_nine_lands_at_the_forced_f_measure() {
        // 90 inserts, 120 deletes, 90 offsets on 1000 beats leave 790 matched
        // beats out of 970 candidates: F = 1580 / 1970.
        let grid = steady_grid(1000, 0.5);
        let (corrupted, _) = corrupt_beats(&grid, &RateConfig::default(), 17).unwrap();
        let f = beat_f_measure(&corrupted, &grid, 0.07);
        assert!((f - 1580.0 / 1970.0).abs() < 1e-9, "measured {f}");
    }

    #[test]
    fn chord_rate_zero_is_identity() {
        let labels: Vec<ChordLabel> =
            vec![parse_chord("C:maj").unwrap(), parse_chord("A:min7/b7").unwrap()];
        let rates = ChordRates { root: 0.0, quality: 0.0, inversion: 0.0 };
        let (out, log) = corrupt_chords(&labels, &rates, 1).unwrap();
        assert_eq!(out, labels);
        assert!(log.label_ops().is_empty());
    }

    #[test]
    fn chord_root_only_corruption_preserves_quality() {
        let labels = vec![parse_chord("C:maj").unwrap()];
        let rates = ChordRates { root: 1.0, quality: 0.0, inversion: 0.0 };
        for seed in 0..50 {
            let (out, log) = corrupt_chords(&labels, &rates, seed).unwrap();
            assert_ne!(out[0].root, labels[0].root);
            assert_eq!(out[0].quality, Quality::Maj);
            assert_eq!(log.label_ops().len(), 1);
            assert_eq!(log.label_ops()[0].attributes_changed, vec!["root".to_string()]);
        }
    }

    #[test]
    fn chord_log_entries_always_differ_and_replay() {
        let labels: Vec<ChordLabel> = (0..500)
            .map(|i| {
                let rendered = ["C:maj", "A:min/b3", "G:7/5", "D:sus4", "F#:dim7"][i % 5];
                parse_chord(rendered).unwrap()
            })
            .collect();
        let (out, log) = corrupt_chords(&labels, &ChordRates::default(), 23).unwrap();
        for op in log.label_ops() {
            assert_ne!(op.original, op.corrupted);
            assert!(!op.attributes_changed.is_empty());
        }
        // Logged iff changed.
        let flags = log.truth_flags(labels.len());
        for i in 0..labels.len() {
            assert_eq!(flags[i], out[i] != labels[i], "index {i}");
        }
        assert_eq!(replay_chords(&labels, &log).unwrap(), out);
    }

    #[test]
    fn chord_corruption_keeps_labels_valid() {
        let labels: Vec<ChordLabel> =
            vec![parse_chord("C:maj/3").unwrap(), parse_chord("A:min7/b7").unwrap()];
        let rates = ChordRates { root: 0.0, quality: 1.0, inversion: 0.0 };
        for seed in 0..100 {
            let (out, _) = corrupt_chords(&labels, &rates, seed).unwrap();
            for label in &out {
                // Reconstructing through the validating constructor must work.
                ChordLabel::new(label.root, label.quality, label.bass).unwrap();
            }
        }
    }

    #[test]
    fn key_rate_zero_is_identity_and_one_always_changes() {
        let labels = vec![parse_key("C:maj").unwrap(); 20];
        let (out, log) = corrupt_keys(&labels, 0.0, 4);
        assert_eq!(out, labels);
        assert!(log.label_ops().is_empty());

        for seed in 0..50 {
            let (out, _) = corrupt_keys(&labels[..1], 1.0, seed);
            assert_ne!(out[0], labels[0]);
        }
    }

    #[test]
    fn key_corruption_calibrates_to_rate() {
        let labels = vec![parse_key("D:min").unwrap(); 20_000];
        let (out, log) = corrupt_keys(&labels, 0.30, 99);
        let changed = out.iter().zip(&labels).filter(|(a, b)| a != b).count();
        let fraction = changed as f64 / labels.len() as f64;
        assert!((fraction - 0.30).abs() < 0.01, "fraction {fraction}");
        assert_eq!(replay_keys(&labels, &log).unwrap(), out);
    }

    #[test]
    fn chord_attribute_fractions_calibrate_to_rates() {
        // Bass-free labels keep the inversion attribute free of coercion
        // spillover from quality changes.
        let labels: Vec<ChordLabel> = (0..20_000)
            .map(|i| parse_chord(["C:maj", "E:min", "G:7", "A:sus2"][i % 4]).unwrap())
            .collect();
        let (corrupted, _) = corrupt_chords(&labels, &ChordRates::default(), 77).unwrap();
        let n = labels.len() as f64;
        let fraction = |changed: usize| changed as f64 / n;
        let two_se = 2.0 * (0.1f64 * 0.9 / n).sqrt();
        let roots = corrupted.iter().zip(&labels).filter(|(a, b)| a.root != b.root).count();
        let qualities =
            corrupted.iter().zip(&labels).filter(|(a, b)| a.quality != b.quality).count();
        let basses = corrupted.iter().zip(&labels).filter(|(a, b)| a.bass != b.bass).count();
        assert!((fraction(roots) - 0.1).abs() < two_se, "root fraction {}", fraction(roots));
        assert!(
            (fraction(qualities) - 0.1).abs() < two_se,
            "quality fraction {}",
            fraction(qualities)
        );
        assert!((fraction(basses) - 0.1).abs() < two_se, "bass fraction {}", fraction(basses));
        // Label-level accuracy concentrates at 0.9^3.
        let unchanged = corrupted.iter().zip(&labels).filter(|(a, b)| a == b).count() as f64 / n;
        assert!((unchanged - 0.729).abs() < 0.01, "accuracy {unchanged}");
    }

    #[test]
    fn beat_truth_times_partition_reference_and_candidate() {
        let grid = steady_grid(400, 0.5);
        let (corrupted, log) = corrupt_beats(&grid, &RateConfig::default(), 31).unwrap();
        let (tp, fp, fn_) = beat_truth_times(&grid, &log);
        assert_eq!(tp.len() + fp.len(), corrupted.len());
        assert_eq!(tp.len() + fn_.len(), grid.len());
        // Additional beats resolve to positions in the corrupted grid.
        let indices = corrupted_error_indices(&corrupted, &log);
        assert_eq!(indices.len(), fp.len());
    }
}
