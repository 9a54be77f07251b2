//! Random baseline judges.
//!
//! The beat baseline selects k beat indices uniformly and joins runs of
//! consecutive selections into error ranges. The label baseline flags each
//! label incorrect with probability 0.5. Both are deterministic per seed;
//! per-request seeds are derived from the judge seed and the prompt hash.

use super::{Judge, JudgeError, JudgeRequest, JudgeResponse};
use crate::verdict::merge_consecutive;
use crate::Task;
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

/// Selects `k` distinct beat indices uniformly and merges consecutive runs
/// into inclusive index ranges.
pub fn random_beat_verdict(beat_count: usize, k: usize, seed: u64) -> Vec<(usize, usize)> {
    assert!(k <= beat_count, "cannot select {k} of {beat_count} beats");
    if k == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<usize> = sample(&mut rng, beat_count, k).into_iter().collect();
    merge_consecutive(&chosen)
}

/// Flags each label incorrect independently with probability 0.5.
pub fn random_label_verdict(label_count: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..label_count).map(|_| rng.gen_bool(0.5)).collect()
}

/// Random baseline judge over the uniform [`Judge`] interface.
///
/// The runner registers each request's label count before judging; the
/// selection fraction for the beat task defaults to 0.5, matching a
/// 50/50 per-item guess.
pub struct RandomJudge {
    seed: u64,
    beat_selection_fraction: f64,
    contexts: Mutex<HashMap<String, usize>>,
}

impl RandomJudge {
    pub const DEFAULT_BEAT_FRACTION: f64 = 0.5;

    pub fn new(seed: u64) -> RandomJudge {
        RandomJudge::with_beat_fraction(seed, RandomJudge::DEFAULT_BEAT_FRACTION)
    }

    /// Overrides the fraction of beats the baseline flags (e.g. to tie it to
    /// the injection error rate).
    pub fn with_beat_fraction(seed: u64, beat_selection_fraction: f64) -> RandomJudge {
        assert!((0.0..=1.0).contains(&beat_selection_fraction));
        RandomJudge { seed, beat_selection_fraction, contexts: Mutex::new(HashMap::new()) }
    }

    /// Registers how many judged items a request's segment carries.
    pub fn register_context(&self, prompt_hash: &str, item_count: usize) {
        self.contexts.lock().expect("context lock").insert(prompt_hash.to_string(), item_count);
    }

    fn derived_seed(&self, prompt_hash: &str) -> u64 {
        crate::derive_seed(self.seed, &["random-judge", prompt_hash])
    }
}

impl Judge for RandomJudge {
    fn id(&self) -> &str {
        "random"
    }

    fn judge(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        let count = *self
            .contexts
            .lock()
            .expect("context lock")
            .get(&request.prompt_hash)
            .ok_or_else(|| JudgeError::MissingContext(request.prompt_hash.clone()))?;
        let seed = self.derived_seed(&request.prompt_hash);
        let raw = match request.task {
            Task::Beat => {
                let k = (self.beat_selection_fraction * count as f64).round() as usize;
                let ranges = random_beat_verdict(count, k.min(count), seed);
                let ranges: Vec<[usize; 2]> = ranges.iter().map(|(a, b)| [*a, *b]).collect();
                serde_json::json!({ "error_ranges": ranges }).to_string()
            }
            Task::Chord => {
                let flags = random_label_verdict(count, seed);
                let indices: Vec<usize> = flags
                    .iter()
                    .enumerate()
                    .filter(|(_, flagged)| **flagged)
                    .map(|(i, _)| i)
                    .collect();
                serde_json::json!({ "incorrect_chords": indices }).to_string()
            }
            Task::Key => {
                let incorrect = random_label_verdict(1, seed)[0];
                let word = if incorrect { "incorrect" } else { "correct" };
                serde_json::json!({ "judgment": word }).to_string()
            }
        };
        Ok(JudgeResponse {
            raw,
            judge_id: self.id().to_string(),
            latency: Duration::ZERO,
            token_usage: None,
            cache_hit: false,
        })
    }
}
