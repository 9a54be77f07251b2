//! Evaluation harness for annotation error detection over symbolic music.
//!
//! The pipeline: load or synthesize a corpus of symbolic performances, inject
//! seeded errors into ground-truth annotations (beat grids, chord labels, key
//! labels) while keeping an exact audit log, assemble six-section prompts with
//! configurable concept augmentation, query a judge (remote chat model, random
//! baseline, or ground-truth oracle), parse the verdicts, and score them with
//! detection metrics: CPR / EDR_P / EDR_N / WS for beats and weighted
//! precision / recall / F1 for chord and key labels.
//!
//! Modules map onto pipeline stages:
//!
//! - [`symbolic`] - notes, beat grids, segments, canonical JSON serialization
//! - [`midi`] - Standard MIDI File loading (formats 0/1)
//! - [`notation`] - chord / key symbol grammar and vocabularies
//! - [`corrupt`] - seeded error injection with replayable logs
//! - [`prompt`] - six-section prompt templates and concept masking
//! - [`judge`] - judge implementations with caching and retries
//! - [`verdict`] - robust verdict parsing and index-range geometry
//! - [`metrics`] - detection metrics and classification scores
//! - [`corpus`] - corpus directory IO, synthetic generator, dataset adapters
//! - [`runner`] - end-to-end experiment orchestration and reports
//!
//! See the crate examples for one runnable program per capability.

pub mod corpus;
pub mod corrupt;
pub mod judge;
pub mod metrics;
pub mod midi;
pub mod notation;
pub mod prompt;
pub mod runner;
pub mod symbolic;
pub mod verdict;

use serde::{Deserialize, Serialize};

/// The three annotation kinds under judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Beat-grid error detection: the judge returns index ranges.
    Beat,
    /// Chord-label error detection: the judge returns incorrect indices.
    Chord,
    /// Key-label error detection: the judge returns correct/incorrect.
    Key,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Beat, Task::Chord, Task::Key];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Beat => "beat",
            Task::Chord => "chord",
            Task::Key => "key",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        match s.trim().to_ascii_lowercase().as_str() {
            "beat" | "beats" => Some(Task::Beat),
            "chord" | "chords" => Some(Task::Chord),
            "key" | "keys" => Some(Task::Key),
            _ => None,
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Derives a child seed from a parent seed and a list of context labels.
///
/// Used for per-piece / per-segment seeding so that parallelism and piece
/// ordering cannot change results.
pub fn derive_seed(parent: u64, context: &[&str]) -> u64 {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    for part in context {
        hasher.update([0xff]);
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is at least 8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_parse_roundtrip() {
        for task in Task::ALL {
            assert_eq!(Task::parse(task.as_str()), Some(task));
        }
        assert_eq!(Task::parse("unknown"), None);
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(7, &["piece-01", "0"]);
        let b = derive_seed(7, &["piece-01", "0"]);
        let c = derive_seed(7, &["piece-01", "1"]);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
