//! Verdict extraction from raw judge text.
//!
//! Judges answer in JSON but routinely wrap it in prose, so parsing is total:
//! every byte string yields a verdict with a definite status. The schemas are
//! declared verbatim in the prompts' output-format sections:
//!
//! - beat:  `{"error_ranges": [[start, end], ...]}` (inclusive 0-based ranges)
//! - chord: `{"incorrect_chords": [index, ...]}` (masked prompts use the
//!   field name `incorrect_labels`; both are accepted)
//! - key:   `{"judgment": "correct" | "incorrect"}`

use crate::symbolic::BeatGrid;
use crate::Task;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VerdictError {
    #[error("range ({0}, {1}) out of bounds for a grid of {2} beats")]
    IndexOutOfRange(usize, usize, usize),
}

/// How cleanly the raw text mapped onto the schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    /// Exact schema match, nothing dropped.
    Clean,
    /// Usable after repairs (dropped indices, swapped bounds, case fixes).
    Salvaged,
    /// No usable JSON object; scored as "no errors detected".
    Unparseable,
}

/// Task-shaped judge answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VerdictKind {
    /// Inclusive index ranges over the corrupted beat list, normalized to be
    /// sorted and non-overlapping.
    Beat(Vec<(usize, usize)>),
    /// Indices of labels judged incorrect, sorted and deduplicated.
    Chord(Vec<usize>),
    /// Whether the single label was judged incorrect.
    Key { incorrect: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub status: ParseStatus,
}

impl Verdict {
    /// The "no errors detected" verdict used to score unparseable output.
    pub fn empty(task: Task) -> Verdict {
        let kind = match task {
            Task::Beat => VerdictKind::Beat(vec![]),
            Task::Chord => VerdictKind::Chord(vec![]),
            Task::Key => VerdictKind::Key { incorrect: false },
        };
        Verdict { kind, status: ParseStatus::Unparseable }
    }

    /// Canonical JSON rendering; parsing it back reproduces the verdict.
    pub fn to_json(&self) -> String {
        match &self.kind {
            VerdictKind::Beat(ranges) => {
                let ranges: Vec<[usize; 2]> = ranges.iter().map(|(a, b)| [*a, *b]).collect();
                serde_json::json!({ "error_ranges": ranges }).to_string()
            }
            VerdictKind::Chord(indices) => {
                serde_json::json!({ "incorrect_chords": indices }).to_string()
            }
            VerdictKind::Key { incorrect } => {
                let word = if *incorrect { "incorrect" } else { "correct" };
                serde_json::json!({ "judgment": word }).to_string()
            }
        }
    }
}

/// Scans the text for balanced, well-formed JSON objects, outermost first in
/// reading order. String contents and escapes are honored.
fn candidate_objects(text: &str) -> Vec<Value> {
    let bytes = text.as_bytes();
    let mut candidates = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'{' {
            i += 1;
            continue;
        }
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        let mut end = None;
        for (offset, &b) in bytes[i..].iter().enumerate() {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(i + offset + 1);
                        break;
                    }
                }
                _ => {}
            }
        }
        match end {
            Some(end) => {
                if let Ok(value) = serde_json::from_str::<Value>(&text[i..end]) {
                    if value.is_object() {
                        candidates.push(value);
                    }
                    // Skip past this object whether or not it parsed as one.
                    i = end;
                    continue;
                }
                // Unparseable braces: try the next opening brace inside.
                i += 1;
            }
            None => {
                i += 1;
            }
        }
    }
    candidates
}

/// Reads a JSON number as a usize index, tolerating integral floats.
/// Returns (value, was_exact).
fn read_index(value: &Value) -> Option<(usize, bool)> {
    if let Some(u) = value.as_u64() {
        return Some((u as usize, true));
    }
    if let Some(f) = value.as_f64() {
        if f >= 0.0 && f.fract() == 0.0 && f <= usize::MAX as f64 {
            return Some((f as usize, false));
        }
    }
    None
}

fn parse_beat_object(object: &Value, beat_count: usize) -> Option<(Vec<(usize, usize)>, bool)> {
    let ranges = object.get("error_ranges")?.as_array()?;
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut salvaged = false;
    for entry in ranges {
        let Some(pair) = entry.as_array() else {
            salvaged = true;
            continue;
        };
        if pair.len() != 2 {
            salvaged = true;
            continue;
        }
        let (Some((a, ea)), Some((b, eb))) = (read_index(&pair[0]), read_index(&pair[1])) else {
            salvaged = true;
            continue;
        };
        salvaged |= !ea || !eb;
        let (mut lo, mut hi) = (a, b);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
            salvaged = true;
        }
        if hi >= beat_count {
            salvaged = true;
            if lo >= beat_count {
                continue;
            }
            hi = beat_count.saturating_sub(1);
        }
        out.push((lo, hi));
    }
    Some((normalize_ranges(out), salvaged))
}

/// Sorts ranges and merges overlaps so the result is non-overlapping.
pub fn normalize_ranges(mut ranges: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    ranges.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(ranges.len());
    for (lo, hi) in ranges {
        match out.last_mut() {
            Some((_, prev_hi)) if lo <= *prev_hi => {
                *prev_hi = (*prev_hi).max(hi);
            }
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Merges runs of consecutive indices into inclusive ranges, e.g.
/// {3,4,5,9} becomes [(3,5), (9,9)].
pub fn merge_consecutive(indices: &[usize]) -> Vec<(usize, usize)> {
    let mut sorted: Vec<usize> = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for index in sorted {
        match out.last_mut() {
            Some((_, hi)) if index == *hi + 1 => *hi = index,
            _ => out.push((index, index)),
        }
    }
    out
}

fn parse_chord_object(object: &Value, label_count: usize) -> Option<(Vec<usize>, bool)> {
    let field = object
        .get("incorrect_chords")
        .or_else(|| object.get("incorrect_labels"))?;
    let entries = field.as_array()?;
    let mut out: Vec<usize> = Vec::new();
    let mut salvaged = false;
    for entry in entries {
        match read_index(entry) {
            Some((index, exact)) => {
                salvaged |= !exact;
                if index < label_count {
                    out.push(index);
                } else {
                    salvaged = true;
                }
            }
            None => salvaged = true,
        }
    }
    let before = out.len();
    out.sort_unstable();
    out.dedup();
    salvaged |= out.len() != before;
    Some((out, salvaged))
}

fn parse_key_object(object: &Value) -> Option<(bool, bool)> {
    let raw = object.get("judgment")?.as_str()?;
    match raw {
        "correct" => Some((false, false)),
        "incorrect" => Some((true, false)),
        other => match other.trim().to_ascii_lowercase().as_str() {
            "correct" => Some((false, true)),
            "incorrect" => Some((true, true)),
            _ => None,
        },
    }
}

/// Extracts a structured verdict from raw judge text. Total: any input
/// yields a verdict; text with no schema-conforming JSON object comes back
/// `Unparseable` and is scored as "no errors detected".
pub fn parse_verdict(raw: &str, task: Task, item_count: usize) -> Verdict {
    let candidates = candidate_objects(raw);
    let Some(object) = candidates.first() else {
        return Verdict::empty(task);
    };
    let status = |salvaged: bool| if salvaged { ParseStatus::Salvaged } else { ParseStatus::Clean };
    match task {
        Task::Beat => match parse_beat_object(object, item_count) {
            Some((ranges, salvaged)) => {
                Verdict { kind: VerdictKind::Beat(ranges), status: status(salvaged) }
            }
            None => Verdict::empty(task),
        },
        Task::Chord => match parse_chord_object(object, item_count) {
            Some((indices, salvaged)) => {
                Verdict { kind: VerdictKind::Chord(indices), status: status(salvaged) }
            }
            None => Verdict::empty(task),
        },
        Task::Key => match parse_key_object(object) {
            Some((incorrect, salvaged)) => {
                Verdict { kind: VerdictKind::Key { incorrect }, status: status(salvaged) }
            }
            None => Verdict::empty(task),
        },
    }
}

/// Union of disjoint closed time intervals, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    /// Builds a set, sorting and merging overlapping intervals.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> IntervalSet {
        intervals.retain(|(lo, hi)| lo <= hi);
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some((_, prev_hi)) if lo <= *prev_hi => {
                    *prev_hi = prev_hi.max(hi);
                }
                _ => merged.push((lo, hi)),
            }
        }
        IntervalSet { intervals: merged }
    }

    pub fn empty() -> IntervalSet {
        IntervalSet { intervals: vec![] }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Whether some interval contains the time point (closed bounds).
    pub fn contains(&self, time: f64) -> bool {
        let i = self.intervals.partition_point(|(lo, _)| *lo <= time);
        i > 0 && self.intervals[i - 1].1 >= time
    }
}

/// Expands verdict index ranges into time intervals over the corrupted grid.
///
/// Range (i, j) becomes [t_i - gap(i-1, i) / 2, t_j + gap(j, j+1) / 2] with
/// the gaps read from the corrupted grid; grid edges reuse their adjacent
/// gap. A single-beat grid has no gap and degenerates to a point interval.
pub fn ranges_to_intervals(
    ranges: &[(usize, usize)],
    grid: &BeatGrid,
) -> Result<IntervalSet, VerdictError> {
    let beats = grid.beats();
    let n = beats.len();
    let mut intervals = Vec::with_capacity(ranges.len());
    for &(start, end) in ranges {
        if start > end || end >= n {
            return Err(VerdictError::IndexOutOfRange(start, end, n));
        }
        let gap_before = if start > 0 {
            beats[start] - beats[start - 1]
        } else if n > 1 {
            beats[1] - beats[0]
        } else {
            0.0
        };
        let gap_after = if end + 1 < n {
            beats[end + 1] - beats[end]
        } else if n > 1 {
            beats[n - 1] - beats[n - 2]
        } else {
            0.0
        };
        intervals.push((beats[start] - 0.5 * gap_before, beats[end] + 0.5 * gap_after));
    }
    Ok(IntervalSet::new(intervals))
}
