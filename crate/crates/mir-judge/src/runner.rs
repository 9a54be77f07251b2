//! End-to-end experiment orchestration.
//!
//! One config drives the whole pipeline: load or synthesize a corpus, cut
//! segments, corrupt annotations (seeded per segment), serialize, build
//! prompts per augmentation level, judge, parse, score, and emit reports.
//! Everything an auditor needs is archived in the output directory: the
//! resolved config, corruption logs, raw responses, and the result tables.
//! Given (config, seed, archived responses) the report bytes are unique;
//! timestamps and cache accounting live only in `meta.json`.

use crate::corpus::{generate_synthetic_corpus, load_corpus, CorpusError, SyntheticSpec};
use crate::corrupt::{
    corrupt_beats, corrupt_chords, corrupt_keys, corrupted_error_indices, CorruptionLog,
    RateConfig,
};
use crate::judge::{
    DiskCache, Judge, JudgeError, JudgeRequest, JudgeResponse, ModelParams, OracleJudge,
    RandomJudge, RemoteConfig, RemoteJudge, RetryPolicy,
};
use crate::metrics::{
    classify_beats, BeatDetectionCounts, MetricsBundle,
};
use crate::prompt::{build_prompt, prompt_hash, AugmentationLevel};
use crate::symbolic::{
    corpus_stats, make_segments, serialize_segment, Annotation, ByteLenEstimator, CorpusStats,
    Piece, Segment, SegmentPolicy,
};
use crate::verdict::{merge_consecutive, parse_verdict, ranges_to_intervals, ParseStatus, Verdict, VerdictKind};
use crate::{derive_seed, Task};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{context}: {message}")]
    Stage { context: String, message: String },
    #[error("IO failure at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunnerError {
    fn stage(context: impl Into<String>, message: impl std::fmt::Display) -> RunnerError {
        RunnerError::Stage { context: context.into(), message: message.to_string() }
    }

    /// Partial results were persisted before this error surfaced.
    pub fn is_partial(&self) -> bool {
        matches!(self, RunnerError::Stage { .. })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io { path: path.to_path_buf(), source }
}

fn default_seed() -> u64 {
    42
}

fn default_template_version() -> String {
    crate::prompt::TEMPLATE_VERSION.to_string()
}

fn default_concurrency() -> usize {
    4
}

fn default_levels() -> Vec<String> {
    vec![
        "basic".to_string(),
        "introduce".to_string(),
        "mask_attribute".to_string(),
        "mask_task".to_string(),
        "mask_domain".to_string(),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub task: Task,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_levels")]
    pub levels: Vec<String>,
    pub output_dir: PathBuf,
    #[serde(default = "default_template_version")]
    pub template_version: String,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub log_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CorpusSection {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeSection {
    /// `oracle`, `random`, or `remote`.
    #[serde(default = "default_judge_kind")]
    pub kind: String,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    /// Fraction of beats the random baseline flags (default 0.5).
    #[serde(default)]
    pub beat_fraction: Option<f64>,
    #[serde(default)]
    pub retry_attempts: Option<usize>,
    #[serde(default)]
    pub retry_backoff_ms: Option<u64>,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
}

fn default_judge_kind() -> String {
    "oracle".to_string()
}

impl Default for JudgeSection {
    fn default() -> JudgeSection {
        JudgeSection {
            kind: default_judge_kind(),
            model: None,
            endpoint: None,
            api_key_env: None,
            temperature: None,
            max_tokens: None,
            beat_fraction: None,
            retry_attempts: None,
            retry_backoff_ms: None,
            timeout_ms: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SegmentSection {
    /// `whole_piece`, `fixed_label_count`, or `measures`; task default if unset.
    #[serde(default)]
    pub policy: Option<String>,
    #[serde(default)]
    pub label_count: Option<usize>,
    #[serde(default)]
    pub measures: Option<usize>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub beats_per_measure: Option<usize>,
}

/// Full experiment configuration, one TOML section per concern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub rates: RateConfig,
    #[serde(default)]
    pub judge: JudgeSection,
    #[serde(default)]
    pub segments: SegmentSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig, RunnerError> {
        toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))
    }

    pub fn from_toml_file(path: &Path) -> Result<ExperimentConfig, RunnerError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        ExperimentConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the resolved config text; identifies a run.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml_string().as_bytes());
        hex::encode(hasher.finalize())[..16].to_string()
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        self.rates.validate().map_err(|e| RunnerError::Config(e.to_string()))?;
        if self.corpus.path.is_none() && self.corpus.synthetic.is_none() {
            return Err(RunnerError::Config(
                "corpus: set either `path` or `synthetic`".to_string(),
            ));
        }
        if let Some(path) = &self.corpus.path {
            if !path.exists() {
                return Err(RunnerError::Config(format!(
                    "corpus path {} does not exist",
                    path.display()
                )));
            }
        }
        if self.experiment.levels.is_empty() {
            return Err(RunnerError::Config("experiment.levels is empty".to_string()));
        }
        self.resolved_levels()?;
        match self.judge.kind.as_str() {
            "oracle" | "random" | "remote" => Ok(()),
            other => Err(RunnerError::Config(format!("unknown judge kind {other:?}"))),
        }
    }

    pub fn resolved_levels(&self) -> Result<Vec<AugmentationLevel>, RunnerError> {
        self.experiment
            .levels
            .iter()
            .map(|name| {
                AugmentationLevel::parse(name, self.experiment.task)
                    .map_err(|e| RunnerError::Config(e.to_string()))
            })
            .collect()
    }

    fn policy_for_piece(&self, piece_id: &str) -> Result<SegmentPolicy, RunnerError> {
        let seed = derive_seed(self.experiment.seed, &["segments", piece_id]);
        let section = &self.segments;
        match section.policy.as_deref() {
            None | Some("default") => Ok(SegmentPolicy::default_for(self.experiment.task, seed)),
            Some("whole_piece") => Ok(SegmentPolicy::WholePiece),
            Some("fixed_label_count") => {
                Ok(SegmentPolicy::FixedLabelCount(section.label_count.unwrap_or(32)))
            }
            Some("measures") => Ok(SegmentPolicy::Measures {
                measures: section.measures.unwrap_or(4),
                count: section.count.unwrap_or(3),
                beats_per_measure: section.beats_per_measure.unwrap_or(4),
                seed,
            }),
            Some(other) => Err(RunnerError::Config(format!("unknown segment policy {other:?}"))),
        }
    }

    fn model_params(&self) -> ModelParams {
        let defaults = ModelParams::default();
        ModelParams {
            model: self.judge.model.clone().unwrap_or(defaults.model),
            temperature: self.judge.temperature.unwrap_or(defaults.temperature),
            max_tokens: self.judge.max_tokens,
        }
    }
}

/// One archived judge response, one JSON line in `responses.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub level: String,
    pub piece: String,
    pub segment: usize,
    pub prompt_hash: String,
    pub request_hash: String,
    pub judge_id: String,
    pub raw: String,
    pub cache_hit: bool,
    pub item_count: usize,
}

/// One archived corruption log, one JSON line in `corruption_logs.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRecord {
    pub piece: String,
    pub segment: usize,
    pub log: CorruptionLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceReport {
    pub piece_id: String,
    pub metrics: MetricsBundle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level_slug: String,
    pub level_display: String,
    pub metrics: MetricsBundle,
    pub calls: usize,
    pub unparseable: usize,
    pub cache_hits: usize,
    pub per_piece: Vec<PieceReport>,
}

impl LevelReport {
    pub fn unparseable_rate(&self) -> f64 {
        if self.calls == 0 {
            0.0
        } else {
            self.unparseable as f64 / self.calls as f64
        }
    }
}

/// Scored results for a whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub task: Task,
    pub judge_id: String,
    pub template_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub levels: Vec<LevelReport>,
    pub corpus_stats: CorpusStats,
    pub remote_calls: usize,
    pub generated_unix: u64,
}

enum JudgeHandle {
    Oracle(OracleJudge),
    Random(RandomJudge),
    Remote(RemoteJudge),
    Replay(ReplayJudge),
}

impl JudgeHandle {
    fn as_judge(&self) -> &dyn Judge {
        match self {
            JudgeHandle::Oracle(j) => j,
            JudgeHandle::Random(j) => j,
            JudgeHandle::Remote(j) => j,
            JudgeHandle::Replay(j) => j,
        }
    }

    fn remote_calls(&self) -> usize {
        match self {
            JudgeHandle::Remote(j) => j.remote_calls(),
            _ => 0,
        }
    }
}

/// Serves archived raw responses keyed by request hash; drives report
/// regeneration without touching any judge.
struct ReplayJudge {
    responses: HashMap<String, (String, String)>,
}

impl Judge for ReplayJudge {
    fn id(&self) -> &str {
        "replay"
    }

    fn judge(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        let (raw, judge_id) = self
            .responses
            .get(&request.request_hash())
            .cloned()
            .ok_or_else(|| JudgeError::MissingContext(request.request_hash()))?;
        Ok(JudgeResponse {
            raw,
            judge_id,
            latency: std::time::Duration::ZERO,
            token_usage: None,
            cache_hit: true,
        })
    }
}

/// A segment after corruption, ready for prompting and scoring.
struct PreparedSegment {
    piece_id: String,
    segment_index: usize,
    original: Annotation,
    corrupted: Segment,
    log: CorruptionLog,
    serialized: String,
    item_count: usize,
}

// Preparation happens before any artifact is written, so its failures are
// configuration/corpus mismatches (exit code 1), not partial runs.
fn prepare_segments(
    config: &ExperimentConfig,
    pieces: &[Piece],
) -> Result<Vec<PreparedSegment>, RunnerError> {
    let task = config.experiment.task;
    let mut prepared = Vec::new();
    for piece in pieces {
        let policy = config.policy_for_piece(&piece.id)?;
        let segments = make_segments(piece, task, &policy)
            .map_err(|e| RunnerError::Config(format!("segmenting piece {}: {e}", piece.id)))?;
        for segment in segments {
            let index = segment.provenance.segment_index;
            let seed = derive_seed(config.experiment.seed, &[&piece.id, &index.to_string()]);
            let context = format!("corrupting piece {} segment {index}", piece.id);
            let config_err = |e: &dyn std::fmt::Display| RunnerError::Config(format!("{context}: {e}"));
            let (annotation, log) = match &segment.annotation {
                Annotation::Beats(grid) => {
                    let (corrupted, log) = corrupt_beats(grid, &config.rates, seed)
                        .map_err(|e| config_err(&e))?;
                    (Annotation::Beats(corrupted), log)
                }
                Annotation::Chords(spans) => {
                    let labels: Vec<_> = spans.iter().map(|s| s.label).collect();
                    let (corrupted, log) = corrupt_chords(&labels, &config.rates.chord, seed)
                        .map_err(|e| config_err(&e))?;
                    let spans = spans
                        .iter()
                        .zip(corrupted)
                        .map(|(span, label)| crate::notation::ChordSpan { label, ..*span })
                        .collect();
                    (Annotation::Chords(spans), log)
                }
                Annotation::Key(key) => {
                    let (corrupted, log) = corrupt_keys(&[*key], config.rates.key, seed);
                    (Annotation::Key(corrupted[0]), log)
                }
            };
            let corrupted = segment.with_annotation(annotation);
            let serialized = serialize_segment(&corrupted, task)
                .map_err(|e| config_err(&e))?;
            let item_count = corrupted.annotation.label_count();
            prepared.push(PreparedSegment {
                piece_id: piece.id.clone(),
                segment_index: index,
                original: segment.annotation.clone(),
                corrupted,
                log,
                serialized,
                item_count,
            });
        }
    }
    Ok(prepared)
}

/// The exact verdict text implied by a segment's corruption log.
fn oracle_verdict(task: Task, prepared: &PreparedSegment) -> String {
    match task {
        Task::Beat => {
            let Annotation::Beats(grid) = &prepared.corrupted.annotation else {
                unreachable!("beat task carries beat annotations");
            };
            let indices = corrupted_error_indices(grid, &prepared.log);
            let ranges: Vec<[usize; 2]> =
                merge_consecutive(&indices).iter().map(|(a, b)| [*a, *b]).collect();
            serde_json::json!({ "error_ranges": ranges }).to_string()
        }
        Task::Chord => {
            let mut indices: Vec<usize> =
                prepared.log.label_ops().iter().map(|op| op.index).collect();
            indices.sort_unstable();
            serde_json::json!({ "incorrect_chords": indices }).to_string()
        }
        Task::Key => {
            let word = if prepared.log.label_ops().is_empty() { "correct" } else { "incorrect" };
            serde_json::json!({ "judgment": word }).to_string()
        }
    }
}

fn build_judge(config: &ExperimentConfig) -> Result<JudgeHandle, RunnerError> {
    match config.judge.kind.as_str() {
        "oracle" => Ok(JudgeHandle::Oracle(OracleJudge::new())),
        "random" => {
            let fraction =
                config.judge.beat_fraction.unwrap_or(RandomJudge::DEFAULT_BEAT_FRACTION);
            Ok(JudgeHandle::Random(RandomJudge::with_beat_fraction(
                config.experiment.seed,
                fraction,
            )))
        }
        "remote" => {
            let defaults = RemoteConfig::default();
            let retry = RetryPolicy {
                attempts: config.judge.retry_attempts.unwrap_or(5),
                initial_backoff: config
                    .judge
                    .retry_backoff_ms
                    .map(std::time::Duration::from_millis)
                    .unwrap_or(std::time::Duration::from_secs(1)),
            };
            let remote_config = RemoteConfig {
                endpoint: config.judge.endpoint.clone().unwrap_or(defaults.endpoint),
                api_key_env: config.judge.api_key_env.clone().unwrap_or(defaults.api_key_env),
                timeout: config
                    .judge
                    .timeout_ms
                    .map(std::time::Duration::from_millis)
                    .unwrap_or(defaults.timeout),
                retry,
            };
            let mut judge = RemoteJudge::new(remote_config);
            if let Some(cache_dir) = &config.experiment.cache_dir {
                judge = judge.with_cache(DiskCache::new(cache_dir));
            }
            Ok(JudgeHandle::Remote(judge))
        }
        other => Err(RunnerError::Config(format!("unknown judge kind {other:?}"))),
    }
}

/// Judges a batch of requests, bounding in-flight remote calls at the
/// configured limit; result order matches request order.
fn judge_batch(
    handle: &JudgeHandle,
    requests: &[JudgeRequest],
    concurrency: usize,
) -> Vec<Result<JudgeResponse, JudgeError>> {
    let parallel = matches!(handle, JudgeHandle::Remote(_)) && concurrency > 1;
    if !parallel {
        return requests.iter().map(|r| handle.as_judge().judge(r)).collect();
    }
    let slots: Mutex<Vec<Option<Result<JudgeResponse, JudgeError>>>> =
        Mutex::new((0..requests.len()).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..concurrency.min(requests.len()) {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::SeqCst);
                if index >= requests.len() {
                    break;
                }
                let outcome = handle.as_judge().judge(&requests[index]);
                slots.lock().expect("slot lock")[index] = Some(outcome);
            });
        }
    });
    slots
        .into_inner()
        .expect("slot lock")
        .into_iter()
        .map(|slot| slot.expect("every request was judged"))
        .collect()
}

/// Per-level scoring accumulators, pooled corpus-wide (micro) and per piece.
struct LevelScorer {
    task: Task,
    tolerance: f64,
    beat_counts: BeatDetectionCounts,
    beat_by_piece: BTreeMap<String, BeatDetectionCounts>,
    predicted: Vec<bool>,
    truth: Vec<bool>,
    flags_by_piece: BTreeMap<String, (Vec<bool>, Vec<bool>)>,
    unparseable: usize,
    cache_hits: usize,
    calls: usize,
}

impl LevelScorer {
    fn new(task: Task, tolerance: f64) -> LevelScorer {
        LevelScorer {
            task,
            tolerance,
            beat_counts: BeatDetectionCounts::new(),
            beat_by_piece: BTreeMap::new(),
            predicted: Vec::new(),
            truth: Vec::new(),
            flags_by_piece: BTreeMap::new(),
            unparseable: 0,
            cache_hits: 0,
            calls: 0,
        }
    }

    fn score(
        &mut self,
        prepared: &PreparedSegment,
        verdict: &Verdict,
        cache_hit: bool,
    ) -> Result<(), RunnerError> {
        self.calls += 1;
        if cache_hit {
            self.cache_hits += 1;
        }
        if verdict.status == ParseStatus::Unparseable {
            self.unparseable += 1;
        }
        let context =
            format!("scoring piece {} segment {}", prepared.piece_id, prepared.segment_index);
        match (&verdict.kind, &prepared.original, &prepared.corrupted.annotation) {
            (VerdictKind::Beat(ranges), Annotation::Beats(reference), Annotation::Beats(corrupted)) => {
                let sets = classify_beats(corrupted, reference, self.tolerance, Some(&prepared.log));
                let intervals = ranges_to_intervals(ranges, corrupted)
                    .map_err(|e| RunnerError::stage(&context, e))?;
                self.beat_counts.accumulate(&sets, &intervals);
                self.beat_by_piece
                    .entry(prepared.piece_id.clone())
                    .or_default()
                    .accumulate(&sets, &intervals);
            }
            (VerdictKind::Chord(indices), _, Annotation::Chords(spans)) => {
                let truth = prepared.log.truth_flags(spans.len());
                let mut predicted = vec![false; spans.len()];
                for &index in indices {
                    predicted[index] = true;
                }
                let per_piece = self
                    .flags_by_piece
                    .entry(prepared.piece_id.clone())
                    .or_default();
                per_piece.0.extend(&predicted);
                per_piece.1.extend(&truth);
                self.predicted.extend(predicted);
                self.truth.extend(truth);
            }
            (VerdictKind::Key { incorrect }, _, Annotation::Key(_)) => {
                let truth = !prepared.log.label_ops().is_empty();
                let per_piece = self
                    .flags_by_piece
                    .entry(prepared.piece_id.clone())
                    .or_default();
                per_piece.0.push(*incorrect);
                per_piece.1.push(truth);
                self.predicted.push(*incorrect);
                self.truth.push(truth);
            }
            _ => {
                return Err(RunnerError::stage(&context, "verdict kind does not match the task"));
            }
        }
        Ok(())
    }

    fn bundle_from(
        task: Task,
        beat_counts: &BeatDetectionCounts,
        predicted: &[bool],
        truth: &[bool],
    ) -> MetricsBundle {
        match task {
            Task::Beat => MetricsBundle {
                beat: beat_counts.metrics().ok(),
                classification: None,
            },
            Task::Chord | Task::Key => MetricsBundle {
                beat: None,
                classification: crate::metrics::weighted_prf(predicted, truth).ok(),
            },
        }
    }

    fn finish(self, level: AugmentationLevel) -> LevelReport {
        let metrics =
            Self::bundle_from(self.task, &self.beat_counts, &self.predicted, &self.truth);
        let mut per_piece = Vec::new();
        match self.task {
            Task::Beat => {
                for (piece_id, counts) in &self.beat_by_piece {
                    per_piece.push(PieceReport {
                        piece_id: piece_id.clone(),
                        metrics: Self::bundle_from(self.task, counts, &[], &[]),
                    });
                }
            }
            Task::Chord | Task::Key => {
                for (piece_id, (predicted, truth)) in &self.flags_by_piece {
                    per_piece.push(PieceReport {
                        piece_id: piece_id.clone(),
                        metrics: Self::bundle_from(
                            self.task,
                            &BeatDetectionCounts::new(),
                            predicted,
                            truth,
                        ),
                    });
                }
            }
        }
        LevelReport {
            level_slug: level.slug(),
            level_display: level.display(),
            metrics,
            calls: self.calls,
            unparseable: self.unparseable,
            cache_hits: self.cache_hits,
            per_piece,
        }
    }
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), RunnerError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| RunnerError::stage("serializing archive record", e))?;
        file.write_all(line.as_bytes()).map_err(io_err(path))?;
        file.write_all(b"\n").map_err(io_err(path))?;
    }
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, RunnerError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|line| !line.trim().is_empty())
        .map(|line| {
            serde_json::from_str(line)
                .map_err(|e| RunnerError::stage(format!("parsing {}", path.display()), e))
        })
        .collect()
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::SystemTime::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs the configured experiment end to end and writes all artifacts to the
/// output directory. Deterministic given (config, seed, cached responses).
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, RunnerError> {
    run_pipeline(config, None, None)
}

fn run_pipeline(
    config: &ExperimentConfig,
    replay: Option<ReplayJudge>,
    out_override: Option<&Path>,
) -> Result<RunReport, RunnerError> {
    config.validate()?;
    let task = config.experiment.task;
    let out_dir = out_override.unwrap_or(&config.experiment.output_dir).to_path_buf();
    let out_dir = &out_dir;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    // Corpus: on-disk path or a synthetic corpus regenerated from the seed.
    let corpus_dir = match (&config.corpus.path, &config.corpus.synthetic) {
        (Some(path), _) => path.clone(),
        (None, Some(spec)) => {
            let dir = out_dir.join("corpus");
            generate_synthetic_corpus(spec, config.experiment.seed, &dir)?;
            dir
        }
        (None, None) => unreachable!("validate() requires a corpus source"),
    };
    let pieces = load_corpus(&corpus_dir)?;
    let levels = config.resolved_levels()?;
    let prepared = prepare_segments(config, &pieces)?;

    // Archive corruption logs before judging starts.
    let log_records: Vec<LogRecord> = prepared
        .iter()
        .map(|p| LogRecord { piece: p.piece_id.clone(), segment: p.segment_index, log: p.log.clone() })
        .collect();
    let log_path = config
        .experiment
        .log_out
        .clone()
        .unwrap_or_else(|| out_dir.join("corruption_logs.jsonl"));
    write_jsonl(&log_path, &log_records)?;

    let handle = match replay {
        Some(replay) => JudgeHandle::Replay(replay),
        None => build_judge(config)?,
    };
    let params = config.model_params();

    let mut level_reports: Vec<LevelReport> = Vec::new();
    let mut response_records: Vec<ResponseRecord> = Vec::new();
    let mut all_prompts: Vec<String> = Vec::new();
    let mut failure: Option<RunnerError> = None;

    'levels: for &level in &levels {
        let mut requests = Vec::with_capacity(prepared.len());
        for segment in &prepared {
            let prompt = build_prompt(
                task,
                level,
                &segment.serialized,
                &config.experiment.template_version,
            )
            .map_err(|e| {
                RunnerError::stage(
                    format!("building {} prompt for piece {}", level.slug(), segment.piece_id),
                    e,
                )
            })?;
            let hash = prompt_hash(
                &config.experiment.template_version,
                task,
                level,
                &segment.serialized,
            );
            match &handle {
                JudgeHandle::Oracle(oracle) => {
                    oracle.register_verdict(&hash, oracle_verdict(task, segment));
                }
                JudgeHandle::Random(random) => {
                    random.register_context(&hash, segment.item_count);
                }
                _ => {}
            }
            all_prompts.push(prompt.clone());
            requests.push(JudgeRequest::new(prompt, hash, task, params.clone()));
        }

        let outcomes = judge_batch(&handle, &requests, config.experiment.concurrency);
        let mut scorer = LevelScorer::new(task, config.rates.tolerance);
        for ((segment, request), outcome) in prepared.iter().zip(&requests).zip(outcomes) {
            let response = match outcome {
                Ok(response) => response,
                Err(err) => {
                    failure = Some(RunnerError::stage(
                        format!(
                            "judging piece {} segment {} at level {}",
                            segment.piece_id,
                            segment.segment_index,
                            level.slug()
                        ),
                        err,
                    ));
                    break 'levels;
                }
            };
            response_records.push(ResponseRecord {
                level: level.slug(),
                piece: segment.piece_id.clone(),
                segment: segment.segment_index,
                prompt_hash: request.prompt_hash.clone(),
                request_hash: request.request_hash(),
                judge_id: response.judge_id.clone(),
                raw: response.raw.clone(),
                cache_hit: response.cache_hit,
                item_count: segment.item_count,
            });
            let verdict = parse_verdict(&response.raw, task, segment.item_count);
            scorer.score(segment, &verdict, response.cache_hit)?;
        }
        level_reports.push(scorer.finish(level));
    }

    // Persist the archive (complete or partial) before surfacing failures.
    write_jsonl(&out_dir.join("responses.jsonl"), &response_records)?;
    let resolved = config.to_toml_string();
    let config_path = out_dir.join("config.resolved.toml");
    fs::write(&config_path, &resolved).map_err(io_err(&config_path))?;

    let judged_segments: Vec<&Segment> = prepared.iter().map(|p| &p.corrupted).collect();
    let stats_segments: Vec<Segment> = judged_segments.into_iter().cloned().collect();
    let corpus_stats = corpus_stats(&stats_segments, &all_prompts, &ByteLenEstimator);

    // Replay runs report the archived judge's identity, not "replay".
    let judge_id = response_records
        .first()
        .map(|r| r.judge_id.clone())
        .unwrap_or_else(|| handle.as_judge().id().to_string());
    let report = RunReport {
        task,
        judge_id,
        template_version: config.experiment.template_version.clone(),
        config_hash: config.config_hash(),
        seed: config.experiment.seed,
        levels: level_reports,
        corpus_stats,
        remote_calls: handle.remote_calls(),
        generated_unix: now_unix(),
    };
    emit_report(&report, out_dir)?;

    match failure {
        Some(err) => Err(err),
        None => Ok(report),
    }
}

/// Re-scores a finished run from its archived responses and rewrites the
/// report files byte-identically; no judge is consulted. The archived config
/// is used untouched so hashes and labels match the original run.
pub fn regenerate_report(run_dir: &Path) -> Result<RunReport, RunnerError> {
    let config = ExperimentConfig::from_toml_file(&run_dir.join("config.resolved.toml"))?;
    let records: Vec<ResponseRecord> = read_jsonl(&run_dir.join("responses.jsonl"))?;
    let responses = records
        .into_iter()
        .map(|r| (r.request_hash, (r.raw, r.judge_id)))
        .collect();
    run_pipeline(&config, Some(ReplayJudge { responses }), Some(run_dir))
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => String::new(),
    }
}

fn fmt_cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "-".to_string(),
    }
}

/// Writes `results.csv`, `per_piece.csv`, `report.txt`, and `meta.json`.
/// The CSV and table bytes are a pure function of the scored results; only
/// `meta.json` carries volatile fields (timestamps, cache accounting).
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, RunnerError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let beat_task = report.task == Task::Beat;
    let mut csv = String::new();
    if beat_task {
        csv.push_str("level,cpr,edr_p,edr_n,ws,support_tp,support_fp,support_fn,calls,unparseable_rate\n");
    } else {
        csv.push_str("level,precision,recall,f1,support_correct,support_incorrect,calls,unparseable_rate\n");
    }
    for level in &report.levels {
        if beat_task {
            let m = level.metrics.beat.as_ref();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{:.4}\n",
                level.level_slug,
                fmt_opt(m.and_then(|m| m.cpr)),
                fmt_opt(m.and_then(|m| m.edr_p)),
                fmt_opt(m.and_then(|m| m.edr_n)),
                fmt_opt(m.and_then(|m| m.ws)),
                m.map(|m| m.support_tp).unwrap_or(0),
                m.map(|m| m.support_fp).unwrap_or(0),
                m.map(|m| m.support_fn).unwrap_or(0),
                level.calls,
                level.unparseable_rate(),
            ));
        } else {
            let m = level.metrics.classification.as_ref();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{:.4}\n",
                level.level_slug,
                fmt_opt(m.map(|m| m.precision)),
                fmt_opt(m.map(|m| m.recall)),
                fmt_opt(m.map(|m| m.f1)),
                m.map(|m| m.support_correct).unwrap_or(0),
                m.map(|m| m.support_incorrect).unwrap_or(0),
                level.calls,
                level.unparseable_rate(),
            ));
        }
    }
    let csv_path = dir.join("results.csv");
    fs::write(&csv_path, &csv).map_err(io_err(&csv_path))?;
    written.push(csv_path);

    let mut per_piece = String::new();
    if beat_task {
        per_piece.push_str("level,piece,cpr,edr_p,edr_n,ws,support_tp,support_fp,support_fn\n");
    } else {
        per_piece.push_str("level,piece,precision,recall,f1,support_correct,support_incorrect\n");
    }
    for level in &report.levels {
        for piece in &level.per_piece {
            if beat_task {
                let m = piece.metrics.beat.as_ref();
                per_piece.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    level.level_slug,
                    piece.piece_id,
                    fmt_opt(m.and_then(|m| m.cpr)),
                    fmt_opt(m.and_then(|m| m.edr_p)),
                    fmt_opt(m.and_then(|m| m.edr_n)),
                    fmt_opt(m.and_then(|m| m.ws)),
                    m.map(|m| m.support_tp).unwrap_or(0),
                    m.map(|m| m.support_fp).unwrap_or(0),
                    m.map(|m| m.support_fn).unwrap_or(0),
                ));
            } else {
                let m = piece.metrics.classification.as_ref();
                per_piece.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    level.level_slug,
                    piece.piece_id,
                    fmt_opt(m.map(|m| m.precision)),
                    fmt_opt(m.map(|m| m.recall)),
                    fmt_opt(m.map(|m| m.f1)),
                    m.map(|m| m.support_correct).unwrap_or(0),
                    m.map(|m| m.support_incorrect).unwrap_or(0),
                ));
            }
        }
    }
    let per_piece_path = dir.join("per_piece.csv");
    fs::write(&per_piece_path, &per_piece).map_err(io_err(&per_piece_path))?;
    written.push(per_piece_path);

    let mut table = String::new();
    table.push_str(&format!(
        "task: {} | judge: {} | template: {} | seed: {} | config: {}\n",
        report.task, report.judge_id, report.template_version, report.seed, report.config_hash
    ));
    table.push_str(&format!(
        "notes: {} | labels: {} | mean tokens/call: {:.2}\n\n",
        report.corpus_stats.note_count,
        report.corpus_stats.label_count,
        report.corpus_stats.mean_tokens_per_call
    ));
    if beat_task {
        table.push_str(&format!(
            "{:<24} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
            "concept augmentation", "CPR", "EDR_P", "EDR_N", "WS", "unparse"
        ));
        for level in &report.levels {
            let m = level.metrics.beat.as_ref();
            table.push_str(&format!(
                "{:<24} {:>8} {:>8} {:>8} {:>8} {:>7.1}%\n",
                level.level_display,
                fmt_cell(m.and_then(|m| m.cpr)),
                fmt_cell(m.and_then(|m| m.edr_p)),
                fmt_cell(m.and_then(|m| m.edr_n)),
                fmt_cell(m.and_then(|m| m.ws)),
                level.unparseable_rate() * 100.0,
            ));
        }
    } else {
        table.push_str(&format!(
            "{:<24} {:>8} {:>8} {:>8} {:>8}\n",
            "concept augmentation", "p", "r", "f", "unparse"
        ));
        for level in &report.levels {
            let m = level.metrics.classification.as_ref();
            table.push_str(&format!(
                "{:<24} {:>8} {:>8} {:>8} {:>7.1}%\n",
                level.level_display,
                fmt_cell(m.map(|m| m.precision)),
                fmt_cell(m.map(|m| m.recall)),
                fmt_cell(m.map(|m| m.f1)),
                level.unparseable_rate() * 100.0,
            ));
        }
    }
    let table_path = dir.join("report.txt");
    fs::write(&table_path, &table).map_err(io_err(&table_path))?;
    written.push(table_path);

    let meta_path = dir.join("meta.json");
    let meta = serde_json::to_string_pretty(report)
        .map_err(|e| RunnerError::stage("serializing meta.json", e))?;
    fs::write(&meta_path, meta).map_err(io_err(&meta_path))?;
    written.push(meta_path);

    Ok(written)
}

/// Builds segments and prompts without judging and returns corpus statistics
/// (exact note/label counts, mean estimated tokens per call).
pub fn corpus_statistics(config: &ExperimentConfig) -> Result<CorpusStats, RunnerError> {
    config.validate()?;
    let out_dir = &config.experiment.output_dir;
    let corpus_dir = match (&config.corpus.path, &config.corpus.synthetic) {
        (Some(path), _) => path.clone(),
        (None, Some(spec)) => {
            let dir = out_dir.join("corpus");
            generate_synthetic_corpus(spec, config.experiment.seed, &dir)?;
            dir
        }
        (None, None) => unreachable!("validate() requires a corpus source"),
    };
    let pieces = load_corpus(&corpus_dir)?;
    let prepared = prepare_segments(config, &pieces)?;
    let levels = config.resolved_levels()?;
    let task = config.experiment.task;
    let mut prompts = Vec::new();
    for &level in &levels {
        for segment in &prepared {
            let prompt = build_prompt(
                task,
                level,
                &segment.serialized,
                &config.experiment.template_version,
            )
            .map_err(|e| RunnerError::stage("building prompt", e))?;
            prompts.push(prompt);
        }
    }
    let segments: Vec<Segment> = prepared.into_iter().map(|p| p.corrupted).collect();
    Ok(corpus_stats(&segments, &prompts, &ByteLenEstimator))
}
