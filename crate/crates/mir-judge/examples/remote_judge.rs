//! Query a remote chat-completion judge with disk caching and retries.
//!
//! Point it at any chat-completions-compatible endpoint:
//!
//! ```bash
//! export MIR_JUDGE_API_KEY=sk-...
//! cargo run --example remote_judge -- \
//!     --endpoint https://api.openai.com/v1/chat/completions --model gpt-4o-mini
//! ```
//!
//! Without credentials the example explains what it would do and exits.

use mir_judge::judge::{
    DiskCache, Judge, JudgeRequest, ModelParams, RemoteConfig, RemoteJudge, RetryPolicy,
};
use mir_judge::notation::parse_key;
use mir_judge::prompt::{build_prompt, prompt_hash, AugmentationLevel, TEMPLATE_VERSION};
use mir_judge::symbolic::{serialize_segment, Annotation, Note, NoteSequence, Provenance, Segment};
use mir_judge::verdict::parse_verdict;
use mir_judge::Task;
use std::time::Duration;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let flag = |name: &str| -> Option<String> {
        args.iter().position(|a| a == name).and_then(|i| args.get(i + 1)).cloned()
    };
    let endpoint = flag("--endpoint")
        .unwrap_or_else(|| "https://api.openai.com/v1/chat/completions".to_string());
    let model = flag("--model").unwrap_or_else(|| "gpt-3.5-turbo".to_string());
    let api_key_env = flag("--api-key-env").unwrap_or_else(|| "MIR_JUDGE_API_KEY".to_string());

    if std::env::var(&api_key_env).is_err() {
        eprintln!("No API key in ${api_key_env}; nothing to call.");
        eprintln!("This example would send one key-judgment prompt to {endpoint}");
        eprintln!("with model {model}, cache the raw response on disk, and parse the verdict.");
        return Ok(());
    }

    // One small key segment to judge.
    let notes = vec![
        Note::new(0.0, 0.5, 57, 80)?,
        Note::new(0.5, 0.5, 60, 78)?,
        Note::new(1.0, 0.5, 64, 82)?,
        Note::new(1.5, 1.0, 69, 84)?,
    ];
    let segment = Segment {
        notes: NoteSequence::new(notes, "demo"),
        annotation: Annotation::Key(parse_key("A:min")?),
        provenance: Provenance { source_id: "demo".into(), segment_index: 0, start: 0.0, end: 2.5 },
    };
    let serialized = serialize_segment(&segment, Task::Key)?;
    let prompt = build_prompt(Task::Key, AugmentationLevel::Basic, &serialized, TEMPLATE_VERSION)?;
    let hash = prompt_hash(TEMPLATE_VERSION, Task::Key, AugmentationLevel::Basic, &serialized);

    let cache_dir = std::env::temp_dir().join("mir-judge-example-cache");
    let judge = RemoteJudge::new(RemoteConfig {
        endpoint,
        api_key_env,
        timeout: Duration::from_secs(60),
        retry: RetryPolicy { attempts: 5, initial_backoff: Duration::from_secs(1) },
    })
    .with_cache(DiskCache::new(&cache_dir));

    let request = JudgeRequest::new(
        prompt,
        hash,
        Task::Key,
        ModelParams { model, temperature: 0.0, max_tokens: Some(300) },
    );
    let response = judge.judge(&request)?;
    println!("judge: {} (cache hit: {})", response.judge_id, response.cache_hit);
    println!("raw response:\n{}\n", response.raw);
    let verdict = parse_verdict(&response.raw, Task::Key, 1);
    println!("parsed verdict: {} ({:?})", verdict.to_json(), verdict.status);
    println!("responses cached under {}", cache_dir.display());
    Ok(())
}
