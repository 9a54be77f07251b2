//! The whole pipeline in one run: synthetic corpus, corruption, prompts at
//! all five augmentation levels, a random judge, scoring, and the emitted
//! report files.
//!
//! ```bash
//! cargo run --release --example full_experiment
//! ```

use mir_judge::runner::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("mir-judge-example-full");
    let toml_text = format!(
        r#"
[experiment]
task = "beat"
seed = 2024
levels = ["basic", "introduce", "mask_attribute", "mask_task", "mask_domain"]
output_dir = "{}"

[corpus.synthetic]
pieces = 6
tempo_min = 85.0
tempo_max = 140.0
duration = 90.0

[rates.beat]
insert = 0.09
delete = 0.12
offset = 0.09

[judge]
kind = "random"
beat_fraction = 0.5
"#,
        out.display()
    );
    let config = ExperimentConfig::from_toml_str(&toml_text)?;
    let report = run_experiment(&config)?;

    println!("{}", std::fs::read_to_string(out.join("report.txt"))?);
    println!("archived artifacts:");
    for file in ["config.resolved.toml", "corruption_logs.jsonl", "responses.jsonl", "results.csv", "per_piece.csv", "meta.json"] {
        println!("  {}", out.join(file).display());
    }
    println!(
        "\ncorpus: {} notes, {} beat labels, mean {:.0} estimated tokens per call",
        report.corpus_stats.note_count,
        report.corpus_stats.label_count,
        report.corpus_stats.mean_tokens_per_call
    );
    Ok(())
}
