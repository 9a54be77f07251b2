//! Full experiment with the ground-truth oracle judge: every defined metric
//! lands at exactly 1.0, which exercises the prompt/parse/score path end to
//! end.
//!
//! ```bash
//! cargo run --example oracle_run
//! ```

use mir_judge::runner::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("mir-judge-example-oracle");
    let toml_text = format!(
        r#"
[experiment]
task = "chord"
seed = 42
levels = ["basic", "introduce", "mask_attribute", "mask_task", "mask_domain"]
output_dir = "{}"

[corpus.synthetic]
pieces = 3
tempo_min = 95.0
tempo_max = 130.0
duration = 60.0

[judge]
kind = "oracle"

[segments]
policy = "fixed_label_count"
label_count = 8
"#,
        out.display()
    );
    let config = ExperimentConfig::from_toml_str(&toml_text)?;
    let report = run_experiment(&config)?;

    println!("task: {} | judge: {}", report.task, report.judge_id);
    for level in &report.levels {
        let prf = level.metrics.classification.as_ref().expect("chord task");
        println!(
            "{:<24} p = {:.4}  r = {:.4}  f = {:.4}  ({} calls, {} unparseable)",
            level.level_display, prf.precision, prf.recall, prf.f1, level.calls, level.unparseable
        );
    }
    println!("\nartifacts in {}", out.display());
    println!("{}", std::fs::read_to_string(out.join("report.txt"))?);
    Ok(())
}
