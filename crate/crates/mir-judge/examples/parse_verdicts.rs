//! Robust verdict parsing: judges wrap JSON in prose, truncate it, or return
//! garbage, and parsing still always yields a usable verdict with a status.
//!
//! ```bash
//! cargo run --example parse_verdicts
//! ```

use mir_judge::verdict::{parse_verdict, ranges_to_intervals, VerdictKind};
use mir_judge::symbolic::BeatGrid;
use mir_judge::Task;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples: [(&str, Task, usize); 7] = [
        (r#"{"error_ranges": [[3,5],[10,10]]}"#, Task::Beat, 20),
        ("Sure! After careful analysis... {\"incorrect_chords\": [2, 7]} Hope that helps.", Task::Chord, 32),
        ("```json\n{\"judgment\": \"incorrect\"}\n```", Task::Key, 1),
        (r#"{"incorrect_chords": [1, 99, 2.0]}"#, Task::Chord, 10),
        (r#"{"error_ranges": [[5, 3]]}"#, Task::Beat, 20),
        ("The key seems off.", Task::Key, 1),
        (r#"{"error_ranges": [[3, 5"#, Task::Beat, 20),
    ];

    for (raw, task, count) in samples {
        let verdict = parse_verdict(raw, task, count);
        println!("{task:>5} | {:<11} | {:<60} -> {}", format!("{:?}", verdict.status), truncate(raw), verdict.to_json());
    }

    // Beat index ranges expand to time intervals with half-gap margins.
    let grid = BeatGrid::new(vec![1.0, 2.0, 3.0, 4.0])?;
    let verdict = parse_verdict(r#"{"error_ranges": [[1, 1]]}"#, Task::Beat, grid.len());
    if let VerdictKind::Beat(ranges) = &verdict.kind {
        let intervals = ranges_to_intervals(ranges, &grid)?;
        println!("\nrange (1,1) over grid [1,2,3,4] -> intervals {:?}", intervals.intervals());
    }
    Ok(())
}

fn truncate(s: &str) -> String {
    let cleaned = s.replace('\n', " ");
    if cleaned.len() > 58 {
        format!("{}...", &cleaned[..55])
    } else {
        cleaned
    }
}
