//! Walk through beat error-detection scoring: classify corrupted beats into
//! TP/FP/FN, expand a verdict into time intervals, and compute
//! CPR / EDR_P / EDR_N / WS.
//!
//! ```bash
//! cargo run --example score_beats
//! ```

use mir_judge::corrupt::{corrupt_beats, BeatRates, RateConfig};
use mir_judge::metrics::{beat_metrics, classify_beats};
use mir_judge::symbolic::BeatGrid;
use mir_judge::verdict::{parse_verdict, ranges_to_intervals, VerdictKind};
use mir_judge::Task;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = BeatGrid::new((0..50).map(|i| i as f64 * 0.5).collect())?;
    let config = RateConfig {
        beat: BeatRates { insert: 0.06, delete: 0.08, offset: 0.06 },
        ..RateConfig::default()
    };
    let (corrupted, log) = corrupt_beats(&grid, &config, 3)?;

    let sets = classify_beats(&corrupted, &grid, config.tolerance, Some(&log));
    println!(
        "classification: {} correct (TP), {} additional (FP), {} missing (FN)",
        sets.tp.len(),
        sets.fp.len(),
        sets.fn_.len()
    );

    // A judge's verdict: flag the first third of the corrupted list.
    let raw = format!(r#"{{"error_ranges": [[0, {}]]}}"#, corrupted.len() / 3);
    let verdict = parse_verdict(&raw, Task::Beat, corrupted.len());
    let VerdictKind::Beat(ranges) = &verdict.kind else { unreachable!() };
    let intervals = ranges_to_intervals(ranges, &corrupted)?;
    println!(
        "verdict {raw} covers {:.1} s of the timeline",
        intervals.intervals().iter().map(|(lo, hi)| hi - lo).sum::<f64>()
    );

    let m = beat_metrics(&sets, &intervals)?;
    println!("\nCPR   = {:?}  (fraction of correct beats passed through)", m.cpr);
    println!("EDR_P = {:?}  (additional beats caught)", m.edr_p);
    println!("EDR_N = {:?}  (missing beats caught)", m.edr_n);
    println!("WS    = {:?}  (support-weighted average)", m.ws);
    println!(
        "supports: TP {}  FP {}  FN {}",
        m.support_tp, m.support_fp, m.support_fn
    );
    Ok(())
}
