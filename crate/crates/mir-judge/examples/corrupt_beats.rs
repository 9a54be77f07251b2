//! Inject seeded beat errors into a grid, inspect the audit log, and measure
//! the damage with the conventional F-measure.
//!
//! ```bash
//! cargo run --example corrupt_beats
//! ```

use mir_judge::corrupt::{beat_f_measure, corrupt_beats, replay_beats, BeatOp, RateConfig};
use mir_judge::symbolic::BeatGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A steady 120 BPM grid, 1000 beats.
    let grid = BeatGrid::new((0..1000).map(|i| i as f64 * 0.5).collect())?;
    let config = RateConfig::default(); // insert 9%, delete 12%, offset 9%

    let (corrupted, log) = corrupt_beats(&grid, &config, 7)?;
    let mut inserts = 0;
    let mut deletes = 0;
    let mut offsets = 0;
    for op in log.beat_ops() {
        match op {
            BeatOp::Insert { .. } => inserts += 1,
            BeatOp::Delete { .. } => deletes += 1,
            BeatOp::Offset { .. } => offsets += 1,
        }
    }
    println!("original beats: {}", grid.len());
    println!("corrupted beats: {} ({inserts} inserted, {deletes} deleted, {offsets} offset)", corrupted.len());

    for op in log.beat_ops().iter().take(5) {
        println!("  {op:?}");
    }
    println!("  ... {} ops total", log.beat_ops().len());

    // The log replays to the corrupted grid exactly.
    let replayed = replay_beats(&grid, &log)?;
    println!("log replay reproduces corrupted grid: {}", replayed == corrupted);

    let f = beat_f_measure(&corrupted, &grid, config.tolerance);
    println!("beat F-measure vs ground truth at 70 ms: {f:.4}");
    Ok(())
}
