//! Reproduce the random-baseline rows: a judge that guesses 50/50 per label
//! (or selects half the beat indices) scored against seeded corruption.
//!
//! ```bash
//! cargo run --release --example random_baseline
//! ```

use mir_judge::corrupt::{corrupt_beats, corrupt_chords, corrupt_keys, ChordRates, RateConfig};
use mir_judge::judge::{random_beat_verdict, random_label_verdict};
use mir_judge::metrics::{classify_beats, weighted_prf, BeatDetectionCounts};
use mir_judge::notation::{parse_chord, parse_key, ChordLabel};
use mir_judge::symbolic::BeatGrid;
use mir_judge::verdict::ranges_to_intervals;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Beat: pooled over ten 1000-beat grids corrupted at 9/12/9.
    let mut counts = BeatDetectionCounts::new();
    for piece in 0..10u64 {
        let grid = BeatGrid::new((0..1000).map(|i| i as f64 * 0.5).collect())?;
        let (corrupted, log) = corrupt_beats(&grid, &RateConfig::default(), 100 + piece)?;
        let sets = classify_beats(&corrupted, &grid, 0.07, Some(&log));
        let k = (0.5 * corrupted.len() as f64).round() as usize;
        let ranges = random_beat_verdict(corrupted.len(), k, 900 + piece);
        let intervals = ranges_to_intervals(&ranges, &corrupted)?;
        counts.accumulate(&sets, &intervals);
    }
    let beat = counts.metrics()?;
    println!(
        "beat random baseline: CPR = {:.4}  EDR_P = {:.4}  EDR_N = {:.4}  WS = {:.4}",
        beat.cpr.unwrap_or(f64::NAN),
        beat.edr_p.unwrap_or(f64::NAN),
        beat.edr_n.unwrap_or(f64::NAN),
        beat.ws.unwrap_or(f64::NAN),
    );
    println!("  (reference random row: WS 0.4843 +/- 0.0274)\n");

    // Chord: 50/50 guessing against a 30% label-level error prior.
    let rate = 1.0 - 0.7f64.powf(1.0 / 3.0);
    let symbols = ["C:maj", "A:min/b3", "G:7/5", "D:sus4", "F#:dim7", "E:min7"];
    let labels: Vec<ChordLabel> =
        (0..100_000).map(|i| parse_chord(symbols[i % symbols.len()]).unwrap()).collect();
    let rates = ChordRates { root: rate, quality: rate, inversion: rate };
    let (_, log) = corrupt_chords(&labels, &rates, 5)?;
    let truth = log.truth_flags(labels.len());
    let predicted = random_label_verdict(labels.len(), 6);
    let chord = weighted_prf(&predicted, &truth)?;
    println!(
        "chord random baseline: p = {:.4}  r = {:.4}  f = {:.4}",
        chord.precision, chord.recall, chord.f1
    );
    println!("  (reference random row: 0.5812 / 0.5003 / 0.5213)\n");

    // Key: 50/50 guessing against 30% corrupted keys.
    let keys = vec![parse_key("D:min")?; 100_000];
    let (_, key_log) = corrupt_keys(&keys, 0.30, 7);
    let truth = key_log.truth_flags(keys.len());
    let predicted = random_label_verdict(keys.len(), 8);
    let key = weighted_prf(&predicted, &truth)?;
    println!(
        "key random baseline:   p = {:.4}  r = {:.4}  f = {:.4}",
        key.precision, key.recall, key.f1
    );
    println!("  (reference random row: 0.5779 / 0.4977 / 0.5186)");
    Ok(())
}
