//! Chord and key label corruption with calibration checks.
//!
//! ```bash
//! cargo run --example corrupt_labels
//! ```

use mir_judge::corrupt::{corrupt_chords, corrupt_keys, ChordRates};
use mir_judge::notation::{parse_chord, parse_key, ChordLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Chords: each attribute (root, quality, inversion) corrupted
    // independently at 10%; expected label accuracy 0.9^3 = 0.729.
    let symbols = ["C:maj", "A:min/b3", "G:7/5", "D:sus4", "F#:dim7", "E:min7"];
    let labels: Vec<ChordLabel> =
        (0..10_000).map(|i| parse_chord(symbols[i % symbols.len()]).unwrap()).collect();
    let (corrupted, log) = corrupt_chords(&labels, &ChordRates::default(), 1)?;
    let accuracy = corrupted.iter().zip(&labels).filter(|(a, b)| a == b).count() as f64
        / labels.len() as f64;
    println!("chord label accuracy after 10% per-attribute corruption: {accuracy:.4} (expected ~0.729)");
    for op in log.label_ops().iter().take(4) {
        println!("  #{}: {} -> {} (changed: {})", op.index, op.original, op.corrupted, op.attributes_changed.join("+"));
    }

    // Keys: whole-label replacement at 30%, always one of the other 23 keys.
    let keys = vec![parse_key("A:min")?; 10_000];
    let (corrupted_keys, key_log) = corrupt_keys(&keys, 0.30, 2);
    let unchanged = corrupted_keys.iter().zip(&keys).filter(|(a, b)| a == b).count() as f64
        / keys.len() as f64;
    println!("\nkey labels unchanged after 30% corruption: {unchanged:.4} (expected ~0.70)");
    let any_same = key_log.label_ops().iter().any(|op| op.original == op.corrupted);
    println!("any corrupted key equal to its original: {any_same} (always false)");
    for op in key_log.label_ops().iter().take(4) {
        println!("  #{}: {} -> {}", op.index, op.original, op.corrupted);
    }
    Ok(())
}
