//! Generate a small synthetic corpus and inspect what landed on disk.
//!
//! ```bash
//! cargo run --example gen_corpus
//! ```

use mir_judge::corpus::{generate_synthetic_corpus, load_corpus, SyntheticSpec};
use mir_judge::notation::render_chord;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("mir-judge-example-corpus");
    let spec = SyntheticSpec { pieces: 3, tempo_min: 90.0, tempo_max: 140.0, duration: 45.0 };
    generate_synthetic_corpus(&spec, 42, &dir)?;
    println!("wrote {} pieces to {}", spec.pieces, dir.display());

    let pieces = load_corpus(&dir)?;
    for piece in &pieces {
        let beats = piece.beats.as_ref().map(|b| b.len()).unwrap_or(0);
        println!(
            "\n{}: {} notes, {} beats, {} chords, key {}",
            piece.id,
            piece.notes.len(),
            beats,
            piece.chords.len(),
            piece.key.map(|k| k.to_string()).unwrap_or_default()
        );
        for span in piece.chords.iter().take(4) {
            println!(
                "  [{:6.2} - {:6.2}] {}",
                span.onset,
                span.offset,
                render_chord(&span.label)
            );
        }
        if piece.chords.len() > 4 {
            println!("  ... {} more", piece.chords.len() - 4);
        }
    }
    Ok(())
}
