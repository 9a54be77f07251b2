//! Convert external dataset layouts into the corpus layout with the thin
//! adapters. Shown here on a miniature mock tree; point `--pop909` /
//! `--maps` at real dataset roots to convert them.
//!
//! ```bash
//! cargo run --example dataset_adapters
//! cargo run --example dataset_adapters -- --pop909 /data/POP909 --out corpus/
//! ```

use mir_judge::corpus::{adapt_maps, adapt_pop909, load_corpus};
use std::fs;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let flag = |name: &str| -> Option<String> {
        args.iter().position(|a| a == name).and_then(|i| args.get(i + 1)).cloned()
    };

    if let (Some(src), Some(out)) = (flag("--pop909"), flag("--out")) {
        let n = adapt_pop909(src.as_ref(), out.as_ref())?;
        println!("converted {n} POP909 songs into {out}");
        return Ok(());
    }
    if let (Some(src), Some(out)) = (flag("--maps"), flag("--out")) {
        let n = adapt_maps(src.as_ref(), out.as_ref())?;
        println!("converted {n} MAPS pieces into {out}");
        return Ok(());
    }

    // Demo on a mock POP909-style tree.
    let src = std::env::temp_dir().join("mir-judge-example-pop909-src");
    let dst = std::env::temp_dir().join("mir-judge-example-pop909-out");
    let _ = fs::remove_dir_all(&src);
    let _ = fs::remove_dir_all(&dst);
    let song = src.join("001");
    fs::create_dir_all(&song)?;

    // A one-chord mock song; real trees carry full annotations.
    let note = mir_judge::symbolic::Note::new(0.0, 2.0, 60, 80)?;
    let spec = mir_judge::corpus::SyntheticSpec { pieces: 1, tempo_min: 120.0, tempo_max: 120.0, duration: 8.0 };
    // Reuse the generator for a valid performance.mid, then mimic the POP909 files.
    mir_judge::corpus::generate_synthetic_corpus(&spec, 9, &src.join("tmp"))?;
    fs::copy(src.join("tmp/piece-000/performance.mid"), song.join("001.mid"))?;
    fs::remove_dir_all(src.join("tmp"))?;
    let _ = note;
    fs::write(song.join("chord_midi.txt"), "0.0\t2.0\tC:maj\n2.0\t4.0\tN\n4.0\t8.0\tA:min\n")?;
    fs::write(song.join("beat_midi.txt"), "0.0\t1.0\n0.5\t0.0\n1.0\t0.0\n1.5\t0.0\n")?;
    fs::write(song.join("key_audio.txt"), "0.0\t8.0\tC:maj\n")?;

    let converted = adapt_pop909(&src, &dst)?;
    println!("converted {converted} mock song(s)");
    let pieces = load_corpus(&dst)?;
    for piece in pieces {
        println!(
            "{}: {} notes, {} beats, {} chords (no-chord spans dropped), key {:?}",
            piece.id,
            piece.notes.len(),
            piece.beats.map(|b| b.len()).unwrap_or(0),
            piece.chords.len(),
            piece.key.map(|k| k.to_string())
        );
    }
    Ok(())
}
