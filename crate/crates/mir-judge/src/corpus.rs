//! Corpus directory IO, the synthetic corpus generator, and thin adapters
//! for external datasets.
//!
//! Corpus layout: one subdirectory per piece containing `performance.mid`,
//! `beats.txt` (one time in seconds per line), `chords.txt` (tab-separated
//! onset, offset, chord symbol), and `key.txt` (a single key string). The
//! annotation files are optional per piece; tasks that need them fail loudly
//! at segmentation time.

use crate::midi::{load_midi, write_smf0, MidiError};
use crate::notation::{
    parse_chord, parse_key, render_chord, render_key, ChordLabel, ChordParseError, ChordSpan,
    Degree, KeyLabel, KeyParseError, Mode, PitchClass, Quality,
};
use crate::symbolic::{BeatGrid, Note, Piece};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("IO failure at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Midi { path: PathBuf, source: MidiError },
    #[error("{path} line {line}: {message}")]
    Annotation { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Chord { path: PathBuf, source: ChordParseError },
    #[error("{path}: {source}")]
    Key { path: PathBuf, source: KeyParseError },
    #[error("corpus directory {0} contains no pieces")]
    Empty(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

/// Loads every piece subdirectory, sorted by name for determinism.
pub fn load_corpus(dir: &Path) -> Result<Vec<Piece>, CorpusError> {
    let mut piece_dirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|path| path.is_dir())
        .collect();
    piece_dirs.sort();
    let mut pieces = Vec::with_capacity(piece_dirs.len());
    for piece_dir in piece_dirs {
        pieces.push(load_piece(&piece_dir)?);
    }
    if pieces.is_empty() {
        return Err(CorpusError::Empty(dir.to_path_buf()));
    }
    Ok(pieces)
}

/// Loads one piece directory.
pub fn load_piece(dir: &Path) -> Result<Piece, CorpusError> {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "piece".to_string());

    let midi_path = dir.join("performance.mid");
    let bytes = fs::read(&midi_path).map_err(io_err(&midi_path))?;
    let notes = load_midi(&bytes, id.clone())
        .map_err(|source| CorpusError::Midi { path: midi_path.clone(), source })?;

    let beats = read_beats(&dir.join("beats.txt"))?;
    let chords = read_chords(&dir.join("chords.txt"))?;
    let key = read_key(&dir.join("key.txt"))?;

    Ok(Piece { id, notes, beats, chords: chords.unwrap_or_default(), key })
}

fn read_beats(path: &Path) -> Result<Option<BeatGrid>, CorpusError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut beats = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let time: f64 = line.parse().map_err(|_| CorpusError::Annotation {
            path: path.to_path_buf(),
            line: line_no + 1,
            message: format!("not a beat time: {line:?}"),
        })?;
        beats.push(time);
    }
    let grid = BeatGrid::new(beats).map_err(|e| CorpusError::Annotation {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok(Some(grid))
}

fn read_chords(path: &Path) -> Result<Option<Vec<ChordSpan>>, CorpusError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut spans = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let bad_line = |message: String| CorpusError::Annotation {
            path: path.to_path_buf(),
            line: line_no + 1,
            message,
        };
        let onset: f64 = parts
            .next()
            .and_then(|p| p.trim().parse().ok())
            .ok_or_else(|| bad_line("missing or bad onset".to_string()))?;
        let offset: f64 = parts
            .next()
            .and_then(|p| p.trim().parse().ok())
            .ok_or_else(|| bad_line("missing or bad offset".to_string()))?;
        let symbol = parts
            .next()
            .map(str::trim)
            .ok_or_else(|| bad_line("missing chord symbol".to_string()))?;
        let label = parse_chord(symbol)
            .map_err(|source| CorpusError::Chord { path: path.to_path_buf(), source })?;
        let span = ChordSpan::new(label, onset, offset)
            .ok_or_else(|| bad_line(format!("bad span [{onset}, {offset}]")))?;
        spans.push(span);
    }
    Ok(Some(spans))
}

fn read_key(path: &Path) -> Result<Option<KeyLabel>, CorpusError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let line = text.trim();
    if line.is_empty() {
        return Ok(None);
    }
    let key = parse_key(line).map_err(|source| CorpusError::Key { path: path.to_path_buf(), source })?;
    Ok(Some(key))
}

/// Parameters for the synthetic corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub pieces: usize,
    /// Tempo range in BPM; each piece draws one steady tempo.
    pub tempo_min: f64,
    pub tempo_max: f64,
    /// Piece duration in seconds.
    pub duration: f64,
}

impl Default for SyntheticSpec {
    fn default() -> SyntheticSpec {
        SyntheticSpec { pieces: 4, tempo_min: 80.0, tempo_max: 140.0, duration: 60.0 }
    }
}

const BEAT_JITTER: f64 = 0.019;
const BEATS_PER_MEASURE: usize = 4;

/// In-key chord palette: (scale degree offset in semitones, quality).
fn chord_palette(mode: Mode) -> &'static [(u8, Quality)] {
    match mode {
        Mode::Major => &[
            (0, Quality::Maj),
            (0, Quality::Maj7),
            (2, Quality::Min),
            (2, Quality::Min7),
            (4, Quality::Min),
            (5, Quality::Maj),
            (5, Quality::Maj7),
            (7, Quality::Maj),
            (7, Quality::Dom7),
            (9, Quality::Min),
            (9, Quality::Min7),
        ],
        Mode::Minor => &[
            (0, Quality::Min),
            (0, Quality::Min7),
            (3, Quality::Maj),
            (5, Quality::Min),
            (5, Quality::Min7),
            (7, Quality::Min),
            (7, Quality::Dom7),
            (8, Quality::Maj),
            (8, Quality::Maj7),
            (10, Quality::Maj),
        ],
    }
}

/// One synthesized piece, before it is written to disk.
struct SyntheticPiece {
    notes: Vec<Note>,
    beats: Vec<f64>,
    chords: Vec<(f64, f64, ChordLabel)>,
    key: KeyLabel,
    tempo: f64,
}

fn synthesize_piece(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> SyntheticPiece {
    let tempo = if spec.tempo_max > spec.tempo_min {
        rng.gen_range(spec.tempo_min..spec.tempo_max)
    } else {
        spec.tempo_min
    };
    let ibi = 60.0 / tempo;

    // Steady grid with mild jitter; the first beat is pinned at zero.
    let beat_count = (spec.duration / ibi).floor() as usize;
    let mut beats = Vec::with_capacity(beat_count);
    for i in 0..beat_count {
        let jitter = if i == 0 { 0.0 } else { rng.gen_range(-BEAT_JITTER..BEAT_JITTER) };
        beats.push(i as f64 * ibi + jitter);
    }

    let keys = crate::notation::all_keys();
    let key = keys[rng.gen_range(0..keys.len())];
    let palette = chord_palette(key.mode);

    // One chord per measure, realized as a block plus an arpeggio line.
    let mut chords = Vec::new();
    let mut notes: Vec<Note> = Vec::new();
    let measure_count = beat_count / BEATS_PER_MEASURE;
    for m in 0..measure_count {
        let (degree_offset, quality) = palette[rng.gen_range(0..palette.len())];
        let root = PitchClass::new((key.tonic.value() + degree_offset) % 12)
            .expect("offsets stay within one octave");
        let bass = if rng.gen_bool(0.2) {
            let options: Vec<Degree> = quality.bass_degrees().collect();
            Some(options[rng.gen_range(0..options.len())])
        } else {
            None
        };
        let label = ChordLabel::new(root, quality, bass).expect("palette degrees are legal");

        let onset = beats[m * BEATS_PER_MEASURE];
        let offset = if (m + 1) * BEATS_PER_MEASURE < beat_count {
            beats[(m + 1) * BEATS_PER_MEASURE]
        } else {
            spec.duration
        };
        chords.push((onset, offset, label));

        // Block chord on the downbeat.
        let tones = quality.semitones();
        for semitone in &tones {
            let pitch = 48 + ((root.value() + semitone) % 12);
            let velocity = rng.gen_range(56..96);
            notes.push(
                Note::new(onset, (offset - onset) * 0.9, pitch, velocity)
                    .expect("generated notes are valid"),
            );
        }
        // Arpeggiated eighth notes above.
        let step = ibi / 2.0;
        let mut t = onset;
        let mut tone_index = 0usize;
        while t < offset - 1e-9 {
            let semitone = tones[tone_index % tones.len()];
            let pitch = 72 + ((root.value() + semitone) % 12);
            let velocity = rng.gen_range(48..88);
            notes.push(Note::new(t, step * 0.8, pitch, velocity).expect("generated notes are valid"));
            tone_index += 1;
            t += step;
        }
    }

    SyntheticPiece { notes, beats, chords, key, tempo }
}

/// Generates a synthetic corpus in the standard layout. Deterministic per
/// (spec, seed): equal inputs produce byte-identical directories.
pub fn generate_synthetic_corpus(
    spec: &SyntheticSpec,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CorpusError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    for index in 0..spec.pieces {
        let piece_seed = crate::derive_seed(seed, &["synthetic-piece", &index.to_string()]);
        let mut rng = ChaCha8Rng::seed_from_u64(piece_seed);
        let piece = synthesize_piece(spec, &mut rng);

        let dir = out_dir.join(format!("piece-{index:03}"));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;

        let midi = write_smf0(&piece.notes, piece.tempo, 480);
        let midi_path = dir.join("performance.mid");
        fs::write(&midi_path, midi).map_err(io_err(&midi_path))?;

        let beats_path = dir.join("beats.txt");
        let beats_text: String =
            piece.beats.iter().map(|t| format!("{t:.6}\n")).collect();
        fs::write(&beats_path, beats_text).map_err(io_err(&beats_path))?;

        let chords_path = dir.join("chords.txt");
        let chords_text: String = piece
            .chords
            .iter()
            .map(|(onset, offset, label)| {
                format!("{onset:.6}\t{offset:.6}\t{}\n", render_chord(label))
            })
            .collect();
        fs::write(&chords_path, chords_text).map_err(io_err(&chords_path))?;

        let key_path = dir.join("key.txt");
        fs::write(&key_path, format!("{}\n", render_key(&piece.key))).map_err(io_err(&key_path))?;
    }
    Ok(())
}

/// Converts a POP909-style song directory tree into the corpus layout.
///
/// Expects per-song subdirectories holding `<id>.mid`, `chord_midi.txt`
/// (tab-separated onset/offset/symbol), `beat_midi.txt` (beat time first on
/// each line), and `key_audio.txt` (first line: onset, offset, key). Songs
/// with chord or key symbols outside the supported grammar are rejected
/// loudly rather than coerced.
pub fn adapt_pop909(src: &Path, dst: &Path) -> Result<usize, CorpusError> {
    let mut song_dirs: Vec<PathBuf> = fs::read_dir(src)
        .map_err(io_err(src))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|path| path.is_dir())
        .collect();
    song_dirs.sort();
    let mut converted = 0;
    for song_dir in song_dirs {
        let id = song_dir.file_name().unwrap_or_default().to_string_lossy().to_string();
        let midi_src = song_dir.join(format!("{id}.mid"));
        if !midi_src.exists() {
            continue;
        }
        let out = dst.join(&id);
        fs::create_dir_all(&out).map_err(io_err(&out))?;
        fs::copy(&midi_src, out.join("performance.mid")).map_err(io_err(&midi_src))?;

        let chord_src = song_dir.join("chord_midi.txt");
        if chord_src.exists() {
            let text = fs::read_to_string(&chord_src).map_err(io_err(&chord_src))?;
            let mut out_text = String::new();
            for line in text.lines() {
                let mut parts = line.split_whitespace();
                let (Some(onset), Some(offset), Some(symbol)) =
                    (parts.next(), parts.next(), parts.next())
                else {
                    continue;
                };
                if symbol == "N" {
                    continue; // no-chord spans are not judged
                }
                let label = parse_chord(symbol)
                    .map_err(|source| CorpusError::Chord { path: chord_src.clone(), source })?;
                out_text.push_str(&format!("{onset}\t{offset}\t{}\n", render_chord(&label)));
            }
            fs::write(out.join("chords.txt"), out_text).map_err(io_err(&out))?;
        }

        let beat_src = song_dir.join("beat_midi.txt");
        if beat_src.exists() {
            let text = fs::read_to_string(&beat_src).map_err(io_err(&beat_src))?;
            let mut out_text = String::new();
            for line in text.lines() {
                if let Some(first) = line.split_whitespace().next() {
                    out_text.push_str(first);
                    out_text.push('\n');
                }
            }
            fs::write(out.join("beats.txt"), out_text).map_err(io_err(&out))?;
        }

        let key_src = song_dir.join("key_audio.txt");
        if key_src.exists() {
            let text = fs::read_to_string(&key_src).map_err(io_err(&key_src))?;
            if let Some(line) = text.lines().next() {
                if let Some(symbol) = line.split_whitespace().last() {
                    let key = parse_key(symbol)
                        .map_err(|source| CorpusError::Key { path: key_src.clone(), source })?;
                    fs::write(out.join("key.txt"), format!("{}\n", render_key(&key)))
                        .map_err(io_err(&out))?;
                }
            }
        }
        converted += 1;
    }
    Ok(converted)
}

/// Converts a MAPS-style directory (piece MIDI files plus beat annotation
/// text files named `<piece>_beats.txt`, one beat time per line) into the
/// corpus layout.
pub fn adapt_maps(src: &Path, dst: &Path) -> Result<usize, CorpusError> {
    let mut midi_files: Vec<PathBuf> = fs::read_dir(src)
        .map_err(io_err(src))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|path| path.extension().is_some_and(|e| e == "mid"))
        .collect();
    midi_files.sort();
    let mut converted = 0;
    for midi_src in midi_files {
        let stem = midi_src.file_stem().unwrap_or_default().to_string_lossy().to_string();
        let out = dst.join(&stem);
        fs::create_dir_all(&out).map_err(io_err(&out))?;
        fs::copy(&midi_src, out.join("performance.mid")).map_err(io_err(&midi_src))?;
        let beats_src = src.join(format!("{stem}_beats.txt"));
        if beats_src.exists() {
            let text = fs::read_to_string(&beats_src).map_err(io_err(&beats_src))?;
            let mut out_text = String::new();
            for line in text.lines() {
                if let Some(first) = line.split_whitespace().next() {
                    out_text.push_str(first);
                    out_text.push('\n');
                }
            }
            fs::write(out.join("beats.txt"), out_text).map_err(io_err(&out))?;
        }
        converted += 1;
    }
    Ok(converted)
}
