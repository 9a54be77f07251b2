//! Chord and key symbol grammar.
//!
//! Chord symbols follow the conventional text format `ROOT:QUALITY(/DEGREE)`,
//! e.g. `C:maj/3`, with a closed quality vocabulary so that corruption can
//! sample uniformly from a known domain. Keys are `TONIC:maj` / `TONIC:min`.
//! Parsing accepts sharp and flat spellings; rendering always uses the sharp
//! spelling, so `parse` then `render` is the identity exactly on canonical
//! strings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChordParseError {
    #[error("unknown chord root {0:?}")]
    UnknownRoot(String),
    #[error("unknown chord quality {0:?}")]
    UnknownQuality(String),
    #[error("bass degree {degree:?} is not part of quality {quality:?}")]
    IllegalBassDegree { quality: String, degree: String },
    #[error("malformed chord symbol {0:?}")]
    Syntax(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KeyParseError {
    #[error("unknown key tonic {0:?}")]
    UnknownTonic(String),
    #[error("malformed key string {0:?}")]
    Syntax(String),
}

/// A pitch class 0..=11 with a single canonical (sharp-preferring) spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PitchClass(u8);

const PITCH_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

impl PitchClass {
    pub fn new(value: u8) -> Option<PitchClass> {
        (value < 12).then_some(PitchClass(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = PitchClass> {
        (0..12).map(PitchClass)
    }

    /// Canonical sharp-preferring name, e.g. `A#` for pitch class 10.
    pub fn name(self) -> &'static str {
        PITCH_NAMES[self.0 as usize]
    }

    /// Accepts a letter `A`-`G` with an optional single `#` or `b`.
    pub fn parse(text: &str) -> Option<PitchClass> {
        let mut chars = text.chars();
        let letter = chars.next()?;
        let natural: i8 = match letter.to_ascii_uppercase() {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return None,
        };
        let accidental: i8 = match chars.next() {
            None => 0,
            Some('#') => 1,
            Some('b') => -1,
            Some(_) => return None,
        };
        if chars.next().is_some() {
            return None;
        }
        Some(PitchClass(((natural + accidental).rem_euclid(12)) as u8))
    }
}

impl std::fmt::Display for PitchClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Chord degrees that can appear in a quality's interval set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Degree {
    Root,
    Second,
    FlatThird,
    Third,
    Fourth,
    FlatFifth,
    Fifth,
    SharpFifth,
    DoubleFlatSeventh,
    FlatSeventh,
    Seventh,
}

impl Degree {
    pub fn as_str(self) -> &'static str {
        match self {
            Degree::Root => "1",
            Degree::Second => "2",
            Degree::FlatThird => "b3",
            Degree::Third => "3",
            Degree::Fourth => "4",
            Degree::FlatFifth => "b5",
            Degree::Fifth => "5",
            Degree::SharpFifth => "#5",
            Degree::DoubleFlatSeventh => "bb7",
            Degree::FlatSeventh => "b7",
            Degree::Seventh => "7",
        }
    }

    pub fn parse(text: &str) -> Option<Degree> {
        Some(match text {
            "1" => Degree::Root,
            "2" => Degree::Second,
            "b3" => Degree::FlatThird,
            "3" => Degree::Third,
            "4" => Degree::Fourth,
            "b5" => Degree::FlatFifth,
            "5" => Degree::Fifth,
            "#5" => Degree::SharpFifth,
            "bb7" => Degree::DoubleFlatSeventh,
            "b7" => Degree::FlatSeventh,
            "7" => Degree::Seventh,
            _ => return None,
        })
    }

    /// Semitone offset from the chord root.
    pub fn semitones(self) -> u8 {
        match self {
            Degree::Root => 0,
            Degree::Second => 2,
            Degree::FlatThird => 3,
            Degree::Third => 4,
            Degree::Fourth => 5,
            Degree::FlatFifth => 6,
            Degree::Fifth => 7,
            Degree::SharpFifth => 8,
            Degree::DoubleFlatSeventh => 9,
            Degree::FlatSeventh => 10,
            Degree::Seventh => 11,
        }
    }
}

impl std::fmt::Display for Degree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The closed chord-quality vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quality {
    Maj,
    Min,
    Dim,
    Aug,
    Maj7,
    Min7,
    Dom7,
    Dim7,
    HalfDim7,
    Sus2,
    Sus4,
}

impl Quality {
    pub const ALL: [Quality; 11] = [
        Quality::Maj,
        Quality::Min,
        Quality::Dim,
        Quality::Aug,
        Quality::Maj7,
        Quality::Min7,
        Quality::Dom7,
        Quality::Dim7,
        Quality::HalfDim7,
        Quality::Sus2,
        Quality::Sus4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Maj => "maj",
            Quality::Min => "min",
            Quality::Dim => "dim",
            Quality::Aug => "aug",
            Quality::Maj7 => "maj7",
            Quality::Min7 => "min7",
            Quality::Dom7 => "7",
            Quality::Dim7 => "dim7",
            Quality::HalfDim7 => "hdim7",
            Quality::Sus2 => "sus2",
            Quality::Sus4 => "sus4",
        }
    }

    pub fn parse(text: &str) -> Option<Quality> {
        Quality::ALL.iter().copied().find(|q| q.as_str() == text)
    }

    /// The interval set of the quality, as chord degrees including the root.
    pub fn degrees(self) -> &'static [Degree] {
        use Degree::*;
        match self {
            Quality::Maj => &[Root, Third, Fifth],
            Quality::Min => &[Root, FlatThird, Fifth],
            Quality::Dim => &[Root, FlatThird, FlatFifth],
            Quality::Aug => &[Root, Third, SharpFifth],
            Quality::Maj7 => &[Root, Third, Fifth, Seventh],
            Quality::Min7 => &[Root, FlatThird, Fifth, FlatSeventh],
            Quality::Dom7 => &[Root, Third, Fifth, FlatSeventh],
            Quality::Dim7 => &[Root, FlatThird, FlatFifth, DoubleFlatSeventh],
            Quality::HalfDim7 => &[Root, FlatThird, FlatFifth, FlatSeventh],
            Quality::Sus2 => &[Root, Second, Fifth],
            Quality::Sus4 => &[Root, Fourth, Fifth],
        }
    }

    /// Degrees that may legally appear as a slash bass for this quality.
    ///
    /// Root position is written without a slash, so `1` is excluded.
    pub fn bass_degrees(self) -> impl Iterator<Item = Degree> {
        self.degrees().iter().copied().filter(|d| *d != Degree::Root)
    }

    pub fn contains(self, degree: Degree) -> bool {
        self.degrees().contains(&degree)
    }

    /// Chord tones as semitone offsets from the root.
    pub fn semitones(self) -> Vec<u8> {
        self.degrees().iter().map(|d| d.semitones()).collect()
    }
}

impl std::fmt::Display for Quality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A chord symbol: root pitch class, quality, and optional slash-bass degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChordLabel {
    pub root: PitchClass,
    pub quality: Quality,
    pub bass: Option<Degree>,
}

impl ChordLabel {
    /// Builds a label, rejecting bass degrees outside the quality's interval
    /// set (and `1`, which is spelled as root position).
    pub fn new(
        root: PitchClass,
        quality: Quality,
        bass: Option<Degree>,
    ) -> Result<ChordLabel, ChordParseError> {
        if let Some(degree) = bass {
            if degree == Degree::Root || !quality.contains(degree) {
                return Err(ChordParseError::IllegalBassDegree {
                    quality: quality.as_str().to_string(),
                    degree: degree.as_str().to_string(),
                });
            }
        }
        Ok(ChordLabel { root, quality, bass })
    }

    /// Sounding pitch classes of the chord.
    pub fn pitch_classes(&self) -> Vec<PitchClass> {
        self.quality
            .semitones()
            .iter()
            .map(|s| PitchClass((self.root.value() + s) % 12))
            .collect()
    }
}

/// Parses a chord symbol of the form `ROOT:QUALITY(/DEGREE)`.
pub fn parse_chord(text: &str) -> Result<ChordLabel, ChordParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ChordParseError::Syntax(text.to_string()));
    }
    let (root_part, rest) = text
        .split_once(':')
        .ok_or_else(|| ChordParseError::Syntax(text.to_string()))?;
    let (quality_part, bass_part) = match rest.split_once('/') {
        Some((quality, bass)) => (quality, Some(bass)),
        None => (rest, None),
    };
    let root = PitchClass::parse(root_part)
        .ok_or_else(|| ChordParseError::UnknownRoot(root_part.to_string()))?;
    let quality = Quality::parse(quality_part)
        .ok_or_else(|| ChordParseError::UnknownQuality(quality_part.to_string()))?;
    let bass = match bass_part {
        None => None,
        Some(b) => Some(Degree::parse(b).ok_or_else(|| ChordParseError::IllegalBassDegree {
            quality: quality.as_str().to_string(),
            degree: b.to_string(),
        })?),
    };
    ChordLabel::new(root, quality, bass)
}

/// Renders a chord label to its canonical string.
pub fn render_chord(label: &ChordLabel) -> String {
    match label.bass {
        Some(degree) => format!("{}:{}/{}", label.root, label.quality, degree),
        None => format!("{}:{}", label.root, label.quality),
    }
}

impl std::fmt::Display for ChordLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_chord(self))
    }
}

/// A chord label attached to a time span, as annotated in a performance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordSpan {
    pub label: ChordLabel,
    pub onset: f64,
    pub offset: f64,
}

impl ChordSpan {
    pub fn new(label: ChordLabel, onset: f64, offset: f64) -> Option<ChordSpan> {
        (onset < offset && onset >= 0.0).then_some(ChordSpan { label, onset, offset })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Major => "maj",
            Mode::Minor => "min",
        }
    }
}

/// One of the 24 major/minor keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeyLabel {
    pub tonic: PitchClass,
    pub mode: Mode,
}

impl KeyLabel {
    pub fn new(tonic: PitchClass, mode: Mode) -> KeyLabel {
        KeyLabel { tonic, mode }
    }

    /// Pitch classes of the key's diatonic scale.
    pub fn scale(&self) -> Vec<PitchClass> {
        let steps: &[u8] = match self.mode {
            Mode::Major => &[0, 2, 4, 5, 7, 9, 11],
            Mode::Minor => &[0, 2, 3, 5, 7, 8, 10],
        };
        steps
            .iter()
            .map(|s| PitchClass((self.tonic.value() + s) % 12))
            .collect()
    }
}

/// Parses a key string of the form `TONIC:maj` / `TONIC:min`.
pub fn parse_key(text: &str) -> Result<KeyLabel, KeyParseError> {
    let text = text.trim();
    let (tonic_part, mode_part) = text
        .split_once(':')
        .ok_or_else(|| KeyParseError::Syntax(text.to_string()))?;
    let tonic = PitchClass::parse(tonic_part)
        .ok_or_else(|| KeyParseError::UnknownTonic(tonic_part.to_string()))?;
    let mode = match mode_part {
        "maj" => Mode::Major,
        "min" => Mode::Minor,
        _ => return Err(KeyParseError::Syntax(text.to_string())),
    };
    Ok(KeyLabel { tonic, mode })
}

/// Renders a key label to its canonical string, e.g. `A:min`.
pub fn render_key(label: &KeyLabel) -> String {
    format!("{}:{}", label.tonic, label.mode.as_str())
}

impl std::fmt::Display for KeyLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_key(self))
    }
}

/// All 24 renderable keys in a fixed order (12 tonics, major before minor).
pub fn all_keys() -> Vec<KeyLabel> {
    let mut keys = Vec::with_capacity(24);
    for mode in [Mode::Major, Mode::Minor] {
        for tonic in PitchClass::all() {
            keys.push(KeyLabel { tonic, mode });
        }
    }
    keys
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_slash_chord() {
        let label = parse_chord("C:maj/3").unwrap();
        assert_eq!(label.root.name(), "C");
        assert_eq!(label.quality, Quality::Maj);
        assert_eq!(label.bass, Some(Degree::Third));
    }

    #[test]
    fn parses_chord_without_bass() {
        let label = parse_chord("A:min").unwrap();
        assert_eq!(label.root.name(), "A");
        assert_eq!(label.quality, Quality::Min);
        assert_eq!(label.bass, None);
    }

    #[test]
    fn rejects_bass_degree_outside_quality() {
        assert!(matches!(
            parse_chord("C:maj/9"),
            Err(ChordParseError::IllegalBassDegree { .. })
        ));
        assert!(matches!(
            parse_chord("C:maj/b7"),
            Err(ChordParseError::IllegalBassDegree { .. })
        ));
        // Root position is spelled without a slash.
        assert!(matches!(
            parse_chord("C:maj/1"),
            Err(ChordParseError::IllegalBassDegree { .. })
        ));
    }

    #[test]
    fn rejects_malformed_chords() {
        assert!(matches!(parse_chord(""), Err(ChordParseError::Syntax(_))));
        assert!(matches!(parse_chord("Cmaj"), Err(ChordParseError::Syntax(_))));
        assert!(matches!(parse_chord("H:maj"), Err(ChordParseError::UnknownRoot(_))));
        assert!(matches!(parse_chord("C:power"), Err(ChordParseError::UnknownQuality(_))));
    }

    #[test]
    fn renders_canonical_strings() {
        let label = ChordLabel::new(
            PitchClass::parse("C").unwrap(),
            Quality::Maj,
            Some(Degree::Third),
        )
        .unwrap();
        assert_eq!(render_chord(&label), "C:maj/3");

        let label = ChordLabel::new(PitchClass::parse("F#").unwrap(), Quality::Min7, None).unwrap();
        assert_eq!(render_chord(&label), "F#:min7");
    }

    #[test]
    fn chord_roundtrip_over_full_vocabulary() {
        let mut count = 0;
        for root in PitchClass::all() {
            for quality in Quality::ALL {
                let mut basses: Vec<Option<Degree>> = vec![None];
                basses.extend(quality.bass_degrees().map(Some));
                for bass in basses {
                    let label = ChordLabel::new(root, quality, bass).unwrap();
                    let rendered = render_chord(&label);
                    assert_eq!(parse_chord(&rendered).unwrap(), label, "via {rendered}");
                    count += 1;
                }
            }
        }
        // 12 roots x (11 qualities with 2 or 3 bass options plus root position)
        assert!(count > 400, "vocabulary product unexpectedly small: {count}");
    }

    #[test]
    fn enharmonic_spellings_normalize() {
        assert_eq!(
            parse_chord("Bb:maj").unwrap().root,
            parse_chord("A#:maj").unwrap().root
        );
        assert_eq!(render_chord(&parse_chord("Db:min").unwrap()), "C#:min");
        // Every accepted spelling maps to exactly one pitch class.
        assert_eq!(PitchClass::parse("Cb").unwrap().value(), 11);
        assert_eq!(PitchClass::parse("B#").unwrap().value(), 0);
    }

    #[test]
    fn bass_degree_tables_are_consistent() {
        for quality in Quality::ALL {
            for degree in quality.bass_degrees() {
                assert!(quality.contains(degree));
            }
        }
    }

    #[test]
    fn key_roundtrip_and_enumeration() {
        let key = parse_key("A:min").unwrap();
        assert_eq!(key.tonic.name(), "A");
        assert_eq!(key.mode, Mode::Minor);
        assert_eq!(render_key(&parse_key("C:maj").unwrap()), "C:maj");

        let keys = all_keys();
        assert_eq!(keys.len(), 24);
        assert_eq!(keys.iter().filter(|k| k.mode == Mode::Major).count(), 12);
        assert_eq!(keys.iter().filter(|k| k.mode == Mode::Minor).count(), 12);
        for key in &keys {
            assert_eq!(parse_key(&render_key(key)).unwrap(), *key);
        }
    }

    #[test]
    fn rejects_malformed_keys() {
        assert!(matches!(parse_key("A minor"), Err(KeyParseError::Syntax(_))));
        assert!(matches!(parse_key("X:maj"), Err(KeyParseError::UnknownTonic(_))));
        assert!(matches!(parse_key("A:dorian"), Err(KeyParseError::Syntax(_))));
    }
}
