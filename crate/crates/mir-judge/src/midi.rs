//! Standard MIDI File loading for formats 0 and 1.
//!
//! Events are merged across tracks, resolved to seconds through the tempo
//! map, and paired into notes. Pairing rules: a note-on with velocity 0 acts
//! as a note-off; a second note-on for a sounding (channel, pitch) truncates
//! the earlier note; note-ons still open at end of file are closed there.
//! Sustain pedal is ignored.

use crate::symbolic::{Note, NoteSequence};
use midly::{Format, MetaMessage, MidiMessage, Smf, Timing, TrackEventKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MidiError {
    #[error("malformed MIDI data: {0}")]
    Malformed(String),
    #[error("unsupported MIDI format {0} (only SMF formats 0 and 1 are handled)")]
    UnsupportedFormat(u16),
}

/// Resolves absolute ticks to seconds under a tempo map.
struct TempoMap {
    /// (tick, microseconds per quarter note), sorted by tick.
    changes: Vec<(u64, u32)>,
    ticks_per_quarter: f64,
}

const DEFAULT_TEMPO_US: u32 = 500_000;

impl TempoMap {
    fn new(mut changes: Vec<(u64, u32)>, ticks_per_quarter: u16) -> TempoMap {
        changes.sort_by_key(|(tick, _)| *tick);
        TempoMap { changes, ticks_per_quarter: ticks_per_quarter as f64 }
    }

    fn tick_to_seconds(&self, tick: u64) -> f64 {
        let mut seconds = 0.0;
        let mut cursor_tick = 0u64;
        let mut tempo = DEFAULT_TEMPO_US;
        for (change_tick, change_tempo) in &self.changes {
            if *change_tick >= tick {
                break;
            }
            seconds += (change_tick - cursor_tick) as f64 * tempo as f64
                / (self.ticks_per_quarter * 1e6);
            cursor_tick = *change_tick;
            tempo = *change_tempo;
        }
        seconds + (tick - cursor_tick) as f64 * tempo as f64 / (self.ticks_per_quarter * 1e6)
    }
}

/// Loads a Standard MIDI File (format 0 or 1) into a note sequence.
pub fn load_midi(bytes: &[u8], source_id: impl Into<String>) -> Result<NoteSequence, MidiError> {
    let smf = Smf::parse(bytes).map_err(|e| MidiError::Malformed(e.to_string()))?;
    if smf.header.format == Format::Sequential {
        return Err(MidiError::UnsupportedFormat(2));
    }

    // (absolute tick, track index, event index) keeps merge order stable.
    let mut events: Vec<(u64, usize, usize, TrackEventKind)> = Vec::new();
    let mut tempo_changes: Vec<(u64, u32)> = Vec::new();
    let mut end_tick = 0u64;
    for (track_index, track) in smf.tracks.iter().enumerate() {
        let mut tick = 0u64;
        for (event_index, event) in track.iter().enumerate() {
            tick += u64::from(event.delta.as_int());
            if let TrackEventKind::Meta(MetaMessage::Tempo(us)) = event.kind {
                tempo_changes.push((tick, us.as_int()));
            }
            events.push((tick, track_index, event_index, event.kind));
        }
        end_tick = end_tick.max(tick);
    }
    events.sort_by_key(|(tick, track, index, _)| (*tick, *track, *index));

    let to_seconds: Box<dyn Fn(u64) -> f64> = match smf.header.timing {
        Timing::Metrical(ppq) => {
            let map = TempoMap::new(tempo_changes, ppq.as_int());
            Box::new(move |tick| map.tick_to_seconds(tick))
        }
        Timing::Timecode(fps, subframe) => {
            let per_tick = 1.0 / (fps.as_f32() as f64 * subframe as f64);
            Box::new(move |tick| tick as f64 * per_tick)
        }
    };

    // Open note-ons keyed by (channel, pitch).
    let mut open: std::collections::HashMap<(u8, u8), (u64, u8)> = std::collections::HashMap::new();
    let mut notes: Vec<Note> = Vec::new();
    let close = |onset_tick: u64, off_tick: u64, pitch: u8, velocity: u8, notes: &mut Vec<Note>| {
        let onset = to_seconds(onset_tick);
        let duration = to_seconds(off_tick) - onset;
        if duration > 0.0 {
            // Velocity 0 never reaches here; 1..=127 is already valid.
            if let Ok(note) = Note::new(onset, duration, pitch, velocity.clamp(1, 127)) {
                notes.push(note);
            }
        }
    };

    for (tick, _, _, kind) in &events {
        let TrackEventKind::Midi { channel, message } = kind else {
            continue;
        };
        let channel = channel.as_int();
        match message {
            MidiMessage::NoteOn { key, vel } if vel.as_int() > 0 => {
                let pitch = key.as_int();
                if let Some((onset_tick, velocity)) = open.insert((channel, pitch), (*tick, vel.as_int())) {
                    // Overlapping same-pitch note-on truncates the earlier note.
                    close(onset_tick, *tick, pitch, velocity, &mut notes);
                }
            }
            MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                let pitch = key.as_int();
                if let Some((onset_tick, velocity)) = open.remove(&(channel, pitch)) {
                    close(onset_tick, *tick, pitch, velocity, &mut notes);
                }
            }
            _ => {}
        }
    }

    // Unmatched note-ons are closed at end of file and still counted.
    let mut leftovers: Vec<((u8, u8), (u64, u8))> = open.into_iter().collect();
    leftovers.sort();
    for ((_, pitch), (onset_tick, velocity)) in leftovers {
        let off = end_tick.max(onset_tick + 1);
        close(onset_tick, off, pitch, velocity, &mut notes);
    }

    Ok(NoteSequence::new(notes, source_id))
}

fn push_varlen(out: &mut Vec<u8>, mut value: u32) {
    let mut stack = [0u8; 4];
    let mut n = 0;
    loop {
        stack[n] = (value & 0x7f) as u8;
        value >>= 7;
        n += 1;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let mut byte = stack[i];
        if i > 0 {
            byte |= 0x80;
        }
        out.push(byte);
    }
}

/// Writes a minimal single-tempo format-0 SMF. Internal: the synthetic corpus
/// generator needs to emit `performance.mid`, nothing more.
pub(crate) fn write_smf0(notes: &[Note], bpm: f64, ppq: u16) -> Vec<u8> {
    let tempo_us = (60_000_000.0 / bpm).round() as u32;
    let to_tick = |seconds: f64| -> u64 {
        (seconds * ppq as f64 * 1e6 / tempo_us as f64).round() as u64
    };

    // (tick, is_on, pitch, velocity); offs sort before ons at equal ticks so
    // re-struck pitches do not merge.
    let mut events: Vec<(u64, bool, u8, u8)> = Vec::new();
    for note in notes {
        events.push((to_tick(note.onset), true, note.pitch, note.velocity));
        events.push((to_tick(note.onset + note.duration), false, note.pitch, 0));
    }
    events.sort_by_key(|(tick, is_on, pitch, _)| (*tick, *is_on, *pitch));

    let mut track: Vec<u8> = Vec::new();
    // Tempo meta event at tick 0.
    push_varlen(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x51, 0x03]);
    track.extend_from_slice(&tempo_us.to_be_bytes()[1..]);

    let mut cursor = 0u64;
    for (tick, is_on, pitch, velocity) in events {
        push_varlen(&mut track, (tick - cursor) as u32);
        cursor = tick;
        if is_on {
            track.extend_from_slice(&[0x90, pitch, velocity]);
        } else {
            track.extend_from_slice(&[0x80, pitch, 0x40]);
        }
    }
    // End of track.
    push_varlen(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(track.len() + 22);
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes()); // format 0
    out.extend_from_slice(&1u16.to_be_bytes()); // one track
    out.extend_from_slice(&ppq.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    out
}
