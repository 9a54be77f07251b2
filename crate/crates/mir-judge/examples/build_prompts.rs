//! Assemble six-section prompts at every augmentation level and show what
//! concept masking removes.
//!
//! ```bash
//! cargo run --example build_prompts
//! ```

use mir_judge::notation::parse_key;
use mir_judge::prompt::{
    build_prompt, find_stoplist_violations, prompt_hash, stoplist, AugmentationLevel,
    TEMPLATE_VERSION,
};
use mir_judge::symbolic::{
    serialize_segment, Annotation, Note, NoteSequence, Provenance, Segment,
};
use mir_judge::Task;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A tiny key segment: an A minor arpeggio.
    let notes = vec![
        Note::new(0.0, 0.5, 57, 80)?,
        Note::new(0.5, 0.5, 60, 78)?,
        Note::new(1.0, 0.5, 64, 82)?,
        Note::new(1.5, 0.5, 69, 84)?,
    ];
    let segment = Segment {
        notes: NoteSequence::new(notes, "demo"),
        annotation: Annotation::Key(parse_key("A:min")?),
        provenance: Provenance { source_id: "demo".into(), segment_index: 0, start: 0.0, end: 2.0 },
    };
    let serialized = serialize_segment(&segment, Task::Key)?;
    println!("serialized segment:\n{serialized}\n");

    for level in AugmentationLevel::all_for(Task::Key) {
        let text = build_prompt(Task::Key, level, &serialized, TEMPLATE_VERSION)?;
        let hash = prompt_hash(TEMPLATE_VERSION, Task::Key, level, &serialized);
        println!("=== {} ({} bytes, hash {}...)", level.slug(), text.len(), &hash[..12]);
        // First few lines of the background section.
        for line in text.lines().skip(1).take(2) {
            println!("    {line}");
        }
        if let Some(terms) = stoplist(Task::Key, level) {
            let without_payload = text.replace(&serialized, "");
            let violations = find_stoplist_violations(&without_payload, &terms);
            println!(
                "    stoplist: {} terms masked, violations outside payload: {}",
                terms.len(),
                violations.len()
            );
        }
    }
    Ok(())
}
