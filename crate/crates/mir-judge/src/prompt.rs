//! Six-section prompt assembly with concept augmentation.
//!
//! Prompt texts live as versioned template assets under `templates/`, one
//! file per (task, level, section), embedded at compile time. Concept
//! masking is implemented as whole-template alternatives validated by a
//! stoplist scan rather than find-and-replace, so masked prompts cannot leak
//! the masked vocabulary in any form. The serialized segment is spliced into
//! the data-input section byte-verbatim at every level.

use crate::Task;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const TEMPLATE_VERSION: &str = "v1";

/// Section headers, constant across tasks and levels, in prompt order.
pub const SECTION_HEADERS: [&str; 6] = [
    "## Background and Task Definition",
    "## Concept Description",
    "## Input Representation",
    "## Techniques and Steps",
    "## Output Format",
    "## Data Input",
];

const DATA_SLOT: &str = "{{DATA}}";

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("concept {concept:?} is not defined for task {task}")]
    UnknownConcept { task: Task, concept: String },
    #[error("stoplisted term {term:?} leaked into a {level} prompt section for task {task}")]
    StoplistLeak { task: Task, level: String, term: String },
    #[error("unknown augmentation level {0:?}")]
    UnknownLevel(String),
    #[error("data-input template is missing its payload slot")]
    MissingDataSlot,
}

/// Concepts available for introduction, one per task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concept {
    Rhythm,
    Chroma,
    Scale,
}

impl Concept {
    pub fn as_str(self) -> &'static str {
        match self {
            Concept::Rhythm => "rhythm",
            Concept::Chroma => "chroma",
            Concept::Scale => "scale",
        }
    }

    pub fn parse(s: &str) -> Option<Concept> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rhythm" => Some(Concept::Rhythm),
            "chroma" => Some(Concept::Chroma),
            "scale" => Some(Concept::Scale),
            _ => None,
        }
    }
}

/// The concept each task's introduction level adds.
pub fn concept_for(task: Task) -> Concept {
    match task {
        Task::Beat => Concept::Rhythm,
        Task::Chord => Concept::Chroma,
        Task::Key => Concept::Scale,
    }
}

/// Concept regime of a prompt: the basic texts, an added concept, or one of
/// three nested masking levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AugmentationLevel {
    Basic,
    Introduce(Concept),
    MaskAttribute,
    MaskTask,
    MaskDomain,
}

impl AugmentationLevel {
    /// All levels applicable to a task, in report order.
    pub fn all_for(task: Task) -> [AugmentationLevel; 5] {
        [
            AugmentationLevel::Basic,
            AugmentationLevel::Introduce(concept_for(task)),
            AugmentationLevel::MaskAttribute,
            AugmentationLevel::MaskTask,
            AugmentationLevel::MaskDomain,
        ]
    }

    pub fn is_masking(self) -> bool {
        matches!(
            self,
            AugmentationLevel::MaskAttribute
                | AugmentationLevel::MaskTask
                | AugmentationLevel::MaskDomain
        )
    }

    /// Stable identifier used in hashes, file names, and CSV rows.
    pub fn slug(self) -> String {
        match self {
            AugmentationLevel::Basic => "basic".to_string(),
            AugmentationLevel::Introduce(c) => format!("introduce_{}", c.as_str()),
            AugmentationLevel::MaskAttribute => "mask_attribute".to_string(),
            AugmentationLevel::MaskTask => "mask_task".to_string(),
            AugmentationLevel::MaskDomain => "mask_domain".to_string(),
        }
    }

    /// Human-readable row label in the style of the results tables.
    pub fn display(self) -> String {
        match self {
            AugmentationLevel::Basic => "Basic Concepts".to_string(),
            AugmentationLevel::Introduce(c) => format!("+ Introduce ({})", c.as_str()),
            AugmentationLevel::MaskAttribute => "- Attribute Masking".to_string(),
            AugmentationLevel::MaskTask => "- Task Masking".to_string(),
            AugmentationLevel::MaskDomain => "- Domain Masking".to_string(),
        }
    }

    /// Parses a level name; bare "introduce" resolves to the task's concept.
    pub fn parse(s: &str, task: Task) -> Result<AugmentationLevel, PromptError> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "basic" => Ok(AugmentationLevel::Basic),
            "introduce" => Ok(AugmentationLevel::Introduce(concept_for(task))),
            "mask_attribute" | "mask-attribute" => Ok(AugmentationLevel::MaskAttribute),
            "mask_task" | "mask-task" => Ok(AugmentationLevel::MaskTask),
            "mask_domain" | "mask-domain" => Ok(AugmentationLevel::MaskDomain),
            _ => match lower.strip_prefix("introduce_").or_else(|| lower.strip_prefix("introduce:")) {
                Some(name) => {
                    let concept = Concept::parse(name).ok_or_else(|| PromptError::UnknownConcept {
                        task,
                        concept: name.to_string(),
                    })?;
                    validate_concept(task, concept)?;
                    Ok(AugmentationLevel::Introduce(concept))
                }
                None => Err(PromptError::UnknownLevel(s.to_string())),
            },
        }
    }
}

fn validate_concept(task: Task, concept: Concept) -> Result<(), PromptError> {
    if concept_for(task) != concept {
        return Err(PromptError::UnknownConcept { task, concept: concept.as_str().to_string() });
    }
    Ok(())
}

macro_rules! sections {
    ($task:literal, $level:literal) => {
        [
            include_str!(concat!("../templates/", $task, "/", $level, "/01_background.txt")),
            include_str!(concat!("../templates/", $task, "/", $level, "/02_concepts.txt")),
            include_str!(concat!("../templates/", $task, "/", $level, "/03_input.txt")),
            include_str!(concat!("../templates/", $task, "/", $level, "/04_steps.txt")),
            include_str!(concat!("../templates/", $task, "/", $level, "/05_output.txt")),
            include_str!(concat!("../templates/", $task, "/", $level, "/06_data.txt")),
        ]
    };
}

fn template_sections(task: Task, level: AugmentationLevel) -> Result<[&'static str; 6], PromptError> {
    if let AugmentationLevel::Introduce(concept) = level {
        validate_concept(task, concept)?;
    }
    Ok(match (task, level) {
        (Task::Beat, AugmentationLevel::Basic) => sections!("beat", "basic"),
        (Task::Beat, AugmentationLevel::Introduce(_)) => sections!("beat", "introduce"),
        (Task::Beat, AugmentationLevel::MaskAttribute) => sections!("beat", "mask_attribute"),
        (Task::Beat, AugmentationLevel::MaskTask) => sections!("beat", "mask_task"),
        (Task::Beat, AugmentationLevel::MaskDomain) => sections!("beat", "mask_domain"),
        (Task::Chord, AugmentationLevel::Basic) => sections!("chord", "basic"),
        (Task::Chord, AugmentationLevel::Introduce(_)) => sections!("chord", "introduce"),
        (Task::Chord, AugmentationLevel::MaskAttribute) => sections!("chord", "mask_attribute"),
        (Task::Chord, AugmentationLevel::MaskTask) => sections!("chord", "mask_task"),
        (Task::Chord, AugmentationLevel::MaskDomain) => sections!("chord", "mask_domain"),
        (Task::Key, AugmentationLevel::Basic) => sections!("key", "basic"),
        (Task::Key, AugmentationLevel::Introduce(_)) => sections!("key", "introduce"),
        (Task::Key, AugmentationLevel::MaskAttribute) => sections!("key", "mask_attribute"),
        (Task::Key, AugmentationLevel::MaskTask) => sections!("key", "mask_task"),
        (Task::Key, AugmentationLevel::MaskDomain) => sections!("key", "mask_domain"),
    })
}

fn stoplist_text(task: Task, level: AugmentationLevel) -> Option<&'static str> {
    Some(match (task, level) {
        (Task::Beat, AugmentationLevel::MaskAttribute) => {
            include_str!("../templates/beat/stoplist_mask_attribute.txt")
        }
        (Task::Beat, AugmentationLevel::MaskTask) => {
            include_str!("../templates/beat/stoplist_mask_task.txt")
        }
        (Task::Beat, AugmentationLevel::MaskDomain) => {
            include_str!("../templates/beat/stoplist_mask_domain.txt")
        }
        (Task::Chord, AugmentationLevel::MaskAttribute) => {
            include_str!("../templates/chord/stoplist_mask_attribute.txt")
        }
        (Task::Chord, AugmentationLevel::MaskTask) => {
            include_str!("../templates/chord/stoplist_mask_task.txt")
        }
        (Task::Chord, AugmentationLevel::MaskDomain) => {
            include_str!("../templates/chord/stoplist_mask_domain.txt")
        }
        (Task::Key, AugmentationLevel::MaskAttribute) => {
            include_str!("../templates/key/stoplist_mask_attribute.txt")
        }
        (Task::Key, AugmentationLevel::MaskTask) => {
            include_str!("../templates/key/stoplist_mask_task.txt")
        }
        (Task::Key, AugmentationLevel::MaskDomain) => {
            include_str!("../templates/key/stoplist_mask_domain.txt")
        }
        _ => return None,
    })
}

/// The masked vocabulary for a (task, level); `None` for non-masking levels.
pub fn stoplist(task: Task, level: AugmentationLevel) -> Option<Vec<&'static str>> {
    stoplist_text(task, level).map(|text| {
        text.lines()
            .map(str::trim)
            .filter(|line| !line.is_empty())
            .collect()
    })
}

/// Case-insensitive whole-word scan; returns each stoplisted term found.
pub fn find_stoplist_violations(text: &str, terms: &[&str]) -> Vec<String> {
    let lower = text.to_lowercase();
    let bytes = lower.as_bytes();
    let mut hits = Vec::new();
    for term in terms {
        let needle = term.to_lowercase();
        if needle.is_empty() {
            continue;
        }
        let mut start = 0;
        while let Some(pos) = lower[start..].find(&needle) {
            let at = start + pos;
            let end = at + needle.len();
            let boundary_before = at == 0 || !bytes[at - 1].is_ascii_alphanumeric();
            let boundary_after = end >= bytes.len() || !bytes[end].is_ascii_alphanumeric();
            if boundary_before && boundary_after {
                hits.push(term.to_string());
                break;
            }
            start = at + 1;
        }
    }
    hits
}

/// A fully assembled prompt: six ordered sections plus identity metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub task: Task,
    pub level: AugmentationLevel,
    pub sections: [String; 6],
    pub template_version: String,
}

impl PromptSpec {
    /// Joins the six sections into the final prompt text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, section) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            out.push_str(section.trim_end());
        }
        out.push('\n');
        out
    }
}

/// Content hash identifying a prompt: (template version, task, level,
/// serialized segment). Used as the cache key downstream.
pub fn prompt_hash(
    template_version: &str,
    task: Task,
    level: AugmentationLevel,
    serialized_segment: &str,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(template_version.as_bytes());
    hasher.update([0xff]);
    hasher.update(task.as_str().as_bytes());
    hasher.update([0xff]);
    hasher.update(level.slug().as_bytes());
    hasher.update([0xff]);
    hasher.update(serialized_segment.as_bytes());
    hex::encode(hasher.finalize())
}

/// Scans every non-payload byte of the level's templates; masking levels
/// must be clean of their own stoplist.
fn scan_templates(
    task: Task,
    level: AugmentationLevel,
    sections: &[&'static str; 6],
) -> Result<(), PromptError> {
    let Some(terms) = stoplist(task, level) else {
        return Ok(());
    };
    for section in sections {
        // The payload slot itself is exempt; everything else is scanned.
        let template_only = section.replace(DATA_SLOT, "");
        if let Some(term) = find_stoplist_violations(&template_only, &terms).first() {
            return Err(PromptError::StoplistLeak {
                task,
                level: level.slug(),
                term: term.clone(),
            });
        }
    }
    Ok(())
}

/// Builds the six-section prompt spec for a serialized segment.
pub fn build_prompt_spec(
    task: Task,
    level: AugmentationLevel,
    serialized_segment: &str,
    template_version: &str,
) -> Result<PromptSpec, PromptError> {
    let templates = template_sections(task, level)?;
    scan_templates(task, level, &templates)?;
    let data_template = templates[5];
    if !data_template.contains(DATA_SLOT) {
        return Err(PromptError::MissingDataSlot);
    }
    let sections = [
        templates[0].trim_end().to_string(),
        templates[1].trim_end().to_string(),
        templates[2].trim_end().to_string(),
        templates[3].trim_end().to_string(),
        templates[4].trim_end().to_string(),
        data_template.replace(DATA_SLOT, serialized_segment).trim_end().to_string(),
    ];
    Ok(PromptSpec {
        task,
        level,
        sections,
        template_version: template_version.to_string(),
    })
}

/// Builds the final prompt text (see [`build_prompt_spec`]).
pub fn build_prompt(
    task: Task,
    level: AugmentationLevel,
    serialized_segment: &str,
    template_version: &str,
) -> Result<String, PromptError> {
    Ok(build_prompt_spec(task, level, serialized_segment, template_version)?.render())
}

/// Replaces sections with the masking level's hand-rewritten alternatives,
/// carrying the data payload over verbatim, then validates with the
/// stoplist scan.
pub fn apply_masking(
    sections: &[String; 6],
    task: Task,
    level: AugmentationLevel,
) -> Result<[String; 6], PromptError> {
    assert!(level.is_masking(), "apply_masking requires a masking level");
    let payload = extract_payload(&sections[5]);
    let spec = build_prompt_spec(task, level, payload, TEMPLATE_VERSION)?;
    Ok(spec.sections)
}

/// The data payload of a rendered data-input section: its first JSON line.
fn extract_payload(data_section: &str) -> &str {
    data_section
        .lines()
        .find(|line| line.trim_start().starts_with('{'))
        .unwrap_or("")
        .trim()
}
