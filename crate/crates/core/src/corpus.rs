//! Evaluation data model and corpus ingestion.
//!
//! The canonical on-disk format is JSONL with one record per (system,
//! segment):
//!
//! ```text
//! {"system":"online-A","lang_pair":"de-en","segment_id":"seg-1","candidate":"...","references":["..."]}
//! ```
//!
//! System-level human judgments live in a sidecar JSONL file with records
//! `{"system":"online-A","lang_pair":"de-en","human_score":0.123}`.
//!
//! Texts are stored exactly as read; tokenization is left to each metric.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{file} line {line} is empty")]
    EmptyLine { file: &'static str, line: usize },
    #[error("line count mismatch: {candidates} candidate lines vs {references} reference lines")]
    LineCountMismatch { candidates: usize, references: usize },
    #[error("language pair {0:?} is not of the form xx-en")]
    BadLanguagePair(String),
    #[error("dataset is empty")]
    Empty,
    #[error("human score for unknown system {system:?} ({lang_pair})")]
    UnknownSystem { system: String, lang_pair: String },
    #[error("invalid dataset: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    Invalid(Vec<Issue>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One candidate translation together with its reference translation(s).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub segment_id: String,
    pub candidate: String,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemRecord {
    pub system_name: String,
    pub language_pair: String,
    pub segments: Vec<Segment>,
    /// System-level human judgment (z-score scale), if one was supplied.
    pub human_score: Option<f64>,
}

/// All systems evaluated for one language pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    pub language_pair: String,
    pub systems: Vec<SystemRecord>,
}

/// Wire form of one dataset line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub system: String,
    pub lang_pair: String,
    pub segment_id: String,
    pub candidate: String,
    pub references: Vec<String>,
}

/// Wire form of one human-score sidecar line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScore {
    pub system: String,
    pub lang_pair: String,
    pub human_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueCode {
    NoSystems,
    EmptySystem,
    LanguagePairMismatch,
    NonEnglishTarget,
    DuplicateSegment,
    NoReferences,
    EmptyText,
    InconsistentSegments,
    UnscoredSystems,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: IssueCode,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.code, self.location, self.message)
    }
}

impl Issue {
    fn error(code: IssueCode, location: impl Into<String>, message: impl Into<String>) -> Self {
        Issue { severity: Severity::Error, code, location: location.into(), message: message.into() }
    }
}

/// Checks the `xx-en` shape of a language pair.
pub fn check_language_pair(pair: &str) -> Result<(), CorpusError> {
    match pair.split_once('-') {
        Some((src, "en")) if (2..=3).contains(&src.len()) && src.chars().all(|c| c.is_ascii_lowercase()) => Ok(()),
        _ => Err(CorpusError::BadLanguagePair(pair.to_string())),
    }
}

/// Reads a canonical JSONL dataset and returns it only if [`validate`]
/// reports no errors.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<EvaluationSet, CorpusError> {
    let mut systems: Vec<SystemRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => {
                CorpusError::Malformed { line: line_no, message: "invalid UTF-8".to_string() }
            }
            _ => CorpusError::Io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SegmentRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: line_no, message: e.to_string() })?;

        let slot = *index.entry(record.system.clone()).or_insert_with(|| {
            systems.push(SystemRecord {
                system_name: record.system.clone(),
                language_pair: record.lang_pair.clone(),
                segments: Vec::new(),
                human_score: None,
            });
            systems.len() - 1
        });
        let system = &mut systems[slot];
        if system.language_pair != record.lang_pair {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: format!(
                    "system {:?} changes language pair from {} to {}",
                    record.system, system.language_pair, record.lang_pair
                ),
            });
        }
        system.segments.push(Segment {
            segment_id: record.segment_id,
            candidate: record.candidate,
            references: record.references,
        });
    }

    let language_pair = systems.first().ok_or(CorpusError::Empty)?.language_pair.clone();
    let set = EvaluationSet { language_pair, systems };
    let errors: Vec<Issue> = validate(&set).into_iter().filter(|i| i.severity == Severity::Error).collect();
    if errors.is_empty() {
        Ok(set)
    } else {
        Err(CorpusError::Invalid(errors))
    }
}

/// Lists every invariant violation in `set`. An empty result means the set
/// is fully valid.
pub fn validate(set: &EvaluationSet) -> Vec<Issue> {
    let mut issues = Vec::new();
    if set.systems.is_empty() {
        issues.push(Issue::error(IssueCode::NoSystems, "dataset", "no systems"));
        return issues;
    }
    if check_language_pair(&set.language_pair).is_err() {
        issues.push(Issue::error(
            IssueCode::NonEnglishTarget,
            "dataset",
            format!("language pair {:?} does not translate into English", set.language_pair),
        ));
    }

    let reference_ids: BTreeSet<&str> = set.systems[0].segments.iter().map(|s| s.segment_id.as_str()).collect();

    for system in &set.systems {
        let sys = system.system_name.as_str();
        if system.language_pair != set.language_pair {
            issues.push(Issue::error(
                IssueCode::LanguagePairMismatch,
                format!("system {sys}"),
                format!("language pair {} differs from {}", system.language_pair, set.language_pair),
            ));
        }
        if system.segments.is_empty() {
            issues.push(Issue::error(IssueCode::EmptySystem, format!("system {sys}"), "no segments"));
        }

        let mut seen = HashSet::new();
        for seg in &system.segments {
            let loc = format!("system {sys} segment {}", seg.segment_id);
            if !seen.insert(seg.segment_id.as_str()) {
                issues.push(Issue::error(IssueCode::DuplicateSegment, &loc, "duplicate segment_id"));
            }
            if seg.candidate.trim().is_empty() {
                issues.push(Issue::error(IssueCode::EmptyText, &loc, "empty candidate"));
            }
            if seg.references.is_empty() {
                issues.push(Issue::error(IssueCode::NoReferences, &loc, "no references"));
            }
            for (k, reference) in seg.references.iter().enumerate() {
                if reference.trim().is_empty() {
                    issues.push(Issue::error(IssueCode::EmptyText, &loc, format!("empty reference #{}", k + 1)));
                }
            }
        }

        let ids: BTreeSet<&str> = system.segments.iter().map(|s| s.segment_id.as_str()).collect();
        if ids != reference_ids {
            let missing: Vec<&str> = reference_ids.difference(&ids).copied().collect();
            let extra: Vec<&str> = ids.difference(&reference_ids).copied().collect();
            issues.push(Issue::error(
                IssueCode::InconsistentSegments,
                format!("system {sys}"),
                format!(
                    "segment set differs from system {}: missing {:?}, extra {:?}",
                    set.systems[0].system_name, missing, extra
                ),
            ));
        }
    }

    let unscored: Vec<&str> =
        set.systems.iter().filter(|s| s.human_score.is_none()).map(|s| s.system_name.as_str()).collect();
    if !unscored.is_empty() && unscored.len() < set.systems.len() {
        issues.push(Issue {
            severity: Severity::Info,
            code: IssueCode::UnscoredSystems,
            location: "dataset".to_string(),
            message: format!("systems without human score: {}", unscored.join(", ")),
        });
    }
    issues
}

/// Pairs a line-per-segment candidate file with a reference file and emits
/// canonical JSONL, assigning ids `seg-1`, `seg-2`, ...
pub fn convert_plain_text(
    candidates: &str,
    references: &str,
    system_name: &str,
    language_pair: &str,
) -> Result<String, CorpusError> {
    check_language_pair(language_pair)?;
    let cand_lines = split_lines(candidates);
    let ref_lines = split_lines(references);
    if cand_lines.len() != ref_lines.len() {
        return Err(CorpusError::LineCountMismatch { candidates: cand_lines.len(), references: ref_lines.len() });
    }
    if cand_lines.is_empty() {
        return Err(CorpusError::Empty);
    }

    let mut out = String::new();
    for (i, (cand, reference)) in cand_lines.iter().zip(&ref_lines).enumerate() {
        if cand.trim().is_empty() {
            return Err(CorpusError::EmptyLine { file: "candidate", line: i + 1 });
        }
        if reference.trim().is_empty() {
            return Err(CorpusError::EmptyLine { file: "reference", line: i + 1 });
        }
        let record = SegmentRecord {
            system: system_name.to_string(),
            lang_pair: language_pair.to_string(),
            segment_id: format!("seg-{}", i + 1),
            candidate: (*cand).to_string(),
            references: vec![(*reference).to_string()],
        };
        push_json_line(&mut out, &record);
    }
    Ok(out)
}

fn split_lines(text: &str) -> Vec<&str> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() && text.len() <= 1 {
        return Vec::new();
    }
    body.split('\n').collect()
}

fn push_json_line<T: Serialize>(out: &mut String, value: &T) {
    // Serializing plain structs of strings cannot fail.
    out.push_str(&serde_json::to_string(value).expect("serializable record"));
    out.push('\n');
}

/// Reads a human-score sidecar file.
pub fn parse_human_scores<R: BufRead>(reader: R) -> Result<Vec<HumanScore>, CorpusError> {
    let mut scores = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let score: HumanScore =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed { line: n + 1, message: e.to_string() })?;
        if !seen.insert((score.system.clone(), score.lang_pair.clone())) {
            return Err(CorpusError::Malformed {
                line: n + 1,
                message: format!("duplicate human score for {} ({})", score.system, score.lang_pair),
            });
        }
        scores.push(score);
    }
    Ok(scores)
}

impl EvaluationSet {
    /// Copies the sidecar scores for this set's language pair onto its
    /// systems. Scores for other language pairs are ignored.
    pub fn attach_human_scores(&mut self, scores: &[HumanScore]) -> Result<usize, CorpusError> {
        let mut attached = 0;
        for score in scores.iter().filter(|s| s.lang_pair == self.language_pair) {
            let system = self.systems.iter_mut().find(|s| s.system_name == score.system).ok_or_else(|| {
                CorpusError::UnknownSystem { system: score.system.clone(), lang_pair: score.lang_pair.clone() }
            })?;
            system.human_score = Some(score.human_score);
            attached += 1;
        }
        Ok(attached)
    }

    pub fn human_scores(&self) -> Vec<(String, f64)> {
        self.systems.iter().filter_map(|s| s.human_score.map(|h| (s.system_name.clone(), h))).collect()
    }

    pub fn segment_count(&self) -> usize {
        self.systems.iter().map(|s| s.segments.len()).sum()
    }

    /// Serializes back to canonical JSONL, system by system.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for system in &self.systems {
            for seg in &system.segments {
                let record = SegmentRecord {
                    system: system.system_name.clone(),
                    lang_pair: system.language_pair.clone(),
                    segment_id: seg.segment_id.clone(),
                    candidate: seg.candidate.clone(),
                    references: seg.references.clone(),
                };
                push_json_line(&mut out, &record);
            }
        }
        out
    }
}
