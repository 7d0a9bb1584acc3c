//! The bidirectional-entailment metric.
//!
//! For a candidate `c` and reference `r`:
//!
//! ```text
//! odds_f = odds(P(entail | premise = c, hypothesis = r))
//! odds_b = odds(P(entail | premise = r, hypothesis = c))
//! raw    = odds_f * odds_b,      odds(p) = p / (1 - p)
//! ```
//!
//! `raw` is large only when entailment holds both ways, i.e. when the two
//! sentences paraphrase each other. Segment scores are optionally
//! normalized over the whole pool of a language pair and averaged per
//! system.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EvaluationSet;
use crate::nli::{classify_batch_concurrent, BatchOptions, EntailmentBackend, NliError, PairRequest};

/// Probability clamp applied before the odds transform.
pub const PROBABILITY_EPSILON: f64 = 1e-6;

/// Metric name used in score files.
pub const BIDENT_METRIC: &str = "bident";

/// Direction-odds ratio above which a segment is flagged one-directional.
pub const ONE_DIRECTIONAL_RATIO: f64 = 10.0;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("no scores to aggregate")]
    Empty,
    #[error(transparent)]
    Nli(#[from] NliError),
}

/// `p / (1 - p)` after clamping `p` into `[ε, 1 - ε]`.
pub fn odds(p: f64) -> Result<f64, MetricError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MetricError::ProbabilityOutOfRange(p));
    }
    let p = p.clamp(PROBABILITY_EPSILON, 1.0 - PROBABILITY_EPSILON);
    Ok(p / (1.0 - p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalOdds {
    /// Candidate entails reference.
    pub forward: f64,
    /// Reference entails candidate.
    pub backward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentScore {
    pub segment_id: String,
    pub odds: DirectionalOdds,
    pub raw: f64,
    pub normalized: Option<f64>,
}

impl SegmentScore {
    pub fn from_probabilities(segment_id: impl Into<String>, forward: f64, backward: f64) -> Result<Self, MetricError> {
        let odds = DirectionalOdds { forward: odds(forward)?, backward: odds(backward)? };
        Ok(SegmentScore { segment_id: segment_id.into(), odds, raw: odds.forward * odds.backward, normalized: None })
    }

    /// Entailment holds clearly in one direction only. Diagnostic; the
    /// score itself is not adjusted.
    pub fn is_one_directional(&self) -> bool {
        let (hi, lo) = if self.odds.forward >= self.odds.backward {
            (self.odds.forward, self.odds.backward)
        } else {
            (self.odds.backward, self.odds.forward)
        };
        hi > ONE_DIRECTIONAL_RATIO * lo
    }

    /// The normalized value if a normalization pass ran, else `raw`.
    pub fn value(&self) -> f64 {
        self.normalized.unwrap_or(self.raw)
    }
}

/// Scores one candidate against one reference with two classifier calls.
pub fn segment_score<B: EntailmentBackend + ?Sized>(
    segment_id: &str,
    candidate: &str,
    reference: &str,
    backend: &B,
) -> Result<SegmentScore, MetricError> {
    let pairs = [PairRequest::new("forward", candidate, reference), PairRequest::new("backward", reference, candidate)];
    let dists = crate::nli::classify_batch(&pairs, backend)?;
    SegmentScore::from_probabilities(segment_id, dists[0].entailment, dists[1].entailment)
}

/// Picks the best-matching reference: maximal `raw`, first wins on ties.
pub fn reduce_references(scores: Vec<SegmentScore>) -> Option<SegmentScore> {
    scores.into_iter().reduce(|best, s| if s.raw > best.raw { s } else { best })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    #[default]
    None,
    Max,
    Mean,
    MinMax,
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationMode::None => "none",
            NormalizationMode::Max => "max",
            NormalizationMode::Mean => "mean",
            NormalizationMode::MinMax => "minmax",
        })
    }
}

impl FromStr for NormalizationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(NormalizationMode::None),
            "max" => Ok(NormalizationMode::Max),
            "mean" => Ok(NormalizationMode::Mean),
            "minmax" => Ok(NormalizationMode::MinMax),
            other => Err(format!("unknown normalization mode {other:?} (expected none, max, mean or minmax)")),
        }
    }
}

/// Sets `normalized` on every score, pooling statistics over the whole
/// slice. A degenerate pool (all raws equal) maps to 1.0 under max/mean and
/// to 0.0 under minmax.
pub fn normalize_scores(scores: &mut [SegmentScore], mode: NormalizationMode) {
    if scores.is_empty() {
        return;
    }
    let max = scores.iter().map(|s| s.raw).fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().map(|s| s.raw).fold(f64::INFINITY, f64::min);
    let mean = scores.iter().map(|s| s.raw).sum::<f64>() / scores.len() as f64;
    let degenerate = max == min;

    for s in scores.iter_mut() {
        let v = match mode {
            NormalizationMode::None => s.raw,
            NormalizationMode::Max if degenerate => 1.0,
            NormalizationMode::Max => s.raw / max,
            NormalizationMode::Mean if degenerate => 1.0,
            NormalizationMode::Mean => s.raw / mean,
            NormalizationMode::MinMax if degenerate => 0.0,
            NormalizationMode::MinMax => (s.raw - min) / (max - min),
        };
        s.normalized = Some(v);
    }
}

/// System-level score for any metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScore {
    #[serde(rename = "system")]
    pub system_name: String,
    #[serde(rename = "lang_pair")]
    pub language_pair: String,
    pub metric: String,
    pub value: f64,
    #[serde(rename = "n")]
    pub segment_count: usize,
}

impl SystemScore {
    /// Arithmetic mean of `values`; `None` for an empty slice.
    pub fn mean_of(system_name: &str, language_pair: &str, metric: &str, values: &[f64]) -> Option<SystemScore> {
        if values.is_empty() {
            return None;
        }
        Some(SystemScore {
            system_name: system_name.to_string(),
            language_pair: language_pair.to_string(),
            metric: metric.to_string(),
            value: values.iter().sum::<f64>() / values.len() as f64,
            segment_count: values.len(),
        })
    }
}

/// Per-segment output line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub system: String,
    pub lang_pair: String,
    pub segment_id: String,
    pub odds_f: f64,
    pub odds_b: f64,
    pub raw: f64,
    pub normalized: Option<f64>,
    pub one_directional: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSegments {
    pub system_name: String,
    pub scores: Vec<SegmentScore>,
}

/// Everything produced by scoring one evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    pub language_pair: String,
    pub mode: NormalizationMode,
    pub segments: Vec<SystemSegments>,
    pub systems: Vec<SystemScore>,
}

impl ScoredSet {
    pub fn segment_records(&self) -> impl Iterator<Item = SegmentRecord> + '_ {
        self.segments.iter().flat_map(move |sys| {
            sys.scores.iter().map(move |s| SegmentRecord {
                system: sys.system_name.clone(),
                lang_pair: self.language_pair.clone(),
                segment_id: s.segment_id.clone(),
                odds_f: s.odds.forward,
                odds_b: s.odds.backward,
                raw: s.raw,
                normalized: s.normalized,
                one_directional: s.is_one_directional(),
            })
        })
    }
}

fn intern_pair<'a>(
    index: &mut HashMap<(&'a str, &'a str), usize>,
    requests: &mut Vec<PairRequest>,
    premise: &'a str,
    hypothesis: &'a str,
) -> usize {
    *index.entry((premise, hypothesis)).or_insert_with(|| {
        requests.push(PairRequest::new(format!("p{}", requests.len()), premise, hypothesis));
        requests.len() - 1
    })
}

/// Scores every system of `set`.
///
/// All (premise, hypothesis) pairs of the set are deduplicated and sent
/// through [`classify_batch_concurrent`], so results do not depend on the
/// batching options. Normalization pools every segment of every system;
/// each system value is the mean of its segments' normalized scores.
pub fn system_score<B: EntailmentBackend + ?Sized>(
    set: &EvaluationSet,
    backend: &B,
    mode: NormalizationMode,
    options: BatchOptions,
) -> Result<ScoredSet, MetricError> {
    let mut requests: Vec<PairRequest> = Vec::new();
    let mut index: HashMap<(&str, &str), usize> = HashMap::new();

    // (forward idx, backward idx) per reference, per segment, per system.
    let mut plan: Vec<Vec<Vec<(usize, usize)>>> = Vec::with_capacity(set.systems.len());
    for system in &set.systems {
        let mut seg_plan = Vec::with_capacity(system.segments.len());
        for seg in &system.segments {
            let mut ref_plan = Vec::with_capacity(seg.references.len());
            for reference in &seg.references {
                let f = intern_pair(&mut index, &mut requests, &seg.candidate, reference);
                let b = intern_pair(&mut index, &mut requests, reference, &seg.candidate);
                ref_plan.push((f, b));
            }
            seg_plan.push(ref_plan);
        }
        plan.push(seg_plan);
    }
    if requests.is_empty() {
        return Err(MetricError::Empty);
    }

    let dists = classify_batch_concurrent(&requests, backend, options)?;

    let mut segments = Vec::with_capacity(set.systems.len());
    for (system, seg_plan) in set.systems.iter().zip(plan) {
        let mut scores = Vec::with_capacity(system.segments.len());
        for (seg, ref_plan) in system.segments.iter().zip(seg_plan) {
            let per_ref = ref_plan
                .into_iter()
                .map(|(f, b)| {
                    SegmentScore::from_probabilities(&seg.segment_id, dists[f].entailment, dists[b].entailment)
                })
                .collect::<Result<Vec<_>, _>>()?;
            scores.push(reduce_references(per_ref).ok_or(MetricError::Empty)?);
        }
        segments.push(SystemSegments { system_name: system.system_name.clone(), scores });
    }

    let mut pooled: Vec<SegmentScore> = segments.iter().flat_map(|s| s.scores.iter().cloned()).collect();
    normalize_scores(&mut pooled, mode);
    let mut pooled = pooled.into_iter();
    for sys in &mut segments {
        for s in &mut sys.scores {
            *s = pooled.next().expect("same length");
        }
    }

    let systems = segments
        .iter()
        .map(|sys| {
            let values: Vec<f64> = sys.scores.iter().map(SegmentScore::value).collect();
            SystemScore::mean_of(&sys.system_name, &set.language_pair, BIDENT_METRIC, &values).ok_or(MetricError::Empty)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ScoredSet { language_pair: set.language_pair.clone(), mode, segments, systems })
}
