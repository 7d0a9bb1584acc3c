//! Classical lexical metrics computed on the same corpora as the entailment
//! metric, so their system-level correlations can be compared.
//!
//! All baselines share one tokenization: lowercase, then split on
//! whitespace.

mod bleu;
mod edit;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bidient::SystemScore;
use crate::corpus::EvaluationSet;

pub use bleu::{bleu, bleu_stats, BleuStats};
pub use edit::{edit_distance, per, ter, ter_alignment, wer, TerAlignment, TER_MAX_SHIFT_LEN};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("{candidates} candidates but {references} reference sets")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("max n-gram order must be at least 1")]
    BadOrder,
    #[error("segment has no references")]
    NoReferences,
    #[error("empty reference")]
    EmptyReference,
    #[error("empty token")]
    EmptyToken,
    #[error("unsupported metric {0:?}")]
    UnsupportedMetric(String),
}

/// Lowercased whitespace tokens. Never contains an empty token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Result<Self, BaselineError> {
        if tokens.iter().any(String::is_empty) {
            return Err(BaselineError::EmptyToken);
        }
        Ok(TokenSequence(tokens))
    }

    pub fn from_text(text: &str) -> Self {
        TokenSequence(text.split_whitespace().map(str::to_lowercase).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaselineMetric {
    Bleu,
    Wer,
    Per,
    Ter,
}

impl BaselineMetric {
    pub const ALL: [BaselineMetric; 4] =
        [BaselineMetric::Bleu, BaselineMetric::Wer, BaselineMetric::Per, BaselineMetric::Ter];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMetric::Bleu => "bleu",
            BaselineMetric::Wer => "wer",
            BaselineMetric::Per => "per",
            BaselineMetric::Ter => "ter",
        }
    }

    pub fn is_error_rate(self) -> bool {
        !matches!(self, BaselineMetric::Bleu)
    }
}

impl fmt::Display for BaselineMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMetric {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaselineMetric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| BaselineError::UnsupportedMetric(s.to_string()))
    }
}

/// True for metric names where lower is better (WER, PER, TER).
pub fn is_error_rate_metric(name: &str) -> bool {
    name.parse::<BaselineMetric>().is_ok_and(BaselineMetric::is_error_rate)
}

/// Scores each system of `set` with a baseline.
///
/// BLEU is corpus-level over all of a system's segments and references.
/// Error rates are computed per segment, taking the minimum over
/// references, and averaged. Values are reported as-is (error rates are not
/// negated here).
pub fn baseline_system_score(set: &EvaluationSet, metric: BaselineMetric) -> Result<Vec<SystemScore>, BaselineError> {
    set.systems
        .iter()
        .map(|system| {
            let candidates: Vec<TokenSequence> =
                system.segments.iter().map(|s| TokenSequence::from_text(&s.candidate)).collect();
            let references: Vec<Vec<TokenSequence>> = system
                .segments
                .iter()
                .map(|s| s.references.iter().map(|r| TokenSequence::from_text(r)).collect())
                .collect();

            let (value, n) = match metric {
                BaselineMetric::Bleu => (bleu(&candidates, &references, 4)?, candidates.len()),
                _ => {
                    let rate = match metric {
                        BaselineMetric::Wer => wer,
                        BaselineMetric::Per => per,
                        _ => ter,
                    };
                    let rates = candidates
                        .iter()
                        .zip(&references)
                        .map(|(c, refs)| {
                            refs.iter()
                                .map(|r| rate(c, r))
                                .try_fold(f64::INFINITY, |best, x| x.map(|x| best.min(x)))
                                .and_then(
                                    |best| if best.is_finite() { Ok(best) } else { Err(BaselineError::NoReferences) },
                                )
                        })
                        .collect::<Result<Vec<f64>, _>>()?;
                    if rates.is_empty() {
                        return Err(BaselineError::EmptyCorpus);
                    }
                    (rates.iter().sum::<f64>() / rates.len() as f64, rates.len())
                }
            };
            Ok(SystemScore {
                system_name: system.system_name.clone(),
                language_pair: set.language_pair.clone(),
                metric: metric.name().to_string(),
                value,
                segment_count: n,
            })
        })
        .collect()
}
