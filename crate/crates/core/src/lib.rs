//! Machine-translation evaluation by bidirectional entailment.
//!
//! A candidate translation is scored against its reference by asking an
//! entailment classifier for P(entailment) in both directions, turning each
//! probability into odds and multiplying them. Segment scores are averaged
//! into system scores, which are then correlated against human judgments
//! alongside classical baselines (BLEU, WER, PER, TER).
//!
//! Module map:
//!
//! - [`corpus`]: evaluation data model and JSONL / plain-text ingestion.
//! - [`nli`]: classifier backends (HTTP client, deterministic mock, cache).
//! - [`bidient`]: odds, segment and system scoring, normalization.
//! - [`baselines`]: BLEU, WER, PER and TER.
//! - [`stats`]: Pearson, Spearman, paired t-test and correlation reports.

pub mod baselines;
pub mod bidient;
pub mod corpus;
pub mod nli;
pub mod stats;

pub use baselines::{BaselineMetric, TokenSequence};
pub use bidient::{DirectionalOdds, NormalizationMode, ScoredSet, SegmentScore, SystemScore, BIDENT_METRIC};
pub use corpus::{EvaluationSet, HumanScore, Issue, IssueCode, Segment, Severity, SystemRecord};
pub use nli::{BackendDescriptor, BackendKind, BatchOptions, EntailmentBackend, EntailmentDistribution, PairRequest};
pub use stats::{CorrelationReport, PairedSample};
