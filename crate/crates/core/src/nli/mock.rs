use std::collections::HashSet;

use super::{EntailmentBackend, EntailmentDistribution, NliError, PairRequest};

pub const MOCK_MODEL_ID: &str = "mock-v1";

/// Deterministic stand-in for an NLI model.
///
/// P(entailment) is the fraction of the hypothesis' distinct lowercase
/// tokens that also occur in the premise, clamped to [0.01, 0.99]. The rest
/// of the mass is split 0.7 neutral / 0.3 contradiction. Coverage is
/// directional, so "a b c d" entails "a b" but not the other way round.
pub fn mock_classify(premise: &str, hypothesis: &str) -> Result<EntailmentDistribution, NliError> {
    let hyp = token_set(hypothesis);
    if hyp.is_empty() {
        return Err(NliError::EmptyHypothesis);
    }
    let prem = token_set(premise);
    let covered = hyp.intersection(&prem).count();
    let entailment = (covered as f64 / hyp.len() as f64).clamp(0.01, 0.99);
    let rest = 1.0 - entailment;
    Ok(EntailmentDistribution { contradiction: 0.3 * rest, entailment, neutral: 0.7 * rest })
}

fn token_set(text: &str) -> HashSet<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

#[derive(Debug, Default, Clone)]
pub struct MockBackend;

impl MockBackend {
    pub fn new() -> Self {
        MockBackend
    }
}

impl EntailmentBackend for MockBackend {
    fn model_id(&self) -> &str {
        MOCK_MODEL_ID
    }

    fn classify_batch(&self, pairs: &[PairRequest]) -> Result<Vec<EntailmentDistribution>, NliError> {
        pairs.iter().map(|p| mock_classify(&p.premise, &p.hypothesis)).collect()
    }
}
