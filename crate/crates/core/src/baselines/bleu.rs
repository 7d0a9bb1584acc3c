use std::collections::HashMap;

use super::{BaselineError, TokenSequence};

/// Sufficient statistics for corpus BLEU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BleuStats {
    /// Clipped n-gram matches, index 0 = unigrams.
    pub matches: Vec<usize>,
    /// Candidate n-gram counts, index 0 = unigrams.
    pub totals: Vec<usize>,
    pub candidate_len: usize,
    /// Sum over segments of the reference length closest to the candidate
    /// length (shorter one on ties).
    pub reference_len: usize,
}

impl BleuStats {
    /// Modified precision for order `n` (1-based); 0 when there are no
    /// candidate n-grams of that order.
    pub fn precision(&self, n: usize) -> f64 {
        let total = self.totals[n - 1];
        if total == 0 {
            0.0
        } else {
            self.matches[n - 1] as f64 / total as f64
        }
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.candidate_len == 0 {
            0.0
        } else if self.candidate_len >= self.reference_len {
            1.0
        } else {
            (1.0 - self.reference_len as f64 / self.candidate_len as f64).exp()
        }
    }

    /// Unsmoothed BLEU: zero as soon as one order has no match.
    pub fn score(&self) -> f64 {
        let orders = self.matches.len();
        if self.matches.contains(&0) {
            return 0.0;
        }
        let log_mean = (1..=orders).map(|n| self.precision(n).ln()).sum::<f64>() / orders as f64;
        log_mean.exp() * self.brevity_penalty()
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn closest_length(candidate_len: usize, references: &[TokenSequence]) -> usize {
    references.iter().map(TokenSequence::len).min_by_key(|&len| (len.abs_diff(candidate_len), len)).unwrap_or(0)
}

pub fn bleu_stats(
    candidates: &[TokenSequence],
    references: &[Vec<TokenSequence>],
    max_n: usize,
) -> Result<BleuStats, BaselineError> {
    if candidates.len() != references.len() {
        return Err(BaselineError::LengthMismatch { candidates: candidates.len(), references: references.len() });
    }
    if candidates.is_empty() {
        return Err(BaselineError::EmptyCorpus);
    }
    if max_n == 0 {
        return Err(BaselineError::BadOrder);
    }

    let mut stats = BleuStats { matches: vec![0; max_n], totals: vec![0; max_n], candidate_len: 0, reference_len: 0 };
    for (cand, refs) in candidates.iter().zip(references) {
        if refs.is_empty() {
            return Err(BaselineError::NoReferences);
        }
        stats.candidate_len += cand.len();
        stats.reference_len += closest_length(cand.len(), refs);

        for n in 1..=max_n {
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in refs {
                for (gram, count) in ngram_counts(r.tokens(), n) {
                    let slot = max_ref.entry(gram).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
            for (gram, count) in ngram_counts(cand.tokens(), n) {
                stats.totals[n - 1] += count;
                stats.matches[n - 1] += count.min(max_ref.get(gram).copied().unwrap_or(0));
            }
        }
    }
    Ok(stats)
}

/// Corpus-level BLEU with n-gram orders `1..=max_n`.
pub fn bleu(
    candidates: &[TokenSequence],
    references: &[Vec<TokenSequence>],
    max_n: usize,
) -> Result<f64, BaselineError> {
    bleu_stats(candidates, references, max_n).map(|s| s.score())
}
