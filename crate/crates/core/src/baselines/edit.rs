//! Edit-distance based error rates.

use std::collections::HashMap;

use super::{BaselineError, TokenSequence};

/// Longest block the TER shift search will move.
pub const TER_MAX_SHIFT_LEN: usize = 10;

/// Levenshtein distance with unit costs, two-row DP.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn reference_len(reference: &TokenSequence) -> Result<f64, BaselineError> {
    if reference.is_empty() {
        Err(BaselineError::EmptyReference)
    } else {
        Ok(reference.len() as f64)
    }
}

/// Word error rate: edit distance over reference length.
pub fn wer(candidate: &TokenSequence, reference: &TokenSequence) -> Result<f64, BaselineError> {
    let len = reference_len(reference)?;
    Ok(edit_distance(candidate.tokens(), reference.tokens()) as f64 / len)
}

/// Position-independent error rate:
/// `1 - (matches - max(0, |c| - |r|)) / |r|`, floored at 0, where matches
/// is the bag-of-words overlap.
pub fn per(candidate: &TokenSequence, reference: &TokenSequence) -> Result<f64, BaselineError> {
    let len = reference_len(reference)?;
    let mut bag: HashMap<&str, usize> = HashMap::new();
    for t in reference.tokens() {
        *bag.entry(t).or_insert(0) += 1;
    }
    let mut matches = 0usize;
    for t in candidate.tokens() {
        if let Some(n) = bag.get_mut(t.as_str()) {
            if *n > 0 {
                *n -= 1;
                matches += 1;
            }
        }
    }
    let excess = candidate.len().saturating_sub(reference.len());
    Ok((1.0 - (matches as f64 - excess as f64) / len).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TerAlignment {
    /// Residual edit distance after all shifts.
    pub edits: usize,
    pub shifts: usize,
}

/// DP rows of `a` against `b`: `rows[i]` is the distance row for `a[..i]`.
fn prefix_rows(a: &[&str], b: &[&str]) -> Vec<Vec<usize>> {
    let mut rows = Vec::with_capacity(a.len() + 1);
    rows.push((0..=b.len()).collect::<Vec<_>>());
    for (i, x) in a.iter().enumerate() {
        let prev = &rows[i];
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        rows.push(cur);
    }
    rows
}

/// Distance of `a` to `b` when it is below `limit`, continuing from `start`,
/// the DP row of `a[..skip]`. Row minima never decrease, so the DP stops as
/// soon as one reaches `limit`.
fn distance_below(
    a: &[&str],
    b: &[&str],
    skip: usize,
    start: &[usize],
    limit: usize,
    scratch: &mut (Vec<usize>, Vec<usize>),
) -> Option<usize> {
    let (prev, cur) = scratch;
    prev.clear();
    prev.extend_from_slice(start);
    cur.resize(b.len() + 1, 0);
    for (i, x) in a.iter().enumerate().skip(skip) {
        cur[0] = i + 1;
        let mut row_min = cur[0];
        for (j, y) in b.iter().enumerate() {
            let v = (prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1);
            cur[j + 1] = v;
            row_min = row_min.min(v);
        }
        if row_min >= limit {
            return None;
        }
        std::mem::swap(prev, cur);
    }
    let d = prev[b.len()];
    (d < limit).then_some(d)
}

/// Greedy TER search.
///
/// Each round tries every block of up to [`TER_MAX_SHIFT_LEN`] candidate
/// words that also occurs contiguously in the reference, moved to every
/// other position, and applies the move with the largest drop in edit
/// distance (the first one found on ties). Rounds stop when no move lowers
/// the distance. Because every accepted shift removes at least one edit,
/// `edits + shifts` never exceeds the plain edit distance.
pub fn ter_alignment(candidate: &[String], reference: &[String]) -> TerAlignment {
    let mut current: Vec<&str> = candidate.iter().map(String::as_str).collect();
    let target: Vec<&str> = reference.iter().map(String::as_str).collect();
    let mut distance = edit_distance(&current, &target);
    let mut shifts = 0;
    let mut scratch = (Vec::new(), Vec::new());
    let mut shifted: Vec<&str> = Vec::with_capacity(current.len());

    while distance > 0 {
        let rows = prefix_rows(&current, &target);
        let mut best: Option<(usize, usize, usize, usize)> = None;
        for start in 0..current.len() {
            for len in 1..=TER_MAX_SHIFT_LEN.min(current.len() - start) {
                let block = &current[start..start + len];
                if !target.windows(len).any(|w| w == block) {
                    // any longer block starting here contains this one
                    break;
                }
                let rest_len = current.len() - len;
                for dest in 0..=rest_len {
                    if dest == start {
                        continue;
                    }
                    shifted.clear();
                    if dest < start {
                        shifted.extend_from_slice(&current[..dest]);
                        shifted.extend_from_slice(block);
                        shifted.extend_from_slice(&current[dest..start]);
                        shifted.extend_from_slice(&current[start + len..]);
                    } else {
                        shifted.extend_from_slice(&current[..start]);
                        shifted.extend_from_slice(&current[start + len..dest + len]);
                        shifted.extend_from_slice(block);
                        shifted.extend_from_slice(&current[dest + len..]);
                    }
                    // the first min(start, dest) words are unchanged
                    let skip = start.min(dest);
                    let limit = best.map_or(distance, |(bd, ..)| bd);
                    if let Some(d) = distance_below(&shifted, &target, skip, &rows[skip], limit, &mut scratch) {
                        best = Some((d, start, len, dest));
                    }
                }
            }
        }
        match best {
            Some((d, start, len, dest)) => {
                let moved: Vec<&str> = current.drain(start..start + len).collect();
                current.splice(dest..dest, moved);
                distance = d;
                shifts += 1;
            }
            None => break,
        }
    }
    TerAlignment { edits: distance, shifts }
}

/// Translation edit rate: `(edits + shifts) / |reference|`.
pub fn ter(candidate: &TokenSequence, reference: &TokenSequence) -> Result<f64, BaselineError> {
    let len = reference_len(reference)?;
    let a = ter_alignment(candidate.tokens(), reference.tokens());
    Ok((a.edits + a.shifts) as f64 / len)
}
