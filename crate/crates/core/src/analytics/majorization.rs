//! Majorization order on replica-count vectors.

use crate::error::{Error, Result};
use crate::model::AssignmentVector;

/// The same multiset, sorted non-increasing.
pub fn rearranged(v: &[usize]) -> Vec<usize> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| b.cmp(a));
    out
}

/// `v ⪰ w`: equal totals and every prefix sum of `rearranged(v)` is at least
/// the matching prefix sum of `rearranged(w)`.
pub fn majorizes(v: &[usize], w: &[usize]) -> Result<bool> {
    if v.len() != w.len() {
        return Err(Error::domain(format!(
            "majorization needs equal lengths, got {} and {}",
            v.len(),
            w.len()
        )));
    }
    let (rv, rw) = (rearranged(v), rearranged(w));
    let (mut sv, mut sw) = (0usize, 0usize);
    for (a, b) in rv.iter().zip(&rw) {
        sv += a;
        sw += b;
        if sv < sw {
            return Ok(false);
        }
    }
    Ok(sv == sw)
}

/// True iff `v` is `(N/B, ..., N/B)`, the unique vector majorized by every
/// other vector with the same length and total.
pub fn is_balanced_minimal(v: &AssignmentVector) -> bool {
    let counts = v.counts();
    counts.iter().all(|&c| c == counts[0])
}
