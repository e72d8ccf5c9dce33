//! Closed-form and exactly enumerated quantities.

mod combinatorics;
mod coverage;
mod latency;
mod majorization;

pub use combinatorics::{
    binomial, factorial, harmonic, harmonic_exact, stirling2, stirling2_explicit, stirling2_row,
    Harmonic,
};
pub use coverage::{coverage_probability, coverage_probability_exact_n, ExactProbability};
pub use latency::{
    exact_expected_time_structure, exact_expected_time_structure_exact,
    expected_max_of_exponentials, expected_time_assignment, expected_time_assignment_exact,
    expected_time_balanced, expected_time_balanced_exact, expected_time_cyclic,
    expected_time_cyclic_exact, incomplete_subset_counts, MAX_ASSIGNMENT_BATCHES,
    MAX_STRUCTURE_WORKERS,
};
pub use majorization::{is_balanced_minimal, majorizes, rearranged};

/// All vectors of `n_batches` positive entries summing to `n_workers`, in
/// lexicographic order.
pub fn compositions(n_workers: usize, n_batches: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 1..=left.saturating_sub(parts - 1) {
            cur.push(first);
            rec(left - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n_batches >= 1 && n_workers >= n_batches {
        rec(n_workers, n_batches, &mut Vec::new(), &mut out);
    }
    out
}
