//! Exact expected completion times under i.i.d. `Exp(rate)` service.
//!
//! Everything is computed at unit rate as an exact rational and converted to
//! `f64` only at the end, then divided by the rate. This keeps the
//! alternating sums free of cancellation error.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

use super::combinatorics::{binomial, factorial, harmonic_exact, harmonic_table, to_f64};
use crate::error::{Error, Result};
use crate::model::{check_rate, AssignmentVector, RecoveryStructure};

/// Largest number of batches accepted by [`expected_time_assignment`].
pub const MAX_ASSIGNMENT_BATCHES: usize = 25;

/// Largest worker count accepted by [`exact_expected_time_structure`].
pub const MAX_STRUCTURE_WORKERS: usize = 24;

fn check_divides(n_workers: usize, n_batches: usize) -> Result<()> {
    if n_workers == 0 {
        return Err(Error::NonPositive { what: "n_workers" });
    }
    if n_batches == 0 {
        return Err(Error::NonPositive { what: "n_batches" });
    }
    if !n_workers.is_multiple_of(n_batches) {
        return Err(Error::NonDivisible {
            what: "replicas per batch N/B",
            divisor: n_batches,
            dividend: n_workers,
        });
    }
    Ok(())
}

/// Balanced assignment lower bound `(B / (N·rate))·H_B`.
pub fn expected_time_balanced(n_workers: usize, n_batches: usize, rate: f64) -> Result<f64> {
    check_rate(rate)?;
    Ok(to_f64(&expected_time_balanced_exact(n_workers, n_batches)?) / rate)
}

/// [`expected_time_balanced`] at unit rate, exactly.
pub fn expected_time_balanced_exact(n_workers: usize, n_batches: usize) -> Result<BigRational> {
    check_divides(n_workers, n_batches)?;
    let scale = BigRational::new(BigInt::from(n_batches), BigInt::from(n_workers));
    Ok(scale * harmonic_exact(n_batches as u64))
}

/// `E[max_i T_i]` with independent `T_i ~ Exp(N_i·rate)`.
///
/// Inclusion–exclusion over subsets `U` of batches,
/// `Σ_U (-1)^{|U|+1} / (rate·Σ_{i∈U} N_i)`, with the subsets grouped by
/// their replica total so only `O(B·N)` signed counts are needed.
pub fn expected_time_assignment(v: &AssignmentVector, rate: f64) -> Result<f64> {
    check_rate(rate)?;
    Ok(to_f64(&expected_time_assignment_exact(v)?) / rate)
}

/// [`expected_time_assignment`] at unit rate, exactly.
pub fn expected_time_assignment_exact(v: &AssignmentVector) -> Result<BigRational> {
    v.require_covering()?;
    if v.n_batches() > MAX_ASSIGNMENT_BATCHES {
        return Err(Error::ComplexityGuard(format!(
            "inclusion-exclusion is limited to {MAX_ASSIGNMENT_BATCHES} batches, got {}",
            v.n_batches()
        )));
    }
    // signed[s] = Σ_{U : Σ N_i = s} (-1)^{|U|}, i.e. coefficients of Π (1 - x^{N_i}).
    let total = v.n_workers();
    let mut signed = vec![0i64; total + 1];
    signed[0] = 1;
    let mut reach = 0;
    for &c in v.counts() {
        for s in (0..=reach).rev() {
            if signed[s] != 0 {
                signed[s + c] -= signed[s];
            }
        }
        reach += c;
    }
    let mut sum = BigRational::zero();
    for (s, &c) in signed.iter().enumerate().skip(1) {
        if c != 0 {
            sum += BigRational::new(BigInt::from(-c), BigInt::from(s));
        }
    }
    Ok(sum)
}

/// Cyclic batching: the job time is the minimum over `G = N/B` disjoint
/// groups of the maximum over each group's `B` workers, so
/// `E[T] = (1/rate)·Σ_{j=1..G} (-1)^{j+1}·C(G, j)·H_{jB}`.
pub fn expected_time_cyclic(n_workers: usize, n_batches: usize, rate: f64) -> Result<f64> {
    check_rate(rate)?;
    Ok(to_f64(&expected_time_cyclic_exact(n_workers, n_batches)?) / rate)
}

/// [`expected_time_cyclic`] at unit rate, exactly.
pub fn expected_time_cyclic_exact(n_workers: usize, n_batches: usize) -> Result<BigRational> {
    check_divides(n_workers, n_batches)?;
    let groups = (n_workers / n_batches) as u64;
    let h = harmonic_table(n_workers as u64);
    let mut sum = BigRational::zero();
    for j in 1..=groups {
        let term = BigRational::from_integer(BigInt::from(binomial(groups, j)))
            * &h[(j as usize) * n_batches];
        if j % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(sum)
}

/// `a_k`: number of `k`-subsets of the `n_workers` workers whose completion
/// does not finish the job, for `k = 0..=n_workers`.
pub fn incomplete_subset_counts(rs: &RecoveryStructure, n_workers: usize) -> Result<Vec<u64>> {
    rs.check_nonempty()?;
    if n_workers > MAX_STRUCTURE_WORKERS {
        return Err(Error::ComplexityGuard(format!(
            "subset enumeration is limited to {MAX_STRUCTURE_WORKERS} workers, got {n_workers}"
        )));
    }
    if rs.min_workers() > n_workers {
        return Err(Error::domain(format!(
            "structure references worker {} but only {n_workers} workers exist",
            rs.min_workers() - 1
        )));
    }
    let masks: Vec<u32> = rs
        .sets()
        .iter()
        .map(|s| s.iter().fold(0u32, |m, &w| m | (1 << w)))
        .collect();
    let size = 1usize << n_workers;
    let mut counts = vec![0u64; n_workers + 1];
    match rs {
        RecoveryStructure::Groups(_) => {
            // complete[m]: m contains some group. Superset closure, one bit at a time.
            let mut complete = vec![false; size];
            for &g in &masks {
                complete[g as usize] = true;
            }
            for bit in 0..n_workers {
                let b = 1usize << bit;
                for m in 0..size {
                    if m & b != 0 && complete[m ^ b] {
                        complete[m] = true;
                    }
                }
            }
            for (m, done) in complete.iter().enumerate() {
                if !done {
                    counts[m.count_ones() as usize] += 1;
                }
            }
        }
        RecoveryStructure::Replicas(_) => {
            for m in 0..size as u32 {
                if masks.iter().any(|&r| m & r == 0) {
                    counts[m.count_ones() as usize] += 1;
                }
            }
        }
    }
    Ok(counts)
}

/// Exact `E[T]` for an arbitrary recovery structure by subset enumeration:
/// `(1/rate)·Σ_{k<N} a_k·k!·(N-k-1)!/N!`, where `a_k` is given by
/// [`incomplete_subset_counts`]. Costs `O(N·2^N)`.
pub fn exact_expected_time_structure(
    rs: &RecoveryStructure,
    n_workers: usize,
    rate: f64,
) -> Result<f64> {
    check_rate(rate)?;
    Ok(to_f64(&exact_expected_time_structure_exact(rs, n_workers)?) / rate)
}

/// [`exact_expected_time_structure`] at unit rate, exactly.
pub fn exact_expected_time_structure_exact(
    rs: &RecoveryStructure,
    n_workers: usize,
) -> Result<BigRational> {
    let a = incomplete_subset_counts(rs, n_workers)?;
    if a[n_workers] != 0 {
        return Err(Error::domain(
            "the job cannot complete even with every worker finished",
        ));
    }
    let n = n_workers as u64;
    let mut num = BigUint::zero();
    for (k, &count) in a.iter().enumerate().take(n_workers) {
        if count != 0 {
            let k = k as u64;
            num += BigUint::from(count) * factorial(k) * factorial(n - k - 1);
        }
    }
    Ok(BigRational::new(
        BigInt::from(num),
        BigInt::from(factorial(n)),
    ))
}

/// Unit-rate value of `E[max of m i.i.d. Exp(1)] = H_m`; exposed for symmetry in reports.
pub fn expected_max_of_exponentials(m: usize) -> BigRational {
    if m == 0 {
        return BigRational::zero();
    }
    harmonic_exact(m as u64)
}
