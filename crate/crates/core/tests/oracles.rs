//! Closed forms checked against independently computed reference values.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use straggler::analytics::{
    compositions, coverage_probability, exact_expected_time_structure_exact,
    expected_max_of_exponentials, expected_time_assignment, expected_time_assignment_exact,
    expected_time_balanced, expected_time_balanced_exact, expected_time_cyclic,
    expected_time_cyclic_exact, harmonic, majorizes, stirling2, stirling2_row,
};
use straggler::model::{AssignmentVector, RecoveryStructure};
use straggler::policies::cyclic_layout;

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `E[max]` of independent exponentials with the given rates, by direct
/// inclusion-exclusion over every non-empty subset of them.
fn max_exponentials_oracle(rates: &[usize]) -> BigRational {
    let mut total = BigRational::zero();
    for mask in 1u32..(1 << rates.len()) {
        let sum: usize = (0..rates.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| rates[i])
            .sum();
        let term = ratio(1, sum as i64);
        if mask.count_ones() % 2 == 1 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

fn falling(x: u64, k: u64) -> BigUint {
    (0..k).map(|i| BigUint::from(x - i)).product()
}

#[test]
fn stirling_numbers_expand_powers() {
    // x^n = sum_k S(n, k) x(x-1)...(x-k+1)
    for n in 0..=12u64 {
        let row = stirling2_row(n);
        for x in 0..=8u64 {
            let lhs: BigUint = (0..=n.min(x))
                .map(|k| &row[k as usize] * falling(x, k))
                .sum();
            assert_eq!(lhs, BigUint::from(x).pow(n as u32), "n={n} x={x}");
        }
    }
}

#[test]
fn stirling_known_values() {
    assert_eq!(stirling2(10, 3), BigUint::from(9330u32));
    assert_eq!(stirling2(12, 6), BigUint::from(1_323_652u32));
    assert_eq!(stirling2(7, 7), BigUint::one());
    assert_eq!(stirling2(7, 0), BigUint::zero());
}

#[test]
fn coverage_approaches_one_with_many_workers() {
    let p = coverage_probability(3, 60).unwrap().value();
    assert!(p > 1.0 - 3.0 * (2.0f64 / 3.0).powi(60) - 1e-12);
    assert!(p < 1.0);
}

#[test]
fn max_of_exponentials_is_harmonic() {
    for m in 1..=30u64 {
        assert_eq!(
            expected_max_of_exponentials(m as usize),
            harmonic(m).unwrap().exact
        );
    }
}

#[test]
fn assignment_formula_matches_subset_oracle() {
    for (n, b) in [(6, 3), (7, 3), (8, 4), (9, 2), (10, 4)] {
        for counts in compositions(n, b) {
            let v = AssignmentVector::new(counts.clone()).unwrap();
            assert_eq!(
                expected_time_assignment_exact(&v).unwrap(),
                max_exponentials_oracle(&counts),
                "{counts:?}"
            );
        }
    }
}

#[test]
fn assignment_formula_matches_structure_enumeration() {
    for (n, b) in [(4, 2), (6, 3), (8, 3), (9, 4)] {
        for counts in compositions(n, b) {
            let v = AssignmentVector::new(counts.clone()).unwrap();
            let replicas = RecoveryStructure::Replicas(v.replica_sets());
            let groups = RecoveryStructure::Groups(replicas.expand_groups(1 << 20).unwrap());
            let closed = expected_time_assignment_exact(&v).unwrap();
            assert_eq!(
                exact_expected_time_structure_exact(&replicas, n).unwrap(),
                closed
            );
            assert_eq!(
                exact_expected_time_structure_exact(&groups, n).unwrap(),
                closed
            );
        }
    }
}

#[test]
fn cyclic_formula_matches_structure_enumeration() {
    for n in 1..=12usize {
        for b in (1..=n).filter(|b| n % b == 0) {
            let (_, rs) = cyclic_layout(n, b).unwrap();
            assert_eq!(
                expected_time_cyclic_exact(n, b).unwrap(),
                exact_expected_time_structure_exact(&rs, n).unwrap(),
                "N={n} B={b}"
            );
        }
    }
}

#[test]
fn small_cases_by_hand() {
    // Two batches, one worker each: E[max of two Exp(1)] = 3/2.
    assert_eq!(expected_time_balanced_exact(2, 2).unwrap(), ratio(3, 2));
    // One batch: fastest of N workers.
    assert_eq!(expected_time_balanced_exact(5, 1).unwrap(), ratio(1, 5));
    // Cyclic with a single group is the slowest of all workers.
    assert_eq!(expected_time_cyclic_exact(3, 3).unwrap(), ratio(11, 6));
    // (3,2,1): 1/3 + 1/2 + 1 - 1/5 - 1/4 - 1/3 + 1/6 = 73/60.
    let v = AssignmentVector::new(vec![3, 2, 1]).unwrap();
    assert_eq!(expected_time_assignment_exact(&v).unwrap(), ratio(73, 60));
}

#[test]
fn fifty_worker_reference_values() {
    let h25 = harmonic(25).unwrap().value;
    let h50 = harmonic(50).unwrap().value;
    let balanced = expected_time_balanced(50, 25, 1.0).unwrap();
    assert!((balanced - 0.5 * h25).abs() < 1e-12);
    assert!((balanced - 1.907_979).abs() < 1e-6);
    let cyclic = expected_time_cyclic(50, 25, 1.0).unwrap();
    assert!((cyclic - (2.0 * h25 - h50)).abs() < 1e-12);
    assert!((cyclic - 3.132_72).abs() < 1e-5);
}

#[test]
fn time_scales_inversely_with_rate() {
    let v = AssignmentVector::new(vec![4, 1, 2]).unwrap();
    let base = expected_time_assignment(&v, 1.0).unwrap();
    for rate in [0.1, 0.5, 3.0, 17.0] {
        let t = expected_time_assignment(&v, rate).unwrap();
        assert!((t * rate - base).abs() < 1e-12 * base);
        let c = expected_time_cyclic(12, 4, rate).unwrap();
        assert!((c * rate - expected_time_cyclic(12, 4, 1.0).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn balanced_is_never_beaten_by_cyclic() {
    for n in 1..=24usize {
        for b in (1..=n).filter(|b| n % b == 0) {
            let bal = expected_time_balanced_exact(n, b).unwrap();
            let cyc = expected_time_cyclic_exact(n, b).unwrap();
            if b == 1 || b == n {
                assert_eq!(bal, cyc, "N={n} B={b}");
            } else {
                assert!(bal < cyc, "N={n} B={b}");
            }
        }
    }
}

#[test]
fn exact_values_are_positive_and_finite() {
    let big = expected_time_cyclic_exact(600, 300).unwrap();
    let f = big.to_f64().unwrap();
    assert!(f.is_finite() && f > 0.0);
    assert!(big > BigRational::from(BigInt::zero()));
}

#[test]
fn majorization_monotonicity_exhaustive() {
    for n in 1..=10 {
        for b in 1..=5.min(n) {
            let vectors = compositions(n, b);
            let times: Vec<BigRational> = vectors
                .iter()
                .map(|v| {
                    expected_time_assignment_exact(&AssignmentVector::new(v.clone()).unwrap())
                        .unwrap()
                })
                .collect();
            for (v, tv) in vectors.iter().zip(&times) {
                for (w, tw) in vectors.iter().zip(&times) {
                    if majorizes(v, w).unwrap() {
                        assert!(tv >= tw, "{v:?} vs {w:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn balanced_is_the_strict_minimum() {
    for n in 1..=12 {
        for b in (1..=n).filter(|b| n % b == 0) {
            let best = expected_time_balanced_exact(n, b).unwrap();
            for v in compositions(n, b) {
                let t = expected_time_assignment_exact(&AssignmentVector::new(v.clone()).unwrap())
                    .unwrap();
                if v.iter().all(|&c| c == n / b) {
                    assert_eq!(t, best);
                } else {
                    assert!(t > best, "N={n} {v:?}");
                }
            }
        }
    }
}

fn vector_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..6, 1..7)
}

proptest! {
    #[test]
    fn majorization_never_speeds_up(a in vector_strategy(), seed in any::<u64>()) {
        // Build w with the same length and total by moving units between entries.
        let mut w = a.clone();
        let len = w.len();
        let mut s = seed;
        for _ in 0..4 {
            let i = (s % len as u64) as usize;
            s = s.rotate_left(7) ^ 0x9e37_79b9;
            let j = (s % len as u64) as usize;
            s = s.rotate_left(13).wrapping_mul(31);
            if w[i] > 1 {
                w[i] -= 1;
                w[j] += 1;
            }
        }
        let tv = expected_time_assignment_exact(&AssignmentVector::new(a.clone()).unwrap()).unwrap();
        let tw = expected_time_assignment_exact(&AssignmentVector::new(w.clone()).unwrap()).unwrap();
        if majorizes(&a, &w).unwrap() {
            prop_assert!(tv >= tw);
        }
        if majorizes(&w, &a).unwrap() {
            prop_assert!(tw >= tv);
        }
    }

    #[test]
    fn balanced_is_a_lower_bound(b in 1usize..6, extra in prop::collection::vec(0usize..4, 6)) {
        let per = 1 + extra[0];
        let n = per * b;
        let bound = expected_time_balanced_exact(n, b).unwrap();
        let mut counts = vec![per; b];
        // Shift workers away from batch 0 where possible.
        for (k, e) in extra.iter().enumerate().skip(1) {
            let from = k % b;
            let to = (k + 1) % b;
            let moved = (*e).min(counts[from] - 1);
            counts[from] -= moved;
            counts[to] += moved;
        }
        let t = expected_time_assignment_exact(&AssignmentVector::new(counts).unwrap()).unwrap();
        prop_assert!(t >= bound);
    }
}
