//! Exact integer and rational helpers: harmonic numbers, binomials and
//! Stirling numbers of the second kind.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A harmonic number `H_n`, exactly and as the nearest `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonic {
    pub exact: BigRational,
    pub value: f64,
}

/// `H_n = 1 + 1/2 + ... + 1/n`.
pub fn harmonic(n: u64) -> Result<Harmonic> {
    if n == 0 {
        return Err(Error::domain("harmonic number needs n >= 1"));
    }
    let exact = harmonic_exact(n);
    let value = to_f64(&exact);
    Ok(Harmonic { exact, value })
}

/// `H_n` as a rational; `H_0 = 0`.
pub fn harmonic_exact(n: u64) -> BigRational {
    harmonic_table(n).pop().unwrap_or_else(BigRational::zero)
}

/// `[H_0, H_1, ..., H_n]`.
pub fn harmonic_table(n: u64) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = BigRational::zero();
    out.push(acc.clone());
    for k in 1..=n {
        acc += BigRational::new(BigInt::one(), BigInt::from(k));
        out.push(acc.clone());
    }
    out
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    // Each partial product is itself a binomial coefficient, so the division is exact.
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// Stirling number of the second kind `S(n, k)`, via
/// `S(n, k) = k·S(n-1, k) + S(n-1, k-1)`. Zero when `k > n`.
pub fn stirling2(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    stirling2_row(n).swap_remove(k as usize)
}

/// Row `[S(n, 0), ..., S(n, n)]` of the recurrence table.
pub fn stirling2_row(n: u64) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for m in 1..=n as usize {
        let mut next = vec![BigUint::zero(); m + 1];
        for k in 1..=m {
            let stay = if k < m { &row[k] * k } else { BigUint::zero() };
            next[k] = stay + &row[k - 1];
        }
        row = next;
    }
    row
}

/// `S(n, k) = (1/k!) Σ_{i=0..k} (-1)^{k-i} C(k, i) i^n`, the explicit
/// alternating-sum form.
pub fn stirling2_explicit(n: u64, k: u64) -> BigUint {
    let mut sum = BigInt::zero();
    for i in 0..=k {
        let term = BigInt::from(binomial(k, i)) * BigInt::from(i).pow(n as u32);
        if (k - i).is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let fact = BigInt::from(factorial(k));
    debug_assert!((&sum % &fact).is_zero());
    (sum / fact)
        .to_biguint()
        .expect("alternating Stirling sum is non-negative")
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite rational")
}
