//! Coverage probability when each worker draws a batch uniformly with
//! replacement (coupon collection).

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use super::combinatorics::{factorial, stirling2, to_f64};
use crate::error::{Error, Result};

/// A probability kept as an exact fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactProbability {
    exact: BigRational,
    float_value: f64,
}

impl ExactProbability {
    fn from_ratio(num: BigUint, den: BigUint) -> Self {
        let exact = BigRational::new(BigInt::from(num), BigInt::from(den));
        let float_value = to_f64(&exact);
        ExactProbability { exact, float_value }
    }

    pub fn zero() -> Self {
        ExactProbability {
            exact: BigRational::zero(),
            float_value: 0.0,
        }
    }

    pub fn one() -> Self {
        ExactProbability {
            exact: BigRational::one(),
            float_value: 1.0,
        }
    }

    /// Numerator of the reduced fraction.
    pub fn numerator(&self) -> &BigInt {
        self.exact.numer()
    }

    /// Denominator of the reduced fraction.
    pub fn denominator(&self) -> &BigInt {
        self.exact.denom()
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn value(&self) -> f64 {
        self.float_value
    }
}

impl Serialize for ExactProbability {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.float_value)
    }
}

/// Probability that `n_workers` uniform draws with replacement hit all
/// `n_batches` batches: `B!·S(N, B) / B^N`. Exactly zero when `B > N`.
pub fn coverage_probability(n_batches: u64, n_workers: u64) -> Result<ExactProbability> {
    if n_batches == 0 {
        return Err(Error::domain(
            "coverage probability needs at least one batch",
        ));
    }
    if n_batches > n_workers {
        return Ok(ExactProbability::zero());
    }
    let num = factorial(n_batches) * stirling2(n_workers, n_batches);
    let den = BigUint::from(n_batches).pow(n_workers as u32);
    Ok(ExactProbability::from_ratio(num, den))
}

/// Probability that the `n_workers`-th draw is the one completing the
/// collection: `B!·S(N-1, B-1) / B^N`.
pub fn coverage_probability_exact_n(n_batches: u64, n_workers: u64) -> Result<ExactProbability> {
    if n_batches == 0 {
        return Err(Error::domain(
            "coverage probability needs at least one batch",
        ));
    }
    if n_batches > n_workers {
        return Ok(ExactProbability::zero());
    }
    let num = factorial(n_batches) * stirling2(n_workers - 1, n_batches - 1);
    let den = BigUint::from(n_batches).pow(n_workers as u32);
    Ok(ExactProbability::from_ratio(num, den))
}
