//! Exact reference counts and the observed-tolerance measure.

use crate::bvformula::Formula;
use crate::oracle::{for_each_model, OracleError, Unlimited};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ValidateError {
    #[error(transparent)]
    Enumeration(#[from] OracleError),
    #[error("observed tolerance is undefined when a count is zero")]
    ZeroCount,
}

/// `|R_F|` by exhaustive evaluation (assignment space at most 2^28).
pub fn exact_count(f: &Formula) -> Result<BigUint, ValidateError> {
    let mut n: u64 = 0;
    for_each_model(f, &mut Unlimited, |_| {
        n += 1;
        true
    })?;
    Ok(BigUint::from(n))
}

/// Observed tolerance: `estimate/exact - 1` when the estimate is at least
/// the exact count, `exact/estimate - 1` otherwise.
pub fn eps_obs(exact: &BigUint, estimate: &BigUint) -> Result<f64, ValidateError> {
    let zero = BigUint::from(0u32);
    if *exact == zero || *estimate == zero {
        return Err(ValidateError::ZeroCount);
    }
    let (hi, lo) = if estimate >= exact {
        (estimate, exact)
    } else {
        (exact, estimate)
    };
    // both non-zero; f64 conversion saturates to infinity only past 2^1024
    let ratio = hi.to_f64().unwrap_or(f64::INFINITY) / lo.to_f64().unwrap_or(f64::INFINITY);
    Ok(ratio - 1.0)
}

/// Whether `estimate` lies in `[exact / (1 + eps), (1 + eps) * exact]`.
pub fn within_tolerance(exact: &BigUint, estimate: &BigUint, epsilon: f64) -> bool {
    let (x, e) = (
        exact.to_f64().unwrap_or(f64::INFINITY),
        estimate.to_f64().unwrap_or(f64::INFINITY),
    );
    e * (1.0 + epsilon) >= x && e <= (1.0 + epsilon) * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvformula::parse_smt2;

    fn b(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn exact_counts() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 4)) (assert (bvult x #x5))").unwrap();
        assert_eq!(exact_count(&f).unwrap(), b(5));
        let g =
            parse_smt2("(declare-fun x () (_ BitVec 4)) (declare-fun y () (_ BitVec 4))").unwrap();
        assert_eq!(exact_count(&g).unwrap(), b(256));
        let h = parse_smt2(
            "(declare-fun x () (_ BitVec 2)) (declare-fun y () (_ BitVec 2)) (assert (= (bvadd x y) #b01))",
        )
        .unwrap();
        // brute force over the 16 pairs: y = 1 - x mod 4, one per x
        let mut brute = 0;
        for x in 0..4u64 {
            for y in 0..4u64 {
                if (x + y) % 4 == 1 {
                    brute += 1;
                }
            }
        }
        assert_eq!(exact_count(&h).unwrap(), b(brute));
        assert_eq!(brute, 4);
    }

    #[test]
    fn eps_obs_values() {
        assert_eq!(eps_obs(&b(256), &b(256)).unwrap(), 0.0);
        assert!((eps_obs(&b(256), &b(245)).unwrap() - 0.0449).abs() < 1e-4);
        assert!((eps_obs(&b(64), &b(65)).unwrap() - 0.0156).abs() < 1e-4);
        assert_eq!(eps_obs(&b(0), &b(3)), Err(ValidateError::ZeroCount));
        assert_eq!(eps_obs(&b(3), &b(0)), Err(ValidateError::ZeroCount));
    }

    #[test]
    fn tolerance_window() {
        assert!(within_tolerance(&b(256), &b(460), 0.8));
        assert!(!within_tolerance(&b(256), &b(461), 0.8));
        assert!(within_tolerance(&b(256), &b(143), 0.8));
        assert!(!within_tolerance(&b(256), &b(142), 0.8));
    }

    proptest::proptest! {
        #[test]
        fn eps_obs_symmetric(a in 1u64..1_000_000, c in 1u64..1_000_000) {
            proptest::prop_assert_eq!(eps_obs(&b(a), &b(c)).unwrap(), eps_obs(&b(c), &b(a)).unwrap());
            proptest::prop_assert!(eps_obs(&b(a), &b(c)).unwrap() >= 0.0);
        }
    }
}
