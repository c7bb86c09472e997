//! Bernoulli KL divergence and binary entropy, in nats.

use crate::error::{Error, Result};

/// A Bernoulli parameter in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Prob(f64);

impl Prob {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Prob(value))
        } else {
            Err(Error::InvalidProbability(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Prob {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Prob::new(value)
    }
}

impl From<Prob> for f64 {
    fn from(p: Prob) -> f64 {
        p.0
    }
}

/// `x ln(x / y)` with `0 ln 0 = 0`.
#[inline]
fn xlogx_over_y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// `d(x, y)` without validation, for hot loops. Returns `+inf` when `y` sits
/// on a boundary that `x` does not.
#[inline]
pub fn bernoulli_kl(x: f64, y: f64) -> f64 {
    let v = xlogx_over_y(x, y) + xlogx_over_y(1.0 - x, 1.0 - y);
    // rounding can push the identity case a hair below zero
    v.max(0.0)
}

/// `d(x, y) = x ln(x/y) + (1-x) ln((1-x)/(1-y))`.
pub fn kl_bern(x: Prob, y: Prob) -> f64 {
    bernoulli_kl(x.0, y.0)
}

/// Validating wrapper over raw floats; NaN and out-of-range inputs are errors.
pub fn kl_bern_f64(x: f64, y: f64) -> Result<f64> {
    Ok(kl_bern(Prob::new(x)?, Prob::new(y)?))
}

/// Binary entropy `H(x)` in nats.
#[inline]
pub fn entropy(x: f64) -> f64 {
    let term = |v: f64| if v <= 0.0 { 0.0 } else { -v * v.ln() };
    term(x) + term(1.0 - x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert!((kl_bern_f64(0.6, 0.4).unwrap() - 0.0810930).abs() < 1e-7);
        assert!((kl_bern_f64(1.0, 0.5).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((kl_bern_f64(0.4, 0.5).unwrap() - 0.0201355).abs() < 1e-7);
        assert_eq!(kl_bern_f64(0.3, 0.3).unwrap(), 0.0);
        assert!((entropy(0.6) - 0.6730117).abs() < 1e-7);
        assert!((entropy(0.5) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(0.0), 0.0);
        assert_eq!(entropy(1.0), 0.0);
    }

    #[test]
    fn boundaries() {
        assert_eq!(bernoulli_kl(0.5, 0.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.5, 1.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.0, 0.0), 0.0);
        assert_eq!(bernoulli_kl(1.0, 1.0), 0.0);
        assert!((bernoulli_kl(0.0, 1.0 / 12.0) - (12.0f64 / 11.0).ln()).abs() < 1e-12);
        assert!(kl_bern_f64(f64::NAN, 0.5).is_err());
        assert!(kl_bern_f64(0.5, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn pinsker(x in 0.001f64..0.999, y in 0.001f64..0.999) {
            prop_assert!(bernoulli_kl(x, y) >= 2.0 * (x - y).powi(2) - 1e-12);
        }

        #[test]
        fn convex_in_second_argument(x in 0.0f64..=1.0, y in 0.01f64..0.99) {
            let h = 1e-3;
            let second = bernoulli_kl(x, y + h) - 2.0 * bernoulli_kl(x, y) + bernoulli_kl(x, y - h);
            prop_assert!(second > 0.0);
        }

        #[test]
        fn entropy_identity(x in 0.0f64..=1.0) {
            prop_assert!((entropy(x) - entropy(1.0 - x)).abs() < 1e-12);
            let xlx = |v: f64| if v == 0.0 { 0.0 } else { v * v.ln() };
            prop_assert!((entropy(x) + xlx(x) + xlx(1.0 - x)).abs() < 1e-12);
            prop_assert!(entropy(x) <= 2f64.ln() + 1e-15);
        }

        #[test]
        fn zero_only_on_diagonal(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let d = bernoulli_kl(x, y);
            prop_assert!(d >= 0.0);
            if (x - y).abs() > 1e-6 {
                prop_assert!(d > 0.0);
            }
        }
    }
}
