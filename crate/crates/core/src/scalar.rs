//! Scalar abstractions.
//!
//! Numerical code (quadrature, kernels, exponent oracles) is written against
//! [`Real`], which is implemented for `f32` and `f64`. Parameter bookkeeping
//! that only needs field arithmetic (law conversions) is written against
//! [`Field`], which additionally admits exact rationals.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Signed + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `1 - cos(x)` without cancellation near zero.
    #[inline]
    fn one_minus_cos(self) -> Self {
        let h = (self / Self::c(2.0)).sin();
        Self::c(2.0) * h * h
    }

    /// `(1 + x)^p - 1` without cancellation for small `x`.
    #[inline]
    fn pow1p_m1(self, p: Self) -> Self {
        (p * self.ln_1p()).exp_m1()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalars with exact field arithmetic for parameter conversions.
///
/// Implemented for `f32`, `f64` and `num_rational::Ratio<i64>` (and any other
/// signed numeric type with division).
pub trait Field: Num + Signed + Copy + Debug + PartialOrd {
    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }
}

impl<T: Num + Signed + Copy + Debug + PartialOrd> Field for T {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_minus_cos_small_argument() {
        let x = 1e-9_f64;
        assert!((x.one_minus_cos() / (0.5 * x * x) - 1.0).abs() < 1e-12);
        assert!((std::f64::consts::PI.one_minus_cos() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn pow1p_m1_matches_direct_formula() {
        let x = 0.3_f64;
        let p = 0.25;
        assert!(((1.0 + x).powf(p) - 1.0 - x.pow1p_m1(p)).abs() < 1e-15);
        let tiny = 1e-20_f64;
        assert!((tiny.pow1p_m1(0.5) / (0.5 * tiny) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn field_half_is_exact_for_rationals() {
        let h = <num_rational::Ratio<i64> as Field>::half();
        assert_eq!(h, num_rational::Ratio::new(1, 2));
    }
}
