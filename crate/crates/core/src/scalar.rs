//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::Neg;

use num_complex::Complex;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + Entry<Real = Self>
    + 'static
{
    /// Complex counterpart used by the matrix kernels.
    type Cplx: Entry<Real = Self>;

    fn cplx(z: Complex<Self>) -> Self::Cplx;
    fn uncplx(z: Self::Cplx) -> Complex<Self>;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Clamp into `[lo, hi]`; NaN passes through.
    #[inline]
    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        if self < lo {
            lo
        } else if self > hi {
            hi
        } else {
            self
        }
    }
}

/// Matrix entry type: a real scalar or a complex number over one.
pub trait Entry:
    Copy + num_traits::Num + Neg<Output = Self> + Send + Sync + Debug + 'static
{
    type Real: Real;
    fn modulus(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    fn exp_entry(self) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            type Cplx = Complex<$t>;
            #[inline]
            fn cplx(z: Complex<$t>) -> Complex<$t> {
                z
            }
            #[inline]
            fn uncplx(z: Complex<$t>) -> Complex<$t> {
                z
            }
        }
        impl Entry for $t {
            type Real = $t;
            #[inline]
            fn modulus(self) -> $t {
                self.abs()
            }
            #[inline]
            fn from_real(r: $t) -> $t {
                r
            }
            #[inline]
            fn exp_entry(self) -> $t {
                <$t>::exp(self)
            }
        }
        impl Entry for Complex<$t> {
            type Real = $t;
            #[inline]
            fn modulus(self) -> $t {
                self.norm()
            }
            #[inline]
            fn from_real(r: $t) -> Self {
                Complex::new(r, 0.0)
            }
            #[inline]
            fn exp_entry(self) -> Self {
                Complex::exp(self)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// `(1 - e^{-z}) / z`, accurate for small `z`.
pub(crate) fn one_minus_exp_over<T: Real>(z: T) -> T {
    if z.abs() < T::lit(1e-4) {
        // 1 - z/2 + z^2/6 - z^3/24
        T::one() - z / T::lit(2.0) + z * z / T::lit(6.0) - z * z * z / T::lit(24.0)
    } else {
        -(-z).exp_m1() / z
    }
}

/// `∫_0^1 w e^{-z w} dw = (1 - e^{-z}(1 + z)) / z^2`, accurate for small `z`.
pub(crate) fn ramp_exp_weight<T: Real>(z: T) -> T {
    if z.abs() < T::lit(0.1) {
        // Σ (-z)^m / (m! (m + 2))
        let mut term = T::one();
        let mut sum = T::zero();
        for m in 0..9 {
            sum = sum + term / T::from_usize_lossy(m + 2);
            term = -term * z / T::from_usize_lossy(m + 1);
        }
        sum
    } else {
        (T::one() - (-z).exp() * (T::one() + z)) / (z * z)
    }
}

/// Standard normal CDF evaluated through `erf`.
pub(crate) fn normal_cdf<T: Real>(x: T, sigma: T) -> T {
    let z = x.to_f64_lossy() / (sigma.to_f64_lossy() * std::f64::consts::SQRT_2);
    T::lit(0.5 * (1.0 + statrs::function::erf::erf(z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_argument_series_match_direct_formula() {
        for &z in &[1e-3_f64, 0.5, 3.0, 40.0] {
            let direct = (1.0 - (-z).exp()) / z;
            assert!((one_minus_exp_over(z) - direct).abs() < 1e-13);
        }
        assert!((one_minus_exp_over(1e-9_f64) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ramp_weight_matches_quadrature() {
        for &z in &[0.0_f64, 1e-6, 0.05, 0.0999, 0.1, 0.7, 12.0, 800.0] {
            let m = 100_000;
            let h = 1.0 / m as f64;
            let q: f64 = (0..m)
                .map(|i| {
                    let w = (i as f64 + 0.5) * h;
                    w * (-z * w).exp() * h
                })
                .sum();
            assert!((ramp_exp_weight(z) - q).abs() < 1e-10, "{z}");
        }
    }

    #[test]
    fn normal_cdf_symmetry() {
        assert!((normal_cdf(0.0_f64, 0.1) - 0.5).abs() < 1e-15);
        let a = normal_cdf(0.13_f64, 0.07);
        let b = normal_cdf(-0.13_f64, 0.07);
        assert!((a + b - 1.0).abs() < 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn quadrature_weights_stay_in_range(z in 0.0f64..500.0) {
            let ramp = ramp_exp_weight(z);
            let full = one_minus_exp_over(z);
            proptest::prop_assert!(ramp > 0.0 && ramp <= 0.5 + 1e-15);
            proptest::prop_assert!(full > 0.0 && full <= 1.0 + 1e-15);
            // the ramp weight is the part of the total carried by the right end
            proptest::prop_assert!(ramp <= full + 1e-15);
        }
    }
}
