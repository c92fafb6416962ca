//! Scalar abstraction shared by the closed-form numerics.
//!
//! Everything that feeds the small-cavity expansion checks is generic over
//! [`Real`], so the same formulas can be evaluated in `f64` for production
//! sweeps and in double-double precision when residuals of order `(k₀R_c)⁴`
//! have to be resolved at `k₀R_c = 1e-4`.

use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{Float, FloatConst};

pub use crate::dd::DoubleDouble;

pub trait Real: Float + FloatConst + Debug + Send + Sync + 'static {
    /// Lossy conversion used for error reporting and output.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {}
impl Real for DoubleDouble {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from(x).expect("f64 literal is representable")
}

/// Exact rational `num/den` in the precision of `T`.
#[inline]
pub fn ratio<T: Real>(num: f64, den: f64) -> T {
    lit::<T>(num) / lit::<T>(den)
}

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn real_c<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Converts a double-double complex value to `f64` components.
pub fn to_c64<T: Real>(z: Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

/// Lifts an `f64` complex value into `T`.
pub fn from_c64<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(lit(z.re), lit(z.im))
}
