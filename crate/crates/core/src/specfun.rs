//! Spherical Bessel and Hankel functions of order 0 and 1 for complex argument.
//!
//! Only the two lowest orders are needed for a dipole source, so every
//! function here is an explicit closed form. The regular function `j₁` and
//! the two ratios that stay finite at the origin switch to their power
//! series for `|z| < 1`, where `sin z/z² − cos z/z` loses most of its digits
//! to cancellation.
//!
//! The Riccati derivative `d/dz [z f(z)]` enters every tangential-field
//! boundary condition and is also evaluated in closed form:
//!
//! ```text
//! [z j₁]'  = z j₀ − j₁
//! [z h⁽¹⁾₁]' = e^{iz} (−i + 1/z + i/z²)
//! [z h⁽²⁾₁]' = e^{−iz} (i + 1/z − i/z²)
//! ```

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::{imag_unit, lit, ratio, Real};

/// Largest accepted `|Im z|` for the Hankel functions; `e^{700}` is close to
/// the `f64` overflow threshold.
pub const IM_GUARD: f64 = 700.0;

/// Below this modulus the regular functions are summed as power series.
const SERIES_RADIUS: f64 = 1.0;
const SERIES_MAX_TERMS: usize = 80;

/// Which radial function a boundary-condition term refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SphericalKind {
    /// Spherical Bessel function `j₁` (regular at the origin).
    J1,
    /// Outgoing spherical Hankel function `h⁽¹⁾₁`.
    H1,
    /// Incoming spherical Hankel function `h⁽²⁾₁`.
    H2,
}

fn check_hankel_arg<T: Real>(z: Complex<T>) -> Result<()> {
    if z.re.is_zero() && z.im.is_zero() {
        return Err(Error::Domain(
            "spherical Hankel function evaluated at z = 0".into(),
        ));
    }
    let im_abs = z.im.abs();
    if im_abs > lit(IM_GUARD) {
        return Err(Error::Overflow {
            im_abs: im_abs.to_f64_lossy(),
            bound: IM_GUARD,
        });
    }
    Ok(())
}

#[inline]
fn is_small<T: Real>(z: Complex<T>) -> bool {
    z.norm_sqr() < lit(SERIES_RADIUS * SERIES_RADIUS)
}

/// Sums `Σ weight(k)·a_k` with `a_0 = first` and `a_{k+1} = a_k·step(k)`.
fn power_series<T: Real>(
    first: Complex<T>,
    step: impl Fn(usize) -> Complex<T>,
    weight: impl Fn(usize) -> T,
) -> Complex<T> {
    let eps2 = T::epsilon() * T::epsilon();
    let mut term = first;
    let mut sum = term * weight(0);
    for k in 0..SERIES_MAX_TERMS {
        term = term * step(k);
        let contribution = term * weight(k + 1);
        sum = sum + contribution;
        if contribution.norm_sqr() <= eps2 * sum.norm_sqr() {
            break;
        }
    }
    sum
}

/// `j₀(z) = sin z / z`, with `j₀(0) = 1`.
pub fn sph_j0<T: Real>(z: Complex<T>) -> Complex<T> {
    if is_small(z) {
        let mz2 = -(z * z);
        return power_series(
            Complex::new(T::one(), T::zero()),
            |k| {
                let k = lit::<T>(k as f64);
                mz2 / ((k + lit(1.0)) * lit(2.0) * (lit::<T>(2.0) * k + lit(3.0)))
            },
            |_| T::one(),
        );
    }
    z.sin() / z
}

/// `j₁(z)/z`, continuous through the origin where it equals 1/3.
pub fn j1_over_z<T: Real>(z: Complex<T>) -> Complex<T> {
    if is_small(z) {
        let mz2 = -(z * z);
        return power_series(
            Complex::new(ratio(1.0, 3.0), T::zero()),
            |k| j1_series_step(mz2, k),
            |_| T::one(),
        );
    }
    sph_j1_closed(z) / z
}

/// `[z j₁(z)]'/z`, continuous through the origin where it equals 2/3.
pub fn riccati_j1_over_z<T: Real>(z: Complex<T>) -> Complex<T> {
    if is_small(z) {
        let mz2 = -(z * z);
        return power_series(
            Complex::new(ratio(1.0, 3.0), T::zero()),
            |k| j1_series_step(mz2, k),
            |k| lit::<T>(2.0 * k as f64 + 2.0),
        );
    }
    sph_j0(z) - sph_j1_closed(z) / z
}

// Ratio of consecutive terms of j₁(z)/z = Σ (−z²)^k / (2^k k! (2k+3)!!).
#[inline]
fn j1_series_step<T: Real>(mz2: Complex<T>, k: usize) -> Complex<T> {
    let k = k as f64;
    mz2 / lit::<T>(2.0 * (k + 1.0) * (2.0 * k + 5.0))
}

#[inline]
fn sph_j1_closed<T: Real>(z: Complex<T>) -> Complex<T> {
    let (s, c) = (z.sin(), z.cos());
    s / (z * z) - c / z
}

/// `j₁(z) = sin z/z² − cos z/z`; entire, `j₁(0) = 0`.
pub fn sph_j1<T: Real>(z: Complex<T>) -> Complex<T> {
    if is_small(z) {
        return z * j1_over_z(z);
    }
    sph_j1_closed(z)
}

/// `h⁽¹⁾₀(z) = −i e^{iz}/z`.
pub fn sph_h1_0<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    check_hankel_arg(z)?;
    let i = imag_unit::<T>();
    Ok(-i * (i * z).exp() / z)
}

/// `h⁽²⁾₀(z) = i e^{−iz}/z`.
pub fn sph_h2_0<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    check_hankel_arg(z)?;
    let i = imag_unit::<T>();
    Ok(i * (-i * z).exp() / z)
}

/// `h⁽¹⁾₁(z) = −(e^{iz}/z)(1 + i/z)`.
pub fn sph_h1_1<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    check_hankel_arg(z)?;
    let i = imag_unit::<T>();
    let one = Complex::new(T::one(), T::zero());
    Ok(-((i * z).exp() / z) * (one + i / z))
}

/// `h⁽²⁾₁(z) = −(e^{−iz}/z)(1 − i/z)`; the complex conjugate of `h⁽¹⁾₁` only
/// for real `z`.
pub fn sph_h2_1<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    check_hankel_arg(z)?;
    let i = imag_unit::<T>();
    let one = Complex::new(T::one(), T::zero());
    Ok(-((-i * z).exp() / z) * (one - i / z))
}

/// Order-1 radial function selected by `kind`.
pub fn spherical<T: Real>(kind: SphericalKind, z: Complex<T>) -> Result<Complex<T>> {
    match kind {
        SphericalKind::J1 => Ok(sph_j1(z)),
        SphericalKind::H1 => sph_h1_1(z),
        SphericalKind::H2 => sph_h2_1(z),
    }
}

/// Riccati derivative `d/dz [z f(z)]` of the order-1 function `kind`.
pub fn riccati_deriv<T: Real>(kind: SphericalKind, z: Complex<T>) -> Result<Complex<T>> {
    let i = imag_unit::<T>();
    match kind {
        SphericalKind::J1 => Ok(z * riccati_j1_over_z(z)),
        SphericalKind::H1 => {
            check_hankel_arg(z)?;
            let inv = z.inv();
            Ok((i * z).exp() * (-i + inv + i * inv * inv))
        }
        SphericalKind::H2 => {
            check_hankel_arg(z)?;
            let inv = z.inv();
            Ok((-i * z).exp() * (i + inv - i * inv * inv))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    // Independent Taylor oracle: j₁(z) = Σ (−1)^k z^{2k+1} / (2^k k! (2k+3)!!),
    // each term built from scratch with explicit factorials.
    fn j1_taylor(z: Complex64, terms: usize) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..terms {
            let mut denom = 2f64.powi(k as i32);
            for m in 1..=k {
                denom *= m as f64;
            }
            let mut dfact = 1.0;
            let mut m = 2 * k + 3;
            while m > 1 {
                dfact *= m as f64;
                m -= 2;
            }
            denom *= dfact;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += z.powu(2 * k as u32 + 1) * (sign / denom);
        }
        sum
    }

    #[test]
    fn j1_at_half_pi_is_four_over_pi_squared() {
        let v = sph_j1(Complex64::new(PI / 2.0, 0.0));
        assert!((v.re - 4.0 / (PI * PI)).abs() < 1e-15);
        assert!(v.im.abs() < 1e-16);
    }

    #[test]
    fn j1_matches_taylor_oracle() {
        for z in [
            Complex64::new(1.0, 0.5),
            Complex64::new(0.3, -0.2),
            Complex64::new(2.5, 1.0),
        ] {
            let oracle = j1_taylor(z, 50);
            assert!(rel(sph_j1(z), oracle) < 1e-13, "z = {z}");
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch_radius() {
        for phase in [0.0, 0.7, 1.9, 3.0] {
            let z = Complex64::from_polar(1.0, phase);
            let inside = z * (1.0 - 1e-12);
            assert!(rel(sph_j1(inside), sph_j1_closed(z)) < 1e-11);
            let ratio_closed = sph_j0(z) - sph_j1_closed(z) / z;
            assert!(rel(riccati_j1_over_z(inside), ratio_closed) < 1e-11);
        }
    }

    #[test]
    fn ratio_limits_at_origin() {
        let zero = Complex64::new(0.0, 0.0);
        assert!((j1_over_z(zero) - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-16);
        assert!((riccati_j1_over_z(zero) - Complex64::new(2.0 / 3.0, 0.0)).norm() < 1e-16);
        let tiny = Complex64::from_polar(1e-8, 0.4);
        assert!((j1_over_z(tiny) - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((riccati_j1_over_z(tiny) - Complex64::new(2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert_eq!(sph_j1(zero), zero);
    }

    #[test]
    fn hankel_rejects_origin_and_huge_imaginary_part() {
        let zero = Complex64::new(0.0, 0.0);
        assert!(matches!(sph_h1_1(zero), Err(Error::Domain(_))));
        assert!(matches!(sph_h1_0(zero), Err(Error::Domain(_))));
        assert!(matches!(
            riccati_deriv(SphericalKind::H2, zero),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            sph_h2_1(Complex64::new(1.0, 701.0)),
            Err(Error::Overflow { .. })
        ));
        assert!(riccati_deriv(SphericalKind::J1, zero).is_ok());
    }

    #[test]
    fn h2_is_conjugate_of_h1_for_real_argument() {
        for x in [0.1, 1.0, 3.7, 25.0] {
            let z = Complex64::new(x, 0.0);
            let h1 = sph_h1_1(z).unwrap();
            let h2 = sph_h2_1(z).unwrap();
            assert!(rel(h2, h1.conj()) < 1e-15);
        }
    }

    #[test]
    fn h1_at_one_matches_series_oracle() {
        // h⁽¹⁾₁ = j₁ + i y₁ with y₁(1) = −cos 1 − sin 1.
        let z = Complex64::new(1.0, 0.0);
        let j1 = j1_taylor(z, 40);
        let y1 = -(1f64.cos()) - 1f64.sin();
        let h1 = sph_h1_1(z).unwrap();
        assert!(rel(h1, j1 + Complex64::i() * y1) < 1e-14);
    }

    #[test]
    fn riccati_derivatives_match_finite_differences() {
        let step = 1e-6;
        let cases = [
            (SphericalKind::J1, Complex64::new(0.7, 0.3)),
            (SphericalKind::J1, Complex64::new(4.0, -0.5)),
            (SphericalKind::H1, Complex64::new(2.0, 1.0)),
            (SphericalKind::H2, Complex64::new(1.5, 0.4)),
        ];
        for (kind, z) in cases {
            let g = |w: Complex64| w * spherical(kind, w).unwrap();
            let h = Complex64::new(step, 0.0);
            let fd = (g(z + h) - g(z - h)) / (2.0 * step);
            let exact = riccati_deriv(kind, z).unwrap();
            assert!(rel(exact, fd) < 1e-6, "{kind:?} at {z}: {exact} vs {fd}");
        }
    }

    #[test]
    fn riccati_j1_equals_z_j0_minus_j1() {
        for z in [Complex64::new(0.5, 0.1), Complex64::new(3.0, 2.0)] {
            let direct = z * sph_j0(z) - sph_j1(z);
            assert!(rel(riccati_deriv(SphericalKind::J1, z).unwrap(), direct) < 1e-13);
        }
    }

    #[test]
    fn double_double_series_is_consistent_with_f64() {
        use crate::real::{from_c64, to_c64, DoubleDouble};
        let z = Complex64::new(0.3, 0.2);
        let dd = j1_over_z::<DoubleDouble>(from_c64(z));
        assert!(rel(to_c64(dd), j1_over_z(z)) < 1e-15);
        let dd = sph_h1_1::<DoubleDouble>(from_c64(z)).unwrap();
        assert!(rel(to_c64(dd), sph_h1_1(z).unwrap()) < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn derivative(kind: SphericalKind, z: Complex64) -> Complex64 {
            (riccati_deriv(kind, z).unwrap() - spherical(kind, z).unwrap()) / z
        }

        proptest! {
            #[test]
            fn wronskian_of_hankel_pair(m in 1e-3f64..30.0, phase in -1.2f64..1.2) {
                let z = Complex64::from_polar(m, phase);
                prop_assume!(z.im.abs() < 20.0);
                let h1 = sph_h1_1(z).unwrap();
                let h2 = sph_h2_1(z).unwrap();
                let w = h1 * derivative(SphericalKind::H2, z) - h2 * derivative(SphericalKind::H1, z);
                let expected = Complex64::new(0.0, -2.0) / (z * z);
                let scale = (h1 * derivative(SphericalKind::H2, z)).norm().max(expected.norm());
                prop_assert!((w - expected).norm() / scale < 1e-10);
            }

            #[test]
            fn hankel_pair_sums_to_twice_j1(m in 1e-3f64..30.0, phase in -1.2f64..1.2) {
                let z = Complex64::from_polar(m, phase);
                prop_assume!(z.im.abs() < 20.0);
                let sum = sph_h1_1(z).unwrap() + sph_h2_1(z).unwrap();
                let j1 = sph_j1(z);
                // The sum cancels the singular y₁ part, so compare on the scale
                // of the individual Hankel terms.
                let scale = sph_h1_1(z).unwrap().norm().max(j1.norm());
                prop_assert!((sum - 2.0 * j1).norm() / scale < 1e-12);
            }
        }
    }
}
