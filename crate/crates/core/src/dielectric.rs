//! Dielectric functions and the optical constants derived from them.
//!
//! The refractive index `√ε = η + iκ` is always taken on the principal
//! branch, so `κ ≥ 0` for passive media and `e^{ikr}` decays outwards.
//! Half-integer powers `ε^{3/2}` and `ε^{5/2}` are built from that same root
//! (`ε·√ε`, `ε²·√ε`) so they cannot jump branch inside a frequency sweep.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// Principal square root of `ε` split into `(η, κ)`.
///
/// Uses the cancellation-free form `η = √((|ε|+ε′)/2)`, `κ = ε″/(2η)` (or the
/// mirrored form when `ε′ < 0`).
pub fn sqrt_eps<T: Real>(eps: Complex<T>) -> Result<(T, T)> {
    if eps.re.is_zero() && eps.im.is_zero() {
        return Err(Error::Domain("square root of ε = 0".into()));
    }
    let two = lit::<T>(2.0);
    let modulus = eps.re.hypot(eps.im);
    if eps.re >= T::zero() {
        let eta = ((modulus + eps.re) / two).sqrt();
        Ok((eta, eps.im / (two * eta)))
    } else {
        let mut kappa = ((modulus - eps.re) / two).sqrt();
        if eps.im < T::zero() {
            kappa = -kappa;
        }
        Ok((eps.im / (two * kappa), kappa))
    }
}

/// Complex relative permittivity together with its refractive index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPermittivity<T: Real = f64> {
    eps: Complex<T>,
    eta: T,
    kappa: T,
}

impl<T: Real> ComplexPermittivity<T> {
    pub fn new(eps: Complex<T>) -> Result<Self> {
        let (eta, kappa) = sqrt_eps(eps)?;
        Ok(Self { eps, eta, kappa })
    }

    pub fn real(eps: T) -> Result<Self> {
        Self::new(Complex::new(eps, T::zero()))
    }

    pub fn vacuum() -> Self {
        Self {
            eps: Complex::new(T::one(), T::zero()),
            eta: T::one(),
            kappa: T::zero(),
        }
    }

    #[inline]
    pub fn eps(&self) -> Complex<T> {
        self.eps
    }

    /// `ε′`
    #[inline]
    pub fn eps_re(&self) -> T {
        self.eps.re
    }

    /// `ε″`
    #[inline]
    pub fn eps_im(&self) -> T {
        self.eps.im
    }

    /// `|ε|²`
    #[inline]
    pub fn abs_sq(&self) -> T {
        self.eps.norm_sqr()
    }

    #[inline]
    pub fn eta(&self) -> T {
        self.eta
    }

    #[inline]
    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// `√ε = η + iκ`
    #[inline]
    pub fn sqrt(&self) -> Complex<T> {
        Complex::new(self.eta, self.kappa)
    }

    /// `ε^{3/2} = ε·√ε`
    pub fn pow_3_2(&self) -> Complex<T> {
        self.eps * self.sqrt()
    }

    /// `ε^{5/2} = ε²·√ε`
    pub fn pow_5_2(&self) -> Complex<T> {
        self.eps * self.eps * self.sqrt()
    }

    /// Medium wavenumber `k = √ε·k₀`.
    pub fn wavenumber(&self, k0: T) -> Complex<T> {
        self.sqrt() * k0
    }

    pub fn is_lossless(&self) -> bool {
        self.eps.im.is_zero()
    }

    /// Converts `ε` and recomputes the root in the target precision.
    pub fn cast<U: Real>(&self) -> ComplexPermittivity<U> {
        let c = |x: T| lit::<U>(x.to_f64_lossy());
        ComplexPermittivity::new(Complex::new(c(self.eps.re), c(self.eps.im)))
            .expect("a valid permittivity stays non-zero under conversion")
    }
}

/// Single Lorentz oscillator on a constant background,
/// `ε(ω) = ε_b + Ω²/(ω₀² − ω² − iωγ)`.
///
/// `omega0` sets the frequency unit of the sweep; `strength` (Ω) and `gamma`
/// share that unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzMedium {
    pub eps_b: f64,
    pub omega0: f64,
    pub strength: f64,
    pub gamma: f64,
}

impl LorentzMedium {
    pub fn new(eps_b: f64, omega0: f64, strength: f64, gamma: f64) -> Result<Self> {
        let medium = Self {
            eps_b,
            omega0,
            strength,
            gamma,
        };
        medium.validate()?;
        Ok(medium)
    }

    /// A frequency-independent medium `ε = ε_b`.
    pub fn constant(eps_b: f64) -> Result<Self> {
        Self::new(eps_b, 1.0, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMedium(msg));
        if !(self.eps_b >= 1.0) {
            return bad(format!("eps_b = {} must be >= 1", self.eps_b));
        }
        if !(self.omega0 > 0.0) {
            return bad(format!("omega0 = {} must be > 0", self.omega0));
        }
        if !(self.strength >= 0.0) {
            return bad(format!(
                "oscillator strength = {} must be >= 0",
                self.strength
            ));
        }
        if !(self.gamma > 0.0) {
            return bad(format!("gamma = {} must be > 0", self.gamma));
        }
        Ok(())
    }

    pub fn eps(&self, omega: f64) -> Complex<f64> {
        let denom = Complex::new(
            self.omega0 * self.omega0 - omega * omega,
            -omega * self.gamma,
        );
        Complex::new(self.eps_b, 0.0) + self.strength * self.strength / denom
    }

    pub fn eval(&self, omega: f64) -> Result<ComplexPermittivity> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("frequency {omega} must be > 0")));
        }
        ComplexPermittivity::new(self.eps(omega))
    }
}
