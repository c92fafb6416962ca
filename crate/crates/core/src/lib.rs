//! Decay rate, level shift and power losses of a point dipole at the centre of
//! an absorbing multilayer dielectric sphere, including Onsager real-cavity
//! local-field corrections.
//!
//! Units: `c = 1` and the dipole moment is `p = 1` along `z`. Frequencies are
//! measured in units of the medium resonance `ω₀`, so the vacuum wavenumber is
//! `k₀ = ω`, and every power is normalised to the free-space loss
//! `W_free = k₀⁴/3`.
//!
//! Layout:
//! - [`specfun`]: spherical Bessel/Hankel functions of order 0 and 1.
//! - [`dielectric`]: permittivity models and the `√ε` branch convention.
//! - [`multilayer`]: scattering coefficients and fields of the layered sphere.
//! - [`rates`]: closed-form rates, shifts and small-cavity expansions.
//! - [`oracle`]: Poynting-flux and absorption quadrature used as an independent check.
//! - [`sweep`]: configuration, frequency sweeps, CSV/JSON output and the verification battery.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dd;
pub mod dielectric;
pub mod error;
pub mod linsolve;
pub mod multilayer;
pub mod oracle;
pub mod rates;
pub mod real;
pub mod specfun;
pub mod sweep;

pub use dielectric::{ComplexPermittivity, LorentzMedium};
pub use error::{Error, Result};
pub use multilayer::{DipoleField, LayerStack, WaveCoefficients};
pub use oracle::QuadratureSpec;
pub use rates::RateReport;
pub use real::{DoubleDouble, Real};
pub use sweep::SweepConfig;
