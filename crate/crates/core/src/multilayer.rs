//! Dipole at the centre of a concentric N-layer sphere.
//!
//! The magnetic field is `B = ε₁k₀³ f(r) sinθ φ̂` and the electric field
//! follows from Maxwell's equations:
//!
//! ```text
//! E_r = i k₀² (ε₁/ε_l) 2f/r cosθ,    E_θ = −i k₀² (ε₁/ε_l) [rf]′/r sinθ
//! ```
//!
//! with `f = h⁽¹⁾₁(k₁r) + C₁ j₁(k₁r)` in the core and
//! `f = C₊ h⁽¹⁾₁(k_l r) + C₋ h⁽²⁾₁(k_l r)` in layer `l`, `C₋ = 0` outside.
//! The coefficients follow from continuity of `f` and `[rf]′/ε` at each
//! interface. Layers are indexed from 0 (the core) in this module.

use num_complex::Complex;

use crate::dielectric::ComplexPermittivity;
use crate::error::{Error, Result};
use crate::linsolve;
use crate::real::{imag_unit, lit, real_c, Real};
use crate::specfun::{
    j1_over_z, riccati_deriv, riccati_j1_over_z, sph_h1_0, sph_j1, spherical, SphericalKind,
};

/// Closed-form denominators smaller than this are treated as singular.
pub const SINGULAR_GUARD: f64 = 1e-300;

/// Largest accepted relative residual of the boundary-condition solve.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

/// Concentric layers, innermost first. `radii[i]` separates layer `i` from
/// layer `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack<T: Real = f64> {
    radii: Vec<T>,
    eps: Vec<ComplexPermittivity<T>>,
}

impl<T: Real> LayerStack<T> {
    pub fn new(radii: Vec<T>, eps: Vec<ComplexPermittivity<T>>) -> Result<Self> {
        if eps.len() < 2 {
            return Err(Error::InvalidStack(format!(
                "need at least two layers, got {}",
                eps.len()
            )));
        }
        if eps.len() != radii.len() + 1 {
            return Err(Error::InvalidStack(format!(
                "{} permittivities for {} radii",
                eps.len(),
                radii.len()
            )));
        }
        for (i, r) in radii.iter().enumerate() {
            if !(r.is_finite() && *r > T::zero()) {
                return Err(Error::InvalidStack(format!(
                    "radius {i} = {:e} must be positive and finite",
                    r.to_f64_lossy()
                )));
            }
            if i > 0 && !(*r > radii[i - 1]) {
                return Err(Error::InvalidStack(format!(
                    "radii must increase strictly (r[{}] = {:e}, r[{i}] = {:e})",
                    i - 1,
                    radii[i - 1].to_f64_lossy(),
                    r.to_f64_lossy()
                )));
            }
        }
        Ok(Self { radii, eps })
    }

    pub fn two_layer(
        eps1: ComplexPermittivity<T>,
        eps2: ComplexPermittivity<T>,
        r1: T,
    ) -> Result<Self> {
        Self::new(vec![r1], vec![eps1, eps2])
    }

    pub fn three_layer(
        eps1: ComplexPermittivity<T>,
        eps2: ComplexPermittivity<T>,
        eps3: ComplexPermittivity<T>,
        r1: T,
        r2: T,
    ) -> Result<Self> {
        Self::new(vec![r1, r2], vec![eps1, eps2, eps3])
    }

    pub fn n_layers(&self) -> usize {
        self.eps.len()
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn eps(&self) -> &[ComplexPermittivity<T>] {
        &self.eps
    }

    pub fn layer_eps(&self, layer: usize) -> &ComplexPermittivity<T> {
        &self.eps[layer]
    }

    pub fn outermost(&self) -> &ComplexPermittivity<T> {
        self.eps.last().expect("validated non-empty")
    }

    pub fn outer_radius(&self) -> T {
        *self.radii.last().expect("validated non-empty")
    }

    /// Layer containing radius `r`. A point exactly on an interface belongs
    /// to the inner layer.
    pub fn layer_of(&self, r: T) -> usize {
        self.radii
            .iter()
            .position(|&ri| r <= ri)
            .unwrap_or(self.radii.len())
    }

    pub fn cast<U: Real>(&self) -> LayerStack<U> {
        LayerStack {
            radii: self.radii.iter().map(|r| lit(r.to_f64_lossy())).collect(),
            eps: self.eps.iter().map(|e| e.cast()).collect(),
        }
    }
}

/// Scattering amplitudes. `c_plus[i]`, `c_minus[i]` belong to layer `i + 1`;
/// the last `c_minus` entry is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveCoefficients<T: Real = f64> {
    pub c1: Complex<T>,
    pub c_plus: Vec<Complex<T>>,
    pub c_minus: Vec<Complex<T>>,
}

impl<T: Real> WaveCoefficients<T> {
    /// Outgoing amplitude in the outermost layer.
    pub fn outer(&self) -> Complex<T> {
        *self.c_plus.last().expect("at least one outer layer")
    }

    /// `(C₊, C₋)` of a layer; the core reports `(C₁/2, C₁/2)`.
    pub fn amplitudes(&self, layer: usize) -> (Complex<T>, Complex<T>) {
        if layer == 0 {
            let half = self.c1 / lit::<T>(2.0);
            (half, half)
        } else {
            (self.c_plus[layer - 1], self.c_minus[layer - 1])
        }
    }

    pub fn n_layers(&self) -> usize {
        self.c_plus.len() + 1
    }
}

fn guard<T: Real>(value: Complex<T>, context: &'static str) -> Result<()> {
    let magnitude = value.norm();
    if !(magnitude >= lit(SINGULAR_GUARD)) {
        return Err(Error::SingularDenominator {
            context,
            magnitude: magnitude.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_geometry<T: Real>(r: T, k0: T) -> Result<()> {
    if !(r > T::zero() && k0 > T::zero()) {
        return Err(Error::Domain(format!(
            "radius {:e} and k0 {:e} must be positive",
            r.to_f64_lossy(),
            k0.to_f64_lossy()
        )));
    }
    Ok(())
}

/// Closed-form coefficients `C²₁` and `C²₂₊` of a single interface at `r1`.
pub fn coeffs_two_layer<T: Real>(
    eps1: &ComplexPermittivity<T>,
    eps2: &ComplexPermittivity<T>,
    r1: T,
    k0: T,
) -> Result<WaveCoefficients<T>> {
    check_geometry(r1, k0)?;
    use SphericalKind::*;
    let (e1, e2) = (eps1.eps(), eps2.eps());
    let rho1 = eps1.wavenumber(k0) * r1;
    let rho2 = eps2.wavenumber(k0) * r1;

    let h_1 = spherical(H1, rho1)?;
    let dh_1 = riccati_deriv(H1, rho1)?;
    let h_2 = spherical(H1, rho2)?;
    let dh_2 = riccati_deriv(H1, rho2)?;
    let j_1 = sph_j1(rho1);
    let dj_1 = riccati_deriv(J1, rho1)?;

    let d = e1 * j_1 * dh_2 - e2 * h_2 * dj_1;
    guard(d, "two-layer denominator D")?;
    let c1 = (e2 * h_2 * dh_1 - e1 * h_1 * dh_2) / d;
    let c2 = imag_unit::<T>() * e2 / (rho1 * d);
    Ok(WaveCoefficients {
        c1,
        c_plus: vec![c2],
        c_minus: vec![Complex::new(T::zero(), T::zero())],
    })
}

/// `(β₁, β₂)` of an interface at `r` between an inner medium carrying both
/// Hankel waves and an outer medium carrying only the outgoing one.
pub fn three_layer_betas<T: Real>(
    eps_inner: &ComplexPermittivity<T>,
    eps_outer: &ComplexPermittivity<T>,
    r: T,
    k0: T,
) -> Result<(Complex<T>, Complex<T>)> {
    check_geometry(r, k0)?;
    use SphericalKind::*;
    let (e2, e3) = (eps_inner.eps(), eps_outer.eps());
    let rho22 = eps_inner.wavenumber(k0) * r;
    let rho32 = eps_outer.wavenumber(k0) * r;
    let h3 = spherical(H1, rho32)?;
    let dh3 = riccati_deriv(H1, rho32)?;
    let beta = |kind| -> Result<Complex<T>> {
        Ok(e3 * h3 * riccati_deriv(kind, rho22)? - e2 * spherical(kind, rho22)? * dh3)
    };
    Ok((beta(H1)?, beta(H2)?))
}

/// Closed-form coefficients of the three-layer sphere (interfaces `r1 < r2`).
pub fn coeffs_three_layer<T: Real>(
    eps1: &ComplexPermittivity<T>,
    eps2: &ComplexPermittivity<T>,
    eps3: &ComplexPermittivity<T>,
    r1: T,
    r2: T,
    k0: T,
) -> Result<WaveCoefficients<T>> {
    check_geometry(r1, k0)?;
    if !(r2 > r1) {
        return Err(Error::InvalidStack(format!(
            "outer radius {:e} must exceed inner radius {:e}",
            r2.to_f64_lossy(),
            r1.to_f64_lossy()
        )));
    }
    use SphericalKind::*;
    let i = imag_unit::<T>();
    let (e1, e2, e3) = (eps1.eps(), eps2.eps(), eps3.eps());
    let rho11 = eps1.wavenumber(k0) * r1;
    let rho21 = eps2.wavenumber(k0) * r1;
    let rho22 = eps2.wavenumber(k0) * r2;

    let j11 = sph_j1(rho11);
    let dj11 = riccati_deriv(J1, rho11)?;
    let alpha = |kind| -> Result<Complex<T>> {
        let bracket = e1 * j11 * riccati_deriv(kind, rho21)? - e2 * spherical(kind, rho21)? * dj11;
        Ok(-i * rho11 / e2 * bracket)
    };
    let (a1, a2) = (alpha(H1)?, alpha(H2)?);
    let (b1, b2) = three_layer_betas(eps2, eps3, r2, k0)?;

    let delta = a1 * b2 - a2 * b1;
    guard(delta, "three-layer determinant α₁β₂ − α₂β₁")?;
    guard(j11, "three-layer core Bessel j₁(k₁r₁)")?;

    let inner = (b2 * spherical(H1, rho21)? - b1 * spherical(H2, rho21)?) / delta;
    let c1 = (inner - spherical(H1, rho11)?) / j11;
    let two = lit::<T>(2.0);
    let c3 = -i * e3 / rho22 * two / delta;
    Ok(WaveCoefficients {
        c1,
        c_plus: vec![b2 / delta, c3],
        c_minus: vec![-b1 / delta, Complex::new(T::zero(), T::zero())],
    })
}

/// Column of an amplitude in the boundary system: the core has one unknown,
/// intermediate layers two, the outermost layer one.
fn unknown_index(n_layers: usize, layer: usize, minus: bool) -> Option<usize> {
    if layer == 0 {
        (!minus).then_some(0)
    } else if layer == n_layers - 1 {
        (!minus).then_some(2 * n_layers - 3)
    } else {
        Some(2 * layer - 1 + usize::from(minus))
    }
}

/// Solves the interface conditions of an arbitrary stack as one dense linear
/// system. Returns the coefficients and the relative residual of the solve.
pub fn coeffs_general_n<T: Real>(stack: &LayerStack<T>, k0: T) -> Result<(WaveCoefficients<T>, T)> {
    check_geometry(stack.radii[0], k0)?;
    use SphericalKind::*;
    let n = stack.n_layers();
    let dim = 2 * (n - 1);
    let zero = Complex::new(T::zero(), T::zero());
    let mut a = vec![vec![zero; dim]; dim];
    let mut b = vec![zero; dim];

    for (m, &r) in stack.radii.iter().enumerate() {
        let (row_f, row_g) = (2 * m, 2 * m + 1);
        for (sign, layer) in [(T::one(), m), (-T::one(), m + 1)] {
            let medium = &stack.eps[layer];
            let z = medium.wavenumber(k0) * r;
            let inv_eps = medium.eps().inv();
            if layer == 0 {
                a[row_f][0] = a[row_f][0] + sph_j1(z) * sign;
                a[row_g][0] = a[row_g][0] + riccati_deriv(J1, z)? * inv_eps * sign;
                b[row_f] = b[row_f] - spherical(H1, z)? * sign;
                b[row_g] = b[row_g] - riccati_deriv(H1, z)? * inv_eps * sign;
                continue;
            }
            for (kind, minus) in [(H1, false), (H2, true)] {
                if let Some(col) = unknown_index(n, layer, minus) {
                    a[row_f][col] = a[row_f][col] + spherical(kind, z)? * sign;
                    a[row_g][col] = a[row_g][col] + riccati_deriv(kind, z)? * inv_eps * sign;
                }
            }
        }
    }

    let solution = linsolve::solve(&a, &b).ok_or(Error::SingularDenominator {
        context: "boundary-condition matrix",
        magnitude: 0.0,
    })?;
    if !(solution.residual <= lit(RESIDUAL_LIMIT)) {
        return Err(Error::IllConditioned {
            residual: solution.residual.to_f64_lossy(),
            limit: RESIDUAL_LIMIT,
        });
    }
    let x = &solution.x;
    let pick = |layer, minus| unknown_index(n, layer, minus).map_or(zero, |c| x[c]);
    let coeffs = WaveCoefficients {
        c1: x[0],
        c_plus: (1..n).map(|l| pick(l, false)).collect(),
        c_minus: (1..n).map(|l| pick(l, true)).collect(),
    };
    Ok((coeffs, solution.residual))
}

/// Closed form for two and three layers, linear solve otherwise.
pub fn exact_coefficients<T: Real>(stack: &LayerStack<T>, k0: T) -> Result<WaveCoefficients<T>> {
    let e = &stack.eps;
    let r = &stack.radii;
    match stack.n_layers() {
        2 => coeffs_two_layer(&e[0], &e[1], r[0], k0),
        3 => coeffs_three_layer(&e[0], &e[1], &e[2], r[0], r[1], k0),
        _ => coeffs_general_n(stack, k0).map(|(c, _)| c),
    }
}

/// `(f, [rf]′)` of a layer at `z = k_l r`.
fn radial_parts<T: Real>(
    coeffs: &WaveCoefficients<T>,
    layer: usize,
    z: Complex<T>,
) -> Result<(Complex<T>, Complex<T>)> {
    use SphericalKind::*;
    if layer == 0 {
        let f = spherical(H1, z)? + coeffs.c1 * sph_j1(z);
        let g = riccati_deriv(H1, z)? + coeffs.c1 * riccati_deriv(J1, z)?;
        return Ok((f, g));
    }
    let (cp, cm) = coeffs.amplitudes(layer);
    let mut f = cp * spherical(H1, z)?;
    let mut g = cp * riccati_deriv(H1, z)?;
    if layer + 1 < coeffs.n_layers() {
        f = f + cm * spherical(H2, z)?;
        g = g + cm * riccati_deriv(H2, z)?;
    }
    Ok((f, g))
}

/// Largest relative mismatch of `f` and `[rf]′/ε` across the interfaces.
pub fn boundary_residual<T: Real>(
    stack: &LayerStack<T>,
    coeffs: &WaveCoefficients<T>,
    k0: T,
) -> Result<T> {
    let mut worst = T::zero();
    for (m, &r) in stack.radii.iter().enumerate() {
        let (inner, outer) = (&stack.eps[m], &stack.eps[m + 1]);
        let (fi, gi) = radial_parts(coeffs, m, inner.wavenumber(k0) * r)?;
        let (fo, go) = radial_parts(coeffs, m + 1, outer.wavenumber(k0) * r)?;
        let (gi, go) = (gi / inner.eps(), go / outer.eps());
        for (x, y) in [(fi, fo), (gi, go)] {
            let scale = x.norm().max(y.norm());
            if scale > T::zero() {
                worst = worst.max((x - y).norm() / scale);
            }
        }
    }
    Ok(worst)
}

/// Spherical components of the dipole field at one point (`p = 1` along z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleField<T: Real = f64> {
    pub e_r: Complex<T>,
    pub e_theta: Complex<T>,
    pub b_phi: Complex<T>,
}

impl<T: Real> DipoleField<T> {
    pub fn e_norm_sqr(&self) -> T {
        self.e_r.norm_sqr() + self.e_theta.norm_sqr()
    }

    /// Radial Poynting component without the `1/8π` prefactor,
    /// `Re(E × B*)·r̂ = Re(E_θ B_φ*)`.
    pub fn radial_flux_density(&self) -> T {
        (self.e_theta * self.b_phi.conj()).re
    }
}

fn assemble<T: Real>(
    f_over_r: Complex<T>,
    g_over_r: Complex<T>,
    b_radial: Complex<T>,
    eps_ratio: Complex<T>,
    theta: T,
    k0: T,
) -> DipoleField<T> {
    let i = imag_unit::<T>();
    let pref = i * eps_ratio * (k0 * k0);
    DipoleField {
        e_r: pref * f_over_r * lit::<T>(2.0) * theta.cos(),
        e_theta: -pref * g_over_r * theta.sin(),
        b_phi: b_radial * theta.sin(),
    }
}

fn check_radius<T: Real>(r: T) -> Result<()> {
    if !(r > T::zero()) {
        return Err(Error::Domain(
            "field at r = 0 is singular; use field_center_limit".into(),
        ));
    }
    Ok(())
}

/// Total field (source plus scattered) at `(r, θ)`.
pub fn field_in_layer<T: Real>(
    stack: &LayerStack<T>,
    coeffs: &WaveCoefficients<T>,
    r: T,
    theta: T,
    k0: T,
) -> Result<DipoleField<T>> {
    check_radius(r)?;
    let layer = stack.layer_of(r);
    let medium = &stack.eps[layer];
    let e1 = stack.eps[0].eps();
    let (f, g) = radial_parts(coeffs, layer, medium.wavenumber(k0) * r)?;
    let r_c = real_c(r);
    Ok(assemble(
        f / r_c,
        g / r_c,
        e1 * f * (k0 * k0 * k0),
        e1 / medium.eps(),
        theta,
        k0,
    ))
}

/// Scattered field: the total field minus the bare source, which only
/// differs from [`field_in_layer`] in the core. Stable down to very small `r`.
pub fn scattered_field_in_layer<T: Real>(
    stack: &LayerStack<T>,
    coeffs: &WaveCoefficients<T>,
    r: T,
    theta: T,
    k0: T,
) -> Result<DipoleField<T>> {
    check_radius(r)?;
    if stack.layer_of(r) != 0 {
        return field_in_layer(stack, coeffs, r, theta, k0);
    }
    let medium = &stack.eps[0];
    let k1 = medium.wavenumber(k0);
    let z = k1 * r;
    let c1 = coeffs.c1;
    Ok(assemble(
        c1 * k1 * j1_over_z(z),
        c1 * k1 * riccati_j1_over_z(z),
        medium.eps() * c1 * sph_j1(z) * (k0 * k0 * k0),
        real_c(T::one()),
        theta,
        k0,
    ))
}

/// Scattered electric field at the dipole site as a Cartesian vector; it is
/// parallel to the dipole, `E = i k₁ k₀² C₁ (2/3) ẑ`.
pub fn field_center_limit<T: Real>(
    coeffs: &WaveCoefficients<T>,
    eps1: &ComplexPermittivity<T>,
    k0: T,
) -> [Complex<T>; 3] {
    let zero = Complex::new(T::zero(), T::zero());
    let ez = imag_unit::<T>() * eps1.wavenumber(k0) * (k0 * k0) * coeffs.c1 * lit::<T>(2.0)
        / lit::<T>(3.0);
    [zero, zero, ez]
}

/// Field of a dipole of moment `p` (along z) in an unbounded medium:
/// `E = i k k₀² p {2h₁/(kr) cosθ r̂ + [h₁/(kr) − h₀] sinθ θ̂}`,
/// `B = k² k₀ p h₁ sinθ φ̂`.
pub fn free_dipole_field<T: Real>(
    medium: &ComplexPermittivity<T>,
    p: Complex<T>,
    r: T,
    theta: T,
    k0: T,
) -> Result<DipoleField<T>> {
    check_radius(r)?;
    let k = medium.wavenumber(k0);
    let z = k * r;
    let h0 = sph_h1_0(z)?;
    let h1 = spherical(SphericalKind::H1, z)?;
    let pref = imag_unit::<T>() * k * (k0 * k0) * p;
    Ok(DipoleField {
        e_r: pref * h1 / z * lit::<T>(2.0) * theta.cos(),
        e_theta: pref * (h1 / z - h0) * theta.sin(),
        b_phi: k * k * k0 * p * h1 * theta.sin(),
    })
}
