//! Poynting-theorem oracle: radiated flux through a sphere and power absorbed
//! in a shell, integrated numerically from raw field values.
//!
//! Nothing here calls the closed-form power formulas of [`crate::rates`].
//! The φ integral is done analytically (factor 2π, the configuration is
//! axisymmetric); the θ integral uses Gauss–Legendre in `cos θ`, and the
//! radial integral is adaptive Gauss–Legendre. The oracle is therefore
//! independent of the analytic results in its `r` and `θ` structure.
//!
//! All powers are normalised to `W_free = k₀⁴/3` (`c = 1`, `p = 1`).

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dielectric::ComplexPermittivity;
use crate::error::{Error, Result};
use crate::multilayer::{exact_coefficients, field_in_layer, free_dipole_field, DipoleField};
use crate::multilayer::{LayerStack, WaveCoefficients};

/// Angular order; the integrands are quadratic in `cos θ`, so this is exact
/// and the doubled order serves as the check.
const ANGULAR_ORDER: usize = 4;
const RADIAL_LOW: usize = 10;
const RADIAL_HIGH: usize = 20;
/// Largest ratio `b/a` and largest length (in units of 1/|k|) of an initial
/// radial panel.
const PANEL_RATIO: f64 = 1.5;
const PANEL_PHASE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_depth: 50,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, max_depth: usize) -> Result<Self> {
        let spec = Self { rel_tol, max_depth };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_depth < 1 {
            return Err(Error::Domain(format!(
                "quadrature needs rel_tol > 0 and max_depth >= 1 (got {}, {})",
                self.rel_tol, self.max_depth
            )));
        }
        Ok(())
    }
}

/// Source of field values for the oracle. Implementations must be pure.
pub trait FieldEvaluator: Sync {
    fn field(&self, r: f64, theta: f64) -> Result<DipoleField>;

    fn k0(&self) -> f64;

    /// Medium wavenumber magnitude at `r`, used only to size radial panels.
    fn wavenumber_abs(&self, r: f64) -> f64;

    /// Interface radii; integration shells must not straddle them.
    fn interfaces(&self) -> &[f64] {
        &[]
    }
}

/// Dipole at the centre of a layered sphere.
#[derive(Debug, Clone)]
pub struct StackField {
    stack: LayerStack,
    coeffs: WaveCoefficients,
    k0: f64,
}

impl StackField {
    pub fn new(stack: LayerStack, k0: f64) -> Result<Self> {
        let coeffs = exact_coefficients(&stack, k0)?;
        Ok(Self { stack, coeffs, k0 })
    }

    pub fn stack(&self) -> &LayerStack {
        &self.stack
    }
}

impl FieldEvaluator for StackField {
    fn field(&self, r: f64, theta: f64) -> Result<DipoleField> {
        field_in_layer(&self.stack, &self.coeffs, r, theta, self.k0)
    }

    fn k0(&self) -> f64 {
        self.k0
    }

    fn wavenumber_abs(&self, r: f64) -> f64 {
        let layer = self.stack.layer_of(r);
        self.stack.layer_eps(layer).wavenumber(self.k0).norm()
    }

    fn interfaces(&self) -> &[f64] {
        self.stack.radii()
    }
}

/// Unit dipole in an unbounded homogeneous medium.
#[derive(Debug, Clone, Copy)]
pub struct HomogeneousDipole {
    pub medium: ComplexPermittivity,
    pub k0: f64,
}

impl FieldEvaluator for HomogeneousDipole {
    fn field(&self, r: f64, theta: f64) -> Result<DipoleField> {
        free_dipole_field(
            &self.medium,
            num_complex::Complex64::new(1.0, 0.0),
            r,
            theta,
            self.k0,
        )
    }

    fn k0(&self) -> f64 {
        self.k0
    }

    fn wavenumber_abs(&self, _r: f64) -> f64 {
        self.medium.wavenumber(self.k0).norm()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n−1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

fn rule(n: usize) -> &'static Rule {
    static RULES: OnceLock<[Rule; 4]> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        [ANGULAR_ORDER, 2 * ANGULAR_ORDER, RADIAL_LOW, RADIAL_HIGH].map(|n| {
            let (x, w) = gauss_legendre(n);
            Rule { x, w }
        })
    });
    rules
        .iter()
        .find(|r| r.x.len() == n)
        .expect("quadrature order is one of the tabulated rules")
}

fn apply(rule: &Rule, a: f64, b: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = 0.0;
    for (x, w) in rule.x.iter().zip(&rule.w) {
        sum += w * f(mid + half * x)?;
    }
    Ok(sum * half)
}

/// `∫_{−1}^{1} g(u) du` with `u = cos θ`.
fn angular(
    order: usize,
    mut g: impl FnMut(&DipoleField) -> f64,
    field: impl Fn(f64) -> Result<DipoleField>,
) -> Result<f64> {
    apply(rule(order), -1.0, 1.0, |u| Ok(g(&field(u.acos())?)))
}

fn w_free(k0: f64) -> f64 {
    k0.powi(4) / 3.0
}

fn check_inside_layer(fields: &dyn FieldEvaluator, a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(Error::Domain(format!("invalid shell [{a}, {b}]")));
    }
    for &ri in fields.interfaces() {
        let on_edge = ri == a || ri == b;
        if (a < ri && ri < b) || (on_edge && a == b) {
            return Err(Error::Domain(format!(
                "shell [{a}, {b}] crosses or sits on the interface at {ri}"
            )));
        }
    }
    Ok(())
}

fn flux_at_order(fields: &dyn FieldEvaluator, r: f64, order: usize) -> Result<f64> {
    let k0 = fields.k0();
    let s = angular(
        order,
        |f| f.radial_flux_density(),
        |theta| fields.field(r, theta),
    )?;
    // r²/(8π) · 2π · ∫ Re(E_θ B_φ*) d(cos θ)
    Ok(r * r / 4.0 * s / w_free(k0))
}

/// Power through the sphere of radius `r`, normalised to `W_free`.
pub fn flux_through_sphere(
    fields: &dyn FieldEvaluator,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    check_inside_layer(fields, r, r)?;
    let lo = flux_at_order(fields, r, ANGULAR_ORDER)?;
    let hi = flux_at_order(fields, r, 2 * ANGULAR_ORDER)?;
    if (hi - lo).abs() > quad.rel_tol * hi.abs() {
        return Err(Error::QuadratureFailure {
            lower: r,
            upper: r,
            rel_tol: quad.rel_tol,
            max_depth: quad.max_depth,
        });
    }
    Ok(hi)
}

/// Initial radial panels: geometric near the origin, bounded by a fraction
/// of the local wavelength farther out.
fn panels(fields: &dyn FieldEvaluator, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut x = a;
    while x < b {
        let step = (x * (PANEL_RATIO - 1.0)).min(PANEL_PHASE / fields.wavenumber_abs(x));
        let next = if x + step >= b * (1.0 - 1e-12) {
            b
        } else {
            x + step
        };
        out.push((x, next));
        x = next;
    }
    out
}

fn adaptive(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    coarse: f64,
    depth: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let fine = apply(rule(RADIAL_HIGH), a, b, f)?;
    if (fine - coarse).abs() <= quad.rel_tol * fine.abs() || fine == 0.0 {
        return Ok(fine);
    }
    if depth >= quad.max_depth {
        return Err(Error::QuadratureFailure {
            lower: a,
            upper: b,
            rel_tol: quad.rel_tol,
            max_depth: quad.max_depth,
        });
    }
    let m = 0.5 * (a + b);
    let left = apply(rule(RADIAL_LOW), a, m, f)?;
    let right = apply(rule(RADIAL_LOW), m, b, f)?;
    Ok(adaptive(f, a, m, left, depth + 1, quad)? + adaptive(f, m, b, right, depth + 1, quad)?)
}

/// Power absorbed in the shell `r_inner < r < r_outer`,
/// `(ω ε″/8π) ∫ |E|² dV`, normalised to `W_free`.
pub fn absorbed_power(
    fields: &dyn FieldEvaluator,
    r_inner: f64,
    r_outer: f64,
    eps_local: &ComplexPermittivity,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    check_inside_layer(fields, r_inner, r_outer)?;
    if eps_local.eps_im() < 0.0 {
        return Err(Error::InvalidMedium("absorbed power needs ε″ >= 0".into()));
    }
    if eps_local.eps_im() == 0.0 || r_inner == r_outer {
        return Ok(0.0);
    }
    let k0 = fields.k0();
    let radial = |r: f64| -> Result<f64> {
        Ok(r * r
            * angular(
                ANGULAR_ORDER,
                |f| f.e_norm_sqr(),
                |theta| fields.field(r, theta),
            )?)
    };
    // The angular rule is exact for quadratics; confirm once at mid-shell.
    let r_mid = 0.5 * (r_inner + r_outer);
    let a = angular(
        ANGULAR_ORDER,
        |f| f.e_norm_sqr(),
        |t| fields.field(r_mid, t),
    )?;
    let b = angular(
        2 * ANGULAR_ORDER,
        |f| f.e_norm_sqr(),
        |t| fields.field(r_mid, t),
    )?;
    if (a - b).abs() > quad.rel_tol * b.abs() {
        return Err(Error::QuadratureFailure {
            lower: r_mid,
            upper: r_mid,
            rel_tol: quad.rel_tol,
            max_depth: quad.max_depth,
        });
    }
    let mut total = 0.0;
    for (a, b) in panels(fields, r_inner, r_outer) {
        let coarse = apply(rule(RADIAL_LOW), a, b, radial)?;
        total += adaptive(&radial, a, b, coarse, 0, quad)?;
    }
    // (k₀ ε″/8π) · 2π · ∫ r² ∫ |E|² d(cos θ) dr
    Ok(k0 * eps_local.eps_im() / 4.0 * total / w_free(k0))
}

/// `W_f(r_outer) + W_a(r_inner → r_outer)`: everything that crosses
/// `r_inner` outwards.
pub fn flux_plus_absorption(
    fields: &dyn FieldEvaluator,
    r_inner: f64,
    r_outer: f64,
    eps_local: &ComplexPermittivity,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(flux_through_sphere(fields, r_outer, quad)?
        + absorbed_power(fields, r_inner, r_outer, eps_local, quad)?)
}

/// Relative energy-balance defect `|W_f(r_o) + W_a − W_f(r_i)| / W_f(r_i)`.
pub fn energy_balance(
    fields: &dyn FieldEvaluator,
    r_inner: f64,
    r_outer: f64,
    eps_local: &ComplexPermittivity,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let inner = flux_through_sphere(fields, r_inner, quad)?;
    let outer = flux_plus_absorption(fields, r_inner, r_outer, eps_local, quad)?;
    Ok((outer - inner).abs() / inner.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn perm(re: f64, im: f64) -> ComplexPermittivity {
        ComplexPermittivity::new(Complex64::new(re, im)).unwrap()
    }

    fn homogeneous(re: f64, im: f64) -> HomogeneousDipole {
        HomogeneousDipole {
            medium: perm(re, im),
            k0: 1.0,
        }
    }

    // Flux through radius r and absorption between a and b for a unit dipole
    // in an unbounded medium, written out from the near/far decomposition
    // F(r) = |(1 − ikr)e^{ikr}|² (normalised to W_free, k₀ = 1).
    fn analytic_flux(eps: Complex64, r: f64) -> f64 {
        let k = eps.sqrt();
        let i = Complex64::i();
        let near = ((1.0 - i * k * r) * (i * k * r).exp()).norm_sqr();
        eps.im / eps.norm_sqr() * near / r.powi(3) + k.re * (-2.0 * k.im * r).exp()
    }

    fn analytic_absorbed(eps: Complex64, a: f64, b: f64) -> f64 {
        analytic_flux(eps, a) - analytic_flux(eps, b)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [4, 8, 10, 20] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            // ∫ u^(2n−2) du = 2/(2n−1)
            let deg = 2 * n - 2;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec::new(0.0, 10).is_err());
        assert!(QuadratureSpec::new(1e-10, 0).is_err());
        assert_eq!(QuadratureSpec::default().rel_tol, 1e-10);
    }

    #[test]
    fn vacuum_flux_is_unity_at_every_radius() {
        let q = QuadratureSpec::default();
        let f = homogeneous(1.0, 0.0);
        for r in [0.01, 0.3, 1.0, 7.0, 50.0] {
            let w = flux_through_sphere(&f, r, &q).unwrap();
            assert!((w - 1.0).abs() < 1e-12, "r = {r}: {w}");
        }
    }

    #[test]
    fn flux_matches_closed_form_in_absorbing_medium() {
        let eps = Complex64::new(5.0, 2.5);
        let w =
            flux_through_sphere(&homogeneous(5.0, 2.5), 1.0, &QuadratureSpec::default()).unwrap();
        let want = analytic_flux(eps, 1.0);
        assert!((w - want).abs() / want < 1e-10, "{w} vs {want}");
    }

    #[test]
    fn flux_density_goes_as_sin_squared() {
        let f = homogeneous(5.0, 2.5);
        let p = |t: f64| f.field(1.3, t).unwrap().radial_flux_density();
        let ratio = p(std::f64::consts::FRAC_PI_4) / p(std::f64::consts::FRAC_PI_2);
        assert!((ratio - 0.5).abs() < 1e-14);
    }

    #[test]
    fn absorption_matches_closed_form() {
        let eps = Complex64::new(5.0, 2.5);
        let w = absorbed_power(
            &homogeneous(5.0, 2.5),
            0.5,
            1.5,
            &perm(5.0, 2.5),
            &QuadratureSpec::default(),
        )
        .unwrap();
        let want = analytic_absorbed(eps, 0.5, 1.5);
        assert!((w - want).abs() / want < 1e-10, "{w} vs {want}");
    }

    #[test]
    fn lossless_medium_absorbs_nothing() {
        let f = homogeneous(2.0, 0.0);
        let q = QuadratureSpec::default();
        assert_eq!(
            absorbed_power(&f, 0.2, 3.0, &perm(2.0, 0.0), &q).unwrap(),
            0.0
        );
        assert!(energy_balance(&f, 0.2, 3.0, &perm(2.0, 0.0), &q).unwrap() < 1e-9);
    }

    #[test]
    fn thin_shell_absorption_is_linear_in_width() {
        let f = homogeneous(3.0, 0.4);
        let q = QuadratureSpec::default();
        let m = perm(3.0, 0.4);
        let w1 = absorbed_power(&f, 1.0, 1.0 + 1e-3, &m, &q).unwrap();
        let w2 = absorbed_power(&f, 1.0, 1.0 + 2e-3, &m, &q).unwrap();
        assert!((w2 / w1 - 2.0).abs() < 5e-3);
    }

    #[test]
    fn absorbing_medium_balances() {
        let f = homogeneous(5.0, 2.5);
        let q = QuadratureSpec::default();
        let res = energy_balance(&f, 0.3, 3.0, &perm(5.0, 2.5), &q).unwrap();
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn stack_shell_balances_and_outer_flux_is_constant() {
        let vac = ComplexPermittivity::vacuum();
        let m = perm(5.0, 2.5);
        let stack = LayerStack::three_layer(vac, m, vac, 0.2, 2.0).unwrap();
        let f = StackField::new(stack, 1.0).unwrap();
        let q = QuadratureSpec::default();
        assert!(energy_balance(&f, 0.25, 1.9, &m, &q).unwrap() < 1e-8);
        let a = flux_through_sphere(&f, 2.5, &q).unwrap();
        let b = flux_through_sphere(&f, 9.0, &q).unwrap();
        assert!((a - b).abs() / a < 1e-10);
    }

    #[test]
    fn shells_may_not_cross_interfaces() {
        let vac = ComplexPermittivity::vacuum();
        let stack = LayerStack::two_layer(vac, perm(2.0, 0.1), 1.0).unwrap();
        let f = StackField::new(stack, 1.0).unwrap();
        let q = QuadratureSpec::default();
        assert!(absorbed_power(&f, 0.5, 1.5, &perm(2.0, 0.1), &q).is_err());
        assert!(flux_through_sphere(&f, 1.0, &q).is_err());
    }

    #[test]
    fn doubling_the_radial_order_is_stable() {
        let f = homogeneous(5.0, 2.5);
        let q = QuadratureSpec::default();
        let coarse = absorbed_power(&f, 0.5, 1.5, &perm(5.0, 2.5), &q).unwrap();
        let tight = QuadratureSpec::new(1e-13, 60).unwrap();
        let fine = absorbed_power(&f, 0.5, 1.5, &perm(5.0, 2.5), &tight).unwrap();
        assert!((coarse - fine).abs() / fine < 1e-10);
    }
}
