//! Normalised decay rates, level shifts and power losses.
//!
//! Every quantity is divided by the free-space loss `W_free = k₀⁴/3`. With
//! `ρ = k₀R_c` the Onsager cavity size, the small-cavity expansions are valid
//! for `ρ ≪ 1`; the public expansion functions log a warning for `ρ ≥ 0.3`.

use num_complex::Complex;

use crate::dielectric::ComplexPermittivity;
use crate::error::{Error, Result};
use crate::multilayer::{
    coeffs_three_layer, coeffs_two_layer, exact_coefficients, field_center_limit,
    three_layer_betas, LayerStack, WaveCoefficients,
};
use crate::real::{imag_unit, lit, ratio, real_c, Real};

/// Upper end of the range where the small-cavity expansions are trusted.
pub const EXPANSION_LIMIT: f64 = 0.3;

fn warn_expansion<T: Real>(what: &str, k0: T, rc: T) {
    let rho = (k0 * rc).to_f64_lossy();
    if rho >= EXPANSION_LIMIT {
        log::warn!(
            "{what}: k0*Rc = {rho:.4} is outside the small-cavity range (< {EXPANSION_LIMIT})"
        );
    }
}

fn positive<T: Real>(name: &str, x: T) -> Result<()> {
    if !(x > T::zero() && x.is_finite()) {
        return Err(Error::Domain(format!(
            "{name} = {:e} must be positive",
            x.to_f64_lossy()
        )));
    }
    Ok(())
}

fn two_eps_plus_one<T: Real>(eps: &ComplexPermittivity<T>) -> Result<Complex<T>> {
    let d = eps.eps() * lit::<T>(2.0) + T::one();
    if d.norm_sqr().is_zero() {
        return Err(Error::Domain(
            "Onsager factor has a pole at ε = −1/2".into(),
        ));
    }
    Ok(d)
}

/// `|(ε+2)/3|²`
pub fn lorentz_factor<T: Real>(eps: &ComplexPermittivity<T>) -> T {
    ((eps.eps() + lit::<T>(2.0)) / lit::<T>(3.0)).norm_sqr()
}

/// Onsager field ratio `3ε/(2ε+1)`.
pub fn onsager_amplitude<T: Real>(eps: &ComplexPermittivity<T>) -> Result<Complex<T>> {
    Ok(eps.eps() * lit::<T>(3.0) / two_eps_plus_one(eps)?)
}

/// `|3ε/(2ε+1)|²`
pub fn onsager_factor<T: Real>(eps: &ComplexPermittivity<T>) -> Result<T> {
    Ok(onsager_amplitude(eps)?.norm_sqr())
}

fn loss_ratio<T: Real>(eps: &ComplexPermittivity<T>) -> T {
    eps.eps_im() / eps.abs_sq()
}

/// Macroscopic infinite-medium rate `Γ̂⁰ = (3/2)(ε″/|ε|²)(k₀R_m)⁻³ + η`.
pub fn gamma0_macroscopic<T: Real>(eps: &ComplexPermittivity<T>, k0: T, rm: T) -> Result<T> {
    positive("Rm", rm)?;
    Ok(nonradiative_macroscopic(eps, k0, rm) + eps.eta())
}

/// Near-field part of [`gamma0_macroscopic`].
pub fn nonradiative_macroscopic<T: Real>(eps: &ComplexPermittivity<T>, k0: T, rm: T) -> T {
    ratio::<T>(3.0, 2.0) * loss_ratio(eps) / (k0 * rm).powi(3)
}

/// Radiated-plus-absorbed power of a dipole `p` in an unbounded medium,
/// counted from radius `r` outwards:
/// `|p|²[(ε″/|ε|²)|(1−ikr)e^{ikr}|²(k₀r)⁻³ + η e^{−2k″r}]`.
fn cutoff_power<T: Real>(eps: &ComplexPermittivity<T>, p_abs_sq: T, k0: T, r: T) -> T {
    let kr = eps.wavenumber(k0) * r;
    let i = imag_unit::<T>();
    let near = ((real_c(T::one()) - i * kr) * (i * kr).exp()).norm_sqr();
    let decay = (-(lit::<T>(2.0) * kr.im)).exp();
    p_abs_sq * (loss_ratio(eps) * near / (k0 * r).powi(3) + eps.eta() * decay)
}

/// Infinite-medium loss with the absorption integral cut off at `R_c`.
pub fn w0_cutoff<T: Real>(eps: &ComplexPermittivity<T>, k0: T, rc: T) -> Result<T> {
    positive("Rc", rc)?;
    positive("k0", k0)?;
    Ok(cutoff_power(eps, T::one(), k0, rc))
}

/// Small-`R_c` expansion of [`w0_cutoff`]:
/// `(ε″/|ε|²)[ρ⁻³ + ε′ρ⁻¹ − (2/3)(ηε″ + κε′)] + η`.
pub fn w0_expanded<T: Real>(eps: &ComplexPermittivity<T>, k0: T, rc: T) -> Result<T> {
    positive("Rc", rc)?;
    warn_expansion("w0_expanded", k0, rc);
    let rho = k0 * rc;
    let bracket = rho.powi(-3) + eps.eps_re() / rho
        - ratio::<T>(2.0, 3.0) * (eps.eta() * eps.eps_im() + eps.kappa() * eps.eps_re());
    Ok(loss_ratio(eps) * bracket + eps.eta())
}

/// Bracketed near-field term `(ε″/|ε|²)ρ⁻³` of the local-field rate.
pub fn nonradiative_loc_bracket<T: Real>(eps: &ComplexPermittivity<T>, k0: T, rc: T) -> T {
    loss_ratio(eps) / (k0 * rc).powi(3)
}

fn gamma0_loc_unchecked<T: Real>(eps: &ComplexPermittivity<T>, k0: T, rc: T) -> Result<T> {
    let d = two_eps_plus_one(eps)?.norm_sqr();
    let (er, ei, a2) = (eps.eps_re(), eps.eps_im(), eps.abs_sq());
    let (eta, kappa) = (eps.eta(), eps.kappa());
    let rho = k0 * rc;
    let two = lit::<T>(2.0);
    let middle = (lit::<T>(28.0) * a2 + lit::<T>(16.0) * er + T::one()) / (lit::<T>(5.0) * d);
    let free = two * (two * kappa * a2 + kappa * er + eta * ei) / d;
    let bracket = rho.powi(-3) + middle / rho - free;
    Ok(onsager_factor(eps)? * (eta + loss_ratio(eps) * bracket))
}

/// Local-field corrected infinite-medium rate for an Onsager cavity `R_c`.
pub fn gamma0_loc<T: Real>(eps: &ComplexPermittivity<T>, k0: T, rc: T) -> Result<T> {
    positive("Rc", rc)?;
    warn_expansion("gamma0_loc", k0, rc);
    gamma0_loc_unchecked(eps, k0, rc)
}

/// Small-cavity expansion of the effective dipole `C²₂(1, ε; R_c)/ε`.
pub fn p_eff_expansion<T: Real>(eps: &ComplexPermittivity<T>, k0: T, rc: T) -> Result<Complex<T>> {
    positive("Rc", rc)?;
    warn_expansion("p_eff_expansion", k0, rc);
    let e = eps.eps();
    let d = two_eps_plus_one(eps)?;
    let rho = k0 * rc;
    let one = real_c(T::one());
    let second = (e * e * lit::<T>(10.0) - e * lit::<T>(9.0) - one) / (d * lit::<T>(10.0));
    let third = imag_unit::<T>() * ratio::<T>(2.0, 3.0) * eps.pow_3_2() * (e - one) / d;
    Ok(onsager_amplitude(eps)? * (one - second * rho * rho - third * rho.powi(3)))
}

/// Exact effective dipole `C²₂(1, ε; R_c)/ε` of an empty cavity in `ε`.
pub fn p_eff_exact<T: Real>(eps: &ComplexPermittivity<T>, k0: T, rc: T) -> Result<Complex<T>> {
    let vacuum = ComplexPermittivity::vacuum();
    Ok(coeffs_two_layer(&vacuum, eps, rc, k0)?.outer() / eps.eps())
}

/// Small-cavity expansion of `C³₁(1, ε, ε_ext; R_c, R)` through the
/// `R_c`-free term.
pub fn c3_1_expansion<T: Real>(
    eps: &ComplexPermittivity<T>,
    eps_ext: &ComplexPermittivity<T>,
    k0: T,
    rc: T,
    r: T,
) -> Result<Complex<T>> {
    positive("Rc", rc)?;
    warn_expansion("c3_1_expansion", k0, rc);
    let e = eps.eps();
    let d = two_eps_plus_one(eps)?;
    let i = imag_unit::<T>();
    let rho = k0 * rc;
    let nine = lit::<T>(9.0);
    let (b1, b2) = three_layer_betas(eps, eps_ext, r, k0)?;
    let t3 = -i * e * nine / d / rho.powi(3);
    let t1 = -i * e * nine * (e * lit::<T>(8.0) + T::one()) / (d * d * lit::<T>(5.0)) / rho;
    let t0 = -(eps.pow_5_2() * nine / (d * d)) * (b1 - b2) / (b1 + b2);
    Ok(t3 + t1 + t0 - T::one())
}

/// `Γ̂ = 1 + Re C^N₁` for a stack whose core is the vacuum cavity.
pub fn gamma_hat_total<T: Real>(stack: &LayerStack<T>, k0: T) -> Result<T> {
    let core = stack.eps()[0].eps();
    if (core - T::one()).norm() > lit(1e-12) {
        return Err(Error::InvalidStack(format!(
            "the core must be vacuum, got ε₁ = {}",
            crate::real::to_c64(core)
        )));
    }
    Ok(T::one() + exact_coefficients(stack, k0)?.c1.re)
}

/// `√ε C²₁(ε, ε_ext; R)` of the bare sphere; its real part is `Γ̂ˢᶜ` and half
/// its imaginary part `Δ̂ˢᶜ`.
pub fn bare_sphere_response<T: Real>(
    eps: &ComplexPermittivity<T>,
    eps_ext: &ComplexPermittivity<T>,
    r: T,
    k0: T,
) -> Result<Complex<T>> {
    Ok(eps.sqrt() * coeffs_two_layer(eps, eps_ext, r, k0)?.c1)
}

pub fn gamma_sc<T: Real>(
    eps: &ComplexPermittivity<T>,
    eps_ext: &ComplexPermittivity<T>,
    r: T,
    k0: T,
) -> Result<T> {
    Ok(bare_sphere_response(eps, eps_ext, r, k0)?.re)
}

pub fn delta_sc<T: Real>(
    eps: &ComplexPermittivity<T>,
    eps_ext: &ComplexPermittivity<T>,
    r: T,
    k0: T,
) -> Result<T> {
    Ok(bare_sphere_response(eps, eps_ext, r, k0)?.im / lit::<T>(2.0))
}

/// `9ε^{5/2}/(2ε+1)²`
fn onsager_response_weight<T: Real>(eps: &ComplexPermittivity<T>) -> Result<Complex<T>> {
    let d = two_eps_plus_one(eps)?;
    Ok(eps.pow_5_2() * lit::<T>(9.0) / (d * d))
}

/// Both sides of `Re[9ε^{5/2}/(2ε+1)²] = L·η − 18ε″[(2|ε|²+ε′)κ + ε″η]/|2ε+1|⁴`.
pub fn identity_rep_decomposition<T: Real>(eps: &ComplexPermittivity<T>) -> Result<(T, T)> {
    let lhs = onsager_response_weight(eps)?.re;
    let d2 = two_eps_plus_one(eps)?.norm_sqr();
    let (er, ei) = (eps.eps_re(), eps.eps_im());
    let inner = (lit::<T>(2.0) * eps.abs_sq() + er) * eps.kappa() + ei * eps.eta();
    let rhs = onsager_factor(eps)? * eps.eta() - lit::<T>(18.0) * ei * inner / (d2 * d2);
    Ok((lhs, rhs))
}

/// Cavity-induced rate with local-field corrections from the bare-sphere
/// rate and shift, `L{Γ̂ˢᶜ − 2(ε″/|ε|²)[2(2|ε|²+ε′)Δ̂ˢᶜ + ε″Γ̂ˢᶜ]/|2ε+1|²}`.
pub fn gamma_sc_loc_from_bare<T: Real>(
    eps: &ComplexPermittivity<T>,
    gamma_sc: T,
    delta_sc: T,
) -> Result<T> {
    let d2 = two_eps_plus_one(eps)?.norm_sqr();
    let two = lit::<T>(2.0);
    let (er, ei) = (eps.eps_re(), eps.eps_im());
    let absorption =
        two * loss_ratio(eps) * (two * (two * eps.abs_sq() + er) * delta_sc + ei * gamma_sc) / d2;
    Ok(onsager_factor(eps)? * (gamma_sc - absorption))
}

/// Cavity-induced rate with local-field corrections,
/// `Re[9ε^{5/2}/(2ε+1)² C²₁(ε, ε_ext; R)]`.
pub fn gamma_sc_loc<T: Real>(
    eps: &ComplexPermittivity<T>,
    eps_ext: &ComplexPermittivity<T>,
    r: T,
    k0: T,
) -> Result<T> {
    let c1 = coeffs_two_layer(eps, eps_ext, r, k0)?.c1;
    let direct = (onsager_response_weight(eps)? * c1).re;
    if cfg!(debug_assertions) {
        let x = eps.sqrt() * c1;
        let via_bare = gamma_sc_loc_from_bare(eps, x.re, x.im / lit::<T>(2.0))?;
        let scale = onsager_factor(eps)? * x.norm() + direct.abs();
        debug_assert!(
            (direct - via_bare).abs() <= lit::<T>(1e-9) * scale,
            "local-field cavity rate forms disagree: {direct:?} vs {via_bare:?}"
        );
    }
    Ok(direct)
}

/// Effective dipole seen by the outermost medium, `ε₁C^N_N/ε_N`.
pub fn external_dipole<T: Real>(stack: &LayerStack<T>, k0: T) -> Result<Complex<T>> {
    let c = exact_coefficients(stack, k0)?;
    Ok(effective_outer_dipole(stack, &c))
}

pub fn effective_outer_dipole<T: Real>(
    stack: &LayerStack<T>,
    coeffs: &WaveCoefficients<T>,
) -> Complex<T> {
    stack.eps()[0].eps() * coeffs.outer() / stack.outermost().eps()
}

/// Ratio of the external fields with and without the Onsager cavity,
/// `C³₃(1, ε, ε_ext; R_c, R)/(ε C²₂(ε, ε_ext; R))`.
pub fn external_field_ratio<T: Real>(
    eps: &ComplexPermittivity<T>,
    eps_ext: &ComplexPermittivity<T>,
    k0: T,
    rc: T,
    r: T,
) -> Result<Complex<T>> {
    let vacuum = ComplexPermittivity::vacuum();
    let with = coeffs_three_layer(&vacuum, eps, eps_ext, rc, r, k0)?.outer();
    let without = coeffs_two_layer(eps, eps_ext, r, k0)?.outer();
    Ok(with / (eps.eps() * without))
}

/// Power leaving through a sphere of radius `r_obs` in the outermost medium.
pub fn external_power<T: Real>(stack: &LayerStack<T>, k0: T, r_obs: T) -> Result<T> {
    if !(r_obs >= stack.outer_radius()) {
        return Err(Error::Domain(format!(
            "observation radius {:e} lies inside the sphere (outer radius {:e})",
            r_obs.to_f64_lossy(),
            stack.outer_radius().to_f64_lossy()
        )));
    }
    let p = external_dipole(stack, k0)?;
    Ok(cutoff_power(stack.outermost(), p.norm_sqr(), k0, r_obs))
}

/// Total loss in the outer medium, counted from the outer surface.
pub fn external_power_total<T: Real>(stack: &LayerStack<T>, k0: T) -> Result<T> {
    external_power(stack, k0, stack.outer_radius())
}

/// Radiation-zone angular density `dW/dΩ` (normalised to `W_free`).
pub fn angular_radiation<T: Real>(stack: &LayerStack<T>, k0: T, r: T, theta: T) -> Result<T> {
    if !(r >= stack.outer_radius()) {
        return Err(Error::Domain(
            "angular radiation is defined outside the sphere".into(),
        ));
    }
    let p = external_dipole(stack, k0)?;
    let outer = stack.outermost();
    let decay = (-(lit::<T>(2.0) * outer.wavenumber(k0).im * r)).exp();
    let pref = lit::<T>(3.0) / (lit::<T>(8.0) * T::PI());
    Ok(pref * outer.eta() * p.norm_sqr() * decay * theta.sin().powi(2))
}

/// `G^sc_zz` at the dipole site, from `E = k₀² G·p`.
pub fn green_zz_at_center<T: Real>(
    coeffs: &WaveCoefficients<T>,
    eps1: &ComplexPermittivity<T>,
    k0: T,
) -> Complex<T> {
    field_center_limit(coeffs, eps1, k0)[2] / (k0 * k0)
}

/// `(Γ̂ˢᶜ, Δ̂ˢᶜ) = ((3/2k₀) Im G_zz, −(3/4k₀) Re G_zz)`.
pub fn rate_and_shift_from_green<T: Real>(g_zz: Complex<T>, k0: T) -> (T, T) {
    (
        lit::<T>(3.0) / (lit::<T>(2.0) * k0) * g_zz.im,
        -lit::<T>(3.0) / (lit::<T>(4.0) * k0) * g_zz.re,
    )
}

/// Simplified rate formulas for comparison plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxMode {
    /// `L(η + Γ̂ˢᶜ)`, radiation-dominated local-field rate.
    Resonance,
    /// `η + Γ̂ˢᶜ`, radiation-dominated macroscopic rate.
    ResonanceMacroscopic,
    /// `L[(ε″/|ε|²)ρ⁻³ + η + Γ̂ˢᶜ]`, near field and radiation comparable.
    Intermediate,
}

pub fn approx_rates(
    eps: &ComplexPermittivity,
    gamma_sc_hat: f64,
    k0: f64,
    rc: f64,
    mode: ApproxMode,
) -> Result<f64> {
    let radiative = eps.eta() + gamma_sc_hat;
    Ok(match mode {
        ApproxMode::Resonance => onsager_factor(eps)? * radiative,
        ApproxMode::ResonanceMacroscopic => radiative,
        ApproxMode::Intermediate => {
            positive("Rc", rc)?;
            onsager_factor(eps)? * (nonradiative_loc_bracket(eps, k0, rc) + radiative)
        }
    })
}

/// Geometry of the sphere with an Onsager cavity at its centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry {
    pub eps_ext: ComplexPermittivity,
    pub sphere_radius: f64,
    pub onsager_radius: f64,
    pub rm: f64,
}

/// All normalised rates for one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub omega: f64,
    pub eps: Complex<f64>,
    pub eta: f64,
    pub kappa: f64,
    pub k0_rc: f64,
    pub onsager_factor: f64,
    pub lorentz_factor: f64,
    pub gamma0_hat: f64,
    pub gamma0_loc_hat: f64,
    pub gamma_sc_hat: f64,
    pub delta_sc_hat: f64,
    pub gamma_sc_loc_hat: f64,
    pub gamma_hat: f64,
    pub gamma_loc_hat: f64,
    pub gamma_naive_loc_hat: f64,
    pub gamma_loc_exact: f64,
    pub w_ext_hat: f64,
    pub w_ext_loc_hat: f64,
    pub w_ext_loc_exact: f64,
}

impl RateReport {
    pub const COLUMNS: [&'static str; 20] = [
        "omega",
        "eps_re",
        "eps_im",
        "eta",
        "kappa",
        "k0_rc",
        "onsager_factor",
        "lorentz_factor",
        "gamma0_hat",
        "gamma0_loc_hat",
        "gamma_sc_hat",
        "delta_sc_hat",
        "gamma_sc_loc_hat",
        "gamma_hat",
        "gamma_loc_hat",
        "gamma_naive_loc_hat",
        "gamma_loc_exact",
        "w_ext_hat",
        "w_ext_loc_hat",
        "w_ext_loc_exact",
    ];

    /// Evaluates every rate at vacuum wavenumber `k0 = ω` (units of `ω₀/c`).
    pub fn evaluate(
        omega: f64,
        eps: ComplexPermittivity,
        geometry: &CavityGeometry,
    ) -> Result<Self> {
        positive("omega", omega)?;
        let k0 = omega;
        let (r, rc) = (geometry.sphere_radius, geometry.onsager_radius);
        let ext = geometry.eps_ext;
        let l_ons = onsager_factor(&eps)?;

        let x = bare_sphere_response(&eps, &ext, r, k0)?;
        let (gamma_sc_hat, delta_sc_hat) = (x.re, x.im / 2.0);
        let gamma_sc_loc_hat = gamma_sc_loc(&eps, &ext, r, k0)?;
        let gamma0_hat = gamma0_macroscopic(&eps, k0, geometry.rm)?;
        let gamma0_loc_hat = gamma0_loc_unchecked(&eps, k0, rc)?;
        let gamma_hat = gamma0_hat + gamma_sc_hat;

        let bare = LayerStack::two_layer(eps, ext, r)?;
        let w_ext_hat = external_power_total(&bare, k0)?;
        let cavity = LayerStack::three_layer(ComplexPermittivity::vacuum(), eps, ext, rc, r)?;
        let cavity_coeffs = exact_coefficients(&cavity, k0)?;
        let p_loc = effective_outer_dipole(&cavity, &cavity_coeffs);
        let w_ext_loc_exact = cutoff_power(&ext, p_loc.norm_sqr(), k0, r);

        Ok(Self {
            omega,
            eps: eps.eps(),
            eta: eps.eta(),
            kappa: eps.kappa(),
            k0_rc: k0 * rc,
            onsager_factor: l_ons,
            lorentz_factor: lorentz_factor(&eps),
            gamma0_hat,
            gamma0_loc_hat,
            gamma_sc_hat,
            delta_sc_hat,
            gamma_sc_loc_hat,
            gamma_hat,
            gamma_loc_hat: gamma0_loc_hat + gamma_sc_loc_hat,
            gamma_naive_loc_hat: l_ons * gamma_hat,
            gamma_loc_exact: 1.0 + cavity_coeffs.c1.re,
            w_ext_hat,
            w_ext_loc_hat: l_ons * w_ext_hat,
            w_ext_loc_exact,
        })
    }

    /// Values in the order of [`RateReport::COLUMNS`].
    pub fn values(&self) -> [f64; 20] {
        [
            self.omega,
            self.eps.re,
            self.eps.im,
            self.eta,
            self.kappa,
            self.k0_rc,
            self.onsager_factor,
            self.lorentz_factor,
            self.gamma0_hat,
            self.gamma0_loc_hat,
            self.gamma_sc_hat,
            self.delta_sc_hat,
            self.gamma_sc_loc_hat,
            self.gamma_hat,
            self.gamma_loc_hat,
            self.gamma_naive_loc_hat,
            self.gamma_loc_exact,
            self.w_ext_hat,
            self.w_ext_loc_hat,
            self.w_ext_loc_exact,
        ]
    }

    pub fn column(&self, name: &str) -> Option<f64> {
        Self::COLUMNS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.values()[i])
    }
}
