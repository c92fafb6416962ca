use num_complex::Complex64;

use cavity_decay::dielectric::ComplexPermittivity;
use cavity_decay::multilayer::LayerStack;
use cavity_decay::oracle::{self, HomogeneousDipole, QuadratureSpec, StackField};
use cavity_decay::rates::{external_power, w0_cutoff, RateReport};
use cavity_decay::sweep::{Preset, SweepConfig};

fn perm(re: f64, im: f64) -> ComplexPermittivity {
    ComplexPermittivity::new(Complex64::new(re, im)).unwrap()
}

#[test]
fn bare_sphere_exterior_flux_matches_analytic_power() {
    let quad = QuadratureSpec::default();
    let stack = LayerStack::two_layer(perm(5.0, 2.5), perm(1.0, 0.0), 2.0).unwrap();
    let field = StackField::new(stack.clone(), 1.0).unwrap();
    for r in [2.5, 4.0, 8.0] {
        let numeric = oracle::flux_through_sphere(&field, r, &quad).unwrap();
        let analytic = external_power(&stack, 1.0, r).unwrap();
        assert!((numeric - analytic).abs() < 1e-9 * analytic, "r = {r}");
    }
}

#[test]
fn lossy_exterior_power_decays_with_radius() {
    let quad = QuadratureSpec::default();
    let ext = perm(2.0, 0.2);
    let stack = LayerStack::two_layer(perm(3.0, 0.5), ext, 1.0).unwrap();
    let field = StackField::new(stack.clone(), 1.2).unwrap();
    let near = external_power(&stack, 1.2, 1.5).unwrap();
    let far = external_power(&stack, 1.2, 6.0).unwrap();
    assert!(far < near);
    let absorbed = oracle::absorbed_power(&field, 1.5, 6.0, &ext, &quad).unwrap();
    assert!((near - far - absorbed).abs() < 1e-9 * near);
}

#[test]
fn sweep_row_cavity_power_agrees_with_quadrature() {
    let cfg = SweepConfig::preset(Preset::Fig3);
    let quad = QuadratureSpec::default();
    for omega in [0.6, 1.0, 1.4] {
        let eps = cfg.medium.eval(omega).unwrap();
        let geometry = cfg.geometry(omega).unwrap();
        let row = RateReport::evaluate(omega, eps, &geometry).unwrap();
        let stack = LayerStack::three_layer(
            ComplexPermittivity::vacuum(),
            eps,
            geometry.eps_ext,
            geometry.onsager_radius,
            geometry.sphere_radius,
        )
        .unwrap();
        let field = StackField::new(stack, omega).unwrap();
        let numeric =
            oracle::flux_through_sphere(&field, geometry.sphere_radius * 1.5, &quad).unwrap();
        assert!(
            (numeric - row.w_ext_loc_exact).abs() < 1e-9 * row.w_ext_loc_exact,
            "omega = {omega}: {numeric} vs {}",
            row.w_ext_loc_exact
        );
    }
}

#[test]
fn homogeneous_cutoff_power_from_the_oracle() {
    let quad = QuadratureSpec::default();
    let eps = perm(-2.0, 3.0);
    let field = HomogeneousDipole {
        medium: eps,
        k0: 0.7,
    };
    let rc = 0.4;
    let numeric = oracle::flux_plus_absorption(&field, rc, rc + 15.0, &eps, &quad).unwrap();
    let analytic = w0_cutoff(&eps, 0.7, rc).unwrap();
    assert!((numeric - analytic).abs() < 1e-9 * analytic);
}

#[test]
fn shells_across_interfaces_are_rejected() {
    let quad = QuadratureSpec::default();
    let eps = perm(5.0, 2.5);
    let stack =
        LayerStack::three_layer(ComplexPermittivity::vacuum(), eps, perm(1.0, 0.0), 0.5, 2.0)
            .unwrap();
    let field = StackField::new(stack, 1.0).unwrap();
    assert!(oracle::absorbed_power(&field, 0.4, 1.0, &eps, &quad).is_err());
    assert!(oracle::flux_through_sphere(&field, 2.0, &quad).is_err());
}
