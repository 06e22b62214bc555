use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use proptest::prelude::*;
use wavekahler::dim4::{convergence_ratio, solve_conformal_factor, AxisymmetricField, Dim4Error, IsothermalSurface, StereoChart};
use wavekahler::wavebuild::WaveMode;

fn linear_exact(z: f64) -> f64 {
    (1.0 - 3.0 * z * z) / 12.0
}

/// Mean-zero `f` with `f′ = −F/(4(1−ζ²))`, `F = ∫_{−1}^ζ ((1−s²)c²H′² − 4) ds`,
/// everything by nested Gauss–Legendre on a profile given through `H′`.
fn quadrature_oracle(dh: impl Fn(f64) -> f64 + Copy) -> impl Fn(f64) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(60).unwrap());
    let energy = 2.0 * PI * rule.integrate(-1.0, 1.0, |z| (1.0 - z * z) * dh(z).powi(2));
    let c2 = 16.0 * PI / energy;
    let src = move |z: f64| (1.0 - z * z) * c2 * dh(z).powi(2) - 4.0;
    let inner = GaussLegendre::new(NonZeroUsize::new(40).unwrap());
    let fp = move |z: f64| {
        // Integrate from the nearer pole so the quotient stays well conditioned.
        let big = if z <= 0.0 { inner.integrate(-1.0, z, src) } else { -inner.integrate(z, 1.0, src) };
        -0.25 * big / (1.0 - z * z)
    };
    let outer = GaussLegendre::new(NonZeroUsize::new(40).unwrap());
    let raw = move |z: f64| outer.integrate(0.0, z, |s| fp(s));
    let mean = 0.5 * GaussLegendre::new(NonZeroUsize::new(40).unwrap()).integrate(-1.0, 1.0, &raw);
    move |z| raw(z) - mean
}

#[test]
fn linear_profile_calibration() {
    let sol = solve_conformal_factor(&AxisymmetricField::parse("zeta").unwrap(), 400).unwrap();
    assert!((sol.scale - 6f64.sqrt()).abs() < 1e-13);
    assert!((sol.energy - 16.0 * PI).abs() < 1e-11);
    assert!(sol.max_error(linear_exact, false) < 1e-10);
    let oracle = quadrature_oracle(|_| 1.0);
    assert!(sol.zeta.iter().step_by(37).all(|&z| (oracle(z) - linear_exact(z)).abs() < 1e-12));
}

#[test]
fn nonpolynomial_profile_matches_quadrature() {
    let sol = solve_conformal_factor(&AxisymmetricField::parse("sin(2*zeta) + 0.3*zeta^2").unwrap(), 400).unwrap();
    let oracle = quadrature_oracle(|z| 2.0 * (2.0 * z).cos() + 0.6 * z);
    let err = sol.zeta.iter().zip(&sol.f).map(|(&z, &f)| (f - oracle(z)).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "max error {err:e}");
}

#[test]
fn raw_scheme_is_second_order() {
    let field = AxisymmetricField::parse("zeta").unwrap();
    let ratio = convergence_ratio(&field, 100, linear_exact).unwrap();
    assert!(ratio >= 3.5, "ratio {ratio}");
}

#[test]
fn degenerate_and_malformed_inputs() {
    let constant = AxisymmetricField::parse("2").unwrap();
    assert!(matches!(solve_conformal_factor(&constant, 100), Err(Dim4Error::Degenerate)));
    let linear = AxisymmetricField::parse("zeta").unwrap();
    assert!(matches!(solve_conformal_factor(&linear, 101), Err(Dim4Error::Grid(_))));
    assert!(matches!(solve_conformal_factor(&linear, 2), Err(Dim4Error::Grid(_))));
    assert!(AxisymmetricField::from_table(vec![-1.0, 0.0], vec![0.0, 1.0]).is_err());
    assert!(AxisymmetricField::from_table(vec![-1.0, 0.5, 0.2, 1.0], vec![0.0; 4]).is_err());
    assert!(AxisymmetricField::from_table(vec![-0.9, 0.0, 1.0], vec![0.0; 3]).is_err());
}

#[test]
fn tabulated_profile_solves_close_to_the_closed_form() {
    let zeta: Vec<f64> = (0..=80).map(|i| -1.0 + 0.025 * i as f64).collect();
    let h: Vec<f64> = zeta.iter().map(|z| 3.0 * z).collect();
    let sol = solve_conformal_factor(&AxisymmetricField::from_table(zeta, h).unwrap(), 160).unwrap();
    assert!((sol.scale - 6f64.sqrt() / 3.0).abs() < 1e-12);
    assert!(sol.max_error(linear_exact, false) < 1e-9);
}

#[test]
fn gauss_bonnet_on_the_solved_sphere() {
    let sol = solve_conformal_factor(&AxisymmetricField::parse("zeta + 0.4*zeta^3").unwrap(), 200).unwrap();
    let total = sol.gauss_bonnet(3, 4).unwrap();
    assert!((total - 4.0 * PI).abs() < 1e-6, "{total}");
    assert!(sol.f.iter().all(|v| v.is_finite()));
}

#[test]
fn grid_rows_satisfy_the_constraint() {
    let sol = solve_conformal_factor(&AxisymmetricField::parse("zeta").unwrap(), 200).unwrap();
    let rows = sol.rows().unwrap();
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| r.2 < 1e-6), "{:?}", rows.iter().map(|r| r.2).fold(0.0, f64::max));
}

#[test]
fn round_sphere_negative_control() {
    let w = IsothermalSurface::round_sphere(StereoChart::FromNorth).wave("sqrt(6)*z", WaveMode::Coordinate).unwrap();
    for p in w.wave().sample_points(8, 5) {
        let z = StereoChart::FromNorth.zeta_value(&p[2..]);
        let expect = (6.0 * (1.0 - z * z) - 4.0).abs();
        assert!((w.sce_constraint_residual(&p).unwrap() - expect).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn solved_structures_have_constant_ratio(a in -0.5f64..0.5, south in any::<bool>(), seed in 0u64..1000) {
        let field = AxisymmetricField::parse(&format!("zeta + {a}*zeta^3")).unwrap();
        let sol = solve_conformal_factor(&field, 400).unwrap();
        let chart = if south { StereoChart::FromSouth } else { StereoChart::FromNorth };
        let w = sol.wave(chart).unwrap();
        for p in w.wave().sample_points(2, seed) {
            prop_assert!(w.sce_constraint_residual(&p).unwrap() < 1e-6);
            let ak = w.wave().at(&p, 2).unwrap();
            let rep = ak.report().unwrap();
            let (_, res) = ak.sce_residual().unwrap();
            prop_assert!(res < 1e-6);
            let (grad2, _) = w.sce_constraint_terms(&p).unwrap();
            prop_assert!((rep.s_star - 2.0 * rep.s_h).abs() < 1e-6);
            prop_assert!((rep.s_star - grad2).abs() < 1e-6);
            prop_assert!(rep.rho_star.max_abs_diff(&ak.omega().scale(rep.s_star / 4.0)) < 1e-6);
        }
    }

    #[test]
    fn closed_forms_on_random_surfaces(
        a in -0.4f64..0.4, b in -0.4f64..0.4,
        c in prop::array::uniform3(-1.0f64..1.0),
        abstract_frame in any::<bool>(),
        seed in 0u64..1000,
    ) {
        let s = IsothermalSurface::from_expr(
            "random-surface",
            &format!("{a}*sin(x - y) + {b}*x^2"),
            wavekahler::framegeo::DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        ).unwrap();
        let mode = if abstract_frame { WaveMode::Abstract } else { WaveMode::Coordinate };
        let h = format!("{}*cos(theta)*x + {}*sin(theta + y)*y + {}*x*y", c[0], c[1], c[2]);
        let w = s.wave(&h, mode).unwrap();
        for p in w.wave().sample_points(2, seed) {
            prop_assert!(w.rho_residual(&p).unwrap() < 1e-10);
            prop_assert!(w.nijenhuis_norm_residual(&p).unwrap() < 1e-10);
            prop_assert!(w.nijenhuis_wedge_residual(&p).unwrap() < 1e-10);
            prop_assert!(w.nijenhuis_xt_residual(&p).unwrap() < 1e-10);
            let r = w.wave().at(&p, 2).unwrap().report().unwrap().r;
            prop_assert!(w.closed_form_r_sign_corrected(&p).unwrap().max_abs_diff(&r) < 1e-10);
            let tau = w.tau_forms(&p).unwrap();
            prop_assert!(tau.dphi_residual < 1e-10 && tau.djphi_residual < 1e-10);
            prop_assert!(tau.rho.max_abs_diff(&w.closed_form_rho(&p).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn printed_r_display_holds_for_theta_free_profiles(c in prop::array::uniform3(-1.0f64..1.0), seed in 0u64..1000) {
        let s = IsothermalSurface::round_sphere(StereoChart::FromSouth);
        let w = s.wave(&format!("{}*x + {}*x*y + {}*z", c[0], c[1], c[2]), WaveMode::Coordinate).unwrap();
        for p in w.wave().sample_points(2, seed) {
            prop_assert!(w.r_residual(&p).unwrap() < 1e-10);
        }
    }
}

/// The printed `dθ∧dy` coefficient carries the wrong sign on `H·H_xθ`;
/// only the corrected form agrees once `H` depends on `θ`.
#[test]
fn printed_r_display_sign_discrepancy() {
    let s = IsothermalSurface::flat_torus();
    let w = s.wave("sin(theta)*x + 2", WaveMode::Coordinate).unwrap();
    let p = [0.3, 0.0, 0.5, 0.2];
    assert!(w.r_residual(&p).unwrap() > 1e-2);
    let r = w.wave().at(&p, 2).unwrap().report().unwrap().r;
    assert!(w.closed_form_r_sign_corrected(&p).unwrap().max_abs_diff(&r) < 1e-12);
}
