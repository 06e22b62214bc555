use proptest::prelude::*;
use wavekahler::dim4::{IsothermalSurface, StereoChart};
use wavekahler::hirzebruch::HirzebruchProfile;
use wavekahler::wavebuild::{BaseAK, Profile, WaveError, WaveMode, WaveStructure};

fn presets() -> Vec<(BaseAK, &'static str)> {
    vec![
        (BaseAK::torus2(), "sin(theta)*cos(z) + t"),
        (BaseAK::torus4(), "sin(theta)*cos(z1) + t2"),
        (BaseAK::sphere_north(), "z + 0.3*sin(theta)*x"),
        (BaseAK::sphere_south(), "sqrt(6)*z"),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn construction_invariants_hold(which in 0usize..4, abstract_frame in any::<bool>(), seed in 0u64..500) {
        let (base, src) = presets().swap_remove(which);
        let mode = if abstract_frame { WaveMode::Abstract } else { WaveMode::Coordinate };
        let w = WaveStructure::from_source(&base, src, mode).unwrap();
        for p in w.sample_points(3, seed) {
            for (k, v) in w.invariants(&p).unwrap() {
                prop_assert!(v < 1e-12, "{k} = {v:e}");
            }
            prop_assert!(w.scalar_equality_residual(&p).unwrap() < 1e-9);
        }
    }

    #[test]
    fn darboux_first_chern_ricci(seed in 0u64..500, a in -1.0f64..1.0) {
        let src = format!("sin(theta)*cos(z1) + {a}*theta*t2*z2");
        let w = WaveStructure::from_source(&BaseAK::torus4(), &src, WaveMode::Auto).unwrap();
        for p in w.sample_points(3, seed) {
            prop_assert!(w.check_prop_darboux(&p).unwrap() < 1e-9);
        }
    }

    #[test]
    fn chart_metric_matches_closed_form(seed in 0u64..500) {
        // g = e^{2u}(dx² + dy²) + ½(1 + H²) dθ² + 2H dθ dφ + 2 dφ².
        let base = BaseAK::sphere_north();
        let w = WaveStructure::from_source(&base, "z*cos(theta)", WaveMode::Coordinate).unwrap();
        for p in w.sample_points(3, seed) {
            let g = w.metric_components(&p).unwrap();
            let (x, y) = (p[2], p[3]);
            let r2 = x * x + y * y;
            let e2u = (2.0 / (1.0 + r2)).powi(2);
            let h = (r2 - 1.0) / (r2 + 1.0) * p[0].cos();
            let expect = [
                [0.5 * (1.0 + h * h), h, 0.0, 0.0],
                [h, 2.0, 0.0, 0.0],
                [0.0, 0.0, e2u, 0.0],
                [0.0, 0.0, 0.0, e2u],
            ];
            for a in 0..4 {
                for b in 0..4 {
                    prop_assert!((g[(a, b)] - expect[a][b]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn mechanism_on_the_sphere() {
    let w = WaveStructure::from_source(&BaseAK::sphere_north(), "z", WaveMode::Coordinate).unwrap();
    for p in w.sample_points(10, 3) {
        let rep = w.extremal_mechanism_check(&p, 1e-9).unwrap();
        assert!(rep.total < 1e-9, "{rep:?}");
        for (k, v) in &rep.parts {
            assert!(*v < 1e-9, "{k} = {v:e}");
        }
    }
}

#[test]
fn mechanism_preconditions() {
    let dep = WaveStructure::from_source(&BaseAK::sphere_north(), "z*sin(theta)", WaveMode::Coordinate).unwrap();
    assert!(matches!(dep.extremal_mechanism_check(&[0.1, 0.2, 0.3, 0.4], 1e-9), Err(WaveError::Precondition(_))));
    let not_killing = WaveStructure::from_source(&BaseAK::sphere_north(), "z^2", WaveMode::Coordinate).unwrap();
    assert!(matches!(not_killing.extremal_mechanism_check(&[0.1, 0.2, 0.3, 0.4], 1e-9), Err(WaveError::Precondition(_))));
}

#[test]
fn darboux_identity_refuses_curved_bases() {
    let w = WaveStructure::from_source(&BaseAK::sphere_north(), "z", WaveMode::Coordinate).unwrap();
    assert!(matches!(w.check_prop_darboux(&[0.1, 0.2, 0.3, 0.4]), Err(WaveError::UnsupportedBase { .. })));
}

#[test]
fn abstract_bases_need_the_abstract_wave() {
    let p = HirzebruchProfile::solve(1.0).unwrap();
    let err = WaveStructure::build(&p.base(), p.profile(), WaveMode::Coordinate).unwrap_err();
    assert!(matches!(err, WaveError::UnsupportedBase { .. }));
}

#[test]
fn profiles_reject_phi_and_unknown_names() {
    assert!(Profile::parse("sin(phi)", &BaseAK::torus2()).is_err());
    assert!(Profile::parse("x + 1", &BaseAK::torus2()).is_err());
    assert!(Profile::parse("z1*t2", &BaseAK::torus4()).is_ok());
}

#[test]
fn periodicity_in_theta() {
    let base = BaseAK::torus2();
    let samples = vec![(0.3, vec![1.0, 2.0]), (1.7, vec![0.5, 0.1])];
    let periodic = Profile::parse("sin(theta)*z", &base).unwrap();
    assert!(periodic.periodicity_defect(&samples).unwrap() < 1e-12);
    let drifting = Profile::parse("theta", &base).unwrap();
    assert!((drifting.periodicity_defect(&samples).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn sphere_presets_agree_with_isothermal_surfaces() {
    let a = IsothermalSurface::round_sphere(StereoChart::FromNorth).wave("z", WaveMode::Coordinate).unwrap();
    let b = WaveStructure::from_source(&BaseAK::sphere_north(), "z", WaveMode::Coordinate).unwrap();
    let p = [0.3, 0.1, 0.4, -0.6];
    let ra = a.wave().at(&p, 2).unwrap().report().unwrap();
    let rb = b.at(&p, 2).unwrap().report().unwrap();
    assert!(ra.r.max_abs_diff(&rb.r) < 1e-14);
}
