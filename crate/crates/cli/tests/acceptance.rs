//! One line per acceptance criterion; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use wavekahler::dim4::{convergence_ratio, solve_conformal_factor, AxisymmetricField, IsothermalSurface, StereoChart};
use wavekahler::framegeo::DomainBox;
use wavekahler::hirzebruch::{endpoint_ratio, HirzebruchProfile};
use wavekahler::wavebuild::{BaseAK, WaveMode, WaveStructure};
use wavekahler_cli::{presets, run, RunConfig, Task};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Reproducible coefficient vectors in `[-1, 1]^k`.
fn coefficients(count: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    DomainBox::new(vec![-1.0; k], vec![1.0; k]).sample_points(count, seed)
}

fn random_surface(c: &[f64]) -> IsothermalSurface {
    let u = format!("{}*sin(x + 2*y) + {}*x*y - {}*y^2", 0.4 * c[0], 0.4 * c[1], 0.1 * c[2]);
    IsothermalSurface::from_expr("random-surface", &u, DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0])).unwrap()
}

fn dim4_profile(c: &[f64]) -> String {
    format!("{}*sin(theta)*x + {}*cos(2*theta + y)*x*y + {}*exp(y)", c[3], c[4], c[5])
}

fn dim6_profile(c: &[f64]) -> String {
    format!("{}*sin(theta)*cos(z1) + {}*t2*z2 + {}*cos(2*theta + t1)", c[0], c[1], c[2])
}

fn mode(c: f64) -> WaveMode {
    if c > 0.0 {
        WaveMode::Abstract
    } else {
        WaveMode::Coordinate
    }
}

fn criterion_1() -> Verdict {
    let samples = coefficients(100, 7, 101);
    let dim4: Vec<f64> = samples
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let w = random_surface(c).wave(&dim4_profile(c), mode(c[6])).unwrap();
            let p = w.wave().sample_points(1, i as u64)[0].clone();
            w.wave().at(&p, 2).unwrap().second_chern_formula_residual().unwrap()
        })
        .collect();
    let dim6: Vec<f64> = samples
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let w = WaveStructure::from_source(&BaseAK::torus4(), &dim6_profile(c), mode(c[6])).unwrap();
            let p = w.sample_points(1, 1000 + i as u64)[0].clone();
            w.at(&p, 2).unwrap().second_chern_formula_residual().unwrap()
        })
        .collect();
    let m4 = dim4.iter().cloned().fold(0.0, f64::max);
    let m6 = dim6.iter().cloned().fold(0.0, f64::max);
    verdict(m4 <= 1e-9 && m6 <= 1e-9, format!("100 dim-4 max {m4:.2e}, 100 dim-6 max {m6:.2e} (tol 1e-9)"))
}

fn criterion_2() -> Verdict {
    let w = WaveStructure::from_source(&BaseAK::torus4(), "sin(theta)*cos(z1)", WaveMode::Auto).unwrap();
    let darboux = w
        .sample_points(100, 7)
        .par_iter()
        .map(|p| w.check_prop_darboux(p).unwrap())
        .reduce(|| 0.0, f64::max);
    let mut worst: f64 = 0.0;
    let mut waves: Vec<(String, WaveStructure)> = presets::BASES
        .iter()
        .map(|(name, h, _)| {
            let base = presets::base(name, None).unwrap();
            (name.to_string(), WaveStructure::from_source(&base, h, WaveMode::Auto).unwrap())
        })
        .collect();
    let hp = HirzebruchProfile::solve(1.0).unwrap();
    waves.push(("hirzebruch".into(), hp.wave().unwrap()));
    waves.push(("hirzebruch-euler".into(), hp.euler_wave().unwrap()));
    let sol = solve_conformal_factor(&AxisymmetricField::parse("zeta").unwrap(), 200).unwrap();
    waves.push(("solved-sphere".into(), sol.wave(StereoChart::FromNorth).unwrap().wave().clone()));
    for (_, w) in &waves {
        worst = worst.max(w.check_scalar_equality(&w.sample_points(10, 3)).unwrap());
    }
    verdict(
        darboux <= 1e-9 && worst <= 1e-9,
        format!("Darboux max {darboux:.2e} on 100 points; s^H = s^H_M max {worst:.2e} over {} presets (tol 1e-9)", waves.len()),
    )
}

fn criterion_3() -> Verdict {
    let w = WaveStructure::from_source(&BaseAK::sphere_north(), "z", WaveMode::Coordinate).unwrap();
    let reports: Vec<_> = w.sample_points(50, 3).par_iter().map(|p| w.extremal_mechanism_check(p, 1e-9).unwrap()).collect();
    let total = reports.iter().map(|r| r.total).fold(0.0, f64::max);
    let mut parts = std::collections::BTreeMap::<String, f64>::new();
    for r in &reports {
        for (k, v) in &r.parts {
            let e = parts.entry(k.clone()).or_insert(0.0);
            *e = e.max(*v);
        }
    }
    let part_max = parts.values().cloned().fold(0.0, f64::max);
    let names: Vec<String> = parts.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    verdict(total <= 1e-9 && part_max <= 1e-9, format!("total Killing {total:.2e}; {} (tol 1e-9)", names.join(", ")))
}

fn criterion_4() -> Verdict {
    let samples = coefficients(100, 7, 404);
    let rows: Vec<[f64; 4]> = samples
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let w = random_surface(c).wave(&dim4_profile(c), mode(c[6])).unwrap();
            let p = w.wave().sample_points(1, 4000 + i as u64)[0].clone();
            let r = w.wave().at(&p, 2).unwrap().report().unwrap().r;
            [
                w.rho_residual(&p).unwrap(),
                w.r_residual(&p).unwrap(),
                w.nijenhuis_norm_residual(&p).unwrap(),
                w.closed_form_r_sign_corrected(&p).unwrap().max_abs_diff(&r),
            ]
        })
        .collect();
    let col = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let (rho, r_printed, nn, r_fixed) = (col(0), col(1), col(2), col(3));
    let failing = rows.iter().filter(|r| r[1] > 1e-9).count();
    verdict(
        rho <= 1e-9 && r_printed <= 1e-9 && nn <= 1e-10,
        format!(
            "rho closed form {rho:.2e}; printed r display {r_printed:.2e} ({failing}/100 samples over 1e-9); |N|^2 = 8|N(X,T)|^2 {nn:.2e}; \
             sign-corrected r display {r_fixed:.2e} (info)"
        ),
    )
}

fn criterion_5() -> Verdict {
    let field = AxisymmetricField::parse("sqrt(6)*z").unwrap();
    let sol = solve_conformal_factor(&field, 400).unwrap();
    let norm = (sol.energy - 16.0 * PI).abs() / (16.0 * PI);
    let err = sol.max_error(|z| (1.0 - 3.0 * z * z) / 12.0, false);
    let mut sce: f64 = 0.0;
    for chart in [StereoChart::FromNorth, StereoChart::FromSouth] {
        let w = sol.wave(chart).unwrap();
        for p in w.wave().sample_points(25, 5) {
            sce = sce.max(w.wave().at(&p, 2).unwrap().sce_residual().unwrap().1);
            sce = sce.max(w.sce_constraint_residual(&p).unwrap());
        }
    }
    let ratio = convergence_ratio(&field, 100, |z| (1.0 - 3.0 * z * z) / 12.0).unwrap();
    verdict(
        norm <= 1e-8 && err <= 1e-6 && sce <= 1e-6 && ratio >= 3.5,
        format!("energy rel {norm:.2e}; f error {err:.2e} at grid 400; sce {sce:.2e}; ratio {ratio:.2}"),
    )
}

fn criterion_6() -> Verdict {
    let x = endpoint_ratio().unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    let mut others: f64 = 0.0;
    for h0 in [0.5, 1.0, 2.0] {
        let p = HirzebruchProfile::solve(h0).unwrap();
        let ts = p.interior_samples(50, p.l / 51.0);
        let ratio = (p.hl / h0 - 3f64.powf(0.25)).abs().max((x - 3f64.powf(0.25)).abs());
        let bc = p.boundary_report().max_abs();
        let (tform, yform) = p.ode_residual(&ts).unwrap();
        let (cond, _) = p.condition_agreement(&ts).unwrap();
        let spread = p.sce_check(&p.interior_samples(50, 0.0)).unwrap().iter().map(|s| s.spread).fold(0.0, f64::max);
        let (wa, we) = (p.wave().unwrap(), p.euler_wave().unwrap());
        let mut generic: f64 = 0.0;
        for (i, t) in p.interior_samples(5, 0.05 * p.l).into_iter().enumerate() {
            let h = p.h_of_t(t).unwrap();
            let a = p.generic_check(&wa, &p.point(0.4 * i as f64, 0.2, t).unwrap()).unwrap();
            let e = p.generic_check(&we, &[0.1 * i as f64, 0.3, 1.2, 0.5, 0.7, h]).unwrap();
            generic = generic.max(a.r_display).max(e.r_display);
        }
        let ok = ratio <= 1e-12 && bc <= 1e-12 && tform.max(yform) <= 1e-10 && cond <= 1e-10 && spread <= 1e-8 && generic <= 1e-8;
        if !ok {
            notes.push(format!("h0={h0}: ratio {ratio:.1e} bc {bc:.1e} ode {:.1e} cond {cond:.1e} spread {spread:.1e} generic {generic:.1e}", tform.max(yform)));
        }
        others = others.max(ratio).max(bc).max(tform).max(yform).max(cond);
        pass &= ok;
        let lambda0 = p.sce_sample(0.0).unwrap().lambda;
        let stated = 2.0 * h0 * h0;
        if (lambda0 - stated).abs() > 1e-8 {
            pass = false;
            notes.push(format!("h0={h0}: lambda(0) = {lambda0:.6} but stated 2h0^2 = {stated}"));
        }
    }
    let summary = if notes.is_empty() { "all sub-checks within tolerance".to_string() } else { notes.join("; ") };
    verdict(pass, format!("{summary}; max of ratio/bc/ode/cond residuals {others:.1e}"))
}

fn criterion_7() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    let mut deterministic = true;
    for (name, _) in presets::STRUCTURES {
        let mut cfg = RunConfig::new(Task::CheckIdentities);
        cfg.preset = Some(name.to_string());
        cfg.points = 8;
        cfg.seed = 17;
        cfg.per_point = true;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        deterministic &= a.json() == b.json();
        let rep = &a.reports[0];
        worst = worst.max(rep.max_residual);
        if !rep.pass {
            failed.push(name.to_string());
        }
    }
    verdict(
        failed.is_empty() && deterministic,
        format!(
            "{} structures, max residual {worst:.2e} (tol 1e-9); deterministic {deterministic}{}",
            presets::STRUCTURES.len(),
            if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, Option<Duration>); 7] = [
        ("1 second Chern-Ricci formula on random structures", criterion_1, Some(Duration::from_secs(10))),
        ("2 Darboux identity and scalar equality", criterion_2, None),
        ("3 extremal mechanism on the sphere", criterion_3, None),
        ("4 dim-4 closed forms and Nijenhuis norm", criterion_4, None),
        ("5 conformal factor pipeline", criterion_5, None),
        ("6 Hirzebruch profile", criterion_6, Some(Duration::from_secs(60))),
        ("7 global invariant suite", criterion_7, None),
    ];
    let mut all = true;
    for (name, f, limit) in criteria {
        let start = Instant::now();
        let v = f();
        let took = start.elapsed();
        let in_time = limit.map_or(true, |l| took <= l);
        let pass = v.pass && in_time;
        all &= pass;
        let budget = limit.map_or(String::new(), |l| format!(", limit {}s", l.as_secs()));
        println!("criterion {name}: {} | {} | {:.2}s{budget}", if pass { "PASS" } else { "FAIL" }, v.detail, took.as_secs_f64());
    }
    if !all {
        std::process::exit(1);
    }
}
