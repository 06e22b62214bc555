use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use wavekahler::akcore::AkGeometry;
use wavekahler::dim4::{solve_conformal_factor, AxisymmetricField, StereoChart};
use wavekahler::hirzebruch::{endpoint_ratio, HirzebruchProfile};
use wavekahler::wavebuild::{WaveMode, WaveStructure};

use crate::config::{RunConfig, Task};
use crate::presets::{self, Structure};
use crate::report::{Outcome, PointRecord, Report, Table, REPORT_SCHEMA};
use crate::CliError;

pub const THREADS_ENV: &str = "WAVEKAHLER_THREADS";

/// Runs one resolved invocation inside a pool sized by `WAVEKAHLER_THREADS` (0 = auto).
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| CliError::Config(format!("{THREADS_ENV} must be an integer, got `{v}`")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cfg))
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.task {
        Task::CheckIdentities => check_identities(cfg),
        Task::CheckWave => check_wave(cfg),
        Task::CheckExtremal => check_extremal(cfg),
        Task::SolveSphere => solve_sphere(cfg),
        Task::SolveHirzebruch => solve_hirzebruch(cfg),
        Task::Report => Ok(Outcome { text: Some(REPORT_SCHEMA.to_string()), ..Outcome::default() }),
        Task::Presets => Ok(Outcome { text: Some(preset_listing()), ..Outcome::default() }),
    }
}

fn preset_listing() -> String {
    let mut s = String::from("bases (check wave, check extremal):\n");
    for (name, h, what) in presets::BASES {
        s += &format!("  {name:<14} {what}; default H = {h}\n");
    }
    s += "structures (check identities):\n";
    for (name, what) in presets::STRUCTURES {
        s += &format!("  {name:<18} {what}\n");
    }
    s
}

fn par_points<F>(points: &[Vec<f64>], f: F) -> Result<Vec<PointRecord>, CliError>
where
    F: Fn(&[f64]) -> Result<BTreeMap<String, f64>, CliError> + Sync,
{
    points
        .par_iter()
        .map(|p| Ok(PointRecord { point: p.clone(), residuals: f(p)? }))
        .collect()
}

/// Residuals of every generic identity at one point.
pub fn generic_residuals(ak: &AkGeometry) -> Result<BTreeMap<String, f64>, CliError> {
    let rep = ak.report()?;
    let mut out = rep.residuals.clone();
    out.insert("scalar_half_sum".into(), (rep.s_h - 0.5 * (rep.s_g + rep.s_star)).abs());
    out.insert("nijenhuis_type".into(), ak.nijenhuis_type_defect());
    Ok(out)
}

fn check_identities(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let name = cfg.preset.clone().unwrap_or_else(|| "wave-torus4".into());
    let s = presets::structure(&name, cfg.expression("H"), cfg.expression("u"), cfg.h0, cfg.grid)?;
    let points = s.sample_points(cfg.points, cfg.seed);
    let records = par_points(&points, |p| match &s {
        Structure::Kahler(b) => {
            let ak = b.frame().at(p, 3)?;
            let mut out = generic_residuals(&ak)?;
            let rep = ak.report()?;
            out.insert("kahler_nijenhuis".into(), rep.n_norm_sq.sqrt());
            out.insert("kahler_rho_vs_r".into(), rep.rho.max_abs_diff(&rep.r));
            out.insert("kahler_rho_vs_rho_star".into(), rep.rho.max_abs_diff(&rep.rho_star));
            out.insert("kahler_scalars".into(), (rep.s_h - rep.s_g).abs());
            Ok(out)
        }
        Structure::Wave(w) => {
            let mut out = generic_residuals(&w.at(p, 3)?)?;
            for (k, v) in w.invariants(p)? {
                out.insert(format!("invariant_{k}"), v);
            }
            Ok(out)
        }
    })?;
    let tol = cfg.tol(1e-9);
    Ok(Outcome { reports: vec![Report::from_points("identities", &name, records, tol, cfg.per_point)], ..Outcome::default() })
}

fn wave_from(cfg: &RunConfig) -> Result<(String, WaveStructure), CliError> {
    let name = cfg.preset.clone().unwrap_or_else(|| "torus4".into());
    let base = presets::base(&name, cfg.expression("u"))?;
    let src = cfg.expression("H").unwrap_or(presets::default_profile(&name));
    Ok((name, WaveStructure::from_source(&base, src, WaveMode::Auto)?))
}

fn check_wave(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (name, w) = wave_from(cfg)?;
    let points = w.sample_points(cfg.points, cfg.seed);
    let mut reports = Vec::new();
    let inv = par_points(&points, |p| Ok(w.invariants(p)?))?;
    reports.push(Report::from_points("invariants", &name, inv, cfg.tol(1e-12), cfg.per_point));
    let scal = par_points(&points, |p| Ok(BTreeMap::from([("s_h_total_vs_base".to_string(), w.scalar_equality_residual(p)?)])))?;
    reports.push(Report::from_points("scalar_equality", &name, scal, cfg.tol(1e-9), cfg.per_point));
    if w.base().is_darboux() {
        let darb = par_points(&points, |p| Ok(BTreeMap::from([("rho_vs_darboux".to_string(), w.check_prop_darboux(p)?)])))?;
        reports.push(Report::from_points("prop_darboux", &name, darb, cfg.tol(1e-9), cfg.per_point));
    }
    Ok(Outcome { reports, ..Outcome::default() })
}

fn check_extremal(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (name, w) = wave_from(cfg)?;
    let tol = cfg.tol(1e-9);
    let points = w.sample_points(cfg.points, cfg.seed);
    let records = par_points(&points, |p| {
        let rep = w.extremal_mechanism_check(p, tol)?;
        let mut out = rep.parts;
        out.insert("total_killing".into(), rep.total);
        Ok(out)
    })?;
    Ok(Outcome { reports: vec![Report::from_points("extremal_mechanism", &name, records, tol, cfg.per_point)], ..Outcome::default() })
}

/// `zeta,H` rows; a first row that does not parse as numbers is a header.
pub fn read_profile_table(path: &Path) -> Result<AxisymmetricField, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (mut zeta, mut h) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let nums: Option<Vec<f64>> = rec.iter().map(|s| s.parse().ok()).collect();
        match nums {
            Some(v) if v.len() == 2 => {
                zeta.push(v[0]);
                h.push(v[1]);
            }
            None if i == 0 => continue,
            _ => return Err(CliError::Config(format!("{}: row {} is not `zeta,H`", path.display(), i + 1))),
        }
    }
    Ok(AxisymmetricField::from_table(zeta, h)?)
}

fn solve_sphere(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let field = match &cfg.table {
        Some(p) => read_profile_table(p)?,
        None => AxisymmetricField::parse(cfg.expression("H").unwrap_or("zeta"))?,
    };
    let grid = cfg.grid.unwrap_or(400);
    let sol = solve_conformal_factor(&field, grid)?;
    let name = format!("solved-sphere[{}]", field.label());
    let mut reports = vec![
        Report::scalar("normalization", &name, (sol.energy - 16.0 * PI).abs() / (16.0 * PI), cfg.rtol),
        Report::scalar("solvability", &name, sol.solvability_defect / (16.0 * PI), cfg.rtol),
    ];
    let rows = sol.rows()?;
    let sce_tol = cfg.tol(1e-6);
    let grid_records = rows
        .iter()
        .map(|&(z, _, r)| PointRecord { point: vec![z], residuals: BTreeMap::from([("constraint".to_string(), r)]) })
        .collect();
    reports.push(Report::from_points("sce_constraint_grid", &name, grid_records, sce_tol, cfg.per_point));

    let mut sampled = Vec::new();
    for chart in [StereoChart::FromNorth, StereoChart::FromSouth] {
        let w = sol.wave(chart)?;
        let pts = w.wave().sample_points(cfg.points, cfg.seed);
        sampled.extend(par_points(&pts, |p| {
            let ak = w.wave().at(p, 2)?;
            let rep = ak.report()?;
            let (_, sce) = ak.sce_residual()?;
            Ok(BTreeMap::from([
                ("r_minus_lambda_omega".to_string(), sce),
                ("s_star_vs_2s_h".to_string(), (rep.s_star - 2.0 * rep.s_h).abs()),
            ]))
        })?);
    }
    reports.push(Report::from_points("sce_four_metric", &name, sampled, sce_tol, cfg.per_point));
    reports.push(Report::scalar("gauss_bonnet", &name, sol.gauss_bonnet(3, 4)? - 4.0 * PI, cfg.tol(1e-6)));
    let table = Table {
        header: vec!["zeta".into(), "f".into(), "residual".into()],
        rows: rows.iter().map(|&(z, f, r)| vec![z, f, r]).collect(),
    };
    Ok(Outcome { reports, table: Some(table), text: None })
}

fn solve_hirzebruch(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = HirzebruchProfile::solve(cfg.h0)?;
    let name = format!("hirzebruch[h0={}]", cfg.h0);
    let mut reports = vec![
        Report::scalar("endpoint_ratio", &name, p.hl / p.h0 - endpoint_ratio()?, cfg.tol(1e-12)),
        Report::scalar("boundary_conditions", &name, p.boundary_report().max_abs(), cfg.tol(1e-12)),
    ];
    let n = cfg.points.max(50);
    let ts = p.interior_samples(n, p.l / (n + 1) as f64);
    let (tform, yform) = p.ode_residual(&ts)?;
    reports.push(Report::scalar("ode_residual", &name, tform.max(yform), cfg.tol(1e-10)));
    let (diff, min) = p.condition_agreement(&ts)?;
    reports.push(Report::scalar("condition_agreement", &name, diff, cfg.tol(1e-10)));
    reports.push(Report::scalar("condition_positive", &name, (-min).max(0.0), cfg.tol(1e-10)));

    let rows = p.table(cfg.grid.unwrap_or(200))?;
    let spread = rows.iter().map(|r| r[5]).fold(0.0, f64::max);
    reports.push(Report::scalar("sce_spread", &name, spread, cfg.tol(1e-8)));

    let (wa, we) = (p.wave()?, p.euler_wave()?);
    let generic_ts = p.interior_samples(5, 0.05 * p.l);
    let records = generic_ts
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let h = p.h_of_t(t)?;
            let a = p.generic_check(&wa, &p.point(0.4 * i as f64, 0.2, t)?)?;
            let e = p.generic_check(&we, &[0.1 * i as f64, 0.3, 1.2, 0.5, 0.7, h])?;
            let mut out = BTreeMap::new();
            for (tag, c) in [("abstract", a), ("euler", e)] {
                out.insert(format!("{tag}_r_display"), c.r_display);
                out.insert(format!("{tag}_r_prop"), c.r_prop);
                out.insert(format!("{tag}_sce"), c.sce);
                out.insert(format!("{tag}_trace"), c.trace);
            }
            Ok(PointRecord { point: vec![t], residuals: out })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    reports.push(Report::from_points("generic_display", &name, records, cfg.tol(1e-8), cfg.per_point));

    let table = Table {
        header: ["t", "h", "h_prime", "H_prime", "lambda", "spread"].map(String::from).to_vec(),
        rows: rows.into_iter().map(|r| r.to_vec()).collect(),
    };
    Ok(Outcome { reports, table: Some(table), text: None })
}
