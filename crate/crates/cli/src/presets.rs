use wavekahler::dim4::{solve_conformal_factor, AxisymmetricField, IsothermalSurface, StereoChart};
use wavekahler::framegeo::DomainBox;
use wavekahler::hirzebruch::HirzebruchProfile;
use wavekahler::wavebuild::{BaseAK, WaveMode, WaveStructure};

use crate::CliError;

pub const DEFAULT_U: &str = "0.2*sin(x + 2*y) + 0.1*x*y";

/// Bases accepted by `check wave` and `check extremal`, with a default `H`.
pub const BASES: &[(&str, &str, &str)] = &[
    ("torus2", "sin(theta)*cos(z)", "flat 2-torus, Darboux (z, t)"),
    ("torus4", "sin(theta)*cos(z1)", "flat 4-torus, Darboux (z1, t1, z2, t2)"),
    ("sphere", "z", "round sphere, chart centred at z = -1"),
    ("sphere-south", "z", "round sphere, chart centred at z = +1"),
    ("surface", "x*y + sin(theta)*x", "isothermal surface e^{2u}(dx^2 + dy^2), u from --u"),
];

/// Structures accepted by `check identities`.
pub const STRUCTURES: &[(&str, &str)] = &[
    ("kahler-flat", "flat 4-torus on its own"),
    ("kahler-sphere", "round sphere on its own"),
    ("kahler-surface", "isothermal surface on its own (u from --u)"),
    ("wave-torus2", "4-dimensional wave over the flat 2-torus"),
    ("wave-torus4", "6-dimensional wave over the flat 4-torus"),
    ("wave-sphere", "4-dimensional wave over the round sphere"),
    ("wave-sphere-south", "same in the other stereographic chart"),
    ("wave-surface", "4-dimensional wave over an isothermal surface"),
    ("hirzebruch", "6-dimensional wave with the Hirzebruch profile (h0 from --h0)"),
    ("hirzebruch-euler", "same structure from the Euler-angle frame"),
    ("solved-sphere", "wave over the sphere with the solved conformal factor (H from --H in zeta)"),
];

pub fn base(name: &str, u: Option<&str>) -> Result<BaseAK, CliError> {
    Ok(match name {
        "torus2" => BaseAK::torus2(),
        "torus4" => BaseAK::torus4(),
        "sphere" => BaseAK::sphere_north(),
        "sphere-south" => BaseAK::sphere_south(),
        "surface" => surface(u)?.base().clone(),
        _ => return Err(CliError::Config(format!("unknown base `{name}`; see `wavekahler presets`"))),
    })
}

pub fn default_profile(base: &str) -> &'static str {
    BASES.iter().find(|b| b.0 == base).map_or("0", |b| b.1)
}

fn surface(u: Option<&str>) -> Result<IsothermalSurface, CliError> {
    let dom = DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
    Ok(IsothermalSurface::from_expr("surface", u.unwrap_or(DEFAULT_U), dom)?)
}

/// What `check identities` runs on.
pub enum Structure {
    /// A base on its own, expected to be Kähler.
    Kahler(BaseAK),
    Wave(WaveStructure),
}

impl Structure {
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        match self {
            Structure::Kahler(b) => b.patch().domain().sample_points(count, seed),
            Structure::Wave(w) => w.sample_points(count, seed),
        }
    }
}

pub fn structure(name: &str, h: Option<&str>, u: Option<&str>, h0: f64, grid: Option<usize>) -> Result<Structure, CliError> {
    if let Some(stem) = name.strip_prefix("kahler-") {
        let b = match stem {
            "flat" => BaseAK::torus4(),
            "sphere" => BaseAK::sphere_north(),
            "surface" => surface(u)?.base().clone(),
            _ => return Err(unknown(name)),
        };
        return Ok(Structure::Kahler(b));
    }
    if let Some(stem) = name.strip_prefix("wave-") {
        let b = base(stem, u).map_err(|_| unknown(name))?;
        let src = h.unwrap_or(default_profile(stem));
        return Ok(Structure::Wave(WaveStructure::from_source(&b, src, WaveMode::Auto)?));
    }
    Ok(Structure::Wave(match name {
        "hirzebruch" => HirzebruchProfile::solve(h0)?.wave()?,
        "hirzebruch-euler" => HirzebruchProfile::solve(h0)?.euler_wave()?,
        "solved-sphere" => {
            let field = AxisymmetricField::parse(h.unwrap_or("zeta"))?;
            let sol = solve_conformal_factor(&field, grid.unwrap_or(200))?;
            sol.wave(StereoChart::FromNorth)?.wave().clone()
        }
        _ => return Err(unknown(name)),
    }))
}

fn unknown(name: &str) -> CliError {
    CliError::Config(format!("unknown structure `{name}`; see `wavekahler presets`"))
}
