//! Four-dimensional wave structures over surfaces in isothermal coordinates.
//!
//! On `S¹×S¹×Σ` with `g_Σ = e^{2u}(dx² + dy²)`, `X = e^{−u}∂x`, `JX = e^{−u}∂y`,
//! the first and second Chern–Ricci forms have closed expressions in `u` and
//! `H`, and the second-Chern–Einstein condition reduces to
//! `‖grad H‖²_{g_Σ} = 2 s^H_Σ` for `θ`-free `H`. On the sphere with
//! `g_Σ = e^{2f} g₀` this is the Poisson problem
//!
//! ```text
//! ‖grad H‖²₀ = 4 + 4 Δ₀ f,        Δ₀ = −div₀ grad₀,
//! ```
//!
//! solvable iff `∫‖grad H‖²₀ = 16π`. For axisymmetric `H(ζ)` (`ζ` the height
//! on the unit sphere) it becomes `((1−ζ²) f′)′ = −S/4` with
//! `S = (1−ζ²)H′² − 4`.

use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use thiserror::Error;

use crate::akcore::{apply_j, j_one_form};
use crate::expr::{FieldExpr, ParseError};
use crate::forms::FrameForm;
use crate::framegeo::{DomainBox, GeomError};
use crate::jets::{Jet, JetSpace};
use crate::wavebuild::{BaseAK, ChartFn, Profile, WaveError, WaveMode, WaveStructure, PHI, THETA};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Dim4Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error("profile has zero gradient energy and cannot be normalized")]
    Degenerate,
    #[error("normalized profile violates solvability: |∫(‖grad H‖² − 4)| = {defect:e}")]
    Normalization { defect: f64 },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid table: {0}")]
    Table(String),
}

/// Stereographic charts of the unit sphere. Both are isothermal with
/// `e^{u} = 2/(1 + x² + y²)` and orientation-compatible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StereoChart {
    /// Projection from `ζ = 1`; the chart origin is `ζ = −1`.
    FromNorth,
    /// Projection from `ζ = −1`; the chart origin is `ζ = 1`.
    FromSouth,
}

impl StereoChart {
    /// Height `ζ` of a chart point (jet version).
    pub fn zeta(self, x: &[Jet]) -> Jet {
        let r2 = &x[0] * &x[0] + &x[1] * &x[1];
        let num = match self {
            StereoChart::FromNorth => r2.add_scalar(-1.0),
            StereoChart::FromSouth => r2.scale(-1.0).add_scalar(1.0),
        };
        &num / &r2.add_scalar(1.0)
    }

    pub fn zeta_value(self, p: &[f64]) -> f64 {
        let r2 = p[0] * p[0] + p[1] * p[1];
        match self {
            StereoChart::FromNorth => (r2 - 1.0) / (r2 + 1.0),
            StereoChart::FromSouth => (1.0 - r2) / (r2 + 1.0),
        }
    }

    /// Round conformal factor `u₀ = ln 2 − ln(1 + r²)`.
    pub fn round_u(x: &[Jet]) -> Jet {
        let r2 = &x[0] * &x[0] + &x[1] * &x[1];
        r2.add_scalar(1.0).ln().scale(-1.0).add_scalar(std::f64::consts::LN_2)
    }

    /// A chart point at height `zeta` on the positive x-axis.
    pub fn point_at(self, zeta: f64) -> [f64; 2] {
        let r2 = match self {
            StereoChart::FromNorth => (1.0 + zeta) / (1.0 - zeta),
            StereoChart::FromSouth => (1.0 - zeta) / (1.0 + zeta),
        };
        [r2.sqrt(), 0.0]
    }

    /// Chart used for a given height: the one centred at the nearer pole.
    pub fn for_zeta(zeta: f64) -> StereoChart {
        if zeta <= 0.0 {
            StereoChart::FromNorth
        } else {
            StereoChart::FromSouth
        }
    }
}

/// Surface `(Σ, e^{2u}(dx² + dy²))` over a chart box.
#[derive(Clone)]
pub struct IsothermalSurface {
    name: String,
    u: ChartFn,
    base: BaseAK,
}

impl std::fmt::Debug for IsothermalSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "IsothermalSurface({})", self.name)
    }
}

impl IsothermalSurface {
    pub fn new(name: impl Into<String>, u: ChartFn, domain: DomainBox, derived: Vec<(String, ChartFn)>) -> Self {
        let name = name.into();
        let base = BaseAK::isothermal(name.clone(), u.clone(), domain, derived);
        IsothermalSurface { name, u, base }
    }

    /// `u` given as an expression in `x` and `y`.
    pub fn from_expr(name: impl Into<String>, src: &str, domain: DomainBox) -> Result<Self, Dim4Error> {
        let e = FieldExpr::parse_in(src, &["x", "y"])?;
        let u: ChartFn = Arc::new(move |x: &[Jet]| {
            let env = |n: &str| match n {
                "x" => Some(x[0].clone()),
                "y" => Some(x[1].clone()),
                _ => None,
            };
            Ok(e.eval_jet(x[0].space(), &env)?)
        });
        Ok(Self::new(name, u, domain, Vec::new()))
    }

    /// Round unit sphere in one stereographic chart; `z` and `zeta` name the height.
    pub fn round_sphere(chart: StereoChart) -> Self {
        let u: ChartFn = Arc::new(|x: &[Jet]| Ok(StereoChart::round_u(x)));
        Self::sphere_with(chart, u, "sphere")
    }

    fn sphere_with(chart: StereoChart, u: ChartFn, stem: &str) -> Self {
        let z: ChartFn = Arc::new(move |x: &[Jet]| Ok(chart.zeta(x)));
        let name = match chart {
            StereoChart::FromNorth => stem.to_string(),
            StereoChart::FromSouth => format!("{stem}-south"),
        };
        Self::new(
            name,
            u,
            DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
            vec![("z".into(), z.clone()), ("zeta".into(), z)],
        )
    }

    /// Flat square torus `u = 0` on `[0, 2π]²`.
    pub fn flat_torus() -> Self {
        let u: ChartFn = Arc::new(|x: &[Jet]| Ok(x[0].scale(0.0)));
        let tau = 2.0 * std::f64::consts::PI;
        Self::new("flat-torus", u, DomainBox::new(vec![0.0, 0.0], vec![tau, tau]), Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn base(&self) -> &BaseAK {
        &self.base
    }

    pub fn u(&self, x: &[Jet]) -> Result<Jet, GeomError> {
        (self.u)(x)
    }

    /// `s^H_Σ` from frame curvature and from `−2e^{−2u}(u_xx + u_yy)`.
    pub fn hermitian_scalar_two_ways(&self, p: &[f64]) -> Result<(f64, f64), GeomError> {
        let frame = self.base.frame().at(p, 2)?.hermitian_scalar()?.value();
        let x = Jet::seed(p, 2)?;
        let u = self.u(&x)?;
        let lap = u.partial(&[2, 0])? + u.partial(&[0, 2])?;
        Ok((frame, -2.0 * (-2.0 * u.value()).exp() * lap))
    }

    /// Wave structure over this surface.
    pub fn wave(&self, h_src: &str, mode: WaveMode) -> Result<SurfaceWave, Dim4Error> {
        let profile = Profile::parse(h_src, &self.base)?;
        self.wave_with(profile, mode)
    }

    pub fn wave_with(&self, profile: Profile, mode: WaveMode) -> Result<SurfaceWave, Dim4Error> {
        let wave = WaveStructure::build(&self.base, profile, mode)?;
        Ok(SurfaceWave { surface: self.clone(), wave })
    }
}

/// The τ-forms and the first Chern–Ricci form they produce.
#[derive(Debug, Clone)]
pub struct TauForms {
    pub phi: FrameForm,
    pub jphi: FrameForm,
    pub tau_phi: FrameForm,
    pub tau_jphi: FrameForm,
    /// `−½ d(Jτ_φ + Jτ_{Jφ})`.
    pub rho: FrameForm,
    /// `max |dφ − τ_φ∧φ|`.
    pub dphi_residual: f64,
    /// `max |d(Jφ) − τ_{Jφ}∧Jφ|`.
    pub djphi_residual: f64,
}

/// A wave structure over an isothermal surface, with the closed-form expressions.
#[derive(Clone, Debug)]
pub struct SurfaceWave {
    surface: IsothermalSurface,
    wave: WaveStructure,
}

struct Pieces {
    ak: crate::akcore::AkGeometry,
    h: Jet,
    u: Jet,
}

impl SurfaceWave {
    pub fn surface(&self) -> &IsothermalSurface {
        &self.surface
    }

    pub fn wave(&self) -> &WaveStructure {
        &self.wave
    }

    fn pieces(&self, p: &[f64], order: usize) -> Result<Pieces, GeomError> {
        let ak = self.wave.at(p, order)?;
        let h = self.wave.profile_jet(&ak)?;
        let u = self.surface.u(&ak.geometry().coords()[2..])?;
        Ok(Pieces { ak, h, u })
    }

    /// `−dJdu` as a frame 2-form.
    fn minus_d_j_du(&self, pc: &Pieces) -> Result<FrameForm, GeomError> {
        let geo = pc.ak.geometry();
        Ok(geo.exterior_derivative(&j_one_form(&geo.differential(&pc.u)))?.scale(-1.0))
    }

    /// `−dJdu + ½H_{xθ} dθ∧dx + ½H_{yθ} dθ∧dy`.
    pub fn closed_form_rho(&self, p: &[f64]) -> Result<FrameForm, GeomError> {
        let pc = self.pieces(p, 2)?;
        let geo = pc.ak.geometry();
        let ht = pc.h.d(THETA);
        let dth = geo.coordinate_differential(THETA);
        let (dx, dy) = (geo.coordinate_differential(2), geo.coordinate_differential(3));
        let out = self
            .minus_d_j_du(&pc)?
            .add(&dth.wedge(&dx).mul_scalar(&ht.d(2).scale(0.5)))
            .add(&dth.wedge(&dy).mul_scalar(&ht.d(3).scale(0.5)));
        Ok(out)
    }

    /// The closed expression for the second Chern–Ricci form, with the
    /// `dθ∧dy` coefficient `(H_{yθ} − H H_{xθ})/4` as usually displayed.
    pub fn closed_form_r(&self, p: &[f64]) -> Result<FrameForm, GeomError> {
        self.closed_form_r_with(p, -1.0)
    }

    /// Same expression with `dθ∧dy` coefficient `(H_{yθ} + H H_{xθ})/4`, which is
    /// what `(ρ^∇)^{J,+} − ¼‖N‖²ω + 4N(X,T)♭∧(JN(X,T))♭` evaluates to.
    pub fn closed_form_r_sign_corrected(&self, p: &[f64]) -> Result<FrameForm, GeomError> {
        self.closed_form_r_with(p, 1.0)
    }

    fn closed_form_r_with(&self, p: &[f64], dy_sign: f64) -> Result<FrameForm, GeomError> {
        let pc = self.pieces(p, 2)?;
        let geo = pc.ak.geometry();
        let h = &pc.h;
        let ht = h.d(THETA);
        let (hxt, hyt) = (ht.d(2), ht.d(3));
        let hv = h.truncate(hxt.order());
        let dth = geo.coordinate_differential(THETA);
        let dph = geo.coordinate_differential(PHI);
        let (dx, dy) = (geo.coordinate_differential(2), geo.coordinate_differential(3));
        let xh = geo.along(0, h);
        let jxh = geo.along(1, h);
        let grad2 = &xh * &xh + &jxh * &jxh;
        let out = self
            .minus_d_j_du(&pc)?
            .add(&dth.wedge(&dx).mul_scalar(&(&hxt - &(&hv * &hyt)).scale(0.25)))
            .add(&dth.wedge(&dy).mul_scalar(&(&hyt + &(&hv * &hxt).scale(dy_sign)).scale(0.25)))
            .add(&dph.wedge(&dx).mul_scalar(&hyt.scale(-0.5)))
            .add(&dph.wedge(&dy).mul_scalar(&hxt.scale(0.5)))
            .add(&pc.ak.omega().mul_scalar(&grad2.scale(-0.125)))
            .add(&dth.wedge(&dph).mul_scalar(&grad2.scale(0.25)));
        Ok(out)
    }

    /// `max |ρ^∇_generic − closed form|`.
    pub fn rho_residual(&self, p: &[f64]) -> Result<f64, GeomError> {
        let generic = self.wave.at(p, 2)?.first_chern_ricci()?;
        Ok(generic.max_abs_diff(&self.closed_form_rho(p)?))
    }

    /// `max |r_generic − closed form|`.
    pub fn r_residual(&self, p: &[f64]) -> Result<f64, GeomError> {
        let generic = self.wave.at(p, 2)?.second_chern_ricci()?;
        Ok(generic.max_abs_diff(&self.closed_form_r(p)?))
    }

    /// `|‖N‖² − 8‖N(X,T)‖²|`.
    pub fn nijenhuis_norm_residual(&self, p: &[f64]) -> Result<f64, GeomError> {
        let ak = self.wave.at(p, 1)?;
        let nxt: f64 = ak.nijenhuis(0, 2).iter().map(|v| v.value() * v.value()).sum();
        Ok((ak.nijenhuis_norm_sq() - 8.0 * nxt).abs())
    }

    /// `max |4N(X,T)♭∧(JN(X,T))♭ − ¼((XH)² + (JXH)²) dθ∧dφ|`.
    pub fn nijenhuis_wedge_residual(&self, p: &[f64]) -> Result<f64, GeomError> {
        let ak = self.wave.at(p, 1)?;
        let geo = ak.geometry();
        let h = self.wave.profile_jet(&ak)?;
        let nxt = ak.nijenhuis(0, 2).to_vec();
        let lhs = FrameForm::one_form(nxt.clone()).wedge(&FrameForm::one_form(apply_j(&nxt))).scale(4.0);
        let xh = geo.along(0, &h);
        let jxh = geo.along(1, &h);
        let c = (&xh * &xh + &jxh * &jxh).scale(0.25);
        let rhs = geo.coordinate_differential(THETA).wedge(&geo.coordinate_differential(PHI)).mul_scalar(&c);
        Ok(lhs.max_abs_diff(&rhs))
    }

    /// `4N(X,T) + X(H) T + JX(H) JT`, max component.
    pub fn nijenhuis_xt_residual(&self, p: &[f64]) -> Result<f64, GeomError> {
        let ak = self.wave.at(p, 1)?;
        let geo = ak.geometry();
        let h = self.wave.profile_jet(&ak)?;
        let mut expect = [0.0; 4];
        expect[2] = -geo.along(0, &h).value();
        expect[3] = -geo.along(1, &h).value();
        Ok(ak.nijenhuis(0, 2).iter().zip(expect).map(|(n, e)| (4.0 * n.value() - e).abs()).fold(0.0, f64::max))
    }

    /// The τ-forms together with the residuals of `dφ = τ_φ∧φ` and `d(Jφ) = τ_{Jφ}∧Jφ`.
    pub fn tau_forms(&self, p: &[f64]) -> Result<TauForms, GeomError> {
        let pc = self.pieces(p, 2)?;
        let geo = pc.ak.geometry();
        let (x, jx, t, jt) = (geo.coframe(0), geo.coframe(1), geo.coframe(2), geo.coframe(3));
        let phi = x.wedge(&t).sub(&jx.wedge(&jt));
        let jphi = x.wedge(&jt).add(&jx.wedge(&t));
        let (dx, dy) = (geo.coordinate_differential(2), geo.coordinate_differential(3));
        let du = geo.differential(&pc.u);
        let (hx, hy) = (pc.h.d(2), pc.h.d(3));
        let a = (&hx - &hy).scale(0.5);
        let b = (&hx + &hy).scale(0.5);
        let tau_phi = du.add(&dx.add(&dy).mul_scalar(&a));
        let tau_jphi = du.sub(&dx.sub(&dy).mul_scalar(&b));
        let dphi_residual = geo.exterior_derivative(&phi)?.max_abs_diff(&tau_phi.wedge(&phi));
        let djphi_residual = geo.exterior_derivative(&jphi)?.max_abs_diff(&tau_jphi.wedge(&jphi));
        let rho = geo
            .exterior_derivative(&j_one_form(&tau_phi).add(&j_one_form(&tau_jphi)))?
            .scale(-0.5);
        Ok(TauForms { phi, jphi, tau_phi, tau_jphi, rho, dphi_residual, djphi_residual })
    }

    /// `|‖grad H‖²_{g_Σ} − 2 s^H_Σ|` at a total-chart point. For `θ`-free `H`
    /// the gradient along `Σ` is the full `g`-gradient.
    pub fn sce_constraint_residual(&self, p: &[f64]) -> Result<f64, GeomError> {
        let (grad2, s) = self.sce_constraint_terms(p)?;
        Ok((grad2 - 2.0 * s).abs())
    }

    /// `(‖grad H‖²_{g_Σ}, s^H_Σ)`.
    pub fn sce_constraint_terms(&self, p: &[f64]) -> Result<(f64, f64), GeomError> {
        let base = self.surface.base().frame().at(&p[2..], 2)?;
        let geo = base.geometry();
        let theta = Jet::constant(geo.space(), p[THETA]);
        let h = self.wave.profile().eval(&theta, geo.coords())?;
        let (a, b) = (geo.along(0, &h).value(), geo.along(1, &h).value());
        Ok((a * a + b * b, base.hermitian_scalar()?.value()))
    }

    /// `∫ ρ^∇` over the unit disk of the chart in polar coordinates, with
    /// Gauss–Legendre rules on each radial piece between `breaks` (which must
    /// start at 0 and end at 1). `ρ^∇` comes from the generic machinery.
    pub fn rho_disk_integral(&self, theta: f64, breaks: &[f64], radial: usize, angular: usize) -> Result<f64, GeomError> {
        let rr = GaussLegendre::new(NonZeroUsize::new(radial).expect("radial nodes > 0"));
        let ra = GaussLegendre::new(NonZeroUsize::new(angular).expect("angular nodes > 0"));
        let mut err = None;
        let mut total = 0.0;
        for w in breaks.windows(2) {
            total += rr.integrate(w[0], w[1], |r| {
                ra.integrate(0.0, 2.0 * std::f64::consts::PI, |a| {
                    let p = [theta, 0.0, r * a.cos(), r * a.sin()];
                    match self.rho_xy_density(&p) {
                        Ok(v) => v * r,
                        Err(e) => {
                            err = Some(e);
                            0.0
                        }
                    }
                })
            });
        }
        match err {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// `ρ^∇(∂x, ∂y) = e^{2u} ρ^∇(X, JX)`.
    fn rho_xy_density(&self, p: &[f64]) -> Result<f64, GeomError> {
        let ak = self.wave.at(p, 2)?;
        let u = self.surface.u(&ak.geometry().coords()[2..])?.value();
        Ok((2.0 * u).exp() * ak.first_chern_ricci()?.at(&[0, 1]))
    }
}

/// Axisymmetric profile `H(ζ)` on the round sphere.
#[derive(Clone, Debug)]
pub struct AxisymmetricField {
    label: String,
    source: FieldSource,
    scale: f64,
}

#[derive(Clone, Debug)]
enum FieldSource {
    Expr(FieldExpr),
    Table(CubicSpline),
}

impl AxisymmetricField {
    /// Expression in `zeta` (or its alias `z`).
    pub fn parse(src: &str) -> Result<AxisymmetricField, Dim4Error> {
        let e = FieldExpr::parse_profile(src, &["zeta", "z"])?;
        Ok(AxisymmetricField { label: e.to_string(), source: FieldSource::Expr(e), scale: 1.0 })
    }

    /// Natural cubic spline through `(ζ_i, H_i)` covering `[−1, 1]`.
    pub fn from_table(zeta: Vec<f64>, h: Vec<f64>) -> Result<AxisymmetricField, Dim4Error> {
        let spline = CubicSpline::natural(zeta, h)?;
        Ok(AxisymmetricField { label: "table".into(), source: FieldSource::Table(spline), scale: 1.0 })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scaled(&self, s: f64) -> AxisymmetricField {
        AxisymmetricField { label: self.label.clone(), source: self.source.clone(), scale: self.scale * s }
    }

    /// `(H, H′, H″)` at `ζ`.
    pub fn eval(&self, zeta: f64) -> Result<[f64; 3], Dim4Error> {
        let v = match &self.source {
            FieldSource::Expr(e) => {
                let space = JetSpace::new(1, 2).map_err(GeomError::from)?;
                let s = Jet::variable(&space, 0, zeta);
                let j = e.eval_jet(&space, &|_| Some(s.clone())).map_err(GeomError::from)?;
                [j.value(), j.partial(&[1]).map_err(GeomError::from)?, j.partial(&[2]).map_err(GeomError::from)?]
            }
            FieldSource::Table(s) => s.eval(zeta),
        };
        Ok(v.map(|c| c * self.scale))
    }

    /// Jet of `H(ζ)` composed with a jet `ζ`.
    pub fn compose(&self, zeta: &Jet) -> Result<Jet, GeomError> {
        match &self.source {
            FieldSource::Expr(e) => {
                let j = e.eval_jet(zeta.space(), &|_| Some(zeta.clone()))?;
                Ok(j.scale(self.scale))
            }
            FieldSource::Table(s) => {
                let v = s.eval(zeta.value());
                // Cubic pieces: third derivative is the piece's constant.
                let d3 = s.third(zeta.value());
                Ok(zeta.compose(&[v[0], v[1], v[2] / 2.0, d3 / 6.0]).scale(self.scale))
            }
        }
    }

    /// `∫_{S²} ‖grad H‖²₀ = 2π ∫ (1−ζ²) H′² dζ`.
    pub fn gradient_energy(&self) -> Result<f64, Dim4Error> {
        let pieces: Vec<(f64, f64)> = match &self.source {
            FieldSource::Table(s) => s.x.windows(2).map(|w| (w[0], w[1])).collect(),
            FieldSource::Expr(_) => vec![(-1.0, 0.0), (0.0, 1.0)],
        };
        let rule = GaussLegendre::new(NonZeroUsize::new(48).expect("nonzero"));
        let mut total = 0.0;
        let mut err = None;
        for (a, b) in pieces {
            total += rule.integrate(a, b, |z| match self.eval(z) {
                Ok(v) => (1.0 - z * z) * v[1] * v[1],
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            });
        }
        if let Some(e) = err {
            return Err(e);
        }
        Ok(2.0 * std::f64::consts::PI * total)
    }

    /// Rescales so that the gradient energy equals `16π`. Returns the field and the factor.
    pub fn normalized(&self) -> Result<(AxisymmetricField, f64), Dim4Error> {
        let e = self.gradient_energy()?;
        if !(e > 1e-300) {
            return Err(Dim4Error::Degenerate);
        }
        let c = (16.0 * std::f64::consts::PI / e).sqrt();
        Ok((self.scaled(c), c))
    }

    /// `S(ζ) = (1−ζ²)H′² − 4` and `S′(ζ)`.
    fn source_terms(&self, zeta: f64) -> Result<(f64, f64), Dim4Error> {
        let [_, h1, h2] = self.eval(zeta)?;
        let w = 1.0 - zeta * zeta;
        Ok((w * h1 * h1 - 4.0, -2.0 * zeta * h1 * h1 + 2.0 * w * h1 * h2))
    }
}

/// Natural cubic spline.
#[derive(Clone, Debug)]
struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<CubicSpline, Dim4Error> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Dim4Error::Table("need at least three (zeta, H) rows".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Dim4Error::Table("zeta must be strictly increasing".into()));
        }
        if (x[0] + 1.0).abs() > 1e-12 || (x[n - 1] - 1.0).abs() > 1e-12 {
            return Err(Dim4Error::Table("zeta must span [-1, 1]".into()));
        }
        // Tridiagonal system for second derivatives, m_0 = m_{n−1} = 0.
        let mut a = vec![0.0; n];
        let mut b = vec![1.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            a[i] = h0;
            b[i] = 2.0 * (h0 + h1);
            c[i] = h1;
            d[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = d[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
        }
        Ok(CubicSpline { x, y, m })
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    fn eval(&self, t: f64) -> [f64; 3] {
        let i = self.interval(t);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - t) / h, (t - x0) / h);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        [v, d1, d2]
    }

    fn third(&self, t: f64) -> f64 {
        let i = self.interval(t);
        (self.m[i + 1] - self.m[i]) / (self.x[i + 1] - self.x[i])
    }
}

/// Solution of the axisymmetric Poisson problem on a uniform `ζ` grid.
#[derive(Clone, Debug)]
pub struct ConformalSolution {
    pub field: AxisymmetricField,
    /// Factor applied to the input profile by the normalization.
    pub scale: f64,
    /// `∫‖grad H‖²₀` after normalization.
    pub energy: f64,
    /// `|2π ∫ S dζ|` after normalization.
    pub solvability_defect: f64,
    pub zeta: Vec<f64>,
    /// Mean-zero `f` from the Richardson-extrapolated flux.
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
    /// Plain second-order solution on the same grid.
    pub f_raw: Vec<f64>,
}

/// Second-order scheme on `n` intervals: returns `(F, f′, f)` with `f` mean-zero (trapezoid).
fn poisson_pass(s: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = 2.0 / n as f64;
    let mid = n / 2;
    let mut big_f = vec![0.0; n + 1];
    for i in 1..=mid {
        big_f[i] = big_f[i - 1] + 0.5 * h * (s[i - 1] + s[i]);
    }
    let mut right = 0.0;
    for i in (mid + 1..n).rev() {
        right -= 0.5 * h * (s[i] + s[i + 1]);
        big_f[i] = right;
    }
    big_f[n] = 0.0;
    let mut fp = vec![0.0; n + 1];
    for i in 0..=n {
        let z = -1.0 + h * i as f64;
        fp[i] = if i == 0 {
            -s[0] / 8.0
        } else if i == n {
            s[n] / 8.0
        } else {
            -0.25 * big_f[i] / (1.0 - z * z)
        };
    }
    let mut f = vec![0.0; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] + 0.5 * h * (fp[i - 1] + fp[i]);
    }
    let mean = trapezoid_mean(&f);
    f.iter_mut().for_each(|v| *v -= mean);
    (big_f, fp, f)
}

fn trapezoid_mean(v: &[f64]) -> f64 {
    let n = v.len() - 1;
    let sum: f64 = v.iter().sum::<f64>() - 0.5 * (v[0] + v[n]);
    sum / n as f64
}

fn simpson_mean(v: &[f64]) -> f64 {
    let n = v.len() - 1;
    let mut s = v[0] + v[n];
    for (i, x) in v.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * x } else { 2.0 * x };
    }
    s / (3.0 * n as f64)
}

/// Solves `‖grad H‖²₀ = 4 + 4Δ₀f` for axisymmetric `H` on `n` intervals (`n` even).
pub fn solve_conformal_factor(field: &AxisymmetricField, n: usize) -> Result<ConformalSolution, Dim4Error> {
    if n < 4 || n % 2 != 0 {
        return Err(Dim4Error::Grid(format!("grid must be even and at least 4, got {n}")));
    }
    let (field, scale) = field.normalized()?;
    let energy = field.gradient_energy()?;
    let rule = GaussLegendre::new(NonZeroUsize::new(48).expect("nonzero"));
    let mut err = None;
    let mut integral = 0.0;
    for (a, b) in [(-1.0, 0.0), (0.0, 1.0)] {
        integral += rule.integrate(a, b, |z| match field.source_terms(z) {
            Ok(v) => v.0,
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    let solvability_defect = (2.0 * std::f64::consts::PI * integral).abs();
    if solvability_defect > 1e-8 * 16.0 * std::f64::consts::PI {
        return Err(Dim4Error::Normalization { defect: solvability_defect });
    }

    let fine = 2 * n;
    let grid = |m: usize| -> Vec<f64> { (0..=m).map(|i| -1.0 + 2.0 * i as f64 / m as f64).collect() };
    let zf = grid(fine);
    let mut sf = Vec::with_capacity(fine + 1);
    for &z in &zf {
        sf.push(field.source_terms(z)?.0);
    }
    let sc: Vec<f64> = sf.iter().step_by(2).copied().collect();
    let (fc_big, _, fc) = poisson_pass(&sc, n);
    let (ff_big, _, _) = poisson_pass(&sf, fine);
    let zeta = grid(n);
    let big: Vec<f64> = (0..=n).map(|i| (4.0 * ff_big[2 * i] - fc_big[i]) / 3.0).collect();

    let mut fp = vec![0.0; n + 1];
    let mut fpp = vec![0.0; n + 1];
    for i in 0..=n {
        let z = zeta[i];
        let (s, ds) = field.source_terms(z)?;
        if i == 0 {
            fp[i] = -s / 8.0;
            fpp[i] = -ds / 16.0 + fp[i] / 2.0;
        } else if i == n {
            fp[i] = s / 8.0;
            fpp[i] = ds / 16.0 - fp[i] / 2.0;
        } else {
            fp[i] = -0.25 * big[i] / (1.0 - z * z);
            fpp[i] = (-0.25 * s + 2.0 * z * fp[i]) / (1.0 - z * z);
        }
    }
    // Endpoint-corrected trapezoid: fourth order given f′ and f″.
    let h = 2.0 / n as f64;
    let mut f = vec![0.0; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] + 0.5 * h * (fp[i - 1] + fp[i]) + h * h / 12.0 * (fpp[i - 1] - fpp[i]);
    }
    let mean = simpson_mean(&f);
    f.iter_mut().for_each(|v| *v -= mean);
    Ok(ConformalSolution { field, scale, energy, solvability_defect, zeta, f, fp, fpp, f_raw: fc })
}

impl ConformalSolution {
    pub fn grid(&self) -> usize {
        self.zeta.len() - 1
    }

    /// Taylor coefficients of the quintic Hermite interpolant of `f` at `z`.
    pub fn taylor(&self, z: f64) -> [f64; 6] {
        let n = self.grid();
        let h = 2.0 / n as f64;
        let i = (((z + 1.0) / h).floor() as isize).clamp(0, n as isize - 1) as usize;
        let (f0, f1) = (self.f[i], self.f[i + 1]);
        let (d0, d1) = (self.fp[i], self.fp[i + 1]);
        let (s0, s1) = (self.fpp[i], self.fpp[i + 1]);
        let c0 = f0;
        let c1 = d0;
        let c2 = s0 / 2.0;
        let a = f1 - (c0 + c1 * h + c2 * h * h);
        let b = d1 - (c1 + 2.0 * c2 * h);
        let c = s1 - 2.0 * c2;
        let c3 = (10.0 * a - 4.0 * b * h + 0.5 * c * h * h) / h.powi(3);
        let c4 = (-15.0 * a + 7.0 * b * h - c * h * h) / h.powi(4);
        let c5 = (6.0 * a - 3.0 * b * h + 0.5 * c * h * h) / h.powi(5);
        let coef = [c0, c1, c2, c3, c4, c5];
        let s = z - self.zeta[i];
        let mut out = [0.0; 6];
        for (j, o) in out.iter_mut().enumerate() {
            for (k, ck) in coef.iter().enumerate().skip(j) {
                *o += binomial(k, j) * ck * s.powi((k - j) as i32);
            }
        }
        out
    }

    pub fn f_at(&self, z: f64) -> f64 {
        self.taylor(z)[0]
    }

    /// Jet of `f(ζ)` for a jet `ζ`.
    pub fn f_jet(&self, zeta: &Jet) -> Jet {
        zeta.compose(&self.taylor(zeta.value()))
    }

    /// The solved surface `e^{2f} g₀` in one stereographic chart; profile
    /// variables `z`/`zeta` name the height.
    pub fn surface(&self, chart: StereoChart) -> IsothermalSurface {
        let sol = Arc::new(self.clone());
        let u: ChartFn = Arc::new(move |x: &[Jet]| {
            let z = chart.zeta(x);
            Ok(StereoChart::round_u(x) + sol.f_jet(&z))
        });
        IsothermalSurface::sphere_with(chart, u, "solved-sphere")
    }

    /// The normalized profile as a wave profile over a solved surface.
    pub fn profile(&self, surface: &IsothermalSurface) -> Profile {
        let field = self.field.clone();
        let base = surface.base().clone();
        Profile::custom(
            format!("{}*({})", self.field.scale(), self.field.label()),
            Arc::new(move |_theta: &Jet, x: &[Jet]| {
                let z = base.bind("zeta", x).expect("sphere surfaces bind zeta")?;
                field.compose(&z)
            }),
        )
    }

    /// The four-dimensional wave structure over the solved surface.
    pub fn wave(&self, chart: StereoChart) -> Result<SurfaceWave, Dim4Error> {
        let surface = self.surface(chart);
        let profile = self.profile(&surface);
        surface.wave_with(profile, WaveMode::Coordinate)
    }

    /// `∫ρ^∇` over the sphere: the two hemispherical unit disks, radial pieces
    /// aligned with the grid. Gauss–Bonnet predicts `4π`.
    pub fn gauss_bonnet(&self, radial: usize, angular: usize) -> Result<f64, Dim4Error> {
        let mut total = 0.0;
        for chart in [StereoChart::FromNorth, StereoChart::FromSouth] {
            let mut breaks: Vec<f64> = self
                .zeta
                .iter()
                .filter(|&&z| StereoChart::for_zeta(z) == chart || z == 0.0)
                .map(|&z| chart.point_at(z)[0])
                .collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            if breaks.last() != Some(&1.0) {
                breaks.push(1.0);
            }
            total += self.wave(chart)?.rho_disk_integral(0.0, &breaks, radial, angular)?;
        }
        Ok(total)
    }

    /// `max |f − f_exact|` on the grid.
    pub fn max_error(&self, exact: impl Fn(f64) -> f64, raw: bool) -> f64 {
        let v = if raw { &self.f_raw } else { &self.f };
        self.zeta.iter().zip(v).map(|(&z, &f)| (f - exact(z)).abs()).fold(0.0, f64::max)
    }

    /// `(ζ, f, residual)` rows; the residual is the constraint residual of the
    /// solved surface at height `ζ` (poles evaluated at their chart origins).
    pub fn rows(&self) -> Result<Vec<(f64, f64, f64)>, Dim4Error> {
        let waves = [self.wave(StereoChart::FromNorth)?, self.wave(StereoChart::FromSouth)?];
        let mut out = Vec::with_capacity(self.zeta.len());
        for (&z, &f) in self.zeta.iter().zip(&self.f) {
            let chart = StereoChart::for_zeta(z);
            let w = &waves[(chart == StereoChart::FromSouth) as usize];
            let q = chart.point_at(z);
            let res = w.sce_constraint_residual(&[0.0, 0.0, q[0], q[1]])?;
            out.push((z, f, res));
        }
        Ok(out)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Raw-scheme error ratio `e(n)/e(2n)` against a closed form.
pub fn convergence_ratio(field: &AxisymmetricField, n: usize, exact: impl Fn(f64) -> f64 + Copy) -> Result<f64, Dim4Error> {
    let a = solve_conformal_factor(field, n)?.max_error(exact, true);
    let b = solve_conformal_factor(field, 2 * n)?.max_error(exact, true);
    Ok(a / b)
}
