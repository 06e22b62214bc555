//! Almost-Kähler metrics on `S¹×S¹×M` dual to plane-fronted wave metrics.
//!
//! Over a base `(M, g_M, ω_M, J_M)` and a profile `H(θ, m)` the chart is
//! `(θ, φ, base coords…)` and the orthonormal frame is `{base legs…, T, JT}` with
//!
//! ```text
//! T  = ½(H+1)∂φ − ∂θ,   JT = ½(H−1)∂φ − ∂θ,
//! h  = 2 dφ dθ + H dθ² + g_M,   g = h + 2 T♭ₕ⊗T♭ₕ,
//! ω  = ω_M + dθ∧dφ.
//! ```
//!
//! Two frame paths are available: a coordinate frame (brackets derived from
//! leg components) and an abstract frame that uses
//! `[E,T] = [E,JT] = ½E(H)(T − JT)` and `[T,JT] = 0` directly.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::akcore::{apply_j, AkFrame, AkGeometry};
use crate::expr::{FieldExpr, ParseError};
use crate::forms::FrameForm;
use crate::framegeo::{
    coordinate_brackets, ClosureFrame, DomainBox, FrameKind, FramePatch, GeomError,
};
use crate::jets::Jet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("invalid profile: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported base `{base}`: {reason}")]
    UnsupportedBase { base: String, reason: String },
}

/// Scalar built from base-chart coordinate jets.
pub type ChartFn = Arc<dyn Fn(&[Jet]) -> Result<Jet, GeomError> + Send + Sync>;

/// Profile `H(θ, base coords)`.
pub type ProfileFn = Arc<dyn Fn(&Jet, &[Jet]) -> Result<Jet, GeomError> + Send + Sync>;

/// An almost-Kähler base with named chart coordinates.
#[derive(Clone)]
pub struct BaseAK {
    name: String,
    frame: AkFrame,
    darboux: bool,
    derived: Vec<(String, ChartFn)>,
}

impl std::fmt::Debug for BaseAK {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BaseAK").field("name", &self.name).field("frame", &self.frame).finish()
    }
}

fn unit_legs(m: usize) -> Arc<dyn Fn(&[Jet]) -> Result<Vec<Vec<Jet>>, GeomError> + Send + Sync> {
    Arc::new(move |x: &[Jet]| {
        let zero = x[0].scale(0.0);
        Ok((0..m).map(|i| (0..m).map(|a| if a == i { zero.add_scalar(1.0) } else { zero.clone() }).collect()).collect())
    })
}

impl BaseAK {
    /// Wraps an arbitrary almost-Kähler frame. `derived` names extra scalars
    /// that profiles may refer to.
    pub fn from_frame(name: impl Into<String>, frame: AkFrame, darboux: bool, derived: Vec<(String, ChartFn)>) -> BaseAK {
        BaseAK { name: name.into(), frame, darboux, derived }
    }

    fn flat_torus(name: &str, coords: &[&str]) -> BaseAK {
        let m = coords.len();
        let tau = 2.0 * std::f64::consts::PI;
        let patch = FramePatch::new(
            name,
            coords.iter().map(|s| s.to_string()).collect(),
            DomainBox::new(vec![0.0; m], vec![tau; m]),
            Arc::new(ClosureFrame::coordinate(m, unit_legs(m))),
        );
        BaseAK::from_frame(name, AkFrame::new(patch).expect("even"), true, Vec::new())
    }

    /// Flat torus with Darboux coordinates `(z, t)`, `ω = dz∧dt`.
    pub fn torus2() -> BaseAK {
        Self::flat_torus("torus2", &["z", "t"])
    }

    /// Flat 4-torus, `ω = dz1∧dt1 + dz2∧dt2`.
    pub fn torus4() -> BaseAK {
        Self::flat_torus("torus4", &["z1", "t1", "z2", "t2"])
    }

    /// Surface in isothermal coordinates `(x, y)` with `g = e^{2u}(dx² + dy²)`
    /// and frame `{e^{−u}∂x, e^{−u}∂y}`.
    pub fn isothermal(
        name: impl Into<String>,
        u: ChartFn,
        domain: DomainBox,
        derived: Vec<(String, ChartFn)>,
    ) -> BaseAK {
        let name = name.into();
        let legs = Arc::new(move |x: &[Jet]| {
            let f = (-u(x)?).exp();
            let z = f.scale(0.0);
            Ok(vec![vec![f.clone(), z.clone()], vec![z, f]])
        });
        let patch = FramePatch::new(
            name.clone(),
            vec!["x".into(), "y".into()],
            domain,
            Arc::new(ClosureFrame::coordinate(2, legs)),
        );
        BaseAK::from_frame(name, AkFrame::new(patch).expect("even"), false, derived)
    }

    /// Round unit sphere, stereographic chart from the north pole (the
    /// chart origin is the south pole, `z = −1`). Exposes `z` as a profile variable.
    pub fn sphere_north() -> BaseAK {
        let u: ChartFn = Arc::new(|x: &[Jet]| {
            let r2 = &x[0] * &x[0] + &x[1] * &x[1];
            Ok(r2.add_scalar(1.0).ln().scale(-1.0).add_scalar(std::f64::consts::LN_2))
        });
        let z: ChartFn = Arc::new(|x: &[Jet]| {
            let r2 = &x[0] * &x[0] + &x[1] * &x[1];
            Ok(&r2.add_scalar(-1.0) / &r2.add_scalar(1.0))
        });
        Self::isothermal("sphere", u, DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]), vec![("z".into(), z)])
    }

    /// Round unit sphere, orientation-compatible chart centred at the north pole (`z = +1`).
    pub fn sphere_south() -> BaseAK {
        let u: ChartFn = Arc::new(|x: &[Jet]| {
            let r2 = &x[0] * &x[0] + &x[1] * &x[1];
            Ok(r2.add_scalar(1.0).ln().scale(-1.0).add_scalar(std::f64::consts::LN_2))
        });
        let z: ChartFn = Arc::new(|x: &[Jet]| {
            let r2 = &x[0] * &x[0] + &x[1] * &x[1];
            Ok(&r2.scale(-1.0).add_scalar(1.0) / &r2.add_scalar(1.0))
        });
        Self::isothermal(
            "sphere-south",
            u,
            DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
            vec![("z".into(), z)],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn frame(&self) -> &AkFrame {
        &self.frame
    }

    pub fn patch(&self) -> &FramePatch {
        self.frame.patch()
    }

    pub fn is_darboux(&self) -> bool {
        self.darboux
    }

    /// Coordinate names followed by derived scalar names.
    pub fn variables(&self) -> Vec<String> {
        self.patch().coords().iter().cloned().chain(self.derived.iter().map(|d| d.0.clone())).collect()
    }

    /// Value of a coordinate or derived scalar on base-chart jets.
    pub fn bind(&self, name: &str, x: &[Jet]) -> Option<Result<Jet, GeomError>> {
        if let Some(i) = self.patch().coord_index(name) {
            return Some(Ok(x[i].clone()));
        }
        self.derived.iter().find(|d| d.0 == name).map(|d| (d.1)(x))
    }
}

/// The wave profile `H`.
#[derive(Clone)]
pub struct Profile {
    label: String,
    expr: Option<FieldExpr>,
    f: ProfileFn,
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Profile({})", self.label)
    }
}

impl Profile {
    /// Parses `src` over `theta`, the base coordinates and derived base scalars.
    /// Any use of `phi` is rejected.
    pub fn parse(src: &str, base: &BaseAK) -> Result<Profile, WaveError> {
        let mut vars = vec!["theta".to_string()];
        vars.extend(base.variables());
        let chart: Vec<&str> = vars.iter().map(String::as_str).collect();
        let expr = FieldExpr::parse_profile(src, &chart)?;
        Ok(Self::from_expr(expr, base))
    }

    pub fn from_expr(expr: FieldExpr, base: &BaseAK) -> Profile {
        let base = base.clone();
        let e = expr.clone();
        let f: ProfileFn = Arc::new(move |theta: &Jet, x: &[Jet]| {
            let err = std::cell::RefCell::new(None);
            let env = |name: &str| -> Option<Jet> {
                if name == "theta" {
                    return Some(theta.clone());
                }
                match base.bind(name, x)? {
                    Ok(j) => Some(j),
                    Err(e) => {
                        *err.borrow_mut() = Some(e);
                        None
                    }
                }
            };
            let out = e.eval_jet(theta.space(), &env);
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            Ok(out?)
        });
        Profile { label: expr.to_string(), expr: Some(expr), f }
    }

    pub fn custom(label: impl Into<String>, f: ProfileFn) -> Profile {
        Profile { label: label.into(), expr: None, f }
    }

    pub fn constant(value: f64) -> Profile {
        Profile::custom(format!("{value}"), Arc::new(move |theta: &Jet, _x: &[Jet]| Ok(theta.scale(0.0).add_scalar(value))))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn expr(&self) -> Option<&FieldExpr> {
        self.expr.as_ref()
    }

    pub fn eval(&self, theta: &Jet, x: &[Jet]) -> Result<Jet, GeomError> {
        (self.f)(theta, x)
    }

    /// Whether the profile is known not to depend on `θ` (expression profiles only).
    pub fn theta_free(&self) -> Option<bool> {
        self.expr.as_ref().map(|e| !e.depends_on("theta"))
    }

    /// `max |H(θ+2π) − H(θ)|` over the supplied `(θ, base point)` samples.
    pub fn periodicity_defect(&self, samples: &[(f64, Vec<f64>)]) -> Result<f64, GeomError> {
        let mut worst: f64 = 0.0;
        for (theta, p) in samples {
            let x = Jet::seed(p, 0)?;
            let s = x.first().map(|j| j.space().clone()).expect("non-empty base chart");
            let a = self.eval(&Jet::constant(&s, *theta), &x)?.value();
            let b = self.eval(&Jet::constant(&s, theta + 2.0 * std::f64::consts::PI), &x)?.value();
            worst = worst.max((a - b).abs());
        }
        Ok(worst)
    }
}

/// How the total frame's brackets are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveMode {
    /// Coordinate frame when the base has one, abstract otherwise.
    Auto,
    Coordinate,
    Abstract,
}

/// The almost-Kähler wave structure on `S¹×S¹×M`.
#[derive(Clone, Debug)]
pub struct WaveStructure {
    base: BaseAK,
    profile: Profile,
    total: AkFrame,
}

pub const THETA: usize = 0;
pub const PHI: usize = 1;

impl WaveStructure {
    /// Builds the structure from a profile expression.
    pub fn from_source(base: &BaseAK, src: &str, mode: WaveMode) -> Result<WaveStructure, WaveError> {
        Self::build(base, Profile::parse(src, base)?, mode)
    }

    pub fn build(base: &BaseAK, profile: Profile, mode: WaveMode) -> Result<WaveStructure, WaveError> {
        let bpatch = base.patch().clone();
        let nb = bpatch.frame_dim();
        let mb = bpatch.chart_dim();
        let n = nb + 2;
        let mode = match mode {
            WaveMode::Auto if bpatch.kind() == FrameKind::Coordinate => WaveMode::Coordinate,
            WaveMode::Auto => WaveMode::Abstract,
            other => other,
        };
        if mode == WaveMode::Coordinate && bpatch.kind() != FrameKind::Coordinate {
            return Err(WaveError::UnsupportedBase {
                base: base.name.clone(),
                reason: "abstract base frames admit only the abstract wave frame".into(),
            });
        }
        let tau = 2.0 * std::f64::consts::PI;
        let domain = DomainBox::new(vec![0.0, 0.0], vec![tau, tau]).concat(bpatch.domain());
        let mut coords = vec!["theta".to_string(), "phi".to_string()];
        coords.extend(bpatch.coords().iter().cloned());

        let fields = bpatch.fields().clone();
        let prof = profile.clone();
        let legs = Arc::new(move |x: &[Jet]| -> Result<Vec<Vec<Jet>>, GeomError> {
            let bl = fields.legs(&x[2..])?;
            let zero = x[0].scale(0.0);
            let h = prof.eval(&x[THETA], &x[2..])?;
            let mut out = Vec::with_capacity(n);
            for leg in bl {
                let mut row = vec![zero.clone(), zero.clone()];
                row.extend(leg);
                out.push(row);
            }
            let mut t = vec![zero.add_scalar(-1.0), h.add_scalar(1.0).scale(0.5)];
            t.extend(std::iter::repeat(zero.clone()).take(mb));
            let mut jt = vec![zero.add_scalar(-1.0), h.add_scalar(-1.0).scale(0.5)];
            jt.extend(std::iter::repeat(zero.clone()).take(mb));
            out.push(t);
            out.push(jt);
            Ok(out)
        });

        let frame: ClosureFrame = match mode {
            WaveMode::Coordinate => ClosureFrame::coordinate(n, legs),
            _ => {
                let fields = bpatch.fields().clone();
                let prof = profile.clone();
                let kind = bpatch.kind();
                let brackets = Arc::new(move |x: &[Jet]| -> Result<Vec<Jet>, GeomError> {
                    let xb = &x[2..];
                    let bl = fields.legs(xb)?;
                    let bc = match kind {
                        FrameKind::Abstract => fields.brackets(xb)?,
                        FrameKind::Coordinate => {
                            let p: Vec<f64> = xb.iter().map(Jet::value).collect();
                            coordinate_brackets(&bl, &p, 2)?
                        }
                    };
                    let h = prof.eval(&x[THETA], xb)?;
                    let zero = h.d(0).scale(0.0);
                    let mut c = vec![zero.clone(); n * n * n];
                    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
                    for i in 0..nb {
                        for j in 0..nb {
                            for k in 0..nb {
                                c[idx(i, j, k)] = bc[(i * nb + j) * nb + k].clone();
                            }
                        }
                    }
                    let (t, jt) = (nb, nb + 1);
                    for (i, leg) in bl.iter().enumerate() {
                        let mut eh = zero.clone();
                        for (a, comp) in leg.iter().enumerate() {
                            eh = eh + comp * &h.d(a + 2);
                        }
                        let half = eh.scale(0.5);
                        for other in [t, jt] {
                            c[idx(i, other, t)] = half.clone();
                            c[idx(i, other, jt)] = -&half;
                            c[idx(other, i, t)] = -&half;
                            c[idx(other, i, jt)] = half.clone();
                        }
                    }
                    Ok(c)
                });
                ClosureFrame::abstract_frame(n, legs, brackets)
            }
        };
        let name = format!("{}-wave", base.name);
        let patch = FramePatch::new(name, coords, domain, Arc::new(frame));
        Ok(WaveStructure { base: base.clone(), profile, total: AkFrame::new(patch)? })
    }

    pub fn base(&self) -> &BaseAK {
        &self.base
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn frame(&self) -> &AkFrame {
        &self.total
    }

    pub fn patch(&self) -> &FramePatch {
        self.total.patch()
    }

    /// Index of the leg `T` (followed by `JT`).
    pub fn t_index(&self) -> usize {
        self.base.patch().frame_dim()
    }

    pub fn at(&self, point: &[f64], order: usize) -> Result<AkGeometry, GeomError> {
        self.total.at(point, order)
    }

    /// Reproducible points of the total chart.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        self.patch().domain().sample_points(count, seed)
    }

    /// `H` on the total chart jets of a geometry.
    pub fn profile_jet(&self, geo: &AkGeometry) -> Result<Jet, GeomError> {
        let x = geo.geometry().coords();
        self.profile.eval(&x[THETA], &x[2..])
    }

    /// Lorentzian `h` restricted to the `(θ, φ)` block: `[[H, 1], [1, 0]]`.
    pub fn lorentz_block(h_value: f64) -> [[f64; 2]; 2] {
        [[h_value, 1.0], [1.0, 0.0]]
    }

    /// Component checks of the construction at one point.
    pub fn invariants(&self, point: &[f64]) -> Result<BTreeMap<String, f64>, GeomError> {
        let ak = self.at(point, 1)?;
        let geo = ak.geometry();
        let n = geo.n();
        let (t, jt) = (self.t_index(), self.t_index() + 1);
        let h = self.profile_jet(&ak)?;
        let hv = h.value();
        let legs = geo.legs();
        let mut out = BTreeMap::new();

        // Express ∂θ, ∂φ through T and JT via the (θ,φ) block of their components.
        let blk = DMatrix::from_fn(2, 2, |r, col| legs[[t, jt][col]][[THETA, PHI][r]].value());
        let inv = blk.try_inverse().ok_or_else(|| GeomError::DegenerateFrame { point: point.to_vec(), pivot: 0.0 })?;
        // ∂_r = Σ_col inv[col][r] leg_col, so g(∂_r, ∂_s) = Σ_col inv[col][r] inv[col][s].
        let g = |r: usize, s: usize| (0..2).map(|c| inv[(c, r)] * inv[(c, s)]).sum::<f64>();
        let g_expected = [[0.5 * (1.0 + hv * hv), hv], [hv, 2.0]];
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for s in 0..2 {
                worst = worst.max((g(r, s) - g_expected[r][s]).abs());
            }
        }
        out.insert("g_components".into(), worst);

        // Duality g = h + 2 T♭ₕ⊗T♭ₕ on the (θ,φ) block.
        let hb = Self::lorentz_block(hv);
        let tv = [legs[t][THETA].value(), legs[t][PHI].value()];
        let tflat_h: Vec<f64> = (0..2).map(|a| (0..2).map(|b| hb[a][b] * tv[b]).sum()).collect();
        let htt: f64 = (0..2).map(|a| tflat_h[a] * tv[a]).sum();
        out.insert("h_t_t_plus_one".into(), (htt + 1.0).abs());
        let mut dual: f64 = 0.0;
        for r in 0..2 {
            for s in 0..2 {
                dual = dual.max((g(r, s) - hb[r][s] - 2.0 * tflat_h[r] * tflat_h[s]).abs());
            }
        }
        out.insert("lorentz_duality".into(), dual);

        // g-duals of T and JT from the frame versus their chart expressions.
        let dth = geo.coordinate_differential(THETA);
        let dph = geo.coordinate_differential(PHI);
        let t_flat = dth.mul_scalar(&h.add_scalar(-1.0).scale(0.5)).add(&dph);
        let jt_flat = dth.mul_scalar(&h.add_scalar(1.0).scale(-0.5)).sub(&dph);
        out.insert("t_flat".into(), t_flat.max_abs_diff(&geo.coframe(t)));
        out.insert("jt_flat".into(), jt_flat.max_abs_diff(&geo.coframe(jt)));
        out.insert("dtheta_split".into(), dth.scale(-1.0).max_abs_diff(&t_flat.add(&jt_flat)));

        // g = g_M + T♭⊗T♭ + (JT)♭⊗(JT)♭ evaluated on legs.
        let mut dec: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let gm = if i == j && i < t { 1.0 } else { 0.0 };
                let v = gm + t_flat.at(&[i]) * t_flat.at(&[j]) + jt_flat.at(&[i]) * jt_flat.at(&[j]);
                dec = dec.max((v - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        out.insert("g_decomposition".into(), dec);

        // Base-block: the base legs carry no (θ,φ) components; T, JT none along the base.
        let mut cross: f64 = 0.0;
        for (i, leg) in legs.iter().enumerate() {
            for (a, comp) in leg.iter().enumerate() {
                let forbidden = (i < t && a < 2) || (i >= t && a >= 2);
                if forbidden {
                    cross = cross.max(comp.value().abs());
                }
            }
        }
        out.insert("cross_terms".into(), cross);

        // ω = ω_M + dθ∧dφ.
        let omega_m = geo.constant_form(2, |p| if p[1] < t && p[0] % 2 == 0 && p[1] == p[0] + 1 { 1.0 } else { 0.0 });
        out.insert("omega_split".into(), ak.omega().max_abs_diff(&omega_m.add(&dth.wedge(&dph))));
        out.insert("omega_closed".into(), ak.omega_closed_defect()?);
        out.insert("bracket_consistency".into(), geo.bracket_consistency_defect());
        Ok(out)
    }

    /// Full chart components of `g` at a point (coordinate frames only), from
    /// inverting the leg matrix.
    pub fn metric_components(&self, point: &[f64]) -> Result<DMatrix<f64>, GeomError> {
        if self.patch().kind() != FrameKind::Coordinate {
            return Err(GeomError::Unsupported("metric components need a coordinate frame".into()));
        }
        let x = Jet::seed(point, 0)?;
        let legs = self.patch().fields().legs(&x)?;
        let n = legs.len();
        let e = DMatrix::from_fn(n, n, |i, a| legs[i][a].value());
        let theta = e.try_inverse().ok_or_else(|| GeomError::DegenerateFrame { point: point.to_vec(), pivot: 0.0 })?;
        // θ[a][k] is the k-th coframe on ∂_a.
        Ok(&theta * theta.transpose())
    }

    /// `max |ρ^∇ − ½Σ H_{θa} dθ∧da|` over Darboux coordinates `a` of a flat base.
    pub fn check_prop_darboux(&self, point: &[f64]) -> Result<f64, WaveError> {
        if !self.base.darboux {
            return Err(WaveError::UnsupportedBase {
                base: self.base.name.clone(),
                reason: "the Darboux identity needs a flat Darboux preset".into(),
            });
        }
        let ak = self.at(point, 2)?;
        let geo = ak.geometry();
        let h = self.profile_jet(&ak)?;
        let h_theta = h.d(THETA);
        let dth = geo.coordinate_differential(THETA);
        let mut rhs = FrameForm::zero(geo.space(), geo.n(), 2);
        for a in 0..self.base.patch().chart_dim() {
            let coeff = h_theta.d(a + 2).scale(0.5);
            rhs = rhs.add(&dth.wedge(&geo.coordinate_differential(a + 2)).mul_scalar(&coeff));
        }
        Ok(ak.first_chern_ricci()?.max_abs_diff(&rhs))
    }

    /// `|s^H − s^H_M|` at one point, the base value computed on the base alone.
    pub fn scalar_equality_residual(&self, point: &[f64]) -> Result<f64, GeomError> {
        let total = self.at(point, 2)?.hermitian_scalar()?.value();
        let base = self.base.frame().at(&point[2..], 2)?.hermitian_scalar()?.value();
        Ok((total - base).abs())
    }

    pub fn check_scalar_equality(&self, points: &[Vec<f64>]) -> Result<f64, GeomError> {
        let mut worst: f64 = 0.0;
        for p in points {
            worst = worst.max(self.scalar_equality_residual(p)?);
        }
        Ok(worst)
    }

    /// Checks that `K = J_M grad H` (for `θ`-free `H`) stays Killing on the total space.
    pub fn extremal_mechanism_check(&self, point: &[f64], base_tol: f64) -> Result<MechanismReport, WaveError> {
        if self.profile.theta_free() == Some(false) {
            return Err(WaveError::Precondition("profile depends on theta".into()));
        }
        // Base: K must be g_M-Killing.
        let bgeo = self.base.frame().at(&point[2..], 2)?;
        let bg = bgeo.geometry();
        let theta0 = Jet::constant(bg.space(), point[THETA]);
        let hb = self.profile.eval(&theta0, bg.coords())?;
        let grad_b: Vec<Jet> = (0..bg.n()).map(|i| bg.along(i, &hb)).collect();
        let base_res = bg.killing_residual(&apply_j(&grad_b));
        if base_res > base_tol {
            return Err(WaveError::Precondition(format!(
                "J grad H is not Killing on the base (residual {base_res:.3e})"
            )));
        }

        let ak = self.at(point, 2)?;
        let geo = ak.geometry();
        let nb = self.t_index();
        let (t, jt) = (nb, nb + 1);
        let h = self.profile_jet(&ak)?;
        let grad: Vec<Jet> = (0..nb).map(|i| geo.along(i, &h)).collect();
        let mut k = apply_j(&grad);
        let zero = k[0].scale(0.0);
        k.push(zero.clone());
        k.push(zero);
        let lie = geo.killing_tensor(&k);
        let n = geo.n();
        let entry = |i: usize, j: usize| lie[i * n + j].value().abs();
        let mut tx: f64 = 0.0;
        let mut xx: f64 = 0.0;
        for i in 0..nb {
            tx = tx.max(entry(t, i)).max(entry(jt, i));
            for j in 0..nb {
                xx = xx.max(entry(i, j));
            }
        }
        // Cartan step: 2 dT♭(K,T) = (dH∧dθ)(K,T).
        let d_tflat = geo.exterior_derivative(&geo.coframe(t))?;
        let dh_dth = geo.differential(&h).wedge(&geo.coordinate_differential(THETA));
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (i, ki) in k.iter().enumerate() {
            lhs += 2.0 * ki.value() * d_tflat.at(&[i, t]);
            rhs += ki.value() * dh_dth.at(&[i, t]);
        }
        let mut parts = BTreeMap::new();
        parts.insert("base_killing".to_string(), base_res);
        parts.insert("lie_t_t".to_string(), entry(t, t));
        parts.insert("lie_jt_jt".to_string(), entry(jt, jt));
        parts.insert("lie_t_jt".to_string(), entry(t, jt));
        parts.insert("lie_t_base".to_string(), tx);
        parts.insert("lie_base_base".to_string(), xx);
        parts.insert("cartan_step".to_string(), (lhs - rhs).abs());
        parts.insert("g_k_t".to_string(), k[t].value().abs().max(k[jt].value().abs()));
        Ok(MechanismReport { total: geo.killing_residual(&k), parts })
    }
}

/// Killing residuals of the extended field on the total space.
#[derive(Debug, Clone)]
pub struct MechanismReport {
    pub total: f64,
    pub parts: BTreeMap<String, f64>,
}
