//! Riemannian geometry in an orthonormal moving frame.
//!
//! A [`FramePatch`] is a chart together with a frame `{e_i}` declared
//! orthonormal for the metric. Everything is computed from the structure
//! functions `[e_i, e_j] = Σ_k c^k_ij e_k` and from directional derivatives
//! along the legs, so the metric itself is never inverted.
//!
//! Conventions:
//! * `Γ(i,j,k) = ⟨∇_{e_i} e_j, e_k⟩`, given by the orthonormal Koszul
//!   formula `2Γ(i,j,k) = c^k_ij − c^i_jk + c^j_ki`.
//! * Curvature follows `R_{X,Y} = ∇_{[X,Y]} − [∇_X, ∇_Y]`, stored as
//!   `R(i,j,k,l) = ⟨R_{e_i,e_j} e_k, e_l⟩`. With this sign the round unit
//!   sphere has `⟨R_{e1,e2} e1, e2⟩ = +1` and scalar curvature `+2`.
//! * `s^g = Σ_{i,j} ⟨R_{e_i,e_j} e_i, e_j⟩` over all legs.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::expr::EvalError;
use crate::forms::{increasing_tuples, FrameForm};
use crate::jets::{Jet, JetError, JetSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("frame is degenerate at {point:?} (pivot {pivot:e})")]
    DegenerateFrame { point: Vec<f64>, pivot: f64 },
    #[error("jet order {have} is too shallow, {needed} required for {what}")]
    Order { needed: usize, have: usize, what: &'static str },
    #[error("point {0:?} lies outside the chart domain")]
    OutsideDomain(Vec<f64>),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// Legs given by chart components; brackets are derived.
    Coordinate,
    /// Brackets supplied as data; legs only act on chart scalars.
    Abstract,
}

/// Source of frame data at a point, evaluated on seeded coordinate jets.
pub trait FrameFields: Send + Sync {
    fn kind(&self) -> FrameKind;

    fn frame_dim(&self) -> usize;

    /// `legs[i][a]`: component of `e_i` along chart coordinate `a`.
    fn legs(&self, x: &[Jet]) -> Result<Vec<Vec<Jet>>, GeomError>;

    /// Structure functions, flattened as `c[(i·n + j)·n + k] = c^k_ij`.
    /// Required for [`FrameKind::Abstract`].
    fn brackets(&self, _x: &[Jet]) -> Result<Vec<Jet>, GeomError> {
        Err(GeomError::Unsupported("frame does not supply brackets".into()))
    }
}

type LegFn = dyn Fn(&[Jet]) -> Result<Vec<Vec<Jet>>, GeomError> + Send + Sync;
type BracketFn = dyn Fn(&[Jet]) -> Result<Vec<Jet>, GeomError> + Send + Sync;

/// Closure-backed [`FrameFields`].
pub struct ClosureFrame {
    n: usize,
    legs: Arc<LegFn>,
    brackets: Option<Arc<BracketFn>>,
}

impl ClosureFrame {
    pub fn coordinate(n: usize, legs: Arc<LegFn>) -> ClosureFrame {
        ClosureFrame { n, legs, brackets: None }
    }

    pub fn abstract_frame(n: usize, legs: Arc<LegFn>, brackets: Arc<BracketFn>) -> ClosureFrame {
        ClosureFrame { n, legs, brackets: Some(brackets) }
    }
}

impl FrameFields for ClosureFrame {
    fn kind(&self) -> FrameKind {
        if self.brackets.is_some() {
            FrameKind::Abstract
        } else {
            FrameKind::Coordinate
        }
    }

    fn frame_dim(&self) -> usize {
        self.n
    }

    fn legs(&self, x: &[Jet]) -> Result<Vec<Vec<Jet>>, GeomError> {
        (self.legs)(x)
    }

    fn brackets(&self, x: &[Jet]) -> Result<Vec<Jet>, GeomError> {
        match &self.brackets {
            Some(b) => b(x),
            None => Err(GeomError::Unsupported("coordinate frame has derived brackets".into())),
        }
    }
}

/// Axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> DomainBox {
        assert_eq!(lo.len(), hi.len());
        DomainBox { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a <= x && x <= b)
    }

    /// Uniform sample from the box shrunk by `margin` (fraction of each side) on every face.
    pub fn sample(&self, rng: &mut impl Rng, margin: f64) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| {
                let w = b - a;
                let (a, b) = (a + margin * w, b - margin * w);
                a + (b - a) * rng.gen::<f64>()
            })
            .collect()
    }

    /// `count` reproducible points from a ChaCha8 stream, kept 1% away from the faces.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng, 0.01)).collect()
    }

    pub fn concat(&self, other: &DomainBox) -> DomainBox {
        DomainBox {
            lo: self.lo.iter().chain(&other.lo).copied().collect(),
            hi: self.hi.iter().chain(&other.hi).copied().collect(),
        }
    }
}

/// A chart with an orthonormal frame.
#[derive(Clone)]
pub struct FramePatch {
    name: String,
    coords: Vec<String>,
    domain: DomainBox,
    fields: Arc<dyn FrameFields>,
}

impl std::fmt::Debug for FramePatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FramePatch")
            .field("name", &self.name)
            .field("coords", &self.coords)
            .field("frame_dim", &self.frame_dim())
            .field("kind", &self.kind())
            .finish()
    }
}

impl FramePatch {
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        domain: DomainBox,
        fields: Arc<dyn FrameFields>,
    ) -> FramePatch {
        assert_eq!(coords.len(), domain.dim(), "domain must match the chart");
        let patch = FramePatch { name: name.into(), coords, domain, fields };
        if patch.kind() == FrameKind::Coordinate {
            assert_eq!(patch.chart_dim(), patch.frame_dim(), "coordinate frames must span the chart");
        }
        patch
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn chart_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn frame_dim(&self) -> usize {
        self.fields.frame_dim()
    }

    pub fn kind(&self) -> FrameKind {
        self.fields.kind()
    }

    pub fn fields(&self) -> &Arc<dyn FrameFields> {
        &self.fields
    }

    /// Evaluates the frame at `point` with jets of the given order.
    pub fn at(&self, point: &[f64], order: usize) -> Result<FrameGeometry, GeomError> {
        if !self.domain.contains(point) {
            return Err(GeomError::OutsideDomain(point.to_vec()));
        }
        if order < 1 {
            return Err(GeomError::Order { needed: 1, have: order, what: "structure functions" });
        }
        let x = Jet::seed(point, order)?;
        FrameGeometry::new(self, point, x)
    }

    /// Condition number of the leg matrix (coordinate frames only).
    pub fn frame_condition(&self, point: &[f64]) -> Result<f64, GeomError> {
        let x = Jet::seed(point, 0)?;
        let legs = self.fields.legs(&x)?;
        let n = legs.len();
        let m = DMatrix::from_fn(n, self.chart_dim(), |i, a| legs[i][a].value());
        let sv = m.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(max / min)
    }
}

/// Solves `M X = I` for a square matrix of jets (Gauss–Jordan, pivoting on values).
pub fn invert_jet_matrix(m: &[Vec<Jet>], point: &[f64]) -> Result<Vec<Vec<Jet>>, GeomError> {
    let n = m.len();
    let space = m[0][0].space().clone();
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(&space, if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let scale = m.iter().flatten().map(|j| j.value().abs()).fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r][col].value().abs().total_cmp(&a[s][col].value().abs()))
            .expect("non-empty range");
        let pv = a[piv][col].value();
        if pv.abs() <= 1e-13 * scale.max(1e-300) {
            return Err(GeomError::DegenerateFrame { point: point.to_vec(), pivot: pv });
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip();
        for j in 0..n {
            a[col][j] = &a[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col || a[row][col].coeffs().iter().all(|&c| c == 0.0) {
                continue;
            }
            let f = a[row][col].clone();
            for j in 0..n {
                a[row][j] = &a[row][j] - &(&f * &a[col][j]);
                inv[row][j] = &inv[row][j] - &(&f * &inv[col][j]);
            }
        }
    }
    Ok(inv)
}

/// Frame data and Levi-Civita connection evaluated at one point.
pub struct FrameGeometry {
    n: usize,
    m: usize,
    point: Vec<f64>,
    coords: Vec<Jet>,
    legs: Vec<Vec<Jet>>,
    c: Vec<Jet>,
    gamma: Vec<Jet>,
}

impl FrameGeometry {
    fn new(patch: &FramePatch, point: &[f64], x: Vec<Jet>) -> Result<FrameGeometry, GeomError> {
        let n = patch.frame_dim();
        let m = patch.chart_dim();
        let legs = patch.fields.legs(&x)?;
        assert_eq!(legs.len(), n, "leg count");
        let c = match patch.kind() {
            FrameKind::Abstract => patch.fields.brackets(&x)?,
            FrameKind::Coordinate => coordinate_brackets(&legs, point, 0)?,
        };
        assert_eq!(c.len(), n * n * n, "structure function count");
        let mut gamma = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = &(&c[(i * n + j) * n + k] - &c[(j * n + k) * n + i]) + &c[(k * n + i) * n + j];
                    gamma.push(v.scale(0.5));
                }
            }
        }
        Ok(FrameGeometry { n, m, point: point.to_vec(), coords: x, legs, c, gamma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chart_dim(&self) -> usize {
        self.m
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn coords(&self) -> &[Jet] {
        &self.coords
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        self.coords[0].space()
    }

    pub fn order(&self) -> usize {
        self.coords[0].order()
    }

    pub fn legs(&self) -> &[Vec<Jet>] {
        &self.legs
    }

    pub fn c(&self, i: usize, j: usize, k: usize) -> &Jet {
        &self.c[(i * self.n + j) * self.n + k]
    }

    /// Structure functions, flattened `c[(i·n+j)·n+k] = c^k_ij`.
    pub fn structure_functions(&self) -> &[Jet] {
        &self.c
    }

    /// Levi-Civita coefficients, flattened `Γ[(i·n+j)·n+k] = ⟨∇_{e_i}e_j, e_k⟩`.
    pub fn levi_civita(&self) -> &[Jet] {
        &self.gamma
    }

    pub fn gamma(&self, i: usize, j: usize, k: usize) -> &Jet {
        &self.gamma[(i * self.n + j) * self.n + k]
    }

    pub fn require_order(&self, needed: usize, what: &'static str) -> Result<(), GeomError> {
        if self.order() < needed {
            return Err(GeomError::Order { needed, have: self.order(), what });
        }
        Ok(())
    }

    /// `e_i(f)`; loses one jet order.
    pub fn along(&self, i: usize, f: &Jet) -> Jet {
        let mut acc: Option<Jet> = None;
        for (a, comp) in self.legs[i].iter().enumerate() {
            if comp.coeffs().iter().all(|&v| v == 0.0) {
                continue;
            }
            let term = comp * &f.d(a);
            acc = Some(match acc {
                None => term,
                Some(s) => s + term,
            });
        }
        acc.unwrap_or_else(|| f.d(0).scale(0.0))
    }

    /// The coordinate differential `dx^a` as a frame 1-form.
    pub fn coordinate_differential(&self, a: usize) -> FrameForm {
        FrameForm::one_form((0..self.n).map(|i| self.legs[i][a].clone()).collect())
    }

    /// `df` as a frame 1-form.
    pub fn differential(&self, f: &Jet) -> FrameForm {
        FrameForm::one_form((0..self.n).map(|i| self.along(i, f)).collect())
    }

    pub fn constant_form(&self, degree: usize, f: impl Fn(&[usize]) -> f64) -> FrameForm {
        let s = self.space().clone();
        FrameForm::from_increasing(&s, self.n, degree, |t| Jet::constant(&s, f(t)))
    }

    /// Unit coframe element `e^k` (the metric dual of leg `k`).
    pub fn coframe(&self, k: usize) -> FrameForm {
        self.constant_form(1, |t| if t[0] == k { 1.0 } else { 0.0 })
    }

    /// Curvature `R(i,j,k,l) = ⟨R_{e_i,e_j} e_k, e_l⟩` of the connection with
    /// coefficients `conn[(i·n+j)·n+k] = ⟨∇_{e_i}e_j, e_k⟩`.
    pub fn curvature_of(&self, conn: &[Jet]) -> Result<Vec<Jet>, GeomError> {
        self.require_order(2, "curvature")?;
        let n = self.n;
        let a = |i: usize, j: usize, k: usize| &conn[(i * n + j) * n + k];
        // e_i(A(j,k,l)) cached per (i, jkl).
        let mut along = Vec::with_capacity(n * n * n * n);
        for i in 0..n {
            for jkl in 0..n * n * n {
                along.push(self.along(i, &conn[jkl]));
            }
        }
        let mut out = vec![Jet::zero(self.space()); n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    let z = along[0].scale(0.0);
                    for k in 0..n {
                        for l in 0..n {
                            out[((i * n + j) * n + k) * n + l] = z.clone();
                        }
                    }
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        let mut v = &along[i * n * n * n + (j * n + k) * n + l]
                            - &along[j * n * n * n + (i * n + k) * n + l];
                        for mm in 0..n {
                            v = v + &(a(j, k, mm) * a(i, mm, l)) - &(a(i, k, mm) * a(j, mm, l))
                                - &(self.c(i, j, mm) * a(mm, k, l));
                        }
                        // Flip to R_{X,Y} = ∇_{[X,Y]} − [∇_X, ∇_Y].
                        out[((i * n + j) * n + k) * n + l] = -v;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn riemann(&self) -> Result<Vec<Jet>, GeomError> {
        self.curvature_of(&self.gamma)
    }

    pub fn scalar_curvature(&self) -> Result<Jet, GeomError> {
        let r = self.riemann()?;
        Ok(scalar_from_riemann(&r, self.n))
    }

    /// Components `(𝔏_K g)(e_i, e_j) = ⟨∇_{e_i}K, e_j⟩ + ⟨∇_{e_j}K, e_i⟩`.
    pub fn killing_tensor(&self, k: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let nabla: Vec<Jet> = (0..n)
            .flat_map(|i| {
                (0..n).map(move |l| {
                    let mut v = self.along(i, &k[l]);
                    for (m, km) in k.iter().enumerate() {
                        v = v + km * self.gamma(i, m, l);
                    }
                    v
                })
            })
            .collect();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(&nabla[i * n + j] + &nabla[j * n + i]);
            }
        }
        out
    }

    /// `max |(𝔏_K g)(e_i,e_j)|`.
    pub fn killing_residual(&self, k: &[Jet]) -> f64 {
        self.killing_tensor(k).iter().map(|v| v.value().abs()).fold(0.0, f64::max)
    }

    /// Exterior derivative through the invariant formula on frame legs.
    pub fn exterior_derivative(&self, form: &FrameForm) -> Result<FrameForm, GeomError> {
        let p = form.degree();
        let n = self.n;
        if form.order() == 0 {
            return Err(GeomError::Order { needed: 1, have: 0, what: "exterior derivative" });
        }
        let space = form.comps()[0].d(0).space().clone();
        if p >= n {
            // Forms above top degree vanish.
            return Ok(FrameForm::zero(&space, n, p + 1));
        }
        Ok(FrameForm::from_increasing(&space, n, p + 1, |idx| {
            let mut acc = Jet::zero(&space);
            for a in 0..=p {
                let rest: Vec<usize> = idx.iter().enumerate().filter(|(b, _)| *b != a).map(|(_, &v)| v).collect();
                let term = self.along(idx[a], form.get(&rest));
                acc = if a % 2 == 0 { acc + term } else { acc - term };
            }
            for a in 0..=p {
                for b in a + 1..=p {
                    let rest: Vec<usize> = idx
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != a && *k != b)
                        .map(|(_, &v)| v)
                        .collect();
                    let mut inner = Jet::zero(&space);
                    let mut args = Vec::with_capacity(p);
                    for mm in 0..n {
                        let cm = self.c(idx[a], idx[b], mm);
                        if cm.value() == 0.0 && cm.coeffs().iter().all(|&v| v == 0.0) {
                            continue;
                        }
                        args.clear();
                        args.push(mm);
                        args.extend_from_slice(&rest);
                        inner = inner + cm * form.get(&args);
                    }
                    acc = if (a + b) % 2 == 0 { acc + inner } else { acc - inner };
                }
            }
            acc
        }))
    }

    /// `max |∇_A B − ∇_B A − [A,B]|` over legs.
    pub fn torsion_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = self.gamma(i, j, k).value() - self.gamma(j, i, k).value() - self.c(i, j, k).value();
                    worst = worst.max(t.abs());
                }
            }
        }
        worst
    }

    /// `max |Γ(i,j,k) + Γ(i,k,j)|`.
    pub fn metricity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.gamma(i, j, k).value() + self.gamma(i, k, j).value()).abs());
                }
            }
        }
        worst
    }

    /// `max |c^k_ij + c^k_ji|`.
    pub fn bracket_antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.c(i, j, k).value() + self.c(j, i, k).value()).abs());
                }
            }
        }
        worst
    }

    /// Jacobi identity `Σ_cyc (e_i(c^m_jk) + Σ_l c^l_jk c^m_il) = 0`.
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for t in increasing_tuples(n, 3) {
            let (i, j, k) = (t[0], t[1], t[2]);
            for m in 0..n {
                let mut s = 0.0;
                for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                    s += self.along(a, self.c(b, c, m)).value();
                    for l in 0..n {
                        s += self.c(b, c, l).value() * self.c(a, l, m).value();
                    }
                }
                worst = worst.max(s.abs());
            }
        }
        worst
    }

    /// Compatibility of leg components with the brackets:
    /// `e_i(e_j^a) − e_j(e_i^a) = Σ_k c^k_ij e_k^a`.
    pub fn bracket_consistency_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for a in 0..self.m {
                    let lhs = self.along(i, &self.legs[j][a]).value() - self.along(j, &self.legs[i][a]).value();
                    let rhs: f64 = (0..n).map(|k| self.c(i, j, k).value() * self.legs[k][a].value()).sum();
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }
}

/// `s = Σ_{i,j} R(i,j,i,j)`.
pub fn scalar_from_riemann(r: &[Jet], n: usize) -> Jet {
    let mut acc = r[0].scale(0.0);
    for i in 0..n {
        for j in 0..n {
            acc = acc + &r[((i * n + j) * n + i) * n + j];
        }
    }
    acc
}

/// First Bianchi residual `max |R(i,j,k,l) + R(j,k,i,l) + R(k,i,j,l)|`.
pub fn bianchi_defect(r: &[Jet], n: usize) -> f64 {
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let s = r[idx(i, j, k, l)].value() + r[idx(j, k, i, l)].value() + r[idx(k, i, j, l)].value();
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// `max |R(i,j,k,l) + R(i,j,l,k)|`: metric connections give skew endomorphisms.
pub fn curvature_skew_defect(r: &[Jet], n: usize) -> f64 {
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    worst = worst.max((r[idx(i, j, k, l)].value() + r[idx(i, j, l, k)].value()).abs());
                }
            }
        }
    }
    worst
}

/// Structure functions of a coordinate frame. Leg component `a` is the
/// direction of jet variable `offset + a`.
pub(crate) fn coordinate_brackets(legs: &[Vec<Jet>], point: &[f64], offset: usize) -> Result<Vec<Jet>, GeomError> {
    let n = legs.len();
    let inv = invert_jet_matrix(legs, point)?;
    // legs[i][a]: row i = leg. Coframe θ^k_a satisfies Σ_a legs[i][a] θ^k_a = δ_ik,
    // i.e. θ = (legs)^{-1} read as θ^k_a = inv[a][k].
    let along = |i: usize, f: &Jet| -> Jet {
        let mut acc = f.d(0).scale(0.0);
        for (a, comp) in legs[i].iter().enumerate() {
            if comp.coeffs().iter().all(|&v| v == 0.0) {
                continue;
            }
            acc = acc + comp * &f.d(offset + a);
        }
        acc
    };
    let mut derivs = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                derivs.push(along(i, &legs[j][a]));
            }
        }
    }
    let mut c = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            let bracket: Vec<Jet> =
                (0..n).map(|a| &derivs[(i * n + j) * n + a] - &derivs[(j * n + i) * n + a]).collect();
            for k in 0..n {
                let mut acc = bracket[0].scale(0.0);
                for (a, b) in bracket.iter().enumerate() {
                    acc = acc + b * &inv[a][k];
                }
                c.push(acc);
            }
        }
    }
    Ok(c)
}
