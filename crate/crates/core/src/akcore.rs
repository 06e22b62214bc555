//! Almost-Kähler structures on an orthonormal frame.
//!
//! `J` is constant in the frame: legs are paired as `(e_{2k}, e_{2k+1})`
//! (0-based) with `J e_{2k} = e_{2k+1}`, and `ω(A,B) = g(JA,B)`.
//!
//! The canonical Hermitian connection is `∇ = D − ½J(DJ)`. The Ricci-type
//! forms are contractions of the curvature (convention of [`crate::framegeo`]):
//!
//! * `ρ^∇(A,B) = ½ Σ_i ⟨R^∇_{A,B} e_i, J e_i⟩`
//! * `r(A,B)   = ½ Σ_i ⟨R^∇_{e_i,J e_i} A, B⟩`
//! * `ρ*(A,B)  = ½ Σ_i ⟨R^D_{e_i,J e_i} A, B⟩`
//! * `s^H = Σ_i ρ^∇(e_i, J e_i)`, and `s*` is the same contraction of `ρ*`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::forms::FrameForm;
use crate::framegeo::{
    bianchi_defect, curvature_skew_defect, scalar_from_riemann, FrameGeometry, FramePatch, GeomError,
};
use crate::jets::Jet;

/// Partner leg and sign: `J e_i = sign · e_{partner}`.
pub fn j_leg(i: usize) -> (usize, f64) {
    if i % 2 == 0 {
        (i + 1, 1.0)
    } else {
        (i - 1, -1.0)
    }
}

/// Applies `J` to frame components.
pub fn apply_j(v: &[Jet]) -> Vec<Jet> {
    (0..v.len())
        .map(|k| if k % 2 == 1 { v[k - 1].clone() } else { -&v[k + 1] })
        .collect()
}

/// `(Jα)(X) = −α(JX)` on 1-forms.
pub fn j_one_form(alpha: &FrameForm) -> FrameForm {
    assert_eq!(alpha.degree(), 1);
    let n = alpha.frame_dim();
    FrameForm::one_form(
        (0..n)
            .map(|i| {
                let (p, s) = j_leg(i);
                alpha.get(&[p]).scale(-s)
            })
            .collect(),
    )
}

/// `A^{J,+}(X,Y) = ½(A(X,Y) + A(JX,JY))`.
pub fn j_invariant_part(a: &FrameForm) -> FrameForm {
    assert_eq!(a.degree(), 2);
    let n = a.frame_dim();
    let space = a.comps()[0].space().clone();
    FrameForm::from_increasing(&space, n, 2, |t| {
        let ((p, sp), (q, sq)) = (j_leg(t[0]), j_leg(t[1]));
        (a.get(t) + &a.get(&[p, q]).scale(sp * sq)).scale(0.5)
    })
}

/// A frame patch with an even number of legs, read as an almost-Kähler structure.
#[derive(Clone, Debug)]
pub struct AkFrame {
    patch: FramePatch,
}

impl AkFrame {
    pub fn new(patch: FramePatch) -> Result<AkFrame, GeomError> {
        if patch.frame_dim() % 2 != 0 || patch.frame_dim() == 0 {
            return Err(GeomError::Unsupported(format!("frame dimension {} is not even", patch.frame_dim())));
        }
        Ok(AkFrame { patch })
    }

    pub fn patch(&self) -> &FramePatch {
        &self.patch
    }

    pub fn at(&self, point: &[f64], order: usize) -> Result<AkGeometry, GeomError> {
        Ok(AkGeometry::new(self.patch.at(point, order)?))
    }
}

/// Almost-Kähler data at one point. Curvatures are computed on demand and cached.
pub struct AkGeometry {
    geo: FrameGeometry,
    dj: Vec<Jet>,
    chern: Vec<Jet>,
    nij: Vec<Jet>,
    r_chern: OnceLock<Result<Vec<Jet>, GeomError>>,
    r_lc: OnceLock<Result<Vec<Jet>, GeomError>>,
}

impl AkGeometry {
    pub fn new(geo: FrameGeometry) -> AkGeometry {
        let n = geo.n();
        // (D_{e_i}J) e_j, component m.
        let mut dj = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                let (jp, js) = j_leg(j);
                for m in 0..n {
                    // D_i(J e_j) − J(D_i e_j)
                    let (mp, ms) = j_leg(m);
                    // (J v)^m = −ms · v^{mp}: J e_{mp} = s_{mp} e_m and s_{mp} = −ms.
                    let v = &geo.gamma(i, jp, m).scale(js) + &geo.gamma(i, j, mp).scale(ms);
                    dj.push(v);
                }
            }
        }
        let mut chern = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (kp, ks) = j_leg(k);
                    // (J w)^k = −ks · w^{kp}
                    let jdj = dj[(i * n + j) * n + kp].scale(-ks);
                    chern.push(geo.gamma(i, j, k) - &jdj.scale(0.5));
                }
            }
        }
        let mut nij = Vec::with_capacity(n * n * n);
        for a in 0..n {
            let (ap, sa) = j_leg(a);
            for b in 0..n {
                let (bp, sb) = j_leg(b);
                // [JA,JB] − [A,B] − J[JA,B] − J[A,JB]
                let jab: Vec<Jet> = (0..n).map(|k| geo.c(ap, b, k).scale(sa)).collect();
                let ajb: Vec<Jet> = (0..n).map(|k| geo.c(a, bp, k).scale(sb)).collect();
                let j1 = apply_j(&jab);
                let j2 = apply_j(&ajb);
                for k in 0..n {
                    let v = &(&geo.c(ap, bp, k).scale(sa * sb) - geo.c(a, b, k)) - &(&j1[k] + &j2[k]);
                    nij.push(v.scale(0.25));
                }
            }
        }
        AkGeometry { geo, dj, chern, nij, r_chern: OnceLock::new(), r_lc: OnceLock::new() }
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geo
    }

    pub fn n(&self) -> usize {
        self.geo.n()
    }

    pub fn omega(&self) -> FrameForm {
        self.geo.constant_form(2, |t| if t[0] % 2 == 0 && t[1] == t[0] + 1 { 1.0 } else { 0.0 })
    }

    /// `max |dω|`; vanishes exactly when the structure is almost-Kähler.
    pub fn omega_closed_defect(&self) -> Result<f64, GeomError> {
        Ok(self.geo.exterior_derivative(&self.omega())?.max_abs())
    }

    /// Components of `N(e_a, e_b)`.
    pub fn nijenhuis(&self, a: usize, b: usize) -> &[Jet] {
        let n = self.n();
        &self.nij[(a * n + b) * n..(a * n + b + 1) * n]
    }

    /// `‖N‖² = Σ_{a,b} |N(e_a,e_b)|²` over ordered leg pairs.
    pub fn nijenhuis_norm_sq(&self) -> f64 {
        self.nij.iter().map(|v| v.value() * v.value()).sum()
    }

    /// `max |N(JA,B) + J N(A,B)|` and antisymmetry of `N`.
    pub fn nijenhuis_type_defect(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            let (ap, sa) = j_leg(a);
            for b in 0..n {
                let jn = apply_j(self.nijenhuis(a, b));
                for k in 0..n {
                    let lhs = sa * self.nijenhuis(ap, b)[k].value();
                    worst = worst.max((lhs + jn[k].value()).abs());
                    worst = worst.max((self.nijenhuis(a, b)[k].value() + self.nijenhuis(b, a)[k].value()).abs());
                }
            }
        }
        worst
    }

    /// `⟨(D_{e_i}J) e_j, e_m⟩`.
    pub fn dj(&self, i: usize, j: usize, m: usize) -> &Jet {
        let n = self.n();
        &self.dj[(i * n + j) * n + m]
    }

    /// `max |⟨(D_A J)B, C⟩ − 2⟨JA, N(B,C)⟩|` over legs.
    pub fn ak_relation_residual(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            let (ap, sa) = j_leg(a);
            for b in 0..n {
                for c in 0..n {
                    let rhs = 2.0 * sa * self.nijenhuis(b, c)[ap].value();
                    worst = worst.max((self.dj(a, b, c).value() - rhs).abs());
                }
            }
        }
        worst
    }

    /// Chern connection coefficients `⟨∇_{e_i}e_j, e_k⟩`, flattened like Levi-Civita.
    pub fn chern_connection(&self) -> &[Jet] {
        &self.chern
    }

    fn chern_at(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n();
        self.chern[(i * n + j) * n + k].value()
    }

    /// `max |⟨∇_i e_j, e_k⟩ + ⟨∇_i e_k, e_j⟩|`.
    pub fn chern_metricity_defect(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.chern_at(i, j, k) + self.chern_at(i, k, j)).abs());
                }
            }
        }
        worst
    }

    /// `max |(∇_i J) e_j|`.
    pub fn chern_j_defect(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (jp, js) = j_leg(j);
                for m in 0..n {
                    let (mp, ms) = j_leg(m);
                    let v = js * self.chern_at(i, jp, m) + ms * self.chern_at(i, j, mp);
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// Components of the torsion `∇_A B − ∇_B A − [A,B]` on legs.
    pub fn chern_torsion(&self, a: usize, b: usize) -> Vec<f64> {
        (0..self.n())
            .map(|k| self.chern_at(a, b, k) - self.chern_at(b, a, k) - self.geo.c(a, b, k).value())
            .collect()
    }

    /// `max |Tor^∇(A,B) − N(A,B)|`.
    pub fn chern_torsion_defect(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for (k, t) in self.chern_torsion(a, b).into_iter().enumerate() {
                    worst = worst.max((t - self.nijenhuis(a, b)[k].value()).abs());
                }
            }
        }
        worst
    }

    pub fn chern_curvature(&self) -> Result<&[Jet], GeomError> {
        match self.r_chern.get_or_init(|| self.geo.curvature_of(&self.chern)) {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }

    pub fn riemann(&self) -> Result<&[Jet], GeomError> {
        match self.r_lc.get_or_init(|| self.geo.riemann()) {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }

    fn contract_last(&self, r: &[Jet]) -> FrameForm {
        // ½ Σ_i ⟨R_{A,B} e_i, J e_i⟩
        let n = self.n();
        let space = r[0].space().clone();
        FrameForm::from_increasing(&space, n, 2, |t| {
            let mut acc = r[0].scale(0.0);
            for i in 0..n {
                let (ip, si) = j_leg(i);
                acc = acc + r[((t[0] * n + t[1]) * n + i) * n + ip].scale(si);
            }
            acc.scale(0.5)
        })
    }

    fn contract_first(&self, r: &[Jet]) -> FrameForm {
        // ½ Σ_i ⟨R_{e_i,J e_i} A, B⟩
        let n = self.n();
        let space = r[0].space().clone();
        FrameForm::from_increasing(&space, n, 2, |t| {
            let mut acc = r[0].scale(0.0);
            for i in 0..n {
                let (ip, si) = j_leg(i);
                acc = acc + r[((i * n + ip) * n + t[0]) * n + t[1]].scale(si);
            }
            acc.scale(0.5)
        })
    }

    /// `ρ^∇`.
    pub fn first_chern_ricci(&self) -> Result<FrameForm, GeomError> {
        Ok(self.contract_last(self.chern_curvature()?))
    }

    /// `r`.
    pub fn second_chern_ricci(&self) -> Result<FrameForm, GeomError> {
        Ok(self.contract_first(self.chern_curvature()?))
    }

    /// `ρ*`.
    pub fn star_ricci(&self) -> Result<FrameForm, GeomError> {
        Ok(self.contract_first(self.riemann()?))
    }

    /// `Σ_i F(e_i, J e_i)`.
    pub fn omega_trace(&self, f: &FrameForm) -> Jet {
        let mut acc = f.comps()[0].scale(0.0);
        for i in 0..self.n() {
            let (ip, si) = j_leg(i);
            acc = acc + f.get(&[i, ip]).scale(si);
        }
        acc
    }

    pub fn hermitian_scalar(&self) -> Result<Jet, GeomError> {
        Ok(self.omega_trace(&self.first_chern_ricci()?))
    }

    pub fn riemannian_scalar(&self) -> Result<Jet, GeomError> {
        Ok(scalar_from_riemann(self.riemann()?, self.n()))
    }

    pub fn star_scalar(&self) -> Result<Jet, GeomError> {
        Ok(self.omega_trace(&self.star_ricci()?))
    }

    /// `max |r(JA,JB) − r(A,B)|`.
    pub fn r_j_invariance_defect(&self) -> Result<f64, GeomError> {
        let r = self.second_chern_ricci()?;
        Ok(r.max_abs_diff(&j_invariant_part(&r)))
    }

    /// Right side of the second Chern–Ricci identity: `(ρ^∇)^{J,+}` plus the two
    /// Nijenhuis contractions, built without touching `r`.
    pub fn second_chern_formula_rhs(&self) -> Result<FrameForm, GeomError> {
        let n = self.n();
        let rho = j_invariant_part(&self.first_chern_ricci()?);
        let space = rho.comps()[0].space().clone();
        let nv = |a: usize, b: usize, k: usize| self.nijenhuis(a, b)[k].value();
        let extra = FrameForm::from_increasing(&space, n, 2, |t| {
            let (x, y) = (t[0], t[1]);
            let (xp, sx) = j_leg(x);
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..n {
                    s += sx * nv(i, k, xp) * nv(i, k, y);
                    let (ip, si) = j_leg(i);
                    s += nv(x, k, i) * si * nv(y, k, ip);
                }
            }
            crate::jets::Jet::constant(&space, s)
        });
        Ok(rho.zip(&extra, |a, b| a.add_scalar(b.value())))
    }

    pub fn second_chern_formula_residual(&self) -> Result<f64, GeomError> {
        Ok(self.second_chern_ricci()?.max_abs_diff(&self.second_chern_formula_rhs()?))
    }

    /// Pointwise Einstein factor `λ = s^H / 2n` and `max |r − λω|`.
    pub fn sce_residual(&self) -> Result<(f64, f64), GeomError> {
        let r = self.second_chern_ricci()?;
        let lambda = self.omega_trace(&r).value() / self.n() as f64;
        let target = self.omega().scale(lambda);
        Ok((lambda, r.max_abs_diff(&target)))
    }

    /// Frame components of `J grad s^H`.
    pub fn symplectic_gradient_of_hermitian_scalar(&self) -> Result<Vec<Jet>, GeomError> {
        let sh = self.hermitian_scalar()?;
        if sh.order() < 2 {
            return Err(GeomError::Order {
                needed: self.geo.order() + 2 - sh.order(),
                have: self.geo.order(),
                what: "extremality (derivatives of s^H)",
            });
        }
        let grad: Vec<Jet> = (0..self.n()).map(|i| self.geo.along(i, &sh)).collect();
        Ok(apply_j(&grad))
    }

    /// Killing residual of `J grad s^H`.
    pub fn extremality_residual(&self) -> Result<f64, GeomError> {
        let k = self.symplectic_gradient_of_hermitian_scalar()?;
        Ok(self.geo.killing_residual(&k))
    }

    /// Collects curvature quantities and identity residuals.
    pub fn report(&self) -> Result<CurvatureReport, GeomError> {
        let n = self.n();
        let rho = self.first_chern_ricci()?;
        let r = self.second_chern_ricci()?;
        let rho_star = self.star_ricci()?;
        let s_h = self.omega_trace(&rho).value();
        let s_h_from_r = self.omega_trace(&r).value();
        let mut residuals = BTreeMap::new();
        residuals.insert("trace_rho_vs_trace_r".to_string(), (s_h - s_h_from_r).abs());
        residuals.insert("r_j_invariance".to_string(), r.max_abs_diff(&j_invariant_part(&r)));
        residuals.insert("second_chern_formula".to_string(), self.second_chern_formula_residual()?);
        residuals.insert("ak_relation".to_string(), self.ak_relation_residual());
        residuals.insert("chern_metricity".to_string(), self.chern_metricity_defect());
        residuals.insert("chern_j_parallel".to_string(), self.chern_j_defect());
        residuals.insert("chern_torsion_vs_nijenhuis".to_string(), self.chern_torsion_defect());
        residuals.insert("levi_civita_torsion".to_string(), self.geo.torsion_defect());
        residuals.insert("bianchi".to_string(), bianchi_defect(self.riemann()?, n));
        residuals.insert("chern_curvature_skew".to_string(), curvature_skew_defect(self.chern_curvature()?, n));
        residuals.insert("omega_closed".to_string(), self.omega_closed_defect()?);
        if rho.order() >= 1 {
            residuals.insert("rho_closed".to_string(), self.geo.exterior_derivative(&rho)?.max_abs());
        }
        Ok(CurvatureReport {
            point: self.geo.point().to_vec(),
            s_h,
            s_g: self.riemannian_scalar()?.value(),
            s_star: self.omega_trace(&rho_star).value(),
            n_norm_sq: self.nijenhuis_norm_sq(),
            rho,
            r,
            rho_star,
            residuals,
        })
    }
}

/// Curvature summary at a point.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    pub rho: FrameForm,
    pub r: FrameForm,
    pub rho_star: FrameForm,
    pub s_h: f64,
    pub s_g: f64,
    pub s_star: f64,
    pub n_norm_sq: f64,
    pub residuals: BTreeMap<String, f64>,
}

impl CurvatureReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framegeo::{ClosureFrame, DomainBox};
    use std::sync::Arc;

    fn sphere() -> AkFrame {
        let legs = Arc::new(|x: &[Jet]| {
            let f = (&x[0] * &x[0] + &x[1] * &x[1]).add_scalar(1.0).scale(0.5);
            let z = f.scale(0.0);
            Ok(vec![vec![f.clone(), z.clone()], vec![z, f]])
        });
        let patch = FramePatch::new(
            "sphere",
            vec!["x".into(), "y".into()],
            DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
            Arc::new(ClosureFrame::coordinate(2, legs)),
        );
        AkFrame::new(patch).unwrap()
    }

    #[test]
    fn kahler_sphere_scalars_agree() {
        let g = sphere().at(&[0.4, -0.2], 3).unwrap();
        let rep = g.report().unwrap();
        assert!((rep.s_h - 2.0).abs() < 1e-12);
        assert!((rep.s_g - 2.0).abs() < 1e-12);
        assert!((rep.s_star - 2.0).abs() < 1e-12);
        assert!(rep.n_norm_sq < 1e-28);
        assert!(rep.rho.max_abs_diff(&rep.r) < 1e-12);
        assert!(rep.max_residual() < 1e-12, "{:?}", rep.residuals);
        let (lambda, res) = g.sce_residual().unwrap();
        assert!((lambda - 1.0).abs() < 1e-12 && res < 1e-12);
    }

    #[test]
    fn j_conventions() {
        let s = crate::jets::JetSpace::new(1, 0).unwrap();
        let dx = FrameForm::one_form(vec![Jet::constant(&s, 1.0), Jet::constant(&s, 0.0)]);
        // J dx = dy
        let jdx = j_one_form(&dx);
        assert_eq!(jdx.values(), vec![0.0, 1.0]);
        let v = apply_j(&[Jet::constant(&s, 1.0), Jet::constant(&s, 0.0)]);
        assert_eq!(v[1].value(), 1.0);
    }

    #[test]
    fn odd_frame_rejected() {
        let legs = Arc::new(|x: &[Jet]| Ok(vec![vec![x[0].scale(0.0).add_scalar(1.0)]]));
        let patch = FramePatch::new(
            "line",
            vec!["x".into()],
            DomainBox::new(vec![0.0], vec![1.0]),
            Arc::new(ClosureFrame::coordinate(1, legs)),
        );
        assert!(AkFrame::new(patch).is_err());
    }
}
