//! Six-dimensional wave structures over the first Hirzebruch surface.
//!
//! The base carries the `U(2)`-invariant Kähler metric
//! `g_M = h²(e¹² + e²²) + h²h′² e³² + dt²` with orthonormal frame
//! `E₁ = X/h, E₂ = Y/h, E₃ = V/(hh′), E₄ = ∂t`, where `[X,Y] = 2V`,
//! `[Y,V] = 2X`, `[V,X] = 2Y`. Writing `h′ = √y(h)` turns the
//! second-Chern–Einstein condition into a linear ODE for `y` with solution
//! `y = c₁h⁴ + c₂h⁻⁴ + 1`.
//!
//! Frames here use `h` itself as the transverse chart coordinate, so every
//! structure function is a closed expression in `h`. Points are addressed by
//! `t` and converted with [`HirzebruchProfile::h_of_t`].

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use roots::{find_root_brent, SimpleConvergency};
use thiserror::Error;

use crate::akcore::{AkFrame, AkGeometry};
use crate::forms::FrameForm;
use crate::framegeo::{ClosureFrame, DomainBox, FramePatch, GeomError};
use crate::jets::{Jet, JetSpace};
use crate::wavebuild::{BaseAK, Profile, WaveError, WaveMode, WaveStructure, PHI, THETA};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HirzError {
    #[error("h0 must be positive and finite, got {0}")]
    Domain(f64),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("t = {t} outside [0, {l}]")]
    OutsideInterval { t: f64, l: f64 },
    #[error("H'^2 condition violated at h = {h}: value {value:e}")]
    ConditionViolated { h: f64, value: f64 },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Wave(#[from] WaveError),
}

const QUAD_NODES: usize = 96;

/// Closed-form solution `y(h) = c₁h⁴ + c₂h⁻⁴ + 1` with its endpoints.
#[derive(Clone, Debug)]
pub struct HirzebruchProfile {
    pub h0: f64,
    pub hl: f64,
    pub c1: f64,
    pub c2: f64,
    /// Length `l = t(h_l)` of the `t`-interval.
    pub l: f64,
    rule: Arc<GaussLegendre>,
}

/// Ratio `x = h_l/h₀ > 1` from `−x⁴ + 3 = 0`.
pub fn endpoint_ratio() -> Result<f64, HirzError> {
    let p = |x: f64| -x.powi(4) + 3.0;
    let mut conv = SimpleConvergency { eps: 1e-15, max_iter: 200 };
    let mut x = find_root_brent(1.0, 2.0, p, &mut conv).map_err(|e| HirzError::Numeric(format!("{e:?}")))?;
    for _ in 0..2 {
        x -= p(x) / (-4.0 * x.powi(3));
    }
    Ok(x)
}

/// `(y, y′, y″)` of `c₁h⁴ + c₂h⁻⁴ + 1`.
pub fn y_family(c1: f64, c2: f64, h: f64) -> [f64; 3] {
    [
        c1 * h.powi(4) + c2 * h.powi(-4) + 1.0,
        4.0 * c1 * h.powi(3) - 4.0 * c2 * h.powi(-5),
        12.0 * c1 * h * h + 20.0 * c2 * h.powi(-6),
    ]
}

/// `−½y″ − y′/(2h) + 8y/h² − 8/h²`.
pub fn y_form_residual(y: [f64; 3], h: f64) -> f64 {
    -0.5 * y[2] - y[1] / (2.0 * h) + 8.0 * y[0] / (h * h) - 8.0 / (h * h)
}

/// `−h‴/h′ − h″/h + 8h′²/h² − 8/h²`.
pub fn t_form_residual(h: f64, d1: f64, d2: f64, d3: f64) -> f64 {
    -d3 / d1 - d2 / h + 8.0 * d1 * d1 / (h * h) - 8.0 / (h * h)
}

/// Derivatives of `h(t)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HDerivs {
    pub t: f64,
    pub h: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// The two expressions for `H′²/8` in terms of `h` and its `t`-derivatives.
pub fn condition_expressions(d: &HDerivs) -> (f64, f64) {
    let HDerivs { h, d1, d2, d3, .. } = *d;
    ((4.0 - 4.0 * d1 * d1 - 2.0 * h * d2) / (h * h), -(5.0 * d1 * d2 + h * d3) / (2.0 * h * d1))
}

/// One row of the printed `r` display.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceSample {
    pub t: f64,
    pub h: f64,
    /// Coefficients of `E₁♭∧E₂♭`, `E₃♭∧E₄♭`, `dθ∧dφ`.
    pub coeffs: [f64; 3],
    pub lambda: f64,
    pub spread: f64,
}

/// Derivative conditions at the two ends of the interval.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryReport {
    /// `h″(0) − 1/h(0)`.
    pub d2_start: f64,
    /// `h″(l) + 1/h(l)`.
    pub d2_end: f64,
    pub d1_start: f64,
    pub d1_end: f64,
    pub d3_start: f64,
    pub d3_end: f64,
    pub y_start: f64,
    pub y_end: f64,
    /// `y′(h₀) − 2/h₀` and `y′(h_l) + 2/h_l`.
    pub dy_start: f64,
    pub dy_end: f64,
}

impl BoundaryReport {
    pub fn max_abs(&self) -> f64 {
        [
            self.d2_start,
            self.d2_end,
            self.d1_start,
            self.d1_end,
            self.d3_start,
            self.d3_end,
            self.y_start,
            self.y_end,
            self.dy_start,
            self.dy_end,
        ]
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
    }
}

/// Generic-machinery comparison at one point of the total space.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericCheck {
    pub t: f64,
    /// `max |r − printed display|`.
    pub r_display: f64,
    /// `max |r − (ρ^∇_M − ⅛H′²E₃♭∧E₄♭ + ⅛H′²dθ∧dφ)|`.
    pub r_prop: f64,
    /// `max |ρ^∇ − ρ^∇_M|`.
    pub rho_base: f64,
    /// `max |r − λω|` from the generic `r`.
    pub sce: f64,
    /// `|s^H − 6λ|` with `λ` from the display.
    pub trace: f64,
    pub lambda: f64,
    pub nijenhuis_norm_sq: f64,
}

impl HirzebruchProfile {
    pub fn solve(h0: f64) -> Result<HirzebruchProfile, HirzError> {
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(HirzError::Domain(h0));
        }
        let x = endpoint_ratio()?;
        let hl = x * h0;
        let s4 = h0.powi(4) + hl.powi(4);
        let c1 = -1.0 / s4;
        let c2 = -h0.powi(4) * hl.powi(4) / s4;
        let rule = Arc::new(GaussLegendre::new(NonZeroUsize::new(QUAD_NODES).expect("nonzero")));
        let mut p = HirzebruchProfile { h0, hl, c1, c2, l: 0.0, rule };
        p.l = p.t_of_s(PI);
        if !p.l.is_finite() || p.l <= 0.0 {
            return Err(HirzError::Numeric(format!("interval length {}", p.l)));
        }
        Ok(p)
    }

    pub fn y(&self, h: f64) -> [f64; 3] {
        y_family(self.c1, self.c2, h)
    }

    /// `y` on a jet.
    pub fn y_jet(&self, h: &Jet) -> Jet {
        (h.powi(4).scale(self.c1) + h.powi(-4).scale(self.c2)).add_scalar(1.0)
    }

    /// `y/((h − h₀)(h_l − h))`, positive on the closed interval.
    fn y_reduced(&self, h: f64) -> f64 {
        let (a, b) = (self.h0, self.hl);
        -self.c1 * (h + a) * (h * h + a * a) * (h + b) * (h * h + b * b) / h.powi(4)
    }

    /// `h = m − w cos s`, `s ∈ [0, π]`.
    fn h_of_s(&self, s: f64) -> f64 {
        let (m, w) = ((self.h0 + self.hl) / 2.0, (self.hl - self.h0) / 2.0);
        m - w * s.cos()
    }

    fn s_of_h(&self, h: f64) -> f64 {
        let (m, w) = ((self.h0 + self.hl) / 2.0, (self.hl - self.h0) / 2.0);
        ((m - h) / w).clamp(-1.0, 1.0).acos()
    }

    /// `t` after the substitution: `∫₀^s ds/√(y_reduced)`.
    fn t_of_s(&self, s: f64) -> f64 {
        self.rule.integrate(0.0, s, |v| 1.0 / self.y_reduced(self.h_of_s(v)).sqrt())
    }

    /// `t(h) = ∫_{h₀}^h dh/√y`.
    pub fn t_of_h(&self, h: f64) -> f64 {
        self.t_of_s(self.s_of_h(h))
    }

    /// Inverse of [`t_of_h`](Self::t_of_h).
    pub fn h_of_t(&self, t: f64) -> Result<f64, HirzError> {
        if !(-1e-12..=self.l + 1e-12).contains(&t) {
            return Err(HirzError::OutsideInterval { t, l: self.l });
        }
        if t <= 0.0 {
            return Ok(self.h0);
        }
        if t >= self.l {
            return Ok(self.hl);
        }
        let mut conv = SimpleConvergency { eps: 1e-14, max_iter: 200 };
        let mut s = find_root_brent(0.0, PI, |s| self.t_of_s(s) - t, &mut conv)
            .map_err(|e| HirzError::Numeric(format!("inverting t(h): {e:?}")))?;
        for _ in 0..2 {
            let ds = (self.t_of_s(s) - t) * self.y_reduced(self.h_of_s(s)).sqrt();
            s = (s - ds).clamp(0.0, PI);
        }
        Ok(self.h_of_s(s))
    }

    /// `h′ = √y`, `h″ = y′/2`, `h‴ = ½y″h′` at height `h` (one-sided at the ends).
    pub fn derivs_at_h(&self, h: f64) -> HDerivs {
        let [y, yp, ypp] = self.y(h);
        let d1 = y.max(0.0).sqrt();
        HDerivs { t: self.t_of_h(h), h, d1, d2: 0.5 * yp, d3: 0.5 * ypp * d1 }
    }

    /// Taylor jet of `h(t)` around `t` by Picard iteration of `h′ = √y(h)`;
    /// independent of the `y′`, `y″` formulas. Needs `y(h(t)) > 0`.
    pub fn t_jet(&self, t: f64, order: usize) -> Result<Jet, HirzError> {
        let h = self.h_of_t(t)?;
        if self.y(h)[0] <= 0.0 {
            return Err(HirzError::Numeric(format!("Picard jet needs an interior point, h = {h}")));
        }
        let space = JetSpace::new(1, order).map_err(GeomError::from)?;
        let mut jet = Jet::constant(&space, h);
        for _ in 0..=order {
            let g = self.y_jet(&jet).sqrt();
            let mut c = vec![h; order + 1];
            for k in 0..order {
                c[k + 1] = g.coeffs()[k] / (k + 1) as f64;
            }
            jet = Jet::from_coeffs(&space, c);
        }
        Ok(jet)
    }

    /// Derivatives of `h` at `t` from the Picard jet.
    pub fn derivs_at_t(&self, t: f64) -> Result<HDerivs, HirzError> {
        let j = self.t_jet(t, 3)?;
        let c = j.coeffs();
        Ok(HDerivs { t, h: c[0], d1: c[1], d2: 2.0 * c[2], d3: 6.0 * c[3] })
    }

    /// `H′²` as a function of `h`: `8(4 − 4y − hy′)/h²`.
    pub fn h_prime_sq(&self, h: f64) -> f64 {
        let [y, yp, _] = self.y(h);
        8.0 * (4.0 - 4.0 * y - h * yp) / (h * h)
    }

    /// `H′ = +√(H′²)` at height `h`.
    pub fn h_prime(&self, h: f64) -> Result<f64, HirzError> {
        let v = self.h_prime_sq(h);
        if v < -1e-12 {
            return Err(HirzError::ConditionViolated { h, value: v });
        }
        Ok(v.max(0.0).sqrt())
    }

    fn h_prime_jet(&self, h: &Jet) -> Jet {
        let y = self.y_jet(h);
        let yp = (h.powi(3).scale(4.0 * self.c1) + h.powi(-5).scale(-4.0 * self.c2)).scale(1.0);
        let num = (y.scale(-4.0) - h * &yp).add_scalar(4.0).scale(8.0);
        (&num / &(h * h)).sqrt()
    }

    /// `H(t(h)) = ∫₀^t H′`, gauge `H(0) = 0`.
    pub fn big_h_at_h(&self, h: f64) -> Result<f64, HirzError> {
        let mut err = None;
        let v = self.rule.integrate(0.0, self.s_of_h(h), |s| {
            let hs = self.h_of_s(s);
            match self.h_prime(hs) {
                Ok(d) => d / self.y_reduced(hs).sqrt(),
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// `(H′(t), H(t))`.
    pub fn reconstruct_h(&self, t: f64) -> Result<(f64, f64), HirzError> {
        let h = self.h_of_t(t)?;
        Ok((self.h_prime(h)?, self.big_h_at_h(h)?))
    }

    /// Jet of `H` composed with a chart jet of `h`.
    pub fn big_h_jet(&self, h: &Jet) -> Result<Jet, GeomError> {
        let hv = h.value();
        let order = h.order();
        let space = JetSpace::new(1, order.max(1))?;
        let s = Jet::variable(&space, 0, hv);
        let q = &self.h_prime_jet(&s) / &self.y_jet(&s).sqrt();
        let base = self.big_h_at_h(hv).map_err(|e| GeomError::Unsupported(e.to_string()))?;
        let mut taylor = vec![base; order + 1];
        for k in 0..order {
            taylor[k + 1] = q.coeffs()[k] / (k + 1) as f64;
        }
        Ok(h.compose(&taylor))
    }

    /// `max` over samples of the `t`-form (Picard jet) and `y`-form residuals.
    pub fn ode_residual(&self, ts: &[f64]) -> Result<(f64, f64), HirzError> {
        let mut tform: f64 = 0.0;
        let mut yform: f64 = 0.0;
        for &t in ts {
            let d = self.derivs_at_t(t)?;
            tform = tform.max(t_form_residual(d.h, d.d1, d.d2, d.d3).abs());
            yform = yform.max(y_form_residual(self.y(d.h), d.h).abs());
        }
        Ok((tform, yform))
    }

    /// `max |e₁ − e₂|` between the two expressions for `H′²/8`, plus `min` of `e₁`.
    pub fn condition_agreement(&self, ts: &[f64]) -> Result<(f64, f64), HirzError> {
        let mut diff: f64 = 0.0;
        let mut min = f64::INFINITY;
        for &t in ts {
            let (a, b) = condition_expressions(&self.derivs_at_t(t)?);
            diff = diff.max((a - b).abs());
            min = min.min(a);
        }
        Ok((diff, min))
    }

    /// The printed three-term display at `t`.
    pub fn sce_sample(&self, t: f64) -> Result<SceSample, HirzError> {
        let d = if t > 0.0 && t < self.l { self.derivs_at_t(t)? } else { self.derivs_at_h(self.h_of_t(t)?) };
        let hp2 = self.h_prime_sq(d.h);
        let a1 = (4.0 - 4.0 * d.d1 * d.d1 - 2.0 * d.h * d.d2) / (d.h * d.h);
        // At the ends h′ = 0; the middle term has the one-sided limit −(5y′/2 + hy″/2)/h.
        let m = if d.d1 > 0.0 {
            (5.0 * d.d1 * d.d2 + d.h * d.d3) / (d.h * d.d1)
        } else {
            let [_, yp, ypp] = self.y(d.h);
            (2.5 * yp + 0.5 * d.h * ypp) / d.h
        };
        let a2 = -(m + hp2 / 8.0);
        let a3 = hp2 / 8.0;
        let coeffs = [a1, a2, a3];
        let spread = [(a1 - a2).abs(), (a1 - a3).abs(), (a2 - a3).abs()].into_iter().fold(0.0, f64::max);
        Ok(SceSample { t, h: d.h, coeffs, lambda: a1, spread })
    }

    pub fn sce_check(&self, ts: &[f64]) -> Result<Vec<SceSample>, HirzError> {
        ts.iter().map(|&t| self.sce_sample(t)).collect()
    }

    pub fn boundary_report(&self) -> BoundaryReport {
        let a = self.derivs_at_h(self.h0);
        let b = self.derivs_at_h(self.hl);
        let ya = self.y(self.h0);
        let yb = self.y(self.hl);
        BoundaryReport {
            d2_start: a.d2 - 1.0 / self.h0,
            d2_end: b.d2 + 1.0 / self.hl,
            d1_start: a.d1,
            d1_end: b.d1,
            d3_start: a.d3,
            d3_end: b.d3,
            y_start: ya[0],
            y_end: yb[0],
            dy_start: ya[1] - 2.0 / self.h0,
            dy_end: yb[1] + 2.0 / self.hl,
        }
    }

    /// `max |t(h(t)) − t|` on `n` points of `[δ, l − δ]`.
    pub fn round_trip(&self, n: usize, delta: f64) -> Result<f64, HirzError> {
        let mut worst: f64 = 0.0;
        for t in self.interior_samples(n, delta) {
            worst = worst.max((self.t_of_h(self.h_of_t(t)?) - t).abs());
        }
        Ok(worst)
    }

    /// `n` evenly spaced points of `[δ, l − δ]`.
    pub fn interior_samples(&self, n: usize, delta: f64) -> Vec<f64> {
        if n == 1 {
            return vec![self.l / 2.0];
        }
        (0..n).map(|i| delta + (self.l - 2.0 * delta) * i as f64 / (n - 1) as f64).collect()
    }

    /// Rows `(t, h, h′, H′, λ, spread)` on `n` points of `[0, l]`.
    pub fn table(&self, n: usize) -> Result<Vec<[f64; 6]>, HirzError> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let t = self.l * i as f64 / (n - 1) as f64;
                let s = self.sce_sample(t)?;
                let d = self.derivs_at_h(s.h);
                Ok([t, s.h, d.d1, self.h_prime(s.h)?, s.lambda, s.spread])
            })
            .collect()
    }

    /// Legs `E₁, E₂, E₃` as multiples of `X, Y, V` and the brackets of the
    /// abstract base frame, in `h`.
    fn base_frame(&self) -> FramePatch {
        let prof = self.clone();
        let legs = Arc::new(move |x: &[Jet]| -> Result<Vec<Vec<Jet>>, GeomError> {
            let z = x[0].scale(0.0);
            let d1 = prof.y_jet(&x[0]).sqrt();
            Ok(vec![vec![z.clone()], vec![z.clone()], vec![z], vec![d1]])
        });
        let prof = self.clone();
        let brackets = Arc::new(move |x: &[Jet]| -> Result<Vec<Jet>, GeomError> {
            let h = &x[0];
            let y = prof.y_jet(h);
            let d1 = y.sqrt();
            let yp = h.powi(3).scale(4.0 * prof.c1) + h.powi(-5).scale(-4.0 * prof.c2);
            let d2 = yp.scale(0.5);
            let n = 4;
            let mut c = vec![h.scale(0.0); n * n * n];
            let mut set = |i: usize, j: usize, k: usize, v: Jet| {
                c[(j * n + i) * n + k] = -&v;
                c[(i * n + j) * n + k] = v;
            };
            let hd1 = h * &d1;
            set(0, 1, 2, (&d1 / h).scale(2.0));
            set(1, 2, 0, hd1.recip().scale(2.0));
            set(2, 0, 1, hd1.recip().scale(2.0));
            let hl = (&d1 / h).scale(-1.0);
            set(3, 0, 0, hl.clone());
            set(3, 1, 1, hl.clone());
            set(3, 2, 2, &hl - &(&d2 / &d1));
            Ok(c)
        });
        FramePatch::new(
            "hirzebruch",
            vec!["h".into()],
            DomainBox::new(vec![self.h0], vec![self.hl]),
            Arc::new(ClosureFrame::abstract_frame(4, legs, brackets)),
        )
    }

    /// Base with the abstract `U(2)`-invariant frame over the chart `(h)`.
    pub fn base(&self) -> BaseAK {
        BaseAK::from_frame("hirzebruch", AkFrame::new(self.base_frame()).expect("even"), false, Vec::new())
    }

    /// Same base with `X, Y, V` realized as left-invariant fields in Euler
    /// angles `(ϑ, ϕ, ψ)` on `S³`, so brackets come from coordinate derivatives.
    pub fn euler_base(&self) -> BaseAK {
        let prof = self.clone();
        let legs = Arc::new(move |x: &[Jet]| -> Result<Vec<Vec<Jet>>, GeomError> {
            let (th, ps, h) = (&x[0], &x[2], &x[3]);
            let z = h.scale(0.0);
            let d1 = prof.y_jet(h).sqrt();
            let two_h = h.recip().scale(2.0);
            let (st, ct) = (th.sin(), th.cos());
            let (sp, cp) = (ps.sin(), ps.cos());
            let cot = &ct / &st;
            let e1 = vec![&two_h * &cp, &two_h * &(&sp / &st), -&(&two_h * &(&cot * &sp)), z.clone()];
            let e2 = vec![-&(&two_h * &sp), &two_h * &(&cp / &st), -&(&two_h * &(&cot * &cp)), z.clone()];
            let e3 = vec![z.clone(), z.clone(), (h * &d1).recip().scale(2.0), z.clone()];
            let e4 = vec![z.clone(), z.clone(), z, d1];
            Ok(vec![e1, e2, e3, e4])
        });
        let tau = 2.0 * PI;
        let patch = FramePatch::new(
            "hirzebruch-euler",
            vec!["euler_theta".into(), "euler_phi".into(), "euler_psi".into(), "h".into()],
            DomainBox::new(vec![0.3, 0.0, 0.0, self.h0], vec![PI - 0.3, tau, tau, self.hl]),
            Arc::new(ClosureFrame::coordinate(4, legs)),
        );
        BaseAK::from_frame("hirzebruch-euler", AkFrame::new(patch).expect("even"), false, Vec::new())
    }

    /// The profile `H(h)` for a base whose last chart coordinate is `h`.
    pub fn profile(&self) -> Profile {
        let prof = self.clone();
        Profile::custom(
            format!("H(t) for h0 = {}", self.h0),
            Arc::new(move |_theta: &Jet, x: &[Jet]| prof.big_h_jet(&x[x.len() - 1])),
        )
    }

    /// The six-dimensional wave structure with the abstract base frame.
    pub fn wave(&self) -> Result<WaveStructure, HirzError> {
        Ok(WaveStructure::build(&self.base(), self.profile(), WaveMode::Abstract)?)
    }

    /// The same structure from the Euler-angle coordinate frame.
    pub fn euler_wave(&self) -> Result<WaveStructure, HirzError> {
        Ok(WaveStructure::build(&self.euler_base(), self.profile(), WaveMode::Coordinate)?)
    }

    /// Total-chart point for the abstract wave.
    pub fn point(&self, theta: f64, phi: f64, t: f64) -> Result<Vec<f64>, HirzError> {
        Ok(vec![theta, phi, self.h_of_t(t)?])
    }

    /// Compares generic `r`, `ρ^∇` and `s^H` with the displays at interior `t`.
    pub fn generic_check(&self, wave: &WaveStructure, point: &[f64]) -> Result<GenericCheck, HirzError> {
        let h = point[point.len() - 1];
        let t = self.t_of_h(h);
        let ak = wave.at(point, 2)?;
        let base_ak = wave.base().frame().at(&point[2..], 2)?;
        let sample = self.sce_sample(t)?;
        Ok(compare_displays(&ak, &base_ak, &sample, self.h_prime_sq(h))?.with_t(t))
    }
}

impl GenericCheck {
    fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }
}

fn compare_displays(ak: &AkGeometry, base: &AkGeometry, s: &SceSample, hp2: f64) -> Result<GenericCheck, GeomError> {
    let geo = ak.geometry();
    let r = ak.second_chern_ricci()?;
    let rho = ak.first_chern_ricci()?;
    let e12 = geo.coframe(0).wedge(&geo.coframe(1));
    let e34 = geo.coframe(2).wedge(&geo.coframe(3));
    let dtp = geo.coordinate_differential(THETA).wedge(&geo.coordinate_differential(PHI));
    let display = e12.scale(s.coeffs[0]).add(&e34.scale(s.coeffs[1])).add(&dtp.scale(s.coeffs[2]));
    let rho_m = lift(&base.first_chern_ricci()?, geo.space(), geo.n());
    let prop = rho_m.add(&e34.scale(-hp2 / 8.0)).add(&dtp.scale(hp2 / 8.0));
    let (_, sce) = ak.sce_residual()?;
    Ok(GenericCheck {
        t: 0.0,
        r_display: value_diff(&r, &display),
        r_prop: value_diff(&r, &prop),
        rho_base: value_diff(&rho, &rho_m),
        sce,
        trace: (ak.hermitian_scalar()?.value() - 6.0 * s.lambda).abs(),
        lambda: s.lambda,
        nijenhuis_norm_sq: ak.nijenhuis_norm_sq(),
    })
}

/// Extends the values of a base 2-form by zero to the wave frame (base legs come first).
fn lift(form: &FrameForm, geo_space: &Arc<JetSpace>, n: usize) -> FrameForm {
    let nb = form.frame_dim();
    FrameForm::from_increasing(geo_space, n, 2, |idx| {
        let v = if idx.iter().all(|&i| i < nb) { form.at(idx) } else { 0.0 };
        Jet::constant(geo_space, v)
    })
}

fn value_diff(a: &FrameForm, b: &FrameForm) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
