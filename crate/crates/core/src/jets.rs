//! Truncated multivariate Taylor towers (forward-mode jets).
//!
//! A [`Jet`] of order `k` over `d` variables stores, for every multi-index
//! `α` with `|α| ≤ k`, the Taylor-normalized coefficient `∂^α f(p) / α!`.
//! Un-normalized partial derivatives are exposed through [`Jet::partial`].
//!
//! Coefficients are laid out densely in graded order (all degree-0
//! monomials, then degree 1, ...), with a fixed order inside each degree.
//! The order-`k−1` layout is therefore a prefix of the order-`k` layout,
//! which makes truncation a slice operation and lets jets of different
//! depth meet in arithmetic: the result always has the smaller order.
//!
//! Differentiating a jet ([`Jet::d`]) is exact and costs one order.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

/// Largest number of active variables a jet may carry.
pub const MAX_DIM: usize = 8;

pub type MultiIndex = [u8; MAX_DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("multi-index of total degree {degree} exceeds jet order {order}")]
    Order { degree: usize, order: usize },
    #[error("multi-index has {got} entries but the jet has {dim} variables")]
    Dimension { got: usize, dim: usize },
    #[error("jets of dimension {0} are not supported (max {MAX_DIM})")]
    TooManyVariables(usize),
}

/// Monomial tables shared by every jet of a given `(dim, order)`.
pub struct JetSpace {
    dim: usize,
    order: usize,
    monos: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    /// Cauchy-product table: `(a, b, out)` with `deg a + deg b ≤ order`.
    mul_table: Vec<(u32, u32, u32)>,
    /// For variable `v`: `(target index in lower space, source index, factor)`.
    deriv_maps: Vec<Vec<(u32, u32, f64)>>,
    lower: Option<Arc<JetSpace>>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("len", &self.monos.len())
            .finish()
    }
}

fn graded_monomials(dim: usize, order: usize) -> Vec<MultiIndex> {
    fn fill(dim: usize, var: usize, remaining: usize, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if var + 1 == dim {
            cur[var] = remaining as u8;
            out.push(*cur);
            cur[var] = 0;
            return;
        }
        for k in (0..=remaining).rev() {
            cur[var] = k as u8;
            fill(dim, var + 1, remaining - k, cur, out);
        }
        cur[var] = 0;
    }
    let mut out = Vec::new();
    for deg in 0..=order {
        if dim == 0 {
            if deg == 0 {
                out.push([0; MAX_DIM]);
            }
            continue;
        }
        let mut cur = [0u8; MAX_DIM];
        fill(dim, 0, deg, &mut cur, &mut out);
    }
    out
}

fn degree(m: &MultiIndex) -> usize {
    m.iter().map(|&k| k as usize).sum()
}

impl JetSpace {
    /// Builds the space for `(dim, order)` together with its chain of lower orders.
    pub fn new(dim: usize, order: usize) -> Result<Arc<JetSpace>, JetError> {
        if dim > MAX_DIM {
            return Err(JetError::TooManyVariables(dim));
        }
        let mut space: Option<Arc<JetSpace>> = None;
        for k in 0..=order {
            space = Some(Arc::new(Self::build(dim, k, space.take())));
        }
        Ok(space.expect("order range is non-empty"))
    }

    fn build(dim: usize, order: usize, lower: Option<Arc<JetSpace>>) -> JetSpace {
        let monos = graded_monomials(dim, order);
        let degrees: Vec<usize> = monos.iter().map(degree).collect();
        let lookup: HashMap<MultiIndex, usize> =
            monos.iter().enumerate().map(|(i, m)| (*m, i)).collect();

        let mut mul_table = Vec::new();
        for (a, ma) in monos.iter().enumerate() {
            for (b, mb) in monos.iter().enumerate() {
                if degrees[a] + degrees[b] > order {
                    continue;
                }
                let mut m = [0u8; MAX_DIM];
                for v in 0..dim {
                    m[v] = ma[v] + mb[v];
                }
                mul_table.push((a as u32, b as u32, lookup[&m] as u32));
            }
        }

        let mut deriv_maps = vec![Vec::new(); dim];
        if let Some(lo) = &lower {
            for (v, map) in deriv_maps.iter_mut().enumerate() {
                for (t, m) in lo.monos.iter().enumerate() {
                    let mut up = *m;
                    up[v] += 1;
                    map.push((t as u32, lookup[&up] as u32, up[v] as f64));
                }
            }
        }

        JetSpace { dim, order, monos, lookup, mul_table, deriv_maps, lower }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monos
    }

    /// The space of the given (lower or equal) order in this chain.
    pub fn at_order(self: &Arc<Self>, order: usize) -> Arc<JetSpace> {
        let mut s = self.clone();
        while s.order > order {
            s = s.lower.clone().expect("lower chain reaches order 0");
        }
        s
    }

    fn index_of(&self, alpha: &[usize]) -> Result<usize, JetError> {
        if alpha.len() != self.dim {
            return Err(JetError::Dimension { got: alpha.len(), dim: self.dim });
        }
        let deg: usize = alpha.iter().sum();
        if deg > self.order {
            return Err(JetError::Order { degree: deg, order: self.order });
        }
        let mut m = [0u8; MAX_DIM];
        for (slot, &a) in m.iter_mut().zip(alpha) {
            *slot = a as u8;
        }
        Ok(self.lookup[&m])
    }
}

/// Truncated Taylor expansion of a scalar at a point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(order={}, value={:e})", self.space.order, self.value())
    }
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, value: f64) -> Jet {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        Jet { space: space.clone(), coeffs }
    }

    pub fn zero(space: &Arc<JetSpace>) -> Jet {
        Jet::constant(space, 0.0)
    }

    /// The coordinate function `x_var` expanded at `x_var = value`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, value: f64) -> Jet {
        let mut j = Jet::constant(space, value);
        if space.order >= 1 {
            let mut e = vec![0usize; space.dim];
            e[var] = 1;
            let idx = space.index_of(&e).expect("unit multi-index is in range");
            j.coeffs[idx] = 1.0;
        }
        j
    }

    /// Seeds one jet per coordinate of `point`.
    pub fn seed(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        let space = JetSpace::new(point.len(), order)?;
        Ok(point
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet::variable(&space, i, x))
            .collect())
    }

    pub fn from_coeffs(space: &Arc<JetSpace>, coeffs: Vec<f64>) -> Jet {
        assert_eq!(coeffs.len(), space.len(), "coefficient count must match the space");
        Jet { space: space.clone(), coeffs }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor-normalized coefficient `∂^α f / α!`.
    pub fn coeff(&self, alpha: &[usize]) -> Result<f64, JetError> {
        Ok(self.coeffs[self.space.index_of(alpha)?])
    }

    /// Un-normalized partial derivative `∂^α f`.
    pub fn partial(&self, alpha: &[usize]) -> Result<f64, JetError> {
        let c = self.coeff(alpha)?;
        let fact: f64 = alpha.iter().map(|&a| factorial(a)).product();
        Ok(c * fact)
    }

    /// First partial `∂f/∂x_var` as a value.
    pub fn grad(&self, var: usize) -> f64 {
        if self.order() == 0 {
            return f64::NAN;
        }
        let mut e = vec![0usize; self.dim()];
        e[var] = 1;
        self.coeffs[self.space.index_of(&e).expect("order ≥ 1")]
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let space = self.space.at_order(order);
        let coeffs = self.coeffs[..space.len()].to_vec();
        Jet { space, coeffs }
    }

    /// Exact derivative along variable `var`; the result has one order less.
    ///
    /// Panics on an order-0 jet, which carries no derivative information.
    pub fn d(&self, var: usize) -> Jet {
        let lower = self
            .space
            .lower
            .clone()
            .expect("cannot differentiate an order-0 jet");
        let mut coeffs = vec![0.0; lower.len()];
        for &(t, s, fac) in &self.space.deriv_maps[var] {
            coeffs[t as usize] = fac * self.coeffs[s as usize];
        }
        Jet { space: lower, coeffs }
    }

    fn aligned<'a>(&'a self, other: &'a Jet) -> (Arc<JetSpace>, &'a [f64], &'a [f64]) {
        assert_eq!(self.dim(), other.dim(), "jets over different variable sets");
        let space = if self.order() <= other.order() {
            self.space.clone()
        } else {
            other.space.clone()
        };
        let n = space.len();
        (space, &self.coeffs[..n], &other.coeffs[..n])
    }

    fn mul_ref(&self, other: &Jet) -> Jet {
        let (space, a, b) = self.aligned(other);
        let mut out = vec![0.0; space.len()];
        for &(i, j, k) in &space.mul_table {
            out[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet { space, coeffs: out }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { space: self.space.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += s;
        j
    }

    /// `f(self)` given the Taylor coefficients `f^{(k)}(a₀)/k!` of `f` at the value `a₀`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let k = self.order();
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = Jet::constant(&self.space, taylor[0]);
        let mut power = Jet::constant(&self.space, 1.0);
        for t in taylor.iter().take(k + 1).skip(1) {
            power = power.mul_ref(&delta);
            if *t != 0.0 {
                for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                    *o += t * p;
                }
            }
        }
        out
    }

    fn taylor_len(&self) -> usize {
        self.order() + 1
    }

    pub fn exp(&self) -> Jet {
        let a = self.value().exp();
        let t: Vec<f64> = (0..self.taylor_len()).map(|j| a / factorial(j)).collect();
        self.compose(&t)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let t: Vec<f64> = (0..self.taylor_len()).map(|j| cycle[j % 4] / factorial(j)).collect();
        self.compose(&t)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let t: Vec<f64> = (0..self.taylor_len()).map(|j| cycle[j % 4] / factorial(j)).collect();
        self.compose(&t)
    }

    /// Natural logarithm; NaN coefficients for non-positive values.
    pub fn ln(&self) -> Jet {
        let a = self.value();
        let t: Vec<f64> = (0..self.taylor_len())
            .map(|j| {
                if j == 0 {
                    a.ln()
                } else {
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    sign / (j as f64 * a.powi(j as i32))
                }
            })
            .collect();
        self.compose(&t)
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let t: Vec<f64> = (0..self.taylor_len())
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign / a.powi(j as i32 + 1)
            })
            .collect();
        self.compose(&t)
    }

    /// Real power `self^p` through the generalized binomial series.
    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut binom = 1.0;
        let t: Vec<f64> = (0..self.taylor_len())
            .map(|j| {
                if j > 0 {
                    binom *= (p - (j as f64 - 1.0)) / j as f64;
                }
                binom * a.powf(p - j as f64)
            })
            .collect();
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    /// Integer power by repeated squaring; exact for negative bases.
    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut result = Jet::constant(&self.space, 1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        result
    }

    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        let (_, a, b) = self.aligned(other);
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let (space, a, b) = self.aligned(rhs);
        Jet { coeffs: a.iter().zip(b).map(|(x, y)| x + y).collect(), space }
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let (space, a, b) = self.aligned(rhs);
        Jet { coeffs: a.iter().zip(b).map(|(x, y)| x - y).collect(), space }
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_ref(rhs)
    }
}

impl Div<&Jet> for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self.mul_ref(&rhs.recip())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
        impl $tr<f64> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet {
                let c = Jet::constant(&self.space, rhs);
                self.$m(&c)
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a>(items: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut it = items.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, j| &acc + j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_graded_prefix() {
        let hi = JetSpace::new(3, 4).unwrap();
        let lo = JetSpace::new(3, 2).unwrap();
        assert_eq!(&hi.monomials()[..lo.len()], lo.monomials());
        assert_eq!(hi.len(), 35);
    }

    #[test]
    fn square_at_two() {
        let x = Jet::seed(&[2.0], 2).unwrap().remove(0);
        let f = &x * &x;
        assert_eq!(f.value(), 4.0);
        assert_eq!(f.partial(&[1]).unwrap(), 4.0);
        assert_eq!(f.coeff(&[2]).unwrap(), 1.0);
        assert_eq!(f.partial(&[2]).unwrap(), 2.0);
    }

    #[test]
    fn constant_has_no_derivatives() {
        let s = JetSpace::new(2, 3).unwrap();
        let c = Jet::constant(&s, 7.5);
        assert!(c.coeffs()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cube_third_partial() {
        let x = Jet::seed(&[1.0], 3).unwrap().remove(0);
        assert_eq!(x.powi(3).partial(&[3]).unwrap(), 6.0);
    }

    #[test]
    fn bilinear_mixed_partial() {
        let v = Jet::seed(&[2.0, 5.0], 2).unwrap();
        let f = &v[0] * &v[1];
        assert_eq!(f.partial(&[1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn exp_second_derivative() {
        let t = Jet::seed(&[0.4], 3).unwrap().remove(0);
        let f = (&t * 2.0).exp();
        let want = 4.0 * 0.8f64.exp();
        assert!((f.partial(&[2]).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn overflowing_multi_index_is_an_order_error() {
        let x = Jet::seed(&[1.0], 2).unwrap().remove(0);
        assert_eq!(x.partial(&[3]), Err(JetError::Order { degree: 3, order: 2 }));
    }

    #[test]
    fn derivative_drops_one_order() {
        let v = Jet::seed(&[0.3, -1.2], 4).unwrap();
        let f = (&v[0] * &v[1]).sin();
        let fx = f.d(0);
        assert_eq!(fx.order(), 3);
        assert!((fx.value() - f.partial(&[1, 0]).unwrap()).abs() < 1e-15);
        assert!((fx.partial(&[1, 2]).unwrap() - f.partial(&[2, 2]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mixed_order_arithmetic_truncates() {
        let a = Jet::seed(&[1.0, 2.0], 3).unwrap();
        let b = a[0].d(0);
        let s = &a[1] + &b;
        assert_eq!(s.order(), 2);
        assert_eq!(s.value(), 3.0);
    }

    #[test]
    fn negative_base_integer_power() {
        let x = Jet::seed(&[-2.0], 2).unwrap().remove(0);
        let f = x.powi(-2);
        assert!((f.value() - 0.25).abs() < 1e-15);
        assert!((f.partial(&[1]).unwrap() - 0.25).abs() < 1e-15);
    }
}
