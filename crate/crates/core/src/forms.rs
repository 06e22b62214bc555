//! Differential forms written in an orthonormal moving frame.

use std::sync::Arc;

use crate::jets::{Jet, JetSpace};

/// A `p`-form stored densely by its values on frame-leg tuples.
///
/// Components are jets of the chart point, so forms can be differentiated.
#[derive(Clone, Debug)]
pub struct FrameForm {
    degree: usize,
    n: usize,
    comps: Vec<Jet>,
}

fn flat_index(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// All strictly increasing `p`-tuples from `0..n`.
pub fn increasing_tuples(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, p: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, p, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, p, 0, &mut Vec::new(), &mut out);
    out
}

/// Permutations of `0..p` with their signs.
fn signed_permutations(p: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(items: &mut Vec<usize>, k: usize, sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if k == items.len() {
            out.push((items.clone(), sign));
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            rec(items, k + 1, if i == k { sign } else { -sign }, out);
            items.swap(k, i);
        }
    }
    let mut out = Vec::new();
    rec(&mut (0..p).collect(), 0, 1.0, &mut out);
    out
}

impl FrameForm {
    pub fn zero(space: &Arc<JetSpace>, n: usize, degree: usize) -> FrameForm {
        let len = n.pow(degree as u32);
        FrameForm { degree, n, comps: vec![Jet::zero(space); len] }
    }

    /// Builds an alternating form from its values on increasing tuples.
    pub fn from_increasing(
        space: &Arc<JetSpace>,
        n: usize,
        degree: usize,
        mut f: impl FnMut(&[usize]) -> Jet,
    ) -> FrameForm {
        let mut form = FrameForm::zero(space, n, degree);
        let perms = signed_permutations(degree);
        for tuple in increasing_tuples(n, degree) {
            let v = f(&tuple);
            for (perm, sign) in &perms {
                let idx: Vec<usize> = perm.iter().map(|&k| tuple[k]).collect();
                form.comps[flat_index(n, &idx)] = if *sign > 0.0 { v.clone() } else { -&v };
            }
        }
        form
    }

    /// A 1-form from its values on the legs.
    pub fn one_form(comps: Vec<Jet>) -> FrameForm {
        FrameForm { degree: 1, n: comps.len(), comps }
    }

    pub fn scalar(value: Jet, n: usize) -> FrameForm {
        FrameForm { degree: 0, n, comps: vec![value] }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn frame_dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        debug_assert_eq!(idx.len(), self.degree);
        &self.comps[flat_index(self.n, idx)]
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.get(idx).value()
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> FrameForm {
        FrameForm { degree: self.degree, n: self.n, comps: self.comps.iter().map(f).collect() }
    }

    pub fn zip(&self, other: &FrameForm, f: impl Fn(&Jet, &Jet) -> Jet) -> FrameForm {
        assert_eq!((self.degree, self.n), (other.degree, other.n), "form shapes differ");
        FrameForm {
            degree: self.degree,
            n: self.n,
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &FrameForm) -> FrameForm {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &FrameForm) -> FrameForm {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> FrameForm {
        self.map(|a| a.scale(s))
    }

    pub fn mul_scalar(&self, f: &Jet) -> FrameForm {
        self.map(|a| a * f)
    }

    /// Exterior product `α∧β` (determinant convention: `(α∧β)(X,Y) = α(X)β(Y) − α(Y)β(X)`).
    pub fn wedge(&self, other: &FrameForm) -> FrameForm {
        let (p, q) = (self.degree, other.degree);
        let n = self.n;
        let space = self.comps[0].space().clone();
        let perms = signed_permutations(p + q);
        let norm: f64 = (1..=p).product::<usize>() as f64 * (1..=q).product::<usize>() as f64;
        FrameForm::from_increasing(&space, n, p + q, |tuple| {
            let mut acc = Jet::zero(&space);
            for (perm, sign) in &perms {
                let idx: Vec<usize> = perm.iter().map(|&k| tuple[k]).collect();
                let term = self.get(&idx[..p]) * other.get(&idx[p..]);
                acc = if *sign > 0.0 { &acc + &term } else { &acc - &term };
            }
            acc.scale(1.0 / norm)
        })
    }

    /// Largest component by absolute value.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| c.value().abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &FrameForm) -> f64 {
        assert_eq!(self.comps.len(), other.comps.len(), "form shapes differ");
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| (a.value() - b.value()).abs())
            .fold(0.0, f64::max)
    }

    /// Component values (flattened, row-major over leg indices).
    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(0)
    }

    /// Residual of exact antisymmetry under every transposition.
    pub fn antisymmetry_defect(&self) -> f64 {
        if self.degree < 2 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        let n = self.n;
        let total = self.comps.len();
        for flat in 0..total {
            let mut idx = vec![0; self.degree];
            let mut r = flat;
            for slot in idx.iter_mut().rev() {
                *slot = r % n;
                r /= n;
            }
            for a in 0..self.degree {
                for b in a + 1..self.degree {
                    let mut sw = idx.clone();
                    sw.swap(a, b);
                    let d = self.at(&idx) + self.at(&sw);
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> Arc<JetSpace> {
        JetSpace::new(1, 0).unwrap()
    }

    fn basis(n: usize, i: usize) -> FrameForm {
        let s = space();
        FrameForm::one_form((0..n).map(|k| Jet::constant(&s, if k == i { 1.0 } else { 0.0 })).collect())
    }

    #[test]
    fn wedge_of_basis_covectors() {
        let w = basis(3, 0).wedge(&basis(3, 1));
        assert_eq!(w.at(&[0, 1]), 1.0);
        assert_eq!(w.at(&[1, 0]), -1.0);
        assert_eq!(w.at(&[0, 2]), 0.0);
        let v = w.wedge(&basis(3, 2));
        assert_eq!(v.at(&[0, 1, 2]), 1.0);
        assert_eq!(v.at(&[2, 1, 0]), -1.0);
        assert_eq!(v.antisymmetry_defect(), 0.0);
    }

    #[test]
    fn one_form_wedge_itself_vanishes() {
        let s = space();
        let a = FrameForm::one_form(vec![Jet::constant(&s, 0.3), Jet::constant(&s, -2.0)]);
        assert_eq!(a.wedge(&a).max_abs(), 0.0);
    }

    #[test]
    fn tuple_counts() {
        assert_eq!(increasing_tuples(6, 3).len(), 20);
        assert_eq!(signed_permutations(3).iter().filter(|p| p.1 < 0.0).count(), 3);
    }
}
