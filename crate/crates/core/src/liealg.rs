//! gl_n with the involution τ(x) = −xᵀ, its k ⊕ p splitting, roots and the
//! trace form. Indices are 0-based throughout the crate.

use crate::error::{Error, Result};
use crate::mat::{c, CMat, C64};

pub fn elementary(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = c(1.0, 0.0);
    m
}

pub fn tau_map(x: &CMat) -> Result<CMat> {
    if !x.is_square() {
        return Err(Error::Dimension(format!("tau_map on {}x{}", x.nrows(), x.ncols())));
    }
    Ok(-x.transpose())
}

/// `(k_part, p_part)` with k_part fixed by τ and p_part negated.
pub fn split_kp(x: &CMat) -> Result<(CMat, CMat)> {
    if !x.is_square() {
        return Err(Error::Dimension(format!("split_kp on {}x{}", x.nrows(), x.ncols())));
    }
    let t = x.transpose();
    Ok(((x - &t) * c(0.5, 0.0), (x + &t) * c(0.5, 0.0)))
}

/// The trace form ⟨x, y⟩ = tr(xy).
pub fn form(x: &CMat, y: &CMat) -> C64 {
    (x * y).trace()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LieBasis {
    pub n: usize,
}

impl LieBasis {
    pub fn new(n: usize) -> Self {
        LieBasis { n }
    }

    pub fn elementary(&self, i: usize, j: usize) -> CMat {
        elementary(self.n, i, j)
    }

    /// Pairs `(p, q)`, p < q, in the order used for the k-basis.
    pub fn k_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).collect()
    }

    /// a_pq = (E_pq − E_qp)/(i√2), orthonormal for the trace form.
    pub fn k_basis(&self) -> Vec<CMat> {
        let s = c(0.0, 2f64.sqrt()).inv();
        self.k_pairs()
            .into_iter()
            .map(|(p, q)| (self.elementary(p, q) - self.elementary(q, p)) * s)
            .collect()
    }

    /// E_ii followed by (E_ij + E_ji)/√2 for i < j.
    pub fn p_basis(&self) -> Vec<CMat> {
        let mut out: Vec<CMat> = (0..self.n).map(|i| self.elementary(i, i)).collect();
        let s = c(1.0 / 2f64.sqrt(), 0.0);
        for (p, q) in self.k_pairs() {
            out.push((self.elementary(p, q) + self.elementary(q, p)) * s);
        }
        out
    }
}

/// The root α = (i, j) with e_α = E_ij.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Root {
    pub i: usize,
    pub j: usize,
}

impl Root {
    pub fn neg(self) -> Root {
        Root { i: self.j, j: self.i }
    }

    /// α(u) = u_i − u_j.
    pub fn eval(self, u: &[f64]) -> f64 {
        u[self.i] - u[self.j]
    }

    pub fn eval_c(self, u: &[C64]) -> C64 {
        u[self.i] - u[self.j]
    }

    pub fn e_pos(self, n: usize) -> CMat {
        elementary(n, self.i, self.j)
    }

    pub fn e_neg(self, n: usize) -> CMat {
        elementary(n, self.j, self.i)
    }

    /// e_α + τ(e_α) = E_ij − E_ji.
    pub fn k_part(self, n: usize) -> CMat {
        elementary(n, self.i, self.j) - elementary(n, self.j, self.i)
    }

    /// Position of the k-basis element spanned by e_α + τ(e_α), and the scalar
    /// `s` with e_α + τ(e_α) = s·a.
    pub fn k_index(self, n: usize) -> (usize, C64) {
        let (p, q, sign) = if self.i < self.j { (self.i, self.j, 1.0) } else { (self.j, self.i, -1.0) };
        let idx = LieBasis::new(n).k_pairs().iter().position(|&pq| pq == (p, q)).unwrap();
        (idx, c(0.0, sign * 2f64.sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootDatum {
    pub n: usize,
    pub roots: Vec<Root>,
}

pub fn root_data(n: usize) -> RootDatum {
    let roots = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| Root { i, j }))
        .collect();
    RootDatum { n, roots }
}
