//! Dense complex matrix helpers shared by every module.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn diag(d: &[C64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_column_slice(d))
}

/// Largest entry modulus. All residuals in the crate use this norm.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    let scale = max_abs(a).max(max_abs(b));
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(a - b)) / scale
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn inverse(m: &CMat, what: &str) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{what}: inverse of a non-square matrix")));
    }
    m.clone().lu().try_inverse().ok_or_else(|| Error::Singular(what.to_string()))
}

/// Solves `m·x = b`.
pub fn solve(m: &CMat, b: &CMat, what: &str) -> Result<CMat> {
    m.clone().lu().solve(b).ok_or_else(|| Error::Singular(what.to_string()))
}

pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// `exp(t·m)` for a complex scalar `t`.
pub fn expm_scaled(m: &CMat, t: C64) -> CMat {
    (m * t).exp()
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let t = nalgebra::Schur::new(m.clone()).unpack().1;
    Ok((0..m.nrows()).map(|i| t[(i, i)]).collect())
}

pub fn det(m: &CMat) -> C64 {
    m.clone().lu().determinant()
}

/// Solves `a·x + x·b = rhs` by reducing both coefficients to triangular Schur form.
pub fn solve_sylvester(a: &CMat, b: &CMat, rhs: &CMat) -> Result<CMat> {
    let (n, m) = (a.nrows(), b.nrows());
    if !a.is_square() || !b.is_square() || rhs.shape() != (n, m) {
        return Err(Error::Dimension("sylvester operands".into()));
    }
    let (qa, ta) = nalgebra::Schur::new(a.clone()).unpack();
    let (qb, tb) = nalgebra::Schur::new(b.clone()).unpack();
    let f = qa.adjoint() * rhs * &qb;
    let mut y = CMat::zeros(n, m);
    let scale = max_abs(a).max(max_abs(b)).max(1.0);
    for k in 0..m {
        let mut col = f.column(k).into_owned();
        for l in 0..k {
            let t = tb[(l, k)];
            if t != C64::new(0.0, 0.0) {
                col -= y.column(l) * t;
            }
        }
        // back substitution with (ta + tb[k,k]) upper triangular
        let shift = tb[(k, k)];
        for i in (0..n).rev() {
            let mut s = col[i];
            for j in i + 1..n {
                s -= ta[(i, j)] * y[(j, k)];
            }
            let d = ta[(i, i)] + shift;
            if d.norm() < 1e-13 * scale {
                return Err(Error::Resonance(format!(
                    "sylvester operator singular (eigenvalue sum {d})"
                )));
            }
            y[(i, k)] = s / d;
        }
    }
    Ok(qa * y * qb.adjoint())
}

/// Coefficients `[1, c1, .., cn]` of `∏ (x − λ)`.
pub fn charpoly_from_roots(roots: &[C64]) -> Vec<C64> {
    let mut p = vec![C64::new(1.0, 0.0)];
    for &r in roots {
        let mut q = vec![C64::new(0.0, 0.0); p.len() + 1];
        for (k, &a) in p.iter().enumerate() {
            q[k] += a;
            q[k + 1] -= a * r;
        }
        p = q;
    }
    p
}

/// Coefficient-wise characteristic polynomial distance; each coefficient
/// difference is scaled by `max(|a_k|, |b_k|, 1)`.
pub fn charpoly_distance(a: &CMat, b: &CMat) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension("charpoly distance".into()));
    }
    let pa = charpoly_from_roots(&eigenvalues(a)?);
    let pb = charpoly_from_roots(&eigenvalues(b)?);
    Ok(pa
        .iter()
        .zip(&pb)
        .map(|(x, y)| (x - y).norm() / x.norm().max(y.norm()).max(1.0))
        .fold(0.0, f64::max))
}

/// Eigenvalue multiset distance: the bottleneck matching of the two spectra
/// with pair cost `|λ − μ| / max(|λ|, |μ|, 1)`.
pub fn eigen_match_distance(a: &CMat, b: &CMat) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension("eigenvalue distance".into()));
    }
    let ea = eigenvalues(a)?;
    let eb = eigenvalues(b)?;
    Ok(match_multisets(&ea, &eb))
}

pub fn match_multisets(ea: &[C64], eb: &[C64]) -> f64 {
    let n = ea.len();
    if n == 0 {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = ea
        .iter()
        .map(|&x| eb.iter().map(|&y| (x - y).norm() / x.norm().max(y.norm()).max(1.0)).collect())
        .collect();
    let mut levels: Vec<f64> = cost.iter().flatten().copied().collect();
    levels.sort_by(|a, b| a.total_cmp(b));
    levels.dedup();
    // smallest threshold admitting a perfect matching (bottleneck assignment)
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(&cost, levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    levels[lo]
}

fn perfect_matching(cost: &[Vec<f64>], cap: f64) -> bool {
    let n = cost.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, cost: &[Vec<f64>], cap: f64, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for j in 0..cost.len() {
            if cost[i][j] <= cap && !seen[j] {
                seen[j] = true;
                if owner[j].map_or(true, |k| augment(k, cost, cap, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    (0..n).all(|i| augment(i, cost, cap, &mut vec![false; n], &mut owner))
}

/// Block-diagonal sum of two matrices.
/// `op` acting on the ordered factors `slots` of a product with factor
/// dimensions `dims`, identity elsewhere.
pub fn place(op: &CMat, dims: &[usize], slots: &[usize]) -> Result<CMat> {
    if slots.iter().any(|&s| s >= dims.len()) {
        return Err(Error::Dimension(format!("slots {slots:?} for {} factors", dims.len())));
    }
    if (1..slots.len()).any(|i| slots[..i].contains(&slots[i])) {
        return Err(Error::Dimension(format!("repeated slot in {slots:?}")));
    }
    let sub: usize = slots.iter().map(|&s| dims[s]).product();
    if op.shape() != (sub, sub) {
        return Err(Error::Dimension(format!("operator of size {} on slots {slots:?}", op.nrows())));
    }
    let dim: usize = dims.iter().product();
    let k = dims.len();
    let mut strides = vec![1usize; k];
    for i in (0..k.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let mut sub_strides = vec![1usize; slots.len()];
    for i in (0..slots.len().saturating_sub(1)).rev() {
        sub_strides[i] = sub_strides[i + 1] * dims[slots[i + 1]];
    }
    let digit = |idx: usize, s: usize| (idx / strides[s]) % dims[s];
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let sub_col: usize = slots.iter().zip(&sub_strides).map(|(&s, st)| digit(col, s) * st).sum();
        let rest = col - slots.iter().map(|&s| digit(col, s) * strides[s]).sum::<usize>();
        for sub_row in 0..sub {
            let v = op[(sub_row, sub_col)];
            if v == c(0.0, 0.0) {
                continue;
            }
            let row = rest + slots.iter().zip(&sub_strides).map(|(&s, st)| ((sub_row / st) % dims[s]) * strides[s]).sum::<usize>();
            out[(row, col)] = v;
        }
    }
    Ok(out)
}

pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMat::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Row-major `[re, im]` pairs, the report encoding of complex matrices.
pub fn to_pairs(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("ragged matrix".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            C64::new(a, b)
        })
    }

    #[test]
    fn sylvester_solves() {
        let a = sample(6, 1);
        let b = sample(4, 2) + eye(4) * c(3.0, 0.0);
        let r = CMat::from_fn(6, 4, |i, j| c(i as f64, j as f64));
        let x = solve_sylvester(&a, &b, &r).unwrap();
        assert!(max_abs(&(&a * &x + &x * &b - &r)) < 1e-12);
    }

    #[test]
    fn charpoly_of_roots() {
        let p = charpoly_from_roots(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(p, vec![c(1.0, 0.0), c(-3.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn conjugation_invariant_distances() {
        let a = sample(5, 7);
        let q = sample(5, 8) + eye(5) * c(2.0, 0.0);
        let b = &q * &a * inverse(&q, "q").unwrap();
        assert!(charpoly_distance(&a, &b).unwrap() < 1e-12);
        assert!(eigen_match_distance(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn bottleneck_matching() {
        let ea = [c(0.0, 0.0), c(1.0, 0.0)];
        let eb = [c(0.9, 0.0), c(2.0, 0.0)];
        assert!((match_multisets(&ea, &eb) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn pairs_round_trip() {
        let a = sample(3, 3);
        assert_eq!(from_pairs(&to_pairs(&a)).unwrap(), a);
    }
}
