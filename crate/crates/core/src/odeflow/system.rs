use crate::error::{Error, Result};
use crate::mat::{diag, eigenvalues, eye, max_abs, CMat, C64};

/// dF/dz = (U + A0/z)·F with U diagonal in the working basis.
#[derive(Debug, Clone)]
pub struct RankOneSystem {
    pub dim: usize,
    pub u: Vec<C64>,
    pub a0: CMat,
    /// Partition of the basis by equal U-eigenvalue.
    pub blocks: Vec<Vec<usize>>,
    pub block_of: Vec<usize>,
    pub warnings: Vec<String>,
}

fn cluster(values: &[C64], tol: f64) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of = vec![0; values.len()];
    for (k, &v) in values.iter().enumerate() {
        match blocks.iter().position(|b| (values[b[0]] - v).norm() <= tol) {
            Some(b) => {
                blocks[b].push(k);
                block_of[k] = b;
            }
            None => {
                block_of[k] = blocks.len();
                blocks.push(vec![k]);
            }
        }
    }
    (blocks, block_of)
}

fn block_tol(values: &[C64]) -> f64 {
    1e-10 * values.iter().fold(1.0f64, |m, v| m.max(v.norm()))
}

impl RankOneSystem {
    /// `u` must be diagonal; the basis is then already U's eigenbasis.
    pub fn new(u: &CMat, a0: CMat) -> Result<Self> {
        if !u.is_square() || u.shape() != a0.shape() {
            return Err(Error::Dimension("U and A0 must be square of equal size".into()));
        }
        let d: Vec<C64> = (0..u.nrows()).map(|i| u[(i, i)]).collect();
        let off = max_abs(&(u - diag(&d)));
        if off > 1e-12 * max_abs(u).max(1.0) {
            return Err(Error::NotDiagonalizable(off));
        }
        Self::from_diag(d, a0)
    }

    pub fn from_diag(u: Vec<C64>, a0: CMat) -> Result<Self> {
        let dim = u.len();
        if a0.shape() != (dim, dim) {
            return Err(Error::Dimension("A0 does not match U".into()));
        }
        let (blocks, block_of) = cluster(&u, block_tol(&u));
        let mut warnings = Vec::new();
        if u.iter().any(|z| z.re.abs() > 1e-12 * z.norm().max(1.0)) {
            warnings.push("U has eigenvalues off the imaginary axis".to_string());
        }
        let sys = RankOneSystem { dim, u, a0, blocks, block_of, warnings };
        sys.check_block_resonance()?;
        Ok(sys)
    }

    fn check_block_resonance(&self) -> Result<()> {
        for b in &self.blocks {
            let sub = CMat::from_fn(b.len(), b.len(), |i, j| self.a0[(b[i], b[j])]);
            check_nonresonant(&sub, "U-block of A0")?;
        }
        Ok(())
    }

    pub fn u_matrix(&self) -> CMat {
        diag(&self.u)
    }

    pub fn coeff(&self, z: C64) -> CMat {
        let mut m = &self.a0 / z;
        for (i, &v) in self.u.iter().enumerate() {
            m[(i, i)] += v;
        }
        m
    }

    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.block_of[a] == self.block_of[b]
    }

    /// [A0]: the U-block-diagonal part of A0.
    pub fn exponent(&self) -> CMat {
        CMat::from_fn(self.dim, self.dim, |a, b| if self.same_block(a, b) { self.a0[(a, b)] } else { C64::new(0.0, 0.0) })
    }

    /// diag(e^{zu_k}).
    pub fn exp_u(&self, z: C64) -> CMat {
        diag(&self.u.iter().map(|&v| (v * z).exp()).collect::<Vec<_>>())
    }
}

/// Fails if two eigenvalues of `a` differ by a nonzero integer.
pub fn check_nonresonant(a: &CMat, what: &str) -> Result<()> {
    let ev = eigenvalues(a)?;
    for (i, x) in ev.iter().enumerate() {
        for y in &ev[i + 1..] {
            let d = x - y;
            let k = d.re.round();
            if k != 0.0 && (d - C64::new(k, 0.0)).norm() < 1e-8 {
                return Err(Error::Resonance(format!("{what}: eigenvalues {x} and {y} differ by {k}")));
            }
        }
    }
    Ok(())
}

/// Component of `a` commuting with the diagonalizable `u`: Σ_l P_l a P_l over
/// the spectral projectors of `u`.
pub fn centralizer_project(a: &CMat, u: &CMat) -> Result<CMat> {
    if !u.is_square() || a.shape() != u.shape() {
        return Err(Error::Dimension("centralizer_project operands".into()));
    }
    let n = u.nrows();
    let d: Vec<C64> = (0..n).map(|i| u[(i, i)]).collect();
    if max_abs(&(u - diag(&d))) == 0.0 {
        let (_, block_of) = cluster(&d, block_tol(&d));
        return Ok(CMat::from_fn(n, n, |i, j| if block_of[i] == block_of[j] { a[(i, j)] } else { C64::new(0.0, 0.0) }));
    }
    let ev = eigenvalues(u)?;
    let scale = max_abs(u).max(1.0);
    let (blocks, _) = cluster(&ev, 1e-7 * scale);
    let centers: Vec<C64> = blocks.iter().map(|b| b.iter().map(|&k| ev[k]).sum::<C64>() / b.len() as f64).collect();
    let mut total = CMat::zeros(n, n);
    let mut out = CMat::zeros(n, n);
    let mut defect: f64 = 0.0;
    for (l, &lam) in centers.iter().enumerate() {
        let mut p = eye(n);
        for (m, &mu) in centers.iter().enumerate() {
            if m != l {
                p = p * (u - eye(n) * mu) / (lam - mu);
            }
        }
        defect = defect.max(max_abs(&((u - eye(n) * lam) * &p)) / scale);
        out += &p * a * &p;
        total += p;
    }
    defect = defect.max(max_abs(&(total - eye(n))));
    if defect > 1e-8 {
        return Err(Error::NotDiagonalizable(defect));
    }
    Ok(out)
}
