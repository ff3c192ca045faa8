//! The n-point boundary KZ system on W ⊗ V^{⊗n}, its restriction to the rays
//! z_i = z·ξ_i, and the canonical solutions attached to the chambers D_k.

mod canonical;
mod pullback;

pub use canonical::{canonical_fk, condition, fk_xi_residual, fk_z_residual, prefactor, twist, FkSettings};
pub use pullback::{pullback_exponent_check, pullback_system, y_xi, YForm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{c, commutator, diag, max_abs, CMat, C64};
use crate::model::Model;
use crate::reps::{Tensor, TensorSpace};

/// Invariant tensors of W ⊗ V^{⊗n}, realized once. Pair tables are indexed
/// by (i, j) with i < j; index 0 is W.
#[derive(Debug, Clone)]
pub struct Pieces {
    pub n: usize,
    pub space: TensorSpace,
    /// ρ_i(u) for i = 1..n (entry 0 unused).
    pub u_ops: Vec<CMat>,
    pub omega: Vec<Vec<CMat>>,
    pub omega_k: Vec<Vec<CMat>>,
    pub bracket: Vec<Vec<CMat>>,
    pub c_k: Vec<CMat>,
    pub c_0: Vec<CMat>,
}

impl Pieces {
    fn new(space: TensorSpace, n: usize, u: &CMat) -> Result<Pieces> {
        let zero = CMat::zeros(space.dim, space.dim);
        let mut omega = vec![vec![zero.clone(); n + 1]; n + 1];
        let mut omega_k = omega.clone();
        let mut bracket = omega.clone();
        let mut u_ops = vec![zero.clone(); n + 1];
        let mut c_k = u_ops.clone();
        let mut c_0 = u_ops.clone();
        for i in 0..=n {
            for j in i + 1..=n {
                omega_k[i][j] = space.realize(&Tensor::OmegaK, &[i, j])?;
                if i > 0 {
                    omega[i][j] = space.realize(&Tensor::Omega, &[i, j])?;
                    bracket[i][j] = space.realize(&Tensor::BracketOmega, &[i, j])?;
                }
            }
            if i > 0 {
                u_ops[i] = space.v_op(i, u)?;
                c_k[i] = space.realize(&Tensor::CK, &[i])?;
                c_0[i] = space.realize(&Tensor::C0, &[i])?;
            }
        }
        Ok(Pieces { n, space, u_ops, omega, omega_k, bracket, c_k, c_0 })
    }

    /// (id ⊗ τ)Ω^{ij} = 2Ω_k^{ij} − Ω^{ij}.
    pub fn omega_tau(&self, i: usize, j: usize) -> CMat {
        let (a, b) = (i.min(j), i.max(j));
        &self.omega_k[a][b] * c(2.0, 0.0) - &self.omega[a][b]
    }

    pub fn pair<'a>(&self, table: &'a [Vec<CMat>], i: usize, j: usize) -> &'a CMat {
        &table[i.min(j)][i.max(j)]
    }
}

/// κ ∂F/∂z_i = (u^{(i)} + (2Ω_k^{0i} + C_k^{(i)})/z_i + Σ_{j≠i} Ω^{ij}/(z_i − z_j)
/// + Σ_{j≠i} (2Ω_k^{ij} − Ω^{ij})/(z_i + z_j))·F.
#[derive(Debug, Clone)]
pub struct PfaffianSystem {
    pub n: usize,
    pub kappa: C64,
    pub u: CMat,
    pub model: Model,
    pub pieces: Pieces,
}

/// Minimum distance to the divisors z_i = 0, z_i = ±z_j.
pub fn divisor_distance(z: &[C64]) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..z.len() {
        d = d.min(z[i].norm());
        for j in i + 1..z.len() {
            d = d.min((z[i] - z[j]).norm()).min((z[i] + z[j]).norm());
        }
    }
    d
}

impl PfaffianSystem {
    pub fn new(model: &Model, n: usize) -> Result<Self> {
        model.validate()?;
        let u = diag(&model.u.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
        Self::with_u_matrix(model, n, u)
    }

    /// Any n×n matrix in place of diag(u). Flatness needs τ(u) = −u, so a
    /// non-symmetric u produces an O(1) flatness residual.
    pub fn with_u_matrix(model: &Model, n: usize, u: CMat) -> Result<Self> {
        crate::model::check_kappa(model.kappa)?;
        if n == 0 {
            return Err(Error::Dimension("the system needs at least one point".into()));
        }
        if u.shape() != (model.n(), model.n()) {
            return Err(Error::Dimension("u does not match gl_n".into()));
        }
        let space = model.space(n)?;
        let pieces = Pieces::new(space, n, &u)?;
        Ok(PfaffianSystem { n, kappa: model.kappa, u, model: model.clone(), pieces })
    }

    pub fn dim(&self) -> usize {
        self.pieces.space.dim
    }

    /// Fails with a divisor error when z is within `clearance` of a pole.
    pub fn check_point(&self, z: &[C64], clearance: f64) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::Dimension(format!("point with {} coordinates for n = {}", z.len(), self.n)));
        }
        let d = divisor_distance(z);
        if d < clearance {
            return Err(Error::Divisor(format!("distance {d:e} to z_i = 0 or z_i = ±z_j")));
        }
        Ok(())
    }

    /// A_i(z) including the 1/κ; `i` is 1-based.
    pub fn coefficient(&self, i: usize, z: &[C64]) -> Result<CMat> {
        self.check_point(z, 1e-12)?;
        if i == 0 || i > self.n {
            return Err(Error::Slot { slot: i, len: self.n + 1 });
        }
        let p = &self.pieces;
        let zi = z[i - 1];
        let mut a = &p.u_ops[i] + (&p.omega_k[0][i] * c(2.0, 0.0) + &p.c_k[i]) / zi;
        for j in 1..=self.n {
            if j == i {
                continue;
            }
            let zj = z[j - 1];
            a += p.pair(&p.omega, i, j) / (zi - zj) + p.omega_tau(i, j) / (zi + zj);
        }
        Ok(a / self.kappa)
    }

    pub fn coefficients(&self, z: &[C64]) -> Result<Vec<CMat>> {
        (1..=self.n).map(|i| self.coefficient(i, z)).collect()
    }

    /// ∂A_i/∂z_j for j ≠ i, differentiated exactly.
    pub fn coefficient_derivative(&self, i: usize, j: usize, z: &[C64]) -> Result<CMat> {
        self.check_point(z, 1e-12)?;
        if i == j || i == 0 || j == 0 || i > self.n || j > self.n {
            return Err(Error::SlotKind(format!("mixed derivative of A_{i} along z_{j}")));
        }
        let p = &self.pieces;
        let (zi, zj) = (z[i - 1], z[j - 1]);
        let d1 = (zi - zj) * (zi - zj);
        let d2 = (zi + zj) * (zi + zj);
        Ok((p.pair(&p.omega, i, j) / d1 - p.omega_tau(i, j) / d2) / self.kappa)
    }

    /// max over i < j of ‖∂_jA_i − ∂_iA_j + [A_i, A_j]‖ over the size of its terms.
    pub fn flatness_residual(&self, z: &[C64]) -> Result<f64> {
        let a = self.coefficients(z)?;
        let mut worst = 0.0f64;
        for i in 1..=self.n {
            for j in i + 1..=self.n {
                let dji = self.coefficient_derivative(i, j, z)?;
                let dij = self.coefficient_derivative(j, i, z)?;
                let ab = &a[i - 1] * &a[j - 1];
                let ba = &a[j - 1] * &a[i - 1];
                let scale = max_abs(&dji).max(max_abs(&dij)).max(max_abs(&ab)).max(max_abs(&ba));
                let r = max_abs(&(&dji - &dij + ab - ba));
                worst = worst.max(if scale == 0.0 { 0.0 } else { r / scale });
            }
        }
        Ok(worst)
    }

    /// Residual of T^{(1)}A_i(z)T^{(1)−1} = ±A_i(z') with z' = (−z₁, z₂, …),
    /// the sign being − for i = 1.
    pub fn equivariance_residual(&self, z: &[C64]) -> Result<f64> {
        let t = self.pieces.space.tau_on(1)?;
        let t_inv = crate::mat::inverse(&t, "T_tau")?;
        let mut zr = z.to_vec();
        zr[0] = -zr[0];
        let mut worst = 0.0f64;
        for i in 1..=self.n {
            let lhs = &t * self.coefficient(i, z)? * &t_inv;
            let rhs = self.coefficient(i, &zr)? * c(if i == 1 { -1.0 } else { 1.0 }, 0.0);
            worst = worst.max(crate::mat::rel_diff(&lhs, &rhs));
        }
        Ok(worst)
    }

    /// Commutator norm of A_i with itself at two points, exposed for path planning:
    /// the pole set as (kind, i, j) with kind 0: z_i = 0, 1: z_i = z_j, 2: z_i = −z_j.
    pub fn poles(&self) -> Vec<(u8, usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.n {
            out.push((0, i, i));
            for j in i + 1..=self.n {
                out.push((1, i, j));
                out.push((2, i, j));
            }
        }
        out
    }

    /// ‖[A_i(z), A_i(w)]‖, zero when one coefficient is scalar.
    pub fn self_commutator(&self, i: usize, z: &[C64], w: &[C64]) -> Result<f64> {
        Ok(max_abs(&commutator(&self.coefficient(i, z)?, &self.coefficient(i, w)?)))
    }
}

/// The chamber D_k of ℝ^n, k ∈ {−1, 0, 1, …, n−1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainLabel(pub i32);

impl DomainLabel {
    /// The coordinates in the order in which they must increase.
    fn order(self, n: usize) -> Result<Vec<usize>> {
        let k = self.0;
        if k < -1 || k > n as i32 - 1 {
            return Err(Error::Domain(k));
        }
        let mut ord: Vec<usize> = (0..n).collect();
        if k >= 1 {
            ord.swap(k as usize - 1, k as usize);
        }
        Ok(ord)
    }

    pub fn contains(self, xi: &[f64]) -> bool {
        let Ok(ord) = self.order(xi.len()) else {
            return false;
        };
        if xi.is_empty() {
            return false;
        }
        let positive_from = if self.0 == -1 {
            if xi[0] >= 0.0 {
                return false;
            }
            1
        } else {
            0
        };
        let chain: Vec<f64> = ord[positive_from..].iter().map(|&i| xi[i]).collect();
        chain.first().is_none_or(|&x| x > 0.0) && chain.windows(2).all(|w| w[0] < w[1])
    }

    /// Fails unless ξ lies inside D_k and off every wall ξ_i = −ξ_j.
    pub fn check(self, xi: &[f64]) -> Result<()> {
        if !self.contains(xi) {
            return Err(Error::Domain(self.0));
        }
        let c: Vec<C64> = xi.iter().map(|&x| C64::new(x, 0.0)).collect();
        if divisor_distance(&c) < 1e-12 * xi.iter().fold(1.0f64, |m, x| m.max(x.abs())) {
            return Err(Error::Divisor("xi lies on a wall".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::rel_diff;

    fn model(w: Option<&str>, v: &str, u: Vec<f64>) -> Model {
        Model::new(w.map(|s| s.parse().unwrap()), v.parse().unwrap(), u, c(0.0, 1.0)).unwrap()
    }

    #[test]
    fn one_point_is_the_boundary_system() {
        let m = model(Some("defining(2)"), "adjoint(2)", vec![1.0, -1.0]);
        let sys = PfaffianSystem::new(&m, 1).unwrap();
        let (rank_one, _) = crate::stokes::stokes_system(crate::stokes::Target::K, &m).unwrap();
        let z = c(0.7, 0.2);
        assert!(rel_diff(&sys.coefficient(1, &[z]).unwrap(), &rank_one.coeff(z)) < 1e-15);
    }

    #[test]
    fn hand_assembled_two_point_coefficient() {
        let m = model(None, "adjoint(2)", vec![1.0, -1.0]);
        let sys = PfaffianSystem::new(&m, 2).unwrap();
        let sp = m.space(2).unwrap();
        let z = [c(1.0, 0.0), c(2.0, 0.0)];
        let om = sp.realize(&Tensor::Omega, &[1, 2]).unwrap();
        let omk = sp.realize(&Tensor::OmegaK, &[1, 2]).unwrap();
        let want = (sp.u_on(1, &m.u).unwrap()
            + sp.realize(&Tensor::CK, &[1]).unwrap()
            + &om / c(-1.0, 0.0)
            + (omk * c(2.0, 0.0) - &om) / c(3.0, 0.0))
            / m.kappa;
        assert!(rel_diff(&sys.coefficient(1, &z).unwrap(), &want) < 1e-15);
    }

    #[test]
    fn zero_u_is_homogeneous() {
        let m = model(None, "defining(2)", vec![1.0, -1.0]);
        let sys = PfaffianSystem::with_u_matrix(&m, 2, CMat::zeros(2, 2)).unwrap();
        let z = [c(0.4, 0.1), c(1.3, -0.2)];
        let zt: Vec<C64> = z.iter().map(|&x| x * 3.0).collect();
        let a = sys.coefficient(2, &z).unwrap();
        assert!(rel_diff(&(sys.coefficient(2, &zt).unwrap() * c(3.0, 0.0)), &a) < 1e-14);
    }

    #[test]
    fn flatness_and_its_failure() {
        let m = model(Some("defining(2)"), "adjoint(2)", vec![1.0, -1.0]);
        let sys = PfaffianSystem::new(&m, 2).unwrap();
        let z = [c(0.3, 0.4), c(-1.1, 0.25)];
        assert!(sys.flatness_residual(&z).unwrap() < 1e-12);
        assert!(sys.equivariance_residual(&z).unwrap() < 1e-13);
        let skew = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let bad = PfaffianSystem::with_u_matrix(&m, 2, skew).unwrap();
        assert!(bad.flatness_residual(&z).unwrap() > 1e-3);
    }

    #[test]
    fn poles_are_rejected() {
        let m = model(None, "defining(2)", vec![1.0, -1.0]);
        let sys = PfaffianSystem::new(&m, 2).unwrap();
        assert!(matches!(sys.coefficient(1, &[c(1.0, 0.0), c(-1.0, 0.0)]), Err(Error::Divisor(_))));
        assert!(matches!(sys.coefficient(1, &[c(0.0, 0.0), c(1.0, 0.0)]), Err(Error::Divisor(_))));
        assert_eq!(sys.poles().len(), 2 + 2);
    }

    #[test]
    fn domains() {
        assert!(DomainLabel(0).contains(&[0.5, 1.0, 2.0]));
        assert!(!DomainLabel(0).contains(&[1.0, 0.5, 2.0]));
        assert!(DomainLabel(1).contains(&[1.0, 0.5, 2.0]));
        assert!(DomainLabel(2).contains(&[0.5, 2.0, 1.0]));
        assert!(DomainLabel(-1).contains(&[-3.0, 1.0, 2.0]));
        assert!(!DomainLabel(-1).contains(&[3.0, 1.0, 2.0]));
        assert!(!DomainLabel(3).contains(&[0.5, 1.0, 2.0]));
        assert_eq!(DomainLabel(-1).check(&[-1.0, 1.0]), Err(Error::Divisor("xi lies on a wall".into())));
        assert_eq!(DomainLabel(0).check(&[2.0, 1.0]), Err(Error::Domain(0)));
    }
}
