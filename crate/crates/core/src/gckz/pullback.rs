//! Restriction of the n-point system to the ray z_i = z·ξ_i, and the first
//! coefficient Y(ξ) of its formal solution.

use serde::{Deserialize, Serialize};

use super::{DomainLabel, PfaffianSystem};
use crate::error::{Error, Result};
use crate::liealg::root_data;
use crate::mat::{c, commutator, max_abs, rel_diff, CMat};
use crate::odeflow::{centralizer_project, RankOneSystem};
use crate::reps::Tensor;

/// κ dF/dz = (Σ ξ_i u^{(i)} + (2Σ_{0≤i<j} Ω_k^{ij} + Σ C_k^{(i)})/z)·F.
pub fn pullback_system(sys: &PfaffianSystem, k: DomainLabel, xi: &[f64]) -> Result<RankOneSystem> {
    if xi.len() != sys.n {
        return Err(Error::Dimension(format!("xi has {} entries for n = {}", xi.len(), sys.n)));
    }
    k.check(xi)?;
    let p = &sys.pieces;
    let mut u = CMat::zeros(sys.dim(), sys.dim());
    let mut a0 = CMat::zeros(sys.dim(), sys.dim());
    for i in 1..=sys.n {
        u += &p.u_ops[i] * c(xi[i - 1], 0.0);
        a0 += &p.c_k[i] + &p.omega_k[0][i] * c(2.0, 0.0);
        for j in i + 1..=sys.n {
            a0 += &p.omega_k[i][j] * c(2.0, 0.0);
        }
    }
    RankOneSystem::new(&(u / sys.kappa), a0 / sys.kappa)
}

/// Residuals of [A0] against ½Σ C₀^{(i)}/κ and against the full Σ C₀^{(i)}/κ.
pub fn pullback_exponent_check(sys: &PfaffianSystem, pulled: &RankOneSystem) -> Result<(f64, f64)> {
    let proj = centralizer_project(&pulled.a0, &pulled.u_matrix())?;
    let mut c0 = CMat::zeros(sys.dim(), sys.dim());
    for i in 1..=sys.n {
        c0 += &sys.pieces.c_0[i];
    }
    let c0 = c0 / sys.kappa;
    Ok((rel_diff(&proj, &(&c0 * c(0.5, 0.0))), rel_diff(&proj, &c0)))
}

/// Which assembly of Y(ξ) to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YForm {
    /// Pair terms (2Ω_{k,α} − Ω_α)/(ξ_i + ξ_j), point terms
    /// (−2Ω_{k,α}^{0i} + C_{k,α} − C_α)/ξ_i, against 2ΣΩ_k + Σ(C_k − C₀).
    Printed,
    /// Pair terms τ^{(j)}Ω_α/(ξ_i + ξ_j), point terms
    /// (−2Ω_{k,α}^{0i} − ½(C_{k,α} − C_α))/ξ_i, against 2ΣΩ_k + Σ(C_k − ½C₀).
    Corrected,
}

/// Y(ξ), built from raw u (no κ), with the relative residual of
/// [Y(ξ), Σ ξ_i u^{(i)}] = right side.
pub fn y_xi(sys: &PfaffianSystem, xi: &[f64], form: YForm) -> Result<(CMat, f64)> {
    if xi.len() != sys.n {
        return Err(Error::Dimension(format!("xi has {} entries for n = {}", xi.len(), sys.n)));
    }
    crate::model::check_regular(&sys.model.u)?;
    let sp = &sys.pieces.space;
    let p = &sys.pieces;
    let n = sys.n;
    let dim = sys.dim();
    let u = &sys.model.u;
    for i in 0..n {
        if xi[i] == 0.0 || (i + 1..n).any(|j| xi[i] == xi[j] || xi[i] == -xi[j]) {
            return Err(Error::Divisor("xi lies on a wall".into()));
        }
    }
    let mut y = CMat::zeros(dim, dim);
    for al in root_data(sys.model.n()).roots {
        let au = u[al.i] - u[al.j];
        let mut inner = CMat::zeros(dim, dim);
        for i in 1..=n {
            for j in i + 1..=n {
                let om = sp.realize(&Tensor::OmegaAlpha(al), &[i, j])?;
                let cross = match form {
                    YForm::Printed => sp.realize(&Tensor::OmegaKAlpha(al), &[i, j])? * c(2.0, 0.0) - &om,
                    YForm::Corrected => {
                        let (a, b) = (&sp.factors[i - 1], &sp.factors[j - 1]);
                        sp.embed(&[(i, a.e(al.i, al.j)), (j, &(-b.e(al.i, al.j)))])?
                    }
                };
                inner += om / c(xi[i - 1] - xi[j - 1], 0.0) + cross / c(xi[i - 1] + xi[j - 1], 0.0);
            }
            let wk = sp.realize(&Tensor::OmegaKAlpha(al), &[0, i])? * c(-2.0, 0.0);
            let diff = sp.realize(&Tensor::CKAlpha(al), &[i])? - sp.realize(&Tensor::CAlpha(al), &[i])?;
            let point = match form {
                YForm::Printed => wk + diff,
                YForm::Corrected => wk - diff * c(0.5, 0.0),
            };
            inner += point / c(xi[i - 1], 0.0);
        }
        y -= inner / c(au, 0.0);
    }
    let mut xu = CMat::zeros(dim, dim);
    let mut rhs = CMat::zeros(dim, dim);
    let half = match form {
        YForm::Printed => 1.0,
        YForm::Corrected => 0.5,
    };
    for i in 1..=n {
        xu += &p.u_ops[i] * c(xi[i - 1], 0.0);
        rhs += &p.c_k[i] - &p.c_0[i] * c(half, 0.0) + &p.omega_k[0][i] * c(2.0, 0.0);
        for j in i + 1..=n {
            rhs += &p.omega_k[i][j] * c(2.0, 0.0);
        }
    }
    let lhs = commutator(&y, &xu);
    let scale = max_abs(&lhs).max(max_abs(&rhs));
    let residual = if scale == 0.0 { 0.0 } else { max_abs(&(lhs - rhs)) / scale };
    Ok((y, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Model;

    fn sys(w: Option<&str>, v: &str, n: usize) -> PfaffianSystem {
        let m = Model::new(w.map(|s| s.parse().unwrap()), v.parse().unwrap(), vec![1.0, -1.0], c(0.0, 1.0)).unwrap();
        PfaffianSystem::new(&m, n).unwrap()
    }

    #[test]
    fn one_point_pullback_is_the_boundary_system() {
        let s = sys(Some("defining(2)"), "adjoint(2)", 1);
        let pulled = pullback_system(&s, DomainLabel(0), &[1.0]).unwrap();
        let (k, _) = crate::stokes::stokes_system(crate::stokes::Target::K, &s.model).unwrap();
        assert!(rel_diff(&pulled.a0, &k.a0) < 1e-15);
        assert!(pulled.u.iter().all(|z| z.re.abs() < 1e-15));
    }

    #[test]
    fn exponent_is_half_c0() {
        let s = sys(Some("defining(2)"), "adjoint(2)", 2);
        let pulled = pullback_system(&s, DomainLabel(0), &[0.6, 1.7]).unwrap();
        let (half, full) = pullback_exponent_check(&s, &pulled).unwrap();
        assert!(half < 1e-12);
        assert!(full > 0.1);
    }

    #[test]
    fn walls_are_rejected() {
        let s = sys(None, "defining(2)", 2);
        assert!(pullback_system(&s, DomainLabel(0), &[1.0, 1.0]).is_err());
        assert!(y_xi(&s, &[1.0, -1.0], YForm::Corrected).is_err());
    }

    #[test]
    fn y_identity() {
        for (w, v, xi) in [(Some("defining(2)"), "adjoint(2)", vec![1.0]), (Some("defining(2)"), "adjoint(2)", vec![0.5, 1.25]), (None, "defining(2)", vec![-0.7, 0.4, 1.9])] {
            let s = sys(w, v, xi.len());
            let (y, r) = y_xi(&s, &xi, YForm::Corrected).unwrap();
            assert!(r < 1e-12, "{r}");
            let s2 = PfaffianSystem::new(&s.model.with_u(vec![2.0, -2.0]), xi.len()).unwrap();
            let (y2, r2) = y_xi(&s2, &xi, YForm::Corrected).unwrap();
            assert!(r2 < 1e-12 && rel_diff(&(y2 * c(2.0, 0.0)), &y) < 1e-14);
        }
    }
}
