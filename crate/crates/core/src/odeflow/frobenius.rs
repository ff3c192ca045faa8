use serde::{Deserialize, Serialize};

use super::dop853::Dop853;
use super::path::{integrate_path, PathSpec};
use super::sector::power;
use super::system::{check_nonresonant, RankOneSystem};
use crate::error::{Error, Result};
use crate::mat::{c, eye, max_abs, solve_sylvester, CMat, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrobeniusSettings {
    pub tol: f64,
    pub max_terms: usize,
    pub solver: Dop853,
}

impl Default for FrobeniusSettings {
    fn default() -> Self {
        FrobeniusSettings { tol: 1e-14, max_terms: 400, solver: Dop853::with_rtol(1e-13) }
    }
}

/// F = (Σ_j P_j z^j)·z^{A0}, the solution normalized at 0.
#[derive(Debug, Clone)]
pub struct FrobeniusSeries {
    pub coeffs: Vec<CMat>,
    pub a0: CMat,
    /// Radius up to which the truncated series is trusted.
    pub radius: f64,
}

/// j·P_j − [A0, P_j] = U·P_{j−1}, summed until the tail is below tol at `radius`.
pub fn frobenius_series(sys: &RankOneSystem, settings: &FrobeniusSettings) -> Result<FrobeniusSeries> {
    check_nonresonant(&sys.a0, "A0")?;
    let unorm = sys.u.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let radius = if unorm > 0.0 { (1.0 / unorm).min(1.0) } else { 1.0 };
    let u = sys.u_matrix();
    let mut coeffs = vec![eye(sys.dim)];
    let mut small = 0;
    for j in 1..=settings.max_terms {
        let rhs = &u * &coeffs[j - 1];
        let lhs = eye(sys.dim) * c(j as f64, 0.0) - &sys.a0;
        let p = solve_sylvester(&lhs, &sys.a0, &rhs)?;
        let term = max_abs(&p) * radius.powi(j as i32);
        coeffs.push(p);
        small = if term < settings.tol { small + 1 } else { 0 };
        if small == 3 {
            return Ok(FrobeniusSeries { coeffs, a0: sys.a0.clone(), radius });
        }
    }
    Err(Error::Truncation("Frobenius series did not converge".into()))
}

impl FrobeniusSeries {
    pub fn holomorphic_part(&self, z: C64) -> CMat {
        let mut out = self.coeffs[self.coeffs.len() - 1].clone();
        for p in self.coeffs.iter().rev().skip(1) {
            out = out * z + p;
        }
        out
    }

    pub fn eval(&self, z: C64, arg: f64) -> CMat {
        self.holomorphic_part(z) * power(&self.a0, z, arg)
    }

    /// Normalized defect of P' = UP − (PA0 − A0P)/z at `z`.
    pub fn residual_at(&self, sys: &RankOneSystem, z: C64) -> f64 {
        let p = self.holomorphic_part(z);
        let mut dp = CMat::zeros(sys.dim, sys.dim);
        for (j, pj) in self.coeffs.iter().enumerate().skip(1).rev() {
            dp = dp * z + pj * c(j as f64, 0.0);
        }
        let t1 = sys.u_matrix() * &p;
        let t2 = (&p * &sys.a0 - &sys.a0 * &p) / z;
        let scale = max_abs(&dp).max(max_abs(&t1)).max(max_abs(&t2));
        max_abs(&(dp - t1 + t2)) / scale
    }
}

/// The Frobenius solution at `z` (arg z = `arg`), continued radially from the
/// edge of the series disc when needed.
pub fn frobenius_solution(sys: &RankOneSystem, z: C64, arg: f64, settings: &FrobeniusSettings) -> Result<CMat> {
    let series = frobenius_series(sys, settings)?;
    if z.norm() <= series.radius {
        return Ok(series.eval(z, arg));
    }
    let z0 = (I * arg).exp() * series.radius;
    let f0 = series.eval(z0, arg);
    let path = PathSpec::new(arg).segment(z0, z);
    let coeff = |w: C64| sys.coeff(w);
    integrate_path(&coeff, &path, &f0, &settings.solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::rel_diff;
    use std::f64::consts::PI;

    #[test]
    fn no_irregular_part_gives_pure_power() {
        let a0 = CMat::from_row_slice(2, 2, &[c(0.2, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(-0.3, 0.0)]);
        let sys = RankOneSystem::from_diag(vec![c(0.0, 0.0); 2], a0.clone()).unwrap();
        let z = c(0.5, 0.3);
        let f = frobenius_solution(&sys, z, z.arg(), &FrobeniusSettings::default()).unwrap();
        assert!(rel_diff(&f, &power(&a0, z, z.arg())) < 1e-14);
    }

    #[test]
    fn zero_residue_gives_exponential() {
        let sys = RankOneSystem::from_diag(vec![c(0.0, 1.0), c(0.0, -2.0)], CMat::zeros(2, 2)).unwrap();
        let z = c(3.0, 0.5);
        let f = frobenius_solution(&sys, z, z.arg(), &FrobeniusSettings::default()).unwrap();
        assert!(rel_diff(&f, &sys.exp_u(z)) < 1e-11);
    }

    #[test]
    fn series_resubstitution() {
        let a0 = CMat::from_row_slice(2, 2, &[c(0.1, 0.0), c(0.5, 0.2), c(0.3, 0.0), c(-0.4, 0.1)]);
        let sys = RankOneSystem::from_diag(vec![c(0.0, 1.0), c(0.0, -1.0)], a0).unwrap();
        let s = frobenius_series(&sys, &FrobeniusSettings::default()).unwrap();
        assert!(s.residual_at(&sys, c(0.1, 0.0)) < 1e-10);
        assert!(s.residual_at(&sys, c(0.0, -0.1)) < 1e-10);
    }

    #[test]
    fn loop_multiplies_by_formal_monodromy() {
        let a0 = CMat::from_row_slice(2, 2, &[c(0.1, 0.0), c(0.5, 0.2), c(0.3, 0.0), c(-0.4, 0.1)]);
        let sys = RankOneSystem::from_diag(vec![c(0.0, 1.0), c(0.0, -1.0)], a0.clone()).unwrap();
        let st = FrobeniusSettings::default();
        let z = c(1.5, 0.0);
        let f = frobenius_solution(&sys, z, 0.0, &st).unwrap();
        let path = PathSpec::new(0.0).arc(c(0.0, 0.0), 1.5, 0.0, 2.0 * PI);
        let coeff = |w: C64| sys.coeff(w);
        let g = integrate_path(&coeff, &path, &f, &st.solver).unwrap();
        let want = &f * (&a0 * c(0.0, 2.0 * PI)).exp();
        assert!(rel_diff(&g, &want) < 1e-8);
    }
}
