//! F_k(z, ξ) = Y(z; ξ)·G_k(ξ)·T_k on H₊ × D_k, with Y the right half-plane
//! solution of the pulled-back system.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pullback::{pullback_system, YForm};
use super::{DomainLabel, PfaffianSystem};
use crate::error::{Error, Result};
use crate::mat::{c, expm, inverse, max_abs, CMat, C64, I};
use crate::odeflow::{integrate_path, sector_solution, PathSpec, SectorSettings, SectorSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkSettings {
    pub sector: SectorSettings,
    /// Corrected: C₀ enters G_k and T₋₁ with weight ½. Printed: weight 1.
    pub form: YForm,
}

impl Default for FkSettings {
    fn default() -> Self {
        FkSettings { sector: SectorSettings { m: 20, ..SectorSettings::default() }, form: YForm::Corrected }
    }
}

fn c0_weight(form: YForm) -> f64 {
    match form {
        YForm::Printed => 1.0,
        YForm::Corrected => 0.5,
    }
}

/// G_k(ξ) = Π|ξ_i|^{wC₀^{(i)}/κ} Π_{i<j} |(ξ_i − ξ_j)/(ξ_i + ξ_j)|^{[Ω]^{ij}/κ}.
/// Every factor lies in the Cartan part, so one exponential suffices.
pub fn prefactor(sys: &PfaffianSystem, xi: &[f64], form: YForm) -> Result<CMat> {
    if xi.len() != sys.n {
        return Err(Error::Dimension(format!("xi has {} entries for n = {}", xi.len(), sys.n)));
    }
    let p = &sys.pieces;
    let w = c0_weight(form);
    let mut e = CMat::zeros(sys.dim(), sys.dim());
    for i in 1..=sys.n {
        e += &p.c_0[i] * c(w * xi[i - 1].abs().ln(), 0.0);
        for j in i + 1..=sys.n {
            let r = ((xi[i - 1] - xi[j - 1]) / (xi[i - 1] + xi[j - 1])).abs();
            e += &p.bracket[i][j] * c(r.ln(), 0.0);
        }
    }
    Ok(expm(&(e / sys.kappa)))
}

/// T₀ = 1, T_k = e^{πi[Ω]^{k,k+1}/κ}, T₋₁ = e^{πi·wC₀^{(1)}/κ}.
pub fn twist(sys: &PfaffianSystem, k: DomainLabel, form: YForm) -> Result<CMat> {
    let p = &sys.pieces;
    let e = match k.0 {
        0 => return Ok(CMat::identity(sys.dim(), sys.dim())),
        -1 => &p.c_0[1] * c(c0_weight(form), 0.0),
        k if k >= 1 && (k as usize) < sys.n => p.bracket[k as usize][k as usize + 1].clone(),
        k => return Err(Error::Domain(k)),
    };
    Ok(expm(&(e * (I * PI) / sys.kappa)))
}

struct Frame {
    sol: SectorSolution,
    right: CMat,
}

fn frame(sys: &PfaffianSystem, k: DomainLabel, xi: &[f64], settings: &FkSettings) -> Result<Frame> {
    let pulled = pullback_system(sys, k, xi)?;
    let sol = sector_solution(&pulled, 0.0, &settings.sector)?;
    let right = prefactor(sys, xi, settings.form)? * twist(sys, k, settings.form)?;
    Ok(Frame { sol, right })
}

fn check_half_plane(z: C64) -> Result<()> {
    if !(z.re > 0.0) {
        return Err(Error::Branch(format!("F_k is taken on the right half-plane; got z = {z}")));
    }
    Ok(())
}

impl Frame {
    fn at(&self, z: C64) -> Result<CMat> {
        check_half_plane(z)?;
        Ok(self.sol.at(z)? * &self.right)
    }
}

pub fn canonical_fk(sys: &PfaffianSystem, k: DomainLabel, xi: &[f64], z: C64, settings: &FkSettings) -> Result<CMat> {
    check_half_plane(z)?;
    frame(sys, k, xi, settings)?.at(z)
}

/// ‖M‖·‖M⁻¹‖ in the max-entry norm.
pub fn condition(m: &CMat) -> Result<f64> {
    Ok(max_abs(m) * max_abs(&inverse(m, "F_k")?) * m.nrows() as f64)
}

fn richardson(f: &dyn Fn(f64) -> Result<CMat>, h: f64) -> Result<CMat> {
    let d = |s: f64| -> Result<CMat> { Ok((f(s)? - f(-s)?) / c(2.0 * s, 0.0)) };
    let (d1, d2) = (d(h)?, d(2.0 * h)?);
    Ok((d1 * c(4.0, 0.0) - d2) / c(3.0, 0.0))
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    let s = max_abs(a).max(max_abs(b));
    if s == 0.0 {
        0.0
    } else {
        max_abs(&(a - b)) / s
    }
}

/// max over `zs` of the relative defect of dF/dz = (U + A0/z)F, with dF/dz by
/// Richardson-extrapolated central differences (step h·|z| along the real axis).
/// F is evaluated once at z = ρ, half the smallest |z|, and continued along
/// chords from there, which stay inside H₊.
/// Returns the worst defect and the worst condition number seen.
pub fn fk_z_residual(sys: &PfaffianSystem, k: DomainLabel, xi: &[f64], zs: &[C64], h: f64, settings: &FkSettings) -> Result<(f64, f64)> {
    for &z in zs {
        check_half_plane(z)?;
    }
    let fr = frame(sys, k, xi, settings)?;
    let rho = zs.iter().fold(f64::INFINITY, |m, z| m.min(z.norm())) / 2.0;
    let anchor = c(rho, 0.0);
    let f_anchor = fr.at(anchor)?;
    let coeff = |z: C64| fr.sol.sys.coeff(z);
    let at = |z: C64| integrate_path(&coeff, &PathSpec::new(0.0).segment(anchor, z), &f_anchor, &settings.sector.solver);
    let per_point = zs
        .par_iter()
        .map(|&z| -> Result<(f64, f64)> {
            let d = richardson(&|s| at(z + s), h * z.norm())?;
            let f = at(z)?;
            Ok((rel(&d, &(coeff(z) * &f)), condition(&f)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_point.iter().fold((0.0f64, 0.0f64), |(r, k), &(a, b)| (r.max(a), k.max(b))))
}

/// max over i of the relative defect of ∂F/∂ξ_i = z·A_i(zξ)·F, with the ξ
/// derivative by Richardson-extrapolated central differences of step h.
pub fn fk_xi_residual(sys: &PfaffianSystem, k: DomainLabel, xi: &[f64], z: C64, h: f64, settings: &FkSettings) -> Result<f64> {
    let f = canonical_fk(sys, k, xi, z, settings)?;
    let zxi: Vec<C64> = xi.iter().map(|&x| z * x).collect();
    // F at ξ ± h e_i and ξ ± 2h e_i, all independent
    let shifts: Vec<(usize, f64)> = (0..sys.n).flat_map(|i| [-2.0, -1.0, 1.0, 2.0].map(|m| (i, m * h))).collect();
    let values = shifts
        .par_iter()
        .map(|&(i, s)| {
            let mut x = xi.to_vec();
            x[i] += s;
            canonical_fk(sys, k, &x, z, settings)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for i in 0..sys.n {
        let v = &values[4 * i..4 * i + 4];
        let d1 = (&v[2] - &v[1]) / c(2.0 * h, 0.0);
        let d2 = (&v[3] - &v[0]) / c(4.0 * h, 0.0);
        let d = (d1 * c(4.0, 0.0) - d2) / c(3.0, 0.0);
        let want = sys.coefficient(i + 1, &zxi)? * z * &f;
        worst = worst.max(rel(&d, &want));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::rel_diff;
    use crate::model::Model;

    fn sys(n: usize) -> PfaffianSystem {
        let m = Model::new(Some("defining(2)".parse().unwrap()), "adjoint(2)".parse().unwrap(), vec![1.0, -1.0], c(0.0, 1.0)).unwrap();
        PfaffianSystem::new(&m, n).unwrap()
    }

    #[test]
    fn negative_chamber_carries_the_twist() {
        let s = sys(1);
        let st = FkSettings::default();
        let z = c(0.8, 0.3);
        let g = canonical_fk(&s, DomainLabel(-1), &[-1.0], z, &st).unwrap();
        let pulled = pullback_system(&s, DomainLabel(-1), &[-1.0]).unwrap();
        let y = sector_solution(&pulled, 0.0, &st.sector).unwrap().at(z).unwrap();
        let t = expm(&(&s.pieces.c_0[1] * c(0.5, 0.0) * (I * PI) / s.kappa));
        assert!(rel_diff(&g, &(y * t)) < 1e-14);
    }

    #[test]
    fn left_half_plane_is_rejected() {
        let s = sys(1);
        assert!(matches!(canonical_fk(&s, DomainLabel(0), &[1.0], c(-0.5, 0.1), &FkSettings::default()), Err(Error::Branch(_))));
        assert!(matches!(canonical_fk(&s, DomainLabel(0), &[-1.0], c(0.5, 0.1), &FkSettings::default()), Err(Error::Domain(0))));
    }

    #[test]
    fn solves_both_equations() {
        let s = sys(2);
        let st = FkSettings::default();
        for (k, xi) in [(1, [1.6, 0.7]), (-1, [-0.7, 1.6])] {
            let zs = [c(0.9, 0.4)];
            let (rz, cond) = fk_z_residual(&s, DomainLabel(k), &xi, &zs, 1e-3, &st).unwrap();
            assert!(rz < 1e-8, "k = {k}: z residual {rz:e}");
            assert!(cond.is_finite());
            let rx = fk_xi_residual(&s, DomainLabel(k), &xi, zs[0], 1e-5, &st).unwrap();
            assert!(rx < 1e-6, "k = {k}: xi residual {rx:e}");
        }
    }
}
