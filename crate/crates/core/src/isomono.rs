//! Deformation of the Stokes data in u: the generator of the conjugation flow,
//! its scalar normalization fitted against finite differences, and transport.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::root_data;
use crate::mat::{c, charpoly_distance, commutator, det, eigen_match_distance, max_abs, rel_diff, CMat, C64};
use crate::model::{check_regular, Model};
use crate::odeflow::Dop853;
use crate::reps::Tensor;
use crate::stokes::{gckz_stokes, StokesSettings, Target};

/// Piecewise-linear path through the given values of u, run with t ∈ [0, 1]
/// split evenly between legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationPath {
    pub waypoints: Vec<Vec<f64>>,
}

impl DeformationPath {
    pub fn segment(u0: &[f64], u1: &[f64]) -> Self {
        DeformationPath { waypoints: vec![u0.to_vec(), u1.to_vec()] }
    }

    pub fn legs(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    /// Smallest |u_i − u_j| along the path (exact for linear legs: each gap is
    /// linear in t, so a sign change means a wall crossing).
    pub fn gap(&self) -> Result<f64> {
        let n = self.waypoints.first().map_or(0, Vec::len);
        if self.waypoints.is_empty() || self.waypoints.iter().any(|w| w.len() != n) {
            return Err(Error::Dimension("waypoints of unequal length".into()));
        }
        let mut gap = f64::INFINITY;
        for w in &self.waypoints {
            check_regular(w)?;
        }
        for leg in self.waypoints.windows(2) {
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (leg[0][i] - leg[0][j], leg[1][i] - leg[1][j]);
                    if a.signum() != b.signum() {
                        return Err(Error::IrregularU);
                    }
                    gap = gap.min(a.abs()).min(b.abs());
                }
            }
        }
        if self.waypoints.len() == 1 {
            let w = &self.waypoints[0];
            for i in 0..n {
                for j in i + 1..n {
                    gap = gap.min((w[i] - w[j]).abs());
                }
            }
        }
        Ok(gap)
    }

    /// (u(t), du/dt).
    pub fn at(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let legs = self.legs();
        if legs == 0 {
            let u = self.waypoints[0].clone();
            return (u.clone(), vec![0.0; u.len()]);
        }
        let s = (t.clamp(0.0, 1.0) * legs as f64).min(legs as f64 - 1e-15);
        let k = (s.floor() as usize).min(legs - 1);
        let tau = s - k as f64;
        let (a, b) = (&self.waypoints[k], &self.waypoints[k + 1]);
        let u = a.iter().zip(b).map(|(x, y)| x + tau * (y - x)).collect();
        let du = a.iter().zip(b).map(|(x, y)| (y - x) * legs as f64).collect();
        (u, du)
    }
}

/// c·Σ_α (dα(du)/α(u))·B_α/κ with B_α = C_α^{(1)} + C_α^{(2)} on V ⊗ V for S,
/// and B_α = C_{k,α}^{(0)} + C_α^{(1)} on W ⊗ V for K.
pub fn deformation_generator(model: &Model, u: &[f64], du: &[f64], target: Target, prefactor: f64) -> Result<CMat> {
    let n = model.n();
    if u.len() != n || du.len() != n {
        return Err(Error::Dimension("u and du must have one entry per diagonal slot".into()));
    }
    check_regular(u)?;
    let (space, legs): (_, [usize; 2]) = match target {
        Target::S => (model.v_space(2)?, [1, 2]),
        Target::K => (model.space(1)?, [0, 1]),
    };
    let mut out = CMat::zeros(space.dim, space.dim);
    for al in root_data(n).roots {
        let ratio = (du[al.i] - du[al.j]) / (u[al.i] - u[al.j]);
        if ratio == 0.0 {
            continue;
        }
        let piece = match target {
            Target::S => space.realize(&Tensor::CAlpha(al), &[legs[0]])? + space.realize(&Tensor::CAlpha(al), &[legs[1]])?,
            Target::K => space.realize(&Tensor::CKAlpha(al), &[legs[0]])? + space.realize(&Tensor::CAlpha(al), &[legs[1]])?,
        };
        out += piece * c(ratio, 0.0);
    }
    Ok(out * c(prefactor, 0.0) / model.kappa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target: Target,
    pub u: Vec<f64>,
    pub direction: Vec<f64>,
    /// Least-squares c (complex in general; real when the generator form is right).
    /// None when both dS and [B, S] vanish to working precision.
    pub c: Option<[f64; 2]>,
    pub fit_residual: f64,
    pub step: f64,
}

/// Richardson-extrapolated central difference of S (or K) along `direction`.
pub fn stokes_derivative(model: &Model, target: Target, direction: &[f64], h: f64, settings: &StokesSettings) -> Result<CMat> {
    let at = |s: f64| -> Result<CMat> {
        let u: Vec<f64> = model.u.iter().zip(direction).map(|(x, d)| x + s * d).collect();
        Ok(gckz_stokes(target, &model.with_u(u), settings)?.s)
    };
    let d1 = (at(h)? - at(-h)?) / c(2.0 * h, 0.0);
    let d2 = (at(2.0 * h)? - at(-2.0 * h)?) / c(4.0 * h, 0.0);
    Ok((d1 * c(4.0, 0.0) - d2) / c(3.0, 0.0))
}

/// Fits dS ≈ c·[B(c = 1), S] in least squares; fails when the relative fit
/// residual exceeds `max_residual`. A matrix that does not move (both sides
/// below 1e-8·‖S‖, as for K with trivial W) leaves c undetermined.
pub fn calibrate(model: &Model, target: Target, direction: &[f64], settings: &StokesSettings, max_residual: f64) -> Result<Calibration> {
    let h = 1e-3;
    let s = gckz_stokes(target, model, settings)?.s;
    let d = stokes_derivative(model, target, direction, h, settings)?;
    let g = commutator(&deformation_generator(model, &model.u, direction, target, 1.0)?, &s);
    let scale = max_abs(&s);
    let mut out = Calibration { target, u: model.u.clone(), direction: direction.to_vec(), c: None, fit_residual: 0.0, step: h };
    if max_abs(&g) < 1e-8 * scale && max_abs(&d) < 1e-8 * scale {
        return Ok(out);
    }
    let gg: f64 = g.iter().map(|x| x.norm_sqr()).sum();
    if gg == 0.0 {
        return Err(Error::Fit(1.0));
    }
    let num: C64 = g.iter().zip(d.iter()).map(|(a, b)| a.conj() * b).sum();
    let cfit = num / gg;
    out.fit_residual = rel_diff(&d, &(&g * cfit));
    out.c = Some([cfit.re, cfit.im]);
    if !(out.fit_residual <= max_residual) {
        return Err(Error::Fit(out.fit_residual));
    }
    Ok(out)
}

/// dM/dt = [B(u(t), u̇(t)), M] along `path`, integrated on each leg.
pub fn transport(m0: &CMat, path: &DeformationPath, model: &Model, target: Target, prefactor: f64, solver: &Dop853) -> Result<CMat> {
    path.gap()?;
    let mut m = m0.clone();
    let legs = path.legs();
    for k in 0..legs {
        let (a, b) = (k as f64 / legs as f64, (k + 1) as f64 / legs as f64);
        let rhs = |t: f64, y: &CMat| -> CMat {
            let (u, du) = path.at(a + (b - a) * t);
            // regularity holds along a checked path
            let g = deformation_generator(model, &u, &du, target, prefactor).expect("u stays regular");
            commutator(&g, y) * c(b - a, 0.0)
        };
        m = solver.integrate(&rhs, 0.0, 1.0, &m)?.0;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub target: Target,
    /// ‖transported − direct‖ / ‖direct‖ at the far end.
    pub distance: f64,
    pub det_drift: f64,
    pub spectrum_drift: f64,
    pub charpoly_drift: f64,
    /// ‖M(1)·G − G·M(0)‖ relative, with G the transported frame dG/dt = B·G.
    pub conjugacy: f64,
}

/// Transports the directly computed matrix at the start of `path` and compares
/// with the one computed directly at its end.
pub fn verify_transport(model: &Model, path: &DeformationPath, target: Target, prefactor: f64, settings: &StokesSettings, solver: &Dop853) -> Result<TransportReport> {
    let first = &path.waypoints[0];
    let last = path.waypoints.last().expect("non-empty path");
    let m0 = gckz_stokes(target, &model.with_u(first.clone()), settings)?.s;
    let m1 = gckz_stokes(target, &model.with_u(last.clone()), settings)?.s;
    let moved = transport(&m0, path, model, target, prefactor, solver)?;
    let frame = frame_transport(m0.nrows(), path, model, target, prefactor, solver)?;
    let (d0, d1) = (det(&m0), det(&moved));
    let lhs = &moved * &frame;
    let rhs = &frame * &m0;
    Ok(TransportReport {
        target,
        distance: rel_diff(&moved, &m1),
        det_drift: (d1 - d0).norm() / d0.norm(),
        spectrum_drift: eigen_match_distance(&m0, &moved)?,
        charpoly_drift: charpoly_distance(&m0, &moved)?,
        conjugacy: max_abs(&(&lhs - &rhs)) / max_abs(&lhs).max(max_abs(&rhs)),
    })
}

fn frame_transport(dim: usize, path: &DeformationPath, model: &Model, target: Target, prefactor: f64, solver: &Dop853) -> Result<CMat> {
    let mut g = CMat::identity(dim, dim);
    let legs = path.legs();
    for k in 0..legs {
        let (a, b) = (k as f64 / legs as f64, (k + 1) as f64 / legs as f64);
        let rhs = |t: f64, y: &CMat| -> CMat {
            let (u, du) = path.at(a + (b - a) * t);
            deformation_generator(model, &u, &du, target, prefactor).expect("u stays regular") * y * c(b - a, 0.0)
        };
        g = solver.integrate(&rhs, 0.0, 1.0, &g)?.0;
    }
    Ok(g)
}
