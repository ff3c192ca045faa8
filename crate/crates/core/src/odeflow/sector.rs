use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dop853::Dop853;
use super::formal::{formal_fundamental, FormalSolution};
use super::path::{integrate_path, PathSpec};
use super::system::RankOneSystem;
use crate::error::{Error, Result};
use crate::mat::{c, expm_scaled, max_abs, rel_diff, CMat, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorSettings {
    /// Truncation order of the formal series.
    pub m: usize,
    /// Starting radius; doubled until ‖H_m‖/R^m ≤ tol.
    pub radius: f64,
    pub max_doublings: usize,
    pub tol: f64,
    pub solver: Dop853,
}

impl Default for SectorSettings {
    fn default() -> Self {
        SectorSettings { m: 12, radius: 8.0, max_doublings: 10, tol: 1e-12, solver: Dop853::with_rtol(1e-13) }
    }
}

/// The canonical solution on the sector bisected by θ₀, initialized from the
/// truncated formal series at z = R·e^{iθ₀}.
#[derive(Debug, Clone)]
pub struct SectorSolution {
    pub sys: RankOneSystem,
    pub formal: FormalSolution,
    pub theta0: f64,
    pub radius: f64,
    pub estimate: f64,
    pub base: C64,
    pub f_base: CMat,
    pub settings: SectorSettings,
}

/// log z on the branch with arg z = `arg`.
pub fn log_on(z: C64, arg: f64) -> C64 {
    c(z.norm().ln(), arg)
}

/// z^{M} = exp(log z · M) with arg z = `arg`.
pub fn power(m: &CMat, z: C64, arg: f64) -> CMat {
    expm_scaled(m, log_on(z, arg))
}

pub fn sector_solution(sys: &RankOneSystem, theta0: f64, settings: &SectorSettings) -> Result<SectorSolution> {
    let formal = formal_fundamental(sys, settings.m)?;
    let mut radius = settings.radius;
    let mut doublings = 0;
    while formal.error_estimate(radius) > settings.tol {
        if doublings == settings.max_doublings {
            return Err(Error::Truncation(format!(
                "estimate {:e} above tol {:e} at R = {radius}",
                formal.error_estimate(radius),
                settings.tol
            )));
        }
        radius *= 2.0;
        doublings += 1;
    }
    let estimate = formal.error_estimate(radius);
    let base = (I * theta0).exp() * radius;
    let f_base = formal.series(base) * sys.exp_u(base) * power(&formal.exponent, base, theta0);
    Ok(SectorSolution { sys: sys.clone(), formal, theta0, radius, estimate, base, f_base, settings: *settings })
}

impl SectorSolution {
    /// Radial segment to |z|e^{iθ₀}, then the arc to arg z within (θ₀ − π, θ₀ + π].
    pub fn path_to(&self, z: C64) -> PathSpec {
        let mut delta = z.arg() - self.theta0;
        delta -= 2.0 * PI * ((delta + PI) / (2.0 * PI)).ceil() - 2.0 * PI;
        if delta <= -PI {
            delta += 2.0 * PI;
        }
        let rim = (I * self.theta0).exp() * z.norm();
        PathSpec::new(self.theta0)
            .segment(self.base, rim)
            .arc(c(0.0, 0.0), z.norm(), self.theta0, self.theta0 + delta)
    }

    /// Continues the solution along `path`, which must start at the base point.
    pub fn continue_along(&self, path: &PathSpec) -> Result<CMat> {
        if let Some(s) = path.start() {
            if (s - self.base).norm() > 1e-12 * self.radius {
                return Err(Error::Dimension("continuation path does not start at the base point".into()));
            }
        }
        if (path.start_arg - self.theta0).abs() > 1e-12 {
            return Err(Error::Branch("continuation path starts on a different branch".into()));
        }
        path.check_clearance(&[c(0.0, 0.0)], 1e-3)?;
        let coeff = |z: C64| self.sys.coeff(z);
        integrate_path(&coeff, path, &self.f_base, &self.settings.solver)
    }

    pub fn at(&self, z: C64) -> Result<CMat> {
        self.continue_along(&self.path_to(z))
    }

    /// Ĥ_m(z)·e^{zU}·z^{[A0]} on the branch `arg`.
    pub fn asymptotic(&self, z: C64, arg: f64) -> CMat {
        self.formal.series(z) * self.sys.exp_u(z) * power(&self.formal.exponent, z, arg)
    }

    /// The same solution rebuilt at twice the radius.
    pub fn doubled(&self) -> Result<SectorSolution> {
        let s = SectorSettings { radius: 2.0 * self.radius, max_doublings: 0, ..self.settings };
        sector_solution(&self.sys, self.theta0, &s)
    }

    /// Evaluates at `z` with R and 2R and fails if they disagree beyond tol.
    pub fn cross_checked(&self, z: C64, tol: f64) -> Result<CMat> {
        let a = self.at(z)?;
        let b = self.doubled()?.at(z)?;
        let d = rel_diff(&a, &b);
        if d > tol {
            return Err(Error::Truncation(format!("R and 2R disagree by {d:e}")));
        }
        Ok(b)
    }

    /// ‖F(z)·z^{−[A0]}·e^{−zU} − Ĥ_m(z)‖ along the bisector at radius ρ.
    pub fn asymptotic_defect(&self, rho: f64) -> Result<f64> {
        let z = (I * self.theta0).exp() * rho;
        let f = self.at(z)?;
        let strip = crate::mat::inverse(&(self.sys.exp_u(z) * power(&self.formal.exponent, z, self.theta0)), "asymptotic factor")?;
        Ok(max_abs(&(f * strip - self.formal.series(z))))
    }
}
