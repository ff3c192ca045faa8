//! Stokes matrices S, S_- of the two-point system and K, K_- of the boundary
//! system, connection matrices at 0, and checks of their algebraic identities.

mod oracle;
mod verify;

pub use oracle::stokes_2x2_oracle;
pub use verify::{
    ledger_sweep, reflection_braid_form, verify_reflection, verify_side_relations, verify_ybe, LedgerRow, STau,
    SideRelations, YbeResidual,
};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::mat::{c, det, expm_scaled, inverse, max_abs, rel_diff, to_pairs, CMat, C64, I};
use crate::model::Model;
use crate::odeflow::{
    frobenius_solution, integrate_path, sector_solution, FrobeniusSettings, PathSpec, RankOneSystem, SectorSettings,
};
use crate::reps::{Tensor, TensorSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    /// κY' = (u^{(2)} + Ω/z)Y on V ⊗ V.
    S,
    /// κF' = (u^{(1)} + (2Ω_k + C_k^{(1)})/z)F on W ⊗ V.
    K,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    MinusPi,
    PlusPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Where Y₋ is initialized and on which side e^{±πi[A0]} is split off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub y_minus_branch: Branch,
    pub prefactor: Side,
}

impl Default for Ledger {
    fn default() -> Self {
        Ledger { y_minus_branch: Branch::MinusPi, prefactor: Side::Left }
    }
}

impl Ledger {
    pub fn all() -> [Ledger; 4] {
        let mut out = [Ledger::default(); 4];
        let mut k = 0;
        for b in [Branch::MinusPi, Branch::PlusPi] {
            for p in [Side::Left, Side::Right] {
                out[k] = Ledger { y_minus_branch: b, prefactor: p };
                k += 1;
            }
        }
        out
    }

    pub fn theta_minus(&self) -> f64 {
        match self.y_minus_branch {
            Branch::MinusPi => -PI,
            Branch::PlusPi => PI,
        }
    }

    /// S from X = Y₊⁻¹Y₋ and S_- from X₂ = (Y₋ᶜᶜʷ)⁻¹Y₊, given P = e^{πi[A0]}.
    pub fn assemble(&self, x: &CMat, x2: &CMat, p: &CMat, p_inv: &CMat) -> (CMat, CMat) {
        match self.prefactor {
            Side::Left => (p * x, x2 * p_inv),
            Side::Right => (x * p, p_inv * x2),
        }
    }

    pub fn describe(&self) -> String {
        let b = match self.y_minus_branch {
            Branch::MinusPi => "-pi",
            Branch::PlusPi => "+pi",
        };
        let side = match self.prefactor {
            Side::Left => "left",
            Side::Right => "right",
        };
        format!(
            "Y+ from R along the real axis to r, then ccw on |z|=r to -r; Y- initialized at arg {b}, \
             continued to -r and ccw on |z|=r through the lower half-plane to r; prefactor on the {side}"
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesSettings {
    pub sector: SectorSettings,
    /// Radius of the circle on which Y₊ and Y₋ are compared.
    pub inner_radius: f64,
    pub ledger: Ledger,
    pub frobenius: FrobeniusSettings,
    /// Matching point z* on the positive axis for connection matrices.
    pub matching_point: f64,
}

impl Default for StokesSettings {
    fn default() -> Self {
        StokesSettings {
            sector: SectorSettings::default(),
            inner_radius: 1.0,
            ledger: Ledger::default(),
            frobenius: FrobeniusSettings::default(),
            matching_point: 0.5,
        }
    }
}

impl StokesSettings {
    pub fn with_tol(tol: f64) -> Self {
        let mut s = StokesSettings::default();
        s.sector.tol = tol;
        s.sector.solver.rtol = (0.1 * tol).max(1e-14);
        s.frobenius.solver.rtol = s.sector.solver.rtol;
        s
    }

    /// Doubled starting radius and truncation order raised by 4.
    pub fn escalated(&self, radius: f64) -> Self {
        let mut s = *self;
        s.sector.radius = 2.0 * radius;
        s.sector.max_doublings = 0;
        s.sector.m += 4;
        s
    }
}

/// Raw comparison data of the two half-plane solutions.
#[derive(Debug, Clone)]
pub struct StokesData {
    pub x: CMat,
    pub x2: CMat,
    pub s: CMat,
    pub s_minus: CMat,
    pub exponent: CMat,
    pub radius: f64,
    pub estimate: f64,
}

fn advance(sys: &RankOneSystem, path: &PathSpec, f: &CMat, settings: &StokesSettings) -> Result<CMat> {
    let coeff = |z: C64| sys.coeff(z);
    integrate_path(&coeff, path, f, &settings.sector.solver)
}

/// S and S_- of dF/dz = (U + A0/z)F for the half-plane sectors H₊, H₋.
pub fn stokes_matrices(sys: &RankOneSystem, settings: &StokesSettings) -> Result<StokesData> {
    let r = settings.inner_radius;
    let beta = settings.ledger.theta_minus();
    let yp = sector_solution(sys, 0.0, &settings.sector)?;
    let ym = sector_solution(sys, beta, &settings.sector)?;
    let yp_r = yp.continue_along(&PathSpec::new(0.0).segment(yp.base, c(r, 0.0)))?;
    let yp_left = advance(sys, &PathSpec::new(0.0).arc(c(0.0, 0.0), r, 0.0, PI), &yp_r, settings)?;
    let ym_left = ym.continue_along(&PathSpec::new(beta).segment(ym.base, c(-r, 0.0)))?;
    let ym_right = advance(sys, &PathSpec::new(beta).arc(c(0.0, 0.0), r, beta, beta + PI), &ym_left, settings)?;
    let x = inverse(&yp_left, "Y+ at -r")? * ym_left;
    let x2 = inverse(&ym_right, "continued Y- at r")? * yp_r;
    let exponent = sys.exponent();
    let p = expm_scaled(&exponent, I * PI);
    let p_inv = expm_scaled(&exponent, -I * PI);
    let (s, s_minus) = settings.ledger.assemble(&x, &x2, &p, &p_inv);
    Ok(StokesData { x, x2, s, s_minus, exponent, radius: yp.radius.max(ym.radius), estimate: yp.estimate.max(ym.estimate) })
}

/// The rank-one system of `target` and the space it acts on.
pub fn stokes_system(target: Target, model: &Model) -> Result<(RankOneSystem, TensorSpace)> {
    model.validate()?;
    let kappa = model.kappa;
    let (space, u, a0) = match target {
        Target::S => {
            let sp = model.v_space(2)?;
            let u = sp.u_on(2, &model.u)?;
            let a0 = sp.realize(&Tensor::Omega, &[1, 2])?;
            (sp, u, a0)
        }
        Target::K => {
            let sp = model.space(1)?;
            let u = sp.u_on(1, &model.u)?;
            let a0 = sp.realize(&Tensor::OmegaK, &[0, 1])? * c(2.0, 0.0) + sp.realize(&Tensor::CK, &[1])?;
            (sp, u, a0)
        }
    };
    Ok((RankOneSystem::new(&(u / kappa), a0 / kappa)?, space))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackParams {
    pub model: Model,
    pub tol: f64,
    pub radius: f64,
    pub m: usize,
    pub inner_radius: f64,
}

#[derive(Debug, Clone)]
pub struct StokesPack {
    pub target: Target,
    pub s: CMat,
    pub s_minus: CMat,
    pub exponent: CMat,
    /// Y₊⁻¹Y₋ at −r and (Y₋ᶜᶜʷ)⁻¹Y₊ at r, before the formal factors are split off.
    pub x: CMat,
    pub x2: CMat,
    pub ledger: Ledger,
    pub residuals: BTreeMap<String, f64>,
    pub params: PackParams,
    pub warnings: Vec<String>,
}

pub fn gckz_stokes(target: Target, model: &Model, settings: &StokesSettings) -> Result<StokesPack> {
    let (sys, space) = stokes_system(target, model)?;
    let data = stokes_matrices(&sys, settings)?;
    let mut residuals = BTreeMap::new();
    residuals.insert("truncation_estimate".to_string(), data.estimate);
    let (ds, dm) = (det(&data.s), det(&data.s_minus));
    if ds.norm() == 0.0 || dm.norm() == 0.0 || !ds.is_finite() || !dm.is_finite() {
        return Err(Error::Singular("Stokes matrix".into()));
    }
    let mono = det(&expm_scaled(&data.exponent, I * (2.0 * PI))).norm();
    residuals.insert("det_monodromy".to_string(), ((ds * dm).norm() - mono).abs() / mono);
    residuals.insert("det_monodromy_inverse".to_string(), ((ds * dm).norm() * mono - 1.0).abs());
    let kappa = model.kappa;
    match target {
        Target::S => {
            let bracket = space.realize(&Tensor::BracketOmega, &[1, 2])? / kappa;
            residuals.insert("exponent_vs_bracket_omega".to_string(), rel_diff(&data.exponent, &bracket));
            let d = space.dims[1];
            let ybe = verify_ybe(&data.s, d)?;
            residuals.insert("ybe".to_string(), ybe.normalized);
            residuals.insert("ybe_relative".to_string(), ybe.relative);
        }
        Target::K => {
            let half_c0 = space.realize(&Tensor::C0, &[1])? * c(0.5, 0.0) / kappa;
            residuals.insert("exponent_vs_half_c0".to_string(), rel_diff(&data.exponent, &half_c0));
        }
    }
    Ok(StokesPack {
        target,
        s: data.s,
        s_minus: data.s_minus,
        exponent: data.exponent,
        x: data.x,
        x2: data.x2,
        ledger: settings.ledger,
        residuals,
        params: PackParams {
            model: model.clone(),
            tol: settings.sector.tol,
            radius: data.radius,
            m: settings.sector.m,
            inner_radius: settings.inner_radius,
        },
        warnings: sys.warnings.clone(),
    })
}

impl StokesPack {
    /// S̃ = X·e^{πi[A0]}, the factor that appears in the braid holonomy.
    pub fn tilde(&self) -> CMat {
        &self.x * expm_scaled(&self.exponent, I * PI)
    }

    /// Largest relative change of S, S_- under R → 2R, m → m + 4.
    pub fn stability(&self, settings: &StokesSettings) -> Result<f64> {
        let again = gckz_stokes(self.target, &self.params.model, &settings.escalated(self.params.radius))?;
        Ok(rel_diff(&self.s, &again.s).max(rel_diff(&self.s_minus, &again.s_minus)))
    }

    pub fn to_json(&self) -> Value {
        let m = &self.params.model;
        json!({
            "target": self.target,
            "S": to_pairs(&self.s),
            "S_minus": to_pairs(&self.s_minus),
            "exponent": to_pairs(&self.exponent),
            "ledger": {
                "y_minus_branch": self.ledger.y_minus_branch,
                "prefactor": self.ledger.prefactor,
                "continuation": self.ledger.describe(),
            },
            "residuals": self.residuals,
            "params": {
                "w": m.w.as_ref().map(|w| w.to_string()),
                "v": m.v.to_string(),
                "u": m.u,
                "kappa": [m.kappa.re, m.kappa.im],
                "tol": self.params.tol,
                "R": self.params.radius,
                "m": self.params.m,
                "inner_radius": self.params.inner_radius,
            },
            "warnings": self.warnings,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connection {
    /// From the two-point system.
    C,
    /// From the boundary system.
    T,
}

impl Connection {
    pub fn target(self) -> Target {
        match self {
            Connection::C => Target::S,
            Connection::T => Target::K,
        }
    }
}

/// F₊(z)⁻¹F₀(z) for the system itself.
pub fn connection_of(sys: &RankOneSystem, z: f64, settings: &StokesSettings) -> Result<CMat> {
    let yp = sector_solution(sys, 0.0, &settings.sector)?;
    let fp = yp.continue_along(&PathSpec::new(0.0).segment(yp.base, c(z, 0.0)))?;
    let f0 = frobenius_solution(sys, c(z, 0.0), 0.0, &settings.frobenius)?;
    Ok(inverse(&fp, "F+ at the matching point")? * f0)
}

pub fn connection_matrix(which: Connection, model: &Model, settings: &StokesSettings) -> Result<CMat> {
    let (sys, _) = stokes_system(which.target(), model)?;
    let z = settings.matching_point;
    let a = connection_of(&sys, z, settings)?;
    let b = connection_of(&sys, 2.0 * z, settings)?;
    let d = rel_diff(&a, &b);
    if d > 10.0 * settings.sector.tol.max(settings.sector.solver.rtol) * (1.0 + max_abs(&a)) {
        return Err(Error::Tolerance(format!("connection matrix moves by {d:e} when z* doubles")));
    }
    Ok(a)
}

/// Monodromy of F₊ along the full ccw circle |z| = z*: F₊ᶜᶜʷ = F₊·M.
pub fn loop_monodromy(sys: &RankOneSystem, z: f64, settings: &StokesSettings) -> Result<CMat> {
    let yp = sector_solution(sys, 0.0, &settings.sector)?;
    let f = yp.continue_along(&PathSpec::new(0.0).segment(yp.base, c(z, 0.0)))?;
    let g = advance(sys, &PathSpec::new(0.0).arc(c(0.0, 0.0), z, 0.0, 2.0 * PI), &f, settings)?;
    Ok(inverse(&f, "F+ at the loop base")? * g)
}

/// Largest entrywise gap between the general pipeline and the oracle, over
/// S and S_-, for the same 2×2 system and ledger.
pub fn oracle_agreement(u: [C64; 2], a0: &CMat, settings: &StokesSettings) -> Result<f64> {
    let sys = RankOneSystem::from_diag(u.to_vec(), a0.clone())?;
    let general = stokes_matrices(&sys, settings)?;
    let (s, sm) = stokes_2x2_oracle(u, a0, settings.ledger, settings.sector.tol)?;
    let gap = |a: &CMat, b: &CMat| (a - b).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    Ok(gap(&general.s, &s).max(gap(&general.s_minus, &sm)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{diag, eye};

    fn model(v: &str, u: Vec<f64>, kappa: C64) -> Model {
        Model::new(None, v.parse().unwrap(), u, kappa).unwrap()
    }

    #[test]
    fn abelian_calibration() {
        // gl_1: Ω = 1, and Y = e^{zU}z^{A0} exactly
        let m = model("defining(1)", vec![0.7], c(0.0, 2.0));
        let pack = gckz_stokes(Target::S, &m, &StokesSettings::default()).unwrap();
        let a = 1.0 / m.kappa;
        let want = (-I * PI * a).exp();
        assert!((pack.s[(0, 0)] - want).norm() < 1e-11);
        assert!((pack.s_minus[(0, 0)] - want).norm() < 1e-11);
        assert!((pack.s[(0, 0)].norm() - (-I * PI / m.kappa).exp().norm()).abs() < 1e-11);
    }

    #[test]
    fn diagonal_residue_gives_pure_factor() {
        let sys = RankOneSystem::from_diag(vec![c(0.0, 1.0), c(0.0, -1.0)], diag(&[c(0.0, 0.3), c(0.0, -0.2)])).unwrap();
        let d = stokes_matrices(&sys, &StokesSettings::default()).unwrap();
        let back = &d.s * expm_scaled(&d.exponent, I * PI);
        assert!(max_abs(&(back - eye(2))) < 1e-11);
    }

    #[test]
    fn connection_is_one_for_abelian() {
        let m = model("defining(1)", vec![-0.4], c(0.0, 1.5));
        let cm = connection_matrix(Connection::C, &m, &StokesSettings::default()).unwrap();
        assert!((cm[(0, 0)] - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn connection_conjugates_local_monodromy() {
        let m = model("defining(2)", vec![1.0, -1.0], c(0.0, 1.0));
        let st = StokesSettings::default();
        let cm = connection_matrix(Connection::C, &m, &st).unwrap();
        let (sys, _) = stokes_system(Target::S, &m).unwrap();
        let loop_m = loop_monodromy(&sys, st.matching_point, &st).unwrap();
        let local = &cm * expm_scaled(&sys.a0, I * (2.0 * PI)) * inverse(&cm, "C").unwrap();
        assert!(rel_diff(&local, &loop_m) < 1e-8);
    }

    #[test]
    fn irregular_u_is_rejected() {
        let m = Model { w: None, v: "defining(2)".parse().unwrap(), u: vec![1.0, 1.0], kappa: c(0.0, 1.0) };
        assert_eq!(gckz_stokes(Target::S, &m, &StokesSettings::default()).unwrap_err(), Error::IrregularU);
        assert_eq!(connection_matrix(Connection::C, &m, &StokesSettings::default()).unwrap_err(), Error::IrregularU);
    }
}
