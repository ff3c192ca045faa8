//! The data shared by every computation: modules, the irregular point u and κ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::C64;
use crate::reps::{build_rep, restrict_to_k, KModule, RepSpec, Representation, TensorSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    /// gl_n module whose so_n restriction sits in slot 0; trivial when absent.
    pub w: Option<RepSpec>,
    pub v: RepSpec,
    pub u: Vec<f64>,
    pub kappa: C64,
}

impl Model {
    pub fn new(w: Option<RepSpec>, v: RepSpec, u: Vec<f64>, kappa: C64) -> Result<Self> {
        let m = Model { w, v, u, kappa };
        m.validate()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.v.rank()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.u.len() != n {
            return Err(Error::Dimension(format!("u has {} entries for gl_{n}", self.u.len())));
        }
        if let Some(w) = &self.w {
            if w.rank() != n {
                return Err(Error::Dimension(format!("W is a gl_{} module, V a gl_{n} module", w.rank())));
            }
        }
        check_regular(&self.u)?;
        check_kappa(self.kappa)
    }

    pub fn with_u(&self, u: Vec<f64>) -> Model {
        Model { u, ..self.clone() }
    }

    pub fn v_rep(&self) -> Result<Representation> {
        build_rep(&self.v)
    }

    pub fn w_module(&self) -> Result<Option<KModule>> {
        self.w.as_ref().map(|w| Ok(restrict_to_k(&build_rep(w)?))).transpose()
    }

    /// W ⊗ V^{⊗m}.
    pub fn space(&self, m: usize) -> Result<TensorSpace> {
        TensorSpace::power(self.w_module()?, &self.v_rep()?, m)
    }

    /// V^{⊗m} with the trivial W.
    pub fn v_space(&self, m: usize) -> Result<TensorSpace> {
        TensorSpace::power(None, &self.v_rep()?, m)
    }
}

/// Distinct entries, with a gap that is not lost in rounding.
pub fn check_regular(u: &[f64]) -> Result<()> {
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::IrregularU);
    }
    let scale = u.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            if (u[i] - u[j]).abs() <= 1e-12 * scale {
                return Err(Error::IrregularU);
            }
        }
    }
    Ok(())
}

pub fn check_kappa(kappa: C64) -> Result<()> {
    if !kappa.im.is_finite() || kappa.im == 0.0 || kappa.re.abs() > 1e-14 * kappa.norm() {
        return Err(Error::Kappa(kappa.to_string()));
    }
    Ok(())
}
