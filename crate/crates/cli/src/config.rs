use std::collections::BTreeMap;
use std::fmt;

use clap::ValueEnum;
use gckz_core::gckz::YForm;
use gckz_core::mat::{c, C64};
use gckz_core::model::Model;
use gckz_core::reps::RepSpec;
use gckz_core::stokes::{Ledger, STau, StokesSettings, Target};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Tensors,
    Stokes,
    Verify,
    Braid,
    Isomono,
    Flatness,
    Oracle,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("plain enum");
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integrator {
    /// Truncation order of the formal series.
    pub m: Option<usize>,
    /// Starting radius R.
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    pub max_steps: Option<usize>,
    pub rtol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Conventions {
    pub ledger: Ledger,
    pub y_form: YForm,
    pub s_tau: STau,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions { ledger: Ledger::default(), y_form: YForm::Corrected, s_tau: STau::Conjugate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub w: Option<String>,
    #[serde(default)]
    pub v: Option<String>,
    #[serde(default)]
    pub u: Option<Vec<f64>>,
    /// [re, im]
    #[serde(default = "default_kappa")]
    pub kappa: [f64; 2],
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub conventions: Conventions,
    /// Residual name → largest acceptable value; the task defaults apply to
    /// names not listed.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<Target>>,
    /// Number of marked points for braid and flatness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub words: Vec<String>,
    /// Waypoints in u for isomono.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<Vec<f64>>>,
    /// Used when calibration cannot fix c (a target that does not move).
    #[serde(default = "default_prefactor")]
    pub prefactor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Also rerun at doubled R and m + 4 and report the change.
    #[serde(default)]
    pub stability: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_kappa() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_tol() -> f64 {
    1e-12
}

fn default_prefactor() -> f64 {
    0.5
}

/// A rejected configuration, with the field it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

pub fn bad(field: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError { field: field.into(), message: message.to_string() }
}

/// Accepts `i`, `2.5i`, `-3i`, or `re,im`.
pub fn parse_kappa(s: &str) -> Result<[f64; 2], ConfigError> {
    let t = s.trim();
    if let Some(im) = t.strip_suffix('i') {
        let v = match im.trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            x => x.parse().map_err(|_| bad("kappa", format!("cannot read `{s}`")))?,
        };
        return Ok([0.0, v]);
    }
    let parts: Vec<&str> = t.split(',').collect();
    match parts.as_slice() {
        [re, im] => {
            let re = re.trim().parse().map_err(|_| bad("kappa", format!("cannot read `{s}`")))?;
            let im = im.trim().parse().map_err(|_| bad("kappa", format!("cannot read `{s}`")))?;
            Ok([re, im])
        }
        _ => Err(bad("kappa", format!("expected `3i` or `re,im`, got `{s}`"))),
    }
}

pub fn parse_list(field: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    s.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| bad(field, format!("cannot read `{x}` as a number"))))
        .collect()
}

impl RunConfig {
    pub fn new(task: Task) -> Self {
        serde_json::from_value(serde_json::json!({ "task": task })).expect("defaults deserialize")
    }

    /// Reads a config file, or the config echo of a report.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| bad("<file>", e))?;
        let inner = if value.get("schema").is_some() { value.get("config").cloned().unwrap_or(value) } else { value };
        serde_json::from_value(inner).map_err(|e| bad("<file>", e))
    }

    pub fn kappa(&self) -> C64 {
        c(self.kappa[0], self.kappa[1])
    }

    pub fn v_spec(&self) -> Result<RepSpec, ConfigError> {
        match &self.v {
            Some(v) => v.parse().map_err(|e| bad("v", e)),
            None => Ok(RepSpec::Adjoint(self.n.unwrap_or(2))),
        }
    }

    pub fn w_spec(&self) -> Result<Option<RepSpec>, ConfigError> {
        self.w.as_ref().map(|w| w.parse().map_err(|e| bad("w", e))).transpose()
    }

    /// Fills defaults that depend on other fields and checks every field.
    pub fn validate(&mut self) -> Result<Model, ConfigError> {
        let v = self.v_spec()?;
        let n = v.rank();
        if let Some(k) = self.n {
            if k != n {
                return Err(bad("n", format!("n = {k} but V = {v} is a gl_{n} module")));
            }
        }
        self.v = Some(v.to_string());
        let w = self.w_spec()?;
        if let Some(w) = &w {
            if w.rank() != n {
                return Err(bad("w", format!("W = {w} is not a gl_{n} module")));
            }
        }
        let u = self.u.clone().unwrap_or_else(|| (0..n).map(|i| n as f64 - 1.0 - 2.0 * i as f64).collect());
        if u.len() != n {
            return Err(bad("u", format!("{} entries for gl_{n}", u.len())));
        }
        self.u = Some(u.clone());
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(bad("tol", "must lie in (0, 1)"));
        }
        if let Some(m) = self.integrator.m {
            if m == 0 || m > 200 {
                return Err(bad("integrator.m", "must lie in 1..=200"));
            }
        }
        if let Some(r) = self.integrator.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(bad("integrator.R", "must be positive"));
            }
        }
        if let Some(r) = self.integrator.rtol {
            if !(r > 0.0 && r < 1e-3) {
                return Err(bad("integrator.rtol", "must lie in (0, 1e-3)"));
            }
        }
        if let Some(p) = self.points {
            if p == 0 || p > 4 {
                return Err(bad("points", "must lie in 1..=4"));
            }
        }
        if self.samples == Some(0) {
            return Err(bad("samples", "must be positive"));
        }
        for (k, t) in &self.thresholds {
            if !(*t >= 0.0) {
                return Err(bad(&format!("thresholds.{k}"), "must be non-negative"));
            }
        }
        let model = Model::new(w, v, u, self.kappa()).map_err(|e| {
            let field = match e {
                gckz_core::Error::IrregularU => "u",
                gckz_core::Error::Kappa(_) => "kappa",
                _ => "model",
            };
            bad(field, e)
        })?;
        Ok(model)
    }

    pub fn stokes_settings(&self) -> StokesSettings {
        let mut s = StokesSettings::with_tol(self.tol);
        if let Some(m) = self.integrator.m {
            s.sector.m = m;
        }
        if let Some(r) = self.integrator.radius {
            s.sector.radius = r;
        }
        if let Some(k) = self.integrator.max_steps {
            s.sector.solver.max_steps = k;
            s.frobenius.solver.max_steps = k;
        }
        if let Some(r) = self.integrator.rtol {
            s.sector.solver.rtol = r;
            s.frobenius.solver.rtol = r;
        }
        s.ledger = self.conventions.ledger;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_forms() {
        assert_eq!(parse_kappa("i").unwrap(), [0.0, 1.0]);
        assert_eq!(parse_kappa("-2.5i").unwrap(), [0.0, -2.5]);
        assert_eq!(parse_kappa("0, 3").unwrap(), [0.0, 3.0]);
        assert!(parse_kappa("three").is_err());
    }

    #[test]
    fn defaults_and_validation() {
        let mut cfg = RunConfig::new(Task::Stokes);
        let m = cfg.validate().unwrap();
        assert_eq!(m.u, vec![1.0, -1.0]);
        assert_eq!(cfg.v.as_deref(), Some("adjoint(2)"));
        let mut bad_u = RunConfig { u: Some(vec![1.0, 1.0]), ..RunConfig::new(Task::Stokes) };
        let e = bad_u.validate().unwrap_err();
        assert_eq!(e.field, "u");
        assert!(e.to_string().contains("u must be regular"));
        let mut bad_n = RunConfig { n: Some(3), v: Some("adjoint(2)".into()), ..RunConfig::new(Task::Stokes) };
        assert_eq!(bad_n.validate().unwrap_err().field, "n");
        let mut real_kappa = RunConfig { kappa: [1.0, 0.0], ..RunConfig::new(Task::Stokes) };
        assert_eq!(real_kappa.validate().unwrap_err().field, "kappa");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::from_json(r#"{"task": "stokes", "kapa": [0, 1]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"task": "nope"}"#).is_err());
        let c = RunConfig::from_json(r#"{"schema": 1, "config": {"task": "braid", "points": 3}}"#).unwrap();
        assert_eq!(c.points, Some(3));
    }
}
