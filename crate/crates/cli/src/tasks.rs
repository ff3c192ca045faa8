use std::collections::BTreeMap;
use std::time::Instant;

use gckz_core::braid::{braid_representation, compare_with_stokes, verify_braid_relations, BraidSettings, BraidWord};
use gckz_core::gckz::{y_xi, DomainLabel, PfaffianSystem, YForm};
use gckz_core::isomono::{calibrate, verify_transport, DeformationPath};
use gckz_core::mat::{c, to_pairs, CMat, C64};
use gckz_core::model::Model;
use gckz_core::odeflow::Dop853;
use gckz_core::reps::{identity_suite, Tensor};
use gckz_core::stokes::{
    gckz_stokes, oracle_agreement, reflection_braid_form, verify_reflection, verify_side_relations, StokesPack, Target,
};
use gckz_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{bad, ConfigError, RunConfig, Task};

pub const SCHEMA: u32 = 1;

/// What went wrong, sorted by exit code.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::IrregularU
            | Error::Kappa(_)
            | Error::Dimension(_)
            | Error::MissingTau(_)
            | Error::Slot { .. }
            | Error::SlotKind(_)
            | Error::NoRoots
            | Error::Domain(_)
            | Error::Divisor(_) => Failure::Config(bad("model", e)),
            e => Failure::Numerical(e),
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub matrices: BTreeMap<String, CMat>,
    pub residuals: BTreeMap<String, f64>,
    /// Residuals gated by default; the config may add or override entries.
    pub thresholds: BTreeMap<String, f64>,
    pub ledger: BTreeMap<String, Value>,
    pub info: BTreeMap<String, Value>,
}

impl Outcome {
    fn gate(&mut self, name: &str, limit: f64) {
        self.thresholds.insert(name.to_string(), limit);
    }

    fn absorb(&mut self, prefix: &str, map: BTreeMap<String, f64>) {
        for (k, v) in map {
            self.residuals.insert(format!("{prefix}{k}"), v);
        }
    }
}

pub struct Report {
    pub json: Value,
    pub passed: bool,
}

pub fn run(mut cfg: RunConfig) -> Result<Report, Failure> {
    let model = cfg.validate()?;
    let start = Instant::now();
    let mut out = match cfg.task {
        Task::Tensors => tensors(&cfg, &model)?,
        Task::Stokes => stokes(&cfg, &model)?,
        Task::Verify => verify(&cfg, &model)?,
        Task::Braid => braid(&cfg, &model)?,
        Task::Isomono => isomono(&cfg, &model)?,
        Task::Flatness => flatness(&cfg, &model)?,
        Task::Oracle => oracle(&cfg, &model)?,
    };
    let seconds = start.elapsed().as_secs_f64();
    for (k, v) in &cfg.thresholds {
        out.thresholds.insert(k.clone(), *v);
    }
    let mut failed = Vec::new();
    for (k, limit) in &out.thresholds {
        match out.residuals.get(k) {
            None => return Err(bad(&format!("thresholds.{k}"), "no residual of that name in this task").into()),
            Some(r) if !(r <= limit) => failed.push(k.clone()),
            Some(_) => {}
        }
    }
    out.ledger.insert("ledger".into(), json!(cfg.conventions.ledger));
    out.ledger.insert("continuation".into(), json!(cfg.conventions.ledger.describe()));
    let matrices: BTreeMap<&String, _> = out.matrices.iter().map(|(k, m)| (k, to_pairs(m))).collect();
    let json = json!({
        "schema": SCHEMA,
        "tool": { "name": "gckz", "version": env!("CARGO_PKG_VERSION") },
        "task": cfg.task,
        "config": cfg,
        "ledger": out.ledger,
        "matrices": matrices,
        "residuals": finite(&out.residuals),
        "thresholds": out.thresholds,
        "failed": failed,
        "info": out.info,
        "timing": { "seconds": seconds },
    });
    Ok(Report { json, passed: failed.is_empty() })
}

/// JSON has no infinities or NaN; those are written as strings.
fn finite(map: &BTreeMap<String, f64>) -> BTreeMap<String, Value> {
    map.iter().map(|(k, v)| (k.clone(), if v.is_finite() { json!(v) } else { json!(v.to_string()) })).collect()
}

fn targets(cfg: &RunConfig) -> Vec<Target> {
    cfg.targets.clone().unwrap_or_else(|| vec![Target::S, Target::K])
}

fn tensors(_cfg: &RunConfig, model: &Model) -> Result<Outcome, Failure> {
    let mut out = Outcome::default();
    let n = model.n();
    if n >= 2 {
        out.absorb("identity.", identity_suite(n)?);
        for k in ["tau_omega", "omega_split", "ck_roots", "omega_invariance", "root_pairing"] {
            out.gate(&format!("identity.{k}"), 1e-11);
        }
    }
    let v = model.v_rep()?;
    out.residuals.insert("v.homomorphism".into(), v.homomorphism_residual());
    out.gate("v.homomorphism", 1e-11);
    if v.has_tau() {
        out.residuals.insert("v.tau".into(), v.tau_residual()?);
        out.gate("v.tau", 1e-11);
    }
    if let Some(w) = model.w_module()? {
        out.residuals.insert("w.bracket".into(), w.bracket_residual());
        out.gate("w.bracket", 1e-11);
    }
    let vv = model.v_space(2)?;
    out.matrices.insert("Omega".into(), vv.realize(&Tensor::Omega, &[1, 2])?);
    out.matrices.insert("Omega_k".into(), vv.realize(&Tensor::OmegaK, &[1, 2])?);
    let wv = model.space(1)?;
    out.matrices.insert("W_Omega_k".into(), wv.realize(&Tensor::OmegaK, &[0, 1])?);
    out.matrices.insert("C_k".into(), wv.realize(&Tensor::CK, &[1])?);
    out.matrices.insert("C_0".into(), wv.realize(&Tensor::C0, &[1])?);
    out.info.insert("form".into(), json!("trace"));
    Ok(out)
}

fn pack_into(out: &mut Outcome, name: &str, pack: &StokesPack) {
    out.matrices.insert(name.to_string(), pack.s.clone());
    out.matrices.insert(format!("{name}_minus"), pack.s_minus.clone());
    out.matrices.insert(format!("{name}_exponent"), pack.exponent.clone());
    out.absorb(&format!("{name}."), pack.residuals.clone());
    if !pack.warnings.is_empty() {
        out.info.insert(format!("{name}.warnings"), json!(pack.warnings));
    }
    out.info.insert(format!("{name}.R"), json!(pack.params.radius));
    out.info.insert(format!("{name}.m"), json!(pack.params.m));
}

fn stokes(cfg: &RunConfig, model: &Model) -> Result<Outcome, Failure> {
    let st = cfg.stokes_settings();
    let mut out = Outcome::default();
    for t in targets(cfg) {
        let pack = gckz_stokes(t, model, &st)?;
        let name = if t == Target::S { "S" } else { "K" };
        pack_into(&mut out, name, &pack);
        if t == Target::S {
            out.gate("S.ybe", 1e-8);
        }
        out.gate(&format!("{name}.det_monodromy_inverse"), 1e-8);
        if cfg.stability {
            out.residuals.insert(format!("{name}.stability"), pack.stability(&st)?);
            out.gate(&format!("{name}.stability"), 10.0 * cfg.tol.max(st.sector.solver.rtol));
        }
    }
    Ok(out)
}

fn verify(cfg: &RunConfig, model: &Model) -> Result<Outcome, Failure> {
    let st = cfg.stokes_settings();
    let mut out = Outcome::default();
    let ps = gckz_stokes(Target::S, model, &st)?;
    let pk = gckz_stokes(Target::K, model, &st)?;
    pack_into(&mut out, "S", &ps);
    pack_into(&mut out, "K", &pk);
    let tau = model.v_rep()?.tau_op()?.clone();
    out.residuals.insert("reflection".into(), verify_reflection(&pk.s, &ps.s, &tau, cfg.conventions.s_tau)?);
    // the b-loops see the two-point system at 2u, the σ-loop the boundary system at u
    let doubled: Vec<f64> = model.u.iter().map(|x| 2.0 * x).collect();
    let ps2 = gckz_stokes(Target::S, &model.with_u(doubled), &st)?;
    out.residuals.insert("reflection_braid_form".into(), reflection_braid_form(&pk.tilde(), &ps2.tilde(), &tau)?);
    out.absorb("side.", verify_side_relations(&ps, &pk, &st)?);
    out.ledger.insert("s_tau".into(), json!(cfg.conventions.s_tau));
    out.info.insert(
        "printed_forms".into(),
        json!("reflection, side.a_printed and side.b_printed are the relations as usually displayed; they are reported, not gated"),
    );
    for k in ["S.ybe", "reflection_braid_form", "side.a_flip", "side.b_plain", "side.c_s_ledger_form", "side.c_k_ledger_form"] {
        out.gate(k, 1e-8);
    }
    Ok(out)
}

fn braid(cfg: &RunConfig, model: &Model) -> Result<Outcome, Failure> {
    let points = cfg.points.unwrap_or(2);
    let sys = PfaffianSystem::new(model, points)?;
    let basepoint = cfg.basepoint.clone().unwrap_or_else(|| (1..=points).map(|i| i as f64).collect());
    if basepoint.len() != points {
        return Err(bad("basepoint", format!("{} entries for {points} points", basepoint.len())).into());
    }
    let mut settings = BraidSettings::default();
    settings.solver.rtol = cfg.integrator.rtol.unwrap_or(settings.solver.rtol);
    if let Some(k) = cfg.integrator.max_steps {
        settings.solver.max_steps = k;
    }
    let words = cfg
        .words
        .iter()
        .map(|w| w.parse::<BraidWord>().map_err(|e| bad("words", e)))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = braid_representation(&sys, &basepoint, &settings)?;
    let mut out = Outcome::default();
    out.matrices.insert("s".into(), rep.sigma.clone());
    for (i, b) in rep.b.iter().enumerate() {
        out.matrices.insert(format!("b{}", i + 1), b.clone());
    }
    for (w, word) in cfg.words.iter().zip(&words) {
        out.matrices.insert(format!("word:{w}"), rep.evaluate(word)?);
    }
    let relations = verify_braid_relations(&rep);
    for k in relations.keys().filter(|k| !k.ends_with("_relative")) {
        out.gate(&format!("relation.{k}"), 1e-6);
    }
    out.absorb("relation.", relations);
    if points == 2 {
        let st = cfg.stokes_settings();
        let ps = gckz_stokes(Target::S, model, &st)?;
        let pk = gckz_stokes(Target::K, model, &st)?;
        out.absorb("stokes.", compare_with_stokes(&rep, &sys, &ps, &pk)?);
        out.gate("stokes.s_charpoly", 1e-5);
        out.gate("stokes.b1_charpoly", 1e-5);
    }
    out.ledger.insert("holonomy".into(), json!(rep.convention));
    out.ledger.insert("basepoint".into(), json!(basepoint));
    out.ledger.insert("loop_reach".into(), json!(settings.reach));
    Ok(out)
}

fn isomono(cfg: &RunConfig, model: &Model) -> Result<Outcome, Failure> {
    let st = cfg.stokes_settings();
    let waypoints = cfg.path.clone().unwrap_or_else(|| {
        let mut u1 = model.u.clone();
        u1[0] += 1.0;
        vec![model.u.clone(), u1]
    });
    if waypoints.len() < 2 || waypoints.iter().any(|w| w.len() != model.n()) {
        return Err(bad("path", "needs at least two waypoints with one entry per diagonal slot").into());
    }
    let path = DeformationPath { waypoints };
    path.gap().map_err(|e| bad("path", e))?;
    let first = &path.waypoints[0];
    let direction: Vec<f64> = path.waypoints[1].iter().zip(first).map(|(b, a)| b - a).collect();
    let solver = Dop853::with_rtol(cfg.integrator.rtol.unwrap_or(1e-13));
    let mut out = Outcome::default();
    for t in targets(cfg) {
        let name = if t == Target::S { "S" } else { "K" };
        let cal = calibrate(&model.with_u(first.clone()), t, &direction, &st, 1e-4)?;
        let prefactor = match cal.c {
            Some([re, _]) => {
                out.residuals.insert(format!("{name}.fit"), cal.fit_residual);
                out.gate(&format!("{name}.fit"), 1e-4);
                re
            }
            None => cfg.prefactor,
        };
        out.ledger.insert(format!("{name}.prefactor"), json!({ "c": cal.c, "used": prefactor, "fit_residual": cal.fit_residual }));
        let r = verify_transport(model, &path, t, prefactor, &st, &solver)?;
        for (k, v) in [
            ("distance", r.distance),
            ("det_drift", r.det_drift),
            ("charpoly_drift", r.charpoly_drift),
            ("spectrum_drift", r.spectrum_drift),
            ("conjugacy", r.conjugacy),
        ] {
            out.residuals.insert(format!("{name}.{k}"), v);
        }
        out.gate(&format!("{name}.distance"), 1e-6);
        out.gate(&format!("{name}.det_drift"), 1e-10);
        out.gate(&format!("{name}.charpoly_drift"), 1e-8);
    }
    Ok(out)
}

/// Uniform point in the box [−2, 2]² per coordinate, away from every divisor.
fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    loop {
        let z: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
        if gckz_core::gckz::divisor_distance(&z) > 0.1 {
            return z;
        }
    }
}

/// ξ in D_k (k = 0 or 1): increasing positive entries, the (k, k+1) pair swapped.
fn random_xi(rng: &mut ChaCha8Rng, n: usize, k: i32) -> Vec<f64> {
    let mut xi: Vec<f64> = Vec::with_capacity(n);
    let mut x = 0.0;
    for _ in 0..n {
        x += rng.gen_range(0.2..1.0);
        xi.push(x);
    }
    if k >= 1 {
        xi.swap(k as usize - 1, k as usize);
    }
    xi
}

fn flatness(cfg: &RunConfig, model: &Model) -> Result<Outcome, Failure> {
    let points = cfg.points.unwrap_or(2);
    let sys = PfaffianSystem::new(model, points)?;
    let samples = cfg.samples.unwrap_or(20);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut flat, mut equi) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let z = random_point(&mut rng, points);
        flat = flat.max(sys.flatness_residual(&z)?);
        equi = equi.max(sys.equivariance_residual(&z)?);
    }
    let mut out = Outcome::default();
    out.residuals.insert("flatness".into(), flat);
    out.residuals.insert("equivariance".into(), equi);
    out.gate("flatness", 1e-10);
    out.gate("equivariance", 1e-10);
    let chambers: Vec<i32> = if points >= 2 { vec![0, 1] } else { vec![0] };
    for form in [YForm::Corrected, YForm::Printed] {
        let key = match form {
            YForm::Corrected => "y_xi",
            YForm::Printed => "y_xi_printed",
        };
        let mut worst = 0.0f64;
        for &k in &chambers {
            for _ in 0..samples.min(10) {
                let xi = random_xi(&mut rng, points, k);
                DomainLabel(k).check(&xi)?;
                worst = worst.max(y_xi(&sys, &xi, form)?.1);
            }
        }
        out.residuals.insert(key.into(), worst);
    }
    out.gate("y_xi", 1e-12);
    out.ledger.insert("y_form".into(), json!(cfg.conventions.y_form));
    out.info.insert("samples".into(), json!(samples));
    out.info.insert("seed".into(), json!(cfg.seed));
    Ok(out)
}

fn oracle(cfg: &RunConfig, _model: &Model) -> Result<Outcome, Failure> {
    let st = cfg.stokes_settings();
    let samples = cfg.samples.unwrap_or(10);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    let mut cases = Vec::new();
    for _ in 0..samples {
        let (u, a0) = random_2x2(&mut rng);
        let gap = oracle_agreement(u, &a0, &st)?;
        worst = worst.max(gap);
        cases.push(json!({ "u": [[u[0].re, u[0].im], [u[1].re, u[1].im]], "a0": to_pairs(&a0), "gap": gap }));
    }
    let mut out = Outcome::default();
    out.residuals.insert("oracle".into(), worst);
    out.gate("oracle", 1e-8);
    out.info.insert("cases".into(), json!(cases));
    Ok(out)
}

/// u = i·(a, b) with |a − b| ≥ 0.5, and A0 with entries of size ≤ 0.4.
pub fn random_2x2(rng: &mut ChaCha8Rng) -> ([C64; 2], CMat) {
    let a = rng.gen_range(0.5..1.5);
    let b = -rng.gen_range(0.0..1.0);
    let u = [c(0.0, a), c(0.0, b)];
    let a0 = CMat::from_fn(2, 2, |_, _| c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)));
    (u, a0)
}
