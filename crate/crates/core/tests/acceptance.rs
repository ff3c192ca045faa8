//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria whose displayed identity does not hold numerically are listed in
//! KNOWN_RED. They print FAIL with the measured value and, as info lines, the
//! forms that do hold. The process exits non-zero only when a criterion outside
//! that list fails.

use std::collections::BTreeMap;
use std::time::Instant;

use gckz_core::braid::{braid_representation, compare_with_stokes, verify_braid_relations, BraidRep, BraidSettings};
use gckz_core::gckz::{divisor_distance, fk_xi_residual, fk_z_residual, y_xi, DomainLabel, FkSettings, PfaffianSystem, YForm};
use gckz_core::isomono::{calibrate, verify_transport, DeformationPath};
use gckz_core::mat::{c, CMat, C64};
use gckz_core::model::Model;
use gckz_core::odeflow::{formal_fundamental, Dop853};
use gckz_core::reps::identity_suite;
use gckz_core::stokes::{
    gckz_stokes, oracle_agreement, reflection_braid_form, stokes_system, verify_reflection, verify_side_relations, STau,
    StokesSettings, Target,
};
use gckz_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_RED: [u32; 4] = [5, 6, 8, 9];

struct Verdict {
    pass: bool,
    summary: String,
    info: Vec<String>,
}

fn verdict(pass: bool, summary: String) -> Verdict {
    Verdict { pass, summary, info: Vec::new() }
}

fn model(w: Option<&str>, v: &str, u: &[f64]) -> Model {
    Model::new(w.map(|s| s.parse().unwrap()), v.parse().unwrap(), u.to_vec(), c(0.0, 1.0)).unwrap()
}

fn worst(map: &BTreeMap<String, f64>, keep: impl Fn(&str) -> bool) -> (f64, String) {
    map.iter().filter(|(k, _)| keep(k)).fold((0.0, String::new()), |acc, (k, &v)| if v > acc.0 { (v, k.clone()) } else { acc })
}

fn c1() -> Result<Verdict> {
    let mut top = (0.0f64, String::new());
    for n in 2..=4 {
        let (r, k) = worst(&identity_suite(n)?, |_| true);
        if r >= top.0 {
            top = (r, format!("{k} at n = {n}"));
        }
    }
    Ok(verdict(top.0 <= 1e-11, format!("identity residual {:.1e} ({}) (limit 1e-11)", top.0, top.1)))
}

fn c2() -> Result<Verdict> {
    let m = model(Some("defining(2)"), "adjoint(2)", &[1.0, -1.0]);
    let mut top = 0.0f64;
    let mut info = Vec::new();
    for t in [Target::S, Target::K] {
        let (sys, _) = stokes_system(t, &m)?;
        let r = formal_fundamental(&sys, 12)?.residual(&sys);
        info.push(format!("{t:?}: {r:.1e}"));
        top = top.max(r);
    }
    Ok(verdict(top <= 1e-10, format!("re-substitution residual m = 12: {} (limit 1e-10)", info.join(", "))))
}

fn c3() -> Result<Verdict> {
    let st = StokesSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut top = 0.0f64;
    for _ in 0..10 {
        let u = [c(0.0, rng.gen_range(0.5..1.5)), c(0.0, -rng.gen_range(0.0..1.0))];
        let a0 = CMat::from_fn(2, 2, |_, _| c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)));
        top = top.max(oracle_agreement(u, &a0, &st)?);
    }
    Ok(verdict(top <= 1e-8, format!("10 random 2x2 systems, worst entrywise gap {top:.1e} (limit 1e-8)")))
}

fn c4() -> Result<Verdict> {
    let st = StokesSettings::default();
    let mut top = 0.0f64;
    let mut info = Vec::new();
    for (v, u) in [("adjoint(2)", vec![1.0, -1.0]), ("tau_double(defining(2))", vec![1.0, -1.0]), ("adjoint(3)", vec![1.0, 0.0, -1.0])] {
        let p = gckz_stokes(Target::S, &model(None, v, &u), &st)?;
        top = top.max(p.residuals["ybe"]);
        info.push(format!("{v}: {:.1e} (relative to the larger side {:.1e})", p.residuals["ybe"], p.residuals["ybe_relative"]));
    }
    let mut out = verdict(top <= 1e-8, format!("YBE residual / |S|^3, worst {top:.1e} (limit 1e-8)"));
    out.info = info;
    Ok(out)
}

fn c5() -> Result<Verdict> {
    let st = StokesSettings::default();
    let u = [1.0, -1.0];
    let mut top = 0.0f64;
    let mut info = Vec::new();
    for w in [None, Some("defining(2)")] {
        let m = model(w, "adjoint(2)", &u);
        let tau = m.v_rep()?.tau_op()?.clone();
        let ps = gckz_stokes(Target::S, &m, &st)?;
        let pk = gckz_stokes(Target::K, &m, &st)?;
        let r = verify_reflection(&pk.s, &ps.s, &tau, STau::Conjugate)?;
        let left = verify_reflection(&pk.s, &ps.s, &tau, STau::Left)?;
        let ps2 = gckz_stokes(Target::S, &m.with_u(vec![2.0, -2.0]), &st)?;
        let braid = reflection_braid_form(&pk.tilde(), &ps2.tilde(), &tau)?;
        let name = w.unwrap_or("trivial");
        top = top.max(r);
        info.push(format!("W = {name}: conjugation convention {r:.1e}, left-multiplication convention {left:.1e}"));
        info.push(format!("W = {name}: braid-derived form with K~ at u and S~ at 2u holds to {braid:.1e}"));
    }
    let mut out = verdict(top <= 1e-8, format!("reflection equation as displayed, S_tau by conjugation: {top:.1e} (limit 1e-8)"));
    out.info = info;
    Ok(out)
}

fn c6() -> Result<Verdict> {
    let st = StokesSettings::default();
    let m = model(Some("defining(2)"), "adjoint(2)", &[1.0, -1.0]);
    let ps = gckz_stokes(Target::S, &m, &st)?;
    let pk = gckz_stokes(Target::K, &m, &st)?;
    let side = verify_side_relations(&ps, &pk, &st)?;
    let (a, b, mono) = (side["a_printed"], side["b_printed"], side["c_s_spectrum"].max(side["c_k_spectrum"]));
    let pass = a <= 1e-8 && b <= 1e-8 && mono <= 1e-8;
    let mut out = verdict(pass, format!("(tau x tau)S = S: {a:.1e}; K = -(id x tau)K_-^-1: {b:.1e}; monodromy spectrum: {mono:.1e}; limit 1e-8 each"));
    out.info = vec![
        format!("(tau x tau)S = S^21 holds to {:.1e}, (tau x tau)S = S_- to {:.1e}", side["a_flip"], side["a_minus"]),
        format!("K = (id x tau)K_- holds to {:.1e}", side["b_plain"]),
        format!(
            "C e^(-2 pi i A0) C^-1 = X X2 holds entrywise to {:.1e} (S) and {:.1e} (K)",
            side["c_s_ledger_form"], side["c_k_ledger_form"]
        ),
        format!("monodromy with S_- S entrywise: {:.1e} (S), {:.1e} (K)", side["c_s_entrywise"], side["c_k_entrywise"]),
    ];
    Ok(out)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    loop {
        let z: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
        if divisor_distance(&z) > 0.1 {
            return z;
        }
    }
}

fn c7() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = model(Some("defining(2)"), "adjoint(2)", &[1.0, -1.0]);
    let mut top = 0.0f64;
    for n in [2, 3] {
        let sys = PfaffianSystem::new(&m, n)?;
        for _ in 0..20 {
            top = top.max(sys.flatness_residual(&random_point(&mut rng, n))?);
        }
    }
    Ok(verdict(top <= 1e-10, format!("flatness at 20 points for n = 2, 3: {top:.1e} (limit 1e-10)")))
}

fn c8() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sys = PfaffianSystem::new(&model(Some("defining(2)"), "adjoint(2)", &[1.0, -1.0]), 2)?;
    let (mut printed, mut corrected) = (0.0f64, 0.0f64);
    for k in [0, 1] {
        for _ in 0..10 {
            let a = rng.gen_range(0.2..1.5);
            let b = a + rng.gen_range(0.2..1.5);
            let xi = if k == 0 { vec![a, b] } else { vec![b, a] };
            DomainLabel(k).check(&xi)?;
            printed = printed.max(y_xi(&sys, &xi, YForm::Printed)?.1);
            corrected = corrected.max(y_xi(&sys, &xi, YForm::Corrected)?.1);
        }
    }
    let mut out = verdict(printed <= 1e-12, format!("commutator identity of Y(xi) as displayed, D0 and D1: {printed:.1e} (limit 1e-12)"));
    out.info = vec![format!(
        "tau on the second leg of the (xi_i + xi_j) term, -1/2 (C_k,a - C_a) point term and right side sum(C_k - C0/2): {corrected:.1e}"
    )];
    Ok(out)
}

fn c9() -> Result<Verdict> {
    let sys = PfaffianSystem::new(&model(Some("defining(2)"), "adjoint(2)", &[1.0, -1.0]), 2)?;
    let zs = [c(0.9, 0.4), c(1.3, -0.6)];
    let cases = [(0, [0.7, 1.6]), (1, [1.6, 0.7]), (-1, [-0.7, 1.6])];
    let mut summary = Vec::new();
    let mut info = Vec::new();
    let mut pass = true;
    for form in [YForm::Printed, YForm::Corrected] {
        let st = FkSettings { form, ..FkSettings::default() };
        let (mut rz, mut rx) = (0.0f64, 0.0f64);
        for (k, xi) in cases {
            rz = rz.max(fk_z_residual(&sys, DomainLabel(k), &xi, &zs, 1e-3, &st)?.0);
            rx = rx.max(fk_xi_residual(&sys, DomainLabel(k), &xi, zs[0], 1e-5, &st)?);
        }
        match form {
            YForm::Printed => {
                pass = rz <= 1e-6 && rx <= 1e-6;
                summary.push(format!("F_k as displayed, k = 0, 1, -1: z {rz:.1e}, xi {rx:.1e}; limit 1e-6 each"));
            }
            YForm::Corrected => info.push(format!("with C0/2 in G_k and T_-1: z {rz:.1e}, xi {rx:.1e}")),
        }
    }
    let mut out = verdict(pass, summary.join(""));
    out.info = info;
    Ok(out)
}

fn braid_at(w: Option<&str>, v: &str, basepoint: &[f64]) -> Result<(PfaffianSystem, BraidRep)> {
    let u: Vec<f64> = vec![1.0, -1.0];
    let sys = PfaffianSystem::new(&model(w, v, &u), basepoint.len())?;
    let rep = braid_representation(&sys, basepoint, &BraidSettings::default())?;
    Ok((sys, rep))
}

fn c10() -> Result<Verdict> {
    let mut top = (0.0f64, String::new());
    let mut info = Vec::new();
    for (w, bp) in [(Some("defining(2)"), vec![1.0, 2.0]), (None, vec![1.0, 2.0, 3.0])] {
        let (sys, rep) = braid_at(w, "adjoint(2)", &bp)?;
        let rel = verify_braid_relations(&rep);
        let (r, k) = worst(&rel, |k| !k.ends_with("_relative"));
        let (rr, _) = worst(&rel, |k| k.ends_with("_relative"));
        if r >= top.0 {
            top = (r, format!("{k}, n = {}", bp.len()));
        }
        info.push(format!("n = {}, dim {}: normalized {r:.1e}, relative to the sides {rr:.1e}", bp.len(), sys.dim()));
    }
    let mut out = verdict(top.0 <= 1e-6, format!("type-B relations / product of factor norms, worst {:.1e} ({}) (limit 1e-6)", top.0, top.1));
    out.info = info;
    Ok(out)
}

fn c11() -> Result<Verdict> {
    let st = StokesSettings::default();
    let mut top = 0.0f64;
    let mut info = Vec::new();
    for w in [None, Some("defining(2)")] {
        let (sys, rep) = braid_at(w, "adjoint(2)", &[1.0, 20.0])?;
        let ps = gckz_stokes(Target::S, &sys.model, &st)?;
        let pk = gckz_stokes(Target::K, &sys.model, &st)?;
        let cmp = compare_with_stokes(&rep, &sys, &ps, &pk)?;
        let (s, b) = (cmp["s_charpoly"], cmp["b1_charpoly"]);
        top = top.max(s).max(b);
        info.push(format!("W = {}: sigma vs T K {s:.1e}, b1 vs s1 S {b:.1e}", w.unwrap_or("trivial")));
    }
    let mut out = verdict(top <= 1e-5, format!("char-poly distance at basepoint (1, 20): {top:.1e} (limit 1e-5)"));
    out.info = info;
    Ok(out)
}

fn c12() -> Result<Verdict> {
    let st = StokesSettings::default();
    let solver = Dop853::with_rtol(1e-13);
    let path = DeformationPath::segment(&[1.0, -1.0], &[2.0, -1.0]);
    let cases = [(Target::S, None), (Target::K, Some("defining(2)"))];
    let cal = calibrate(&model(None, "adjoint(2)", &[1.0, -1.0]), Target::S, &[1.0, 0.0], &st, 1e-4)?;
    let c_fit = cal.c.expect("S moves with u")[0];
    let mut info = vec![format!("c = {c_fit:.9} from target S, fit residual {:.1e}", cal.fit_residual)];
    let (mut dist, mut spec) = (0.0f64, 0.0f64);
    for (t, w) in cases {
        let m = model(w, "adjoint(2)", &[1.0, -1.0]);
        if t == Target::K {
            let ck = calibrate(&m, t, &[1.0, 0.0], &st, 1e-4)?;
            info.push(format!("K alone would give c = {:.9}, fit residual {:.1e}", ck.c.unwrap_or([f64::NAN; 2])[0], ck.fit_residual));
        }
        let r = verify_transport(&m, &path, t, c_fit, &st, &solver)?;
        dist = dist.max(r.distance);
        spec = spec.max(r.charpoly_drift).max(r.det_drift);
        info.push(format!(
            "{t:?}: distance {:.1e}, char-poly drift {:.1e}, det drift {:.1e}, |M1 G - G M0| {:.1e}, eigenvalue matching {:.1e}",
            r.distance, r.charpoly_drift, r.det_drift, r.conjugacy, r.spectrum_drift
        ));
    }
    let pass = cal.fit_residual < 1e-4 && dist <= 1e-6 && spec <= 1e-8;
    let mut out = verdict(pass, format!("fit {:.1e} (limit 1e-4); transport distance {dist:.1e} (limit 1e-6); char-poly drift {spec:.1e} (limit 1e-8)", cal.fit_residual));
    out.info = info;
    Ok(out)
}

fn c13() -> Result<Verdict> {
    let tol = 1e-10;
    let st = StokesSettings::with_tol(tol);
    let m = model(Some("defining(2)"), "adjoint(2)", &[1.0, -1.0]);
    let mut stab = 0.0f64;
    let mut identical = true;
    for t in [Target::S, Target::K] {
        let p = gckz_stokes(t, &m, &st)?;
        stab = stab.max(p.stability(&st)?);
        let q = gckz_stokes(t, &m, &st)?;
        identical &= p.s == q.s && p.s_minus == q.s_minus && p.exponent == q.exponent;
    }
    let (_, r1) = braid_at(Some("defining(2)"), "adjoint(2)", &[1.0, 2.0])?;
    let (_, r2) = braid_at(Some("defining(2)"), "adjoint(2)", &[1.0, 2.0])?;
    identical &= r1.sigma == r2.sigma && r1.b == r2.b;
    let fine = StokesSettings::default();
    let p = gckz_stokes(Target::S, &m, &fine)?;
    let floor = p.stability(&fine)?;
    let mut out = verdict(
        stab <= 10.0 * tol && identical,
        format!("tol = {tol:.0e}: change under 2R, m + 4 is {stab:.1e} (limit {:.0e}); reruns bit-identical: {identical}", 10.0 * tol),
    );
    out.info = vec![format!("at tol = 1e-12 the same change is {floor:.1e} (relative to max|S| = {:.1e})", p.s.iter().fold(0.0f64, |a, z| a.max(z.norm())))];
    Ok(out)
}

fn main() {
    let criteria: [(u32, &str, fn() -> Result<Verdict>); 13] = [
        (1, "algebraic identities", c1),
        (2, "formal solution", c2),
        (3, "2x2 oracle", c3),
        (4, "Yang-Baxter", c4),
        (5, "reflection equation", c5),
        (6, "side relations", c6),
        (7, "flatness", c7),
        (8, "Y(xi) identity", c8),
        (9, "canonical solutions", c9),
        (10, "braid relations", c10),
        (11, "holonomy vs Stokes", c11),
        (12, "isomonodromic transport", c12),
        (13, "self-consistency", c13),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut unexpected = Vec::new();
    let (mut passed, mut failed) = (0, 0);
    for (id, name, run) in criteria {
        if only.is_some_and(|k| k != id) {
            continue;
        }
        let start = Instant::now();
        let v = run().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name}: {} [{secs:.1} s]", v.summary);
        for line in &v.info {
            println!("    info: {line}");
        }
        if v.pass {
            passed += 1;
        } else {
            failed += 1;
            if !KNOWN_RED.contains(&id) {
                unexpected.push(id);
            }
        }
    }
    println!("acceptance: {passed} PASS, {failed} FAIL; known red: {KNOWN_RED:?}");
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
