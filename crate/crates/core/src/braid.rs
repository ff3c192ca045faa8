//! Holonomy of the n-point system along the generators σ, b_1, …, b_{n−1} of
//! the type-B braid group, and the comparison with Stokes data.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gckz::{divisor_distance, PfaffianSystem};
use crate::mat::{c, charpoly_distance, det, eigen_match_distance, eye, inverse, max_abs, to_pairs, CMat, C64};
use crate::odeflow::{Dop853, Piece};
use crate::stokes::{StokesPack, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    Sigma,
    /// b_i, 1-based.
    B(usize),
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Sigma => write!(f, "s"),
            Generator::B(i) => write!(f, "b{i}"),
        }
    }
}

/// One leg of a loop: every listed coordinate runs along its piece for t ∈ [0, 1]
/// while the others stay put.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub moves: Vec<(usize, Piece)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BraidLoop {
    pub generator: Generator,
    pub basepoint: Vec<f64>,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BraidSettings {
    pub solver: Dop853,
    /// Largest excursion off the real axis. e^{z u/κ} grows like e^{|u| Im z},
    /// so exchanges are done after the moving points are brought within this distance.
    pub reach: f64,
    pub clearance: f64,
}

impl Default for BraidSettings {
    fn default() -> Self {
        BraidSettings { solver: Dop853::with_rtol(1e-13), reach: 0.5, clearance: 1e-3 }
    }
}

fn point(z: f64) -> C64 {
    c(z, 0.0)
}

fn seg(from: C64, to: C64) -> Piece {
    Piece::Segment { from, to }
}

pub fn loop_path(generator: Generator, basepoint: &[f64], settings: &BraidSettings) -> Result<BraidLoop> {
    let n = basepoint.len();
    if n == 0 || basepoint[0] <= 0.0 || basepoint.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(0));
    }
    let stages = match generator {
        Generator::Sigma => {
            let z1 = basepoint[0];
            let r = settings.reach.min(z1 / 2.0);
            vec![
                Stage { moves: vec![(0, seg(point(z1), point(r)))] },
                Stage { moves: vec![(0, Piece::Arc { center: point(0.0), radius: r, theta0: 0.0, theta1: PI })] },
                Stage { moves: vec![(0, seg(point(-r), point(-z1)))] },
            ]
        }
        Generator::B(i) => {
            if i == 0 || i >= n {
                return Err(Error::SlotKind(format!("b{i} needs 1 ≤ i < n = {n}")));
            }
            let (a, b) = (basepoint[i - 1], basepoint[i]);
            let mid = (a + b) / 2.0;
            let d = settings.reach.min((b - a) / 4.0);
            let arc = |theta0: f64| Piece::Arc { center: point(mid), radius: d, theta0, theta1: theta0 + PI };
            vec![
                Stage { moves: vec![(i - 1, seg(point(a), point(mid - d))), (i, seg(point(b), point(mid + d)))] },
                // z_{i+1} over the top, z_i underneath
                Stage { moves: vec![(i - 1, arc(PI)), (i, arc(0.0))] },
                Stage { moves: vec![(i - 1, seg(point(mid + d), point(b))), (i, seg(point(mid - d), point(a)))] },
            ]
        }
    };
    let lp = BraidLoop { generator, basepoint: basepoint.to_vec(), stages };
    lp.clearance(settings.clearance)?;
    Ok(lp)
}

impl BraidLoop {
    pub fn start(&self) -> Vec<C64> {
        self.basepoint.iter().map(|&x| point(x)).collect()
    }

    /// Coordinates after `stages[..=k]` have run to t.
    fn position(&self, k: usize, t: f64) -> Vec<C64> {
        let mut z = self.start();
        for (s, stage) in self.stages.iter().enumerate().take(k + 1) {
            let tt = if s == k { t } else { 1.0 };
            for (i, p) in &stage.moves {
                z[*i] = p.point(tt);
            }
        }
        z
    }

    pub fn end(&self) -> Vec<C64> {
        match self.stages.len() {
            0 => self.start(),
            k => self.position(k - 1, 1.0),
        }
    }

    /// Smallest distance to the divisors, scanned at 400 points per stage.
    pub fn clearance(&self, required: f64) -> Result<f64> {
        let mut found = f64::INFINITY;
        for k in 0..self.stages.len() {
            for s in 0..=400 {
                found = found.min(divisor_distance(&self.position(k, s as f64 / 400.0)));
            }
        }
        if found < required {
            return Err(Error::Clearance { found, required });
        }
        Ok(found)
    }

    /// The same route backwards, starting from the end point.
    pub fn reversed(&self) -> BraidLoop {
        let flip = |p: &Piece| match *p {
            Piece::Segment { from, to } => Piece::Segment { from: to, to: from },
            Piece::Arc { center, radius, theta0, theta1 } => Piece::Arc { center, radius, theta0: theta1, theta1: theta0 },
        };
        let stages = self.stages.iter().rev().map(|s| Stage { moves: s.moves.iter().map(|(i, p)| (*i, flip(p))).collect() }).collect();
        let basepoint = self.end().iter().map(|z| z.re).collect();
        BraidLoop { generator: self.generator, basepoint, stages }
    }
}

/// P_γ with F(end) = P_γ·F(start) for every solution F.
pub fn transport(sys: &PfaffianSystem, lp: &BraidLoop, settings: &BraidSettings) -> Result<CMat> {
    if lp.basepoint.len() != sys.n {
        return Err(Error::Dimension(format!("loop in {} variables for n = {}", lp.basepoint.len(), sys.n)));
    }
    let mut y = eye(sys.dim());
    for (k, stage) in lp.stages.iter().enumerate() {
        let rhs = |t: f64, f: &CMat| -> CMat {
            let z = lp.position(k, t);
            let mut a = CMat::zeros(sys.dim(), sys.dim());
            for (i, p) in &stage.moves {
                // the loop was checked against the divisors, so this cannot fail
                a += sys.coefficient(i + 1, &z).expect("point off the divisors") * p.velocity(t);
            }
            a * f
        };
        y = settings.solver.integrate(&rhs, 0.0, 1.0, &y)?.0;
    }
    Ok(y)
}

/// The operator identifying the fiber over the end point with the one over the start.
pub fn identification(sys: &PfaffianSystem, generator: Generator) -> Result<CMat> {
    match generator {
        Generator::Sigma => sys.pieces.space.tau_on(1),
        Generator::B(i) => sys.pieces.space.swap_operator(i, i + 1),
    }
}

/// ρ(g) = (twist·P_γ)⁻¹ = P_{γ⁻¹}·twist⁻¹. P_γ is badly conditioned (its
/// singular values spread like e^{±π|Ω/κ|}), so P_γ⁻¹ comes from transport along
/// the reversed route rather than from a factorization.
pub fn holonomy(sys: &PfaffianSystem, lp: &BraidLoop, settings: &BraidSettings) -> Result<CMat> {
    let twist = identification(sys, lp.generator)?;
    Ok(transport(sys, &lp.reversed(), settings)? * inverse(&twist, "twist")?)
}

#[derive(Debug, Clone)]
pub struct BraidRep {
    pub basepoint: Vec<f64>,
    pub sigma: CMat,
    /// b_1, …, b_{n−1}.
    pub b: Vec<CMat>,
    pub convention: String,
}

impl BraidRep {
    pub fn get(&self, g: Generator) -> Result<&CMat> {
        match g {
            Generator::Sigma => Ok(&self.sigma),
            Generator::B(i) if i >= 1 && i <= self.b.len() => Ok(&self.b[i - 1]),
            Generator::B(i) => Err(Error::SlotKind(format!("no generator b{i}"))),
        }
    }

    pub fn n(&self) -> usize {
        self.b.len() + 1
    }

    /// Product of ρ along the word, left to right.
    pub fn evaluate(&self, word: &BraidWord) -> Result<CMat> {
        let mut out = eye(self.sigma.nrows());
        for &(g, p) in &word.0 {
            let m = self.get(g)?;
            out *= if p > 0 { m.clone() } else { inverse(m, "generator")? };
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "basepoint": self.basepoint,
            "s": to_pairs(&self.sigma),
            "b": self.b.iter().map(to_pairs).collect::<Vec<_>>(),
            "convention": self.convention,
        })
    }

    /// Q·ρ·Q⁻¹ on every generator.
    pub fn conjugated(&self, q: &CMat) -> Result<BraidRep> {
        let qi = inverse(q, "Q")?;
        let f = |m: &CMat| q * m * &qi;
        Ok(BraidRep { sigma: f(&self.sigma), b: self.b.iter().map(f).collect(), ..self.clone() })
    }
}

pub fn braid_representation(sys: &PfaffianSystem, basepoint: &[f64], settings: &BraidSettings) -> Result<BraidRep> {
    let gens: Vec<Generator> = std::iter::once(Generator::Sigma).chain((1..sys.n).map(Generator::B)).collect();
    let mats = gens
        .par_iter()
        .map(|&g| holonomy(sys, &loop_path(g, basepoint, settings)?, settings))
        .collect::<Result<Vec<_>>>()?;
    let mut it = mats.into_iter();
    let sigma = it.next().expect("sigma is always present");
    Ok(BraidRep {
        basepoint: basepoint.to_vec(),
        sigma,
        b: it.collect(),
        convention: "rho(g) = (twist * P_gamma)^-1; twist T_tau on leg 1 for s, the flip of legs i, i+1 for b_i".into(),
    })
}

/// ‖L − R‖ over the product of the factor norms (the size of rounding in the
/// products), and over max(‖L‖, ‖R‖).
fn relation(factors: &[&CMat], lhs: &CMat, rhs: &CMat) -> (f64, f64) {
    let d = max_abs(&(lhs - rhs));
    let scale = factors.iter().map(|m| max_abs(m)).product::<f64>();
    let size = max_abs(lhs).max(max_abs(rhs));
    let q = |s: f64| if s == 0.0 { 0.0 } else { d / s };
    (q(scale), q(size))
}

/// σb_i = b_iσ (i ≥ 2), σb₁σb₁ = b₁σb₁σ, b_ib_j = b_jb_i (|i − j| > 1),
/// b_ib_{i+1}b_i = b_{i+1}b_ib_{i+1}. Each relation is reported normalized by
/// the factor norms and, under `<name>_relative`, by the size of its two sides.
pub fn verify_braid_relations(rep: &BraidRep) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let mut put = |name: String, (norm, rel): (f64, f64)| {
        out.insert(format!("{name}_relative"), rel);
        out.insert(name, norm);
    };
    let s = &rep.sigma;
    let b = &rep.b;
    if let Some(b1) = b.first() {
        put("s_b1_s_b1".into(), relation(&[s, b1, s, b1], &(s * b1 * s * b1), &(b1 * s * b1 * s)));
    }
    for i in 1..b.len() {
        put(format!("s_b{}_commute", i + 1), relation(&[s, &b[i]], &(s * &b[i]), &(&b[i] * s)));
        let (x, y) = (&b[i - 1], &b[i]);
        put(format!("b{}_b{}_braid", i, i + 1), relation(&[x, y, x], &(x * y * x), &(y * x * y)));
    }
    for i in 0..b.len() {
        for j in i + 2..b.len() {
            put(format!("b{}_b{}_commute", i + 1, j + 1), relation(&[&b[i], &b[j]], &(&b[i] * &b[j]), &(&b[j] * &b[i])));
        }
    }
    out
}

/// A word over s, b1, …, with inverses written `s^-1`, `b2^-1` or `s'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BraidWord(pub Vec<(Generator, i8)>);

impl FromStr for BraidWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        for tok in s.split(|ch: char| ch.is_whitespace() || ch == '*' || ch == ',').filter(|t| !t.is_empty()) {
            let (body, power) = if let Some(b) = tok.strip_suffix("^-1") {
                (b, -1)
            } else if let Some(b) = tok.strip_suffix('\'') {
                (b, -1)
            } else {
                (tok, 1)
            };
            let g = match body {
                "s" | "sigma" => Generator::Sigma,
                _ => {
                    let idx = body
                        .strip_prefix('b')
                        .and_then(|d| d.parse::<usize>().ok())
                        .filter(|&i| i >= 1)
                        .ok_or_else(|| Error::Parse(format!("unknown braid generator `{tok}`")))?;
                    Generator::B(idx)
                }
            };
            out.push((g, power));
        }
        Ok(BraidWord(out))
    }
}

/// T_τ^{(1)}·K on legs (0, 1) and the flip·S on legs (i, i+1), in W ⊗ V^{⊗n}.
pub fn stokes_side(sys: &PfaffianSystem, pack_s: &StokesPack, pack_k: &StokesPack) -> Result<(CMat, Vec<CMat>)> {
    if pack_s.target != Target::S || pack_k.target != Target::K {
        return Err(Error::Ledger("compare_with_stokes needs an S pack and a K pack".into()));
    }
    let sp = &sys.pieces.space;
    let (dw, dv) = (sp.dims[0], sp.dims[1]);
    if pack_k.s.nrows() != dw * dv || pack_s.s.nrows() != dv * dv {
        return Err(Error::Dimension("Stokes packs do not match the system's modules".into()));
    }
    let k = sp.tau_on(1)? * sp.place(&pack_k.s, &[0, 1])?;
    let s = (1..sys.n)
        .map(|i| Ok(sp.swap_operator(i, i + 1)? * sp.place(&pack_s.s, &[i, i + 1])?))
        .collect::<Result<Vec<_>>>()?;
    Ok((k, s))
}

/// Conjugation-invariant distances between ρ and the Stokes side: characteristic
/// polynomials, matched spectra and |det| ratios. The holonomies are also
/// compared in inverse.
pub fn compare_with_stokes(rep: &BraidRep, sys: &PfaffianSystem, pack_s: &StokesPack, pack_k: &StokesPack) -> Result<BTreeMap<String, f64>> {
    let (k, s) = stokes_side(sys, pack_s, pack_k)?;
    if rep.sigma.shape() != k.shape() || rep.b.len() != s.len() {
        return Err(Error::Dimension("representation and Stokes side differ in size".into()));
    }
    let mut out = BTreeMap::new();
    let mut put = |name: &str, hol: &CMat, model: &CMat| -> Result<()> {
        let hinv = inverse(hol, "holonomy")?;
        out.insert(format!("{name}_charpoly"), charpoly_distance(hol, model)?);
        out.insert(format!("{name}_spectrum"), eigen_match_distance(hol, model)?);
        out.insert(format!("{name}_det"), relative_det(hol, model));
        out.insert(format!("{name}_charpoly_inverse"), charpoly_distance(&hinv, model)?);
        out.insert(format!("{name}_det_inverse"), relative_det(&hinv, model));
        Ok(())
    };
    put("s", &rep.sigma, &k)?;
    for (i, (b, sm)) in rep.b.iter().zip(&s).enumerate() {
        put(&format!("b{}", i + 1), b, sm)?;
    }
    Ok(out)
}

fn relative_det(a: &CMat, b: &CMat) -> f64 {
    let (da, db) = (det(a), det(b));
    (da - db).norm() / da.norm().max(db.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Model;

    fn sys(v: &str, n: usize) -> PfaffianSystem {
        let m = Model::new(None, v.parse().unwrap(), vec![1.0, -1.0], c(0.0, 1.0)).unwrap();
        PfaffianSystem::new(&m, n).unwrap()
    }

    #[test]
    fn loop_endpoints() {
        let st = BraidSettings::default();
        let b = loop_path(Generator::B(1), &[1.0, 2.0], &st).unwrap();
        assert!((b.end()[0] - c(2.0, 0.0)).norm() < 1e-14 && (b.end()[1] - c(1.0, 0.0)).norm() < 1e-14);
        let s = loop_path(Generator::Sigma, &[1.0, 2.0, 3.0], &st).unwrap();
        let e = s.end();
        assert!((e[0] + 1.0).norm() < 1e-14 && (e[1] - 2.0).norm() == 0.0 && (e[2] - 3.0).norm() == 0.0);
        for g in [Generator::Sigma, Generator::B(1), Generator::B(2)] {
            assert!(loop_path(g, &[1.0, 3.0, 9.0], &st).unwrap().clearance(1e-2).unwrap() >= 1e-2);
        }
        assert!(loop_path(Generator::B(2), &[1.0, 2.0], &st).is_err());
        assert!(loop_path(Generator::Sigma, &[2.0, 1.0], &st).is_err());
    }

    #[test]
    fn over_and_under() {
        let st = BraidSettings::default();
        let b = loop_path(Generator::B(1), &[1.0, 2.0], &st).unwrap();
        let top = b.position(1, 0.5);
        assert!(top[1].im > 0.0 && top[0].im < 0.0);
        let s = loop_path(Generator::Sigma, &[1.0, 2.0], &st).unwrap();
        assert!(s.position(1, 0.5)[0].im > 0.0);
    }

    #[test]
    fn trivial_and_reversed_loops() {
        // the defining module keeps ‖P_γ‖ near e^π, so 1e-8 is above rounding
        let sy = sys("defining(2)", 2);
        let st = BraidSettings::default();
        let constant = BraidLoop { generator: Generator::B(1), basepoint: vec![1.0, 2.0], stages: vec![] };
        assert!(max_abs(&(transport(&sy, &constant, &st).unwrap() - eye(sy.dim()))) == 0.0);
        let small = BraidLoop {
            generator: Generator::B(1),
            basepoint: vec![1.0, 2.5],
            stages: vec![Stage { moves: vec![(1, Piece::Arc { center: c(2.3, 0.0), radius: 0.2, theta0: 0.0, theta1: 2.0 * PI })] }],
        };
        assert!(max_abs(&(transport(&sy, &small, &st).unwrap() - eye(sy.dim()))) < 1e-9);
        let lp = loop_path(Generator::B(1), &[1.0, 2.0], &st).unwrap();
        let p = transport(&sy, &lp, &st).unwrap();
        let q = transport(&sy, &lp.reversed(), &st).unwrap();
        assert!(max_abs(&(q * p - eye(sy.dim()))) < 1e-8);
    }

    #[test]
    fn identity_rep_satisfies_everything() {
        let rep = BraidRep { basepoint: vec![1.0, 2.0, 3.0], sigma: eye(3), b: vec![eye(3), eye(3)], convention: String::new() };
        assert!(verify_braid_relations(&rep).values().all(|&v| v == 0.0));
        assert_eq!(verify_braid_relations(&rep).len(), 6);
    }

    #[test]
    fn two_point_relations() {
        let sy = sys("adjoint(2)", 2);
        let rep = braid_representation(&sy, &[1.0, 2.0], &BraidSettings::default()).unwrap();
        let rel = verify_braid_relations(&rep);
        assert!(rel["s_b1_s_b1"] < 1e-6, "{rel:?}");
        let q = CMat::from_fn(sy.dim(), sy.dim(), |i, j| c(((i * 3 + j * 5) % 7) as f64 * 0.1, if i == j { 1.0 } else { 0.0 }));
        let rel_q = verify_braid_relations(&rep.conjugated(&q).unwrap());
        assert!(rel_q["s_b1_s_b1"] < 1e-6);
        let sy = sys("defining(2)", 2);
        let st = BraidSettings::default();
        let b1 = &holonomy(&sy, &loop_path(Generator::B(1), &[1.0, 2.0], &st).unwrap(), &st).unwrap();
        assert!(matches!(braid_representation(&sy, &[1.0, 2.0], &st), Err(Error::MissingTau(_))));
        assert!(max_abs(&(b1 * inverse(b1, "b1").unwrap() - eye(sy.dim()))) < 1e-10);
    }

    #[test]
    fn words() {
        let w: BraidWord = "s b1 b2^-1 s'".parse().unwrap();
        assert_eq!(w.0, vec![(Generator::Sigma, 1), (Generator::B(1), 1), (Generator::B(2), -1), (Generator::Sigma, -1)]);
        assert!("b0".parse::<BraidWord>().is_err());
        assert!("x".parse::<BraidWord>().is_err());
        let rep = BraidRep { basepoint: vec![1.0, 2.0], sigma: eye(2) * c(2.0, 0.0), b: vec![eye(2)], convention: String::new() };
        let m = rep.evaluate(&"s s b1 s^-1".parse().unwrap()).unwrap();
        assert!((m[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
    }
}
