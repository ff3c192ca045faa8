//! Finite-dimensional gl_n modules, their so_n restrictions, and the invariant
//! tensors realized on W ⊗ V₁ ⊗ … ⊗ V_m with W in slot 0.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::{elementary, root_data, tau_map, LieBasis, Root};
use crate::mat::{block_diag, c, commutator, eye, inverse, kron, max_abs, place, CMat};

/// Recipe for a module; parsed from strings such as `tau_double(defining(2))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepSpec {
    Defining(usize),
    Dual(Box<RepSpec>),
    Adjoint(usize),
    Trivial(usize),
    Tensor(Box<RepSpec>, Box<RepSpec>),
    Sum(Box<RepSpec>, Box<RepSpec>),
    TauDouble(Box<RepSpec>),
}

impl RepSpec {
    pub fn rank(&self) -> usize {
        match self {
            RepSpec::Defining(n) | RepSpec::Adjoint(n) | RepSpec::Trivial(n) => *n,
            RepSpec::Dual(r) | RepSpec::TauDouble(r) => r.rank(),
            RepSpec::Tensor(a, _) | RepSpec::Sum(a, _) => a.rank(),
        }
    }
}

impl fmt::Display for RepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepSpec::Defining(n) => write!(f, "defining({n})"),
            RepSpec::Dual(r) => write!(f, "dual({r})"),
            RepSpec::Adjoint(n) => write!(f, "adjoint({n})"),
            RepSpec::Trivial(n) => write!(f, "trivial({n})"),
            RepSpec::Tensor(a, b) => write!(f, "tensor({a},{b})"),
            RepSpec::Sum(a, b) => write!(f, "sum({a},{b})"),
            RepSpec::TauDouble(r) => write!(f, "tau_double({r})"),
        }
    }
}

impl FromStr for RepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
        let (spec, rest) = parse_spec(&compact)?;
        if !rest.is_empty() {
            return Err(Error::Parse(format!("trailing input `{rest}` in module spec")));
        }
        Ok(spec)
    }
}

fn close(r: &str) -> Result<&str> {
    r.strip_prefix(')').ok_or_else(|| Error::Parse(format!("expected `)` at `{r}`")))
}

fn number(r: &str) -> Result<(usize, &str)> {
    let end = r.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(r.len());
    let n: usize = r[..end].parse().map_err(|_| Error::Parse(format!("expected rank at `{r}`")))?;
    if n == 0 {
        return Err(Error::Parse("rank must be positive".into()));
    }
    Ok((n, &r[end..]))
}

fn parse_spec(s: &str) -> Result<(RepSpec, &str)> {
    let open = s.find('(').ok_or_else(|| Error::Parse(format!("expected `name(...)` in `{s}`")))?;
    let name = &s[..open];
    let mut rest = &s[open + 1..];
    let spec = match name {
        "defining" | "adjoint" | "trivial" => {
            let (n, r) = number(rest)?;
            rest = close(r)?;
            match name {
                "defining" => RepSpec::Defining(n),
                "adjoint" => RepSpec::Adjoint(n),
                _ => RepSpec::Trivial(n),
            }
        }
        "dual" | "tau_double" => {
            let (inner, r) = parse_spec(rest)?;
            rest = close(r)?;
            if name == "dual" {
                RepSpec::Dual(Box::new(inner))
            } else {
                RepSpec::TauDouble(Box::new(inner))
            }
        }
        "tensor" | "sum" => {
            let (a, r) = parse_spec(rest)?;
            let r = r.strip_prefix(',').ok_or_else(|| Error::Parse(format!("expected `,` at `{r}`")))?;
            let (b, r) = parse_spec(r)?;
            rest = close(r)?;
            if a.rank() != b.rank() {
                return Err(Error::Parse(format!("rank mismatch in {name}({a},{b})")));
            }
            if name == "tensor" {
                RepSpec::Tensor(Box::new(a), Box::new(b))
            } else {
                RepSpec::Sum(Box::new(a), Box::new(b))
            }
        }
        other => return Err(Error::Parse(format!("unknown module `{other}`"))),
    };
    Ok((spec, rest))
}

impl Serialize for RepSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RepSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A gl_n module: ρ(E_ij) for every (i, j), and T_τ when one is constructed.
#[derive(Debug, Clone)]
pub struct Representation {
    pub n: usize,
    pub dim: usize,
    action: Vec<CMat>,
    tau: Option<CMat>,
    pub label: String,
}

impl Representation {
    pub fn from_action(n: usize, action: Vec<CMat>, tau: Option<CMat>, label: &str) -> Result<Self> {
        if action.len() != n * n {
            return Err(Error::Dimension(format!("{} generators for gl_{n}", action.len())));
        }
        let dim = action[0].nrows();
        if action.iter().any(|m| m.shape() != (dim, dim)) || tau.as_ref().is_some_and(|t| t.shape() != (dim, dim)) {
            return Err(Error::Dimension(format!("generator shapes of `{label}`")));
        }
        Ok(Representation { n, dim, action, tau, label: label.to_string() })
    }

    /// ρ(E_ij).
    pub fn e(&self, i: usize, j: usize) -> &CMat {
        &self.action[i * self.n + j]
    }

    pub fn rho(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for i in 0..self.n {
            for j in 0..self.n {
                let a = x[(i, j)];
                if a != c(0.0, 0.0) {
                    out += self.e(i, j) * a;
                }
            }
        }
        out
    }

    pub fn has_tau(&self) -> bool {
        self.tau.is_some()
    }

    pub fn tau_op(&self) -> Result<&CMat> {
        self.tau.as_ref().ok_or_else(|| Error::MissingTau(self.label.clone()))
    }

    /// max over generator pairs of ‖ρ([x,y]) − [ρx, ρy]‖.
    pub fn homomorphism_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n * n {
            for b in 0..n * n {
                let x = elementary(n, a / n, a % n);
                let y = elementary(n, b / n, b % n);
                let lhs = self.rho(&commutator(&x, &y));
                let rhs = commutator(&self.action[a], &self.action[b]);
                worst = worst.max(max_abs(&(lhs - rhs)));
            }
        }
        worst
    }

    /// max of ‖Tρ(x)T⁻¹ − ρ(τx)‖ over generators together with ‖T² − 1‖.
    pub fn tau_residual(&self) -> Result<f64> {
        let t = self.tau_op()?;
        let ti = inverse(t, "tau_op")?;
        let n = self.n;
        let mut worst = max_abs(&(t * t - eye(self.dim)));
        for i in 0..n {
            for j in 0..n {
                let lhs = t * self.e(i, j) * &ti;
                let rhs = self.rho(&tau_map(&elementary(n, i, j))?);
                worst = worst.max(max_abs(&(lhs - rhs)));
            }
        }
        Ok(worst)
    }
}

pub fn build_rep(spec: &RepSpec) -> Result<Representation> {
    let label = spec.to_string();
    match spec {
        RepSpec::Defining(n) => {
            let n = *n;
            let action = (0..n * n).map(|k| elementary(n, k / n, k % n)).collect();
            Representation::from_action(n, action, None, &label)
        }
        RepSpec::Trivial(n) => {
            let action = vec![CMat::zeros(1, 1); n * n];
            Representation::from_action(*n, action, Some(eye(1)), &label)
        }
        RepSpec::Adjoint(n) => {
            let n = *n;
            let d = n * n;
            let basis: Vec<CMat> = (0..d).map(|k| elementary(n, k / n, k % n)).collect();
            let flat = |m: &CMat, col: usize, out: &mut CMat| {
                for k in 0..d {
                    out[(k, col)] = m[(k / n, k % n)];
                }
            };
            let action = basis
                .iter()
                .map(|x| {
                    let mut m = CMat::zeros(d, d);
                    for (col, b) in basis.iter().enumerate() {
                        flat(&commutator(x, b), col, &mut m);
                    }
                    m
                })
                .collect();
            let mut t = CMat::zeros(d, d);
            for (col, b) in basis.iter().enumerate() {
                flat(&-b.transpose(), col, &mut t);
            }
            Representation::from_action(n, action, Some(t), &label)
        }
        RepSpec::Dual(inner) => {
            let r = build_rep(inner)?;
            let action = r.action.iter().map(|m| -m.transpose()).collect();
            let tau = match &r.tau {
                Some(t) => Some(inverse(t, "tau_op")?.transpose()),
                None => None,
            };
            Representation::from_action(r.n, action, tau, &label)
        }
        RepSpec::Tensor(a, b) => {
            let (ra, rb) = (build_rep(a)?, build_rep(b)?);
            let (ia, ib) = (eye(ra.dim), eye(rb.dim));
            let action = ra.action.iter().zip(&rb.action).map(|(x, y)| kron(x, &ib) + kron(&ia, y)).collect();
            let tau = match (&ra.tau, &rb.tau) {
                (Some(s), Some(t)) => Some(kron(s, t)),
                _ => None,
            };
            Representation::from_action(ra.n, action, tau, &label)
        }
        RepSpec::Sum(a, b) => {
            let (ra, rb) = (build_rep(a)?, build_rep(b)?);
            let action = ra.action.iter().zip(&rb.action).map(|(x, y)| block_diag(x, y)).collect();
            let tau = match (&ra.tau, &rb.tau) {
                (Some(s), Some(t)) => Some(block_diag(s, t)),
                _ => None,
            };
            Representation::from_action(ra.n, action, tau, &label)
        }
        RepSpec::TauDouble(inner) => {
            let r = build_rep(inner)?;
            let n = r.n;
            let action = (0..n * n).map(|k| block_diag(&r.action[k], &-&r.action[(k % n) * n + k / n])).collect();
            let d = r.dim;
            let mut t = CMat::zeros(2 * d, 2 * d);
            for k in 0..d {
                t[(k, d + k)] = c(1.0, 0.0);
                t[(d + k, k)] = c(1.0, 0.0);
            }
            Representation::from_action(n, action, Some(t), &label)
        }
    }
}

/// An so_n module: matrices for the k-basis elements a_pq, p < q.
#[derive(Debug, Clone)]
pub struct KModule {
    pub n: usize,
    pub dim: usize,
    pub action: Vec<CMat>,
    pub label: String,
}

impl KModule {
    pub fn trivial(n: usize) -> Self {
        let len = LieBasis::new(n).k_pairs().len();
        KModule { n, dim: 1, action: vec![CMat::zeros(1, 1); len], label: format!("trivial_k({n})") }
    }

    /// Bracket-preservation residual on the k-basis (the structure constants
    /// are read off by expanding [a, b] in the basis with the trace form).
    pub fn bracket_residual(&self) -> f64 {
        let kb = LieBasis::new(self.n).k_basis();
        let mut worst: f64 = 0.0;
        for (x, a) in kb.iter().enumerate() {
            for (y, b) in kb.iter().enumerate() {
                let br = commutator(a, b);
                let mut lhs = CMat::zeros(self.dim, self.dim);
                for (z, e) in kb.iter().enumerate() {
                    lhs += &self.action[z] * crate::liealg::form(&br, e);
                }
                let rhs = commutator(&self.action[x], &self.action[y]);
                worst = worst.max(max_abs(&(lhs - rhs)));
            }
        }
        worst
    }
}

pub fn restrict_to_k(rep: &Representation) -> KModule {
    let action = LieBasis::new(rep.n).k_basis().iter().map(|a| rep.rho(a)).collect();
    KModule { n: rep.n, dim: rep.dim, action, label: format!("restrict({})", rep.label) }
}

/// Invariant tensors that can be realized on a TensorSpace.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Omega,
    OmegaK,
    OmegaP,
    CK,
    C0,
    CAlpha(Root),
    CKAlpha(Root),
    OmegaAlpha(Root),
    OmegaKAlpha(Root),
    BracketOmega,
    DeltaN(CMat),
}

impl Tensor {
    fn name(&self) -> &'static str {
        match self {
            Tensor::Omega => "omega",
            Tensor::OmegaK => "omega_k",
            Tensor::OmegaP => "omega_p",
            Tensor::CK => "c_k",
            Tensor::C0 => "c0",
            Tensor::CAlpha(_) => "c_alpha",
            Tensor::CKAlpha(_) => "c_k_alpha",
            Tensor::OmegaAlpha(_) => "omega_alpha",
            Tensor::OmegaKAlpha(_) => "omega_k_alpha",
            Tensor::BracketOmega => "bracket_omega",
            Tensor::DeltaN(_) => "delta_n",
        }
    }
}

/// W ⊗ V₁ ⊗ … ⊗ V_m. Slot 0 is W (the trivial so_n module when absent).
#[derive(Debug, Clone)]
pub struct TensorSpace {
    pub n: usize,
    pub w: KModule,
    pub has_w: bool,
    pub factors: Vec<Representation>,
    pub dims: Vec<usize>,
    pub dim: usize,
}

impl TensorSpace {
    pub fn new(w: Option<KModule>, factors: Vec<Representation>) -> Result<Self> {
        let n = factors.first().map(|r| r.n).or(w.as_ref().map(|w| w.n)).ok_or_else(|| {
            Error::Dimension("a tensor space needs at least one factor".into())
        })?;
        if factors.iter().any(|r| r.n != n) || w.as_ref().is_some_and(|w| w.n != n) {
            return Err(Error::Dimension("factors of different rank".into()));
        }
        let has_w = w.is_some();
        let w = w.unwrap_or_else(|| KModule::trivial(n));
        let mut dims = vec![w.dim];
        dims.extend(factors.iter().map(|r| r.dim));
        let dim = dims.iter().product();
        Ok(TensorSpace { n, w, has_w, factors, dims, dim })
    }

    /// `m` copies of one module, with an optional W.
    pub fn power(w: Option<KModule>, v: &Representation, m: usize) -> Result<Self> {
        TensorSpace::new(w, vec![v.clone(); m])
    }

    pub fn slots(&self) -> usize {
        self.dims.len()
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.slots() {
            return Err(Error::Slot { slot, len: self.slots() });
        }
        Ok(())
    }

    /// Tensor product of the given per-slot operators, identity elsewhere.
    pub fn embed(&self, ops: &[(usize, &CMat)]) -> Result<CMat> {
        let mut out = eye(1);
        let mut run = 1usize;
        for (slot, &d) in self.dims.iter().enumerate() {
            match ops.iter().find(|(s, _)| *s == slot) {
                Some((_, m)) => {
                    if m.shape() != (d, d) {
                        return Err(Error::Dimension(format!("operator on slot {slot}")));
                    }
                    if run > 1 {
                        out = kron(&out, &eye(run));
                        run = 1;
                    }
                    out = kron(&out, m);
                }
                None => run *= d,
            }
        }
        if run > 1 {
            out = kron(&out, &eye(run));
        }
        for (s, _) in ops {
            self.check_slot(*s)?;
        }
        Ok(out)
    }

    fn gl(&self, slot: usize, kind: &Tensor) -> Result<&Representation> {
        self.check_slot(slot)?;
        if slot == 0 {
            return Err(Error::SlotKind(format!("{} needs a gl_n module; slot 0 holds an so_n module", kind.name())));
        }
        Ok(&self.factors[slot - 1])
    }

    /// ρ_slot(a_idx) for the k-basis element with index `idx`.
    pub fn k_op(&self, slot: usize, idx: usize) -> Result<CMat> {
        self.check_slot(slot)?;
        if slot == 0 {
            return Ok(self.w.action[idx].clone());
        }
        let a = &LieBasis::new(self.n).k_basis()[idx];
        Ok(self.factors[slot - 1].rho(a))
    }

    /// ρ_slot(x) embedded in the full space.
    pub fn v_op(&self, slot: usize, x: &CMat) -> Result<CMat> {
        let r = self.gl(slot, &Tensor::DeltaN(x.clone()))?;
        self.embed(&[(slot, &r.rho(x))])
    }

    /// ρ_slot(diag(u)) embedded in the full space.
    pub fn u_on(&self, slot: usize, u: &[f64]) -> Result<CMat> {
        if u.len() != self.n {
            return Err(Error::Dimension(format!("u has {} entries for gl_{}", u.len(), self.n)));
        }
        let d = CMat::from_fn(self.n, self.n, |i, j| if i == j { c(u[i], 0.0) } else { c(0.0, 0.0) });
        self.v_op(slot, &d)
    }

    /// T_τ on one V slot.
    pub fn tau_on(&self, slot: usize) -> Result<CMat> {
        let r = self.gl(slot, &Tensor::Omega)?;
        self.embed(&[(slot, r.tau_op()?)])
    }

    pub fn swap_operator(&self, i: usize, j: usize) -> Result<CMat> {
        self.check_slot(i)?;
        self.check_slot(j)?;
        if self.dims[i] != self.dims[j] {
            return Err(Error::Dimension(format!("swap of slots {i} and {j} with unequal dimensions")));
        }
        let mut strides = vec![1usize; self.dims.len()];
        for k in (0..self.dims.len() - 1).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        let mut p = CMat::zeros(self.dim, self.dim);
        for idx in 0..self.dim {
            let digits: Vec<usize> = (0..self.dims.len()).map(|k| (idx / strides[k]) % self.dims[k]).collect();
            let mut sw = digits.clone();
            sw.swap(i, j);
            let jdx: usize = sw.iter().zip(&strides).map(|(d, s)| d * s).sum();
            p[(jdx, idx)] = c(1.0, 0.0);
        }
        Ok(p)
    }

    pub fn realize(&self, kind: &Tensor, slots: &[usize]) -> Result<CMat> {
        let n = self.n;
        let pair = || -> Result<(usize, usize)> {
            match slots {
                [i, j] if i != j => {
                    self.check_slot(*i)?;
                    self.check_slot(*j)?;
                    Ok((*i, *j))
                }
                _ => Err(Error::SlotKind(format!("{} needs two distinct slots", kind.name()))),
            }
        };
        let single = || -> Result<usize> {
            match slots {
                [i] => {
                    self.check_slot(*i)?;
                    Ok(*i)
                }
                _ => Err(Error::SlotKind(format!("{} needs a single slot", kind.name()))),
            }
        };
        let root_ok = |r: &Root| -> Result<()> {
            if n < 2 {
                return Err(Error::NoRoots);
            }
            if r.i >= n || r.j >= n || r.i == r.j {
                return Err(Error::SlotKind(format!("{r:?} is not a root of gl_{n}")));
            }
            Ok(())
        };
        let zero = CMat::zeros(self.dim, self.dim);
        match kind {
            Tensor::Omega => {
                let (i, j) = pair()?;
                let (a, b) = (self.gl(i, kind)?, self.gl(j, kind)?);
                let mut out = zero;
                for p in 0..n {
                    for q in 0..n {
                        out += self.embed(&[(i, a.e(p, q)), (j, b.e(q, p))])?;
                    }
                }
                Ok(out)
            }
            Tensor::OmegaK => {
                let (i, j) = pair()?;
                let mut out = zero;
                for idx in 0..LieBasis::new(n).k_pairs().len() {
                    out += self.embed(&[(i, &self.k_op(i, idx)?), (j, &self.k_op(j, idx)?)])?;
                }
                Ok(out)
            }
            Tensor::OmegaP => {
                let (i, j) = pair()?;
                let (a, b) = (self.gl(i, kind)?, self.gl(j, kind)?);
                let mut out = zero;
                for e in LieBasis::new(n).p_basis() {
                    out += self.embed(&[(i, &a.rho(&e)), (j, &b.rho(&e))])?;
                }
                Ok(out)
            }
            Tensor::CK => {
                let i = single()?;
                let mut local = CMat::zeros(self.dims[i], self.dims[i]);
                for idx in 0..LieBasis::new(n).k_pairs().len() {
                    let a = self.k_op(i, idx)?;
                    local += &a * &a;
                }
                self.embed(&[(i, &local)])
            }
            Tensor::C0 => {
                let i = single()?;
                let r = self.gl(i, kind)?;
                let mut local = CMat::zeros(r.dim, r.dim);
                for al in root_data(n).roots {
                    local += r.e(al.i, al.j) * r.e(al.j, al.i);
                }
                self.embed(&[(i, &local)])
            }
            Tensor::CAlpha(al) => {
                root_ok(al)?;
                let i = single()?;
                let r = self.gl(i, kind)?;
                self.embed(&[(i, &(r.e(al.i, al.j) * r.e(al.j, al.i)))])
            }
            Tensor::CKAlpha(al) => {
                root_ok(al)?;
                let i = single()?;
                if i == 0 {
                    // symmetrized per root: ½ρ_W(a_α)², so that Σ_α gives C_k
                    let (idx, _) = al.k_index(n);
                    let a = &self.w.action[idx];
                    return self.embed(&[(0, &(a * a * c(0.5, 0.0)))]);
                }
                let r = self.gl(i, kind)?;
                let local = (r.e(al.i, al.j) - r.e(al.j, al.i)) * r.e(al.j, al.i) * c(0.5, 0.0);
                self.embed(&[(i, &local)])
            }
            Tensor::OmegaAlpha(al) => {
                root_ok(al)?;
                let (i, j) = pair()?;
                let (a, b) = (self.gl(i, kind)?, self.gl(j, kind)?);
                self.embed(&[(i, a.e(al.i, al.j)), (j, b.e(al.j, al.i))])
            }
            Tensor::OmegaKAlpha(al) => {
                root_ok(al)?;
                let (i, j) = pair()?;
                let b = self.gl(j, kind)?;
                let first = if i == 0 {
                    let (idx, s) = al.k_index(n);
                    &self.w.action[idx] * s
                } else {
                    let a = self.gl(i, kind)?;
                    a.e(al.i, al.j) - a.e(al.j, al.i)
                };
                Ok(self.embed(&[(i, &first), (j, b.e(al.j, al.i))])? * c(0.5, 0.0))
            }
            Tensor::BracketOmega => {
                let (i, j) = pair()?;
                let (a, b) = (self.gl(i, kind)?, self.gl(j, kind)?);
                let mut out = zero;
                for p in 0..n {
                    out += self.embed(&[(i, a.e(p, p)), (j, b.e(p, p))])?;
                }
                Ok(out)
            }
            Tensor::DeltaN(x) => {
                if x.shape() != (n, n) {
                    return Err(Error::Dimension("delta_n argument".into()));
                }
                if slots.is_empty() {
                    return Err(Error::SlotKind("delta_n needs at least one slot".into()));
                }
                let mut out = zero;
                for &s in slots {
                    out += self.v_op(s, x)?;
                }
                Ok(out)
            }
        }
    }

    /// Places `op`, an operator on the ordered factors `slots`, into the full
    /// space (identity on the remaining slots).
    pub fn place(&self, op: &CMat, slots: &[usize]) -> Result<CMat> {
        for &s in slots {
            self.check_slot(s)?;
        }
        place(op, &self.dims, slots)
    }

    /// Conjugation by T_τ on the listed slots: X ↦ T X T⁻¹.
    pub fn tau_conj(&self, x: &CMat, slots: &[usize]) -> Result<CMat> {
        let mut out = x.clone();
        for &s in slots {
            let t = self.tau_on(s)?;
            let ti = inverse(&t, "tau_op")?;
            out = &t * out * ti;
        }
        Ok(out)
    }
}

/// Residuals of the structural identities among the invariant tensors, realized
/// on W ⊗ defining(n) ⊗ adjoint(n) with W the restriction of defining(n).
pub fn identity_suite(n: usize) -> Result<BTreeMap<String, f64>> {
    if n < 2 {
        return Err(Error::NoRoots);
    }
    let def = build_rep(&RepSpec::Defining(n))?;
    let adj = build_rep(&RepSpec::Adjoint(n))?;
    let sp = TensorSpace::new(Some(restrict_to_k(&def)), vec![def.clone(), adj.clone()])?;
    let mut out = BTreeMap::new();
    let omega = sp.realize(&Tensor::Omega, &[1, 2])?;
    let omega_k = sp.realize(&Tensor::OmegaK, &[1, 2])?;
    let mut tau_omega = CMat::zeros(sp.dim, sp.dim);
    for p in 0..n {
        for q in 0..n {
            tau_omega += sp.embed(&[(1, def.e(p, q)), (2, &adj.rho(&tau_map(&elementary(n, q, p))?))])?;
        }
    }
    out.insert("tau_omega".into(), max_abs(&(tau_omega - (&omega_k * c(2.0, 0.0) - &omega))));
    out.insert("omega_split".into(), max_abs(&(&omega - &omega_k - sp.realize(&Tensor::OmegaP, &[1, 2])?)));
    let mut worst: f64 = 0.0;
    for slot in 0..3 {
        let mut sum = CMat::zeros(sp.dim, sp.dim);
        for al in root_data(n).roots {
            sum += sp.realize(&Tensor::CKAlpha(al), &[slot])?;
        }
        worst = worst.max(max_abs(&(sp.realize(&Tensor::CK, &[slot])? - sum)));
    }
    out.insert("ck_roots".into(), worst);
    let mut worst: f64 = 0.0;
    // E_pp and E_{p,p±1} generate gl_n
    for p in 0..n {
        for q in p.saturating_sub(1)..(p + 2).min(n) {
            let d = sp.realize(&Tensor::DeltaN(elementary(n, p, q)), &[1, 2])?;
            worst = worst.max(max_abs(&commutator(&d, &omega)));
        }
    }
    out.insert("omega_invariance".into(), worst);
    let worst = root_data(n).roots.iter().fold(0.0f64, |m, al| m.max((crate::liealg::form(&al.e_pos(n), &al.e_neg(n)) - 1.0).norm()));
    out.insert("root_pairing".into(), worst);
    Ok(out)
}
