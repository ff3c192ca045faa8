//! Rank-two ground truth, built from scalar formulas only: the formal series by
//! its entrywise recursion, and continuation by local Taylor expansion of
//! z·F' = (zU + A0)·F along chords of the comparison paths.

use std::f64::consts::PI;

use super::{Ledger, Side};
use crate::error::{Error, Result};
use crate::mat::{c, CMat, C64};

type M2 = [[C64; 2]; 2];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn mul(a: &M2, b: &M2) -> M2 {
    let mut o = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

fn add(a: &M2, b: &M2) -> M2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn scale(a: &M2, s: C64) -> M2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

fn inv(a: &M2) -> Result<M2> {
    let d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let size = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm()));
    if d.norm() <= 1e-300 || d.norm() < 1e-15 * size * size {
        return Err(Error::Oracle("singular 2x2 solution matrix".into()));
    }
    Ok([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

fn norm(a: &M2) -> f64 {
    a.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm()))
}

fn dg(x: C64, y: C64) -> M2 {
    [[x, ZERO], [ZERO, y]]
}

struct Formal {
    coeffs: Vec<M2>,
}

impl Formal {
    fn new(u: [C64; 2], a: &M2, terms: usize) -> Formal {
        let mut coeffs = vec![dg(ONE, ONE)];
        for j in 1..=terms {
            let h = coeffs[j - 1];
            let jm = c((j - 1) as f64, 0.0);
            let mut r = [[ZERO; 2]; 2];
            for p in 0..2 {
                for q in 0..2 {
                    r[p][q] = a[p][0] * h[0][q] + a[p][1] * h[1][q] - h[p][q] * a[q][q] + jm * h[p][q];
                }
            }
            let mut n = [[ZERO; 2]; 2];
            n[0][1] = r[0][1] / (u[1] - u[0]);
            n[1][0] = r[1][0] / (u[0] - u[1]);
            let jf = c(j as f64, 0.0);
            n[0][0] = -a[0][1] * n[1][0] / jf;
            n[1][1] = -a[1][0] * n[0][1] / jf;
            coeffs.push(n);
        }
        Formal { coeffs }
    }

    /// The smallest radius, among doublings of 16, whose best truncation is below `target`.
    fn pick(&self, target: f64) -> Option<(f64, usize)> {
        let mut radius: f64 = 16.0;
        for _ in 0..8 {
            let best = (1..self.coeffs.len())
                .map(|m| (norm(&self.coeffs[m]) / radius.powi(m as i32), m))
                .fold((f64::INFINITY, 0), |b, x| if x.0 < b.0 { x } else { b });
            if best.0 <= target {
                return Some((radius, best.1));
            }
            radius *= 2.0;
        }
        None
    }

    fn at(&self, z: C64, m: usize) -> M2 {
        let mut out = self.coeffs[m];
        let w = ONE / z;
        for h in self.coeffs[..m].iter().rev() {
            out = add(&scale(&out, w), h);
        }
        out
    }
}

/// F(z_end) from F(z_start) along the straight chord, by Taylor series of
/// z·F' = (zU + A0)·F about successive centres.
fn taylor_chord(u: [C64; 2], a: &M2, from: C64, to: C64, f: M2, tol: f64) -> Result<M2> {
    let umax = u[0].norm().max(u[1].norm()).max(1e-3);
    let mut z = from;
    let mut f = f;
    let uu = dg(u[0], u[1]);
    let mut guard = 0;
    while (to - z).norm() > 0.0 {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::Oracle("Taylor stepping did not reach the end of the chord".into()));
        }
        let room = (z.norm() / 4.0).min(0.5 / umax);
        let rest = to - z;
        let h = if rest.norm() <= room { rest } else { rest / rest.norm() * room };
        // f_{k+1} = [(zU + A0 − k)f_k + U f_{k−1}] / (z(k+1))
        let base = add(&scale(&uu, z), a);
        let mut prev = [[ZERO; 2]; 2];
        let mut cur = f;
        let mut sum = f;
        let mut hk = ONE;
        let mut quiet = 0;
        for k in 0..400 {
            let shifted = add(&base, &dg(c(-(k as f64), 0.0), c(-(k as f64), 0.0)));
            let next = scale(&add(&mul(&shifted, &cur), &mul(&uu, &prev)), ONE / (z * c((k + 1) as f64, 0.0)));
            hk *= h;
            let term = scale(&next, hk);
            sum = add(&sum, &term);
            quiet = if norm(&term) <= 1e-3 * tol * norm(&sum) { quiet + 1 } else { 0 };
            prev = cur;
            cur = next;
            if quiet == 3 {
                break;
            }
            if k == 399 {
                return Err(Error::Oracle("Taylor series did not settle".into()));
            }
        }
        f = sum;
        z = if rest.norm() <= room { to } else { z + h };
    }
    Ok(f)
}

fn polygon_arc(radius: f64, theta0: f64, theta1: f64, pieces: usize) -> Vec<C64> {
    (0..=pieces).map(|k| C64::from_polar(radius, theta0 + (theta1 - theta0) * k as f64 / pieces as f64)).collect()
}

fn along(u: [C64; 2], a: &M2, points: &[C64], f: M2, tol: f64) -> Result<M2> {
    let mut f = f;
    for w in points.windows(2) {
        f = taylor_chord(u, a, w[0], w[1], f, tol)?;
    }
    Ok(f)
}

fn to_cmat(a: &M2) -> CMat {
    CMat::from_fn(2, 2, |i, j| a[i][j])
}

/// (S, S_-) of dF/dz = (diag(u) + A0/z)·F for 2×2 data under `ledger`,
/// computed without the general pipeline.
pub fn stokes_2x2_oracle(u: [C64; 2], a0: &CMat, ledger: Ledger, tol: f64) -> Result<(CMat, CMat)> {
    if a0.shape() != (2, 2) {
        return Err(Error::Dimension("the oracle handles 2x2 systems only".into()));
    }
    if (u[0] - u[1]).norm() <= 1e-12 * u[0].norm().max(u[1].norm()) {
        return Err(Error::IrregularU);
    }
    let a: M2 = [[a0[(0, 0)], a0[(0, 1)]], [a0[(1, 0)], a0[(1, 1)]]];
    let formal = Formal::new(u, &a, 80);
    let (radius, m) = formal
        .pick(1e-3 * tol)
        .ok_or_else(|| Error::Oracle(format!("no truncation below {:e}", 1e-3 * tol)))?;
    let start = |theta: f64| -> M2 {
        let z = C64::from_polar(radius, theta);
        let logz = c(radius.ln(), theta);
        let e = dg((z * u[0] + logz * a[0][0]).exp(), (z * u[1] + logz * a[1][1]).exp());
        mul(&formal.at(z, m), &e)
    };
    let r = 0.75;
    let beta = ledger.theta_minus();
    let radial = |theta: f64| vec![C64::from_polar(radius, theta), C64::from_polar(r, theta)];
    let yp_r = along(u, &a, &radial(0.0), start(0.0), tol)?;
    let yp_left = along(u, &a, &polygon_arc(r, 0.0, PI, 48), yp_r, tol)?;
    let ym_left = along(u, &a, &radial(beta), start(beta), tol)?;
    let ym_right = along(u, &a, &polygon_arc(r, beta, beta + PI, 48), ym_left, tol)?;
    let x = mul(&inv(&yp_left)?, &ym_left);
    let x2 = mul(&inv(&ym_right)?, &yp_r);
    let p = dg((c(0.0, PI) * a[0][0]).exp(), (c(0.0, PI) * a[1][1]).exp());
    let p_inv = dg((c(0.0, -PI) * a[0][0]).exp(), (c(0.0, -PI) * a[1][1]).exp());
    let (s, s_minus) = match ledger.prefactor {
        Side::Left => (mul(&p, &x), mul(&x2, &p_inv)),
        Side::Right => (mul(&x, &p), mul(&p_inv, &x2)),
    };
    Ok((to_cmat(&s), to_cmat(&s_minus)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(v: [[(f64, f64); 2]; 2]) -> CMat {
        CMat::from_fn(2, 2, |i, j| c(v[i][j].0, v[i][j].1))
    }

    #[test]
    fn diagonal_residue() {
        let a0 = m2([[(0.0, 0.4), (0.0, 0.0)], [(0.0, 0.0), (0.0, -0.1)]]);
        let (s, sm) = stokes_2x2_oracle([c(0.0, 1.0), c(0.0, -1.0)], &a0, Ledger::default(), 1e-12).unwrap();
        for (k, a) in [(0, c(0.0, 0.4)), (1, c(0.0, -0.1))] {
            let want = (c(0.0, -PI) * a).exp();
            assert!((s[(k, k)] - want).norm() < 1e-12);
            assert!((sm[(k, k)] - want).norm() < 1e-12);
        }
        assert!(s[(0, 1)].norm() < 1e-12 && s[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn nilpotent_residue_is_unipotent() {
        let a0 = m2([[(0.0, 0.0), (0.8, 0.3)], [(0.0, 0.0), (0.0, 0.0)]]);
        let (s, sm) = stokes_2x2_oracle([c(0.0, 1.0), c(0.0, -1.0)], &a0, Ledger::default(), 1e-12).unwrap();
        for m in [&s, &sm] {
            assert!((m[(0, 0)] - ONE).norm() < 1e-11 && (m[(1, 1)] - ONE).norm() < 1e-11);
            assert!(m[(1, 0)].norm() < 1e-11);
        }
        // exactly one of the two carries the off-diagonal entry
        assert!((s[(0, 1)].norm() < 1e-11) != (sm[(0, 1)].norm() < 1e-11));
    }

    #[test]
    fn self_agreement_across_tolerances() {
        let a0 = m2([[(0.0, 0.3), (0.5, -0.2)], [(-0.4, 0.1), (0.0, -0.6)]]);
        let u = [c(0.0, 1.3), c(0.0, -0.7)];
        let (s1, m1) = stokes_2x2_oracle(u, &a0, Ledger::default(), 1e-12).unwrap();
        let (s2, m2) = stokes_2x2_oracle(u, &a0, Ledger::default(), 1e-14).unwrap();
        assert!((s1 - s2).iter().all(|v| v.norm() < 1e-11));
        assert!((m1 - m2).iter().all(|v| v.norm() < 1e-11));
    }
}
