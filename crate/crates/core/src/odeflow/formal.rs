use super::system::RankOneSystem;
use crate::error::{Error, Result};
use crate::mat::{eye, max_abs, solve_sylvester, CMat, C64};

/// Ĥ = Σ_j H_j z^{−j} (H_0 = I) of the formal solution Ĥ z^{[A0]} e^{zU}.
#[derive(Debug, Clone)]
pub struct FormalSolution {
    pub order: usize,
    pub coeffs: Vec<CMat>,
    pub exponent: CMat,
    /// max |u| / min off-block gap of ad_U.
    pub condition: f64,
}

pub fn formal_fundamental(sys: &RankOneSystem, m: usize) -> Result<FormalSolution> {
    let n = sys.dim;
    let abar = sys.exponent();
    let aoff = &sys.a0 - &abar;
    let mut min_gap = f64::INFINITY;
    let mut max_u: f64 = 1.0;
    for a in 0..n {
        max_u = max_u.max(sys.u[a].norm());
        for b in 0..n {
            if !sys.same_block(a, b) {
                min_gap = min_gap.min((sys.u[b] - sys.u[a]).norm());
            }
        }
    }
    let condition = if min_gap.is_finite() { max_u / min_gap } else { 1.0 };
    if condition > 1e10 {
        return Err(Error::IllConditioned(condition));
    }
    let blocks: Vec<(Vec<usize>, CMat)> = sys
        .blocks
        .iter()
        .map(|b| (b.clone(), CMat::from_fn(b.len(), b.len(), |i, j| abar[(b[i], b[j])])))
        .collect();
    let mut coeffs = vec![eye(n)];
    for j in 1..=m {
        let prev = &coeffs[j - 1];
        let r = &sys.a0 * prev - prev * &abar + prev * C64::new((j - 1) as f64, 0.0);
        let mut off = CMat::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                if !sys.same_block(a, b) {
                    off[(a, b)] = r[(a, b)] / (sys.u[b] - sys.u[a]);
                }
            }
        }
        // block part: ([A]+j)D − D[A] = −block(A_off·O_j), solvability at order j+1
        let w = &aoff * &off;
        let mut h = off;
        for (b, ab) in &blocks {
            let k = b.len();
            let rhs = CMat::from_fn(k, k, |p, q| -w[(b[p], b[q])]);
            let lhs = ab + eye(k) * C64::new(j as f64, 0.0);
            let d = solve_sylvester(&lhs, &(-ab), &rhs)?;
            for p in 0..k {
                for q in 0..k {
                    h[(b[p], b[q])] = d[(p, q)];
                }
            }
        }
        coeffs.push(h);
    }
    Ok(FormalSolution { order: m, coeffs, exponent: abar, condition })
}

impl FormalSolution {
    /// Σ_{j≤m} H_j z^{−j}.
    pub fn series(&self, z: C64) -> CMat {
        let w = z.inv();
        let mut out = self.coeffs[self.order].clone();
        for j in (0..self.order).rev() {
            out = out * w + &self.coeffs[j];
        }
        out
    }

    /// ‖H_m‖ / R^m.
    pub fn error_estimate(&self, r: f64) -> f64 {
        max_abs(&self.coeffs[self.order]) / r.powi(self.order as i32)
    }

    /// Largest normalized defect of H_{j+1}U − UH_{j+1} = A0H_j − H_j[A0] + jH_j
    /// over j < m, together with the block part of the order-m equation.
    pub fn residual(&self, sys: &RankOneSystem) -> f64 {
        let u = sys.u_matrix();
        let mut worst: f64 = 0.0;
        for j in 0..=self.order {
            let h = &self.coeffs[j];
            let t1 = &sys.a0 * h;
            let t2 = h * &self.exponent;
            let t3 = h * C64::new(j as f64, 0.0);
            let mut rhs = &t1 - &t2 + &t3;
            let mut scale = max_abs(&t1).max(max_abs(&t2)).max(max_abs(&t3));
            if j < self.order {
                let next = &self.coeffs[j + 1];
                let (l1, l2) = (next * &u, &u * next);
                scale = scale.max(max_abs(&l1)).max(max_abs(&l2));
                rhs = l1 - l2 - rhs;
            } else {
                for a in 0..sys.dim {
                    for b in 0..sys.dim {
                        if !sys.same_block(a, b) {
                            rhs[(a, b)] = C64::new(0.0, 0.0);
                        }
                    }
                }
            }
            if scale > 0.0 {
                worst = worst.max(max_abs(&rhs) / scale);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{c, commutator, diag};

    #[test]
    fn commuting_case_has_trivial_series() {
        let sys = RankOneSystem::from_diag(vec![c(0.0, 1.0), c(0.0, -1.0)], diag(&[c(0.2, 0.0), c(-0.3, 0.0)])).unwrap();
        let f = formal_fundamental(&sys, 8).unwrap();
        assert!(f.coeffs[1..].iter().all(|h| max_abs(h) == 0.0));
        assert_eq!(f.exponent, sys.a0);
    }

    #[test]
    fn abelian_dimension_one() {
        let sys = RankOneSystem::from_diag(vec![c(0.0, 2.0)], CMat::from_element(1, 1, c(0.7, 0.0))).unwrap();
        let f = formal_fundamental(&sys, 5).unwrap();
        assert!(f.coeffs[1..].iter().all(|h| max_abs(h) == 0.0));
    }

    #[test]
    fn first_coefficient_solves_commutator_equation() {
        let a0 = CMat::from_row_slice(2, 2, &[c(0.3, 0.1), c(1.2, -0.4), c(-0.7, 0.2), c(0.1, 0.5)]);
        let sys = RankOneSystem::from_diag(vec![c(0.0, 1.3), c(0.0, -1.3)], a0).unwrap();
        let f = formal_fundamental(&sys, 12).unwrap();
        let lhs = commutator(&f.coeffs[1], &sys.u_matrix());
        assert!(max_abs(&(lhs - (&sys.a0 - &f.exponent))) < 1e-14);
        assert!(f.residual(&sys) < 1e-13);
    }

    #[test]
    fn degenerate_blocks() {
        let a0 = CMat::from_fn(4, 4, |i, j| c(0.1 * (i as f64 - j as f64), 0.05 * (i + j) as f64));
        let sys = RankOneSystem::from_diag(vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)], a0).unwrap();
        let f = formal_fundamental(&sys, 12).unwrap();
        assert!(f.residual(&sys) < 1e-12);
        let g = formal_fundamental(&sys, 16).unwrap();
        for j in 0..=12 {
            assert!(max_abs(&(&f.coeffs[j] - &g.coeffs[j])) == 0.0);
        }
    }
}
