//! Piecewise paths (segments and circular arcs) with a continuously tracked
//! argument, and transport of a matrix solution along them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dop853::Dop853;
use crate::error::{Error, Result};
use crate::mat::{CMat, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    Segment { from: C64, to: C64 },
    Arc { center: C64, radius: f64, theta0: f64, theta1: f64 },
}

impl Piece {
    pub fn point(&self, t: f64) -> C64 {
        match *self {
            Piece::Segment { from, to } => from + (to - from) * t,
            Piece::Arc { center, radius, theta0, theta1 } => center + (I * (theta0 + (theta1 - theta0) * t)).exp() * radius,
        }
    }

    pub fn velocity(&self, t: f64) -> C64 {
        match *self {
            Piece::Segment { from, to } => to - from,
            Piece::Arc { radius, theta0, theta1, .. } => {
                let th = theta0 + (theta1 - theta0) * t;
                I * (theta1 - theta0) * radius * (I * th).exp()
            }
        }
    }

    pub fn start(&self) -> C64 {
        self.point(0.0)
    }

    pub fn end(&self) -> C64 {
        self.point(1.0)
    }

    pub fn length(&self) -> f64 {
        match *self {
            Piece::Segment { from, to } => (to - from).norm(),
            Piece::Arc { radius, theta0, theta1, .. } => radius * (theta1 - theta0).abs(),
        }
    }

    /// Distance from `p` to the piece.
    pub fn distance_to(&self, p: C64) -> f64 {
        match *self {
            Piece::Segment { from, to } => {
                let d = to - from;
                let len2 = d.norm_sqr();
                if len2 == 0.0 {
                    return (p - from).norm();
                }
                let s = (((p - from) * d.conj()).re / len2).clamp(0.0, 1.0);
                (from + d * s - p).norm()
            }
            Piece::Arc { center, radius, theta0, theta1 } => {
                let v = p - center;
                let rho = v.norm();
                let ends = (self.start() - p).norm().min((self.end() - p).norm());
                if rho == 0.0 {
                    return radius;
                }
                let (lo, hi) = if theta0 <= theta1 { (theta0, theta1) } else { (theta1, theta0) };
                let phi = v.arg();
                let k = ((lo - phi) / (2.0 * PI)).ceil();
                let phi = phi + 2.0 * PI * k;
                if phi <= hi {
                    (rho - radius).abs()
                } else {
                    ends
                }
            }
        }
    }

    /// Change of arg(z − p) along the piece; `p` must not lie on the piece.
    pub fn winding_arg(&self, p: C64) -> f64 {
        match *self {
            Piece::Segment { from, to } => ((to - p) / (from - p)).arg(),
            Piece::Arc { center, theta0, theta1, .. } if center == p => theta1 - theta0,
            Piece::Arc { theta0, theta1, .. } => {
                let k = (((theta1 - theta0).abs() / 0.05).ceil() as usize).max(1);
                let mut total = 0.0;
                let mut prev = self.start() - p;
                for s in 1..=k {
                    let cur = self.point(s as f64 / k as f64) - p;
                    total += (cur / prev).arg();
                    prev = cur;
                }
                total
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub pieces: Vec<Piece>,
    /// arg of the starting point on the chosen branch of log z.
    pub start_arg: f64,
}

impl PathSpec {
    pub fn new(start_arg: f64) -> Self {
        PathSpec { pieces: Vec::new(), start_arg }
    }

    pub fn segment(mut self, from: C64, to: C64) -> Self {
        if from != to {
            self.pieces.push(Piece::Segment { from, to });
        }
        self
    }

    /// Arc on |z − center| = radius from angle θ0 to θ1 (ccw when θ1 > θ0).
    pub fn arc(mut self, center: C64, radius: f64, theta0: f64, theta1: f64) -> Self {
        if theta0 != theta1 {
            self.pieces.push(Piece::Arc { center, radius, theta0, theta1 });
        }
        self
    }

    pub fn start(&self) -> Option<C64> {
        self.pieces.first().map(Piece::start)
    }

    pub fn end(&self) -> Option<C64> {
        self.pieces.last().map(Piece::end)
    }

    pub fn length(&self) -> f64 {
        self.pieces.iter().map(Piece::length).sum()
    }

    /// arg of the end point, continued along the path from `start_arg`.
    pub fn end_arg(&self) -> f64 {
        self.start_arg + self.pieces.iter().map(|p| p.winding_arg(C64::new(0.0, 0.0))).sum::<f64>()
    }

    /// The reversed path, starting from the end with its continued argument.
    pub fn reversed(&self) -> PathSpec {
        let pieces = self
            .pieces
            .iter()
            .rev()
            .map(|p| match *p {
                Piece::Segment { from, to } => Piece::Segment { from: to, to: from },
                Piece::Arc { center, radius, theta0, theta1 } => Piece::Arc { center, radius, theta0: theta1, theta1: theta0 },
            })
            .collect();
        PathSpec { pieces, start_arg: self.end_arg() }
    }

    /// Minimum distance to the given points; fails below `clearance` or when
    /// consecutive pieces do not join.
    pub fn check_clearance(&self, points: &[C64], clearance: f64) -> Result<f64> {
        for w in self.pieces.windows(2) {
            let gap = (w[0].end() - w[1].start()).norm();
            if gap > 1e-12 * w[0].end().norm().max(1.0) {
                return Err(Error::Dimension(format!("path pieces do not join (gap {gap:e})")));
            }
        }
        let found = self
            .pieces
            .iter()
            .flat_map(|piece| points.iter().map(move |&p| piece.distance_to(p)))
            .fold(f64::INFINITY, f64::min);
        if found < clearance {
            return Err(Error::Clearance { found, required: clearance });
        }
        Ok(found)
    }
}

/// Transports `f` along `path` for dF/dz = coeff(z)·F.
pub fn integrate_path(coeff: &dyn Fn(C64) -> CMat, path: &PathSpec, f: &CMat, solver: &Dop853) -> Result<CMat> {
    let mut y = f.clone();
    for piece in &path.pieces {
        let rhs = |t: f64, y: &CMat| coeff(piece.point(t)) * y * piece.velocity(t);
        y = solver.integrate(&rhs, 0.0, 1.0, &y)?.0;
    }
    Ok(y)
}
