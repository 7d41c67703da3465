use serde::{Deserialize, Serialize};

use crate::envs::{quadratic_parts, MaxOfTwoQuadraticGame};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgaParams {
    pub eta: f64,
    /// Weight of the antisymmetric adjustment.
    pub lambda: f64,
    /// Finite-difference step.
    pub h: f64,
    pub init: [f64; 2],
}

impl Default for SgaParams {
    fn default() -> Self {
        SgaParams {
            eta: 0.01,
            lambda: 1.0,
            h: 1e-4,
            init: [0.0, 0.0],
        }
    }
}

impl SgaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.h > 0.0 && self.lambda.is_finite() && self.eta.is_finite()) {
            return Err(Error::Config("sga eta and h must be positive, lambda finite".into()));
        }
        Ok(())
    }
}

/// Gradient and Jacobian of the simultaneous-gradient field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgaStep {
    pub xi: [f64; 2],
    pub adjustment: [f64; 2],
    pub next: [f64; 2],
}

/// Reward restricted to one quadratic piece (0: shallow, 1: tall).
fn piece(branch: usize, x: f64, y: f64) -> f64 {
    let (f1, f2) = quadratic_parts(x, y);
    if branch == 0 {
        f1
    } else {
        f2
    }
}

/// First partial along `axis` by central differences, falling back to a
/// one-sided difference on the centre's side when the stencil crosses the
/// switching ridge between the two pieces.
fn partial(game: &MaxOfTwoQuadraticGame, p: [f64; 2], axis: usize, h: f64) -> f64 {
    let b = game.branch(p[0], p[1]);
    let shifted = |d: f64| {
        let mut q = p;
        q[axis] += d;
        q
    };
    let (up, down) = (shifted(h), shifted(-h));
    let r = |q: [f64; 2]| piece(b, q[0], q[1]);
    let up_same = game.branch(up[0], up[1]) == b;
    let down_same = game.branch(down[0], down[1]) == b;
    match (up_same, down_same) {
        (true, true) | (false, false) => (r(up) - r(down)) / (2.0 * h),
        (true, false) => (r(up) - r(p)) / h,
        (false, true) => (r(p) - r(down)) / h,
    }
}

fn gradient(game: &MaxOfTwoQuadraticGame, p: [f64; 2], h: f64) -> [f64; 2] {
    [partial(game, p, 0, h), partial(game, p, 1, h)]
}

/// One symplectic-gradient-adjustment step of both players on the shared reward.
///
/// `xi_i = d r / d a_i`; `J = d xi / d a` by central differences of `xi`;
/// update along `xi + lambda * A^T xi` with `A = (J - J^T) / 2`; clamp to bounds.
pub fn sga_step(game: &MaxOfTwoQuadraticGame, p: [f64; 2], params: &SgaParams) -> SgaStep {
    let h = params.h;
    let xi = gradient(game, p, h);
    let mut jac = [[0.0; 2]; 2];
    for col in 0..2 {
        let mut up = p;
        let mut down = p;
        up[col] += h;
        down[col] -= h;
        let (gu, gd) = (gradient(game, up, h), gradient(game, down, h));
        for row in 0..2 {
            jac[row][col] = (gu[row] - gd[row]) / (2.0 * h);
        }
    }
    let a01 = 0.5 * (jac[0][1] - jac[1][0]);
    // A = [[0, a01], [-a01, 0]], so A^T xi = (-a01 xi_1, a01 xi_0).
    let adjustment = [-params.lambda * a01 * xi[1], params.lambda * a01 * xi[0]];
    let (lo, hi) = game.bounds();
    let next = [
        (p[0] + params.eta * (xi[0] + adjustment[0])).clamp(lo, hi),
        (p[1] + params.eta * (xi[1] + adjustment[1])).clamp(lo, hi),
    ];
    SgaStep {
        xi,
        adjustment,
        next,
    }
}
