use serde::{Deserialize, Serialize};

use crate::envs::MatrixGame;
use crate::{Error, Result};

/// Joint strategy of the two IGA players: probability of action 0 each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgaState {
    pub p: f64,
    pub q: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IgaParams {
    pub eta: f64,
    pub init: [f64; 2],
}

impl Default for IgaParams {
    fn default() -> Self {
        IgaParams {
            eta: 0.01,
            init: [0.9, 0.9],
        }
    }
}

impl IgaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::Config(format!("iga eta {} must be positive", self.eta)));
        }
        for (name, v) in [("p", self.init[0]), ("q", self.init[1])] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ProbabilityDomain { name, value: v });
            }
        }
        Ok(())
    }
}

impl IgaState {
    pub fn new(p: f64, q: f64, eta: f64) -> Result<Self> {
        IgaParams { eta, init: [p, q] }.validate()?;
        Ok(IgaState { p, q, eta })
    }

    /// Simultaneous ascent on the exact bilinear payoff gradients, clamped to `[0, 1]`.
    pub fn step(&mut self, game: &MatrixGame) {
        let (gp, gq) = game.payoff_gradient(self.p, self.q);
        self.p = (self.p + self.eta * gp).clamp(0.0, 1.0);
        self.q = (self.q + self.eta * gq).clamp(0.0, 1.0);
    }
}
