use rand::Rng;
use serde::{Deserialize, Serialize};

use super::counting::CountingModel;
use super::soft::{opponent_conditional, soft_marginal, softmax_policy};
use crate::approx::QTable;
use crate::{Error, Result};

/// Where `rho(a_-i | s, a_i)` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentModelKind {
    /// Co-occurrence frequencies of observed joint actions.
    Counting,
    /// Softmax of the agent's own joint-Q row.
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pr2qParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Inverse temperature of action selection at the first iteration.
    pub beta: f64,
    /// When set, beta moves linearly to this value by the last iteration.
    pub beta_final: Option<f64>,
    /// Always play the first maximizer instead of sampling.
    pub greedy: bool,
    pub opponent_model: OpponentModelKind,
}

impl Default for Pr2qParams {
    fn default() -> Self {
        Pr2qParams {
            alpha: 0.1,
            gamma: 0.0,
            beta: 1.0,
            beta_final: None,
            greedy: false,
            opponent_model: OpponentModelKind::Counting,
        }
    }
}

impl Pr2qParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("pr2q alpha {} outside (0, 1]", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("pr2q gamma {} outside [0, 1)", self.gamma)));
        }
        for beta in std::iter::once(self.beta).chain(self.beta_final) {
            if !(beta.is_finite() && beta >= 0.0) {
                return Err(Error::Config(format!("pr2q beta {beta} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Inverse temperature at `iteration` of `iterations`.
    pub fn beta_at(&self, iteration: usize, iterations: usize) -> f64 {
        match self.beta_final {
            Some(end) if iterations > 1 => {
                let t = iteration.min(iterations - 1) as f64 / (iterations - 1) as f64;
                self.beta + (end - self.beta) * t
            }
            _ => self.beta,
        }
    }
}

/// Tabular learner over a joint table `Q(s, a_i, a_-i)` and a marginal table `Q(s, a_i)`.
#[derive(Debug, Clone)]
pub struct Pr2qAgent {
    q: QTable,
    counts: CountingModel,
    alpha: f64,
    gamma: f64,
    beta: Option<f64>,
    model: OpponentModelKind,
}

impl Pr2qAgent {
    pub fn new(n_states: usize, n_own: usize, n_opp: usize, params: &Pr2qParams) -> Result<Self> {
        params.validate()?;
        Ok(Pr2qAgent {
            q: QTable::zeros(n_states, n_own, n_opp),
            counts: CountingModel::new(n_states, n_own, n_opp),
            alpha: params.alpha,
            gamma: params.gamma,
            beta: (!params.greedy).then_some(params.beta),
            model: params.opponent_model,
        })
    }

    /// Bypasses parameter validation so the degenerate `alpha = 0` can be probed.
    pub fn with_table(q: QTable, alpha: f64, gamma: f64, model: OpponentModelKind) -> Self {
        let counts = CountingModel::new(q.n_states(), q.n_own(), q.n_opp());
        Pr2qAgent {
            q,
            counts,
            alpha,
            gamma,
            beta: Some(1.0),
            model,
        }
    }

    pub fn table(&self) -> &QTable {
        &self.q
    }

    pub fn counts(&self) -> &CountingModel {
        &self.counts
    }

    /// `None` selects greedily.
    pub fn set_beta(&mut self, beta: Option<f64>) {
        self.beta = beta;
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// `rho(. | s, a)` under the configured opponent model.
    pub fn conditional(&self, s: usize, a: usize) -> Vec<f64> {
        match self.model {
            OpponentModelKind::Counting => self.counts.conditional(s, a),
            OpponentModelKind::Softmax => {
                opponent_conditional(self.q.joint_row(s, a)).expect("table entries stay finite")
            }
        }
    }

    /// `sum_o rho(o | s, a) Q(s, a, o)` for every own action `a`.
    pub fn expected_values(&self, s: usize) -> Vec<f64> {
        (0..self.q.n_own())
            .map(|a| {
                let rho = self.conditional(s, a);
                rho.iter().zip(self.q.joint_row(s, a)).map(|(p, q)| p * q).sum()
            })
            .collect()
    }

    pub fn value(&self, s: usize) -> f64 {
        self.expected_values(s)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn action_distribution(&self, s: usize) -> Vec<f64> {
        softmax_policy(&self.expected_values(s), self.beta)
    }

    pub fn select_action<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        sample_index(&self.action_distribution(s), rng)
    }

    /// One TD step on both tables from an observed `(s, a, o, r, s')`.
    pub fn update(&mut self, s: usize, a: usize, o: usize, r: f64, s_next: usize) -> Result<()> {
        let q = &self.q;
        if s >= q.n_states() || s_next >= q.n_states() || a >= q.n_own() || o >= q.n_opp() {
            return Err(Error::Config(format!(
                "transition (s={s}, a={a}, o={o}, s'={s_next}) outside table"
            )));
        }
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("reward {r}")));
        }
        let target = r + self.gamma * self.value(s_next);
        let joint = (1.0 - self.alpha) * self.q.joint(s, a, o) + self.alpha * target;
        let marginal = (1.0 - self.alpha) * self.q.marginal(s, a) + self.alpha * target;
        self.q.set_joint(s, a, o, joint);
        self.q.set_marginal(s, a, marginal);
        self.counts.observe(s, a, o)
    }

    /// Log-sum-exp of the joint row, the marginal consistent with the joint table.
    pub fn soft_marginal_view(&self, s: usize, a: usize) -> f64 {
        soft_marginal(self.q.joint_row(s, a)).expect("table entries stay finite")
    }
}

/// Inverse-CDF draw; the last index absorbs rounding.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
