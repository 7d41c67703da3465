//! The decentralized learner interface and pieces shared by the
//! continuous-action learners.
//!
//! A learner only ever sees its own view of executed transitions; nothing in
//! this interface hands it another learner or another learner's parameters.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::approx::{Mlp, Squash};
use crate::game::{
    Action, AgentTransition, RngStreams, State, Stream, DEFAULT_BATCH_SIZE, DEFAULT_BUFFER_CAPACITY,
};
use crate::{Error, Result};

/// Independent random streams of one agent.
#[derive(Debug, Clone)]
pub struct AgentRngs {
    pub exploration: ChaCha8Rng,
    pub buffer: ChaCha8Rng,
    pub sampler: ChaCha8Rng,
}

impl AgentRngs {
    pub fn for_agent(streams: &RngStreams, agent: usize) -> Self {
        AgentRngs {
            exploration: streams.stream(Stream::Exploration(agent)),
            buffer: streams.stream(Stream::Buffer(agent)),
            sampler: streams.stream(Stream::Sampler(agent)),
        }
    }

    pub fn seeded(seed: u64) -> Self {
        Self::for_agent(&RngStreams::new(seed), 0)
    }
}

/// What a learner reports as its current policy.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySummary {
    /// Action probabilities.
    Discrete(Vec<f64>),
    /// Deterministic (noise-free) action.
    Continuous(f64),
}

pub trait Learner: Send {
    /// Action to execute at global step `step`, exploration included.
    fn act(&mut self, state: &State, step: u64) -> Result<Action>;

    /// Current policy without exploration.
    fn policy(&self, state: &State) -> Result<PolicySummary>;

    /// Records the agent's own view of an executed transition and learns from it.
    fn observe(&mut self, transition: AgentTransition) -> Result<()>;

    /// Every network the learner owns, for checkpointing and audits.
    fn parameters(&self) -> Vec<&Mlp>;
}

/// Hyperparameters shared by the actor-critic family (PR2-AC, DDPG, DDPG-OM).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActorCriticParams {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Opponent sampler (PR2-AC) or opponent predictor (DDPG-OM).
    pub opponent_lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub gamma: f64,
    /// Target blend rate.
    pub tau: f64,
    /// Std of Gaussian noise added before squashing.
    pub exploration_noise: f64,
    /// Steps during which exploration noise is applied.
    pub exploration_steps: u64,
    /// Initial steps whose actions are drawn uniformly over the action interval.
    pub warmup_steps: u64,
    /// Scale applied to the actor's output layer at initialization.
    pub actor_output_scale: f64,
    /// Opponent particles per context (PR2-AC).
    pub particles: usize,
    pub noise_dim: usize,
    /// Multiplies Q in the sampler's target density (PR2-AC).
    pub temperature: f64,
    /// Differentiate through the sampled opponent reaction in the actor step (PR2-AC).
    pub reaction_gradient: bool,
}

impl Default for ActorCriticParams {
    fn default() -> Self {
        ActorCriticParams {
            hidden: vec![100, 100],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            opponent_lr: 1e-4,
            batch_size: DEFAULT_BATCH_SIZE,
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            gamma: 0.0,
            tau: 0.01,
            exploration_noise: 0.1,
            exploration_steps: 1000,
            warmup_steps: 0,
            actor_output_scale: 0.1,
            particles: 32,
            noise_dim: 1,
            temperature: 0.5,
            reaction_gradient: true,
        }
    }
}

impl ActorCriticParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad(format!("hidden sizes {:?} must be non-empty and positive", self.hidden));
        }
        for (name, lr) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("opponent_lr", self.opponent_lr),
        ] {
            if !(lr.is_finite() && lr > 0.0) {
                return bad(format!("{name} {lr} must be positive"));
            }
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.particles == 0 {
            return bad("batch_size, buffer_capacity and particles must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau {} outside (0, 1]", self.tau));
        }
        if !(self.exploration_noise >= 0.0 && self.temperature >= 0.0) {
            return bad("exploration_noise and temperature must be >= 0".into());
        }
        if !self.actor_output_scale.is_finite() {
            return bad("actor_output_scale must be finite".into());
        }
        Ok(())
    }
}

/// Exploration schedule: uniform warmup, then Gaussian pre-squash noise, then none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Explorer {
    pub warmup_steps: u64,
    pub noise: f64,
    pub noise_steps: u64,
}

impl Explorer {
    pub fn from_params(p: &ActorCriticParams) -> Self {
        Explorer {
            warmup_steps: p.warmup_steps,
            noise: p.exploration_noise,
            noise_steps: p.exploration_steps,
        }
    }

    /// Executed action given the actor's pre-squash output `u`.
    pub fn action<R: Rng + ?Sized>(&self, u: f64, squash: Squash, step: u64, rng: &mut R) -> f64 {
        if step < self.warmup_steps {
            return rng.random_range(squash.lo..=squash.hi);
        }
        if step < self.noise_steps && self.noise > 0.0 {
            let eps: f64 = rng.sample(StandardNormal);
            return squash.apply(u + self.noise * eps);
        }
        squash.apply(u)
    }
}

/// Replay records of a two-player continuous game, columnized for networks.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub own: Vec<f64>,
    pub opp: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
}

impl Batch {
    pub fn from_records(records: &[&AgentTransition]) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyBuffer)?;
        let sd = first.state.features.len();
        let n = records.len();
        let mut states = Array2::zeros((n, sd));
        let mut next_states = Array2::zeros((n, sd));
        let (mut own, mut opp, mut rewards) = (Vec::new(), Vec::new(), Vec::new());
        for (j, t) in records.iter().enumerate() {
            if t.state.features.len() != sd || t.next_state.features.len() != sd {
                return Err(Error::Shape {
                    expected: sd,
                    got: t.state.features.len(),
                });
            }
            states.row_mut(j).assign(&ndarray::aview1(&t.state.features));
            next_states.row_mut(j).assign(&ndarray::aview1(&t.next_state.features));
            let value = |a: Action| {
                a.value()
                    .ok_or_else(|| Error::Config("continuous learner got a discrete action".into()))
            };
            own.push(value(t.own_action)?);
            opp.push(value(t.opponent_action)?);
            rewards.push(t.reward);
        }
        Ok(Batch {
            states,
            own,
            opp,
            rewards,
            next_states,
        })
    }

    pub fn len(&self) -> usize {
        self.own.len()
    }

    pub fn is_empty(&self) -> bool {
        self.own.is_empty()
    }
}

/// Network inputs `[state, normalized own action, optional normalized opponent action]`.
pub fn critic_inputs(
    states: ndarray::ArrayView2<'_, f64>,
    own: &[f64],
    opp: Option<&[f64]>,
    own_sq: Squash,
    opp_sq: Squash,
    repeat: usize,
) -> Array2<f64> {
    let sd = states.ncols();
    let width = sd + 1 + usize::from(opp.is_some());
    let rows = own.len();
    let mut x = Array2::zeros((rows, width));
    for r in 0..rows {
        let mut row = x.row_mut(r);
        row.slice_mut(ndarray::s![..sd]).assign(&states.row(r / repeat));
        row[sd] = own_sq.normalize(own[r]);
        if let Some(opp) = opp {
            row[sd + 1] = opp_sq.normalize(opp[r]);
        }
    }
    x
}
