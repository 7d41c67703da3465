//! Stochastic-game interface shared by every learner.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous { lo: f64, hi: f64 },
}

impl ActionSpace {
    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete(k), Action::Discrete(a)) => a < k,
            (ActionSpace::Continuous { lo, hi }, Action::Continuous(x)) => {
                x.is_finite() && *x >= *lo && *x <= *hi
            }
            _ => false,
        }
    }
}

impl fmt::Display for ActionSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionSpace::Discrete(k) => write!(f, "{{0..{}}}", k.saturating_sub(1)),
            ActionSpace::Continuous { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StateSpace {
    /// Stateless repeated game.
    Singleton,
    Finite(usize),
    Continuous { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub n_agents: usize,
    pub action_spaces: Vec<ActionSpace>,
    pub state_space: StateSpace,
    pub gamma: f64,
}

impl GameSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::InvalidSpec(format!(
                "n_agents must be at least 2, got {}",
                self.n_agents
            )));
        }
        if self.action_spaces.len() != self.n_agents {
            return Err(Error::InvalidSpec(format!(
                "{} action spaces for {} agents",
                self.action_spaces.len(),
                self.n_agents
            )));
        }
        for (i, space) in self.action_spaces.iter().enumerate() {
            match *space {
                ActionSpace::Discrete(0) => {
                    return Err(Error::InvalidSpec(format!("agent {i} has no actions")))
                }
                ActionSpace::Continuous { lo, hi } if !(lo < hi) => {
                    return Err(Error::InvalidSpec(format!(
                        "agent {i}: empty interval [{lo}, {hi}]"
                    )))
                }
                _ => {}
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidSpec(format!(
                "gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn validate_joint(&self, joint: &JointAction) -> Result<()> {
        if joint.0.len() != self.n_agents {
            return Err(Error::JointActionArity {
                expected: self.n_agents,
                got: joint.0.len(),
            });
        }
        for (agent, (space, action)) in self.action_spaces.iter().zip(&joint.0).enumerate() {
            if !space.contains(action) {
                return Err(Error::ActionOutOfBounds {
                    agent,
                    value: action.to_string(),
                    space: space.to_string(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(f64),
}

impl Action {
    pub fn index(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Action::Continuous(x) => Some(*x),
            Action::Discrete(_) => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Discrete(a) => write!(f, "{a}"),
            Action::Continuous(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAction(pub Vec<Action>);

impl JointAction {
    pub fn discrete(actions: &[usize]) -> Self {
        JointAction(actions.iter().map(|&a| Action::Discrete(a)).collect())
    }

    pub fn continuous(actions: &[f64]) -> Self {
        JointAction(actions.iter().map(|&a| Action::Continuous(a)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Environment state: a table index plus the feature vector fed to networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub index: usize,
    pub features: Vec<f64>,
}

impl State {
    /// The single state of a stateless repeated game.
    pub fn singleton() -> Self {
        State {
            index: 0,
            features: vec![0.0],
        }
    }
}

pub trait Game {
    fn spec(&self) -> &GameSpec;

    fn initial_state(&self) -> State;

    /// Rewards for every agent given a validated joint action, plus the next state.
    fn step(&self, state: &State, joint: &JointAction) -> Result<(Vec<f64>, State)>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: State,
    pub joint_action: JointAction,
    pub rewards: Vec<f64>,
    pub next_state: State,
}

impl Transition {
    pub fn new(
        state: State,
        joint_action: JointAction,
        rewards: Vec<f64>,
        next_state: State,
    ) -> Result<Self> {
        if rewards.len() != joint_action.len() {
            return Err(Error::Shape {
                expected: joint_action.len(),
                got: rewards.len(),
            });
        }
        Ok(Transition {
            state,
            joint_action,
            rewards,
            next_state,
        })
    }

    /// Agent `i`'s private view: own action, the other agent's action, own reward.
    ///
    /// Only two-agent games have a scalar opponent action; the view takes the
    /// first other agent.
    pub fn view(&self, agent: usize) -> AgentTransition {
        let opponent = if agent == 0 { 1 } else { 0 };
        AgentTransition {
            state: self.state.clone(),
            own_action: self.joint_action.0[agent],
            opponent_action: self.joint_action.0[opponent],
            reward: self.rewards[agent],
            next_state: self.next_state.clone(),
        }
    }
}

/// One transition as seen by a single decentralized learner.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTransition {
    pub state: State,
    pub own_action: Action,
    pub opponent_action: Action,
    pub reward: f64,
    pub next_state: State,
}

/// Bounded FIFO of records with uniform sampling with replacement.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    records: VecDeque<T>,
}

pub const DEFAULT_BUFFER_CAPACITY: usize = 1_000_000;
pub const DEFAULT_BATCH_SIZE: usize = 64;

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        ReplayBuffer {
            capacity,
            records: VecDeque::with_capacity(capacity.min(4096)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: T) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.records.iter()
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&T>> {
        if self.records.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = self.records.len();
        Ok((0..batch_size)
            .map(|_| &self.records[rng.random_range(0..n)])
            .collect())
    }

    pub fn sample_seeded(&self, batch_size: usize, seed: u64) -> Result<Vec<&T>> {
        self.sample(batch_size, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Named consumers of a run's randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Env,
    Init(usize),
    Buffer(usize),
    Exploration(usize),
    Sampler(usize),
    Policy(usize),
}

impl Stream {
    fn id(self) -> u64 {
        let (kind, agent) = match self {
            Stream::Env => (0, 0),
            Stream::Init(a) => (1, a),
            Stream::Buffer(a) => (2, a),
            Stream::Exploration(a) => (3, a),
            Stream::Sampler(a) => (4, a),
            Stream::Policy(a) => (5, a),
        };
        (kind << 32) | agent as u64
    }
}

/// Deterministic per-consumer split of one run seed.
///
/// Every consumer gets its own ChaCha stream keyed by the run seed, so adding a
/// learner or drawing more numbers in one place leaves the others untouched.
#[derive(Debug, Clone, Copy)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, consumer: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(consumer.id());
        rng
    }
}
