use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GameId, LearnerId};
use crate::approx::Squash;
use crate::baselines::{sga_step, DdpgAgent, IgaState};
use crate::envs::{MatrixGame, MaxOfTwoQuadraticGame};
use crate::game::{Game, JointAction, RngStreams, State, Stream, Transition};
use crate::learner::{AgentRngs, Learner, PolicySummary};
use crate::pr2ac::Pr2acAgent;
use crate::pr2q::{Pr2qAgent, Pr2qLearner};
use crate::{Error, Result};

/// One CSV row: one agent at one iteration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub iteration: usize,
    pub agent: usize,
    /// P(action 0) for discrete learners.
    pub policy_0: Option<f64>,
    /// Noise-free action for continuous learners.
    pub action_mean: Option<f64>,
    /// Reward of the current joint policy.
    pub reward: f64,
    pub dist_local: Option<f64>,
    pub dist_global: Option<f64>,
    pub wall_ms: Option<u64>,
}

/// Rows of one run, plus the failure that ended it early, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub seed: u64,
    pub records: Vec<RunRecord>,
    pub abort: Option<String>,
}

impl RunOutcome {
    /// Rows of the last recorded iteration, one per agent.
    pub fn final_rows(&self) -> &[RunRecord] {
        let last = self.records.last().map(|r| r.iteration);
        let start = self
            .records
            .iter()
            .position(|r| Some(r.iteration) == last)
            .unwrap_or(self.records.len());
        &self.records[start..]
    }
}

/// Euclidean distance; both points must have the same dimension.
pub fn distance_to(point: &[f64], landmark: &[f64]) -> Result<f64> {
    if point.len() != landmark.len() {
        return Err(Error::Shape {
            expected: landmark.len(),
            got: point.len(),
        });
    }
    Ok(point
        .iter()
        .zip(landmark)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

enum Env {
    Matrix(MatrixGame),
    Differential(MaxOfTwoQuadraticGame),
}

impl Env {
    fn new(game: GameId) -> Self {
        match game {
            GameId::Matrix => Env::Matrix(MatrixGame::default()),
            GameId::Differential => Env::Differential(MaxOfTwoQuadraticGame::default()),
        }
    }

    fn game(&self) -> &dyn Game {
        match self {
            Env::Matrix(g) => g,
            Env::Differential(g) => g,
        }
    }
}

/// Per-iteration snapshot of both agents' policies.
enum Snapshot {
    Probabilities([f64; 2]),
    Actions([f64; 2]),
}

fn snapshot(policies: [PolicySummary; 2]) -> Result<Snapshot> {
    match policies {
        [PolicySummary::Discrete(p), PolicySummary::Discrete(q)] => {
            Ok(Snapshot::Probabilities([p[0], q[0]]))
        }
        [PolicySummary::Continuous(a), PolicySummary::Continuous(b)] => Ok(Snapshot::Actions([a, b])),
        _ => Err(Error::Config("agents report different policy kinds".into())),
    }
}

struct Recorder<'a> {
    env: &'a Env,
    seed: u64,
    started: Option<Instant>,
    records: Vec<RunRecord>,
}

impl Recorder<'_> {
    fn push(&mut self, iteration: usize, snap: Snapshot) -> Result<()> {
        let wall_ms = self.started.map(|t| t.elapsed().as_millis() as u64);
        let rows: [RunRecord; 2] = match (self.env, snap) {
            (Env::Matrix(g), Snapshot::Probabilities([p, q])) => {
                let (u1, u2) = g.expected_payoffs(p, q)?;
                let eq = [g.equilibrium.0, g.equilibrium.1];
                let dist = distance_to(&[p, q], &eq)?;
                [(0, p, u1), (1, q, u2)].map(|(agent, prob, reward)| RunRecord {
                    seed: self.seed,
                    iteration,
                    agent,
                    policy_0: Some(prob),
                    action_mean: None,
                    reward,
                    dist_local: None,
                    dist_global: Some(dist),
                    wall_ms,
                })
            }
            (Env::Differential(g), Snapshot::Actions(a)) => {
                let reward = g.reward(a[0], a[1])?;
                let dl = distance_to(&a, &g.local_optimum.point)?;
                let dg = distance_to(&a, &g.global_optimum.point)?;
                [0, 1].map(|agent| RunRecord {
                    seed: self.seed,
                    iteration,
                    agent,
                    policy_0: None,
                    action_mean: Some(a[agent]),
                    reward,
                    dist_local: Some(dl),
                    dist_global: Some(dg),
                    wall_ms,
                })
            }
            _ => return Err(Error::Config("policy kind does not match the game".into())),
        };
        self.records.extend(rows);
        Ok(())
    }
}

fn build_learner(
    config: &ExperimentConfig,
    id: LearnerId,
    agent: usize,
    streams: &RngStreams,
) -> Result<Box<dyn Learner>> {
    let sq = Squash::new(crate::envs::DIFF_LO, crate::envs::DIFF_HI);
    let mut init = streams.stream(Stream::Init(agent));
    let rngs = AgentRngs::for_agent(streams, agent);
    let ac = &config.actor_critic;
    Ok(match id {
        LearnerId::Pr2q => {
            let a = Pr2qAgent::new(1, 2, 2, &config.pr2q)?;
            Box::new(Pr2qLearner::new(
                a,
                &config.pr2q,
                config.iterations(),
                config.steps_per_iteration(),
                streams.stream(Stream::Policy(agent)),
            ))
        }
        LearnerId::Pr2ac => Box::new(Pr2acAgent::new(1, sq, sq, ac, &mut init, rngs)?),
        LearnerId::DdpgLite => Box::new(DdpgAgent::new(1, sq, sq, ac, false, &mut init, rngs)?),
        LearnerId::DdpgOm => Box::new(DdpgAgent::new(1, sq, sq, ac, true, &mut init, rngs)?),
        LearnerId::Iga | LearnerId::Sga => {
            return Err(Error::Config(format!("{id} is not a per-agent learner")))
        }
    })
}

/// Executes one seeded run. Iteration 0 records the initial policies; every
/// later iteration records the policies after `steps_per_iteration` steps.
/// A failure mid-run keeps the rows recorded so far and reports the reason.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<RunOutcome> {
    config.validate()?;
    let env = Env::new(config.game);
    let mut rec = Recorder {
        env: &env,
        seed,
        started: config.record_wall_clock.then(Instant::now),
        records: Vec::new(),
    };
    let result = match config.learners[0] {
        LearnerId::Iga => run_iga(config, &env, &mut rec),
        LearnerId::Sga => run_sga(config, &env, &mut rec),
        _ => run_learners(config, &env, seed, &mut rec),
    };
    let abort = match result {
        Ok(()) => None,
        Err(e @ (Error::Config(_) | Error::InvalidSpec(_))) => return Err(e),
        Err(e) => Some(e.to_string()),
    };
    Ok(RunOutcome {
        seed,
        records: rec.records,
        abort,
    })
}

fn run_learners(config: &ExperimentConfig, env: &Env, seed: u64, rec: &mut Recorder) -> Result<()> {
    let streams = RngStreams::new(seed);
    let mut agents = config
        .learners
        .iter()
        .enumerate()
        .map(|(i, &id)| build_learner(config, id, i, &streams))
        .collect::<Result<Vec<_>>>()?;
    let game = env.game();
    let mut state = game.initial_state();
    let policies = |agents: &[Box<dyn Learner>], s: &State| -> Result<Snapshot> {
        snapshot([agents[0].policy(s)?, agents[1].policy(s)?])
    };
    rec.push(0, policies(&agents, &state)?)?;
    let mut step = 0u64;
    for iteration in 1..=config.iterations() {
        let steps = config.steps_per_iteration() as u64;
        state = play(game, &mut agents, state, step, steps)?;
        step += steps;
        rec.push(iteration, policies(&agents, &state)?)?;
    }
    Ok(())
}

/// Plays `steps` joint steps from `state`. Each agent sees only its own view
/// of the executed transition.
pub fn play(
    game: &dyn Game,
    agents: &mut [Box<dyn Learner>],
    mut state: State,
    first_step: u64,
    steps: u64,
) -> Result<State> {
    for step in first_step..first_step + steps {
        let joint = JointAction(
            agents
                .iter_mut()
                .map(|a| a.act(&state, step))
                .collect::<Result<_>>()?,
        );
        let (rewards, next) = game.step(&state, &joint)?;
        let t = Transition::new(state.clone(), joint, rewards, next.clone())?;
        for (i, agent) in agents.iter_mut().enumerate() {
            agent.observe(t.view(i))?;
        }
        state = next;
    }
    Ok(state)
}

fn run_iga(config: &ExperimentConfig, env: &Env, rec: &mut Recorder) -> Result<()> {
    let Env::Matrix(game) = env else {
        return Err(Error::Config("iga needs the matrix game".into()));
    };
    let p = &config.iga;
    let mut s = IgaState::new(p.init[0], p.init[1], p.eta)?;
    rec.push(0, Snapshot::Probabilities([s.p, s.q]))?;
    for iteration in 1..=config.iterations() {
        for _ in 0..config.steps_per_iteration() {
            s.step(game);
        }
        rec.push(iteration, Snapshot::Probabilities([s.p, s.q]))?;
    }
    Ok(())
}

fn run_sga(config: &ExperimentConfig, env: &Env, rec: &mut Recorder) -> Result<()> {
    let Env::Differential(game) = env else {
        return Err(Error::Config("sga needs the differential game".into()));
    };
    let params = &config.sga;
    let mut a = params.init;
    game.reward(a[0], a[1])?;
    rec.push(0, Snapshot::Actions(a))?;
    for iteration in 1..=config.iterations() {
        for _ in 0..config.steps_per_iteration() {
            a = sga_step(game, a, params).next;
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("sga actions {a:?}")));
        }
        rec.push(iteration, Snapshot::Actions(a))?;
    }
    Ok(())
}
