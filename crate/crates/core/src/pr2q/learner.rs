use rand_chacha::ChaCha8Rng;

use super::agent::{Pr2qAgent, Pr2qParams};
use crate::approx::Mlp;
use crate::game::{Action, AgentTransition, State};
use crate::learner::{Learner, PolicySummary};
use crate::{Error, Result};

/// [`Pr2qAgent`] behind the decentralized learner interface, with the
/// inverse-temperature schedule driven by the global step.
#[derive(Debug, Clone)]
pub struct Pr2qLearner {
    pub agent: Pr2qAgent,
    params: Pr2qParams,
    steps_per_iteration: u64,
    iterations: usize,
    rng: ChaCha8Rng,
}

impl Pr2qLearner {
    pub fn new(
        agent: Pr2qAgent,
        params: &Pr2qParams,
        iterations: usize,
        steps_per_iteration: usize,
        rng: ChaCha8Rng,
    ) -> Self {
        Pr2qLearner {
            agent,
            params: params.clone(),
            steps_per_iteration: steps_per_iteration.max(1) as u64,
            iterations,
            rng,
        }
    }

    fn index(action: Action, what: &str) -> Result<usize> {
        action
            .index()
            .ok_or_else(|| Error::Config(format!("tabular learner got a continuous {what}")))
    }
}

impl Learner for Pr2qLearner {
    fn act(&mut self, state: &State, step: u64) -> Result<Action> {
        if !self.params.greedy {
            let iteration = (step / self.steps_per_iteration) as usize;
            let beta = self.params.beta_at(iteration, self.iterations);
            self.agent.set_beta(Some(beta));
        }
        Ok(Action::Discrete(self.agent.select_action(state.index, &mut self.rng)))
    }

    fn policy(&self, state: &State) -> Result<PolicySummary> {
        Ok(PolicySummary::Discrete(self.agent.action_distribution(state.index)))
    }

    fn observe(&mut self, t: AgentTransition) -> Result<()> {
        let a = Self::index(t.own_action, "own action")?;
        let o = Self::index(t.opponent_action, "opponent action")?;
        self.agent.update(t.state.index, a, o, t.reward, t.next_state.index)
    }

    fn parameters(&self) -> Vec<&Mlp> {
        Vec::new()
    }
}
