use ndarray::{Array2, ArrayView2};
use rand_chacha::ChaCha8Rng;

use crate::approx::{Mlp, Squash, Trainable};
use crate::game::{Action, AgentTransition, ReplayBuffer, State};
use crate::learner::{
    critic_inputs, ActorCriticParams, AgentRngs, Batch, Explorer, Learner, PolicySummary,
};
use crate::{Error, Result};

/// Supervised head predicting the opponent's next action from the state.
#[derive(Debug, Clone)]
pub struct OpponentPredictor {
    pub net: Trainable,
    squash: Squash,
}

impl OpponentPredictor {
    pub fn new(net: Mlp, squash: Squash, lr: f64) -> Self {
        OpponentPredictor {
            net: Trainable::new(net, lr),
            squash,
        }
    }

    pub fn predict(&self, states: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.net.net.predict(states)?.iter().map(|&u| self.squash.apply(u)).collect())
    }

    /// One step on the mean squared error, measured in normalized action units,
    /// toward the observed opponent actions.
    pub fn step(&mut self, states: ArrayView2<'_, f64>, observed: &[f64]) -> Result<f64> {
        let trace = self.net.net.forward_trace(states)?;
        let n = observed.len() as f64;
        let s = self.squash;
        let mut loss = 0.0;
        let seed: Vec<f64> = trace
            .output()
            .iter()
            .zip(observed)
            .map(|(&u, &target)| {
                let e = s.normalize(s.apply(u)) - s.normalize(target);
                loss += e * e / n;
                2.0 * e / n * s.derivative(u) / s.half()
            })
            .collect();
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("predictor loss {loss}")));
        }
        let seed = Array2::from_shape_vec((seed.len(), 1), seed).expect("column");
        let grads = self.net.net.backward(&trace, seed.view())?;
        self.net.apply(&grads.params)?;
        Ok(loss)
    }
}

/// Independent deterministic policy gradient learner. With a predictor the
/// critic also sees the predicted opponent action.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Trainable,
    pub critic: Trainable,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub predictor: Option<OpponentPredictor>,
    pub buffer: ReplayBuffer<AgentTransition>,
    params: ActorCriticParams,
    explorer: Explorer,
    own: Squash,
    opp: Squash,
    rngs: AgentRngs,
}

impl DdpgAgent {
    /// `opponent_model` selects the DDPG-OM variant.
    pub fn new(
        state_dim: usize,
        own: Squash,
        opp: Squash,
        params: &ActorCriticParams,
        opponent_model: bool,
        init: &mut ChaCha8Rng,
        rngs: AgentRngs,
    ) -> Result<Self> {
        params.validate()?;
        let mut actor = Mlp::new(&Mlp::hidden_sizes(state_dim, &params.hidden, 1), init);
        actor.scale_output_layer(params.actor_output_scale);
        let critic_in = state_dim + 1 + usize::from(opponent_model);
        let critic = Mlp::new(&Mlp::hidden_sizes(critic_in, &params.hidden, 1), init);
        let predictor = opponent_model.then(|| {
            let net = Mlp::new(&Mlp::hidden_sizes(state_dim, &params.hidden, 1), init);
            OpponentPredictor::new(net, opp, params.opponent_lr)
        });
        Ok(DdpgAgent {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor: Trainable::new(actor, params.actor_lr),
            critic: Trainable::new(critic, params.critic_lr),
            predictor,
            buffer: ReplayBuffer::new(params.buffer_capacity),
            explorer: Explorer::from_params(params),
            params: params.clone(),
            own,
            opp,
            rngs,
        })
    }

    fn predicted(&self, states: ArrayView2<'_, f64>) -> Result<Option<Vec<f64>>> {
        self.predictor.as_ref().map(|p| p.predict(states)).transpose()
    }

    fn inputs(&self, states: ArrayView2<'_, f64>, own: &[f64], opp: Option<&[f64]>) -> Array2<f64> {
        critic_inputs(states, own, opp, self.own, self.opp, 1)
    }

    /// `y = r + gamma * Q'(s', mu'(s') [, predicted a_-i(s')])`.
    pub fn critic_target(&self, batch: &Batch) -> Result<Vec<f64>> {
        let gamma = self.params.gamma;
        if gamma == 0.0 {
            return Ok(batch.rewards.clone());
        }
        let s2 = batch.next_states.view();
        let a2: Vec<f64> = self.actor_target.predict(s2)?.iter().map(|&u| self.own.apply(u)).collect();
        let o2 = self.predicted(s2)?;
        let q = self.critic_target.predict(self.inputs(s2, &a2, o2.as_deref()).view())?;
        Ok(batch.rewards.iter().zip(q.iter()).map(|(r, q)| r + gamma * q).collect())
    }

    pub fn critic_step(&mut self, batch: &Batch, targets: &[f64]) -> Result<f64> {
        let opp = self.predicted(batch.states.view())?;
        let x = self.inputs(batch.states.view(), &batch.own, opp.as_deref());
        let trace = self.critic.net.forward_trace(x.view())?;
        let n = batch.len() as f64;
        let err: Vec<f64> = trace.output().iter().zip(targets).map(|(q, y)| q - y).collect();
        let loss = err.iter().map(|e| e * e).sum::<f64>() / n;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("critic loss {loss}")));
        }
        let seed = Array2::from_shape_vec((err.len(), 1), err.iter().map(|e| 2.0 * e / n).collect())
            .expect("column");
        let grads = self.critic.net.backward(&trace, seed.view())?;
        self.critic.apply(&grads.params)?;
        Ok(loss)
    }

    /// Deterministic policy gradient with the predictor, if any, held fixed.
    pub fn actor_step(&mut self, batch: &Batch) -> Result<()> {
        let states = batch.states.view();
        let trace = self.actor.net.forward_trace(states)?;
        let own: Vec<f64> = trace.output().iter().map(|&u| self.own.apply(u)).collect();
        let opp = self.predicted(states)?;
        let x = self.inputs(states, &own, opp.as_deref());
        let qt = self.critic.net.forward_trace(x.view())?;
        let gin = self.critic.net.input_gradient(&qt, Array2::ones((x.nrows(), 1)).view())?;
        let col = states.ncols();
        let n = batch.len() as f64;
        let seed: Vec<f64> = trace
            .output()
            .iter()
            .zip(gin.column(col))
            .map(|(&u, g)| -g / self.own.half() * self.own.derivative(u) / n)
            .collect();
        if let Some(g) = seed.iter().find(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("actor gradient {g}")));
        }
        let seed = Array2::from_shape_vec((seed.len(), 1), seed).expect("column");
        let grads = self.actor.net.backward(&trace, seed.view())?;
        self.actor.apply(&grads.params)
    }

    pub fn learn(&mut self) -> Result<()> {
        if self.buffer.len() < self.params.batch_size {
            return Ok(());
        }
        let batch = {
            let records = self.buffer.sample(self.params.batch_size, &mut self.rngs.buffer)?;
            Batch::from_records(&records)?
        };
        if let Some(p) = self.predictor.as_mut() {
            p.step(batch.states.view(), &batch.opp)?;
        }
        let y = self.critic_target(&batch)?;
        self.critic_step(&batch, &y)?;
        self.actor_step(&batch)?;
        self.actor_target.blend_from(&self.actor.net, self.params.tau)?;
        self.critic_target.blend_from(&self.critic.net, self.params.tau)
    }

    pub fn deterministic_action(&self, state: &State) -> Result<f64> {
        Ok(self.own.apply(self.actor.net.forward(&state.features)?[0]))
    }
}

impl Learner for DdpgAgent {
    fn act(&mut self, state: &State, step: u64) -> Result<Action> {
        let u = self.actor.net.forward(&state.features)?[0];
        let a = self.explorer.action(u, self.own, step, &mut self.rngs.exploration);
        Ok(Action::Continuous(a))
    }

    fn policy(&self, state: &State) -> Result<PolicySummary> {
        Ok(PolicySummary::Continuous(self.deterministic_action(state)?))
    }

    fn observe(&mut self, transition: AgentTransition) -> Result<()> {
        self.buffer.push(transition);
        self.learn()
    }

    fn parameters(&self) -> Vec<&Mlp> {
        let mut v = vec![&self.actor.net, &self.critic.net, &self.actor_target, &self.critic_target];
        v.extend(self.predictor.as_ref().map(|p| &p.net.net));
        v
    }
}
