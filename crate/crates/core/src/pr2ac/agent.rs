use ndarray::{Array2, ArrayView2};
use rand_chacha::ChaCha8Rng;

use super::sampler::AmortizedSampler;
use crate::approx::{Mlp, Squash, Trainable};
use crate::game::{Action, AgentTransition, ReplayBuffer, State};
use crate::learner::{
    critic_inputs, ActorCriticParams, AgentRngs, Batch, Explorer, Learner, PolicySummary,
};
use crate::{Error, Result};

/// Deterministic actor, joint-action critic, their targets, and an amortized
/// sampler of opponent reactions.
#[derive(Debug, Clone)]
pub struct Pr2acAgent {
    pub actor: Trainable,
    pub critic: Trainable,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub sampler: AmortizedSampler,
    pub buffer: ReplayBuffer<AgentTransition>,
    params: ActorCriticParams,
    explorer: Explorer,
    own: Squash,
    opp: Squash,
    rngs: AgentRngs,
}

impl Pr2acAgent {
    pub fn new(
        state_dim: usize,
        own: Squash,
        opp: Squash,
        params: &ActorCriticParams,
        init: &mut ChaCha8Rng,
        rngs: AgentRngs,
    ) -> Result<Self> {
        params.validate()?;
        let mut actor = Mlp::new(&Mlp::hidden_sizes(state_dim, &params.hidden, 1), init);
        actor.scale_output_layer(params.actor_output_scale);
        let critic = Mlp::new(&Mlp::hidden_sizes(state_dim + 2, &params.hidden, 1), init);
        let sampler = AmortizedSampler::new(
            state_dim,
            params.noise_dim,
            &params.hidden,
            own,
            opp,
            params.opponent_lr,
            init,
        );
        Ok(Self::from_parts(actor, critic, sampler, own, opp, params, rngs))
    }

    /// Assembles an agent from given networks; targets start as copies.
    pub fn from_parts(
        actor: Mlp,
        critic: Mlp,
        sampler: AmortizedSampler,
        own: Squash,
        opp: Squash,
        params: &ActorCriticParams,
        rngs: AgentRngs,
    ) -> Self {
        Pr2acAgent {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor: Trainable::new(actor, params.actor_lr),
            critic: Trainable::new(critic, params.critic_lr),
            sampler,
            buffer: ReplayBuffer::new(params.buffer_capacity),
            explorer: Explorer::from_params(params),
            params: params.clone(),
            own,
            opp,
            rngs,
        }
    }

    pub fn params(&self) -> &ActorCriticParams {
        &self.params
    }

    fn state_dim(&self) -> usize {
        self.actor.net.input_size()
    }

    /// Squashed deterministic actions `mu(s)` for a batch of states.
    pub fn mu(&self, net: &Mlp, states: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(net.predict(states)?.iter().map(|&u| self.own.apply(u)).collect())
    }

    /// `y_j = r_j + gamma/M sum_k Q'(s'_j, mu'(s'_j), a_kj)` with particles
    /// drawn from the current sampler at `(s'_j, mu'(s'_j))`.
    pub fn critic_target(&mut self, batch: &Batch) -> Result<Vec<f64>> {
        let gamma = self.params.gamma;
        if gamma == 0.0 {
            return Ok(batch.rewards.clone());
        }
        let m = self.params.particles;
        let next_own = self.mu(&self.actor_target, batch.next_states.view())?;
        let particles = self.sampler.sample_batch(
            batch.next_states.view(),
            &next_own,
            m,
            &mut self.rngs.sampler,
        )?;
        let own_rep: Vec<f64> = next_own.iter().flat_map(|&a| std::iter::repeat_n(a, m)).collect();
        let x = critic_inputs(
            batch.next_states.view(),
            &own_rep,
            Some(&particles.actions),
            self.own,
            self.opp,
            m,
        );
        let q = self.critic_target.predict(x.view())?;
        Ok(batch
            .rewards
            .iter()
            .enumerate()
            .map(|(j, r)| r + gamma * q.slice(ndarray::s![j * m..(j + 1) * m, 0]).sum() / m as f64)
            .collect())
    }

    /// Mean squared TD error and its parameter gradient.
    pub fn critic_loss(&self, batch: &Batch, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
        let x = critic_inputs(
            batch.states.view(),
            &batch.own,
            Some(&batch.opp),
            self.own,
            self.opp,
            1,
        );
        let trace = self.critic.net.forward_trace(x.view())?;
        let n = batch.len() as f64;
        let err: Vec<f64> = trace.output().iter().zip(targets).map(|(q, y)| q - y).collect();
        let loss = err.iter().map(|e| e * e).sum::<f64>() / n;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("critic loss {loss}")));
        }
        let seed = Array2::from_shape_vec((err.len(), 1), err.iter().map(|e| 2.0 * e / n).collect())
            .expect("column");
        Ok((loss, self.critic.net.backward(&trace, seed.view())?.params))
    }

    pub fn critic_step(&mut self, batch: &Batch, targets: &[f64]) -> Result<f64> {
        let (loss, grads) = self.critic_loss(batch, targets)?;
        self.critic.apply(&grads)?;
        Ok(loss)
    }

    /// `d/da_i (1/M) sum_k Q(s_j, a_i, a_kj)` at `a_i = mu(s_j)` for every state,
    /// plus the actor trace needed to push it into the actor.
    fn action_gradients(&mut self, states: ArrayView2<'_, f64>) -> Result<(crate::approx::Trace, Vec<f64>)> {
        let m = self.params.particles;
        let trace = self.actor.net.forward_trace(states)?;
        let own: Vec<f64> = trace.output().iter().map(|&u| self.own.apply(u)).collect();
        let particles = self.sampler.sample_batch(states, &own, m, &mut self.rngs.sampler)?;
        let own_rep: Vec<f64> = own.iter().flat_map(|&a| std::iter::repeat_n(a, m)).collect();
        let x = critic_inputs(states, &own_rep, Some(&particles.actions), self.own, self.opp, m);
        let qt = self.critic.net.forward_trace(x.view())?;
        let ones = Array2::from_elem((x.nrows(), 1), 1.0 / m as f64);
        let gin = self.critic.net.input_gradient(&qt, ones.view())?;
        let sd = states.ncols();
        let mut per_row: Vec<f64> = gin.column(sd).iter().map(|g| g / self.own.half()).collect();
        if self.params.reaction_gradient {
            let d_opp: Vec<f64> = gin.column(sd + 1).iter().map(|g| g / self.opp.half()).collect();
            let react = self.sampler.reaction_gradient(&particles, &d_opp)?;
            per_row.iter_mut().zip(react).for_each(|(g, r)| *g += r);
        }
        let grads = per_row.chunks(m).map(|c| c.iter().sum()).collect();
        Ok((trace, grads))
    }

    /// One ascent step of the actor on the sampled joint-action value.
    pub fn actor_step(&mut self, batch: &Batch) -> Result<()> {
        let (trace, da) = self.action_gradients(batch.states.view())?;
        if let Some(g) = da.iter().find(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("actor action-gradient {g}")));
        }
        let n = batch.len() as f64;
        let seed: Vec<f64> = trace
            .output()
            .iter()
            .zip(&da)
            .map(|(&u, g)| -g * self.own.derivative(u) / n)
            .collect();
        let seed = Array2::from_shape_vec((seed.len(), 1), seed).expect("column");
        let grads = self.actor.net.backward(&trace, seed.view())?;
        self.actor.apply(&grads.params)
    }

    /// Amortized SVGD on the batch contexts `(s_j, a_i_j)`.
    pub fn sampler_step(&mut self, batch: &Batch) -> Result<()> {
        let (critic, own_sq, opp_sq) = (&self.critic.net, self.own, self.opp);
        let m = self.params.particles;
        let states = batch.states.view();
        let sd = states.ncols();
        self.sampler.svgd_step(
            states,
            &batch.own,
            m,
            self.params.temperature,
            |p| {
                let own_rep: Vec<f64> =
                    batch.own.iter().flat_map(|&a| std::iter::repeat_n(a, m)).collect();
                let x = critic_inputs(states, &own_rep, Some(&p.actions), own_sq, opp_sq, m);
                let t = critic.forward_trace(x.view())?;
                let ones = Array2::from_elem((x.nrows(), 1), 1.0);
                let g = critic.input_gradient(&t, ones.view())?;
                Ok(g.column(sd + 1).iter().map(|v| v / opp_sq.half()).collect())
            },
            &mut self.rngs.sampler,
        )
    }

    pub fn soft_update(&mut self) -> Result<()> {
        self.actor_target.blend_from(&self.actor.net, self.params.tau)?;
        self.critic_target.blend_from(&self.critic.net, self.params.tau)
    }

    /// Critic, actor, sampler, then targets, on one replay mini-batch.
    pub fn learn(&mut self) -> Result<()> {
        if self.buffer.len() < self.params.batch_size {
            return Ok(());
        }
        let batch = {
            let records = self.buffer.sample(self.params.batch_size, &mut self.rngs.buffer)?;
            Batch::from_records(&records)?
        };
        let y = self.critic_target(&batch)?;
        self.critic_step(&batch, &y)?;
        self.actor_step(&batch)?;
        self.sampler_step(&batch)?;
        self.soft_update()
    }

    pub fn deterministic_action(&self, state: &State) -> Result<f64> {
        Ok(self.own.apply(self.actor.net.forward(&state.features)?[0]))
    }
}

impl Learner for Pr2acAgent {
    fn act(&mut self, state: &State, step: u64) -> Result<Action> {
        if state.features.len() != self.state_dim() {
            return Err(Error::Shape {
                expected: self.state_dim(),
                got: state.features.len(),
            });
        }
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
        vec![
            &self.actor.net,
            &self.critic.net,
            &self.actor_target,
            &self.critic_target,
            self.sampler.generator(),
        ]
    }
}
