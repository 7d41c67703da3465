use ndarray::{s, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::svgd::svgd_directions;
use crate::approx::{Mlp, Squash, Trace, Trainable};
use crate::{Error, Result};

/// Generator network `(s, a_i, xi) -> a_-i` trained by amortized SVGD.
#[derive(Debug, Clone)]
pub struct AmortizedSampler {
    net: Trainable,
    state_dim: usize,
    noise_dim: usize,
    own: Squash,
    opp: Squash,
}

/// Particles drawn for a batch of contexts: `per_context` consecutive rows per context.
#[derive(Debug, Clone)]
pub struct Particles {
    pub actions: Vec<f64>,
    pub per_context: usize,
    pre: Vec<f64>,
    trace: Trace,
}

impl Particles {
    pub fn contexts(&self) -> usize {
        self.actions.len() / self.per_context
    }
}

impl AmortizedSampler {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        noise_dim: usize,
        hidden: &[usize],
        own: Squash,
        opp: Squash,
        lr: f64,
        rng: &mut R,
    ) -> Self {
        let sizes = Mlp::hidden_sizes(state_dim + 1 + noise_dim, hidden, 1);
        Self::from_net(Mlp::new(&sizes, rng), state_dim, noise_dim, own, opp, lr)
    }

    pub fn from_net(
        net: Mlp,
        state_dim: usize,
        noise_dim: usize,
        own: Squash,
        opp: Squash,
        lr: f64,
    ) -> Self {
        assert_eq!(net.input_size(), state_dim + 1 + noise_dim, "generator input size");
        assert_eq!(net.output_size(), 1, "generator emits one action");
        AmortizedSampler {
            net: Trainable::new(net, lr),
            state_dim,
            noise_dim,
            own,
            opp,
        }
    }

    pub fn generator(&self) -> &Mlp {
        &self.net.net
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn inputs<R: Rng + ?Sized>(
        &self,
        states: ArrayView2<'_, f64>,
        own_actions: &[f64],
        m: usize,
        rng: &mut R,
    ) -> Result<Array2<f64>> {
        if states.ncols() != self.state_dim {
            return Err(Error::Shape {
                expected: self.state_dim,
                got: states.ncols(),
            });
        }
        if states.nrows() != own_actions.len() {
            return Err(Error::Shape {
                expected: states.nrows(),
                got: own_actions.len(),
            });
        }
        if m == 0 {
            return Err(Error::Config("particle count must be at least 1".into()));
        }
        let width = self.state_dim + 1 + self.noise_dim;
        let mut x = Array2::zeros((states.nrows() * m, width));
        for (j, &a) in own_actions.iter().enumerate() {
            for k in 0..m {
                let mut row = x.row_mut(j * m + k);
                row.slice_mut(s![..self.state_dim]).assign(&states.row(j));
                row[self.state_dim] = self.own.normalize(a);
                for c in 0..self.noise_dim {
                    row[self.state_dim + 1 + c] = rng.sample(StandardNormal);
                }
            }
        }
        Ok(x)
    }

    /// `m` draws for every `(state, own action)` row, squashed into the opponent bounds.
    pub fn sample_batch<R: Rng + ?Sized>(
        &self,
        states: ArrayView2<'_, f64>,
        own_actions: &[f64],
        m: usize,
        rng: &mut R,
    ) -> Result<Particles> {
        let x = self.inputs(states, own_actions, m, rng)?;
        let trace = self.net.net.forward_trace(x.view())?;
        let pre: Vec<f64> = trace.output().iter().copied().collect();
        let actions = pre.iter().map(|&u| self.opp.apply(u)).collect();
        Ok(Particles {
            actions,
            per_context: m,
            pre,
            trace,
        })
    }

    pub fn sample_opponents<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        own_action: f64,
        m: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let states = ArrayView2::from_shape((1, state.len()), state).expect("row");
        Ok(self.sample_batch(states, &[own_action], m, rng)?.actions)
    }

    /// For every particle row, `seed_r * d a_r / d a_i`: how the sampled
    /// reaction moves with the conditioning own action.
    pub fn reaction_gradient(&self, particles: &Particles, seed: &[f64]) -> Result<Vec<f64>> {
        if seed.len() != particles.actions.len() {
            return Err(Error::Shape {
                expected: particles.actions.len(),
                got: seed.len(),
            });
        }
        let du: Vec<f64> = seed
            .iter()
            .zip(&particles.pre)
            .map(|(g, &u)| g * self.opp.derivative(u))
            .collect();
        let du = Array2::from_shape_vec((du.len(), 1), du).expect("column");
        let gin = self.net.net.input_gradient(&particles.trace, du.view())?;
        let col = self.state_dim;
        Ok(gin.column(col).iter().map(|g| g / self.own.half()).collect())
    }

    /// Moves the generator so each particle follows its delta:
    /// one optimizer step on `-(1/B) sum_j a_j . delta_j`, deltas held fixed.
    /// An all-zero delta set leaves the parameters untouched.
    pub fn amortize_step(&mut self, particles: &Particles, deltas: &[f64]) -> Result<()> {
        if deltas.len() != particles.actions.len() {
            return Err(Error::Shape {
                expected: particles.actions.len(),
                got: deltas.len(),
            });
        }
        if deltas.iter().all(|&d| d == 0.0) {
            return Ok(());
        }
        let b = particles.contexts() as f64;
        let seed: Vec<f64> = deltas
            .iter()
            .zip(&particles.pre)
            .map(|(d, &u)| -d * self.opp.derivative(u) / b)
            .collect();
        let seed = Array2::from_shape_vec((seed.len(), 1), seed).expect("column");
        let grads = self.net.net.backward(&particles.trace, seed.view())?;
        self.net.apply(&grads.params)
    }

    /// One amortized SVGD step toward `p(a_-i) ~ exp(temperature * Q(s, a_i, a_-i))`
    /// for every context. `opp_gradient` maps particles to `dQ/da_-i` per row.
    pub fn svgd_step<R, F>(
        &mut self,
        states: ArrayView2<'_, f64>,
        own_actions: &[f64],
        m: usize,
        temperature: f64,
        opp_gradient: F,
        rng: &mut R,
    ) -> Result<()>
    where
        R: Rng + ?Sized,
        F: FnOnce(&Particles) -> Result<Vec<f64>>,
    {
        let particles = self.sample_batch(states, own_actions, m, rng)?;
        let grads = opp_gradient(&particles)?;
        let mut deltas = Vec::with_capacity(grads.len());
        for j in 0..particles.contexts() {
            let rows = j * m..(j + 1) * m;
            let p = ArrayView2::from_shape((m, 1), &particles.actions[rows.clone()]).expect("block");
            let score: Vec<f64> = grads[rows].iter().map(|g| temperature * g).collect();
            let score = ArrayView2::from_shape((m, 1), &score).expect("block");
            deltas.extend(svgd_directions(p, score, None)?.iter().copied());
        }
        self.amortize_step(&particles, &deltas)
    }
}
