//! Decentralized multi-agent learners built on probabilistic recursive reasoning.
//!
//! Each agent models how its opponents would respond to its own action,
//! `pi(a_i, a_-i | s) = pi_i(a_i | s) * rho_-i(a_-i | s, a_i)`, and acts as a best
//! response to that conditional model. The crate contains:
//!
//! * [`game`]: stochastic-game interface, transitions, replay buffer, seeded RNG streams.
//! * [`envs`]: the iterated 2x2 matrix game and the max-of-two-quadratics differential game.
//! * [`approx`]: a small MLP with exact reverse-mode gradients, Adam, tabular Q stores.
//! * [`pr2q`]: tabular PR2-Q with the soft operators and the soft value-iteration operator.
//! * [`pr2ac`]: PR2 actor-critic with an amortized SVGD opponent sampler.
//! * [`baselines`]: IGA, independent DDPG, DDPG with an opponent-model head, and SGA.
//! * [`harness`]: experiment configuration, seeded runs, CSV/JSON output.

pub mod approx;
pub mod baselines;
pub mod envs;
pub mod error;
pub mod game;
pub mod harness;
pub mod learner;
pub mod pr2ac;
pub mod pr2q;

pub use error::{Error, Result};
