//! Tabular recursive-reasoning Q-learning for discrete games, together with the
//! closed-form soft operators it is built from.

mod agent;
mod counting;
pub mod gradient;
mod learner;
mod operator;
mod soft;

pub use agent::{sample_index, OpponentModelKind, Pr2qAgent, Pr2qParams};
pub use counting::CountingModel;
pub use learner::Pr2qLearner;
pub use gradient::{exact_gradient, importance_weighted_gradient, non_correlated_gradient, objective};
pub use operator::{soft_bellman_operator, sup_distance, FiniteModel};
pub use soft::{argmax, opponent_conditional, soft_marginal, softmax_policy, ConditionalPolicyTable};
