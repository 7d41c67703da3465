use super::soft::soft_marginal;
use crate::approx::QTable;
use crate::envs::MatrixGame;
use crate::{Error, Result};

/// Fully enumerable single-agent view of a finite game: own rewards and
/// next-state distributions for every `(s, a_i, a_-i)`.
#[derive(Debug, Clone)]
pub struct FiniteModel {
    pub n_states: usize,
    pub n_own: usize,
    pub n_opp: usize,
    /// Indexed like the joint Q table.
    pub reward: Vec<f64>,
    /// `(next state, probability)` pairs per joint entry.
    pub transitions: Vec<Vec<(usize, f64)>>,
}

impl FiniteModel {
    /// Agent `agent`'s view of a repeated matrix game (one state that loops on itself).
    pub fn matrix_game(game: &MatrixGame, agent: usize) -> Self {
        let r = game.own_payoffs(agent);
        FiniteModel {
            n_states: 1,
            n_own: 2,
            n_opp: 2,
            reward: r.iter().flatten().copied().collect(),
            transitions: vec![vec![(0, 1.0)]; 4],
        }
    }

    fn index(&self, s: usize, a: usize, o: usize) -> usize {
        (s * self.n_own + a) * self.n_opp + o
    }
}

/// Soft value-iteration backup
/// `(TQ)(s,a,o) = r(s,a,o) + gamma * E_{s'} E_{a' ~ pi(s')} [log sum_o' exp Q(s',a',o')]`
/// with every expectation enumerated exactly. `policy[s]` is the own action
/// distribution in state `s`.
pub fn soft_bellman_operator(
    q: &QTable,
    model: &FiniteModel,
    policy: &[Vec<f64>],
    gamma: f64,
) -> Result<QTable> {
    if (q.n_states(), q.n_own(), q.n_opp()) != (model.n_states, model.n_own, model.n_opp) {
        return Err(Error::Shape {
            expected: model.n_states * model.n_own * model.n_opp,
            got: q.joint_values().len(),
        });
    }
    if policy.len() != model.n_states || policy.iter().any(|p| p.len() != model.n_own) {
        return Err(Error::Config("policy must give one distribution per state".into()));
    }
    let soft_value: Vec<f64> = (0..model.n_states)
        .map(|s| {
            (0..model.n_own)
                .map(|a| Ok(policy[s][a] * soft_marginal(q.joint_row(s, a))?))
                .sum::<Result<f64>>()
        })
        .collect::<Result<_>>()?;
    let mut out = QTable::zeros(model.n_states, model.n_own, model.n_opp);
    for s in 0..model.n_states {
        for a in 0..model.n_own {
            for o in 0..model.n_opp {
                let i = model.index(s, a, o);
                let next: f64 = model.transitions[i]
                    .iter()
                    .map(|&(s2, p)| p * soft_value[s2])
                    .sum();
                out.set_joint(s, a, o, model.reward[i] + gamma * next);
            }
        }
    }
    Ok(out)
}

/// Largest absolute entry-wise difference of the joint tables.
pub fn sup_distance(a: &QTable, b: &QTable) -> f64 {
    a.joint_values()
        .iter()
        .zip(b.joint_values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
