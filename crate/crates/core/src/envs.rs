//! The two benchmark games: an iterated 2x2 matrix game with a unique mixed
//! equilibrium and the max-of-two-quadratics differential game.

use serde::{Deserialize, Serialize};

use crate::game::{Action, ActionSpace, Game, GameSpec, JointAction, State, StateSpace};
use crate::{Error, Result};

pub type Payoff2x2 = [[f64; 2]; 2];

pub const DEFAULT_R1: Payoff2x2 = [[0.0, 3.0], [1.0, 2.0]];
pub const DEFAULT_R2: Payoff2x2 = [[3.0, 2.0], [0.0, 1.0]];

/// Two-player, two-action repeated game. `r1[a1][a2]` and `r2[a1][a2]` are the
/// payoffs of agent 1 and agent 2; both matrices are indexed by agent 1's action first.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    pub r1: Payoff2x2,
    pub r2: Payoff2x2,
    /// P(action 0) for agent 1 and agent 2 at the mixed equilibrium.
    pub equilibrium: (f64, f64),
    spec: GameSpec,
}

impl Default for MatrixGame {
    fn default() -> Self {
        MatrixGame::new(DEFAULT_R1, DEFAULT_R2, 0.0).expect("default payoffs are valid")
    }
}

impl MatrixGame {
    pub fn new(r1: Payoff2x2, r2: Payoff2x2, gamma: f64) -> Result<Self> {
        let spec = GameSpec {
            n_agents: 2,
            action_spaces: vec![ActionSpace::Discrete(2); 2],
            state_space: StateSpace::Singleton,
            gamma,
        };
        spec.validate()?;
        if r1.iter().chain(&r2).flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("payoffs must be finite".into()));
        }
        let equilibrium = mixed_equilibrium(&r1, &r2).unwrap_or((0.5, 0.5));
        Ok(MatrixGame {
            r1,
            r2,
            equilibrium,
            spec,
        })
    }

    pub fn payoff(&self, a1: usize, a2: usize) -> Result<(f64, f64)> {
        for (agent, a) in [(0, a1), (1, a2)] {
            if a > 1 {
                return Err(Error::ActionOutOfBounds {
                    agent,
                    value: a.to_string(),
                    space: ActionSpace::Discrete(2).to_string(),
                });
            }
        }
        Ok((self.r1[a1][a2], self.r2[a1][a2]))
    }

    /// Expected payoffs when agent 1 plays action 0 with probability `p` and
    /// agent 2 plays action 0 with probability `q`.
    pub fn expected_payoffs(&self, p: f64, q: f64) -> Result<(f64, f64)> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        let w1 = [p, 1.0 - p];
        let w2 = [q, 1.0 - q];
        let (mut u1, mut u2) = (0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                u1 += w1[a] * w2[b] * self.r1[a][b];
                u2 += w1[a] * w2[b] * self.r2[a][b];
            }
        }
        Ok((u1, u2))
    }

    /// Exact partials `(du1/dp, du2/dq)` of the bilinear expected payoffs.
    pub fn payoff_gradient(&self, p: f64, q: f64) -> (f64, f64) {
        let (r1, r2) = (&self.r1, &self.r2);
        let du1_dp = q * (r1[0][0] - r1[1][0]) + (1.0 - q) * (r1[0][1] - r1[1][1]);
        let du2_dq = p * (r2[0][0] - r2[0][1]) + (1.0 - p) * (r2[1][0] - r2[1][1]);
        (du1_dp, du2_dq)
    }

    /// Agent `i`'s payoff table with its own action as the row index.
    pub fn own_payoffs(&self, agent: usize) -> Payoff2x2 {
        match agent {
            0 => self.r1,
            _ => [[self.r2[0][0], self.r2[1][0]], [self.r2[0][1], self.r2[1][1]]],
        }
    }
}

/// Interior point where both agents are indifferent, if there is one.
fn mixed_equilibrium(r1: &Payoff2x2, r2: &Payoff2x2) -> Option<(f64, f64)> {
    // du1/dp = 0 fixes q; du2/dq = 0 fixes p.
    let a = r1[0][0] - r1[1][0] - r1[0][1] + r1[1][1];
    let b = r1[0][1] - r1[1][1];
    let c = r2[0][0] - r2[0][1] - r2[1][0] + r2[1][1];
    let d = r2[1][0] - r2[1][1];
    if a == 0.0 || c == 0.0 {
        return None;
    }
    let q = -b / a;
    let p = -d / c;
    ((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q)).then_some((p, q))
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ProbabilityDomain { name, value })
    }
}

impl Game for MatrixGame {
    fn spec(&self) -> &GameSpec {
        &self.spec
    }

    fn initial_state(&self) -> State {
        State::singleton()
    }

    fn step(&self, state: &State, joint: &JointAction) -> Result<(Vec<f64>, State)> {
        self.spec.validate_joint(joint)?;
        let a1 = joint.0[0].index().expect("validated discrete");
        let a2 = joint.0[1].index().expect("validated discrete");
        let (r1, r2) = self.payoff(a1, a2)?;
        Ok((vec![r1, r2], state.clone()))
    }
}

pub const DIFF_LO: f64 = -10.0;
pub const DIFF_HI: f64 = 10.0;

/// Named points of the differential game's reward surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub point: [f64; 2],
    pub value: f64,
}

/// Identical-interest game whose reward is the larger of a wide, shallow bowl at
/// (-5, -5) (peak 0) and a narrow, tall bowl at (5, 5) (peak 10).
#[derive(Debug, Clone, PartialEq)]
pub struct MaxOfTwoQuadraticGame {
    pub local_optimum: Landmark,
    pub global_optimum: Landmark,
    spec: GameSpec,
}

impl Default for MaxOfTwoQuadraticGame {
    fn default() -> Self {
        MaxOfTwoQuadraticGame::new(0.0).expect("default game is valid")
    }
}

impl MaxOfTwoQuadraticGame {
    pub fn new(gamma: f64) -> Result<Self> {
        let spec = GameSpec {
            n_agents: 2,
            action_spaces: vec![
                ActionSpace::Continuous {
                    lo: DIFF_LO,
                    hi: DIFF_HI
                };
                2
            ],
            state_space: StateSpace::Singleton,
            gamma,
        };
        spec.validate()?;
        Ok(MaxOfTwoQuadraticGame {
            local_optimum: Landmark {
                point: [-5.0, -5.0],
                value: 0.0,
            },
            global_optimum: Landmark {
                point: [5.0, 5.0],
                value: 10.0,
            },
            spec,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (DIFF_LO, DIFF_HI)
    }

    pub fn reward(&self, a1: f64, a2: f64) -> Result<f64> {
        for (agent, a) in [(0, a1), (1, a2)] {
            if !(a.is_finite() && (DIFF_LO..=DIFF_HI).contains(&a)) {
                return Err(Error::ActionOutOfBounds {
                    agent,
                    value: a.to_string(),
                    space: self.spec.action_spaces[agent].to_string(),
                });
            }
        }
        Ok(diff_reward_unchecked(a1, a2))
    }

    /// 0 when the shallow bowl is active (ties included), 1 for the tall bowl.
    pub fn branch(&self, a1: f64, a2: f64) -> usize {
        let (f1, f2) = quadratic_parts(a1, a2);
        usize::from(f2 > f1)
    }
}

pub fn quadratic_parts(a1: f64, a2: f64) -> (f64, f64) {
    let f1 = 0.8 * (-((a1 + 5.0) / 3.0).powi(2) - ((a2 + 5.0) / 3.0).powi(2));
    let f2 = 1.0 * (-((a1 - 5.0) / 1.0).powi(2) - ((a2 - 5.0) / 1.0).powi(2)) + 10.0;
    (f1, f2)
}

/// Reward of the max-of-two-quadratics game without the bounds check.
pub fn diff_reward_unchecked(a1: f64, a2: f64) -> f64 {
    let (f1, f2) = quadratic_parts(a1, a2);
    f1.max(f2)
}

impl Game for MaxOfTwoQuadraticGame {
    fn spec(&self) -> &GameSpec {
        &self.spec
    }

    fn initial_state(&self) -> State {
        State::singleton()
    }

    fn step(&self, state: &State, joint: &JointAction) -> Result<(Vec<f64>, State)> {
        self.spec.validate_joint(joint)?;
        let (Action::Continuous(a1), Action::Continuous(a2)) = (joint.0[0], joint.0[1]) else {
            unreachable!("validated continuous actions")
        };
        let r = diff_reward_unchecked(a1, a2);
        Ok((vec![r, r], state.clone()))
    }
}
