use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{IgaParams, SgaParams};
use crate::learner::ActorCriticParams;
use crate::pr2q::Pr2qParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameId {
    /// Iterated 2x2 matrix game with the mixed equilibrium at (0.5, 0.5).
    Matrix,
    /// Max-of-two-quadratics differential game.
    Differential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerId {
    Pr2q,
    Pr2ac,
    Iga,
    DdpgLite,
    DdpgOm,
    Sga,
}

impl LearnerId {
    pub const ALL: [LearnerId; 6] = [
        LearnerId::Pr2q,
        LearnerId::Pr2ac,
        LearnerId::Iga,
        LearnerId::DdpgLite,
        LearnerId::DdpgOm,
        LearnerId::Sga,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerId::Pr2q => "pr2q",
            LearnerId::Pr2ac => "pr2ac",
            LearnerId::Iga => "iga",
            LearnerId::DdpgLite => "ddpg_lite",
            LearnerId::DdpgOm => "ddpg_om",
            LearnerId::Sga => "sga",
        }
    }

    pub fn game(self) -> GameId {
        match self {
            LearnerId::Pr2q | LearnerId::Iga => GameId::Matrix,
            _ => GameId::Differential,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            LearnerId::Pr2q => "tabular recursive-reasoning Q-learning",
            LearnerId::Pr2ac => "recursive-reasoning actor-critic with an SVGD opponent sampler",
            LearnerId::Iga => "infinitesimal gradient ascent on expected payoffs (both agents)",
            LearnerId::DdpgLite => "independent deterministic policy gradient",
            LearnerId::DdpgOm => "deterministic policy gradient with an opponent-action predictor",
            LearnerId::Sga => "symplectic gradient adjustment on actions (both agents)",
        }
    }

    /// Joint gradient dynamics that drive both agents at once.
    pub fn is_joint(self) -> bool {
        matches!(self, LearnerId::Iga | LearnerId::Sga)
    }
}

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Success thresholds reported in the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Matrix game: max |P(action 0) - 0.5| per agent.
    pub policy_tolerance: f64,
    /// Differential game: max distance of the joint action to (5, 5).
    pub global_radius: f64,
    /// Differential game: min final reward for a global success.
    pub global_reward: f64,
    /// Differential game: max final reward counted as stuck near the local optimum.
    pub local_reward: f64,
    /// Fraction of runs that must succeed for a criterion to pass.
    pub required_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            policy_tolerance: 0.05,
            global_radius: 1.0,
            global_reward: 9.0,
            local_reward: 0.5,
            required_fraction: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub game: GameId,
    /// One learner id per agent.
    pub learners: Vec<LearnerId>,
    /// Defaults to 500 on the matrix game and 350 on the differential game.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Defaults to 1 on the matrix game and 25 on the differential game.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_iteration: Option<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Worker threads; 0 uses the available parallelism.
    #[serde(default)]
    pub workers: usize,
    /// Fill the `wall_ms` column. Off by default so outputs stay byte-reproducible.
    #[serde(default)]
    pub record_wall_clock: bool,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub pr2q: Pr2qParams,
    #[serde(default)]
    pub actor_critic: ActorCriticParams,
    #[serde(default)]
    pub iga: IgaParams,
    #[serde(default)]
    pub sga: SgaParams,
}

fn default_name() -> String {
    "experiment".into()
}

impl ExperimentConfig {
    /// Self-play of one learner with every other setting at its default.
    pub fn self_play(learner: LearnerId, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            name: format!("{}_{}", learner, game_name(learner.game())),
            game: learner.game(),
            learners: vec![learner; 2],
            iterations: None,
            steps_per_iteration: None,
            seeds,
            workers: 0,
            record_wall_clock: false,
            thresholds: Thresholds::default(),
            pr2q: Pr2qParams::default(),
            actor_critic: ActorCriticParams::default(),
            iga: IgaParams::default(),
            sga: SgaParams::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn iterations(&self) -> usize {
        self.iterations.unwrap_or(match self.game {
            GameId::Matrix => 500,
            GameId::Differential => 350,
        })
    }

    pub fn steps_per_iteration(&self) -> usize {
        self.steps_per_iteration.unwrap_or(match self.game {
            GameId::Matrix => 1,
            GameId::Differential => 25,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.learners.len() != 2 {
            return bad(format!("expected 2 learners, got {}", self.learners.len()));
        }
        for &l in &self.learners {
            if l.game() != self.game {
                return bad(format!("learner {l} cannot play the {} game", game_name(self.game)));
            }
        }
        let joint: Vec<_> = self.learners.iter().filter(|l| l.is_joint()).collect();
        if !joint.is_empty() && self.learners[0] != self.learners[1] {
            return bad(format!("{} drives both agents; pair it with itself", joint[0]));
        }
        if self.iterations() == 0 || self.steps_per_iteration() == 0 {
            return bad("iterations and steps_per_iteration must be at least 1".into());
        }
        let t = &self.thresholds;
        if !(0.0..=1.0).contains(&t.required_fraction) {
            return bad(format!("required_fraction {} outside [0, 1]", t.required_fraction));
        }
        for &l in &self.learners {
            match l {
                LearnerId::Pr2q => self.pr2q.validate()?,
                LearnerId::Pr2ac | LearnerId::DdpgLite | LearnerId::DdpgOm => {
                    self.actor_critic.validate()?
                }
                LearnerId::Iga => self.iga.validate()?,
                LearnerId::Sga => self.sga.validate()?,
            }
        }
        Ok(())
    }
}

pub fn game_name(game: GameId) -> &'static str {
    match game {
        GameId::Matrix => "matrix",
        GameId::Differential => "differential",
    }
}
