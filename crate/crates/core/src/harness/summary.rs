use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GameId, LearnerId};
use super::runner::RunOutcome;
use crate::envs::diff_reward_unchecked;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub aborted: Option<String>,
    pub iterations_completed: usize,
    /// P(action 0) per agent (matrix game) or noise-free action per agent (differential game).
    pub final_policy: Vec<f64>,
    pub final_reward: Vec<f64>,
    pub dist_local: Option<f64>,
    pub dist_global: Option<f64>,
    /// Criterion name to whether this run meets it.
    pub success: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub description: String,
    pub successes: usize,
    pub runs: usize,
    pub fraction: f64,
    pub required_fraction: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub a1: f64,
    pub a2: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub game: GameId,
    pub learners: Vec<LearnerId>,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSummary>,
    pub criteria: Vec<CriterionResult>,
    /// Mean reward over every run's final-iteration rows (both agents).
    pub final_mean_reward: Option<f64>,
    /// Reward surface samples for cross-checking plots (differential game only).
    pub contour: Vec<ContourPoint>,
    pub warnings: Vec<String>,
    pub elapsed_ms: u64,
    pub config: ExperimentConfig,
}

fn criteria_for(config: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let t = &config.thresholds;
    match config.game {
        GameId::Matrix => vec![(
            "equilibrium",
            format!("|P(action 0) - 0.5| <= {} for both agents", t.policy_tolerance),
        )],
        GameId::Differential => vec![
            (
                "global",
                format!(
                    "joint action within {} of (5, 5) and reward >= {}",
                    t.global_radius, t.global_reward
                ),
            ),
            ("local", format!("final reward <= {}", t.local_reward)),
        ],
    }
}

pub fn summarize_run(config: &ExperimentConfig, run: &RunOutcome) -> RunSummary {
    let t = &config.thresholds;
    let rows = run.final_rows();
    let final_policy: Vec<f64> = rows
        .iter()
        .map(|r| r.policy_0.or(r.action_mean).unwrap_or(f64::NAN))
        .collect();
    let final_reward: Vec<f64> = rows.iter().map(|r| r.reward).collect();
    let dist_local = rows.first().and_then(|r| r.dist_local);
    let dist_global = rows.first().and_then(|r| r.dist_global);
    let completed = run.abort.is_none() && !rows.is_empty();
    let mut success = BTreeMap::new();
    match config.game {
        GameId::Matrix => {
            let ok = completed
                && final_policy.len() == 2
                && final_policy.iter().all(|p| (p - 0.5).abs() <= t.policy_tolerance);
            success.insert("equilibrium".to_string(), ok);
        }
        GameId::Differential => {
            let reward = final_reward.first().copied().unwrap_or(f64::NAN);
            let global = completed
                && dist_global.is_some_and(|d| d <= t.global_radius)
                && reward >= t.global_reward;
            success.insert("global".to_string(), global);
            success.insert("local".to_string(), completed && reward <= t.local_reward);
        }
    }
    RunSummary {
        seed: run.seed,
        aborted: run.abort.clone(),
        iterations_completed: rows.first().map_or(0, |r| r.iteration),
        final_policy,
        final_reward,
        dist_local,
        dist_global,
        success,
    }
}

pub fn build_summary(
    config: &ExperimentConfig,
    runs: &[RunOutcome],
    warnings: Vec<String>,
    elapsed_ms: u64,
) -> Summary {
    let summaries: Vec<RunSummary> = runs.iter().map(|r| summarize_run(config, r)).collect();
    let criteria = criteria_for(config)
        .into_iter()
        .map(|(name, description)| {
            let successes = summaries.iter().filter(|s| s.success[name]).count();
            let n = summaries.len();
            let fraction = if n == 0 { 0.0 } else { successes as f64 / n as f64 };
            let required = config.thresholds.required_fraction;
            CriterionResult {
                name: name.to_string(),
                description,
                successes,
                runs: n,
                fraction,
                required_fraction: required,
                passed: n > 0 && fraction >= required,
            }
        })
        .collect();
    let finals: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.final_rows().iter().map(|row| row.reward))
        .collect();
    let final_mean_reward =
        (!finals.is_empty()).then(|| finals.iter().sum::<f64>() / finals.len() as f64);
    let contour = match config.game {
        GameId::Matrix => Vec::new(),
        GameId::Differential => [(-5.0, -5.0), (5.0, 5.0), (0.0, 0.0), (-10.0, 10.0), (2.5, -7.5)]
            .into_iter()
            .map(|(a1, a2)| ContourPoint {
                a1,
                a2,
                reward: diff_reward_unchecked(a1, a2),
            })
            .collect(),
    };
    Summary {
        name: config.name.clone(),
        game: config.game,
        learners: config.learners.clone(),
        seeds: runs.iter().map(|r| r.seed).collect(),
        runs: summaries,
        criteria,
        final_mean_reward,
        contour,
        warnings,
        elapsed_ms,
        config: config.clone(),
    }
}
