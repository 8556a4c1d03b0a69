//! Complementary companion decisions.
//!
//! [`decide`] walks the decision flow: stay inactive until enough player data
//! exists, predict the player's next (kind, region), then either unblock it,
//! help with the player's current action, do the predicted action in
//! parallel, or pick the seen action whose simulated future scores best
//! without making the prediction impossible. Unseen actions serve as a last
//! resort and, with a configured probability, replace the final choice.
//!
//! Rollouts never touch the caller's state: each candidate is simulated on
//! its own clone, and candidates are evaluated in parallel.

mod decide;
mod rollout;

use serde::{Deserialize, Serialize};

pub use decide::{decide, help_current, maybe_retrain, DecisionContext};
pub use rollout::{find_enabling_action, predict_best_state_action, score_pairs, ActionScore, ActionScoreMap};

use crate::engine::{ActionKind, Actor, FeatureConfig, GameConfig, GameState, ScoreWeights};
use crate::error::{Error, Result};
use crate::grid::CellPoint;
use crate::player_model::ClassifierKind;
use crate::regions::{RegionId, RegionSet};

/// Developer-defined end-state evaluation used by rollouts.
pub trait Scorer: Sync {
    fn score(&self, state: &GameState) -> i64;
}

impl Scorer for ScoreWeights {
    fn score(&self, state: &GameState) -> i64 {
        state.score(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompanionConfig {
    pub p_help: f64,
    pub p_parallel: f64,
    pub p_experiment: f64,
    pub horizon_ticks: u64,
    /// Retrain after this many new player actions.
    pub retrain_every: usize,
    /// Player actions required before the companion activates.
    pub intro_threshold: usize,
    pub classifier: ClassifierKind,
    pub feature_config: FeatureConfig,
    pub score_weights: ScoreWeights,
    pub decision_epoch_ticks: u64,
}

impl Default for CompanionConfig {
    fn default() -> Self {
        Self {
            p_help: 0.3,
            p_parallel: 0.5,
            p_experiment: 0.1,
            horizon_ticks: 600,
            retrain_every: 5,
            intro_threshold: 20,
            classifier: ClassifierKind::default(),
            feature_config: FeatureConfig::full(),
            score_weights: ScoreWeights::default(),
            decision_epoch_ticks: 40,
        }
    }
}

impl CompanionConfig {
    pub fn validate(&self, game: &GameConfig) -> Result<()> {
        for (name, p) in [("p_help", self.p_help), ("p_parallel", self.p_parallel), ("p_experiment", self.p_experiment)]
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.horizon_ticks < game.longest_duration() as u64 {
            return Err(Error::Config(format!(
                "horizon {} shorter than the longest action ({})",
                self.horizon_ticks,
                game.longest_duration()
            )));
        }
        if self.intro_threshold < 2 {
            return Err(Error::Config("intro_threshold must be at least 2".into()));
        }
        if self.retrain_every == 0 || self.decision_epoch_ticks == 0 {
            return Err(Error::Config("retrain_every and decision_epoch_ticks must be positive".into()));
        }
        self.classifier.validate()
    }
}

/// Which path of the decision flow produced a choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Inactive,
    EnablePredicted,
    HelpCurrent,
    ParallelPredicted,
    BestState,
    LastResortUnseen,
    DefaultBehavior,
    ExperimentOverride,
}

impl Branch {
    pub const ALL: [Branch; 8] = [
        Branch::Inactive,
        Branch::EnablePredicted,
        Branch::HelpCurrent,
        Branch::ParallelPredicted,
        Branch::BestState,
        Branch::LastResortUnseen,
        Branch::DefaultBehavior,
        Branch::ExperimentOverride,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Branch::Inactive => "inactive",
            Branch::EnablePredicted => "enable_predicted",
            Branch::HelpCurrent => "help_current",
            Branch::ParallelPredicted => "parallel_predicted",
            Branch::BestState => "best_state",
            Branch::LastResortUnseen => "last_resort_unseen",
            Branch::DefaultBehavior => "default_behavior",
            Branch::ExperimentOverride => "experiment_override",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Choice {
    /// Start `kind` somewhere inside `region`.
    Act {
        kind: ActionKind,
        region: RegionId,
    },
    /// Join the player's in-progress action at `cell`.
    Join {
        kind: ActionKind,
        region: RegionId,
        cell: CellPoint,
    },
    /// Host-defined default behavior; idle unless overridden.
    Default,
    NoOp,
}

impl Choice {
    pub fn kind(&self) -> Option<ActionKind> {
        match *self {
            Choice::Act { kind, .. } | Choice::Join { kind, .. } => Some(kind),
            _ => None,
        }
    }

    pub fn pair(&self) -> Option<(ActionKind, RegionId)> {
        match *self {
            Choice::Act { kind, region } | Choice::Join { kind, region, .. } => Some((kind, region)),
            _ => None,
        }
    }

    /// Whether the choice can still be carried out on `state`.
    pub fn still_valid(&self, state: &GameState, rs: &RegionSet) -> bool {
        match *self {
            Choice::Act { kind, region } => rs.bounds(region).is_ok_and(|r| state.is_possible(kind, &r)),
            Choice::Join { cell, .. } => state.can_join(Actor::Companion, cell),
            Choice::Default | Choice::NoOp => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngDraw {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub chosen: Choice,
    pub branch: Branch,
    /// The branch an experiment override replaced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overridden: Option<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<(ActionKind, RegionId)>,
    pub basis_tick: u64,
    pub rng_draws: Vec<RngDraw>,
}

impl DecisionOutcome {
    /// The branch chosen before any experiment override.
    pub fn base_branch(&self) -> Branch {
        self.overridden.unwrap_or(self.branch)
    }

    pub fn is_stale(&self, now_tick: u64, epoch_ticks: u64) -> bool {
        now_tick.saturating_sub(self.basis_tick) > epoch_ticks
    }

    /// Whether the choice can still be carried out on `state`.
    pub fn still_valid(&self, state: &GameState, rs: &RegionSet) -> bool {
        self.chosen.still_valid(state, rs)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("outcome serializes")
    }
}

/// Carries out a choice as the companion. Returns the kind actually started
/// or joined.
pub fn execute_choice(state: &mut GameState, rs: &RegionSet, choice: &Choice) -> Result<Option<ActionKind>> {
    match *choice {
        Choice::Act { kind, region } => {
            let rect = rs.bounds(region)?;
            state.apply_action(Actor::Companion, kind, &rect)?;
            Ok(Some(kind))
        }
        Choice::Join { cell, .. } => state.join_action(Actor::Companion, cell).map(Some),
        Choice::Default | Choice::NoOp => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_valid() {
        CompanionConfig::default().validate(&GameConfig::default()).unwrap();
    }

    #[test]
    fn invalid_configs() {
        let g = GameConfig::default();
        let bad = CompanionConfig { p_help: 1.5, ..Default::default() };
        assert!(bad.validate(&g).is_err());
        let bad = CompanionConfig { horizon_ticks: 10, ..Default::default() };
        assert!(bad.validate(&g).is_err());
        let bad = CompanionConfig { intro_threshold: 1, ..Default::default() };
        assert!(bad.validate(&g).is_err());
    }

    #[test]
    fn outcome_json_line() {
        let o = DecisionOutcome {
            chosen: Choice::Act { kind: ActionKind::BuildWall, region: RegionId(2) },
            branch: Branch::BestState,
            overridden: None,
            predicted: None,
            basis_tick: 7,
            rng_draws: vec![RngDraw { label: "help".into(), value: 0.5 }],
        };
        let line = o.to_json_line();
        assert_eq!(
            line,
            r#"{"chosen":{"type":"act","kind":"BuildWall","region":2},"branch":"best_state","basis_tick":7,"rng_draws":[{"label":"help","value":0.5}]}"#
        );
        let back: DecisionOutcome = serde_json::from_str(&line).unwrap();
        assert_eq!(back, o);
    }
}
