use rayon::prelude::*;

use super::Scorer;
use crate::engine::{ActionKind, Actor, GameState};
use crate::regions::{RegionId, RegionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionScore {
    pub pair: (ActionKind, RegionId),
    pub score: i64,
    /// Whether the predicted pair is possible at the end of the rollout.
    pub enables_predicted: bool,
}

/// Rollout results keyed by pair, in `seen` order. Only pairs possible on
/// the basis state appear.
pub type ActionScoreMap = Vec<ActionScore>;

fn pair_possible(state: &GameState, rs: &RegionSet, (kind, region): (ActionKind, RegionId)) -> bool {
    rs.bounds(region).is_ok_and(|r| state.is_possible(kind, &r))
}

/// Simulates every seen pair that is possible on `state` for `horizon`
/// ticks on a private clone and scores the end state.
pub fn score_pairs(
    state: &GameState,
    seen: &[(ActionKind, RegionId)],
    rs: &RegionSet,
    predicted: (ActionKind, RegionId),
    horizon: u64,
    scorer: &dyn Scorer,
) -> ActionScoreMap {
    let candidates: Vec<_> = seen.iter().copied().filter(|&p| pair_possible(state, rs, p)).collect();
    candidates
        .into_par_iter()
        .map(|pair| {
            let mut sim = state.clone();
            let rect = rs.bounds(pair.1).expect("checked above");
            sim.apply_action(Actor::Companion, pair.0, &rect).expect("checked above");
            // Rollouts are never wall-clock paced.
            sim.speed = sim.config.max_speed;
            sim.step(horizon);
            ActionScore { pair, score: scorer.score(&sim), enables_predicted: pair_possible(&sim, rs, predicted) }
        })
        .collect()
}

/// First maximum by score.
fn best(scores: impl Iterator<Item = ActionScore>) -> Option<(ActionKind, RegionId)> {
    let mut top: Option<ActionScore> = None;
    for s in scores {
        if top.is_none_or(|t| s.score > t.score) {
            top = Some(s);
        }
    }
    top.map(|t| t.pair)
}

/// Highest-scoring seen pair after the jeopardy filter. The filter drops
/// pairs whose rollout leaves the predicted pair impossible; it only applies
/// when the predicted pair is possible on the basis state.
pub fn predict_best_state_action(
    state: &GameState,
    seen: &[(ActionKind, RegionId)],
    rs: &RegionSet,
    predicted: (ActionKind, RegionId),
    horizon: u64,
    scorer: &dyn Scorer,
) -> Option<(ActionKind, RegionId)> {
    let filter = pair_possible(state, rs, predicted);
    let scores = score_pairs(state, seen, rs, predicted, horizon, scorer);
    best(scores.into_iter().filter(|s| !filter || s.enables_predicted))
}

/// Highest-scoring seen pair whose rollout makes the predicted pair possible.
pub fn find_enabling_action(
    state: &GameState,
    seen: &[(ActionKind, RegionId)],
    rs: &RegionSet,
    predicted: (ActionKind, RegionId),
    horizon: u64,
    scorer: &dyn Scorer,
) -> Option<(ActionKind, RegionId)> {
    let scores = score_pairs(state, seen, rs, predicted, horizon, scorer);
    best(scores.into_iter().filter(|s| s.enables_predicted))
}
