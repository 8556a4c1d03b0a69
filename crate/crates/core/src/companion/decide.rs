use rand::Rng;

use super::rollout::{find_enabling_action, predict_best_state_action};
use super::{Branch, Choice, CompanionConfig, DecisionOutcome, RngDraw, Scorer};
use crate::engine::{ActionKind, Actor, GameState, InProgressAction};
use crate::error::Result;
use crate::grid::CellPoint;
use crate::player_model::{predict_next, seen_pairs, train, unseen_actions, PredictorModel, Trace};
use crate::regions::{RegionId, RegionSet};
use crate::scalar::Scalar;

/// Everything a decision reads. Nothing here is mutated.
pub struct DecisionContext<'a, F> {
    pub state: &'a GameState,
    pub trace: &'a Trace<F>,
    pub regions: &'a RegionSet,
    pub model: Option<&'a PredictorModel<F>>,
    pub config: &'a CompanionConfig,
    pub scorer: &'a dyn Scorer,
    /// The player's in-progress action, if any.
    pub player_current: Option<&'a InProgressAction>,
}

struct Draws(Vec<RngDraw>);

impl Draws {
    fn unit<R: Rng + ?Sized>(&mut self, rng: &mut R, label: &str) -> f64 {
        let v: f64 = rng.random();
        self.0.push(RngDraw { label: label.into(), value: v });
        v
    }

    fn index<R: Rng + ?Sized>(&mut self, rng: &mut R, label: &str, n: usize) -> usize {
        let i = rng.random_range(0..n);
        self.0.push(RngDraw { label: label.into(), value: i as f64 });
        i
    }
}

/// Joins the player's current action when the companion may.
pub fn help_current(state: &GameState, player_current: Option<&InProgressAction>) -> Option<(ActionKind, CellPoint)> {
    let cur = player_current?;
    state.can_join(Actor::Companion, cur.cell).then_some((cur.kind, cur.cell))
}

/// Retrains once the trace has grown by `retrain_every` since the last fit.
pub fn maybe_retrain<F: Scalar>(
    trace: &Trace<F>,
    rs: &RegionSet,
    cfg: &CompanionConfig,
    last_trained_count: usize,
) -> Result<Option<PredictorModel<F>>> {
    if trace.is_empty() || trace.len() < last_trained_count + cfg.retrain_every {
        return Ok(None);
    }
    train(trace, rs, cfg.classifier, &cfg.feature_config).map(Some)
}

/// Picks a region uniformly among those where some unseen kind is possible,
/// then a kind uniformly among the unseen kinds possible there.
fn sample_unseen<R: Rng + ?Sized>(
    state: &GameState,
    rs: &RegionSet,
    unseen: &[ActionKind],
    rng: &mut R,
    draws: &mut Draws,
    label: &str,
) -> Option<(ActionKind, RegionId)> {
    if unseen.is_empty() {
        return None;
    }
    let feasible: Vec<(RegionId, Vec<ActionKind>)> = rs
        .iter()
        .filter_map(|(id, rect)| {
            let kinds: Vec<ActionKind> = unseen.iter().copied().filter(|&k| state.is_possible(k, &rect)).collect();
            (!kinds.is_empty()).then_some((id, kinds))
        })
        .collect();
    if feasible.is_empty() {
        return None;
    }
    let (region, kinds) = &feasible[draws.index(rng, &format!("{label}_region"), feasible.len())];
    let kind = kinds[draws.index(rng, &format!("{label}_kind"), kinds.len())];
    Some((kind, *region))
}

pub fn decide<F: Scalar, R: Rng + ?Sized>(ctx: &DecisionContext<'_, F>, rng: &mut R) -> DecisionOutcome {
    let state = ctx.state;
    let rs = ctx.regions;
    let cfg = ctx.config;
    let mut draws = Draws(Vec::new());
    let outcome = |chosen, branch, predicted, draws: Draws| DecisionOutcome {
        chosen,
        branch,
        overridden: None,
        predicted,
        basis_tick: state.tick,
        rng_draws: draws.0,
    };

    let model = match ctx.model {
        Some(m) if ctx.trace.len() >= cfg.intro_threshold => m,
        _ => return outcome(Choice::NoOp, Branch::Inactive, None, draws),
    };

    let sv = state.full_feature_vector::<F>();
    let predicted = predict_next(model, &sv);
    let predicted_possible = rs.bounds(predicted.1).is_ok_and(|r| state.is_possible(predicted.0, &r));
    // Seen pairs are only needed by the rollout branches; computed lazily.
    let seen = || seen_pairs(ctx.trace, rs).unwrap_or_default();

    let mut picked: Option<(Choice, Branch)> = None;
    if !predicted_possible {
        if let Some((kind, region)) = find_enabling_action(state, &seen(), rs, predicted, cfg.horizon_ticks, ctx.scorer)
        {
            picked = Some((Choice::Act { kind, region }, Branch::EnablePredicted));
        }
    } else {
        let u1 = draws.unit(rng, "help");
        if u1 < cfg.p_help {
            if let Some((kind, cell)) = help_current(state, ctx.player_current) {
                let region = rs.lookup(cell).unwrap_or(predicted.1);
                picked = Some((Choice::Join { kind, region, cell }, Branch::HelpCurrent));
            }
        }
        if picked.is_none() {
            let u2 = draws.unit(rng, "parallel");
            if u2 < cfg.p_parallel {
                picked = Some((Choice::Act { kind: predicted.0, region: predicted.1 }, Branch::ParallelPredicted));
            }
        }
    }

    let unseen = unseen_actions(ctx.trace);
    let (chosen, branch) = match picked {
        Some(p) => p,
        None => match predict_best_state_action(state, &seen(), rs, predicted, cfg.horizon_ticks, ctx.scorer) {
            Some((kind, region)) => (Choice::Act { kind, region }, Branch::BestState),
            None => match sample_unseen(state, rs, &unseen, rng, &mut draws, "last_resort") {
                Some((kind, region)) => (Choice::Act { kind, region }, Branch::LastResortUnseen),
                None => (Choice::Default, Branch::DefaultBehavior),
            },
        },
    };

    let u3 = draws.unit(rng, "experiment");
    if u3 < cfg.p_experiment {
        if let Some((kind, region)) = sample_unseen(state, rs, &unseen, rng, &mut draws, "experiment") {
            let mut out = outcome(Choice::Act { kind, region }, Branch::ExperimentOverride, Some(predicted), draws);
            out.overridden = Some(branch);
            return out;
        }
    }
    outcome(chosen, branch, Some(predicted), draws)
}
