use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::companion::{decide, execute_choice, maybe_retrain, Branch, Choice, CompanionConfig, DecisionContext};
use crate::engine::{ActionKind, Actor, GameState, InProgressAction};
use crate::error::{Error, Result};
use crate::grid::{CellPoint, Rect};
use crate::player_model::{predict_next, PredictorModel, Trace};
use crate::regions::RegionSet;

/// Generator that drives companion decisions.
pub type CompanionRng = ChaCha8Rng;

pub const EPISODE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedEpisode {
    format_version: u32,
    episode: Episode,
}

/// Stream separators for the per-episode generators.
const COMPANION_STREAM: u64 = 0x636f_6d70_616e_696f;
pub(crate) const PLAYER_STREAM: u64 = 0x706c_6179_6572_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompanionMode {
    Complementary,
    Random,
    /// Always performs the predicted pair.
    Mimic,
    None,
}

impl CompanionMode {
    pub const ALL: [CompanionMode; 4] =
        [CompanionMode::Complementary, CompanionMode::Random, CompanionMode::Mimic, CompanionMode::None];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "complementary" => Ok(Self::Complementary),
            "random" => Ok(Self::Random),
            "mimic" => Ok(Self::Mimic),
            "none" => Ok(Self::None),
            other => Err(Error::Config(format!("unknown companion mode `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Complementary => "complementary",
            Self::Random => "random",
            Self::Mimic => "mimic",
            Self::None => "none",
        }
    }
}

/// A finished companion decision, ready to be applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub chosen: Choice,
    /// Branch name for the complementary mode, else the mode's own label.
    pub label: String,
    pub branch: Option<Branch>,
    pub basis_tick: u64,
}

/// Everything a decision needs, detached from the live episode so it can
/// run on another thread.
pub struct DecisionJob {
    pub mode: CompanionMode,
    pub state: GameState,
    pub trace: Trace<f64>,
    pub regions: RegionSet,
    pub model: Option<PredictorModel<f64>>,
    pub config: CompanionConfig,
    pub player_current: Option<InProgressAction>,
    pub rng: ChaCha8Rng,
}

impl DecisionJob {
    pub fn run(mut self) -> (Decision, ChaCha8Rng) {
        let d = self.decide();
        (d, self.rng)
    }

    fn decide(&mut self) -> Decision {
        let basis_tick = self.state.tick;
        let plain = |chosen, label: &str| Decision { chosen, label: label.into(), branch: None, basis_tick };
        let model = match &self.model {
            Some(m) if self.trace.len() >= self.config.intro_threshold => m,
            _ => {
                return Decision {
                    chosen: Choice::NoOp,
                    label: Branch::Inactive.name().into(),
                    branch: Some(Branch::Inactive),
                    basis_tick,
                }
            }
        };
        match self.mode {
            CompanionMode::Complementary => {
                let ctx = DecisionContext {
                    state: &self.state,
                    trace: &self.trace,
                    regions: &self.regions,
                    model: Some(model),
                    config: &self.config,
                    scorer: &self.config.score_weights,
                    player_current: self.player_current.as_ref(),
                };
                let o = decide(&ctx, &mut self.rng);
                Decision { chosen: o.chosen, label: o.branch.name().into(), branch: Some(o.branch), basis_tick }
            }
            CompanionMode::Mimic => {
                let (kind, region) = predict_next(model, &self.state.full_feature_vector::<f64>());
                let choice = Choice::Act { kind, region };
                if choice.still_valid(&self.state, &self.regions) {
                    plain(choice, "mimic")
                } else {
                    plain(Choice::Default, "default_behavior")
                }
            }
            CompanionMode::Random => {
                let region = self.regions.sample(&mut self.rng);
                let rect = self.regions.bounds(region).expect("sampled id exists");
                let kinds: Vec<ActionKind> =
                    ActionKind::ACTIONS.into_iter().filter(|&k| self.state.is_possible(k, &rect)).collect();
                if kinds.is_empty() {
                    plain(Choice::Default, "default_behavior")
                } else {
                    let kind = kinds[self.rng.random_range(0..kinds.len())];
                    plain(Choice::Act { kind, region }, "random")
                }
            }
            CompanionMode::None => plain(Choice::NoOp, "none"),
        }
    }
}

/// Counters kept while an episode runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub player_actions: Vec<ActionKind>,
    pub companion_actions: Vec<ActionKind>,
    /// Companion actions whose kind the player had not used at the time.
    pub companion_unseen: u64,
    pub decisions: u64,
    pub branch_counts: BTreeMap<String, u64>,
    /// Decisions dropped because they were no longer valid when applied.
    pub revalidation_failures: u64,
}

/// One running game: engine state plus everything the companion learns.
/// Shared by the headless harness and the session service so both apply
/// actions in exactly the same way.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Episode {
    pub scenario: Arc<Scenario>,
    pub mode: CompanionMode,
    pub seed: u64,
    pub state: GameState,
    pub trace: Trace<f64>,
    pub regions: RegionSet,
    pub model: Option<PredictorModel<f64>>,
    pub stats: EpisodeStats,
    pub decision_log: Vec<Decision>,
    trained_on: usize,
    companion_rng: Option<ChaCha8Rng>,
    pending: Option<Decision>,
    next_decision_tick: u64,
}

impl Episode {
    pub fn new(scenario: Arc<Scenario>, mode: CompanionMode, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let state = GameState::new(scenario.game.clone(), seed)?;
        let regions = RegionSet::new(scenario.game.map_width, scenario.game.map_height)?;
        Ok(Self {
            mode,
            seed,
            state,
            trace: Trace::new(),
            regions,
            model: None,
            stats: EpisodeStats::default(),
            decision_log: Vec::new(),
            trained_on: 0,
            companion_rng: Some(ChaCha8Rng::seed_from_u64(seed ^ COMPANION_STREAM)),
            pending: None,
            next_decision_tick: 0,
            scenario,
        })
    }

    /// Validates and starts a player action at exactly `cell`, recording it
    /// in the trace and the region set.
    pub fn player_action(&mut self, kind: ActionKind, cell: CellPoint) -> Result<()> {
        let reject = |reason: &str| Err(Error::RejectedAction { kind, reason: reason.into() });
        if kind == ActionKind::Idle {
            return reject("idle is not an action");
        }
        if self.state.over {
            return reject("game over");
        }
        if cell.x >= self.state.config.map_width || cell.y >= self.state.config.map_height {
            return reject("outside the map");
        }
        if self.state.is_busy(Actor::Player) {
            return reject("busy");
        }
        if !self.state.is_possible(kind, &Rect::cell(cell)) {
            return reject("impossible");
        }
        let sv = self.state.full_feature_vector::<f64>();
        // The trace requires strictly increasing ticks.
        if self.trace.entries().last().is_some_and(|e| e.tick >= self.state.tick) {
            return reject("one action per tick");
        }
        self.trace.record(sv, kind, cell, self.state.tick)?;
        self.regions.record_action_point(cell)?;
        self.state.apply_action(Actor::Player, kind, &Rect::cell(cell))?;
        self.stats.player_actions.push(kind);
        if self.mode != CompanionMode::None {
            let cfg = &self.scenario.companion;
            if let Some(m) = maybe_retrain(&self.trace, &self.regions, cfg, self.trained_on)? {
                self.trained_on = self.trace.len();
                self.model = Some(m);
            }
        }
        Ok(())
    }

    /// Serializes the whole episode, learning state included. Fails if a
    /// decision job is still out.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.decision_outstanding() {
            return Err(Error::Domain("cannot save while a decision is outstanding".into()));
        }
        let env = SavedEpisode { format_version: EPISODE_FORMAT_VERSION, episode: self.clone() };
        Ok(serde_json::to_vec(&env).expect("episode serializes"))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let env: SavedEpisode =
            serde_json::from_slice(bytes).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        if env.format_version != EPISODE_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported episode format {}", env.format_version)));
        }
        Ok(env.episode)
    }

    /// Whether a new decision should start now.
    pub fn companion_due(&self) -> bool {
        self.mode != CompanionMode::None
            && !self.state.over
            && self.pending.is_none()
            && self.companion_rng.is_some()
            && self.state.tick >= self.next_decision_tick
            && !self.state.is_busy(Actor::Companion)
    }

    /// Detaches a decision job. The companion generator travels with it and
    /// must come back through [`Episode::accept`].
    pub fn decision_job(&mut self) -> Option<DecisionJob> {
        if !self.companion_due() {
            return None;
        }
        Some(DecisionJob {
            mode: self.mode,
            state: self.state.clone(),
            trace: self.trace.clone(),
            regions: self.regions.clone(),
            model: self.model.clone(),
            config: self.scenario.companion.clone(),
            player_current: self.state.current_action(Actor::Player).cloned(),
            rng: self.companion_rng.take().expect("due implies generator present"),
        })
    }

    /// Takes back a finished decision; it is applied on the next tick.
    pub fn accept(&mut self, decision: Decision, rng: ChaCha8Rng) {
        self.stats.decisions += 1;
        *self.stats.branch_counts.entry(decision.label.clone()).or_default() += 1;
        self.companion_rng = Some(rng);
        self.decision_log.push(decision.clone());
        self.pending = Some(decision);
    }

    /// Whether a decision job is out.
    pub fn decision_outstanding(&self) -> bool {
        self.companion_rng.is_none()
    }

    /// Applies a pending decision after revalidating it against the current
    /// state. Returns the decision if it started an action.
    fn apply_pending(&mut self) -> Option<Decision> {
        let d = self.pending.take()?;
        let now = self.state.tick;
        let epoch = self.scenario.companion.decision_epoch_ticks;
        match d.chosen {
            Choice::NoOp | Choice::Default => {
                self.next_decision_tick = now + epoch;
                return None;
            }
            _ => {}
        }
        if self.state.is_busy(Actor::Companion) || !d.chosen.still_valid(&self.state, &self.regions) {
            self.stats.revalidation_failures += 1;
            self.next_decision_tick = now;
            return None;
        }
        match execute_choice(&mut self.state, &self.regions, &d.chosen) {
            Ok(Some(kind)) => {
                if !self.trace.contains_kind(kind) {
                    self.stats.companion_unseen += 1;
                }
                self.stats.companion_actions.push(kind);
                self.next_decision_tick = now;
                Some(d)
            }
            _ => {
                self.stats.revalidation_failures += 1;
                self.next_decision_tick = now;
                None
            }
        }
    }

    /// Advances one tick: applies the decision made last tick, optionally
    /// decides inline on the current state, then steps the engine. Returns
    /// the companion decision applied this tick, if any.
    pub fn tick(&mut self, decide_inline: bool) -> Option<Decision> {
        let applied = self.apply_pending();
        if decide_inline {
            if let Some(job) = self.decision_job() {
                let (d, rng) = job.run();
                self.accept(d, rng);
            }
        }
        self.state.step(1);
        applied
    }
}
