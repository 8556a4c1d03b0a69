use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{ActionKind, Actor, GameState, StructureKind};
use crate::error::{Error, Result};
use crate::grid::{CellPoint, Rect};

/// One timed action of a scripted player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedAction {
    pub tick: u64,
    pub kind: ActionKind,
    pub x: u32,
    pub y: u32,
}

/// Stand-ins for human players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlayerPolicy {
    /// Slow, defensive: builds and repairs near the base.
    Turtle,
    /// Builds forward, in the enemy lanes near the spawn edge.
    Rusher,
    /// Round-robins the left, middle and right thirds of the map.
    Spreader,
    /// Attempts each action at exactly its tick; rejected ones are dropped.
    Scripted { actions: Vec<ScriptedAction> },
    /// The kind is a threshold function of two features.
    FeatureDriven { feature_a: usize, threshold_a: i64, feature_b: usize, threshold_b: i64 },
}

impl PlayerPolicy {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "turtle" => Ok(Self::Turtle),
            "rusher" => Ok(Self::Rusher),
            "spreader" => Ok(Self::Spreader),
            "feature_driven" | "feature-driven" => Ok(Self::feature_driven_default()),
            other => Err(Error::Config(format!("unknown player policy `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Turtle => "turtle",
            Self::Rusher => "rusher",
            Self::Spreader => "spreader",
            Self::Scripted { .. } => "scripted",
            Self::FeatureDriven { .. } => "feature_driven",
        }
    }

    /// Resources against the nearest enemy's distance to the base. Both swing
    /// up and down over a wave, so every kind keeps coming up.
    pub fn feature_driven_default() -> Self {
        Self::FeatureDriven { feature_a: 0, threshold_a: 200, feature_b: 5, threshold_b: 10 }
    }

    /// Ticks of idleness after finishing an action.
    fn pause<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Self::Turtle => rng.random_range(60..=100),
            Self::Rusher => rng.random_range(10..=30),
            Self::Spreader => rng.random_range(30..=60),
            Self::Scripted { .. } => 0,
            Self::FeatureDriven { .. } => rng.random_range(5..=60),
        }
    }
}

/// Stateful driver for a policy.
#[derive(Debug, Clone)]
pub struct PolicyRunner {
    policy: PlayerPolicy,
    cursor: usize,
    ready_at: u64,
    was_busy: bool,
    round: u64,
}

impl PolicyRunner {
    pub fn new(policy: PlayerPolicy) -> Self {
        let policy = match policy {
            PlayerPolicy::Scripted { mut actions } => {
                actions.sort_by_key(|a| a.tick);
                PlayerPolicy::Scripted { actions }
            }
            p => p,
        };
        Self { policy, cursor: 0, ready_at: 0, was_busy: false, round: 0 }
    }

    pub fn policy(&self) -> &PlayerPolicy {
        &self.policy
    }

    /// Actions to attempt at the current tick, in order. Only the scripted
    /// policy ever returns more than one.
    pub fn next_actions<R: Rng + ?Sized>(&mut self, state: &GameState, rng: &mut R) -> Vec<(ActionKind, CellPoint)> {
        if let PlayerPolicy::Scripted { actions } = &self.policy {
            while self.cursor < actions.len() && actions[self.cursor].tick < state.tick {
                self.cursor += 1;
            }
            let mut out = Vec::new();
            while self.cursor < actions.len() && actions[self.cursor].tick == state.tick {
                let a = actions[self.cursor];
                out.push((a.kind, CellPoint::new(a.x, a.y)));
                self.cursor += 1;
            }
            return out;
        }
        let busy = state.is_busy(Actor::Player);
        if busy {
            self.was_busy = true;
            return Vec::new();
        }
        if self.was_busy {
            self.was_busy = false;
            self.ready_at = state.tick + self.policy.pause(rng);
        }
        if state.tick < self.ready_at {
            return Vec::new();
        }
        let pick = match self.policy {
            PlayerPolicy::Turtle => turtle(state, rng),
            PlayerPolicy::Rusher => rusher(state, rng),
            PlayerPolicy::Spreader => spreader(state, rng, self.round),
            PlayerPolicy::FeatureDriven { feature_a, threshold_a, feature_b, threshold_b } => {
                let f = state.raw_features();
                let kind = match (f[feature_a] >= threshold_a, f[feature_b] >= threshold_b) {
                    (false, false) => ActionKind::BuildWall,
                    (true, false) => ActionKind::BuildTower,
                    (false, true) => ActionKind::Repair,
                    (true, true) => ActionKind::UpgradeTower,
                };
                let cell = cell_for(state, kind, Rect::new(1, 0, 12, state.config.map_height), rng);
                if cell.is_none() {
                    // Nothing to do for this kind right now; look again later.
                    self.ready_at = state.tick + self.policy.pause(rng);
                }
                cell.map(|c| (kind, c))
            }
            PlayerPolicy::Scripted { .. } => unreachable!(),
        };
        if pick.is_some() {
            self.round += 1;
        }
        pick.into_iter().collect()
    }
}

fn possible_at(state: &GameState, kind: ActionKind, c: CellPoint) -> bool {
    state.is_possible(kind, &Rect::cell(c))
}

/// A random cell in `area` where `kind` is possible at exactly that cell.
fn cell_for<R: Rng + ?Sized>(state: &GameState, kind: ActionKind, area: Rect, rng: &mut R) -> Option<CellPoint> {
    match kind {
        ActionKind::Repair | ActionKind::UpgradeTower => {
            let targets: Vec<CellPoint> = state
                .structures
                .iter()
                .filter(|s| area.contains(s.cell) && possible_at(state, kind, s.cell))
                .map(|s| s.cell)
                .collect();
            (!targets.is_empty()).then(|| targets[rng.random_range(0..targets.len())])
        }
        ActionKind::BuildTower | ActionKind::BuildWall => {
            for _ in 0..16 {
                let c = CellPoint::new(rng.random_range(area.x0..area.x1), rng.random_range(area.y0..area.y1));
                if possible_at(state, kind, c) {
                    return Some(c);
                }
            }
            None
        }
        ActionKind::Idle => None,
    }
}

/// A random cell of `area` on an enemy lane (for walls) or next to one
/// (for towers).
fn lane_cell<R: Rng + ?Sized>(state: &GameState, kind: ActionKind, area: Rect, rng: &mut R) -> Option<CellPoint> {
    let lanes = &state.config.lanes;
    for _ in 0..16 {
        let lane = lanes[rng.random_range(0..lanes.len())];
        let y = match kind {
            ActionKind::BuildWall => lane,
            _ => {
                let off = rng.random_range(1..=2);
                if rng.random_bool(0.5) {
                    lane + off
                } else {
                    lane.saturating_sub(off)
                }
            }
        };
        let c = CellPoint::new(rng.random_range(area.x0..area.x1), y.min(state.config.map_height - 1));
        if possible_at(state, kind, c) {
            return Some(c);
        }
    }
    None
}

fn damaged_in(state: &GameState, area: Rect, below_pct: u32) -> Option<CellPoint> {
    state
        .structures
        .iter()
        .filter(|s| area.contains(s.cell))
        .filter(|s| s.health * 100 < state.config.structure_max_health(s.kind) * below_pct)
        .map(|s| s.cell)
        .find(|&c| possible_at(state, ActionKind::Repair, c))
}

/// Structures as the build that made them, plus builds under way.
fn standing_builds(state: &GameState) -> impl Iterator<Item = (ActionKind, CellPoint)> + '_ {
    let built = state.structures.iter().map(|s| {
        let kind = if s.kind == StructureKind::Tower { ActionKind::BuildTower } else { ActionKind::BuildWall };
        (kind, s.cell)
    });
    let pending = state
        .in_progress
        .iter()
        .filter(|a| matches!(a.kind, ActionKind::BuildTower | ActionKind::BuildWall))
        .map(|a| (a.kind, a.cell));
    built.chain(pending)
}

/// Covers lanes in spawn order with a tower just off the lane and a wall in
/// front of it, then repairs and upgrades.
fn turtle<R: Rng + ?Sized>(state: &GameState, rng: &mut R) -> Option<(ActionKind, CellPoint)> {
    let cfg = &state.config;
    let home = Rect::new(1, 0, 9, cfg.map_height);
    if let Some(c) = damaged_in(state, home, 60) {
        return Some((ActionKind::Repair, c));
    }
    let mut lanes: Vec<u32> = Vec::new();
    for e in cfg.spawn_schedule.iter().map(|e| e.lane).chain(cfg.lanes.iter().copied()) {
        if !lanes.contains(&e) {
            lanes.push(e);
        }
    }
    let covered = |lane: u32| {
        standing_builds(state)
            .any(|(kind, c)| kind == ActionKind::BuildTower && home.contains(c) && c.y.abs_diff(lane) <= 2)
    };
    let walled = |lane: u32| {
        standing_builds(state).any(|(kind, c)| kind == ActionKind::BuildWall && c.y == lane && home.contains(c))
    };
    for &lane in &lanes {
        if !covered(lane) {
            let y = if rng.random_bool(0.5) { lane + 1 } else { lane.saturating_sub(1) };
            let c = CellPoint::new(rng.random_range(5..=6), y.min(cfg.map_height - 1));
            return possible_at(state, ActionKind::BuildTower, c).then_some((ActionKind::BuildTower, c));
        }
        if !walled(lane) {
            let c = CellPoint::new(7, lane);
            return possible_at(state, ActionKind::BuildWall, c).then_some((ActionKind::BuildWall, c));
        }
    }
    if rng.random_bool(0.5) {
        if let Some(c) = cell_for(state, ActionKind::UpgradeTower, home, rng) {
            return Some((ActionKind::UpgradeTower, c));
        }
    }
    lane_cell(state, ActionKind::BuildTower, home, rng).map(|c| (ActionKind::BuildTower, c))
}

fn rusher<R: Rng + ?Sized>(state: &GameState, rng: &mut R) -> Option<(ActionKind, CellPoint)> {
    let w = state.config.map_width;
    let front = Rect::new(w * 5 / 8, 0, w - 1, state.config.map_height);
    if let Some(c) = damaged_in(state, front, 40) {
        return Some((ActionKind::Repair, c));
    }
    let kind = if rng.random_bool(0.5) { ActionKind::BuildTower } else { ActionKind::BuildWall };
    lane_cell(state, kind, front, rng).map(|c| (kind, c))
}

fn spreader<R: Rng + ?Sized>(state: &GameState, rng: &mut R, round: u64) -> Option<(ActionKind, CellPoint)> {
    let w = state.config.map_width;
    let third = (round % 3) as u32;
    let area = Rect::new(w * third / 3, 0, w * (third + 1) / 3, state.config.map_height);
    let kind = match round / 3 % 4 {
        0 => ActionKind::BuildTower,
        1 => ActionKind::BuildWall,
        2 => ActionKind::Repair,
        _ => ActionKind::UpgradeTower,
    };
    let cell = match kind {
        ActionKind::BuildTower | ActionKind::BuildWall => lane_cell(state, kind, area, rng),
        _ => cell_for(state, kind, area, rng),
    };
    cell.or_else(|| lane_cell(state, ActionKind::BuildWall, area, rng)).map(|c| {
        let k = if possible_at(state, kind, c) { kind } else { ActionKind::BuildWall };
        (k, c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::GameConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scripted_fires_at_exact_ticks() {
        let actions = vec![
            ScriptedAction { tick: 3, kind: ActionKind::BuildWall, x: 5, y: 4 },
            ScriptedAction { tick: 1, kind: ActionKind::BuildTower, x: 2, y: 6 },
        ];
        let mut r = PolicyRunner::new(PlayerPolicy::Scripted { actions });
        let mut s = GameState::new(GameConfig::default(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = Vec::new();
        for _ in 0..5 {
            seen.push(r.next_actions(&s, &mut rng));
            s.step(1);
        }
        assert!(seen[0].is_empty());
        assert_eq!(seen[1], vec![(ActionKind::BuildTower, CellPoint::new(2, 6))]);
        assert_eq!(seen[3], vec![(ActionKind::BuildWall, CellPoint::new(5, 4))]);
    }

    #[test]
    fn turtle_stays_home() {
        let mut r = PolicyRunner::new(PlayerPolicy::Turtle);
        let s = GameState::new(GameConfig::default(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let acts = r.next_actions(&s, &mut rng);
        assert_eq!(acts.len(), 1);
        assert!(acts[0].1.x < 9);
        assert!(possible_at(&s, acts[0].0, acts[0].1));
    }

    #[test]
    fn parse_names() {
        assert_eq!(PlayerPolicy::parse("Turtle").unwrap(), PlayerPolicy::Turtle);
        assert!(PlayerPolicy::parse("sleepy").is_err());
        for p in [PlayerPolicy::Turtle, PlayerPolicy::Rusher, PlayerPolicy::Spreader] {
            assert_eq!(PlayerPolicy::parse(p.name()).unwrap(), p);
        }
    }
}
