use serde::{Deserialize, Serialize};

use super::{GameState, InProgressAction, StructureKind};
use crate::error::{Error, Result};
use crate::grid::{CellPoint, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    BuildTower,
    BuildWall,
    Repair,
    UpgradeTower,
    Idle,
}

impl ActionKind {
    /// Every kind that costs something and can appear in a trace.
    pub const ACTIONS: [ActionKind; 4] =
        [ActionKind::BuildTower, ActionKind::BuildWall, ActionKind::Repair, ActionKind::UpgradeTower];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::BuildTower => "build_tower",
            ActionKind::BuildWall => "build_wall",
            ActionKind::Repair => "repair",
            ActionKind::UpgradeTower => "upgrade_tower",
            ActionKind::Idle => "idle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_lowercase();
        match norm.as_str() {
            "buildtower" | "tower" => Some(ActionKind::BuildTower),
            "buildwall" | "wall" => Some(ActionKind::BuildWall),
            "repair" => Some(ActionKind::Repair),
            "upgradetower" | "upgrade" => Some(ActionKind::UpgradeTower),
            "idle" => Some(ActionKind::Idle),
            _ => None,
        }
    }

    fn is_build(self) -> bool {
        matches!(self, ActionKind::BuildTower | ActionKind::BuildWall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Player,
    Companion,
}

impl GameState {
    /// Whether `kind` is affordable and has a legal target cell inside `rect`.
    pub fn is_possible(&self, kind: ActionKind, rect: &Rect) -> bool {
        if kind == ActionKind::Idle {
            return true;
        }
        if self.resources < self.config.costs.get(kind) as u64 {
            return false;
        }
        let rect = self.clip(rect);
        match rect {
            None => false,
            Some(rect) if kind.is_build() => {
                let occupied = self.occupied_in(&rect).len() as u64;
                occupied < rect.area()
            }
            Some(rect) => self.upkeep_targets(kind, &rect).next().is_some(),
        }
    }

    /// The cell `apply_action` would target: the legal cell nearest the rect
    /// center, ties broken row-major.
    pub fn target_cell(&self, kind: ActionKind, rect: &Rect) -> Option<CellPoint> {
        let rect = self.clip(rect)?;
        let key = |c: &CellPoint| (rect.center_distance_sq(*c), c.y, c.x);
        match kind {
            ActionKind::Idle => None,
            k if k.is_build() => {
                let mut occupied = self.occupied_in(&rect);
                occupied.sort_unstable_by_key(|c| (c.y, c.x));
                rect.cells()
                    .filter(|c| occupied.binary_search_by_key(&(c.y, c.x), |o| (o.y, o.x)).is_err())
                    .min_by_key(key)
            }
            k => self.upkeep_targets(k, &rect).min_by_key(key),
        }
    }

    /// Deducts the cost and queues the action at the chosen target cell.
    /// Returns the target cell, or `None` for `Idle`.
    pub fn apply_action(&mut self, actor: Actor, kind: ActionKind, rect: &Rect) -> Result<Option<CellPoint>> {
        if kind == ActionKind::Idle {
            return Ok(None);
        }
        let cost = self.config.costs.get(kind) as u64;
        if self.resources < cost {
            return Err(Error::RejectedAction {
                kind,
                reason: format!("needs {cost} resources, have {}", self.resources),
            });
        }
        let cell = self
            .target_cell(kind, rect)
            .ok_or_else(|| Error::RejectedAction { kind, reason: "no legal target in region".into() })?;
        self.resources -= cost;
        self.in_progress.push(InProgressAction {
            actor,
            kind,
            cell,
            ticks_remaining: self.config.durations.get(kind),
            helper: None,
        });
        if actor == Actor::Player {
            self.last_player_action_tick = Some(self.tick);
        }
        Ok(Some(cell))
    }

    /// Whether `actor` may join the in-progress action at `cell`.
    pub fn can_join(&self, actor: Actor, cell: CellPoint) -> bool {
        self.in_progress.iter().any(|a| a.cell == cell && a.actor != actor && a.helper.is_none())
    }

    /// Joins another actor's in-progress action at `cell`, halving its
    /// remaining ticks (rounded up). No resources change hands.
    pub fn join_action(&mut self, actor: Actor, cell: CellPoint) -> Result<ActionKind> {
        let a = self
            .in_progress
            .iter_mut()
            .find(|a| a.cell == cell && a.actor != actor && a.helper.is_none())
            .ok_or_else(|| Error::RejectedAction { kind: ActionKind::Idle, reason: "nothing to join".into() })?;
        a.helper = Some(actor);
        a.ticks_remaining = a.ticks_remaining.div_ceil(2);
        Ok(a.kind)
    }

    fn clip(&self, rect: &Rect) -> Option<Rect> {
        let r = Rect::new(rect.x0, rect.y0, rect.x1.min(self.config.map_width), rect.y1.min(self.config.map_height));
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }

    /// Cells inside `rect` holding a structure or reserved by a pending build.
    fn occupied_in(&self, rect: &Rect) -> Vec<CellPoint> {
        self.structures
            .iter()
            .map(|s| s.cell)
            .chain(self.in_progress.iter().filter(|a| a.kind.is_build()).map(|a| a.cell))
            .filter(|c| rect.contains(*c))
            .collect()
    }

    fn upkeep_targets<'a>(&'a self, kind: ActionKind, rect: &'a Rect) -> impl Iterator<Item = CellPoint> + 'a {
        let cfg = &self.config;
        self.structures
            .iter()
            .filter(move |s| rect.contains(s.cell))
            .filter(move |s| match kind {
                ActionKind::Repair => s.health < cfg.structure_max_health(s.kind),
                ActionKind::UpgradeTower => s.kind == StructureKind::Tower && s.level < cfg.tower.max_level,
                _ => false,
            })
            .filter(move |s| !self.in_progress.iter().any(|a| a.kind == kind && a.cell == s.cell))
            .map(|s| s.cell)
    }
}
