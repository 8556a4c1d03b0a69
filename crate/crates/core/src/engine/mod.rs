//! Deterministic headless tower-defense simulation.
//!
//! Enemies enter from the right edge and walk left along their lane toward
//! the base at column 0. Structures standing in a lane block enemies, which
//! then attack them. All arithmetic is integer: enemy positions are
//! milli-cells, so results are identical on every platform.

mod action;
mod config;
mod features;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use action::{ActionKind, Actor};
pub use config::{Ability, EnemyType, GameConfig, PerAction, ScoreWeights, SpawnEntry, TowerStats, WallStats};
pub use features::{FeatureConfig, FEATURE_COUNT, FEATURE_NAMES};

use crate::error::{Error, Result};
use crate::grid::CellPoint;

/// Version tag of the canonical state serialization.
pub const STATE_FORMAT_VERSION: u32 = 1;

const MILLI: i64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Tower,
    Wall,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub kind: StructureKind,
    pub cell: CellPoint,
    pub health: u32,
    pub level: u32,
    /// Ticks until the tower may fire again.
    pub cooldown: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enemy {
    pub id: u64,
    pub enemy_type: u32,
    pub lane: u32,
    /// Left edge, milli-cells.
    pub x: i64,
    pub health: u32,
    pub attack_cooldown: u32,
}

impl Enemy {
    pub fn cell_x(&self) -> i64 {
        self.x.div_euclid(MILLI)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InProgressAction {
    pub actor: Actor,
    pub kind: ActionKind,
    pub cell: CellPoint,
    pub ticks_remaining: u32,
    /// Second actor that joined this action, if any.
    pub helper: Option<Actor>,
}

impl InProgressAction {
    pub fn involves(&self, actor: Actor) -> bool {
        self.actor == actor || self.helper == Some(actor)
    }
}

/// Full simulation state. Owns its config so it can be stepped standalone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub config: Arc<GameConfig>,
    pub tick: u64,
    pub rng: ChaCha8Rng,
    pub resources: u64,
    pub base_health: u32,
    pub leaks: u32,
    pub kills: u32,
    pub spawned: u32,
    pub next_enemy_id: u64,
    pub structures: Vec<Structure>,
    pub enemies: Vec<Enemy>,
    pub in_progress: Vec<InProgressAction>,
    pub speed: u32,
    pub over: bool,
    pub last_player_action_tick: Option<u64>,
}

/// Opaque full copy of a [`GameState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSnapshot(GameState);

impl GameSnapshot {
    /// Canonical, versioned serialized form.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.canonical_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        #[derive(Deserialize)]
        struct Envelope {
            format_version: u32,
            state: GameState,
        }
        let env: Envelope =
            serde_json::from_slice(bytes).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        if env.format_version != STATE_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported state format {}", env.format_version)));
        }
        Ok(Self(env.state))
    }

    pub fn state_hash(&self) -> u64 {
        self.0.state_hash()
    }
}

fn scaled_health(base: u32, growth_pct: u32, wave: u64) -> u32 {
    let h = base as u64 * (100 + growth_pct as u64 * wave) / 100;
    h.min(u32::MAX as u64) as u32
}

impl GameState {
    pub fn new(config: GameConfig, seed: u64) -> Result<Self> {
        Self::with_shared_config(Arc::new(config), seed)
    }

    pub fn with_shared_config(config: Arc<GameConfig>, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            resources: config.starting_resources as u64,
            base_health: config.base_max_health,
            leaks: 0,
            kills: 0,
            spawned: 0,
            next_enemy_id: 0,
            structures: Vec::new(),
            enemies: Vec::new(),
            in_progress: Vec::new(),
            speed: 1,
            over: false,
            last_player_action_tick: None,
            config,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    /// Advances `ticks` logical ticks. Speed never affects the result.
    pub fn step(&mut self, ticks: u64) {
        for _ in 0..ticks {
            self.tick_once();
        }
    }

    pub fn stepped(mut self, ticks: u64) -> Self {
        self.step(ticks);
        self
    }

    pub fn snapshot(&self) -> GameSnapshot {
        GameSnapshot(self.clone())
    }

    pub fn restore(snap: &GameSnapshot) -> Self {
        snap.0.clone()
    }

    /// Sets the wall-clock pacing multiplier. Logical results are unaffected.
    pub fn set_speed(&mut self, multiplier: u32) -> Result<()> {
        if multiplier == 0 || multiplier > self.config.max_speed {
            return Err(Error::Config(format!("speed {multiplier} outside 1..={}", self.config.max_speed)));
        }
        self.speed = multiplier;
        Ok(())
    }

    /// Wall-clock duration of one tick at the current speed.
    pub fn tick_period(&self) -> std::time::Duration {
        std::time::Duration::from_secs_f64(1.0 / (self.config.tick_rate as f64 * self.speed as f64))
    }

    /// `w_health·health + w_resources·resources + w_kills·kills − w_leaks·leaks`.
    pub fn score(&self, w: &ScoreWeights) -> i64 {
        w.w_health * self.base_health as i64 + w.w_resources * self.resources as i64 + w.w_kills * self.kills as i64
            - w.w_leaks * self.leaks as i64
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            format_version: u32,
            state: &'a GameState,
        }
        serde_json::to_vec(&Envelope { format_version: STATE_FORMAT_VERSION, state: self })
            .expect("game state serializes")
    }

    /// First 64 bits of SHA-256 over the canonical serialization.
    pub fn state_hash(&self) -> u64 {
        let digest = Sha256::digest(self.canonical_bytes());
        u64::from_be_bytes(digest[..8].try_into().unwrap())
    }

    pub fn structure_at(&self, cell: CellPoint) -> Option<&Structure> {
        self.structures.iter().find(|s| s.cell == cell)
    }

    pub fn live_enemies(&self) -> usize {
        self.enemies.len()
    }

    /// The in-progress action of `actor` (as owner or helper), if any.
    pub fn current_action(&self, actor: Actor) -> Option<&InProgressAction> {
        self.in_progress.iter().find(|a| a.involves(actor))
    }

    pub fn is_busy(&self, actor: Actor) -> bool {
        self.current_action(actor).is_some()
    }

    fn tick_once(&mut self) {
        if self.over {
            self.tick += 1;
            return;
        }
        self.spawn();
        self.progress_actions();
        self.fire_towers();
        let before = self.enemies.len();
        self.enemies.retain(|e| e.health > 0);
        self.kills += (before - self.enemies.len()) as u32;
        self.move_enemies();
        self.structures.retain(|s| s.health > 0);
        self.resources += self.config.income_per_tick as u64;
        self.tick += 1;
        if self.leaks >= self.config.leak_limit {
            self.over = true;
        }
    }

    fn spawn(&mut self) {
        let cfg = Arc::clone(&self.config);
        let period = cfg.wave_period as u64;
        let wave = self.tick / period;
        let offset = self.tick % period;
        let len = cfg.spawn_schedule.len() as u64;
        let count = len + wave * cfg.extra_per_wave as u64;
        for i in 0..count {
            let entry = &cfg.spawn_schedule[(i % len) as usize];
            let copy = i / len;
            if (entry.tick as u64 + copy * cfg.copy_spacing as u64) % period != offset {
                continue;
            }
            let lane = if copy == 0 { entry.lane } else { cfg.lanes[self.rng.random_range(0..cfg.lanes.len())] };
            let et = &cfg.enemy_types[entry.enemy_type as usize];
            self.enemies.push(Enemy {
                id: self.next_enemy_id,
                enemy_type: et.id,
                lane,
                x: (cfg.map_width as i64 - 1) * MILLI,
                health: scaled_health(et.health, cfg.health_growth_pct, wave),
                attack_cooldown: 0,
            });
            self.next_enemy_id += 1;
            self.spawned += 1;
        }
    }

    fn progress_actions(&mut self) {
        let mut done = Vec::new();
        for (i, a) in self.in_progress.iter_mut().enumerate() {
            a.ticks_remaining = a.ticks_remaining.saturating_sub(1);
            if a.ticks_remaining == 0 {
                done.push(i);
            }
        }
        for &i in done.iter().rev() {
            let a = self.in_progress.remove(i);
            self.complete(&a);
        }
    }

    fn complete(&mut self, a: &InProgressAction) {
        let cfg = &self.config;
        match a.kind {
            ActionKind::BuildTower | ActionKind::BuildWall => {
                if self.structure_at(a.cell).is_none() {
                    let kind =
                        if a.kind == ActionKind::BuildTower { StructureKind::Tower } else { StructureKind::Wall };
                    self.structures.push(Structure {
                        kind,
                        cell: a.cell,
                        health: cfg.structure_max_health(kind),
                        level: 1,
                        cooldown: 0,
                    });
                }
            }
            ActionKind::Repair => {
                if let Some(s) = self.structures.iter_mut().find(|s| s.cell == a.cell) {
                    s.health = cfg.structure_max_health(s.kind);
                }
            }
            ActionKind::UpgradeTower => {
                let max_level = cfg.tower.max_level;
                if let Some(s) = self.structures.iter_mut().find(|s| s.cell == a.cell && s.kind == StructureKind::Tower)
                {
                    s.level = (s.level + 1).min(max_level);
                }
            }
            ActionKind::Idle => {}
        }
    }

    fn fire_towers(&mut self) {
        let cfg = Arc::clone(&self.config);
        let range = cfg.tower.range as i64 * MILLI;
        let range_sq = range * range;
        for s in self.structures.iter_mut().filter(|s| s.kind == StructureKind::Tower) {
            if s.cooldown > 0 {
                s.cooldown -= 1;
                continue;
            }
            let tx = s.cell.x as i64 * MILLI + MILLI / 2;
            let ty = s.cell.y as i64 * MILLI + MILLI / 2;
            let target = self
                .enemies
                .iter_mut()
                .filter(|e| e.health > 0)
                .filter(|e| {
                    let dx = e.x + MILLI / 2 - tx;
                    let dy = e.lane as i64 * MILLI + MILLI / 2 - ty;
                    dx * dx + dy * dy <= range_sq
                })
                .min_by_key(|e| (e.x, e.id));
            if let Some(e) = target {
                let mut dmg = cfg.tower.damage * s.level;
                if cfg.enemy_types[e.enemy_type as usize].ability == Ability::Armored {
                    dmg = dmg.div_ceil(2).max(1);
                }
                e.health = e.health.saturating_sub(dmg);
                s.cooldown = cfg.tower.cooldown;
            }
        }
    }

    fn move_enemies(&mut self) {
        let cfg = Arc::clone(&self.config);
        let mut leaked = Vec::new();
        for i in 0..self.enemies.len() {
            let e = &self.enemies[i];
            let et = &cfg.enemy_types[e.enemy_type as usize];
            let cur_cell = e.cell_x();
            let new_x = e.x - et.speed as i64;
            let target_cell = new_x.div_euclid(MILLI);
            let lane = e.lane;
            let blocker = if target_cell < cur_cell && target_cell >= 0 {
                let cell = CellPoint::new(target_cell as u32, lane);
                self.structures.iter().position(|s| s.cell == cell && s.health > 0)
            } else {
                None
            };
            let e = &mut self.enemies[i];
            match blocker {
                Some(si) => {
                    e.x = cur_cell * MILLI;
                    if e.attack_cooldown == 0 {
                        let s = &mut self.structures[si];
                        s.health = s.health.saturating_sub(et.damage);
                        e.attack_cooldown = match et.ability {
                            Ability::Fast => cfg.enemy_attack_cooldown / 2,
                            _ => cfg.enemy_attack_cooldown,
                        };
                    } else {
                        e.attack_cooldown -= 1;
                    }
                }
                None => {
                    e.x = new_x;
                    if new_x < 0 {
                        leaked.push(i);
                    }
                }
            }
        }
        for &i in leaked.iter().rev() {
            let e = self.enemies.remove(i);
            let dmg = cfg.enemy_types[e.enemy_type as usize].damage;
            self.base_health = self.base_health.saturating_sub(dmg);
            self.leaks += 1;
        }
    }
}
