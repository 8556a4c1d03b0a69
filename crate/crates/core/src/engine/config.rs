use serde::{Deserialize, Serialize};

use super::ActionKind;
use crate::error::{Error, Result};

/// Special ability carried by an enemy type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ability {
    None,
    /// Attacks blocking structures twice as often.
    Fast,
    /// Takes half damage from towers (rounded up, at least 1).
    Armored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnemyType {
    pub id: u32,
    /// Cells per tick ×1000.
    pub speed: u32,
    pub health: u32,
    pub damage: u32,
    pub ability: Ability,
}

/// One entry of the repeating wave template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpawnEntry {
    /// Offset from the wave start.
    pub tick: u32,
    pub enemy_type: u32,
    /// Map row the enemy walks along.
    pub lane: u32,
}

/// A value per non-idle action kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerAction<T> {
    pub build_tower: T,
    pub build_wall: T,
    pub repair: T,
    pub upgrade_tower: T,
}

impl<T: Copy + Default> PerAction<T> {
    /// Value for `kind`; `Idle` maps to `T::default()`.
    pub fn get(&self, kind: ActionKind) -> T {
        match kind {
            ActionKind::BuildTower => self.build_tower,
            ActionKind::BuildWall => self.build_wall,
            ActionKind::Repair => self.repair,
            ActionKind::UpgradeTower => self.upgrade_tower,
            ActionKind::Idle => T::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub w_health: i64,
    pub w_resources: i64,
    pub w_kills: i64,
    pub w_leaks: i64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self { w_health: 5, w_resources: 1, w_kills: 2, w_leaks: 10 }
    }
}

impl ScoreWeights {
    pub fn scaled(&self, k: i64) -> Self {
        Self {
            w_health: self.w_health * k,
            w_resources: self.w_resources * k,
            w_kills: self.w_kills * k,
            w_leaks: self.w_leaks * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerStats {
    pub max_health: u32,
    /// Firing range in cells (Euclidean, center to center).
    pub range: u32,
    /// Damage per shot at level 1; scales linearly with level.
    pub damage: u32,
    pub cooldown: u32,
    pub max_level: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallStats {
    pub max_health: u32,
}

/// Everything that defines a scenario's rules. Serialized as the scenario
/// file's `game` object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub map_width: u32,
    pub map_height: u32,
    /// Logical ticks per wall-clock second at speed 1.
    pub tick_rate: u32,
    pub starting_resources: u32,
    pub income_per_tick: u32,
    pub base_max_health: u32,
    pub leak_limit: u32,
    pub max_speed: u32,
    pub costs: PerAction<u32>,
    pub durations: PerAction<u32>,
    pub tower: TowerStats,
    pub wall: WallStats,
    /// Ticks between an enemy's hits on a blocking structure.
    pub enemy_attack_cooldown: u32,
    pub enemy_types: Vec<EnemyType>,
    /// Rows enemies may walk along; extra wave copies pick from these.
    pub lanes: Vec<u32>,
    pub spawn_schedule: Vec<SpawnEntry>,
    pub wave_period: u32,
    /// Additional enemies added to each successive wave.
    pub extra_per_wave: u32,
    /// Spacing between repeated copies of a template entry within a wave.
    pub copy_spacing: u32,
    /// Percent added to every enemy's health per completed wave.
    pub health_growth_pct: u32,
    pub score_weights: ScoreWeights,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            map_width: 40,
            map_height: 24,
            tick_rate: 20,
            starting_resources: 300,
            income_per_tick: 1,
            base_max_health: 200,
            leak_limit: 20,
            max_speed: 16,
            costs: PerAction { build_tower: 120, build_wall: 60, repair: 30, upgrade_tower: 100 },
            durations: PerAction { build_tower: 60, build_wall: 30, repair: 40, upgrade_tower: 80 },
            tower: TowerStats { max_health: 120, range: 4, damage: 12, cooldown: 12, max_level: 3 },
            wall: WallStats { max_health: 240 },
            enemy_attack_cooldown: 20,
            enemy_types: vec![
                EnemyType { id: 0, speed: 100, health: 60, damage: 10, ability: Ability::None },
                EnemyType { id: 1, speed: 180, health: 35, damage: 8, ability: Ability::Fast },
                EnemyType { id: 2, speed: 60, health: 180, damage: 25, ability: Ability::Armored },
            ],
            lanes: vec![4, 8, 12, 16, 20],
            spawn_schedule: vec![
                SpawnEntry { tick: 0, enemy_type: 0, lane: 12 },
                SpawnEntry { tick: 60, enemy_type: 0, lane: 8 },
                SpawnEntry { tick: 140, enemy_type: 1, lane: 16 },
                SpawnEntry { tick: 220, enemy_type: 0, lane: 4 },
                SpawnEntry { tick: 300, enemy_type: 2, lane: 20 },
            ],
            wave_period: 400,
            extra_per_wave: 1,
            copy_spacing: 37,
            health_growth_pct: 10,
            score_weights: ScoreWeights::default(),
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("map_width", self.map_width),
            ("map_height", self.map_height),
            ("tick_rate", self.tick_rate),
            ("base_max_health", self.base_max_health),
            ("leak_limit", self.leak_limit),
            ("max_speed", self.max_speed),
            ("wave_period", self.wave_period),
            ("tower.max_health", self.tower.max_health),
            ("tower.max_level", self.tower.max_level),
            ("tower.cooldown", self.tower.cooldown),
            ("wall.max_health", self.wall.max_health),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.enemy_types.is_empty() {
            return Err(Error::Config("enemy_types must not be empty".into()));
        }
        for (i, e) in self.enemy_types.iter().enumerate() {
            if e.id as usize != i {
                return Err(Error::Config(format!("enemy type at index {i} has id {}", e.id)));
            }
            if e.speed == 0 || e.health == 0 {
                return Err(Error::Config(format!("enemy type {i} needs positive speed and health")));
            }
            if e.speed >= 1000 {
                return Err(Error::Config(format!("enemy type {i} moves a full cell per tick or more")));
            }
        }
        if self.spawn_schedule.is_empty() {
            return Err(Error::Config("spawn_schedule must not be empty".into()));
        }
        for s in &self.spawn_schedule {
            if s.enemy_type as usize >= self.enemy_types.len() {
                return Err(Error::Config(format!("unknown enemy type {}", s.enemy_type)));
            }
            if s.lane >= self.map_height {
                return Err(Error::Config(format!("lane {} outside map", s.lane)));
            }
            if s.tick >= self.wave_period {
                return Err(Error::Config(format!("spawn tick {} outside wave period", s.tick)));
            }
        }
        if self.lanes.is_empty() || self.lanes.iter().any(|&l| l >= self.map_height) {
            return Err(Error::Config("lanes must be non-empty rows inside the map".into()));
        }
        for kind in ActionKind::ACTIONS {
            if self.durations.get(kind) == 0 {
                return Err(Error::Config(format!("duration of {kind:?} must be positive")));
            }
        }
        Ok(())
    }

    pub fn longest_duration(&self) -> u32 {
        ActionKind::ACTIONS.iter().map(|&k| self.durations.get(k)).max().unwrap_or(0)
    }

    pub fn structure_max_health(&self, kind: super::StructureKind) -> u32 {
        match kind {
            super::StructureKind::Tower => self.tower.max_health,
            super::StructureKind::Wall => self.wall.max_health,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        GameConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_width_rejected() {
        let cfg = GameConfig { map_width: 0, map_height: 10, ..GameConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: GameConfig = serde_json::from_str(r#"{"map_width": 30}"#).unwrap();
        assert_eq!(cfg.map_width, 30);
        assert_eq!(cfg.map_height, 24);
    }
}
