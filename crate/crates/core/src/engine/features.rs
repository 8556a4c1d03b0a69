use serde::{Deserialize, Serialize};

use super::{GameState, StructureKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const FEATURE_COUNT: usize = 10;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "resources",
    "base_health",
    "leaks",
    "kills",
    "enemy_count",
    "nearest_enemy_distance_to_base",
    "tower_count",
    "wall_count",
    "mean_structure_health_pct",
    "ticks_since_last_player_action",
];

/// Ordered subset of the full feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FeatureConfig {
    features: Vec<usize>,
}

impl FeatureConfig {
    pub fn new(features: Vec<usize>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Config("feature selection must not be empty".into()));
        }
        for (i, &f) in features.iter().enumerate() {
            if f >= FEATURE_COUNT {
                return Err(Error::Config(format!("feature index {f} out of range")));
            }
            if features[..i].contains(&f) {
                return Err(Error::Config(format!("feature index {f} selected twice")));
            }
        }
        Ok(Self { features })
    }

    pub fn full() -> Self {
        Self { features: (0..FEATURE_COUNT).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.features.contains(&feature)
    }

    /// Projects a full vector onto the selected features, in selection order.
    pub fn project<F: Copy>(&self, full: &[F]) -> Vec<F> {
        self.features.iter().map(|&i| full[i]).collect()
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl TryFrom<Vec<usize>> for FeatureConfig {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FeatureConfig> for Vec<usize> {
    fn from(fc: FeatureConfig) -> Self {
        fc.features
    }
}

impl GameState {
    /// Every feature as an exact integer.
    pub fn raw_features(&self) -> [i64; FEATURE_COUNT] {
        let cfg = &self.config;
        let nearest = self.enemies.iter().map(|e| e.cell_x().max(0)).min().unwrap_or(cfg.map_width as i64);
        let towers = self.structures.iter().filter(|s| s.kind == StructureKind::Tower).count();
        let walls = self.structures.len() - towers;
        let mean_health = if self.structures.is_empty() {
            100
        } else {
            let sum: u64 =
                self.structures.iter().map(|s| s.health as u64 * 100 / cfg.structure_max_health(s.kind) as u64).sum();
            (sum / self.structures.len() as u64) as i64
        };
        let since = self.tick - self.last_player_action_tick.unwrap_or(0);
        [
            self.resources as i64,
            self.base_health as i64,
            self.leaks as i64,
            self.kills as i64,
            self.enemies.len() as i64,
            nearest,
            towers as i64,
            walls as i64,
            mean_health,
            since as i64,
        ]
    }

    /// Full feature vector in canonical order.
    pub fn full_feature_vector<F: Scalar>(&self) -> Vec<F> {
        self.raw_features().iter().map(|&v| F::from_int(v)).collect()
    }

    /// Feature vector restricted to `fc`.
    pub fn feature_vector<F: Scalar>(&self, fc: &FeatureConfig) -> Vec<F> {
        fc.project(&self.full_feature_vector::<F>())
    }
}
