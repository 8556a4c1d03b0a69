//! Complementary companion AI over a deterministic tower-defense testbed.
//!
//! The companion watches the player, predicts the player's next action and
//! where it will happen, and then picks an action that furthers the
//! player's strategy instead of copying it. Modules:
//!
//! - [`engine`]: integer simulation with snapshots, feature vectors and scoring.
//! - [`regions`]: the dynamic map partition refined by player action points.
//! - [`player_model`]: traces, classifiers and forward-chained evaluation.
//! - [`companion`]: the decision flow and rollout scoring.
//! - [`harness`]: scripted players, episodes, mode comparisons, persistence.
//!
//! The learning code is generic over [`Scalar`]; the aliases below fix it
//! to `f64` (and `f32` for the `…32` variants).

pub mod companion;
pub mod engine;
pub mod error;
pub mod grid;
pub mod harness;
pub mod player_model;
pub mod regions;
pub mod scalar;

pub use engine::{ActionKind, Actor, GameConfig, GameSnapshot, GameState};
pub use error::{Error, Result};
pub use grid::{CellPoint, Rect};
pub use regions::{RegionId, RegionSet};
pub use scalar::Scalar;

pub type Trace = player_model::Trace<f64>;
pub type TraceEntry = player_model::TraceEntry<f64>;
pub type PredictorModel = player_model::PredictorModel<f64>;
pub type StateVector = Vec<f64>;

pub type Trace32 = player_model::Trace<f32>;
pub type PredictorModel32 = player_model::PredictorModel<f32>;
pub type StateVector32 = Vec<f32>;
