//! Wire messages. Every frame is one JSON object carrying
//! `protocol_version`, `session_id` and a `type` tag; see
//! `protocol/schema.json` for the full schema.

use comrade_core::engine::{Enemy, GameConfig, InProgressAction, Structure};
use comrade_core::harness::{CompanionMode, EpisodeReport};
use comrade_core::regions::RegionRecord;
use comrade_core::{ActionKind, GameState, Rect};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<M> {
    pub protocol_version: u32,
    #[serde(default)]
    pub session_id: Option<String>,
    #[serde(flatten)]
    pub message: M,
}

impl<M> Envelope<M> {
    pub fn new(session_id: Option<String>, message: M) -> Self {
        Self { protocol_version: PROTOCOL_VERSION, session_id, message }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// Opens a session, or resumes the one named in the envelope.
    Hello {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        mode: Option<CompanionMode>,
        /// Ticks advance only on `step` instead of the wall clock.
        #[serde(default)]
        stepped: bool,
    },
    PlayerAction {
        kind: ActionKind,
        x: u32,
        y: u32,
    },
    SetConfig {
        #[serde(default)]
        speed: Option<u32>,
        #[serde(default)]
        p_help: Option<f64>,
        #[serde(default)]
        p_parallel: Option<f64>,
        #[serde(default)]
        p_experiment: Option<f64>,
    },
    Pause,
    Resume,
    Step {
        ticks: u64,
    },
    DumpRegions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapInfo {
    pub width: u32,
    pub height: u32,
    pub lanes: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entities {
    pub structures: Vec<Structure>,
    pub enemies: Vec<Enemy>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDelta {
    pub tick: u64,
    pub resources: u64,
    pub base_health: u32,
    pub leaks: u32,
    pub kills: u32,
    pub over: bool,
    pub speed: u32,
    pub entities: Entities,
    pub in_progress: Vec<InProgressAction>,
    pub state_hash: String,
}

impl StateDelta {
    pub fn of(s: &GameState) -> Self {
        Self {
            tick: s.tick,
            resources: s.resources,
            base_health: s.base_health,
            leaks: s.leaks,
            kills: s.kills,
            over: s.over,
            speed: s.speed,
            entities: Entities { structures: s.structures.clone(), enemies: s.enemies.clone() },
            in_progress: s.in_progress.clone(),
            state_hash: format_hash(s.state_hash()),
        }
    }
}

pub fn format_hash(h: u64) -> String {
    format!("{h:016x}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Welcome {
        config: GameConfig,
        map: MapInfo,
        mode: CompanionMode,
        stepped: bool,
        resumed: bool,
        tick: u64,
        state_hash: String,
    },
    StateDelta(StateDelta),
    CompanionAction {
        tick: u64,
        kind: ActionKind,
        region_rect: Rect,
        branch: String,
    },
    GameOver {
        report: EpisodeReport,
    },
    Regions {
        regions: Vec<RegionRecord>,
    },
    Error {
        code: ErrorCode,
        msg: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    VersionMismatch,
    NoSession,
    UnknownSession,
    SessionInUse,
    Impossible,
    Busy,
    Rejected,
    GameOver,
    NotStepped,
    BadConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_envelope_layout() {
        let env = Envelope::new(None, ClientMessage::PlayerAction { kind: ActionKind::BuildTower, x: 3, y: 5 });
        let s = serde_json::to_string(&env).unwrap();
        assert_eq!(
            s,
            r#"{"protocol_version":1,"session_id":null,"type":"player_action","kind":"BuildTower","x":3,"y":5}"#
        );
        let back: Envelope<ClientMessage> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, env);
    }

    #[test]
    fn hello_defaults() {
        let env: Envelope<ClientMessage> = serde_json::from_str(r#"{"protocol_version":1,"type":"hello"}"#).unwrap();
        assert_eq!(env.message, ClientMessage::Hello { seed: None, mode: None, stepped: false });
        assert_eq!(env.session_id, None);
    }

    #[test]
    fn error_envelope_layout() {
        let env =
            Envelope::new(Some("ab".into()), ServerMessage::Error { code: ErrorCode::Impossible, msg: "no".into() });
        assert_eq!(
            serde_json::to_string(&env).unwrap(),
            r#"{"protocol_version":1,"session_id":"ab","type":"error","code":"impossible","msg":"no"}"#
        );
    }

    #[test]
    fn state_delta_round_trips() {
        let s = GameState::new(GameConfig::default(), 1).unwrap().stepped(30);
        let env = Envelope::new(Some("x".into()), ServerMessage::StateDelta(StateDelta::of(&s)));
        let text = serde_json::to_string(&env).unwrap();
        assert!(text.contains(r#""type":"state_delta""#));
        let back: Envelope<ServerMessage> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, env);
    }
}
