//! Keeps protocol/schema.json in step with the message types.

use std::collections::BTreeSet;

use comrade_core::harness::{report, CompanionMode, Episode, Scenario};
use comrade_core::{ActionKind, GameState, Rect};
use comrade_server::protocol::{ClientMessage, Envelope, ErrorCode, MapInfo, ServerMessage, StateDelta};
use serde_json::Value;

fn schema() -> Value {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/protocol/schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn def_name(r: &Value) -> String {
    r["$ref"].as_str().unwrap().trim_start_matches("#/$defs/").to_owned()
}

/// For each message def listed under `side`, its type tag and required fields.
fn listed(schema: &Value, side: &str) -> Vec<(String, Vec<String>)> {
    let defs = &schema["$defs"];
    defs[side]["oneOf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let d = &defs[def_name(r)];
            let tag = d["properties"]["type"]["const"].as_str().unwrap().to_owned();
            let required =
                d["required"].as_array().map_or(vec![], |a| a.iter().map(|v| v.as_str().unwrap().to_owned()).collect());
            (tag, required)
        })
        .collect()
}

fn check(side: &str, samples: Vec<Value>) {
    let schema = schema();
    let listed = listed(&schema, side);
    let tags: BTreeSet<_> = listed.iter().map(|(t, _)| t.clone()).collect();
    let seen: BTreeSet<_> = samples.iter().map(|s| s["type"].as_str().unwrap().to_owned()).collect();
    assert_eq!(tags, seen, "{side} message types differ from the schema");
    for s in &samples {
        assert_eq!(s["protocol_version"], 1);
        let (_, required) = listed.iter().find(|(t, _)| s["type"] == t.as_str()).unwrap();
        for field in required {
            assert!(s.get(field).is_some(), "{} lacks {field}", s["type"]);
        }
    }
}

fn wire<M: serde::Serialize>(m: M) -> Value {
    serde_json::to_value(Envelope::new(Some("s".into()), m)).unwrap()
}

#[test]
fn client_messages_match_schema() {
    check(
        "client",
        vec![
            wire(ClientMessage::Hello { seed: Some(1), mode: Some(CompanionMode::Mimic), stepped: true }),
            wire(ClientMessage::PlayerAction { kind: ActionKind::Repair, x: 1, y: 2 }),
            wire(ClientMessage::SetConfig { speed: Some(2), p_help: None, p_parallel: Some(0.2), p_experiment: None }),
            wire(ClientMessage::Pause),
            wire(ClientMessage::Resume),
            wire(ClientMessage::Step { ticks: 3 }),
            wire(ClientMessage::DumpRegions),
        ],
    );
}

#[test]
fn server_messages_match_schema() {
    let ep = Episode::new(Scenario::default().into(), CompanionMode::Complementary, 1).unwrap();
    let s: &GameState = &ep.state;
    check(
        "server",
        vec![
            wire(ServerMessage::Welcome {
                config: s.config.as_ref().clone(),
                map: MapInfo { width: 1, height: 1, lanes: vec![0] },
                mode: CompanionMode::None,
                stepped: false,
                resumed: false,
                tick: 0,
                state_hash: "0".repeat(16),
            }),
            wire(ServerMessage::StateDelta(StateDelta::of(s))),
            wire(ServerMessage::CompanionAction {
                tick: 0,
                kind: ActionKind::BuildWall,
                region_rect: Rect::new(0, 0, 1, 1),
                branch: "help".into(),
            }),
            wire(ServerMessage::GameOver { report: report(&ep, "human") }),
            wire(ServerMessage::Regions { regions: ep.regions.dump() }),
            wire(ServerMessage::Error { code: ErrorCode::Busy, msg: String::new() }),
        ],
    );
}

#[test]
fn error_codes_match_schema() {
    use ErrorCode::*;
    let all = [
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
    ];
    let ours: BTreeSet<String> =
        all.iter().map(|c| serde_json::to_value(c).unwrap().as_str().unwrap().to_owned()).collect();
    let listed: BTreeSet<String> = schema()["$defs"]["error"]["properties"]["code"]["enum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_owned())
        .collect();
    assert_eq!(ours, listed);
}
