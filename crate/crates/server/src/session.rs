use std::sync::Arc;
use std::time::Duration;

use comrade_core::companion::Choice;
use comrade_core::harness::{report, CompanionRng, Decision, Episode};
use comrade_core::{Error, Rect};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tokio::time::{interval, Interval, MissedTickBehavior};

use crate::protocol::{ClientMessage, Envelope, ErrorCode, MapInfo, ServerMessage, StateDelta, PROTOCOL_VERSION};
use crate::Shared;

/// Frames for the writer task.
#[derive(Debug)]
pub(crate) enum Outbound {
    Text(String),
    Close,
}

/// Frames from the reader task, already split into version errors,
/// parse errors and messages.
#[derive(Debug)]
pub(crate) enum Inbound {
    Message(Envelope<ClientMessage>),
    Malformed(String),
    BadVersion(Option<u64>),
}

pub(crate) fn classify(text: &str) -> Inbound {
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Inbound::Malformed(e.to_string()),
    };
    let version = value.get("protocol_version").and_then(|v| v.as_u64());
    if version != Some(PROTOCOL_VERSION as u64) {
        return Inbound::BadVersion(version);
    }
    match serde_json::from_value(value) {
        Ok(env) => Inbound::Message(env),
        Err(e) => Inbound::Malformed(e.to_string()),
    }
}

type Job = JoinHandle<(Decision, CompanionRng)>;

struct Live {
    id: String,
    ep: Episode,
    stepped: bool,
    paused: bool,
    announced_over: bool,
    job: Option<Job>,
    ticker: Interval,
}

fn ticker_for(ep: &Episode) -> Interval {
    let mut t = interval(ep.state.tick_period().max(Duration::from_micros(100)));
    t.set_missed_tick_behavior(MissedTickBehavior::Skip);
    t
}

/// Owns one connection's session until the client goes away.
pub(crate) async fn run(shared: Arc<Shared>, mut inbox: mpsc::Receiver<Inbound>, out: mpsc::Sender<Outbound>) {
    let send = |sid: Option<&str>, msg: ServerMessage| {
        let text = serde_json::to_string(&Envelope::new(sid.map(str::to_owned), msg)).expect("message serializes");
        let out = out.clone();
        async move {
            let _ = out.send(Outbound::Text(text)).await;
        }
    };
    let error = |code, msg: String| ServerMessage::Error { code, msg };

    // Handshake.
    let mut live = loop {
        let Some(frame) = inbox.recv().await else { return };
        let env = match frame {
            Inbound::Message(env) => env,
            Inbound::Malformed(m) => {
                send(None, error(ErrorCode::Malformed, m)).await;
                continue;
            }
            Inbound::BadVersion(v) => {
                send(None, error(ErrorCode::VersionMismatch, version_msg(v))).await;
                let _ = out.send(Outbound::Close).await;
                return;
            }
        };
        let ClientMessage::Hello { seed, mode, stepped } = env.message else {
            send(None, error(ErrorCode::NoSession, "send hello first".into())).await;
            continue;
        };
        match open(&shared, env.session_id, seed, mode, stepped) {
            Ok((live, resumed)) => {
                let s = &live.ep.state;
                let welcome = ServerMessage::Welcome {
                    config: s.config.as_ref().clone(),
                    map: MapInfo {
                        width: s.config.map_width,
                        height: s.config.map_height,
                        lanes: s.config.lanes.clone(),
                    },
                    mode: live.ep.mode,
                    stepped: live.stepped,
                    resumed,
                    tick: s.tick,
                    state_hash: crate::protocol::format_hash(s.state_hash()),
                };
                send(Some(&live.id), welcome).await;
                break live;
            }
            Err((code, msg)) => {
                send(None, error(code, msg)).await;
                if code == ErrorCode::SessionInUse {
                    let _ = out.send(Outbound::Close).await;
                    return;
                }
            }
        }
    };
    log::info!("session {} started (stepped={})", live.id, live.stepped);
    let sid = live.id.clone();
    let sid = Some(sid.as_str());

    loop {
        let job_done = async {
            match live.job.as_mut() {
                Some(j) => j.await,
                None => std::future::pending().await,
            }
        };
        let ticking = !live.stepped && !live.paused && !live.ep.state.over;
        tokio::select! {
            frame = inbox.recv() => {
                let Some(frame) = frame else { break };
                match frame {
                    Inbound::Malformed(m) => send(sid, error(ErrorCode::Malformed, m)).await,
                    Inbound::BadVersion(v) => {
                        send(sid, error(ErrorCode::VersionMismatch, version_msg(v))).await;
                        let _ = out.send(Outbound::Close).await;
                        break;
                    }
                    Inbound::Message(env) => {
                        for msg in handle(&mut live, env.message) {
                            send(sid, msg).await;
                        }
                    }
                }
            }
            _ = live.ticker.tick(), if ticking => {
                let applied = live.ep.tick(false);
                if let Some(m) = applied.and_then(|d| announce(&live.ep, &d)) {
                    send(sid, m).await;
                }
                if live.job.is_none() {
                    if let Some(job) = live.ep.decision_job() {
                        live.job = Some(tokio::task::spawn_blocking(move || job.run()));
                    }
                }
                for msg in progress(&mut live) {
                    send(sid, msg).await;
                }
            }
            done = job_done => {
                live.job = None;
                match done {
                    Ok((d, rng)) => live.ep.accept(d, rng),
                    Err(e) => log::error!("decision task failed: {e}"),
                }
            }
        }
    }
    close(&shared, live).await;
}

fn version_msg(v: Option<u64>) -> String {
    match v {
        Some(v) => format!("protocol version {v} not supported; expected {PROTOCOL_VERSION}"),
        None => format!("missing protocol_version; expected {PROTOCOL_VERSION}"),
    }
}

type OpenError = (ErrorCode, String);

fn open(
    shared: &Shared,
    session_id: Option<String>,
    seed: Option<u64>,
    mode: Option<comrade_core::harness::CompanionMode>,
    stepped: bool,
) -> Result<(Live, bool), OpenError> {
    let (id, ep, resumed) = match session_id {
        Some(id) => {
            if !shared.claim(&id) {
                return Err((ErrorCode::SessionInUse, format!("session {id} is already connected")));
            }
            match std::fs::read(shared.snapshot_path(&id)).map_err(Error::from).and_then(|b| Episode::from_bytes(&b)) {
                Ok(ep) => (id, ep, true),
                Err(e) => {
                    shared.release(&id);
                    return Err((ErrorCode::UnknownSession, format!("cannot resume {id}: {e}")));
                }
            }
        }
        None => {
            let id = shared.fresh_id();
            let seed = seed.unwrap_or_else(rand::random);
            let ep = Episode::new(Arc::clone(&shared.scenario), mode.unwrap_or(shared.mode), seed)
                .map_err(|e| (ErrorCode::BadConfig, e.to_string()))?;
            (id, ep, false)
        }
    };
    let ticker = ticker_for(&ep);
    let live = Live { id, announced_over: ep.state.over, ep, stepped, paused: false, job: None, ticker };
    Ok((live, resumed))
}

async fn close(shared: &Shared, mut live: Live) {
    if let Some(job) = live.job.take() {
        if let Ok((d, rng)) = job.await {
            live.ep.accept(d, rng);
        }
    }
    match live.ep.to_bytes() {
        Ok(bytes) => {
            if let Err(e) = tokio::fs::write(shared.snapshot_path(&live.id), bytes).await {
                log::error!("session {}: snapshot not saved: {e}", live.id);
            }
        }
        Err(e) => log::error!("session {}: snapshot not saved: {e}", live.id),
    }
    log::info!("session {} closed at tick {}", live.id, live.ep.state.tick);
    shared.release(&live.id);
}

fn announce(ep: &Episode, d: &Decision) -> Option<ServerMessage> {
    let (kind, region) = d.chosen.pair()?;
    let region_rect = match d.chosen {
        Choice::Join { cell, .. } => ep.regions.bounds(region).unwrap_or(Rect::cell(cell)),
        _ => ep.regions.bounds(region).ok()?,
    };
    Some(ServerMessage::CompanionAction { tick: ep.state.tick, kind, region_rect, branch: d.label.clone() })
}

/// The delta after a state change, plus the game-over notice once.
fn progress(live: &mut Live) -> Vec<ServerMessage> {
    if live.announced_over {
        return Vec::new();
    }
    let mut out = vec![ServerMessage::StateDelta(StateDelta::of(&live.ep.state))];
    if live.ep.state.over {
        live.announced_over = true;
        out.push(ServerMessage::GameOver { report: report(&live.ep, "human") });
    }
    out
}

fn handle(live: &mut Live, msg: ClientMessage) -> Vec<ServerMessage> {
    let err = |code, msg: String| vec![ServerMessage::Error { code, msg }];
    match msg {
        ClientMessage::Hello { .. } => err(ErrorCode::Rejected, "session already open".into()),
        ClientMessage::PlayerAction { kind, x, y } => {
            if live.ep.state.over {
                return err(ErrorCode::GameOver, "game is over".into());
            }
            match live.ep.player_action(kind, comrade_core::CellPoint::new(x, y)) {
                Ok(()) => progress(live),
                Err(Error::RejectedAction { reason, .. }) => {
                    let code = match reason.as_str() {
                        "impossible" => ErrorCode::Impossible,
                        "busy" => ErrorCode::Busy,
                        _ => ErrorCode::Rejected,
                    };
                    err(code, format!("{kind:?} at ({x},{y}): {reason}"))
                }
                Err(e) => err(ErrorCode::Rejected, e.to_string()),
            }
        }
        ClientMessage::SetConfig { speed, p_help, p_parallel, p_experiment } => {
            let mut scenario = live.ep.scenario.as_ref().clone();
            let c = &mut scenario.companion;
            c.p_help = p_help.unwrap_or(c.p_help);
            c.p_parallel = p_parallel.unwrap_or(c.p_parallel);
            c.p_experiment = p_experiment.unwrap_or(c.p_experiment);
            if let Err(e) = scenario.validate() {
                return err(ErrorCode::BadConfig, e.to_string());
            }
            if let Some(s) = speed {
                if let Err(e) = live.ep.state.set_speed(s) {
                    return err(ErrorCode::BadConfig, e.to_string());
                }
                live.ticker = ticker_for(&live.ep);
            }
            live.ep.scenario = Arc::new(scenario);
            Vec::new()
        }
        ClientMessage::Pause => {
            live.paused = true;
            Vec::new()
        }
        ClientMessage::Resume => {
            live.paused = false;
            live.ticker.reset();
            Vec::new()
        }
        ClientMessage::Step { ticks } => {
            if !live.stepped {
                return err(ErrorCode::NotStepped, "step is only valid in stepped sessions".into());
            }
            let mut out = Vec::new();
            for _ in 0..ticks {
                if live.ep.state.over {
                    break;
                }
                if let Some(m) = live.ep.tick(true).and_then(|d| announce(&live.ep, &d)) {
                    out.push(m);
                }
            }
            out.extend(progress(live));
            out
        }
        ClientMessage::DumpRegions => vec![ServerMessage::Regions { regions: live.ep.regions.dump() }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_frames() {
        assert!(matches!(classify("{"), Inbound::Malformed(_)));
        assert!(matches!(classify(r#"{"type":"pause"}"#), Inbound::BadVersion(None)));
        assert!(matches!(classify(r#"{"protocol_version":2,"type":"pause"}"#), Inbound::BadVersion(Some(2))));
        assert!(matches!(classify(r#"{"protocol_version":1,"type":"fly"}"#), Inbound::Malformed(_)));
        assert!(matches!(
            classify(r#"{"protocol_version":1,"type":"pause"}"#),
            Inbound::Message(Envelope { message: ClientMessage::Pause, .. })
        ));
    }
}
