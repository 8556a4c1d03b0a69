//! Live play over WebSocket.
//!
//! One connection owns one session. A reader task parses frames, a writer
//! task sends them, and the session owner in between holds the only copy of
//! the game. In live sessions ticks follow the wall clock and companion
//! decisions run on the blocking pool, so rollouts never stall the tick
//! cadence; a finished decision is revalidated and applied on the next
//! tick. Stepped sessions advance only on `step` requests and decide
//! inline, which makes them reproduce headless runs exactly.
//!
//! On disconnect the session is written to `<data_dir>/<id>.json`; a later
//! `hello` naming that id resumes it.

pub mod protocol;
mod session;

use std::collections::HashSet;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use comrade_core::harness::{CompanionMode, Scenario};
use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message;

use session::{Inbound, Outbound};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub scenario: Scenario,
    /// Companion mode for sessions whose hello does not pick one.
    pub mode: CompanionMode,
    pub data_dir: PathBuf,
}

pub(crate) struct Shared {
    scenario: Arc<Scenario>,
    mode: CompanionMode,
    data_dir: PathBuf,
    active: Mutex<HashSet<String>>,
}

impl Shared {
    fn claim(&self, id: &str) -> bool {
        self.active.lock().expect("registry lock").insert(id.to_owned())
    }

    fn release(&self, id: &str) {
        self.active.lock().expect("registry lock").remove(id);
    }

    fn fresh_id(&self) -> String {
        loop {
            let id = format!("{:016x}", rand::random::<u64>());
            if !self.snapshot_path(&id).exists() && self.claim(&id) {
                return id;
            }
        }
    }

    fn snapshot_path(&self, id: &str) -> PathBuf {
        // Ids are ours (hex) or client-supplied; keep the latter inside data_dir.
        let safe: String = id.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '-' || *c == '_').collect();
        self.data_dir.join(format!("{safe}.json"))
    }
}

/// Accepts connections on `listener` until the task is dropped.
pub async fn serve(listener: TcpListener, config: ServerConfig) -> std::io::Result<()> {
    config.scenario.validate().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    tokio::fs::create_dir_all(&config.data_dir).await?;
    let shared = Arc::new(Shared {
        scenario: Arc::new(config.scenario),
        mode: config.mode,
        data_dir: config.data_dir,
        active: Mutex::new(HashSet::new()),
    });
    loop {
        let (stream, peer) = listener.accept().await?;
        tokio::spawn(connection(Arc::clone(&shared), stream, peer));
    }
}

pub async fn bind_and_serve(addr: SocketAddr, config: ServerConfig) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    log::info!("listening on ws://{}", listener.local_addr()?);
    serve(listener, config).await
}

async fn connection(shared: Arc<Shared>, stream: TcpStream, peer: SocketAddr) {
    let ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            log::warn!("{peer}: handshake failed: {e}");
            return;
        }
    };
    let (mut sink, mut source) = ws.split();
    let (in_tx, in_rx) = mpsc::channel::<Inbound>(64);
    let (out_tx, mut out_rx) = mpsc::channel::<Outbound>(256);

    let reader = tokio::spawn(async move {
        while let Some(frame) = source.next().await {
            let inbound = match frame {
                Ok(Message::Text(t)) => session::classify(t.as_str()),
                Ok(Message::Binary(b)) => match std::str::from_utf8(&b) {
                    Ok(t) => session::classify(t),
                    Err(_) => Inbound::Malformed("binary frame is not UTF-8".into()),
                },
                Ok(Message::Close(_)) | Err(_) => break,
                Ok(_) => continue,
            };
            if in_tx.send(inbound).await.is_err() {
                break;
            }
        }
    });
    let writer = tokio::spawn(async move {
        while let Some(out) = out_rx.recv().await {
            match out {
                Outbound::Text(t) => {
                    if sink.send(Message::text(t)).await.is_err() {
                        break;
                    }
                }
                Outbound::Close => {
                    let _ = sink.send(Message::Close(None)).await;
                    break;
                }
            }
        }
        let _ = sink.close().await;
    });
    session::run(shared, in_rx, out_tx).await;
    reader.abort();
    let _ = writer.await;
    log::debug!("{peer}: connection finished");
}
