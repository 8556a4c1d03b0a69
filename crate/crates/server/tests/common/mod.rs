#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::time::Duration;

use comrade_core::harness::{CompanionMode, Scenario};
use comrade_server::protocol::{Envelope, ServerMessage};
use comrade_server::{serve, ServerConfig};
use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

pub async fn start(scenario: Scenario, data_dir: &Path) -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let cfg = ServerConfig { scenario, mode: CompanionMode::Complementary, data_dir: data_dir.to_path_buf() };
    tokio::spawn(serve(listener, cfg));
    addr
}

pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

pub enum Frame {
    Msg(Envelope<ServerMessage>),
    Closed,
}

impl Client {
    pub async fn connect(addr: SocketAddr) -> Self {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}")).await.unwrap();
        Self { ws }
    }

    pub async fn send_raw(&mut self, text: &str) {
        self.ws.send(Message::text(text.to_owned())).await.unwrap();
    }

    /// Sends `body` wrapped in a version-1 envelope.
    pub async fn send(&mut self, session: Option<&str>, mut body: Value) {
        body["protocol_version"] = json!(1);
        body["session_id"] = json!(session);
        self.send_raw(&body.to_string()).await;
    }

    pub async fn frame(&mut self) -> Frame {
        loop {
            let next = tokio::time::timeout(Duration::from_secs(60), self.ws.next()).await.expect("server silent");
            match next {
                Some(Ok(Message::Text(t))) => return Frame::Msg(serde_json::from_str(t.as_str()).unwrap()),
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return Frame::Closed,
                Some(Ok(_)) => continue,
            }
        }
    }

    pub async fn recv(&mut self) -> Envelope<ServerMessage> {
        match self.frame().await {
            Frame::Msg(m) => m,
            Frame::Closed => panic!("connection closed"),
        }
    }

    /// Skips messages until `pick` accepts one.
    pub async fn until<T>(&mut self, mut pick: impl FnMut(&ServerMessage) -> Option<T>) -> T {
        loop {
            let env = self.recv().await;
            if let Some(t) = pick(&env.message) {
                return t;
            }
        }
    }

    /// Opens a session and returns its id and the welcome message.
    pub async fn hello(&mut self, session: Option<&str>, body: Value) -> (String, ServerMessage) {
        let mut body = body;
        body["type"] = json!("hello");
        self.send(session, body).await;
        let env = self.recv().await;
        assert!(matches!(env.message, ServerMessage::Welcome { .. }), "expected welcome, got {:?}", env.message);
        (env.session_id.expect("welcome carries the session id"), env.message)
    }

    pub async fn close(mut self) {
        let _ = self.ws.close(None).await;
        while let Some(Ok(_)) = self.ws.next().await {}
    }
}
