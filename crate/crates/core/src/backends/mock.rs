//! Minimal chat-completion server for offline tests.
//!
//! Requests are matched against routes by substring on the concatenated
//! message contents. Each route plays its scripted replies in order and then
//! repeats the last one. Unmatched requests get the fallback, or a 404.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{GeaError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockReply {
    #[serde(default = "ok_status")]
    pub status: u16,
    /// Wrapped into a completion envelope when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    /// Sent verbatim when `content` is unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default)]
    pub delay_ms: u64,
}

fn ok_status() -> u16 {
    200
}

impl MockReply {
    pub fn completion(content: impl Into<String>) -> Self {
        MockReply {
            status: 200,
            content: Some(content.into()),
            body: None,
            delay_ms: 0,
        }
    }

    pub fn status(status: u16, body: impl Into<String>) -> Self {
        MockReply {
            status,
            content: None,
            body: Some(body.into()),
            delay_ms: 0,
        }
    }

    pub fn delayed(mut self, ms: u64) -> Self {
        self.delay_ms = ms;
        self
    }

    fn render(&self) -> String {
        match &self.content {
            Some(c) => json!({
                "id": "mock",
                "object": "chat.completion",
                "choices": [{"index": 0, "message": {"role": "assistant", "content": c}, "finish_reason": "stop"}],
            })
            .to_string(),
            None => self.body.clone().unwrap_or_default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRoute {
    /// Every substring must occur in the prompt text.
    pub contains: Vec<String>,
    pub replies: Vec<MockReply>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockFixture {
    #[serde(default)]
    pub routes: Vec<MockRoute>,
    #[serde(default)]
    pub fallback: Option<MockReply>,
}

impl MockFixture {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GeaError::io(path, e))?;
        toml::from_str(&text).map_err(|e| GeaError::config(format!("{}: {e}", path.display())))
    }
}

struct Shared {
    fixture: MockFixture,
    cursors: Mutex<HashMap<usize, usize>>,
    log: Mutex<Vec<String>>,
}

impl Shared {
    fn pick(&self, prompt: &str) -> MockReply {
        let hit = self
            .fixture
            .routes
            .iter()
            .enumerate()
            .find(|(_, r)| r.contains.iter().all(|c| prompt.contains(c.as_str())));
        match hit {
            Some((i, route)) if !route.replies.is_empty() => {
                let mut cursors = self.cursors.lock().expect("cursor lock");
                let n = cursors.entry(i).or_insert(0);
                let reply = route.replies[(*n).min(route.replies.len() - 1)].clone();
                *n += 1;
                reply
            }
            _ => self
                .fixture
                .fallback
                .clone()
                .unwrap_or_else(|| MockReply::status(404, "no mock route matched")),
        }
    }
}

pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(fixture: MockFixture) -> Result<Self> {
        Self::bind("127.0.0.1:0", fixture)
    }

    pub fn bind(addr: &str, fixture: MockFixture) -> Result<Self> {
        let listener = TcpListener::bind(addr).map_err(|e| GeaError::io(addr, e))?;
        let addr = listener.local_addr().map_err(|e| GeaError::io("mock listener", e))?;
        let shared = Arc::new(Shared {
            fixture,
            cursors: Mutex::new(HashMap::new()),
            log: Mutex::new(Vec::new()),
        });
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let (shared, stop) = (shared.clone(), stop.clone());
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = stream {
                        let shared = shared.clone();
                        std::thread::spawn(move || {
                            let _ = serve(stream, &shared);
                        });
                    }
                }
            })
        };
        Ok(MockServer {
            addr,
            shared,
            stop,
            handle: Some(handle),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL suitable for `ChatEndpointConfig::endpoint`.
    pub fn url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    /// Prompt text of every request received so far, in arrival order.
    pub fn requests(&self) -> Vec<String> {
        self.shared.log.lock().expect("log lock").clone()
    }

    /// Blocks the calling thread until the process ends.
    pub fn wait(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn prompt_text(body: &str) -> String {
    let parsed: Option<serde_json::Value> = serde_json::from_str(body).ok();
    let messages = parsed
        .as_ref()
        .and_then(|v| v.get("messages"))
        .and_then(|m| m.as_array());
    match messages {
        Some(ms) => ms
            .iter()
            .filter_map(|m| m.get("content").and_then(|c| c.as_str()))
            .collect::<Vec<_>>()
            .join("\n"),
        None => body.to_string(),
    }
}

fn serve(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim().is_empty() {
        return Ok(());
    }
    let mut length = 0usize;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 || header.trim().is_empty() {
            break;
        }
        if let Some((k, v)) = header.split_once(':') {
            if k.trim().eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    let prompt = prompt_text(&String::from_utf8_lossy(&body));
    let reply = shared.pick(&prompt);
    shared.log.lock().expect("log lock").push(prompt);
    if reply.delay_ms > 0 {
        std::thread::sleep(Duration::from_millis(reply.delay_ms));
    }
    let payload = reply.render();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} MOCK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        payload.len(),
        payload
    )?;
    stream.flush()
}
