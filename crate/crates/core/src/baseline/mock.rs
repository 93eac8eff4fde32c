//! Offline mock chat-completion server for tests and demos.
//!
//! Listens on a loopback port, speaks just enough HTTP/1.1 for the client,
//! records every request (headers and body) and answers according to a
//! configured behavior. No external dependencies and no network access.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

/// How the mock answers requests.
#[derive(Debug, Clone)]
pub enum MockBehavior {
    /// Always answer 200 with this content.
    Canned(String),
    /// Parse the document out of the prompt and answer with its first
    /// sentence.
    EchoFirstSentence,
    /// Answer `status` for the first `failures` requests, then succeed with
    /// `text`.
    FailThenRespond {
        failures: u32,
        status: u16,
        text: String,
    },
    /// Answer `status` forever.
    AlwaysFail { status: u16 },
    /// Sleep before answering 200; pairs with a short client timeout.
    DelayThenRespond { delay_ms: u64, text: String },
}

/// One recorded request.
#[derive(Debug, Clone)]
pub struct RecordedRequest {
    /// Header name/value pairs, names lowercased.
    pub headers: Vec<(String, String)>,
    pub body: String,
}

struct State {
    behavior: MockBehavior,
    requests: Mutex<Vec<RecordedRequest>>,
    served: AtomicU32,
    stop: AtomicBool,
}

/// A running mock server; shuts down on drop.
pub struct MockLlmServer {
    addr: SocketAddr,
    state: Arc<State>,
    handle: Option<JoinHandle<()>>,
}

impl MockLlmServer {
    pub fn start(behavior: MockBehavior) -> std::io::Result<MockLlmServer> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let state = Arc::new(State {
            behavior,
            requests: Mutex::new(Vec::new()),
            served: AtomicU32::new(0),
            stop: AtomicBool::new(false),
        });
        let accept_state = Arc::clone(&state);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if accept_state.stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let conn_state = Arc::clone(&accept_state);
                std::thread::spawn(move || {
                    let _ = handle_connection(stream, &conn_state);
                });
            }
        });
        Ok(MockLlmServer {
            addr,
            state,
            handle: Some(handle),
        })
    }

    /// Full endpoint URL for client configuration.
    pub fn url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    /// Number of requests received so far.
    pub fn request_count(&self) -> usize {
        self.state.requests.lock().unwrap().len()
    }

    /// Copies of every recorded request.
    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.state.requests.lock().unwrap().clone()
    }
}

impl Drop for MockLlmServer {
    fn drop(&mut self) {
        self.state.stop.store(true, Ordering::SeqCst);
        // Nudge the accept loop so it observes the stop flag.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn handle_connection(stream: TcpStream, state: &State) -> std::io::Result<()> {
    let peer = stream.peer_addr()?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    if request_line.trim().is_empty() {
        return Ok(()); // shutdown nudge
    }
    let _ = peer;

    let mut headers = Vec::new();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end().to_string();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            let name = name.trim().to_lowercase();
            let value = value.trim().to_string();
            if name == "content-length" {
                content_length = value.parse().unwrap_or(0);
            }
            headers.push((name, value));
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let body = String::from_utf8_lossy(&body).into_owned();

    state.requests.lock().unwrap().push(RecordedRequest {
        headers,
        body: body.clone(),
    });
    let served_before = state.served.fetch_add(1, Ordering::SeqCst);

    let mut stream = reader.into_inner();
    match &state.behavior {
        MockBehavior::Canned(text) => respond_ok(&mut stream, text),
        MockBehavior::EchoFirstSentence => {
            let text = first_sentence_of_prompt(&body).unwrap_or_default();
            if text.is_empty() {
                respond_status(&mut stream, 400)
            } else {
                respond_ok(&mut stream, &text)
            }
        }
        MockBehavior::FailThenRespond {
            failures,
            status,
            text,
        } => {
            if served_before < *failures {
                respond_status(&mut stream, *status)
            } else {
                respond_ok(&mut stream, text)
            }
        }
        MockBehavior::AlwaysFail { status } => respond_status(&mut stream, *status),
        MockBehavior::DelayThenRespond { delay_ms, text } => {
            std::thread::sleep(Duration::from_millis(*delay_ms));
            respond_ok(&mut stream, text)
        }
    }
}

/// Pull the document out of the request body and return its first sentence.
fn first_sentence_of_prompt(body: &str) -> Option<String> {
    let v: serde_json::Value = serde_json::from_str(body).ok()?;
    let content = v
        .get("messages")?
        .as_array()?
        .last()?
        .get("content")?
        .as_str()?;
    let document = content.split("Document:\n").nth(1)?;
    let end = document.find('.').map(|i| i + 1).unwrap_or(document.len());
    Some(document[..end].trim().to_string())
}

fn respond_ok(stream: &mut TcpStream, content: &str) -> std::io::Result<()> {
    let body = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": 42, "completion_tokens": 7},
    })
    .to_string();
    write_response(stream, 200, "OK", &body)
}

fn respond_status(stream: &mut TcpStream, status: u16) -> std::io::Result<()> {
    let reason = match status {
        400 => "Bad Request",
        401 => "Unauthorized",
        403 => "Forbidden",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Error",
    };
    let body = format!("{{\"error\":{{\"message\":\"induced {status}\"}}}}");
    write_response(stream, status, reason, &body)
}

fn write_response(stream: &mut TcpStream, status: u16, reason: &str, body: &str) -> std::io::Result<()> {
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}
