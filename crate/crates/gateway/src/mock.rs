//! In-process chat-completions server replaying a scripted response list.

use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use tiny_http::{Header, Response, Server};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedResponse {
    pub status: u16,
    pub body: String,
}

impl ScriptedResponse {
    pub fn ok(text: &str) -> Self {
        ScriptedResponse { status: 200, body: completion_body(text) }
    }

    pub fn status(status: u16) -> Self {
        ScriptedResponse { status, body: format!("{{\"error\":\"scripted {status}\"}}") }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRequest {
    pub method: String,
    pub path: String,
    pub authorization: Option<String>,
    pub body: String,
}

/// A minimal successful chat-completions response carrying `text`.
pub fn completion_body(text: &str) -> String {
    serde_json::json!({
        "id": "mock",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0}
    })
    .to_string()
}

/// Serves the script in order; once exhausted, the last entry repeats.
pub struct MockServer {
    server: Arc<Server>,
    requests: Arc<Mutex<Vec<RecordedRequest>>>,
    handle: Option<JoinHandle<()>>,
    port: u16,
}

impl MockServer {
    pub fn start(script: Vec<ScriptedResponse>) -> std::io::Result<Self> {
        let server = Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| std::io::Error::other("not bound to an IP address"))?;
        let server = Arc::new(server);
        let requests = Arc::new(Mutex::new(Vec::new()));
        let (srv, log) = (server.clone(), requests.clone());
        let handle = std::thread::spawn(move || {
            for (next, mut req) in srv.incoming_requests().enumerate() {
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                let authorization = req
                    .headers()
                    .iter()
                    .find(|h| h.field.equiv("Authorization"))
                    .map(|h| h.value.to_string());
                log.lock().expect("request log poisoned").push(RecordedRequest {
                    method: req.method().to_string(),
                    path: req.url().to_string(),
                    authorization,
                    body,
                });
                let reply = script
                    .get(next.min(script.len().saturating_sub(1)))
                    .cloned()
                    .unwrap_or_else(|| ScriptedResponse::status(404));
                let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
                let _ = req.respond(Response::from_string(reply.body).with_status_code(reply.status).with_header(header));
            }
        });
        Ok(MockServer { server, requests, handle: Some(handle), port })
    }

    /// Always answers 200 with `text`.
    pub fn fixed(text: &str) -> std::io::Result<Self> {
        Self::start(vec![ScriptedResponse::ok(text)])
    }

    /// Base URL to put in a gateway config.
    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}/v1", self.port)
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().expect("request log poisoned").clone()
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().expect("request log poisoned").len()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
