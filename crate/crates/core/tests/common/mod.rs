//! Test helpers: a minimal OpenAI-compatible HTTP server that records what
//! it was sent, and small fixture builders.

#![allow(dead_code)]

pub mod chrf;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use langforge::pipeline::PipelineConfig;
use langforge::teacher::mock::MockTeacher;
use langforge::teacher::{ChatRequest, RetryPolicy, TeacherClient, Transport, TransportFailure};
use langforge::translation::serial::{parse_records, render_records};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub type Handler = dyn Fn(&Value) -> (u16, String) + Send + Sync;

/// One request as the server saw it.
#[derive(Debug, Clone)]
pub struct Seen {
    pub body: Value,
    pub authorization: Option<String>,
}

pub struct MockServer {
    pub base_url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
    peak: Arc<AtomicUsize>,
}

impl MockServer {
    /// Serves every connection on its own thread, holding each request for
    /// `hold` before answering so overlapping requests are observable.
    pub fn start(hold: Duration, handler: impl Fn(&Value) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}/v1", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let peak = Arc::new(AtomicUsize::new(0));
        let in_flight = Arc::new(AtomicUsize::new(0));
        let handler: Arc<Handler> = Arc::new(handler);
        {
            let (seen, peak) = (seen.clone(), peak.clone());
            thread::spawn(move || {
                for stream in listener.incoming().flatten() {
                    let (seen, peak, in_flight, handler) =
                        (seen.clone(), peak.clone(), in_flight.clone(), handler.clone());
                    thread::spawn(move || {
                        let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                        peak.fetch_max(now, Ordering::SeqCst);
                        serve(stream, hold, &seen, handler.as_ref());
                        in_flight.fetch_sub(1, Ordering::SeqCst);
                    });
                }
            });
        }
        Self { base_url, seen, peak }
    }

    pub fn seen(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }

    pub fn requests(&self) -> usize {
        self.seen.lock().unwrap().len()
    }

    /// Largest number of requests being served at the same moment.
    pub fn peak_concurrency(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, hold: Duration, seen: &Mutex<Vec<Seen>>, handler: &Handler) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut content_length = 0;
    let mut authorization = None;
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    loop {
        line.clear();
        if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
            break;
        }
        if let Some((name, value)) = line.trim_end().split_once(':') {
            match name.to_ascii_lowercase().as_str() {
                "content-length" => content_length = value.trim().parse().unwrap(),
                "authorization" => authorization = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body).unwrap();
    let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    seen.lock().unwrap().push(Seen { body: body.clone(), authorization });
    thread::sleep(hold);
    let (status, payload) = handler(&body);
    let response = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let mut stream = stream;
    let _ = stream.write_all(response.as_bytes());
}

/// `choices[0].message` body with `content`.
pub fn completion(content: &str) -> String {
    String::from_utf8(langforge::teacher::mock::chat_completion_body(content, None)).unwrap()
}

pub fn user_text(body: &Value) -> String {
    body["messages"].as_array().and_then(|m| m.last()).and_then(|m| m["content"].as_str()).unwrap_or("").to_string()
}

pub fn system_text(body: &Value) -> String {
    body["messages"][0]["content"].as_str().unwrap_or("").to_string()
}

/// Writes a context corpus with `n` documents in `code` interleaved with
/// other-language documents, and returns its path.
pub fn write_context_corpus(dir: &Path, code: &str, n: usize) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let path = dir.join("context.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    for i in 0..n {
        let text = format!("Dokumen nomer {i} nyritakake bab desa, sawah lan pasar. ").repeat(1 + i % 4);
        writeln!(f, "{}", json!({"id": format!("doc-{i}"), "text": text, "language": format!("{code}_Latn")})).unwrap();
        writeln!(f, "{}", json!({"id": format!("other-{i}"), "text": "Teks liya.", "language": "ind_Latn"})).unwrap();
    }
    path
}

/// Markers in a source turn that make [`Injecting`] misbehave.
pub const BROKEN: &str = "BROKEN";
pub const SHRINK: &str = "SHRINK";
pub const BLOAT: &str = "BLOAT";
pub const DROP: &str = "DROP";

/// Writes an English conversation corpus. Row `i` carries the fault marker
/// chosen by `fault(i)`, if any. A French row follows every 97th row.
pub fn write_chat_corpus(dir: &Path, n: usize, fault: impl Fn(usize) -> Option<&'static str>) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let path = dir.join("chat.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    for i in 0..n {
        let tag = fault(i).unwrap_or("");
        let row = json!({
            "id": format!("conv-{i}"),
            "language": "en",
            "conversations": [
                {"from": "human", "value": format!("Please tell me something about number {i} {tag}")},
                {"from": "gpt", "value": format!("Number {i} is a fine number to think about.")}
            ]
        });
        writeln!(f, "{row}").unwrap();
        if i % 97 == 0 {
            let other = json!({"id": format!("fr-{i}"), "language": "fr",
                "conversations": [{"from": "human", "value": "Bonjour"}, {"from": "gpt", "value": "Salut"}]});
            writeln!(f, "{other}").unwrap();
        }
    }
    path
}

/// The built-in mock teacher, except that translation requests mentioning
/// a fault marker get an unparseable reply, a too-short or too-long
/// translation, or a network failure.
pub struct Injecting(pub MockTeacher);

impl Transport for Injecting {
    fn send(&self, request: &ChatRequest) -> Result<Vec<u8>, TransportFailure> {
        let system = request.messages[0].content.as_str();
        let user = request.messages.last().unwrap().content.as_str();
        if system.contains("list of dicts") {
            let rewrite = |f: &dyn Fn(&str) -> String| {
                let records = parse_records(user).unwrap();
                let out: Vec<Vec<(String, String)>> = records
                    .into_iter()
                    .map(|r| r.into_iter().map(|(k, v)| if k == "value" { (k, f(&v)) } else { (k, v) }).collect())
                    .collect();
                Ok(langforge::teacher::mock::chat_completion_body(&render_records(&out), None))
            };
            if user.contains(DROP) {
                return Err(TransportFailure::Network("connection reset".into()));
            }
            if user.contains(BROKEN) {
                return Ok(langforge::teacher::mock::chat_completion_body("Sorry, I cannot translate this.", None));
            }
            if user.contains(SHRINK) {
                return rewrite(&|_| "ok".to_string());
            }
            if user.contains(BLOAT) {
                return rewrite(&|v| vec![v; 30].join(" "));
            }
        }
        self.0.send(request)
    }
}

pub fn injecting_client() -> TeacherClient {
    TeacherClient::new(Arc::new(Injecting(MockTeacher::new()))).with_retry(RetryPolicy::immediate(1))
}

/// A run small enough for tests: 16 seeds x 2 x 2 topics, 2 x (2 + 2x2)
/// scenarios, up to 4 context documents.
pub fn small_config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        language_code: "jav".into(),
        macro_topics_per_seed: 2,
        topics_per_macro: 2,
        broad_scenarios: 2,
        detailed_per_broad: 2,
        max_context_documents: 4,
        max_in_flight: 4,
        out_dir: out.to_path_buf(),
        ..PipelineConfig::for_language("Javanese")
    }
}
