use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use echo_core::pipeline::{PromptBundle, Provider, ProviderError, Stage};
use echo_studio::provider::ExternalProvider;
use serde_json::{json, Value};

enum Reply {
    Status(u16, String),
    Stall(Duration),
}

/// A scripted HTTP stub answering each connection with the next scripted
/// reply and keeping the request bodies it saw.
struct Stub {
    url: String,
    seen: Arc<Mutex<Vec<(String, Value)>>>,
}

impl Stub {
    fn start(replies: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        thread::spawn(move || {
            for reply in replies {
                let (stream, _) = listener.accept().unwrap();
                let (auth, body) = read_request(&stream);
                log.lock().unwrap().push((auth, body));
                answer(stream, reply);
            }
        });
        Self { url, seen }
    }

    fn hits(&self) -> usize {
        self.seen.lock().unwrap().len()
    }
}

fn read_request(stream: &TcpStream) -> (String, Value) {
    let mut reader = BufReader::new(stream);
    let (mut len, mut auth) = (0, String::new());
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        let (k, v) = line.split_once(':').unwrap_or((line, ""));
        match k.to_ascii_lowercase().as_str() {
            "content-length" => len = v.trim().parse().unwrap(),
            "authorization" => auth = v.trim().to_string(),
            _ => {}
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
    (auth, serde_json::from_slice(&body).unwrap())
}

fn answer(mut stream: TcpStream, reply: Reply) {
    match reply {
        Reply::Stall(d) => {
            thread::spawn(move || {
                thread::sleep(d);
                drop(stream);
            });
        }
        Reply::Status(code, body) => {
            let head = format!(
                "HTTP/1.1 {code} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
                body.len()
            );
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(body.as_bytes());
        }
    }
}

fn completion(content: &str) -> String {
    json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }).to_string()
}

fn bundle(image: Option<String>) -> PromptBundle {
    PromptBundle {
        stage: Stage::SuggestionGen,
        system_text: "system".into(),
        user_text: "user".into(),
        image_payload: image,
        subject: "s".into(),
    }
}

fn provider(stub: &Stub, timeout_ms: u64) -> ExternalProvider {
    ExternalProvider::new(
        &stub.url,
        "test-model",
        Some("k-123".into()),
        Duration::from_millis(timeout_ms),
    )
    .with_retry_backoff(Duration::from_millis(10))
}

#[test]
fn success_returns_message_content() {
    let stub = Stub::start(vec![Reply::Status(200, completion("[\"a\", \"b\"]"))]);
    let out = provider(&stub, 2000).complete(&bundle(None)).unwrap();
    assert_eq!(out, "[\"a\", \"b\"]");
    let seen = stub.seen.lock().unwrap();
    let (auth, body) = &seen[0];
    assert_eq!(auth, "Bearer k-123");
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0);
    assert_eq!(body["messages"][0]["content"], "system");
    assert_eq!(body["messages"][1]["content"][0]["text"], "user");
}

#[test]
fn unauthorized_is_not_retried() {
    let stub = Stub::start(vec![
        Reply::Status(401, r#"{"error": "bad key"}"#.into()),
        Reply::Status(200, completion("never")),
    ]);
    let err = provider(&stub, 2000).complete(&bundle(None)).unwrap_err();
    assert!(matches!(err, ProviderError::Auth { .. }), "{err:?}");
    thread::sleep(Duration::from_millis(50));
    assert_eq!(stub.hits(), 1);
}

#[test]
fn timeout_is_retried_once() {
    let stub = Stub::start(vec![
        Reply::Stall(Duration::from_millis(600)),
        Reply::Status(200, completion("late")),
    ]);
    let out = provider(&stub, 250).complete(&bundle(None)).unwrap();
    assert_eq!(out, "late");
    assert_eq!(stub.hits(), 2);
}

#[test]
fn two_server_errors_surface() {
    let stub = Stub::start(vec![
        Reply::Status(503, "busy".into()),
        Reply::Status(500, "down".into()),
    ]);
    let err = provider(&stub, 2000).complete(&bundle(None)).unwrap_err();
    assert_eq!(
        err,
        ProviderError::Http {
            status: 500,
            body: "down".into()
        }
    );
    assert_eq!(stub.hits(), 2);
}

#[test]
fn ppm_top_views_are_sent_as_png() {
    use base64::Engine as _;
    let stub = Stub::start(vec![Reply::Status(200, completion("ok"))]);
    let ppm = b"P6\n2 1\n255\n\xff\x00\x00\x00\x00\xff".to_vec();
    let b64 = base64::engine::general_purpose::STANDARD.encode(ppm);
    provider(&stub, 2000).complete(&bundle(Some(b64))).unwrap();
    let seen = stub.seen.lock().unwrap();
    let url = seen[0].1["messages"][1]["content"][1]["image_url"]["url"]
        .as_str()
        .unwrap()
        .to_string();
    let png = base64::engine::general_purpose::STANDARD
        .decode(url.strip_prefix("data:image/png;base64,").unwrap())
        .unwrap();
    assert_eq!(&png[1..4], b"PNG");
}
