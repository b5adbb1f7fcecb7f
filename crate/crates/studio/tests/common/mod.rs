#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::Arc;
use std::thread;

use echo_core::fixtures;
use echo_core::pipeline::MockProvider;
use echo_studio::service::{self, AppState, Recovery, ServiceOptions};
use echo_studio::store::Store;
use serde_json::Value;

pub fn echo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_echo"))
}

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

pub struct Reply {
    pub status: u16,
    pub revision: Option<String>,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

pub struct Http {
    agent: ureq::Agent,
    pub base: String,
}

impl Http {
    pub fn new(base: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            base: base.into(),
        }
    }

    fn finish(resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Reply {
        let mut resp = resp.expect("request reaches the server");
        let revision = resp
            .headers()
            .get("x-scene-revision")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        Reply {
            status,
            revision,
            text,
        }
    }

    pub fn get(&self, path: &str) -> Reply {
        Self::finish(self.agent.get(format!("{}{path}", self.base)).call())
    }

    pub fn delete(&self, path: &str) -> Reply {
        Self::finish(self.agent.delete(format!("{}{path}", self.base)).call())
    }

    pub fn post(&self, path: &str, body: &str) -> Reply {
        self.post_with(path, body, &[])
    }

    pub fn post_with(&self, path: &str, body: &str, headers: &[(&str, &str)]) -> Reply {
        let mut req = self
            .agent
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json");
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        Self::finish(req.send(body))
    }

    pub fn patch(&self, path: &str, body: &str) -> Reply {
        Self::finish(
            self.agent
                .patch(format!("{}{path}", self.base))
                .header("content-type", "application/json")
                .send(body),
        )
    }

    /// Polls a session until no entry is processing.
    pub fn settle(&self, sid: &str) -> Value {
        for _ in 0..400 {
            let v = self.get(&format!("/sessions/{sid}")).json();
            if v["processing"] == false {
                return v;
            }
            thread::sleep(std::time::Duration::from_millis(10));
        }
        panic!("session {sid} never settled");
    }
}

pub fn options(data: &Path) -> ServiceOptions {
    ServiceOptions {
        store: Store::open(data).unwrap(),
        provider: Arc::new(MockProvider::with_default_rules()),
        catalog: fixtures::catalog().unwrap(),
        generation_delay: std::time::Duration::ZERO,
        admin_token: None,
    }
}

/// Runs the router on a background thread for the rest of the process.
pub fn serve_in_process(opts: ServiceOptions) -> (Http, Recovery) {
    let (state, recovery) = AppState::recover(opts).unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, service::router(state)).await.unwrap();
        });
    });
    (Http::new(base), recovery)
}

/// `echo serve` as a child process.
pub struct Server {
    pub child: Child,
    pub http: Http,
    pub log: Arc<std::sync::Mutex<Vec<String>>>,
}

impl Server {
    pub fn spawn(args: &[&str]) -> Result<Self, (i32, String)> {
        let mut child = echo()
            .arg("serve")
            .args(["--bind", "127.0.0.1:0"])
            .args(args)
            .env("RUST_LOG", "info")
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
        let log = Arc::new(std::sync::Mutex::new(Vec::new()));
        let mut base = None;
        for line in lines.by_ref() {
            let line = line.unwrap();
            log.lock().unwrap().push(line.clone());
            if let Some(addr) = line.strip_prefix("listening on ") {
                base = Some(addr.trim().to_string());
                break;
            }
        }
        let Some(base) = base else {
            let status = child.wait().unwrap();
            let mut err = String::new();
            std::io::Read::read_to_string(&mut child.stderr.take().unwrap(), &mut err).unwrap();
            return Err((status.code().unwrap_or(-1), err));
        };
        let sink = Arc::clone(&log);
        thread::spawn(move || {
            for line in lines.map_while(Result::ok) {
                sink.lock().unwrap().push(line);
            }
        });
        Ok(Self {
            child,
            http: Http::new(base),
            log,
        })
    }

    /// SIGKILL: no shutdown path runs.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
