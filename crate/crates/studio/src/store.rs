//! File persistence for workbenches.
//!
//! ```text
//! {root}/scenes/{scene_id}.json         current scene document
//! {root}/logs/{scene_id}.initial.json   scene document the log starts from
//! {root}/logs/{scene_id}.jsonl          operation log, one record per line
//! {root}/sessions/{session_id}.json     one session
//! ```
//!
//! A commit appends the new log records first, then rewrites the touched
//! session and the scene file. The log is therefore the source of truth: on
//! load the scene is rebuilt by replay, and a scene file that disagrees with
//! the replay (a crash between the two writes) is rewritten.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use echo_core::engine::{EngineError, LogEntry, OperationLog, Session, Workbench};
use echo_core::SceneSnapshot;

use crate::clock::SystemClock;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("scene {scene_id}: {source}")]
    Replay {
        scene_id: String,
        source: EngineError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Scene ids double as file names, so they are restricted to a safe alphabet.
pub fn valid_scene_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// The scene a session belongs to, from its `{scene_id}-{n}` id.
pub fn scene_of_session(session_id: &str) -> Option<&str> {
    let (scene, n) = session_id.rsplit_once('-')?;
    (n.parse::<u64>().is_ok() && valid_scene_id(scene)).then_some(scene)
}

/// A recovered workbench and what recovery had to fix.
pub struct Recovered {
    pub workbench: Workbench,
    pub demoted: usize,
    pub dropped_partial_line: bool,
    pub rewrote_scene_file: bool,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let store = Self { root: root.into() };
        for dir in ["scenes", "logs", "sessions"] {
            let path = store.root.join(dir);
            fs::create_dir_all(&path).map_err(io_err(&path))?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn scene_path(&self, scene_id: &str) -> PathBuf {
        self.root.join("scenes").join(format!("{scene_id}.json"))
    }

    pub fn initial_path(&self, scene_id: &str) -> PathBuf {
        self.root
            .join("logs")
            .join(format!("{scene_id}.initial.json"))
    }

    pub fn log_path(&self, scene_id: &str) -> PathBuf {
        self.root.join("logs").join(format!("{scene_id}.jsonl"))
    }

    pub fn session_path(&self, session_id: &str) -> PathBuf {
        self.root
            .join("sessions")
            .join(format!("{session_id}.json"))
    }

    /// Writes everything for a new workbench, including any log it already has.
    pub fn create(&self, wb: &Workbench) -> Result<(), StoreError> {
        let id = wb.scene().scene_id();
        write_atomic(&self.initial_path(id), wb.initial().to_json().as_bytes())?;
        let log = self.log_path(id);
        File::create(&log).map_err(io_err(&log))?;
        self.commit(wb, 0, None)?;
        for s in wb.sessions() {
            self.write_session(s)?;
        }
        Ok(())
    }

    /// Persists a mutation: log records from index `log_from` on, then every
    /// session those records name plus `session_id`, then the scene file.
    pub fn commit(
        &self,
        wb: &Workbench,
        log_from: usize,
        session_id: Option<&str>,
    ) -> Result<(), StoreError> {
        let id = wb.scene().scene_id();
        let fresh = &wb.log().entries()[log_from.min(wb.log().len())..];
        if !fresh.is_empty() {
            append_lines(&self.log_path(id), fresh)?;
        }
        let mut touched: Vec<&str> = fresh
            .iter()
            .filter_map(|e| e.session_id.as_deref())
            .collect();
        touched.extend(session_id);
        touched.sort_unstable();
        touched.dedup();
        for session in touched.into_iter().filter_map(|sid| wb.session(sid)) {
            self.write_session(session)?;
        }
        write_atomic(
            &self.scene_path(id),
            wb.scene().snapshot().to_json().as_bytes(),
        )
    }

    pub fn write_session(&self, session: &Session) -> Result<(), StoreError> {
        let json = serde_json::to_vec_pretty(session).expect("sessions serialize");
        write_atomic(&self.session_path(&session.session_id), &json)
    }

    /// Removes a scene with its log and sessions.
    pub fn delete(&self, wb: &Workbench) -> Result<(), StoreError> {
        let id = wb.scene().scene_id();
        let mut paths = vec![
            self.scene_path(id),
            self.initial_path(id),
            self.log_path(id),
        ];
        paths.extend(
            wb.sessions()
                .iter()
                .map(|s| self.session_path(&s.session_id)),
        );
        for path in paths {
            match fs::remove_file(&path) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(io_err(&path)(e)),
                _ => {}
            }
        }
        Ok(())
    }

    /// Rebuilds every stored scene, in scene id order.
    pub fn load_all(&self) -> Result<Vec<Recovered>, StoreError> {
        let dir = self.root.join("scenes");
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default();
            if path.extension().is_some_and(|e| e == "json") && valid_scene_id(stem) {
                ids.push(stem.to_string());
            }
        }
        ids.sort();
        let mut sessions = self.load_sessions()?;
        ids.iter()
            .map(|id| {
                let mine = sessions.extract_if(.., |s| s.scene_id == *id).collect();
                self.load(id, mine)
            })
            .collect()
    }

    fn load_sessions(&self) -> Result<Vec<Session>, StoreError> {
        let dir = self.root.join("sessions");
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let session: Session =
                serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            out.push(session);
        }
        out.sort_by_key(|s| {
            let n = s
                .session_id
                .rsplit_once('-')
                .and_then(|(_, n)| n.parse::<u64>().ok());
            (s.scene_id.clone(), n.unwrap_or(u64::MAX))
        });
        Ok(out)
    }

    fn load(&self, id: &str, sessions: Vec<Session>) -> Result<Recovered, StoreError> {
        let scene_path = self.scene_path(id);
        let scene_text = fs::read_to_string(&scene_path).map_err(io_err(&scene_path))?;
        let stored = SceneSnapshot::from_json(&scene_text).map_err(|e| StoreError::Corrupt {
            path: scene_path.clone(),
            message: e.to_string(),
        })?;
        if stored.scene().scene_id() != id {
            return Err(StoreError::Corrupt {
                path: scene_path,
                message: format!("holds scene {:?}", stored.scene().scene_id()),
            });
        }

        let initial_path = self.initial_path(id);
        let initial_text = fs::read_to_string(&initial_path).map_err(io_err(&initial_path))?;
        let initial = SceneSnapshot::from_json(&initial_text).map_err(|e| StoreError::Corrupt {
            path: initial_path,
            message: e.to_string(),
        })?;

        let log_path = self.log_path(id);
        let (entries, dropped_partial_line) = read_log(&log_path)?;
        let log = OperationLog::from_entries(entries).map_err(|e| StoreError::Corrupt {
            path: log_path,
            message: e.to_string(),
        })?;

        let mut workbench = Workbench::from_parts(initial, log, sessions)
            .map_err(|source| StoreError::Replay {
                scene_id: id.to_string(),
                source,
            })?
            .with_clock(SystemClock);
        let demoted = workbench.demote_processing();
        if demoted > 0 {
            for s in workbench.sessions() {
                self.write_session(s)?;
            }
        }
        let rebuilt = workbench.scene().snapshot().to_json();
        let rewrote_scene_file = rebuilt != scene_text;
        if rewrote_scene_file {
            write_atomic(&self.scene_path(id), rebuilt.as_bytes())?;
        }
        Ok(Recovered {
            workbench,
            demoted,
            dropped_partial_line,
            rewrote_scene_file,
        })
    }
}

/// Reads a log file. A last line without its newline is the remains of an
/// interrupted append: it is dropped and cut from the file. Any other bad
/// line is corruption.
fn read_log(path: &Path) -> Result<(Vec<LogEntry>, bool), StoreError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(io_err(path)(e)),
    };
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let partial = complete < bytes.len();
    let text = std::str::from_utf8(&bytes[..complete]).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    if partial {
        let f = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(io_err(path))?;
        f.set_len(complete as u64).map_err(io_err(path))?;
        f.sync_all().map_err(io_err(path))?;
    }
    Ok((entries, partial))
}

fn append_lines(path: &Path, entries: &[LogEntry]) -> Result<(), StoreError> {
    let mut buf = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut buf, e).expect("log entries serialize");
        buf.push(b'\n');
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    f.write_all(&buf).map_err(io_err(path))?;
    f.sync_data().map_err(io_err(path))
}

/// Writes through a temporary sibling and a rename, so readers only ever
/// see the old or the new contents.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_data().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids() {
        assert!(valid_scene_id("living-room_2"));
        assert!(!valid_scene_id("../etc"));
        assert!(!valid_scene_id(""));
        assert_eq!(scene_of_session("living-room-3"), Some("living-room"));
        assert_eq!(scene_of_session("living"), None);
        assert_eq!(scene_of_session("a-b"), None);
    }
}
