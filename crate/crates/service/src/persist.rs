//! On-disk session state.
//!
//! Each session is a directory holding the canonical uploaded log
//! (`initial.jsonocel`) and a manifest with the operation history. Versions
//! are rebuilt on startup by replaying the history, so no snapshot beyond
//! version 0 is ever written.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use ocellens_core::io::{read_ocel_json, write_ocel_json};
use ocellens_core::ops::OperationRequest;
use ocellens_core::OcelLog;
use serde::{Deserialize, Serialize};

use crate::store::Session;

const INITIAL: &str = "initial.jsonocel";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    session_id: String,
    created_at: DateTime<Utc>,
    history: Vec<OperationRequest>,
}

pub struct StoredSession {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub initial: OcelLog,
    pub history: Vec<OperationRequest>,
}

pub struct Persistence {
    root: PathBuf,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

// Session ids are generated hex strings; anything else never names a
// directory.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric())
}

impl Persistence {
    pub fn new(root: PathBuf) -> io::Result<Self> {
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    fn dir(&self, id: &str) -> io::Result<PathBuf> {
        if !valid_id(id) {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "bad session id"));
        }
        Ok(self.root.join(id))
    }

    pub fn save_initial(&self, session: &Session) -> io::Result<()> {
        let dir = self.dir(&session.id)?;
        fs::create_dir_all(&dir)?;
        write_atomic(&dir.join(INITIAL), &write_ocel_json(&session.versions[0]))
    }

    pub fn save_manifest(&self, session: &Session) -> io::Result<()> {
        let dir = self.dir(&session.id)?;
        let manifest = Manifest {
            session_id: session.id.clone(),
            created_at: session.created_at,
            history: session.history.clone(),
        };
        let bytes = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
        write_atomic(&dir.join(MANIFEST), &bytes)
    }

    pub fn delete(&self, id: &str) -> io::Result<()> {
        let dir = self.dir(id)?;
        match fs::remove_dir_all(dir) {
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
            other => other,
        }
    }

    fn load(&self, dir: &Path) -> Result<StoredSession, String> {
        let manifest: Manifest = serde_json::from_slice(
            &fs::read(dir.join(MANIFEST)).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let initial = read_ocel_json(&fs::read(dir.join(INITIAL)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        Ok(StoredSession {
            session_id: manifest.session_id,
            created_at: manifest.created_at,
            initial,
            history: manifest.history,
        })
    }

    /// Every readable session under the root; broken ones are skipped.
    pub fn load_all(&self) -> Vec<StoredSession> {
        let Ok(entries) = fs::read_dir(&self.root) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for entry in entries.flatten() {
            let path = entry.path();
            if !path.is_dir() {
                continue;
            }
            match self.load(&path) {
                Ok(s) if valid_id(&s.session_id) => out.push(s),
                Ok(_) => tracing::warn!(path = %path.display(), "skipping session with bad id"),
                Err(e) => tracing::warn!(path = %path.display(), "skipping unreadable session: {e}"),
            }
        }
        out
    }
}
