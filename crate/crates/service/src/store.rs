//! Session storage: a stack of immutable log snapshots per session.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use ocellens_core::ops::{apply, OpError, OperationRequest};
use ocellens_core::OcelLog;
use serde::Serialize;
use thiserror::Error;

use crate::persist::Persistence;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {session} has no version {version}")]
    UnknownVersion { session: String, version: usize },
    #[error("nothing to undo: session is at version 0")]
    NothingToUndo,
    #[error("version limit of {0} reached; undo before applying more operations")]
    VersionLimit(usize),
    #[error(transparent)]
    Operation(#[from] OpError),
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    /// `versions[0]` is the uploaded log; each later entry is the result of
    /// the operation at the same position minus one in `history`.
    pub versions: Vec<Arc<OcelLog>>,
    pub history: Vec<OperationRequest>,
    pub created_at: DateTime<Utc>,
    pub last_access: DateTime<Utc>,
}

impl Session {
    pub fn head(&self) -> usize {
        self.versions.len() - 1
    }

    pub fn version(&self, v: Option<usize>) -> Option<&Arc<OcelLog>> {
        self.versions.get(v.unwrap_or(self.head()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub version: usize,
    pub history: Vec<OperationRequest>,
    pub created_at: DateTime<Utc>,
    pub last_access: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct StoreConfig {
    pub max_versions: usize,
    pub idle_ttl: chrono::Duration,
    pub state_dir: Option<PathBuf>,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            max_versions: 64,
            idle_ttl: chrono::Duration::hours(24),
            state_dir: None,
        }
    }
}

/// All live sessions. Different sessions never share a lock; operations on
/// one session hold that session's mutex for their whole duration.
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    config: StoreConfig,
    persistence: Option<Persistence>,
}

impl SessionStore {
    pub fn new(config: StoreConfig) -> std::io::Result<Self> {
        let persistence = config.state_dir.clone().map(Persistence::new).transpose()?;
        let store = Self {
            sessions: RwLock::new(HashMap::new()),
            config,
            persistence,
        };
        store.rehydrate();
        Ok(store)
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    fn rehydrate(&self) {
        let Some(p) = &self.persistence else {
            return;
        };
        let mut map = self.sessions.write().unwrap();
        for stored in p.load_all() {
            let mut versions = vec![Arc::new(stored.initial)];
            let mut history = Vec::new();
            for req in stored.history {
                match apply(versions.last().unwrap(), &req) {
                    Ok(next) => {
                        versions.push(Arc::new(next));
                        history.push(req);
                    }
                    Err(e) => {
                        tracing::warn!(session = %stored.session_id, "replay stopped: {e}");
                        break;
                    }
                }
            }
            map.insert(
                stored.session_id.clone(),
                Arc::new(Mutex::new(Session {
                    id: stored.session_id,
                    versions,
                    history,
                    created_at: stored.created_at,
                    last_access: Utc::now(),
                })),
            );
        }
    }

    fn persist(&self, session: &Session) {
        if let Some(p) = &self.persistence {
            if let Err(e) = p.save_manifest(session) {
                tracing::warn!(session = %session.id, "failed to persist session: {e}");
            }
        }
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, StoreError> {
        let now = Utc::now();
        let handle = self
            .sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(id.to_owned()))?;
        let expired = {
            let mut s = handle.lock().unwrap();
            if now - s.last_access > self.config.idle_ttl {
                true
            } else {
                s.last_access = now;
                false
            }
        };
        if expired {
            self.remove(id);
            return Err(StoreError::UnknownSession(id.to_owned()));
        }
        Ok(handle)
    }

    pub fn create(&self, log: OcelLog) -> (String, Arc<OcelLog>) {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let now = Utc::now();
        let log = Arc::new(log);
        let session = Session {
            id: id.clone(),
            versions: vec![log.clone()],
            history: Vec::new(),
            created_at: now,
            last_access: now,
        };
        if let Some(p) = &self.persistence {
            if let Err(e) = p.save_initial(&session).and_then(|_| p.save_manifest(&session)) {
                tracing::warn!(session = %id, "failed to persist session: {e}");
            }
        }
        self.sessions
            .write()
            .unwrap()
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        (id, log)
    }

    pub fn info(&self, id: &str) -> Result<(SessionInfo, Arc<OcelLog>), StoreError> {
        let handle = self.get(id)?;
        let s = handle.lock().unwrap();
        Ok((
            SessionInfo {
                session_id: s.id.clone(),
                version: s.head(),
                history: s.history.clone(),
                created_at: s.created_at,
                last_access: s.last_access,
            },
            s.versions[s.head()].clone(),
        ))
    }

    /// Applies `req` to the head version and pushes the result. On error the
    /// session is left as it was.
    pub fn apply(&self, id: &str, req: OperationRequest) -> Result<(usize, Arc<OcelLog>), StoreError> {
        let handle = self.get(id)?;
        let mut s = handle.lock().unwrap();
        if s.versions.len() >= self.config.max_versions {
            return Err(StoreError::VersionLimit(self.config.max_versions));
        }
        let next = Arc::new(apply(&s.versions[s.head()], &req)?);
        s.versions.push(next.clone());
        s.history.push(req);
        self.persist(&s);
        Ok((s.head(), next))
    }

    pub fn undo(&self, id: &str) -> Result<usize, StoreError> {
        let handle = self.get(id)?;
        let mut s = handle.lock().unwrap();
        if s.head() == 0 {
            return Err(StoreError::NothingToUndo);
        }
        s.versions.pop();
        s.history.pop();
        self.persist(&s);
        Ok(s.head())
    }

    /// The requested version (head when `None`) and its index.
    pub fn version(&self, id: &str, version: Option<usize>) -> Result<(usize, Arc<OcelLog>), StoreError> {
        let handle = self.get(id)?;
        let s = handle.lock().unwrap();
        let v = version.unwrap_or(s.head());
        s.versions
            .get(v)
            .map(|log| (v, log.clone()))
            .ok_or_else(|| StoreError::UnknownVersion {
                session: id.to_owned(),
                version: v,
            })
    }

    pub fn remove(&self, id: &str) -> bool {
        let removed = self.sessions.write().unwrap().remove(id).is_some();
        if removed {
            if let Some(p) = &self.persistence {
                if let Err(e) = p.delete(id) {
                    tracing::warn!(session = %id, "failed to delete persisted session: {e}");
                }
            }
        }
        removed
    }

    /// Drops sessions idle for longer than the configured TTL.
    pub fn evict_expired(&self, now: DateTime<Utc>) -> usize {
        let expired: Vec<String> = self
            .sessions
            .read()
            .unwrap()
            .iter()
            .filter(|(_, s)| now - s.lock().unwrap().last_access > self.config.idle_ttl)
            .map(|(id, _)| id.clone())
            .collect();
        expired.iter().filter(|id| self.remove(id)).count()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ocellens_core::io::running_example;
    use ocellens_core::ops::OperationKind;

    fn drill() -> OperationRequest {
        OperationRequest {
            kind: OperationKind::DrillDown,
            object_type: Some("Test".into()),
            attribute: Some("type".into()),
            event_type: None,
            qualifiers: None,
        }
    }

    #[test]
    fn apply_and_undo() {
        let store = SessionStore::new(StoreConfig::default()).unwrap();
        let (id, initial) = store.create(running_example());
        let (v, _) = store.apply(&id, drill()).unwrap();
        assert_eq!(v, 1);
        assert_eq!(store.undo(&id).unwrap(), 0);
        assert_eq!(*store.version(&id, None).unwrap().1, *initial);
        assert!(matches!(store.undo(&id), Err(StoreError::NothingToUndo)));
    }

    #[test]
    fn failed_apply_leaves_versions_alone() {
        let store = SessionStore::new(StoreConfig::default()).unwrap();
        let (id, _) = store.create(running_example());
        let bad = OperationRequest {
            object_type: Some("Nope".into()),
            ..drill()
        };
        assert!(matches!(
            store.apply(&id, bad),
            Err(StoreError::Operation(OpError::UnknownObjectType(_)))
        ));
        assert_eq!(store.info(&id).unwrap().0.version, 0);
    }

    #[test]
    fn version_cap_refuses_further_operations() {
        let store = SessionStore::new(StoreConfig {
            max_versions: 2,
            ..Default::default()
        })
        .unwrap();
        let (id, _) = store.create(running_example());
        store.apply(&id, drill()).unwrap();
        assert!(matches!(store.apply(&id, drill()), Err(StoreError::VersionLimit(2))));
        store.undo(&id).unwrap();
        store.apply(&id, drill()).unwrap();
    }

    #[test]
    fn idle_sessions_expire() {
        let store = SessionStore::new(StoreConfig {
            idle_ttl: chrono::Duration::minutes(5),
            ..Default::default()
        })
        .unwrap();
        let (a, _) = store.create(running_example());
        let (_b, _) = store.create(running_example());
        assert_eq!(store.evict_expired(Utc::now()), 0);
        assert_eq!(store.evict_expired(Utc::now() + chrono::Duration::minutes(6)), 2);
        assert!(matches!(store.info(&a), Err(StoreError::UnknownSession(_))));
    }

    #[test]
    fn sessions_are_isolated() {
        let store = SessionStore::new(StoreConfig::default()).unwrap();
        let (a, _) = store.create(running_example());
        let (b, _) = store.create(running_example());
        store.apply(&a, drill()).unwrap();
        assert_eq!(store.info(&b).unwrap().0.version, 0);
        assert_eq!(*store.version(&b, None).unwrap().1, running_example());
    }
}
