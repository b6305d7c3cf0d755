//! Session state and its on-disk log.
//!
//! Each session lives in its own directory:
//!
//! * `tasks.jsonl` holds the blind tasks in presentation order.
//! * `records.jsonl` is the append-only record log, written and synced
//!   before a submission is acknowledged. Later lines win.
//! * `session.json` is a snapshot of the cursor, rewritten atomically.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use phonaudit_core::jsonl;
use phonaudit_core::pipeline::BlindTask;
use phonaudit_core::PreferenceRecord;
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};

pub const TASKS_FILE: &str = "tasks.jsonl";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SNAPSHOT_FILE: &str = "session.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub session_id: String,
    pub annotator_id: String,
    pub task_ids: Vec<String>,
    pub cursor: usize,
}

/// Outcome of a submission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stored {
    Appended,
    /// Same content as the stored record; nothing written.
    Unchanged,
}

#[derive(Debug)]
pub struct Session {
    pub session_id: String,
    pub annotator_id: String,
    pub tasks: Vec<BlindTask>,
    pub cursor: usize,
    pub records: BTreeMap<String, PreferenceRecord>,
    dir: PathBuf,
}

impl Session {
    pub fn create(dir: PathBuf, session_id: &str, annotator_id: &str, tasks: Vec<BlindTask>) -> ServiceResult<Self> {
        if tasks.is_empty() {
            return Err(ServiceError::BadRequest("campaign has no tasks".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(t) = tasks.iter().find(|t| !seen.insert(t.task_id.as_str())) {
            return Err(ServiceError::BadRequest(format!("duplicate task id {}", t.task_id)));
        }
        fs::create_dir_all(&dir)?;
        jsonl::write_atomic(dir.join(TASKS_FILE), &tasks)?;
        let session = Self {
            session_id: session_id.to_string(),
            annotator_id: annotator_id.to_string(),
            tasks,
            cursor: 0,
            records: BTreeMap::new(),
            dir,
        };
        session.write_snapshot()?;
        Ok(session)
    }

    /// Rebuilds a session by replaying its record log.
    pub fn open(dir: PathBuf) -> ServiceResult<Self> {
        let snapshot: Snapshot = serde_json::from_slice(&fs::read(dir.join(SNAPSHOT_FILE))?)
            .map_err(phonaudit_core::Error::from)?;
        let tasks: Vec<BlindTask> = jsonl::read(dir.join(TASKS_FILE))?;
        let ids: Vec<&str> = tasks.iter().map(|t| t.task_id.as_str()).collect();
        if ids != snapshot.task_ids.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(ServiceError::StaleSession(format!(
                "task file of session {} does not match its snapshot",
                snapshot.session_id
            )));
        }
        let mut session = Self {
            session_id: snapshot.session_id,
            annotator_id: snapshot.annotator_id,
            tasks,
            cursor: 0,
            records: BTreeMap::new(),
            dir,
        };
        let log_path = session.dir.join(RECORDS_FILE);
        let (replayed, torn) = replay(&log_path)?;
        if torn {
            // drop the partial line so later appends start on a fresh line
            jsonl::write_atomic(&log_path, &replayed)?;
        }
        for record in replayed {
            if session.index_of(&record.task_id).is_some() {
                session.records.insert(record.task_id.clone(), record);
            } else {
                log::warn!("session {}: ignoring record for unknown task {}", session.session_id, record.task_id);
            }
        }
        session.cursor = session.first_unsubmitted();
        if session.cursor != snapshot.cursor {
            log::info!(
                "session {}: snapshot cursor {} replaced by {} from the record log",
                session.session_id,
                snapshot.cursor,
                session.cursor
            );
            session.write_snapshot()?;
        }
        Ok(session)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn total(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_complete(&self) -> bool {
        self.cursor == self.tasks.len()
    }

    pub fn index_of(&self, task_id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.task_id == task_id)
    }

    fn first_unsubmitted(&self) -> usize {
        self.tasks
            .iter()
            .position(|t| !self.records.contains_key(&t.task_id))
            .unwrap_or(self.tasks.len())
    }

    /// Task at `index`, or at the cursor. Only visited tasks are reachable.
    pub fn task_at(&self, index: Option<usize>) -> ServiceResult<(usize, &BlindTask, Option<&PreferenceRecord>)> {
        let i = match index {
            None if self.is_complete() => return Err(ServiceError::SessionComplete(self.session_id.clone())),
            None => self.cursor,
            Some(i) if i >= self.tasks.len() => {
                return Err(ServiceError::NotFound(format!("task index {i}")));
            }
            Some(i) if i > self.cursor => {
                return Err(ServiceError::StaleSession(format!(
                    "task {i} not reached yet (cursor {})",
                    self.cursor
                )));
            }
            Some(i) => i,
        };
        let task = &self.tasks[i];
        Ok((i, task, self.records.get(&task.task_id)))
    }

    /// Validates and stores a record. The log line is synced before this
    /// returns; the cursor moves only when the current task is answered.
    pub fn submit(&mut self, mut record: PreferenceRecord) -> ServiceResult<Stored> {
        let index = self
            .index_of(&record.task_id)
            .ok_or_else(|| ServiceError::UnknownTask(record.task_id.clone()))?;
        if record.annotator_id.is_empty() {
            record.annotator_id = self.annotator_id.clone();
        }
        if record.annotator_id != self.annotator_id {
            return Err(ServiceError::BadRequest(format!(
                "annotator {} does not own session {}",
                record.annotator_id, self.session_id
            )));
        }
        if index > self.cursor {
            return Err(ServiceError::StaleSession(format!(
                "task {} submitted before task {}",
                record.task_id, self.tasks[self.cursor].task_id
            )));
        }
        record.validate().map_err(|e| ServiceError::InvalidChoice(e.to_string()))?;
        check_word_indices(&self.tasks[index], &record)?;

        if self.records.get(&record.task_id).is_some_and(|r| r.same_content(&record)) {
            return Ok(Stored::Unchanged);
        }
        if record.timestamp.is_none() {
            record.timestamp = Some(chrono::Utc::now());
        }
        jsonl::append_durable(self.dir.join(RECORDS_FILE), &record)?;
        self.records.insert(record.task_id.clone(), record);
        if index == self.cursor {
            self.cursor = self.first_unsubmitted();
            self.write_snapshot()?;
        }
        Ok(Stored::Appended)
    }

    /// Latest record per task, in task order.
    pub fn compacted_records(&self) -> Vec<&PreferenceRecord> {
        self.tasks.iter().filter_map(|t| self.records.get(&t.task_id)).collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            session_id: self.session_id.clone(),
            annotator_id: self.annotator_id.clone(),
            task_ids: self.tasks.iter().map(|t| t.task_id.clone()).collect(),
            cursor: self.cursor,
        }
    }

    fn write_snapshot(&self) -> ServiceResult<()> {
        let bytes = serde_json::to_vec_pretty(&self.snapshot()).map_err(phonaudit_core::Error::from)?;
        jsonl::write_bytes_atomic(&self.dir.join(SNAPSHOT_FILE), &bytes)?;
        Ok(())
    }
}

fn check_word_indices(task: &BlindTask, record: &PreferenceRecord) -> ServiceResult<()> {
    let sides = [
        ("a", &task.transcript_a, &record.influential_words.a),
        ("b", &task.transcript_b, &record.influential_words.b),
    ];
    for (side, text, indices) in sides {
        let words = text.split_whitespace().count();
        if let Some(i) = indices.iter().find(|i| **i >= words) {
            return Err(ServiceError::InvalidChoice(format!(
                "word index {i} out of range for transcript {side} ({words} words)"
            )));
        }
    }
    Ok(())
}

/// Reads the record log. A torn final line (a write that was never
/// acknowledged) is skipped; corruption elsewhere is an error.
fn replay(path: &Path) -> ServiceResult<(Vec<PreferenceRecord>, bool)> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), false)),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>()?;
    let last = lines.len();
    let mut out = Vec::new();
    let mut torn = false;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(e) if i + 1 == last => {
                log::warn!("{}: skipping torn last line: {e}", path.display());
                torn = true;
            }
            Err(source) => {
                return Err(phonaudit_core::Error::Jsonl { path: path.to_path_buf(), line: i + 1, source }.into());
            }
        }
    }
    Ok((out, torn))
}
