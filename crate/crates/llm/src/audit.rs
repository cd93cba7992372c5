//! Append-only log of every raw model response.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompt::PromptBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub request_id: String,
    pub prompt_sha256: String,
    /// Verbatim model output; `None` when the request failed.
    pub raw_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub timestamp: String,
}

/// SHA-256 over the system prompt, a NUL byte, the user prompt, a NUL
/// byte and the request parameters as JSON.
pub fn prompt_sha256(prompt: &PromptBundle) -> String {
    let mut h = Sha256::new();
    h.update(prompt.system.as_bytes());
    h.update([0]);
    h.update(prompt.user.as_bytes());
    h.update([0]);
    h.update(serde_json::to_string(&prompt.params).expect("plain struct").as_bytes());
    format!("{:x}", h.finalize())
}

enum Sink {
    File(File),
    Memory(Vec<AuditRecord>),
}

/// Writes are serialized through a mutex so concurrent requests never
/// interleave lines.
pub struct AuditLog {
    sink: Mutex<Sink>,
}

impl AuditLog {
    /// Appends to `path`, creating it if needed.
    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(AuditLog {
            sink: Mutex::new(Sink::File(file)),
        })
    }

    pub fn in_memory() -> Self {
        AuditLog {
            sink: Mutex::new(Sink::Memory(Vec::new())),
        }
    }

    pub fn record(
        &self,
        request_id: &str,
        prompt: &PromptBundle,
        outcome: Result<&str, String>,
    ) -> io::Result<()> {
        let (raw_response, error) = match outcome {
            Ok(raw) => (Some(raw.to_string()), None),
            Err(e) => (None, Some(e)),
        };
        let record = AuditRecord {
            request_id: request_id.to_string(),
            prompt_sha256: prompt_sha256(prompt),
            raw_response,
            error,
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        let mut sink = self.sink.lock().unwrap_or_else(|p| p.into_inner());
        match &mut *sink {
            Sink::File(f) => {
                let mut line = serde_json::to_string(&record)?;
                line.push('\n');
                f.write_all(line.as_bytes())?;
                f.flush()
            }
            Sink::Memory(v) => {
                v.push(record);
                Ok(())
            }
        }
    }

    /// Records held by an in-memory log; empty for file-backed logs.
    pub fn records(&self) -> Vec<AuditRecord> {
        match &*self.sink.lock().unwrap_or_else(|p| p.into_inner()) {
            Sink::Memory(v) => v.clone(),
            Sink::File(_) => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::SamplingParams;

    fn prompt(user: &str) -> PromptBundle {
        PromptBundle {
            system: "s".into(),
            user: user.into(),
            params: SamplingParams::ANNOTATION,
        }
    }

    #[test]
    fn hash_depends_on_every_part() {
        let a = prompt_sha256(&prompt("u"));
        assert_eq!(a.len(), 64);
        assert_eq!(a, prompt_sha256(&prompt("u")));
        assert_ne!(a, prompt_sha256(&prompt("v")));
        let mut p = prompt("u");
        p.params = SamplingParams::GENERATION;
        assert_ne!(a, prompt_sha256(&p));
    }

    #[test]
    fn file_log_appends_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("audit.jsonl");
        let log = AuditLog::open(&path).unwrap();
        log.record("r1", &prompt("u"), Ok("raw <x>")).unwrap();
        log.record("r2", &prompt("u"), Err("boom".into())).unwrap();
        let lines: Vec<AuditRecord> = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].raw_response.as_deref(), Some("raw <x>"));
        assert_eq!(lines[1].error.as_deref(), Some("boom"));
    }
}
