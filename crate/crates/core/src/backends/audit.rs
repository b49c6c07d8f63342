//! Append-only JSONL mirror of raw provider traffic.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::Mutex;

use serde_json::{json, Value};

use super::RequestTag;

#[derive(Debug)]
pub struct AuditLog {
    file: Mutex<File>,
}

impl AuditLog {
    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(AuditLog { file: Mutex::new(file) })
    }

    /// Writes one record. Audit failures are logged, never fatal.
    pub fn record(
        &self,
        backend: &str,
        tag: &RequestTag,
        url: &str,
        request: &Value,
        status: Option<u16>,
        response: &str,
    ) {
        let line = json!({
            "timestamp": chrono::Utc::now().to_rfc3339(),
            "backend": backend,
            "tag": tag,
            "url": url,
            "request": request,
            "status": status,
            "response": response,
        });
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = writeln!(f, "{line}") {
            log::warn!("audit log write failed: {e}");
        }
    }
}
