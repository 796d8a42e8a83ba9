//! Line-delimited verdict log: one JSON record per line, tagged by `kind`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mode_control::ModeTransition;
use crate::validator::ValidationVerdict;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub scenario: String,
    pub seed: u64,
    pub duration_ms: u64,
    pub monitor_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum LogRecord {
    Run(RunHeader),
    Verdict(ValidationVerdict),
    Mode(ModeTransition),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerdictLog {
    pub records: Vec<LogRecord>,
}

impl VerdictLog {
    pub fn new() -> Self {
        VerdictLog::default()
    }

    pub fn push(&mut self, record: LogRecord) {
        self.records.push(record);
    }

    pub fn header(&self) -> Option<&RunHeader> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Run(h) => Some(h),
            _ => None,
        })
    }

    pub fn verdicts(&self) -> impl Iterator<Item = &ValidationVerdict> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Verdict(v) => Some(v),
            _ => None,
        })
    }

    pub fn transitions(&self) -> impl Iterator<Item = &ModeTransition> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Mode(m) => Some(m),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("log records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, origin: &Path) -> Result<Self, Error> {
        let mut log = VerdictLog::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record = crate::io::parse_json(line, origin).map_err(|e| match e {
                Error::Parse { path, location, message } => {
                    Error::Parse { path, location: format!("line {} {location}", i + 1), message }
                }
                other => other,
            })?;
            log.push(record);
        }
        Ok(log)
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        fs::write(path, self.to_jsonl()).map_err(|source| Error::Io { path: path.to_owned(), source })
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        VerdictLog::from_jsonl(&text, path)
    }
}
