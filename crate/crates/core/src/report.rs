//! Run reports: what a command did, with what parameters, and what it
//! counted. The report is diagnostic output; pipeline artifacts stay
//! byte-deterministic while the report's wall time naturally varies.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub counters: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn new(command: &str) -> RunReport {
        RunReport {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            counters: BTreeMap::new(),
            warnings: Vec::new(),
            wall_time_ms: 0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn counter(&mut self, key: &str, value: u64) -> &mut Self {
        self.counters.insert(key.to_string(), value);
        self
    }

    pub fn add_to_counter(&mut self, key: &str, value: u64) -> &mut Self {
        *self.counters.entry(key.to_string()).or_insert(0) += value;
        self
    }

    pub fn warn(&mut self, message: impl Into<String>) -> &mut Self {
        self.warnings.push(message.into());
        self
    }

    pub fn finish(&mut self, started: Instant) -> &mut Self {
        self.wall_time_ms = started.elapsed().as_millis() as u64;
        self
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}
