//! Exported compiler state, written by `build --state` and read by the
//! expression evaluator.
//!
//! The file is a single JSON object:
//!
//! ```text
//! {
//!   "format": "spadelite-state",
//!   "version": 1,
//!   "compiler": "<crate version>",
//!   "files": [{"name": ..., "content": ...}],
//!   "units": [{"path": ..., "module": ..., "kind": ..., "ports": [...]}],
//!   "layouts": {"<type>": <type description>}
//! }
//! ```
//!
//! `files` is what the evaluator actually consumes; `units` and `layouts`
//! describe the build for external tools. Any other `format` or `version`
//! is rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::SourceFiles;
use crate::driver::Compilation;
use crate::mir::{Port, TypeDesc};

pub const FORMAT: &str = "spadelite-state";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateFile {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateUnit {
    pub path: String,
    pub module: String,
    pub kind: String,
    pub ports: Vec<Port>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilerState {
    pub format: String,
    pub version: u32,
    pub compiler: String,
    pub files: Vec<StateFile>,
    pub units: Vec<StateUnit>,
    pub layouts: BTreeMap<String, TypeDesc>,
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("state file is not valid: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("not a spadelite state file (format `{0}`)")]
    Format(String),
    #[error("state file version {found} is not supported (expected {expected}); rebuild with this compiler")]
    Version { found: u32, expected: u32 },
}

impl CompilerState {
    pub fn export(sources: &SourceFiles, c: &Compilation) -> CompilerState {
        CompilerState {
            format: FORMAT.to_string(),
            version: VERSION,
            compiler: env!("CARGO_PKG_VERSION").to_string(),
            files: sources
                .iter()
                .map(|(_, f)| StateFile {
                    name: f.name.clone(),
                    content: f.content.clone(),
                })
                .collect(),
            units: c
                .mir
                .units
                .iter()
                .map(|u| StateUnit {
                    path: u.path.clone(),
                    module: u.name.clone(),
                    kind: u.kind.keyword().to_string(),
                    ports: u.ports.clone(),
                })
                .collect(),
            layouts: c.mir.layouts.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes") + "\n"
    }

    /// Parses and validates the header before anything else is trusted.
    pub fn from_text(text: &str) -> Result<CompilerState, StateError> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let format = v.get("format").and_then(|f| f.as_str()).unwrap_or("");
        if format != FORMAT {
            return Err(StateError::Format(format.to_string()));
        }
        let version = v.get("version").and_then(|f| f.as_u64()).unwrap_or(0) as u32;
        if version != VERSION {
            return Err(StateError::Version {
                found: version,
                expected: VERSION,
            });
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn sources(&self) -> SourceFiles {
        let mut files = SourceFiles::new();
        for f in &self.files {
            files.add(f.name.clone(), f.content.clone());
        }
        files
    }

    /// Namespace used to resolve evaluated expressions by default.
    pub fn default_namespace(&self) -> Option<String> {
        self.files.first().map(|f| crate::driver::namespace_of(&f.name))
    }
}
