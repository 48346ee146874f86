//! Output files: every file starts with the tool version and config hash.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TOOL: &str = "ats";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
}

impl Meta {
    pub fn new(command: &str, config_hash: String) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config_hash,
        }
    }

    /// Comment line opening every CSV output.
    pub fn csv_header(&self) -> String {
        format!("# {} {} config_hash={}\n", self.tool, self.version, self.config_hash)
    }
}

/// Writes into one output directory, remembering what it wrote.
pub struct OutputDir {
    dir: PathBuf,
    meta: Meta,
    pub written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: PathBuf, meta: Meta) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::from_io(&dir, e))?;
        Ok(Self {
            dir,
            meta,
            written: Vec::new(),
        })
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::from_io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// CSV body produced by `body`, after the header comment.
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
    {
        let mut buf = self.meta.csv_header().into_bytes();
        body(&mut buf)?;
        self.put(name, buf)
    }

    /// Pretty JSON with `meta` as the first field.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            meta: &'a Meta,
            #[serde(flatten)]
            body: &'a T,
        }
        let mut text = serde_json::to_string_pretty(&Doc { meta: &self.meta, body })
            .map_err(|e| CliError::Config(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.put(name, text.into_bytes())
    }
}

/// Rows of plain records through the csv writer.
pub fn write_rows<S: Serialize>(buf: &mut Vec<u8>, rows: &[S]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(buf);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: Path::new("<buffer>").into(),
        message: e.to_string(),
    })
}
