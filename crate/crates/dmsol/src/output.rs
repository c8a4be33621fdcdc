//! Output directory with write-then-reread validation.
//!
//! Every JSON and CSV file is parsed back into the record type it was
//! written from and compared with the original; field files are compared
//! bitwise. A mismatch is an error, so a run that exits 0 only leaves files
//! that parse.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use dmsol_core::LatticeField;

use crate::error::CliError;
use crate::io;

pub struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
        Ok(Output { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn path(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::output(parent, e))?;
        }
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(path)
    }

    pub fn json<T>(&mut self, name: &str, value: &T) -> Result<(), CliError>
    where
        T: Serialize + DeserializeOwned + PartialEq,
    {
        let path = self.path(name)?;
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::output(&path, e))?;
        let back = fs::read_to_string(&path).map_err(|e| CliError::output(&path, e))?;
        let parsed: T = serde_json::from_str(&back).map_err(|e| CliError::output(&path, format!("does not parse back: {e}")))?;
        if &parsed != value {
            return Err(CliError::output(&path, "parsed content differs from what was written"));
        }
        Ok(())
    }

    pub fn csv<R>(&mut self, name: &str, rows: &[R]) -> Result<(), CliError>
    where
        R: Serialize + DeserializeOwned + PartialEq,
    {
        let path = self.path(name)?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::output(&path, e))?;
        for r in rows {
            w.serialize(r).map_err(|e| CliError::output(&path, e))?;
        }
        w.flush().map_err(|e| CliError::output(&path, e))?;
        drop(w);
        let mut rd = csv::Reader::from_path(&path).map_err(|e| CliError::output(&path, e))?;
        let parsed: Vec<R> = rd
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::output(&path, format!("does not parse back: {e}")))?;
        if parsed.as_slice() != rows {
            return Err(CliError::output(&path, "parsed content differs from what was written"));
        }
        Ok(())
    }

    /// Text or binary by extension, see [`io::write_field`].
    pub fn field(&mut self, name: &str, f: &LatticeField) -> Result<(), CliError> {
        let path = self.path(name)?;
        io::write_field(&path, f).map_err(|e| CliError::output(&path, e))?;
        let back = io::read_field(&path).map_err(|e| CliError::output(&path, e))?;
        if !io::same_bits(&back, f) {
            return Err(CliError::output(&path, "field does not round-trip"));
        }
        Ok(())
    }
}
