//! Line-delimited JSON files: one serialized value per line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{GeaError, Result};

/// Overwrites `path` with one line per value.
pub fn write_lines<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| GeaError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in values {
        let line = serde_json::to_string(v).expect("serializable value");
        writeln!(w, "{line}").map_err(|e| GeaError::io(path, e))?;
    }
    w.flush().map_err(|e| GeaError::io(path, e))
}

/// Reads every line. A missing file is an error; blank lines are skipped.
pub fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| GeaError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GeaError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| GeaError::Store {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of a file's contents, hex encoded.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| GeaError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Append-only writer. Each `append` writes and flushes one complete line.
pub struct AppendLog {
    path: PathBuf,
    file: File,
}

impl AppendLog {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| GeaError::io(path, e))?;
        Ok(AppendLog {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let mut line = serde_json::to_string(value).expect("serializable value");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| GeaError::io(&self.path, e))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
