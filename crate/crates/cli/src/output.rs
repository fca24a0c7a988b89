use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

/// Command failures, each with its process exit code.
#[derive(Debug)]
pub enum Failure {
    Precondition(String),
    Capacity(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Precondition(_) => 2,
            Failure::Capacity(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Precondition(m) | Failure::Capacity(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<framepath::Error> for Failure {
    fn from(e: framepath::Error) -> Self {
        if e.is_capacity() {
            Failure::Capacity(e.to_string())
        } else {
            Failure::Precondition(e.to_string())
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Failure::Precondition(format!("cannot encode report: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Renders into memory through a `Write`-based CSV writer.
pub fn csv<F>(write: F) -> Result<Vec<u8>, Failure>
where
    F: FnOnce(&mut Vec<u8>) -> io::Result<()>,
{
    let mut bytes = Vec::new();
    write(&mut bytes).map_err(|e| Failure::Io(format!("cannot render CSV: {e}")))?;
    Ok(bytes)
}

pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| Failure::Io(format!("cannot write to stdout: {e}"))),
    }
}
