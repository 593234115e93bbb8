//! JSON documents on disk: scenes, configs and checkpoints.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use navsim_core::policy::{Checkpoint, Policy, PolicyError};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Policy { path: PathBuf, source: PolicyError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let f = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|source| IoError::Json { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(path))
}

pub fn load_policy(path: &Path) -> Result<Policy, IoError> {
    let ck: Checkpoint = read_json(path)?;
    Policy::from_checkpoint(ck).map_err(|source| IoError::Policy { path: path.to_path_buf(), source })
}

pub fn save_policy(path: &Path, policy: &Policy) -> Result<(), IoError> {
    write_json(path, &policy.checkpoint())
}
