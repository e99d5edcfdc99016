//! On-disk orbit cache: one JSONL file per map fingerprint, guarded by an
//! advisory lock file while a process may write it.

use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use orbitctl_core::orbits::OrbitDatabase;
use orbitctl_core::{Error, RationalMap, Result};

pub const CACHE_ENV: &str = "ORBITCTL_CACHE";

/// `ORBITCTL_CACHE` wins over the configured directory.
pub fn resolve_dir(configured: &Path) -> PathBuf {
    match std::env::var_os(CACHE_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.to_path_buf(),
    }
}

pub struct Cache {
    path: PathBuf,
    lock: PathBuf,
}

impl Cache {
    /// Takes the lock for `map` inside `dir`, creating the directory.
    pub fn open(dir: &Path, map: &RationalMap) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let stem = map.fingerprint();
        let lock = dir.join(format!("{stem}.lock"));
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(Error::Io(std::io::Error::new(
                    ErrorKind::WouldBlock,
                    format!(
                        "cache is locked by another process ({}); remove the file if that process is gone",
                        lock.display()
                    ),
                )));
            }
            Err(e) => return Err(e.into()),
        }
        Ok(Self {
            path: dir.join(format!("{stem}.jsonl")),
            lock,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Existing census for `map`, or an empty one. A fingerprint mismatch aborts.
    pub fn load(&self, map: &RationalMap) -> Result<OrbitDatabase> {
        if self.path.exists() {
            OrbitDatabase::load_for(&self.path, map)
        } else {
            Ok(OrbitDatabase::new(map))
        }
    }

    pub fn store(&self, db: &OrbitDatabase) -> Result<()> {
        db.save(&self.path)
    }
}

impl Drop for Cache {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
