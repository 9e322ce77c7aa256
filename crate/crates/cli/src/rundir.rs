//! Run directories: `<out>/<mode>-<digest>-<seed>`, guarded by a LOCK file
//! while a command owns them and marked complete by a DONE file.

use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, ExitCode};

pub const LOCK_FILE: &str = "LOCK";
pub const DONE_FILE: &str = "DONE";

pub struct RunDir {
    path: PathBuf,
    _lock: File,
}

pub fn run_dir_name(mode: &str, digest: &str, seed: u64) -> String {
    format!("{mode}-{digest}-{seed}")
}

impl RunDir {
    /// Creates (or reopens) the directory and takes its lock. Fails with
    /// exit code 5 if another process holds the lock.
    pub fn open(out: &Path, mode: &str, digest: &str, seed: u64) -> Result<RunDir, CliError> {
        let path = out.join(run_dir_name(mode, digest, seed));
        fs::create_dir_all(&path).map_err(|e| CliError::io(&path, e))?;
        let lock_path = path.join(LOCK_FILE);
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(|e| CliError::io(&lock_path, e))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => {
                return Err(CliError::new(
                    ExitCode::Locked,
                    "locked",
                    format!("{} is in use by another process", path.display()),
                ))
            }
            Err(TryLockError::Error(e)) => return Err(CliError::io(&lock_path, e)),
        }
        Ok(RunDir { path, _lock: lock })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn join(&self, rel: &str) -> PathBuf {
        self.path.join(rel)
    }

    pub fn is_done(&self) -> bool {
        self.join(DONE_FILE).exists()
    }

    /// Forgets completion before outputs are rewritten.
    pub fn begin(&self) -> Result<(), CliError> {
        let done = self.join(DONE_FILE);
        match fs::remove_file(&done) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(CliError::io(&done, e)),
        }
    }

    pub fn finish(&self) -> Result<(), CliError> {
        self.write(DONE_FILE, "")
    }

    /// Writes a whole file through a temporary sibling and a rename.
    pub fn write(&self, rel: &str, contents: &str) -> Result<(), CliError> {
        write_file(&self.join(rel), contents)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(contents.as_bytes())
        .and_then(|_| f.sync_all())
        .map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}
