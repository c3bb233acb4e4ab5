//! Output files that disappear again unless the command finishes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Tracks files (and a directory) created by a command. Dropping the guard
/// without calling [`Outputs::commit`] removes them.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates `dir` if needed; a directory created here is removed on
    /// failure when it is left empty.
    pub fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        if !dir.exists() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            self.created_dir = Some(dir.to_path_buf());
        }
        Ok(())
    }

    pub fn write(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        self.files.push(path.to_path_buf());
        fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn copy(&mut self, from: &Path, to: &Path) -> Result<()> {
        self.files.push(to.to_path_buf());
        fs::copy(from, to).with_context(|| format!("cannot copy {} to {}", from.display(), to.display()))?;
        Ok(())
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if let Some(dir) = &self.created_dir {
            let _ = fs::remove_dir(dir);
        }
    }
}
