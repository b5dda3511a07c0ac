use std::fs;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// A run directory that appears only when complete. Files are written
/// to a sibling staging directory that replaces the target on commit
/// and is deleted if dropped uncommitted.
#[derive(Debug)]
pub struct StagedDir {
    target: PathBuf,
    staging: PathBuf,
    committed: bool,
}

impl StagedDir {
    pub fn new(target: impl AsRef<Path>) -> Result<Self> {
        let target = target.as_ref().to_path_buf();
        let name = target
            .file_name()
            .ok_or_else(|| Error::input(format!("output path {} has no final component", target.display())))?
            .to_string_lossy()
            .into_owned();
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| Error::io(staging.display().to_string(), e))?;
        }
        fs::create_dir_all(&staging).map_err(|e| Error::io(staging.display().to_string(), e))?;
        Ok(StagedDir {
            target,
            staging,
            committed: false,
        })
    }

    /// Where files go before commit.
    pub fn path(&self) -> &Path {
        &self.staging
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.staging.join(name)
    }

    /// Replaces the target with the staged contents.
    pub fn commit(mut self) -> Result<PathBuf> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target).map_err(|e| Error::io(self.target.display().to_string(), e))?;
        }
        fs::rename(&self.staging, &self.target).map_err(|e| Error::io(self.target.display().to_string(), e))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for StagedDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_replaces_and_drop_discards() {
        let root = tempfile::tempdir().unwrap();
        let target = root.path().join("run");
        fs::create_dir_all(&target).unwrap();
        fs::write(target.join("stale.txt"), "old").unwrap();

        let staged = StagedDir::new(&target).unwrap();
        fs::write(staged.join("metrics.csv"), "x").unwrap();
        drop(staged);
        assert!(target.join("stale.txt").exists());
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);

        let staged = StagedDir::new(&target).unwrap();
        fs::write(staged.join("metrics.csv"), "x").unwrap();
        staged.commit().unwrap();
        assert!(target.join("metrics.csv").exists());
        assert!(!target.join("stale.txt").exists());
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);
    }
}
