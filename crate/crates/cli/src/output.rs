use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Files written by one command. Each file lands atomically (temp file plus
/// rename); if the command fails, everything it already wrote is removed.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        if !dir.is_dir() {
            anyhow::bail!("output path {} is not a directory", dir.display());
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("cannot create a temporary file in {}", self.dir.display()))?;
        tmp.write_all(contents.as_bytes())
            .and_then(|_| tmp.as_file().sync_all())
            .with_context(|| format!("cannot write {}", path.display()))?;
        tmp.persist(&path)
            .with_context(|| format!("cannot move output into place at {}", path.display()))?;
        self.written.push(path.clone());
        println!("wrote {}", path.display());
        Ok(path)
    }

    /// Keeps the outputs; call once the command has succeeded.
    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}
