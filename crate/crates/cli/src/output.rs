//! Output directories are filled in a staging directory next to the target
//! and renamed into place only once a command has produced everything.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

pub struct Staging {
    dir: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl Staging {
    /// Refuses targets that already hold files so that nothing is overwritten.
    pub fn new(target: &Path) -> Result<Self> {
        if target.exists() {
            let mut entries = fs::read_dir(target).with_context(|| format!("{} is not a directory", target.display()))?;
            if entries.next().is_some() {
                bail!("output directory {} is not empty", target.display());
            }
        }
        let name = target.file_name().context("output path has no final component")?.to_string_lossy();
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let dir = parent.join(format!(".{name}.staging-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, target: target.to_path_buf(), committed: false })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.path(name), contents).with_context(|| format!("writing {name}"))
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn csv(&self, name: &str, header: &[&str]) -> Result<csv::Writer<fs::File>> {
        let mut w = csv::Writer::from_path(self.path(name)).with_context(|| format!("creating {name}"))?;
        w.write_record(header)?;
        Ok(w)
    }

    pub fn commit(mut self) -> Result<PathBuf> {
        if self.target.exists() {
            fs::remove_dir(&self.target).with_context(|| format!("replacing empty {}", self.target.display()))?;
        }
        fs::rename(&self.dir, &self.target).with_context(|| format!("moving results to {}", self.target.display()))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

/// Formats floats with the shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x}")
}
