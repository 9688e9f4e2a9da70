//! Crash-safe output: directories are built in a sibling staging directory and
//! renamed into place; single files go through a temporary sibling.

use std::path::{Path, PathBuf};

use crate::{CliError, Result};

pub struct Staging {
    dir: PathBuf,
    target: PathBuf,
    committed: bool,
}

fn sibling(target: &Path, tag: &str) -> PathBuf {
    let name = target.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    target.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

impl Staging {
    /// Refuses to replace a non-empty target.
    pub fn new(target: &Path) -> Result<Staging> {
        if target.exists() {
            let empty_dir = target.is_dir() && std::fs::read_dir(target).map_err(CliError::io(target))?.next().is_none();
            if !empty_dir {
                return Err(CliError::Usage(format!("output {} already exists", target.display())));
            }
        }
        let dir = sibling(target, "staging");
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(CliError::io(&dir))?;
        }
        std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        Ok(Staging { dir, target: target.to_path_buf(), committed: false })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn commit(mut self) -> Result<PathBuf> {
        if self.target.is_dir() {
            std::fs::remove_dir(&self.target).map_err(CliError::io(&self.target))?;
        }
        std::fs::rename(&self.dir, &self.target).map_err(CliError::io(&self.target))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = std::fs::remove_dir_all(&self.dir);
        }
    }
}

/// Writes `bytes` to `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |tmp| std::fs::write(tmp, bytes).map_err(CliError::io(tmp)))
}

/// Lets `write` fill a temporary sibling of `path`, then renames it into place.
pub fn write_atomic_with(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    let tmp = sibling(path, "tmp");
    let result = write(&tmp).and_then(|_| std::fs::rename(&tmp, path).map_err(CliError::io(path)));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Worker count: the explicit flag, else `LESIONFORGE_JOBS`, else one per CPU.
pub fn resolve_jobs(flag: Option<usize>) -> Result<usize> {
    if let Some(j) = flag {
        return if j == 0 { Err(CliError::Usage("--jobs must be >= 1".into())) } else { Ok(j) };
    }
    match std::env::var("LESIONFORGE_JOBS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(j) if j > 0 => Ok(j),
            _ => Err(CliError::Usage(format!("LESIONFORGE_JOBS={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` on a pool of `jobs` threads.
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// First error in index order, so failures are reported deterministically.
pub fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staging_commits_or_vanishes() {
        let root = tempfile::tempdir().unwrap();
        let target = root.path().join("out");
        {
            let s = Staging::new(&target).unwrap();
            std::fs::write(s.path().join("a"), b"x").unwrap();
        }
        assert!(!target.exists());
        assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);
        let s = Staging::new(&target).unwrap();
        std::fs::write(s.path().join("a"), b"x").unwrap();
        s.commit().unwrap();
        assert_eq!(std::fs::read(target.join("a")).unwrap(), b"x");
        assert!(Staging::new(&target).is_err());
    }

    #[test]
    fn atomic_file_write() {
        let root = tempfile::tempdir().unwrap();
        let p = root.path().join("sub/f.json");
        write_atomic(&p, b"{}").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"{}");
        assert_eq!(std::fs::read_dir(root.path().join("sub")).unwrap().count(), 1);
    }
}
