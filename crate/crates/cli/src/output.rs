//! Results, atomic writes and the content-addressed cache.
//!
//! A cache entry is a directory named by the SHA-256 of the canonical
//! settings, holding `config.txt`, `stdout` and one file per artifact.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    /// File name inside a cache entry.
    pub name: &'static str,
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub artifacts: Vec<Artifact>,
}

/// Writes through a temporary file in the target directory and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path.display(), e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path.display(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path.display(), e.error))?;
    Ok(())
}

pub fn emit(outcome: &Outcome) -> Result<(), CliError> {
    for a in &outcome.artifacts {
        write_atomic(&a.path, &a.bytes)?;
    }
    print!("{}", outcome.stdout);
    Ok(())
}

pub struct Cache {
    root: PathBuf,
}

impl Cache {
    /// The cache under `BIFCURRENTS_CACHE`, if set.
    pub fn from_env() -> Option<Cache> {
        std::env::var_os("BIFCURRENTS_CACHE").filter(|v| !v.is_empty()).map(|v| Cache { root: PathBuf::from(v) })
    }

    fn entry(&self, key: &str) -> PathBuf {
        self.root.join(key)
    }

    /// The cached outcome for `key`, retargeted to `paths` (artifact name to
    /// requested output path). Incomplete entries count as misses.
    pub fn load(&self, key: &str, paths: &[(&'static str, PathBuf)]) -> Option<Outcome> {
        let dir = self.entry(key);
        let stdout = std::fs::read_to_string(dir.join("stdout")).ok()?;
        let mut artifacts = Vec::new();
        for (name, path) in paths {
            let bytes = std::fs::read(dir.join(name)).ok()?;
            artifacts.push(Artifact { name, path: path.clone(), bytes });
        }
        Some(Outcome { stdout, artifacts })
    }

    /// Stores an outcome; `stdout` is written last and marks the entry complete.
    pub fn store(&self, key: &str, canonical: &str, outcome: &Outcome) -> Result<(), CliError> {
        let dir = self.entry(key);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
        write_atomic(&dir.join("config.txt"), canonical.as_bytes())?;
        for a in &outcome.artifacts {
            write_atomic(&dir.join(a.name), &a.bytes)?;
        }
        write_atomic(&dir.join("stdout"), outcome.stdout.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache { root: dir.path().join("cache") };
        let out = Outcome {
            stdout: "total 0.5\n".into(),
            artifacts: vec![Artifact { name: "out", path: "ignored".into(), bytes: b"data".to_vec() }],
        };
        assert!(cache.load("k", &[("out", "x".into())]).is_none());
        cache.store("k", "command = ddc\n", &out).unwrap();
        let back = cache.load("k", &[("out", "x".into())]).unwrap();
        assert_eq!(back.stdout, out.stdout);
        assert_eq!(back.artifacts[0].bytes, b"data");
        assert_eq!(back.artifacts[0].path, PathBuf::from("x"));
    }
}
