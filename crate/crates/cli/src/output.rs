//! Atomic file output and run manifests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Writes `contents` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub residuals: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: "clockdil",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed: config.seed,
            config: config.clone(),
            residuals: BTreeMap::new(),
            notes: vec![],
            outputs: vec![],
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn residual(&mut self, key: &str, value: f64) {
        self.residuals.insert(key.into(), value);
    }

    pub fn timing(&mut self, key: &str, since: std::time::Instant) {
        self.timings_ms.insert(key.into(), since.elapsed().as_secs_f64() * 1e3);
    }

    /// Writes `contents` under the output directory and records the path.
    pub fn emit(&mut self, dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        write_atomic(&path, contents)?;
        log::info!("wrote {}", path.display());
        self.outputs.push(path.clone());
        Ok(path)
    }

    pub fn finish(mut self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        self.outputs.push(path.clone());
        let json = serde_json::to_string_pretty(&self)?;
        write_atomic(&path, json.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        let leftovers = std::fs::read_dir(p.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }
}
