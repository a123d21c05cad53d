use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub outputs: Vec<PathBuf>,
}

/// Collects output files for one run and writes the manifest beside them.
pub struct Sink {
    dir: Option<PathBuf>,
    manifest: RunManifest,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, subcommand: &str, flags: Value, seed: Option<u64>) -> Self {
        Sink {
            dir,
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                flags,
                seed,
                version: env!("CARGO_PKG_VERSION"),
                outputs: Vec::new(),
            },
        }
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    /// Writes `name` under the output directory; no-op without one.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            write_file(&path, contents)?;
            self.manifest.outputs.push(path);
        }
        Ok(())
    }

    /// Records a file written elsewhere (e.g. an explicit `--trace`).
    pub fn record(&mut self, path: &Path) {
        self.manifest.outputs.push(path.to_path_buf());
    }

    pub fn finish(self) -> Result<()> {
        if let Some(dir) = &self.dir {
            let text = serde_json::to_string_pretty(&self.manifest)?;
            write_file(&dir.join(format!("{}.manifest.json", self.manifest.subcommand)), &text)?;
        }
        Ok(())
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -16.18995794, 1.0 / 3.0, 6.02214076e23, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }
}
