use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use escobar_lab::harness::write_csv;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output directory plus the provenance stamped on every file.
pub struct Output {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;
        Ok(Self {
            dir: config.out.clone(),
            hash: config.hash(),
            written: Vec::new(),
        })
    }

    pub fn header(&self) -> String {
        format!("escobar-lab {VERSION} config={}", self.hash)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&mut self, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok((BufWriter::new(file), path))
    }

    /// CSV with a `# escobar-lab <version> config=<hash>` first line.
    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let header = self.header();
        let (w, path) = self.create(name)?;
        write_csv(w, Some(&header), rows)?;
        Ok(path)
    }

    /// JSON object `{artifact, version, config_hash, result}`.
    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<PathBuf, CliError> {
        let value = json!({
            "artifact": "escobar-lab",
            "version": VERSION,
            "config_hash": self.hash,
            "result": result,
        });
        let (mut w, path) = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &value).map_err(|e| CliError::Numerical(e.into()))?;
        writeln!(w).map_err(|e| CliError::io(&path, e))?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
