//! Output files. Each one carries the manifest: JSON files under a
//! `manifest` key, CSV files as a leading `# manifest: ` comment line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::Failure;

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(command: &'static str, config: &RunConfig) -> Self {
        Manifest {
            tool: "bergman-interp",
            version: bergman_interp::VERSION,
            command,
            config: config.clone(),
        }
    }

    fn line(&self) -> String {
        format!(
            "# manifest: {}\n",
            serde_json::to_string(self).expect("manifest serializes")
        )
    }
}

pub struct Writer {
    dir: PathBuf,
    manifest: Manifest,
    written: Vec<PathBuf>,
}

fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

impl Writer {
    pub fn new(dir: &Path, manifest: Manifest) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            manifest,
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// `{"manifest": …, "result": …}`.
    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<(), Failure> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            manifest: &'a Manifest,
            result: &'a T,
        }
        let mut text = serde_json::to_string_pretty(&Doc {
            manifest: &self.manifest,
            result,
        })
        .map_err(|e| Failure::Numeric(format!("result does not serialize: {e}")))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// `body` is CSV text with its header line.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), Failure> {
        let text = self.manifest.line() + body;
        self.put(name, text.as_bytes())
    }

    /// Rows serialized by the `csv` crate under `header`.
    pub fn csv_rows<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| Failure::Numeric(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Numeric(e.to_string()))?;
        self.csv(name, &String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Binary files have no comment syntax, so the manifest goes to a
    /// sibling `<name>.manifest.json`.
    pub fn binary(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        self.put(name, bytes)?;
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        self.put(&format!("{name}.manifest.json"), text.as_bytes())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
