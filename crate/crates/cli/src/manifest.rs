use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct FileEntry {
    path: PathBuf,
    sha256: String,
}

#[derive(Serialize)]
struct Document<'a> {
    command: &'a str,
    version: &'static str,
    seed: u64,
    parameters: &'a Value,
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
    details: &'a Value,
    wall_time_s: f64,
}

/// Record of one invocation: parameters, seeds, files touched and timing.
pub struct Manifest {
    command: &'static str,
    seed: u64,
    started: Instant,
    pub parameters: Value,
    pub details: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

fn checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {} for its checksum", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Self {
            command,
            seed,
            started: Instant::now(),
            parameters: Value::Object(Default::default()),
            details: Value::Object(Default::default()),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters[key] = serde_json::to_value(value).unwrap_or(Value::Null);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details[key] = serde_json::to_value(value).unwrap_or(Value::Null);
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// The main output; the default manifest path is derived from it.
    pub fn primary(&mut self, path: &Path) {
        self.outputs.insert(0, path.to_path_buf());
    }

    /// Writes the manifest to `explicit`, else next to the first output file,
    /// else to standard error.
    pub fn finish(self, explicit: Option<&Path>) -> Result<()> {
        let entries = |paths: &[PathBuf]| -> Result<Vec<FileEntry>> {
            paths
                .iter()
                .map(|p| {
                    Ok(FileEntry {
                        path: p.clone(),
                        sha256: checksum(p)?,
                    })
                })
                .collect()
        };
        let doc = Document {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            parameters: &self.parameters,
            inputs: entries(&self.inputs)?,
            outputs: entries(&self.outputs)?,
            details: &self.details,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        let target = explicit.map(Path::to_path_buf).or_else(|| {
            self.outputs.first().map(|p| {
                let mut name = p.as_os_str().to_owned();
                name.push(".manifest.json");
                PathBuf::from(name)
            })
        });
        match target {
            Some(path) => std::fs::write(&path, text).with_context(|| format!("writing manifest {}", path.display())),
            None => {
                std::io::stderr().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}
