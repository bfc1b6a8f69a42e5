//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "surfdraw";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the JSON/CSV output layouts.
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: String, data: &[u8]) -> Self {
        FileDigest { path, sha256: hex::encode(Sha256::digest(data)), bytes: data.len() as u64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub format_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    /// Input files with absolute or invocation-relative paths.
    pub inputs: Vec<FileDigest>,
    pub stages: Vec<StageTiming>,
    /// Emitted files, relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub succeeded: bool,
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::input(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(&path, e))
    }

    /// Outputs whose current contents no longer match the recorded hash.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|d| match fs::read(dir.join(&d.path)) {
                Ok(data) => FileDigest::of(d.path.clone(), &data) != **d,
                Err(_) => true,
            })
            .map(|d| d.path.clone())
            .collect()
    }
}

pub fn hash_inputs(paths: &[PathBuf]) -> CliResult<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            let data = fs::read(p).map_err(|e| CliError::input(p, e))?;
            Ok(FileDigest::of(p.display().to_string(), &data))
        })
        .collect()
}

fn write_atomic(path: &Path, data: &[u8]) -> CliResult<()> {
    let err = |source| CliError::Output { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, data).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

/// Collects files written during a run, their hashes and stage timings.
pub struct RunRecorder {
    root: PathBuf,
    command: String,
    config: serde_json::Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    stages: Vec<StageTiming>,
    failures: Vec<String>,
}

impl RunRecorder {
    pub fn new(root: PathBuf, command: &str, config: serde_json::Value, inputs: Vec<FileDigest>) -> Self {
        RunRecorder {
            root,
            command: command.into(),
            config,
            inputs,
            outputs: Vec::new(),
            stages: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, data: &[u8]) -> CliResult<()> {
        write_atomic(&self.root.join(rel), data)?;
        self.outputs.retain(|d| d.path != rel);
        self.outputs.push(FileDigest::of(rel.into(), data));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> CliResult<()> {
        let mut data = serde_json::to_vec_pretty(value).map_err(|e| CliError::Stage(e.to_string()))?;
        data.push(b'\n');
        self.write(rel, &data)
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let t0 = Instant::now();
        let out = f(self);
        self.stages.push(StageTiming { stage: name.into(), duration_s: t0.elapsed().as_secs_f64() });
        out
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.failures.push(msg.into());
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    /// Writes the manifest last and returns it.
    pub fn finish(self) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            tool: TOOL.into(),
            version: TOOL_VERSION.into(),
            format_version: FORMAT_VERSION,
            command: self.command,
            config: self.config,
            inputs: self.inputs,
            stages: self.stages,
            outputs: self.outputs,
            succeeded: self.failures.is_empty(),
            failures: self.failures,
        };
        let mut data = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Stage(e.to_string()))?;
        data.push(b'\n');
        write_atomic(&self.root.join(MANIFEST_FILE), &data)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_hashes_verify() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = RunRecorder::new(dir.path().into(), "map", serde_json::json!({}), Vec::new());
        r.write("a/b.txt", b"hello").unwrap();
        r.stage("s", |r| r.write("c.txt", b"x").unwrap());
        let m = r.finish().unwrap();
        assert_eq!(m.outputs.len(), 2);
        assert_eq!(m.outputs[0].sha256, "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
        let back = RunManifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        assert!(back.verify(dir.path()).is_empty());
        fs::write(dir.path().join("c.txt"), b"y").unwrap();
        assert_eq!(back.verify(dir.path()), vec!["c.txt".to_string()]);
        assert!(!dir.path().join("manifest.json.tmp").exists());
    }
}
