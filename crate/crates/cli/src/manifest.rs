use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use gridguard::harness::ScenarioConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one subcommand run, written last into its output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub inputs: Vec<String>,
    pub output_dir: String,
    pub stage_seconds: BTreeMap<String, f64>,
    /// File name relative to the output directory, to sha256 hex digest.
    pub artifacts: BTreeMap<String, String>,
}

pub struct Run {
    out: PathBuf,
    manifest: RunManifest,
    clock: Instant,
}

impl Run {
    pub fn start(command: &str, out: &Path, config: &ScenarioConfig, inputs: &[&Path]) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
        Ok(Run {
            out: out.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                seed: config.seed,
                config: config.clone(),
                inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
                output_dir: out.display().to_string(),
                stage_seconds: BTreeMap::new(),
                artifacts: BTreeMap::new(),
            },
            clock: Instant::now(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Closes the current stage.
    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        *self.manifest.stage_seconds.entry(stage.to_string()).or_default() += (now - self.clock).as_secs_f64();
        self.clock = now;
    }

    pub fn add_seconds(&mut self, stages: &BTreeMap<String, f64>) {
        for (k, v) in stages {
            self.manifest.stage_seconds.insert(k.clone(), *v);
        }
    }

    /// Checksums every file in the output directory and writes the manifest.
    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.artifacts = checksum_dir(&self.out)?;
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(self.out.join(MANIFEST_FILE), json + "\n")?;
        Ok(self.manifest)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn checksum_dir(root: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(root).unwrap_or(&path).to_string_lossy().replace('\\', "/");
            if rel != MANIFEST_FILE {
                out.insert(rel, sha256_file(&path)?);
            }
        }
    }
    Ok(out)
}
