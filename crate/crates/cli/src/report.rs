//! Output directory bookkeeping: artifacts, metric rows and the run
//! manifest.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_SCHEMA: &str = "pulseforge/manifest/v1";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub run_id: String,
    pub command: String,
    /// SHA-256 of the resolved configuration as canonical JSON.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub provenance: String,
    pub started: String,
    pub finished: String,
    pub status: String,
}

#[derive(Serialize)]
struct MetricRow<'a> {
    run_id: &'a str,
    time: String,
    metric: &'a str,
    value: f64,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// `pulseforge <version>` plus `git describe` of the working directory
/// when available.
pub fn provenance() -> String {
    let git = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--abbrev=12"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .filter(|s| !s.is_empty());
    match git {
        Some(g) => format!("pulseforge {} git:{g}", env!("CARGO_PKG_VERSION")),
        None => format!("pulseforge {} git:unknown", env!("CARGO_PKG_VERSION")),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical JSON form (object keys sorted).
pub fn config_hash(config: &serde_json::Value) -> String {
    sha256_hex(config.to_string().as_bytes())
}

/// One command invocation writing into an output directory.
pub struct Run {
    pub run_id: String,
    out_dir: PathBuf,
    command: String,
    config: serde_json::Value,
    config_hash: String,
    seeds: Vec<u64>,
    artifacts: Vec<String>,
    started: String,
    metrics: File,
}

impl Run {
    /// The run id is derived from the command, the configuration hash and
    /// the seeds, so identical invocations share it and their artifacts
    /// stay byte-identical.
    pub fn start(command: &str, config: &impl Serialize, seeds: Vec<u64>, out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating output directory {}", out_dir.display()))?;
        let config = serde_json::to_value(config)?;
        let config_hash = config_hash(&config);
        let id_source = format!("{command}|{config_hash}|{seeds:?}");
        let id_hash = sha256_hex(id_source.as_bytes());
        let run_id = format!("{command}-{}", &id_hash[..12]);
        let metrics = OpenOptions::new()
            .create(true)
            .append(true)
            .open(out_dir.join("metrics.jsonl"))
            .context("opening metrics.jsonl")?;
        Ok(Self {
            run_id,
            out_dir: out_dir.to_path_buf(),
            command: command.into(),
            config,
            config_hash,
            seeds,
            artifacts: vec!["metrics.jsonl".into()],
            started: now(),
            metrics,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Lists a file written outside the helpers below as an artifact.
    pub fn record(&mut self, name: &str) {
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.into());
        }
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.record(name);
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write_text(name, &text)
    }

    pub fn write_csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write_text(name, &String::from_utf8(bytes)?)
    }

    /// CSV with explicit column names, for rows whose width is only known
    /// at run time.
    pub fn write_table(&mut self, name: &str, header: &[String], rows: &[Vec<f64>]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write_text(name, &String::from_utf8(bytes)?)
    }

    /// Appends `{run_id, time, metric, value}` to `metrics.jsonl`.
    pub fn metric(&mut self, metric: &str, value: f64) -> Result<()> {
        let row = MetricRow { run_id: &self.run_id, time: now(), metric, value };
        writeln!(self.metrics, "{}", serde_json::to_string(&row)?)?;
        Ok(())
    }

    /// Writes the manifest under `manifests/`; an existing manifest is never
    /// overwritten.
    pub fn finish(mut self, status: &str) -> Result<PathBuf> {
        self.metrics.flush()?;
        let finished = now();
        let stamp: String = finished.chars().filter(|c| c.is_ascii_digit()).collect();
        let dir = self.out_dir.join("manifests");
        fs::create_dir_all(&dir)?;
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA,
            run_id: self.run_id.clone(),
            command: self.command.clone(),
            config_hash: self.config_hash.clone(),
            config: self.config.clone(),
            seeds: self.seeds.clone(),
            artifacts: std::mem::take(&mut self.artifacts),
            provenance: provenance(),
            started: self.started.clone(),
            finished,
            status: status.into(),
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        for n in 0.. {
            let name = if n == 0 { format!("{}-{stamp}.json", self.run_id) } else { format!("{}-{stamp}-{n}.json", self.run_id) };
            let path = dir.join(name);
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    f.write_all(text.as_bytes())?;
                    return Ok(path);
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e).with_context(|| format!("writing {}", path.display())),
            }
        }
        unreachable!("unbounded loop returns")
    }
}
