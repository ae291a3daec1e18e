//! Config-driven experiment runner behind the command line tool.
//!
//! Every run writes `results.jsonl`, `summary.csv`, `config.resolved.toml`
//! and `manifest.json` into the output directory; some subcommands add
//! further files (the `exact` golden file).

mod commands;
mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use config::*;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Simulate,
    Exact,
    Wilson,
    CenterTest,
    Couple,
    Corr,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Simulate,
        Subcommand::Exact,
        Subcommand::Wilson,
        Subcommand::CenterTest,
        Subcommand::Couple,
        Subcommand::Corr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Exact => "exact",
            Subcommand::Wilson => "wilson",
            Subcommand::CenterTest => "center-test",
            Subcommand::Couple => "couple",
            Subcommand::Corr => "corr",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config("subcommand", format!("unknown subcommand `{s}`")))
    }
}

/// Command line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cap_states: Option<u64>,
    /// Only recorded; the caller sizes the thread pool.
    pub threads: Option<usize>,
}

/// Records, summary rows and extra files produced by one subcommand.
#[derive(Debug, Default)]
pub struct Output {
    pub records: Vec<Value>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub extra: Vec<(String, Vec<u8>)>,
    /// Set when results were written but are not statistically usable.
    pub insufficient: Option<String>,
}

impl Output {
    fn new(header: &[&str]) -> Self {
        Output { header: header.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: Subcommand,
    /// SHA-256 of the config file as read.
    pub config_sha256: String,
    /// The config after overrides and defaults; parses back to itself.
    pub config: RunConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// SHA-256 of every written file except the manifest.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insufficient: Option<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub output: Output,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.output.insufficient.is_some() {
            4
        } else {
            0
        }
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Parse, resolve and execute a config without touching the file system.
pub fn execute(cmd: Subcommand, cfg: &mut RunConfig, ov: &Overrides) -> Result<Output> {
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(c) = ov.cap_states {
        cfg.cap_states = Some(c);
    }
    let geom = Arc::new(cfg.geometry.build()?);
    cfg.resolve(&geom);
    match cmd {
        Subcommand::Simulate => commands::simulate(cfg, &geom),
        Subcommand::Exact => commands::exact(cfg, &geom),
        Subcommand::Wilson => commands::wilson(cfg, &geom),
        Subcommand::CenterTest => commands::center_test(cfg, &geom),
        Subcommand::Couple => commands::couple(cfg, &geom),
        Subcommand::Corr => commands::corr(cfg, &geom),
    }
}

/// Run `cmd` on the config at `config_path` and write every artifact to `out_dir`.
pub fn run(cmd: Subcommand, config_path: &Path, out_dir: &Path, ov: &Overrides) -> Result<RunOutcome> {
    let text = fs::read_to_string(config_path).map_err(|e| Error::config("--config", format!("{}: {e}", config_path.display())))?;
    let mut cfg = parse_config(&text)?;
    let started = now_ms();
    let output = execute(cmd, &mut cfg, ov)?;

    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut jsonl = Vec::new();
    for r in &output.records {
        serde_json::to_writer(&mut jsonl, r).map_err(|e| Error::Serde(e.to_string()))?;
        jsonl.push(b'\n');
    }
    files.push(("results.jsonl".into(), jsonl));
    let mut w = csv::Writer::from_writer(Vec::new());
    let serr = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(&output.header).map_err(serr)?;
    for row in &output.rows {
        w.write_record(row).map_err(serr)?;
    }
    files.push(("summary.csv".into(), w.into_inner().map_err(|e| Error::Serde(e.to_string()))?));
    files.push(("config.resolved.toml".into(), to_toml(&cfg)?.into_bytes()));
    files.extend(output.extra.iter().cloned());

    let mut digests = BTreeMap::new();
    for (name, bytes) in &files {
        let p = out_dir.join(name);
        fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
        digests.insert(name.clone(), sha256_hex(bytes));
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: cmd,
        config_sha256: sha256_hex(text.as_bytes()),
        seed: cfg.seed,
        config: cfg,
        threads: ov.threads,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outputs: digests,
        insufficient: output.insufficient.clone(),
    };
    let p = out_dir.join("manifest.json");
    let bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Serde(e.to_string()))?;
    fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
    Ok(RunOutcome { manifest, output })
}
