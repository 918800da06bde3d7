//! Scenario runner behind the `bcj` binary.
//!
//! A scenario is a JSON object with a `command` and a command-specific payload.
//! Every run writes CSV tables (each with a `.meta.json` sidecar carrying the
//! config hash), optional JSON reports, and a `manifest.json` listing them.

mod commands;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Forward,
    Response,
    Invert,
    Roundtrip,
    Moments,
    Toda,
    Weyl,
    String,
    Contjacobi,
    Heat,
    Graph,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Response => "response",
            Command::Invert => "invert",
            Command::Roundtrip => "roundtrip",
            Command::Moments => "moments",
            Command::Toda => "toda",
            Command::Weyl => "weyl",
            Command::String => "string",
            Command::Contjacobi => "contjacobi",
            Command::Heat => "heat",
            Command::Graph => "graph",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub command: Command,
    /// Seed for random specs and for the verification suite.
    pub seed: Option<u64>,
    /// Restricts which checks count towards the verdict (criteria for `verify`).
    pub filter: Option<String>,
    pub out: Option<PathBuf>,
    /// Everything else in the config object.
    pub payload: Map<String, Value>,
}

impl ScenarioConfig {
    /// Splits the shared keys off a config object. `command` may come from the
    /// object or from `default_command`; if both are present they must agree.
    pub fn from_value(value: Value, default_command: Option<Command>) -> Result<Self> {
        let Value::Object(mut payload) = value else {
            bail!("config must be a JSON object");
        };
        let from_file = match payload.remove("command") {
            Some(v) => Some(serde_json::from_value::<Command>(v).context("unknown command")?),
            None => None,
        };
        let command = match (from_file, default_command) {
            (Some(a), Some(b)) if a != b => bail!("config is for `{a}` but `{b}` was requested"),
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => bail!("config has no `command`"),
        };
        let seed = match payload.remove("seed") {
            Some(v) => Some(serde_json::from_value(v).context("`seed` must be a non-negative integer")?),
            None => None,
        };
        let filter = match payload.remove("filter") {
            Some(v) => Some(serde_json::from_value(v).context("`filter` must be a string")?),
            None => None,
        };
        let out = match payload.remove("out") {
            Some(v) => Some(serde_json::from_value(v).context("`out` must be a path")?),
            None => None,
        };
        Ok(Self {
            command,
            seed,
            filter,
            out,
            payload,
        })
    }

    pub fn from_file(path: &Path, default_command: Option<Command>) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Self::from_value(value, default_command)
    }

    /// The effective config as a single object with sorted keys; `out` is not part of it.
    pub fn canonical(&self) -> Value {
        let mut m = self.payload.clone();
        m.insert("command".into(), Value::String(self.command.name().into()));
        if let Some(s) = self.seed {
            m.insert("seed".into(), s.into());
        }
        if let Some(f) = &self.filter {
            m.insert("filter".into(), f.clone().into());
        }
        Value::Object(m)
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.canonical()).expect("JSON values serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: Command,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub summary: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    file: &'a str,
    command: Command,
    config_sha256: &'a str,
    seed: Option<u64>,
    columns: &'a [&'a str],
    rows: usize,
    generator: &'a str,
}

/// Collects output files, summary scalars and checks for one run.
pub struct Artifacts {
    dir: PathBuf,
    command: Command,
    hash: String,
    seed: Option<u64>,
    files: Vec<String>,
    summary: BTreeMap<String, Value>,
    checks: Vec<Check>,
}

const GENERATOR: &str = concat!("bcj ", env!("CARGO_PKG_VERSION"));

/// Shortest decimal that parses back to the same `f64`; exponent form outside `[1e−5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Artifacts {
    fn new(dir: PathBuf, cfg: &ScenarioConfig) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            command: cfg.command,
            hash: cfg.hash(),
            seed: cfg.seed,
            files: Vec::new(),
            summary: BTreeMap::new(),
            checks: Vec::new(),
        })
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let file = format!("{name}.csv");
        let path = self.dir.join(&file);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(columns)?;
        for r in rows {
            if r.len() != columns.len() {
                bail!("{file}: row has {} fields, header has {}", r.len(), columns.len());
            }
            w.write_record(r)?;
        }
        w.flush()?;
        let meta = Sidecar {
            file: &file,
            command: self.command,
            config_sha256: &self.hash,
            seed: self.seed,
            columns,
            rows: rows.len(),
            generator: GENERATOR,
        };
        let meta_file = format!("{name}.meta.json");
        fs::write(self.dir.join(&meta_file), serde_json::to_string_pretty(&meta)? + "\n")?;
        self.files.push(file);
        self.files.push(meta_file);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let file = format!("{name}.json");
        fs::write(self.dir.join(&file), serde_json::to_string_pretty(value)? + "\n")?;
        self.files.push(file);
        Ok(())
    }

    pub fn scalar(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }

    /// Records `value ≤ limit`; NaN fails.
    pub fn check_le(&mut self, name: &str, value: f64, limit: f64) {
        self.check(name, value, limit, value <= limit);
    }

    pub fn check(&mut self, name: &str, value: f64, limit: f64, passed: bool) {
        self.checks.push(Check {
            name: name.into(),
            value,
            limit,
            passed,
        });
    }

    fn finish(mut self, filter: Option<&str>) -> Result<Manifest> {
        if let (Some(f), true) = (filter, self.command != Command::Verify) {
            self.checks.retain(|c| c.name.contains(f));
        }
        self.files.push(MANIFEST_FILE.into());
        let m = Manifest {
            command: self.command,
            config_sha256: self.hash,
            seed: self.seed,
            out_dir: self.dir,
            passed: self.checks.iter().all(|c| c.passed),
            files: self.files,
            summary: self.summary,
            checks: self.checks,
        };
        fs::write(m.out_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(m)
    }
}

/// Runs a scenario, writing into `out` (or the config's `out`, or `./out`).
pub fn run(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<Manifest> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut art = Artifacts::new(dir, cfg)?;
    commands::dispatch(cfg, &mut art).with_context(|| format!("{} failed", cfg.command))?;
    art.finish(cfg.filter.as_deref())
}
