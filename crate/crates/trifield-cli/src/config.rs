//! Run configuration: line-oriented `key=value` files plus command-line
//! overrides, resolved into one fully explicit record that is also the
//! manifest payload.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Fully resolved settings of a run. Every run writes this out as its
/// manifest together with a content hash, so identical manifests imply
/// byte-identical outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub seed: u64,
    pub chains: usize,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub samples: usize,
    pub eps0: f64,
    pub eps1: f64,
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub target_rel_err: f64,
    pub fd_step: Option<f64>,
    pub target_eps2: f64,
    pub offset_strategy: String,
    pub exact: bool,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            command: String::new(),
            n: 4,
            n_list: Vec::new(),
            s0: 2.0,
            s1: 2.0,
            s2: 2.0,
            seed: 1,
            chains: 4,
            burn_in: None,
            thin: None,
            samples: 100,
            eps0: 0.5,
            eps1: 0.5,
            w0: 1.0,
            w1: 1.0,
            w2: 1.0,
            target_rel_err: 0.05,
            fd_step: None,
            target_eps2: 0.15,
            offset_strategy: "fixed-zero".into(),
            exact: false,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("bad value {value:?} for key {key}")))
}

impl RunConfig {
    /// Applies one `key=value` assignment.
    pub fn assign(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "n" => self.n = parse(key, value)?,
            "n_list" => {
                self.n_list = value
                    .split(',')
                    .map(|p| parse::<usize>(key, p))
                    .collect::<Result<_, _>>()?
            }
            "s0" => self.s0 = parse(key, value)?,
            "s1" => self.s1 = parse(key, value)?,
            "s2" => self.s2 = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "chains" => self.chains = parse(key, value)?,
            "burn_in" => self.burn_in = Some(parse(key, value)?),
            "thin" => self.thin = Some(parse(key, value)?),
            "samples" => self.samples = parse(key, value)?,
            "eps0" => self.eps0 = parse(key, value)?,
            "eps1" => self.eps1 = parse(key, value)?,
            "w0" => self.w0 = parse(key, value)?,
            "w1" => self.w1 = parse(key, value)?,
            "w2" => self.w2 = parse(key, value)?,
            "target_rel_err" => self.target_rel_err = parse(key, value)?,
            "fd_step" => self.fd_step = Some(parse(key, value)?),
            "target_eps2" => self.target_eps2 = parse(key, value)?,
            "offset_strategy" => self.offset_strategy = value.trim().to_string(),
            "exact" => self.exact = parse(key, value)?,
            other => return Err(ConfigError(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Loads assignments from a `key=value` file (blank lines and `#`
    /// comments ignored).
    pub fn load_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("expected key=value, got {line:?}")))?;
            self.assign(key.trim(), value)?;
        }
        Ok(())
    }

    /// Canonical serialization: sorted `key=value` lines. The manifest
    /// hash is the SHA-256 of exactly this text.
    pub fn canonical(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("command", self.command.clone());
        map.insert("n", self.n.to_string());
        map.insert(
            "n_list",
            self.n_list
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert("s0", format!("{:.17e}", self.s0));
        map.insert("s1", format!("{:.17e}", self.s1));
        map.insert("s2", format!("{:.17e}", self.s2));
        map.insert("seed", self.seed.to_string());
        map.insert("chains", self.chains.to_string());
        map.insert(
            "burn_in",
            self.burn_in.map(|v| v.to_string()).unwrap_or_default(),
        );
        map.insert("thin", self.thin.map(|v| v.to_string()).unwrap_or_default());
        map.insert("samples", self.samples.to_string());
        map.insert("eps0", format!("{:.17e}", self.eps0));
        map.insert("eps1", format!("{:.17e}", self.eps1));
        map.insert("w0", format!("{:.17e}", self.w0));
        map.insert("w1", format!("{:.17e}", self.w1));
        map.insert("w2", format!("{:.17e}", self.w2));
        map.insert("target_rel_err", format!("{:.17e}", self.target_rel_err));
        map.insert(
            "fd_step",
            self.fd_step.map(|v| format!("{v:.17e}")).unwrap_or_default(),
        );
        map.insert("target_eps2", format!("{:.17e}", self.target_eps2));
        map.insert("offset_strategy", self.offset_strategy.clone());
        map.insert("exact", self.exact.to_string());
        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
