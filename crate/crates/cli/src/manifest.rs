use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub ms: f64,
}

/// Written as `<command>.manifest.json` in the output directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: Config,
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 of each input file, keyed by path as given.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub timings: Vec<Timing>,
    pub results: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        let seeds = BTreeMap::from([
            ("heuristic".to_owned(), config.heuristic.rng_seed),
            ("bench".to_owned(), config.bench.seed),
            ("train".to_owned(), config.train.seed),
        ]);
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            argv: std::env::args().collect(),
            config: config.clone(),
            seeds,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings: Vec::new(),
            results: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push(Timing { stage: stage.to_owned(), ms: t.elapsed().as_secs_f64() * 1e3 });
        out
    }

    /// Write `bytes` to `dir/name` and record its checksum.
    pub fn output(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        std::fs::write(dir.join(name), bytes)?;
        self.outputs.insert(name.to_owned(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join(format!("{}.manifest.json", self.command)), text + "\n")
    }
}
