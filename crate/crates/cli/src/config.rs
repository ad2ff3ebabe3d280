//! Run configuration. Values come from built-in defaults, then the TOML file
//! given with `--config`, then command-line flags.

use std::path::Path;

use kgrat_core::bench::BenchConfig;
use kgrat_core::synth::SynthConfig;
use kgrat_core::trainer::TrainConfig;
use kgrat_core::HeuristicConfig;
use kgrat_gateway::GatewayConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Offline,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSection {
    pub max_paths: usize,
    pub max_depth: usize,
    pub pair_budget: usize,
    pub zero_heuristic: bool,
}

impl Default for SearchSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        SearchSection {
            max_paths: s.max_paths,
            max_depth: s.max_depth,
            pair_budget: s.pair_budget,
            zero_heuristic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    pub backend: BackendKind,
    pub max_in_flight: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection { backend: BackendKind::Offline, max_in_flight: SynthConfig::default().max_in_flight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradCheckSection {
    pub seeds: u64,
    pub samples: usize,
    pub eps: f64,
}

impl Default for GradCheckSection {
    fn default() -> Self {
        GradCheckSection { seeds: 20, samples: 40, eps: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// When set, replaces the heuristic, bench and train seeds.
    pub seed: Option<u64>,
    pub jobs: usize,
    pub heuristic: HeuristicConfig,
    pub search: SearchSection,
    pub synth: SynthSection,
    pub gateway: GatewayConfig,
    pub train: TrainConfig,
    pub grad_check: GradCheckSection,
    pub bench: BenchConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: None,
            jobs: 1,
            heuristic: HeuristicConfig::default(),
            search: SearchSection::default(),
            synth: SynthSection::default(),
            gateway: GatewayConfig::default(),
            train: TrainConfig::default(),
            grad_check: GradCheckSection::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, String> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Push the shared seed, if any, into every section.
    pub fn apply_seed(&mut self) {
        if let Some(s) = self.seed {
            self.heuristic.rng_seed = s;
            self.bench.seed = s;
            self.bench.heuristic.rng_seed = s;
            self.train.seed = s;
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            heuristic: self.heuristic,
            max_paths: self.search.max_paths,
            max_depth: self.search.max_depth,
            pair_budget: self.search.pair_budget,
            zero_heuristic: self.search.zero_heuristic,
            jobs: self.jobs.max(1),
            max_in_flight: self.synth.max_in_flight,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.heuristic.validate()?;
        if self.search.max_paths == 0 || self.search.max_depth == 0 {
            return Err("search.max_paths and search.max_depth must be >= 1".into());
        }
        self.train.validate().map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
