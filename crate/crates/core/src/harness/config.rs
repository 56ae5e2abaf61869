use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::SlotSchema;
use crate::error::{Error, Result};
use crate::her::HerConfig;
use crate::learner::{TrainConfig, WarmStartConfig};
use crate::replay::{PerConfig, SamplingMode};
use crate::simulator::{generate_kb, DialogueEnv, EnvConfig, GoalConfig};

/// Replay strategy: which relabelling generators run and how the pool samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "ER")]
    Er,
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "T-HER")]
    THer,
    #[serde(rename = "S-HER")]
    SHer,
    #[serde(rename = "T-HER+PER")]
    THerPer,
    #[serde(rename = "S-HER+PER")]
    SHerPer,
    #[serde(rename = "T+S-HER")]
    TSHer,
    #[serde(rename = "T+S-HER+PER")]
    TSHerPer,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Er,
        Strategy::Per,
        Strategy::THer,
        Strategy::SHer,
        Strategy::THerPer,
        Strategy::SHerPer,
        Strategy::TSHer,
        Strategy::TSHerPer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Er => "ER",
            Strategy::Per => "PER",
            Strategy::THer => "T-HER",
            Strategy::SHer => "S-HER",
            Strategy::THerPer => "T-HER+PER",
            Strategy::SHerPer => "S-HER+PER",
            Strategy::TSHer => "T+S-HER",
            Strategy::TSHerPer => "T+S-HER+PER",
        }
    }

    pub fn trimming(self) -> bool {
        matches!(
            self,
            Strategy::THer | Strategy::THerPer | Strategy::TSHer | Strategy::TSHerPer
        )
    }

    pub fn stitching(self) -> bool {
        matches!(
            self,
            Strategy::SHer | Strategy::SHerPer | Strategy::TSHer | Strategy::TSHerPer
        )
    }

    pub fn sampling(self) -> SamplingMode {
        match self {
            Strategy::Per | Strategy::THerPer | Strategy::SHerPer | Strategy::TSHerPer => {
                SamplingMode::Prioritized
            }
            _ => SamplingMode::Uniform,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == norm)
            .ok_or_else(|| {
                Error::Refused(format!(
                    "unknown strategy `{s}` (expected one of {})",
                    Strategy::ALL.map(Strategy::name).join(", ")
                ))
            })
    }
}

/// Which slot schema to run on: a built-in one or an inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaSource {
    Named(NamedSchema),
    Custom(SlotSchema),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedSchema {
    Desk,
    Full,
}

impl SchemaSource {
    pub fn build(&self) -> SlotSchema {
        match self {
            SchemaSource::Named(NamedSchema::Desk) => SlotSchema::desk(),
            SchemaSource::Named(NamedSchema::Full) => SlotSchema::full(),
            SchemaSource::Custom(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub epochs: usize,
    pub episodes_per_epoch: usize,
    pub n_runs: usize,
    /// Per-run seeds; when empty, run `i` uses `base_seed + i`.
    pub seeds: Vec<u64>,
    pub base_seed: u64,
    /// Rule-policy dialogues cloned before learning; 0 is a cold start.
    pub warm_start_episodes: usize,
    pub pool_capacity: usize,
    /// Greedy evaluation dialogues after each epoch (0 disables the column).
    pub eval_episodes: usize,
    pub schema: SchemaSource,
    pub kb_rows: usize,
    pub kb_seed: u64,
    pub env: EnvConfig,
    pub goals: GoalConfig,
    pub her: HerConfig,
    pub per: PerConfig,
    pub train: TrainConfig,
    pub warm: WarmStartConfig,
    /// Directory for line-delimited dumps of generated dialogues.
    pub dump_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Er,
            epochs: 200,
            episodes_per_epoch: 20,
            n_runs: 5,
            seeds: Vec::new(),
            base_seed: 1,
            warm_start_episodes: 100,
            pool_capacity: 100_000,
            eval_episodes: 0,
            schema: SchemaSource::Named(NamedSchema::Desk),
            kb_rows: 200,
            kb_seed: 7,
            env: EnvConfig::default(),
            goals: GoalConfig::default(),
            her: HerConfig::default(),
            per: PerConfig::default(),
            train: TrainConfig::default(),
            warm: WarmStartConfig::default(),
            dump_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Full scale: 1000 epochs of 100 dialogues on the 29-slot schema.
    pub fn paper_scale(mut self) -> Self {
        self.epochs = 1000;
        self.episodes_per_epoch = 100;
        self.schema = SchemaSource::Named(NamedSchema::Full);
        self.kb_rows = 1000;
        self.pool_capacity = 100_000;
        self
    }

    /// No warm start and a small pool.
    pub fn cold_start(mut self) -> Self {
        self.warm_start_episodes = 0;
        self.pool_capacity = 1000;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn seed(&self, run: usize) -> u64 {
        self.seeds
            .get(run)
            .copied()
            .unwrap_or(self.base_seed.wrapping_add(run as u64))
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.episodes_per_epoch == 0 || self.n_runs == 0 {
            return Err(Error::Config(
                "epochs, episodes_per_epoch and n_runs must be at least 1".into(),
            ));
        }
        if !self.seeds.is_empty() && self.seeds.len() < self.n_runs {
            return Err(Error::Config(format!(
                "{} seeds given for {} runs",
                self.seeds.len(),
                self.n_runs
            )));
        }
        if self.pool_capacity < self.train.batch_size {
            return Err(Error::Config("pool_capacity below batch_size".into()));
        }
        if self.kb_rows == 0 {
            return Err(Error::Config("kb_rows must be at least 1".into()));
        }
        self.train.validate()?;
        self.per.validate()?;
        let schema = self.schema.build();
        let max_goal = schema.informable_slots().count() + schema.requestable_slots().count();
        self.her.validate(max_goal)?;
        self.env.validate(&schema)?;
        self.goals.validate(&schema)?;
        Ok(())
    }

    /// Everything that defines the environment; comparisons require these to match.
    pub fn environment_key(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Key<'a> {
            schema: &'a SchemaSource,
            kb_rows: usize,
            kb_seed: u64,
            env: &'a EnvConfig,
            goals: &'a GoalConfig,
        }
        Ok(serde_json::to_string(&Key {
            schema: &self.schema,
            kb_rows: self.kb_rows,
            kb_seed: self.kb_seed,
            env: &self.env,
            goals: &self.goals,
        })?)
    }

    pub fn build_env(&self) -> Result<DialogueEnv> {
        let schema = Arc::new(self.schema.build());
        let kb = Arc::new(generate_kb(&schema, self.kb_rows, self.kb_seed)?);
        DialogueEnv::new(schema, kb, self.env.clone(), self.goals.clone())
    }
}
