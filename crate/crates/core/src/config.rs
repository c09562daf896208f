//! Experiment configuration: a versioned TOML document plus dotted-key
//! overrides from the command line.
//!
//! ```toml
//! schema_version = 1
//! seeds = [0, 1, 2]
//! strategies = ["naive", "er-rs", "er-cb", "er-fa"]
//! output_dir = "runs/bimodal"
//!
//! [dataset]
//! kind = "synthetic"
//! classes = 20
//! per_class = 300
//! dim = 16
//! spread = 1.0
//!
//! [generator]
//! kind = "sampling"
//! experiences = 100
//! experience_size = 200
//! first_occurrence = { kind = "geometric", p = 0.2 }
//! repetition = { mode = "bimodal", fraction_infrequent = 0.3, p_low = 0.1, p_high = 1.0 }
//!
//! [buffer]
//! size = 200
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::buffer::StoragePolicy;
use crate::dataset::SyntheticSpec;
use crate::distributions::PmfKind;
use crate::error::{Error, Result};
use crate::learner::{Activation, TrainConfig};
use crate::sampling::BimodalSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "CIR_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Naive,
    Replay(StoragePolicy),
}

impl Strategy {
    pub fn policy(self) -> Option<StoragePolicy> {
        match self {
            Strategy::Naive => None,
            Strategy::Replay(p) => Some(p),
        }
    }

    /// Parses a strategy name; bare `er` takes `default_policy`.
    pub fn parse(s: &str, default_policy: StoragePolicy) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "naive" => Ok(Strategy::Naive),
            "er" => Ok(Strategy::Replay(default_policy)),
            _ => match s.strip_prefix("er-") {
                Some(p) => Ok(Strategy::Replay(StoragePolicy::from_str(p)?)),
                None => Err(Error::config(format!(
                    "unknown strategy {s:?} (expected naive, er, er-rs, er-cb or er-fa)"
                ))),
            },
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Naive => f.write_str("naive"),
            Strategy::Replay(p) => write!(f, "er-{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seeds: Vec<u64>,
    pub strategies: Vec<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub buffer: BufferConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub checkpoints: CheckpointConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/default")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic {
        classes: usize,
        per_class: usize,
        dim: usize,
        spread: f64,
        #[serde(default = "one")]
        separation: f64,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        /// The dataset is shared by every seed of the grid.
        #[serde(default)]
        seed: u64,
    },
    /// Header-less `label,feature...` files.
    Csv {
        train: PathBuf,
        test: PathBuf,
        #[serde(default)]
        classes: Option<usize>,
    },
}

fn one() -> f64 {
    1.0
}

fn default_test_fraction() -> f64 {
    0.2
}

impl DatasetConfig {
    pub fn synthetic_spec(&self) -> Option<SyntheticSpec> {
        match *self {
            DatasetConfig::Synthetic {
                classes,
                per_class,
                dim,
                spread,
                separation,
                test_fraction,
                ..
            } => Some(SyntheticSpec {
                classes,
                per_class,
                dim,
                spread,
                separation,
                test_fraction,
            }),
            DatasetConfig::Csv { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorConfig {
    Slot {
        experiences: usize,
        slots_per_experience: usize,
    },
    Sampling {
        experiences: usize,
        experience_size: usize,
        first_occurrence: PmfKind,
        repetition: RepetitionConfig,
    },
}

impl GeneratorConfig {
    pub fn experiences(&self) -> usize {
        match *self {
            GeneratorConfig::Slot { experiences, .. }
            | GeneratorConfig::Sampling { experiences, .. } => experiences,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum RepetitionConfig {
    Constant {
        value: f64,
    },
    List {
        values: Vec<f64>,
    },
    Bimodal {
        fraction_infrequent: f64,
        p_low: f64,
        p_high: f64,
        /// Defaults to a value derived from each run seed.
        #[serde(default)]
        assignment_seed: Option<u64>,
    },
}

impl RepetitionConfig {
    pub fn bimodal(&self, derived_seed: u64) -> Option<BimodalSpec> {
        match *self {
            RepetitionConfig::Bimodal {
                fraction_infrequent,
                p_low,
                p_high,
                assignment_seed,
            } => Some(BimodalSpec {
                fraction_infrequent,
                p_low,
                p_high,
                assignment_seed: assignment_seed.unwrap_or(derived_seed),
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferConfig {
    #[serde(default = "default_buffer_size")]
    pub size: usize,
    /// Policy used by the bare `er` strategy.
    #[serde(default = "default_policy")]
    pub policy: StoragePolicy,
}

fn default_buffer_size() -> usize {
    200
}

fn default_policy() -> StoragePolicy {
    StoragePolicy::Reservoir
}

impl Default for BufferConfig {
    fn default() -> Self {
        Self {
            size: default_buffer_size(),
            policy: default_policy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub replay_mix: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            lr: t.lr,
            epochs: t.epochs_per_experience,
            batch_size: t.batch_size,
            replay_mix: t.replay_mix,
            hidden: vec![64],
            activation: Activation::Relu,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs_per_experience: self.epochs,
            batch_size: self.batch_size,
            replay_mix: self.replay_mix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckpointConfig {
    /// Save a checkpoint every `interval` experiences; 0 keeps only the
    /// initial and final models.
    pub interval: usize,
}

impl Default for CheckpointConfig {
    fn default() -> Self {
        Self { interval: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub interpolation: bool,
    pub block_distance: bool,
    pub cka: bool,
    /// Experiences between the two checkpoints of an interpolation pair.
    pub delta: usize,
    pub points: usize,
    pub probe_size: usize,
    pub probe_seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            interpolation: false,
            block_distance: false,
            cka: false,
            delta: 10,
            points: 10,
            probe_size: 512,
            probe_seed: 0,
        }
    }
}

impl AnalysisConfig {
    pub fn any(&self) -> bool {
        self.interpolation || self.block_distance || self.cka
    }
}

/// Parses `key.path=value`; the value is read as a TOML literal and falls
/// back to a plain string.
pub fn parse_override(spec: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config(format!("bad override key {key:?}")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    Ok((key.to_owned(), value))
}

fn apply_override(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut table = doc;
    for part in parents {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override {key:?}: {part:?} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parses a config document, applies overrides and resolves relative
    /// dataset paths against `base_dir`.
    pub fn from_toml_str(
        text: &str,
        base_dir: Option<&Path>,
        overrides: &[(String, toml::Value)],
    ) -> Result<Self> {
        let mut doc: toml::Table =
            toml::from_str(text).map_err(|e| Error::config(format!("config parse error: {e}")))?;
        for (k, v) in overrides {
            apply_override(&mut doc, k, v.clone())?;
        }
        let mut cfg: ExperimentConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("config schema error: {e}")))?;
        if let (Some(base), DatasetConfig::Csv { train, test, .. }) = (base_dir, &mut cfg.dataset)
        {
            for p in [train, test] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, toml::Value)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent(), overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("config serialisation: {e}")))
    }

    /// Resolved strategy list, in config order.
    pub fn strategies(&self) -> Result<Vec<Strategy>> {
        self.strategies
            .iter()
            .map(|s| Strategy::parse(s, self.buffer.policy))
            .collect()
    }

    /// Hash of everything that affects results; the output location is
    /// excluded so identical experiments in different directories match.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serialises");
        hex::encode(Sha256::digest(&json))[..16].to_owned()
    }

    /// Output directory after applying [`OUTPUT_ROOT_ENV`] to relative paths.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        let strategies = self.strategies()?;
        if strategies.is_empty() {
            return Err(Error::config("at least one strategy is required"));
        }
        if strategies.iter().collect::<BTreeSet<_>>().len() != strategies.len() {
            return Err(Error::config("strategies must be distinct"));
        }
        if strategies.iter().any(|s| s.policy().is_some()) && self.buffer.size == 0 {
            return Err(Error::config("buffer.size must be >= 1 for replay strategies"));
        }
        match &self.dataset {
            DatasetConfig::Synthetic { .. } => {
                self.dataset.synthetic_spec().expect("synthetic").validate()?
            }
            DatasetConfig::Csv { train, test, .. } => {
                for p in [train, test] {
                    if !p.is_file() {
                        return Err(Error::config(format!(
                            "dataset file {} does not exist",
                            p.display()
                        )));
                    }
                }
            }
        }
        match &self.generator {
            GeneratorConfig::Slot {
                experiences,
                slots_per_experience,
            } => {
                if *experiences == 0 || *slots_per_experience == 0 {
                    return Err(Error::config("slot generator: N and K must be >= 1"));
                }
            }
            GeneratorConfig::Sampling {
                experiences,
                experience_size,
                repetition,
                ..
            } => {
                if *experiences == 0 || *experience_size == 0 {
                    return Err(Error::config("sampling generator: N and S must be >= 1"));
                }
                match repetition {
                    RepetitionConfig::Constant { value } => check_probability(*value)?,
                    RepetitionConfig::List { values } => {
                        values.iter().try_for_each(|p| check_probability(*p))?
                    }
                    RepetitionConfig::Bimodal { .. } => {
                        repetition.bimodal(0).expect("bimodal").validate()?
                    }
                }
            }
        }
        let tc = self.train.train_config();
        tc.validate()?;
        if self.train.hidden.contains(&0) {
            return Err(Error::config("train.hidden widths must be >= 1"));
        }
        let a = &self.analysis;
        if a.points < 2 {
            return Err(Error::config("analysis.points must be >= 2"));
        }
        if a.interpolation {
            let interval = self.checkpoints.interval;
            if a.delta == 0 || interval == 0 || !a.delta.is_multiple_of(interval) {
                return Err(Error::config(format!(
                    "analysis.delta ({}) must be a positive multiple of checkpoints.interval ({interval})",
                    a.delta
                )));
            }
        }
        if a.cka && a.probe_size < 2 {
            return Err(Error::config("analysis.probe_size must be >= 2"));
        }
        Ok(())
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::config(format!("repetition probability {p} outside [0, 1]")))
    }
}
