//! Experiences, streams, stream manifests and scenario-property checks.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::sampling::SamplingConfig;
use crate::slot::SlotConfig;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// One slot of a slot-generated experience: chunk `chunk` of class `class`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRef {
    pub class: usize,
    pub chunk: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    SlotAssignment { slots: Vec<SlotRef> },
    /// Column of the occurrence matrix, one 0/1 entry per class.
    OccurrenceColumn { column: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experience {
    pub index: usize,
    /// Indices into the source dataset; never copies of the features.
    pub instances: Vec<usize>,
    pub present_classes: BTreeSet<usize>,
    pub provenance: Provenance,
}

impl Experience {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// `(instance, class)` pairs for this experience.
    pub fn labelled(&self, dataset: &LabeledDataset) -> Vec<(usize, usize)> {
        self.instances
            .iter()
            .map(|&i| (i, dataset.label(i)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Slot(SlotConfig),
    Sampling(SamplingConfig),
}

impl GeneratorSpec {
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("generator spec serialises");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stream {
    pub generator: GeneratorSpec,
    pub dataset_digest: String,
    pub generator_config_hash: String,
    pub experiences: Vec<Experience>,
    /// Repairs and fallbacks applied during generation.
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_digest: Option<String>,
    #[serde(flatten)]
    stream: Stream,
}

impl Stream {
    pub fn new(
        generator: GeneratorSpec,
        dataset: &LabeledDataset,
        experiences: Vec<Experience>,
        notes: Vec<String>,
    ) -> Self {
        Self {
            generator_config_hash: generator.digest(),
            generator,
            dataset_digest: dataset.digest(),
            experiences,
            notes,
        }
    }

    pub fn len(&self) -> usize {
        self.experiences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experiences.is_empty()
    }

    /// C×N presence matrix (rows are classes).
    pub fn presence_matrix(&self, num_classes: usize) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.len()]; num_classes];
        for e in &self.experiences {
            for &c in &e.present_classes {
                if c < num_classes {
                    m[c][e.index] = 1;
                }
            }
        }
        m
    }

    pub fn to_manifest_json(&self, config_digest: Option<&str>) -> Result<String> {
        let m = Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config_digest: config_digest.map(str::to_owned),
            stream: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&m)?)
    }

    /// Parses a manifest, returning the stream and the config digest it carries.
    pub fn from_manifest_json(json: &str) -> Result<(Self, Option<String>)> {
        let m: Manifest = serde_json::from_str(json)?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::data(format!(
                "unsupported manifest schema version {}",
                m.schema_version
            )));
        }
        Ok((m.stream, m.config_digest))
    }

    pub fn write_manifest(&self, path: &Path, config_digest: Option<&str>) -> Result<()> {
        let json = self.to_manifest_json(config_digest)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read_manifest(path: &Path) -> Result<(Self, Option<String>)> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_manifest_json(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "CI")]
    ClassIncremental,
    #[serde(rename = "DI")]
    DomainIncremental,
    #[serde(rename = "CIR")]
    ClassIncrementalRepetition,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::ClassIncremental => "CI",
            ScenarioKind::DomainIncremental => "DI",
            ScenarioKind::ClassIncrementalRepetition => "CIR",
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Overlap and coverage statistics of a stream against its dataset.
///
/// Pairwise sums are over unordered experience pairs `i < j`, e.g.
/// `instance_overlap_total = Σ |X_i ∩ X_j|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub experiences: usize,
    pub instance_overlap_total: u64,
    /// Dataset instances that occur in more than one experience.
    pub repeated_instances: usize,
    /// Instances listed twice inside one experience.
    pub within_experience_duplicates: usize,
    pub concept_overlap_total: u64,
    pub max_concept_overlap: usize,
    pub covered_instances: usize,
    pub dataset_instances: usize,
    pub covered_classes: usize,
    pub dataset_classes: usize,
    pub full_instance_coverage: bool,
    pub full_class_coverage: bool,
    /// Every experience contains every class.
    pub all_classes_every_experience: bool,
    /// Per-class number of experiences the class appears in.
    pub class_occurrences: Vec<usize>,
    /// Strict classification of both instance and concept properties.
    pub scenario: ScenarioKind,
    /// Classification from class presence alone, ignoring instance reuse.
    pub concept_pattern: ScenarioKind,
}

impl PropertyReport {
    pub fn instance_coverage(&self) -> f64 {
        if self.dataset_instances == 0 {
            0.0
        } else {
            self.covered_instances as f64 / self.dataset_instances as f64
        }
    }
}

pub fn verify_scenario_properties(
    stream: &Stream,
    dataset: &LabeledDataset,
) -> Result<PropertyReport> {
    let n_inst = dataset.len();
    let n_cls = dataset.num_classes();
    let mut inst_count = vec![0u64; n_inst];
    let mut class_count = vec![0usize; n_cls];
    let mut within_dups = 0usize;
    let mut seen_here = vec![usize::MAX; n_inst];

    for (pos, e) in stream.experiences.iter().enumerate() {
        if e.index != pos {
            return Err(Error::data(format!(
                "experience at position {pos} has index {}",
                e.index
            )));
        }
        let mut labels = BTreeSet::new();
        for &i in &e.instances {
            if i >= n_inst {
                return Err(Error::data(format!(
                    "experience {} references instance {i} but the dataset has {n_inst}",
                    e.index
                )));
            }
            labels.insert(dataset.label(i));
            if seen_here[i] == pos {
                within_dups += 1;
            } else {
                seen_here[i] = pos;
                inst_count[i] += 1;
            }
        }
        if labels != e.present_classes {
            return Err(Error::data(format!(
                "experience {} lists classes {:?} but its instances carry {:?}",
                e.index, e.present_classes, labels
            )));
        }
        for &c in &labels {
            class_count[c] += 1;
        }
    }

    let pairs = |k: u64| k * k.saturating_sub(1) / 2;
    let instance_overlap_total: u64 = inst_count.iter().map(|&k| pairs(k)).sum();
    let concept_overlap_total: u64 = class_count.iter().map(|&k| pairs(k as u64)).sum();

    let words = n_cls.div_ceil(64);
    let bitsets: Vec<Vec<u64>> = stream
        .experiences
        .iter()
        .map(|e| {
            let mut b = vec![0u64; words];
            for &c in &e.present_classes {
                b[c / 64] |= 1 << (c % 64);
            }
            b
        })
        .collect();
    let mut max_concept_overlap = 0;
    for i in 0..bitsets.len() {
        for j in i + 1..bitsets.len() {
            let shared: u32 = bitsets[i]
                .iter()
                .zip(&bitsets[j])
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            max_concept_overlap = max_concept_overlap.max(shared as usize);
        }
    }

    let covered_instances = inst_count.iter().filter(|&&k| k > 0).count();
    let covered_classes = class_count.iter().filter(|&&k| k > 0).count();
    let full_instance_coverage = covered_instances == n_inst;
    let full_class_coverage = covered_classes == n_cls;
    let all_classes_every_experience = !stream.is_empty()
        && stream
            .experiences
            .iter()
            .all(|e| e.present_classes.len() == n_cls);
    let no_instance_overlap = instance_overlap_total == 0 && within_dups == 0;

    let concept_pattern = if all_classes_every_experience {
        ScenarioKind::DomainIncremental
    } else if concept_overlap_total == 0 && full_class_coverage {
        ScenarioKind::ClassIncremental
    } else {
        ScenarioKind::ClassIncrementalRepetition
    };
    let scenario = if no_instance_overlap && full_instance_coverage {
        concept_pattern
    } else {
        ScenarioKind::ClassIncrementalRepetition
    };

    Ok(PropertyReport {
        experiences: stream.len(),
        instance_overlap_total,
        repeated_instances: inst_count.iter().filter(|&&k| k > 1).count(),
        within_experience_duplicates: within_dups,
        concept_overlap_total,
        max_concept_overlap,
        covered_instances,
        dataset_instances: n_inst,
        covered_classes,
        dataset_classes: n_cls,
        full_instance_coverage,
        full_class_coverage,
        all_classes_every_experience,
        class_occurrences: class_count,
        scenario,
        concept_pattern,
    })
}
