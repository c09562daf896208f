//! Sampling-based stream generator.
//!
//! A C×N occurrence matrix decides which classes are present in each
//! experience: every class gets a first occurrence drawn from a
//! first-occurrence pmf, and after that reappears in each later experience
//! independently with its repetition probability. Experience `i` then draws
//! `⌊S / |C^i|⌋` instances of every present class.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::distributions::{materialize_pmf, PmfKind, PmfSpec};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::stream::{Experience, GeneratorSpec, Provenance, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Stream length `N`.
    pub experiences: usize,
    /// Experience size `S`.
    pub experience_size: usize,
    pub first_occurrence: PmfKind,
    /// Per-class repetition probabilities `P_r`.
    pub repetition: Vec<f64>,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn classes(&self) -> usize {
        self.repetition.len()
    }

    pub fn pmf_spec(&self) -> PmfSpec {
        PmfSpec::new(self.first_occurrence.clone(), self.experiences)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiences == 0 {
            return Err(Error::config("sampling generator: N must be >= 1"));
        }
        if self.experience_size == 0 {
            return Err(Error::config("sampling generator: S must be >= 1"));
        }
        if self.repetition.is_empty() {
            return Err(Error::config("sampling generator: empty repetition list"));
        }
        if let Some(p) = self
            .repetition
            .iter()
            .find(|p| !p.is_finite() || !(0.0..=1.0).contains(*p))
        {
            return Err(Error::config(format!(
                "sampling generator: repetition probability {p} outside [0, 1]"
            )));
        }
        self.pmf_spec().validate()
    }

    pub fn validate_for(&self, dataset: &LabeledDataset) -> Result<()> {
        self.validate()?;
        if self.classes() != dataset.num_classes() {
            return Err(Error::config(format!(
                "sampling generator: {} repetition probabilities for {} classes",
                self.classes(),
                dataset.num_classes()
            )));
        }
        if let Some(c) = (0..dataset.num_classes()).find(|&c| dataset.class_indices(c).is_empty()) {
            return Err(Error::config(format!(
                "sampling generator: class {c} has no instances"
            )));
        }
        Ok(())
    }
}

/// An empty column that was patched so its experience is trainable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRepair {
    pub experience: usize,
    pub class: usize,
    pub reason: String,
}

/// Binary C×N class-presence matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceMatrix {
    classes: usize,
    experiences: usize,
    cells: Vec<u8>,
    first_occurrence: Vec<usize>,
    repairs: Vec<ColumnRepair>,
}

impl OccurrenceMatrix {
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn experiences(&self) -> usize {
        self.experiences
    }

    pub fn get(&self, class: usize, experience: usize) -> bool {
        self.cells[class * self.experiences + experience] == 1
    }

    fn set(&mut self, class: usize, experience: usize) {
        self.cells[class * self.experiences + experience] = 1;
    }

    pub fn row(&self, class: usize) -> &[u8] {
        &self.cells[class * self.experiences..(class + 1) * self.experiences]
    }

    pub fn column(&self, experience: usize) -> Vec<u8> {
        (0..self.classes)
            .map(|c| self.cells[c * self.experiences + experience])
            .collect()
    }

    pub fn present_classes(&self, experience: usize) -> Vec<usize> {
        (0..self.classes)
            .filter(|&c| self.get(c, experience))
            .collect()
    }

    pub fn first_occurrence(&self) -> &[usize] {
        &self.first_occurrence
    }

    pub fn repairs(&self) -> &[ColumnRepair] {
        &self.repairs
    }

    /// Fraction of experiences after the first occurrence in which the class
    /// is present; `None` when the first occurrence is the last experience.
    pub fn repetition_rate(&self, class: usize) -> Option<f64> {
        let first = self.first_occurrence[class];
        let after = self.experiences - first - 1;
        if after == 0 {
            return None;
        }
        let ones = self.row(class)[first + 1..]
            .iter()
            .filter(|&&v| v == 1)
            .count();
        Some(ones as f64 / after as f64)
    }

    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.classes as u64).to_le_bytes());
        h.update((self.experiences as u64).to_le_bytes());
        h.update(&self.cells);
        hex::encode(h.finalize())
    }

    /// CSV with one row per class and one 0/1 column per experience.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["class".to_string()];
        header.extend((0..self.experiences).map(|i| format!("e{i}")));
        w.write_record(&header)?;
        for c in 0..self.classes {
            let mut rec = vec![c.to_string()];
            rec.extend(self.row(c).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub fn build_occurrence_matrix<R: Rng + ?Sized>(
    cfg: &SamplingConfig,
    rng: &mut R,
) -> Result<OccurrenceMatrix> {
    cfg.validate()?;
    let (c, n) = (cfg.classes(), cfg.experiences);
    let sampler = materialize_pmf(&cfg.pmf_spec())?.sampler();
    let mut t = OccurrenceMatrix {
        classes: c,
        experiences: n,
        cells: vec![0; c * n],
        first_occurrence: vec![0; c],
        repairs: Vec::new(),
    };
    for class in 0..c {
        let first = sampler.sample(rng);
        t.first_occurrence[class] = first;
        t.set(class, first);
        let p = cfg.repetition[class];
        for j in first + 1..n {
            if rng.random::<f64>() < p {
                t.set(class, j);
            }
        }
    }

    // Empty columns: redraw the Bernoulli entries of the classes already
    // introduced once; if still empty, fall back to the most recently seen
    // class, or pull the next class to appear forward.
    for j in 0..n {
        if (0..c).any(|class| t.get(class, j)) {
            continue;
        }
        for class in 0..c {
            if t.first_occurrence[class] < j && rng.random::<f64>() < cfg.repetition[class] {
                t.set(class, j);
            }
        }
        if (0..c).any(|class| t.get(class, j)) {
            t.repairs.push(ColumnRepair {
                experience: j,
                class: t.present_classes(j)[0],
                reason: "empty column redrawn".into(),
            });
            continue;
        }
        let recent = (0..c)
            .filter(|&class| t.first_occurrence[class] < j)
            .filter_map(|class| {
                let last = (0..j).rev().find(|&i| t.get(class, i))?;
                Some((last, class))
            })
            // latest experience wins, lower class id on ties
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let (class, reason) = match recent {
            Some((_, class)) => (class, "empty column filled with most recently seen class"),
            None => {
                let class = (0..c)
                    .min_by_key(|&class| (t.first_occurrence[class], class))
                    .expect("at least one class");
                t.first_occurrence[class] = j;
                (class, "empty column before any first occurrence; class moved earlier")
            }
        };
        t.set(class, j);
        t.repairs.push(ColumnRepair {
            experience: j,
            class,
            reason: reason.into(),
        });
    }
    Ok(t)
}

pub fn realize_stream<R: Rng + ?Sized>(
    dataset: &LabeledDataset,
    matrix: &OccurrenceMatrix,
    cfg: &SamplingConfig,
    rng: &mut R,
) -> Result<Stream> {
    cfg.validate_for(dataset)?;
    if matrix.classes() != cfg.classes() || matrix.experiences() != cfg.experiences {
        return Err(Error::ShapeMismatch(format!(
            "occurrence matrix is {}x{}, config expects {}x{}",
            matrix.classes(),
            matrix.experiences(),
            cfg.classes(),
            cfg.experiences
        )));
    }
    let mut notes: Vec<String> = matrix
        .repairs()
        .iter()
        .map(|r| format!("experience {}: {} (class {})", r.experience, r.reason, r.class))
        .collect();
    let mut experiences = Vec::with_capacity(cfg.experiences);
    for i in 0..cfg.experiences {
        let present = matrix.present_classes(i);
        let per_class = cfg.experience_size / present.len();
        if per_class == 0 {
            return Err(Error::config(format!(
                "sampling generator: experience {i} has {} classes but S = {}",
                present.len(),
                cfg.experience_size
            )));
        }
        let mut instances = Vec::with_capacity(per_class * present.len());
        for &class in &present {
            let pool = dataset.class_indices(class);
            if pool.len() < per_class {
                notes.push(format!(
                    "experience {i}: class {class} has {} instances, quota {per_class}; using the whole pool",
                    pool.len()
                ));
                instances.extend_from_slice(pool);
            } else {
                instances.extend(
                    index::sample(rng, pool.len(), per_class)
                        .into_iter()
                        .map(|k| pool[k]),
                );
            }
        }
        experiences.push(Experience {
            index: i,
            instances,
            present_classes: present.iter().copied().collect(),
            provenance: Provenance::OccurrenceColumn {
                column: matrix.column(i),
            },
        });
    }
    Ok(Stream::new(
        GeneratorSpec::Sampling(cfg.clone()),
        dataset,
        experiences,
        notes,
    ))
}

/// Builds the occurrence matrix and the stream from `cfg.seed`.
pub fn generate_sampling_stream(
    dataset: &LabeledDataset,
    cfg: &SamplingConfig,
) -> Result<(OccurrenceMatrix, Stream)> {
    cfg.validate_for(dataset)?;
    let mut rng = seeded(cfg.seed);
    let matrix = build_occurrence_matrix(cfg, &mut rng)?;
    let stream = realize_stream(dataset, &matrix, cfg, &mut rng)?;
    Ok((matrix, stream))
}

/// Two repetition modes: a fraction of classes repeats rarely, the rest often.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalSpec {
    pub fraction_infrequent: f64,
    pub p_low: f64,
    pub p_high: f64,
    pub assignment_seed: u64,
}

impl BimodalSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.fraction_infrequent.is_finite() || !(0.0..=1.0).contains(&self.fraction_infrequent)
        {
            return Err(Error::config(format!(
                "bimodal fraction {} outside [0, 1]",
                self.fraction_infrequent
            )));
        }
        for p in [self.p_low, self.p_high] {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!(
                    "bimodal repetition probability {p} outside [0, 1]"
                )));
            }
        }
        if self.p_low > self.p_high {
            return Err(Error::config(format!(
                "bimodal p_low = {} exceeds p_high = {}",
                self.p_low, self.p_high
            )));
        }
        Ok(())
    }

    /// The `⌊fraction·C⌋` infrequent classes, sorted.
    pub fn infrequent_classes(&self, classes: usize) -> Result<BTreeSet<usize>> {
        self.validate()?;
        let count = (self.fraction_infrequent * classes as f64).floor() as usize;
        let mut rng = seeded(self.assignment_seed);
        Ok(index::sample(&mut rng, classes, count.min(classes))
            .into_iter()
            .collect())
    }
}

pub fn make_bimodal_config(
    classes: usize,
    spec: &BimodalSpec,
    base: &SamplingConfig,
) -> Result<SamplingConfig> {
    let infrequent = spec.infrequent_classes(classes)?;
    let repetition = (0..classes)
        .map(|c| {
            if infrequent.contains(&c) {
                spec.p_low
            } else {
                spec.p_high
            }
        })
        .collect();
    Ok(SamplingConfig {
        repetition,
        ..base.clone()
    })
}
