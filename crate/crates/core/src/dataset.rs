//! Labelled datasets and the synthetic Gaussian-cluster generator.

use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A class-indexed pool of feature vectors.
///
/// Rows of `features` are instances; `labels[i]` is the class of row `i`.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    per_class: Vec<Vec<usize>>,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::data(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if num_classes == 0 {
            return Err(Error::data("dataset needs at least one class"));
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::data(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite feature value"));
        }
        let mut per_class = vec![Vec::new(); num_classes];
        for (i, &y) in labels.iter().enumerate() {
            per_class[y].push(i);
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            per_class,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn feature(&self, index: usize) -> ArrayView1<'_, f64> {
        self.features.row(index)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    /// Instance indices of class `class`, in dataset order.
    pub fn class_indices(&self, class: usize) -> &[usize] {
        &self.per_class[class]
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.per_class.iter().map(Vec::len).collect()
    }

    /// Gathers the given rows into a dense matrix plus their labels.
    pub fn gather(&self, indices: &[usize]) -> (Array2<f64>, Vec<usize>) {
        let x = self.features.select(Axis(0), indices);
        let y = indices.iter().map(|&i| self.labels[i]).collect();
        (x, y)
    }

    /// SHA-256 over shape, feature bits and labels.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.dim() as u64).to_le_bytes());
        h.update((self.num_classes as u64).to_le_bytes());
        for v in self.features.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        for &y in &self.labels {
            h.update((y as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Reads `label,f1,f2,...` rows without a header. The class count is
    /// `max(label) + 1` unless given.
    pub fn read_csv(path: &Path, num_classes: Option<usize>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut labels = Vec::new();
        let mut values = Vec::new();
        let mut dim = None;
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::data(format!(
                    "{}: row {} needs a label and at least one feature",
                    path.display(),
                    line + 1
                )));
            }
            let d = record.len() - 1;
            match dim {
                None => dim = Some(d),
                Some(prev) if prev != d => {
                    return Err(Error::data(format!(
                        "{}: row {} has {d} features, expected {prev}",
                        path.display(),
                        line + 1
                    )))
                }
                _ => {}
            }
            let label: usize = record[0].parse().map_err(|_| {
                Error::data(format!(
                    "{}: row {}: bad label {:?}",
                    path.display(),
                    line + 1,
                    &record[0]
                ))
            })?;
            labels.push(label);
            for field in record.iter().skip(1) {
                let v: f64 = field.parse().map_err(|_| {
                    Error::data(format!(
                        "{}: row {}: bad feature {field:?}",
                        path.display(),
                        line + 1
                    ))
                })?;
                values.push(v);
            }
        }
        let dim = dim.ok_or_else(|| Error::data(format!("{}: no rows", path.display())))?;
        let classes = num_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        let features = Array2::from_shape_vec((labels.len(), dim), values)
            .map_err(|e| Error::data(e.to_string()))?;
        Self::new(features, labels, classes)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        for (row, &y) in self.features.rows().into_iter().zip(&self.labels) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(y.to_string());
            rec.extend(row.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Parameters of the synthetic Gaussian-cluster dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Standard deviation of the isotropic noise around each class centre.
    pub spread: f64,
    /// Scale of the class centres, which are drawn from `N(0, separation² I)`.
    #[serde(default = "default_separation")]
    pub separation: f64,
    /// Held-out instances per class, as a fraction of `per_class`.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_separation() -> f64 {
    1.0
}

fn default_test_fraction() -> f64 {
    0.1
}

impl SyntheticSpec {
    pub fn new(classes: usize, per_class: usize, dim: usize, spread: f64) -> Self {
        Self {
            classes,
            per_class,
            dim,
            spread,
            separation: default_separation(),
            test_fraction: default_test_fraction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::config("synthetic dataset needs at least 2 classes"));
        }
        if self.per_class < 1 {
            return Err(Error::config("synthetic dataset needs per_class >= 1"));
        }
        if self.dim < 2 {
            return Err(Error::config("synthetic dataset needs dim >= 2"));
        }
        if !self.spread.is_finite() || self.spread < 0.0 {
            return Err(Error::config("spread must be finite and >= 0"));
        }
        if !self.separation.is_finite() || self.separation <= 0.0 {
            return Err(Error::config("separation must be finite and > 0"));
        }
        if !(0.0..=1.0).contains(&self.test_fraction) {
            return Err(Error::config("test_fraction must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn test_per_class(&self) -> usize {
        ((self.per_class as f64 * self.test_fraction).round() as usize).max(1)
    }
}

/// Training pool plus a held-out test set drawn around the same centres.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub centers: Array2<f64>,
}

pub fn make_synthetic_dataset<R: Rng + ?Sized>(
    spec: &SyntheticSpec,
    rng: &mut R,
) -> Result<SyntheticData> {
    spec.validate()?;
    let (c, d) = (spec.classes, spec.dim);
    let centers = Array2::from_shape_fn((c, d), |_| {
        spec.separation * rng.sample::<f64, _>(StandardNormal)
    });
    let draw = |per_class: usize, rng: &mut R| {
        let n = c * per_class;
        let mut x = Array2::zeros((n, d));
        let mut y = Vec::with_capacity(n);
        for class in 0..c {
            for k in 0..per_class {
                let row = class * per_class + k;
                for j in 0..d {
                    x[[row, j]] =
                        centers[[class, j]] + spec.spread * rng.sample::<f64, _>(StandardNormal);
                }
                y.push(class);
            }
        }
        LabeledDataset::new(x, y, c)
    };
    let train = draw(spec.per_class, rng)?;
    let test = draw(spec.test_per_class(), rng)?;
    Ok(SyntheticData {
        train,
        test,
        centers,
    })
}
