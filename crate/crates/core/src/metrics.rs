//! Per-experience evaluation: TA, SCA, MCA and per-class accuracy.
//!
//! All averages are macro averages over classes. TA covers every class of
//! the dataset, SCA the classes seen so far and MCA the seen classes that are
//! absent from the current experience.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::learner::ModelParams;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalContext {
    pub seen: BTreeSet<usize>,
    pub present: BTreeSet<usize>,
    pub infrequent: Option<BTreeSet<usize>>,
}

impl EvalContext {
    pub fn new(seen: BTreeSet<usize>, present: BTreeSet<usize>) -> Result<Self> {
        if !present.is_subset(&seen) {
            return Err(Error::data(format!(
                "present classes {present:?} are not all seen ({seen:?})"
            )));
        }
        Ok(Self {
            seen,
            present,
            infrequent: None,
        })
    }

    pub fn with_infrequent(mut self, infrequent: BTreeSet<usize>) -> Self {
        self.infrequent = Some(infrequent);
        self
    }

    /// Seen classes absent from the current experience.
    pub fn missing(&self) -> BTreeSet<usize> {
        self.seen.difference(&self.present).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experience_index: usize,
    pub strategy: String,
    pub seed: u64,
    pub ta: f64,
    pub sca: Option<f64>,
    /// Absent when no seen class is missing.
    pub mca: Option<f64>,
    pub infrequent_acc: Option<f64>,
    pub frequent_acc: Option<f64>,
    /// `None` for classes without test items.
    pub per_class_acc: Vec<Option<f64>>,
}

/// Per-class accuracy of `params` on `test`.
pub fn per_class_accuracy(params: &ModelParams, test: &LabeledDataset) -> Result<Vec<Option<f64>>> {
    let (pred, _) = params.predict(test.features())?;
    let c = test.num_classes();
    let mut hits = vec![0usize; c];
    let mut totals = vec![0usize; c];
    for (p, &y) in pred.iter().zip(test.labels()) {
        totals[y] += 1;
        if *p == y {
            hits[y] += 1;
        }
    }
    Ok(hits
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
        .collect())
}

/// Mean of the defined entries among `classes`; `None` if there are none.
pub fn macro_average<'a>(
    per_class: &[Option<f64>],
    classes: impl IntoIterator<Item = &'a usize>,
) -> Option<f64> {
    let vals: Vec<f64> = classes
        .into_iter()
        .filter_map(|&c| per_class.get(c).copied().flatten())
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn record_from_accuracies(
    per_class_acc: Vec<Option<f64>>,
    ctx: &EvalContext,
    experience_index: usize,
    strategy: &str,
    seed: u64,
) -> RunRecord {
    let all: Vec<usize> = (0..per_class_acc.len()).collect();
    let missing = ctx.missing();
    let (infrequent_acc, frequent_acc) = match &ctx.infrequent {
        Some(inf) => {
            let freq: Vec<usize> = all.iter().copied().filter(|c| !inf.contains(c)).collect();
            (
                macro_average(&per_class_acc, inf),
                macro_average(&per_class_acc, &freq),
            )
        }
        None => (None, None),
    };
    RunRecord {
        experience_index,
        strategy: strategy.to_owned(),
        seed,
        ta: macro_average(&per_class_acc, &all).unwrap_or(0.0),
        sca: macro_average(&per_class_acc, &ctx.seen),
        mca: macro_average(&per_class_acc, &missing),
        infrequent_acc,
        frequent_acc,
        per_class_acc,
    }
}

pub fn evaluate(
    params: &ModelParams,
    test: &LabeledDataset,
    ctx: &EvalContext,
    experience_index: usize,
    strategy: &str,
    seed: u64,
) -> Result<RunRecord> {
    let acc = per_class_accuracy(params, test)?;
    Ok(record_from_accuracies(acc, ctx, experience_index, strategy, seed))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn metrics_header(classes: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "config_digest",
        "experience_index",
        "strategy",
        "seed",
        "ta",
        "sca",
        "mca",
        "infrequent_acc",
        "frequent_acc",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((0..classes).map(|c| format!("acc_c{c}")));
    h
}

impl RunRecord {
    pub fn csv_fields(&self, config_digest: &str) -> Vec<String> {
        let mut f = vec![
            config_digest.to_owned(),
            self.experience_index.to_string(),
            self.strategy.clone(),
            self.seed.to_string(),
            format!("{:.6}", self.ta),
            fmt_opt(self.sca),
            fmt_opt(self.mca),
            fmt_opt(self.infrequent_acc),
            fmt_opt(self.frequent_acc),
        ];
        f.extend(self.per_class_acc.iter().map(|v| fmt_opt(*v)));
        f
    }
}

/// Line-oriented metrics writer; each record is flushed as it is appended.
pub struct MetricsWriter {
    file: std::fs::File,
    path: std::path::PathBuf,
    config_digest: String,
}

impl MetricsWriter {
    pub fn create(path: &Path, classes: usize, config_digest: &str) -> Result<Self> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "{}", metrics_header(classes).join(",")).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            file,
            path: path.to_owned(),
            config_digest: config_digest.to_owned(),
        })
    }

    /// Opens an existing file for appending.
    pub fn append(path: &Path, config_digest: &str) -> Result<Self> {
        let file = std::fs::OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            file,
            path: path.to_owned(),
            config_digest: config_digest.to_owned(),
        })
    }

    pub fn write(&mut self, record: &RunRecord) -> Result<()> {
        let line = record.csv_fields(&self.config_digest).join(",");
        writeln!(self.file, "{line}").map_err(|e| Error::io(&self.path, e))?;
        self.file.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Parses a metrics CSV back into records.
pub fn read_metrics(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::data(format!("{}: bad number {s:?}", path.display())))
        }
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 9 {
            return Err(Error::data(format!("{}: short metrics row", path.display())));
        }
        let num = |i: usize| -> Result<usize> {
            rec[i]
                .parse()
                .map_err(|_| Error::data(format!("{}: bad integer {:?}", path.display(), &rec[i])))
        };
        out.push(RunRecord {
            experience_index: num(1)?,
            strategy: rec[2].to_owned(),
            seed: rec[3]
                .parse()
                .map_err(|_| Error::data(format!("{}: bad seed", path.display())))?,
            ta: parse_opt(&rec[4])?.unwrap_or(0.0),
            sca: parse_opt(&rec[5])?,
            mca: parse_opt(&rec[6])?,
            infrequent_acc: parse_opt(&rec[7])?,
            frequent_acc: parse_opt(&rec[8])?,
            per_class_acc: rec
                .iter()
                .skip(9)
                .map(parse_opt)
                .collect::<Result<Vec<_>>>()?,
        });
    }
    Ok(out)
}
