//! Experiment runner: builds the dataset and one stream per seed, trains
//! every (strategy, seed) cell of the grid in parallel and writes metrics,
//! buffer traces, manifests, checkpoints and analysis tables.
//!
//! Layout of a run directory:
//!
//! ```text
//! <out>/config.toml            resolved configuration
//! <out>/summary.json           config digest, final TA/SCA/MCA mean ± std per strategy
//! <out>/error.json             only on failure
//! <out>/<strategy>/seed_<s>/
//!     metrics.csv  buffer_trace.csv  stream.json  state.json
//!     checkpoints/ckpt_<n>.json      model after n experiences
//!     analysis/{interpolation,block_distance,cka}.csv
//!     INCOMPLETE                     present until the cell finishes
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{block_distance, cka_matrix, interpolate_checkpoints};
use crate::buffer::{ReplayBuffer, TraceRow};
use crate::config::{DatasetConfig, ExperimentConfig, GeneratorConfig, RepetitionConfig, Strategy};
use crate::dataset::{make_synthetic_dataset, LabeledDataset};
use crate::error::{Error, Result};
use crate::learner::{snapshot, train_on_experience, Checkpoint, ModelParams};
use crate::metrics::{evaluate, read_metrics, EvalContext, MetricsWriter, RunRecord};
use crate::rng::{component_rng, derive_seed, indexed_rng, seeded};
use crate::sampling::{generate_sampling_stream, OccurrenceMatrix, SamplingConfig};
use crate::slot::{generate_slot_stream, SlotConfig};
use crate::stream::{verify_scenario_properties, ScenarioKind, Stream};

const STATE_FILE: &str = "state.json";
const INCOMPLETE_MARKER: &str = "INCOMPLETE";

#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn load_datasets(cfg: &DatasetConfig) -> Result<Datasets> {
    match cfg {
        DatasetConfig::Synthetic { seed, .. } => {
            let spec = cfg.synthetic_spec().expect("synthetic");
            let data = make_synthetic_dataset(&spec, &mut seeded(*seed))?;
            Ok(Datasets {
                train: data.train,
                test: data.test,
            })
        }
        DatasetConfig::Csv {
            train,
            test,
            classes,
        } => {
            let train = LabeledDataset::read_csv(train, *classes)?;
            let test = LabeledDataset::read_csv(test, Some(train.num_classes()))?;
            Ok(Datasets { train, test })
        }
    }
}

/// Stream of one seed plus the generator by-products the harness reports.
#[derive(Debug, Clone)]
pub struct SeededStream {
    pub seed: u64,
    pub stream: Stream,
    pub matrix: Option<OccurrenceMatrix>,
    pub infrequent: Option<BTreeSet<usize>>,
}

/// Generates the stream for `seed`. It depends only on the generator
/// settings and the seed, never on the strategy.
pub fn build_stream(
    generator: &GeneratorConfig,
    train: &LabeledDataset,
    seed: u64,
) -> Result<SeededStream> {
    let gen_seed = derive_seed(seed, "generator");
    match generator {
        GeneratorConfig::Slot {
            experiences,
            slots_per_experience,
        } => {
            let sc = SlotConfig::new(*experiences, *slots_per_experience, gen_seed);
            sc.validate(train.num_classes())?;
            Ok(SeededStream {
                seed,
                stream: generate_slot_stream(train, &sc)?,
                matrix: None,
                infrequent: None,
            })
        }
        GeneratorConfig::Sampling {
            experiences,
            experience_size,
            first_occurrence,
            repetition,
        } => {
            let classes = train.num_classes();
            let bimodal = repetition.bimodal(derive_seed(seed, "assignment"));
            let probs = match repetition {
                RepetitionConfig::Constant { value } => vec![*value; classes],
                RepetitionConfig::List { values } => {
                    if values.len() != classes {
                        return Err(Error::config(format!(
                            "repetition list has {} entries for {classes} classes",
                            values.len()
                        )));
                    }
                    values.clone()
                }
                RepetitionConfig::Bimodal { .. } => {
                    let spec = bimodal.as_ref().expect("bimodal");
                    let inf = spec.infrequent_classes(classes)?;
                    (0..classes)
                        .map(|c| if inf.contains(&c) { spec.p_low } else { spec.p_high })
                        .collect()
                }
            };
            let sc = SamplingConfig {
                experiences: *experiences,
                experience_size: *experience_size,
                first_occurrence: first_occurrence.clone(),
                repetition: probs,
                seed: gen_seed,
            };
            let (matrix, stream) = generate_sampling_stream(train, &sc)?;
            let infrequent = bimodal
                .map(|b| b.infrequent_classes(classes))
                .transpose()?;
            Ok(SeededStream {
                seed,
                stream,
                matrix: Some(matrix),
                infrequent,
            })
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Continue cells from their saved state instead of starting over.
    pub resume: bool,
    /// Stop every cell after this many experiences, leaving it resumable.
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    /// Sample standard deviation; 0 for a single value.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub ta: Option<MeanStd>,
    pub sca: Option<MeanStd>,
    pub mca: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub strategy: String,
    pub seed: u64,
    pub complete: bool,
    pub experiences_done: usize,
    pub final_record: Option<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_digest: String,
    pub created_unix: u64,
    pub complete: bool,
    pub strategies: BTreeMap<String, StrategySummary>,
    pub cells: Vec<CellSummary>,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    config_digest: &'a str,
    kind: &'static str,
    message: String,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidConfig(_) => "invalid_config",
        Error::InvalidData(_) => "invalid_data",
        Error::ShapeMismatch(_) => "shape_mismatch",
        Error::Numerical(_) => "numerical",
        Error::Checkpoint { .. } => "checkpoint",
        Error::Io { .. } => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    }
}

fn write_error_report(dir: &Path, digest: &str, e: &Error) {
    let report = ErrorReport {
        config_digest: digest,
        kind: error_kind(e),
        message: e.to_string(),
    };
    if let Ok(json) = serde_json::to_string_pretty(&report) {
        let _ = fs::create_dir_all(dir);
        let _ = fs::write(dir.join("error.json"), json);
    }
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn cell_dir(out: &Path, strategy: Strategy, seed: u64) -> PathBuf {
    out.join(strategy.to_string()).join(format!("seed_{seed}"))
}

pub fn checkpoint_path(cell: &Path, completed: usize) -> PathBuf {
    cell.join("checkpoints").join(format!("ckpt_{completed:05}.json"))
}

/// Experience counts at which checkpoints are written: 0, every
/// `interval`, and the end of the stream.
pub fn checkpoint_schedule(interval: usize, experiences: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (0..=experiences)
        .filter(|&n| n == 0 || n == experiences || (interval > 0 && n % interval == 0))
        .collect();
    s.dedup();
    s
}

/// Validates everything, then runs the grid. On failure an `error.json` is
/// written to the output directory.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let out = cfg.resolved_output_dir();
    let digest = cfg.digest();
    let result = run_inner(cfg, opts, &out, &digest);
    if let Err(e) = &result {
        write_error_report(&out, &digest, e);
    }
    result
}

fn run_inner(cfg: &ExperimentConfig, opts: &RunOptions, out: &Path, digest: &str) -> Result<RunSummary> {
    cfg.validate()?;
    let strategies = cfg.strategies()?;
    let data = load_datasets(&cfg.dataset)?;
    // every seed's stream is generated before training so generator
    // violations surface as validation errors
    let streams = cfg
        .seeds
        .iter()
        .map(|&s| build_stream(&cfg.generator, &data.train, s))
        .collect::<Result<Vec<_>>>()?;
    ModelParams::zeros(
        data.train.dim(),
        &cfg.train.hidden,
        data.train.num_classes(),
        cfg.train.activation,
    )?;

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let _ = fs::remove_file(out.join("error.json"));
    fs::write(out.join("config.toml"), cfg.to_toml_string()?)
        .map_err(|e| Error::io(out.join("config.toml"), e))?;

    let jobs: Vec<(Strategy, &SeededStream)> = strategies
        .iter()
        .flat_map(|&st| streams.iter().map(move |s| (st, s)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(st, s)| run_cell(cfg, digest, &data, st, s, out, opts))
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize(digest, &strategies, cells);
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(out.join("summary.json"), json).map_err(|e| Error::io(out.join("summary.json"), e))?;
    Ok(summary)
}

fn summarize(digest: &str, strategies: &[Strategy], cells: Vec<CellSummary>) -> RunSummary {
    let mut per = BTreeMap::new();
    for st in strategies {
        let name = st.to_string();
        let finals: Vec<&RunRecord> = cells
            .iter()
            .filter(|c| c.strategy == name && c.complete)
            .filter_map(|c| c.final_record.as_ref())
            .collect();
        let collect = |f: &dyn Fn(&RunRecord) -> Option<f64>| -> Option<MeanStd> {
            MeanStd::of(&finals.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
        };
        per.insert(
            name,
            StrategySummary {
                ta: collect(&|r| Some(r.ta)),
                sca: collect(&|r| r.sca),
                mca: collect(&|r| r.mca),
            },
        );
    }
    RunSummary {
        config_digest: digest.to_owned(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        complete: cells.iter().all(|c| c.complete),
        strategies: per,
        cells,
    }
}

#[derive(Serialize, Deserialize)]
struct CellState {
    config_digest: String,
    completed: usize,
    params: ModelParams,
    buffer: Option<ReplayBuffer>,
}

const TRACE_HEADER: &str = "config_digest,experience_index,class_id,stored_count,observation_count,quota";

fn trace_line(digest: &str, r: &TraceRow) -> String {
    format!(
        "{digest},{},{},{},{},{}",
        r.experience_index,
        r.class_id,
        r.stored_count,
        r.observation_count,
        r.quota.map(|q| q.to_string()).unwrap_or_default()
    )
}

/// Keeps the header and the rows whose experience index (second column) is
/// below `completed`; drops rows written after the last saved state.
fn truncate_rows(path: &Path, completed: usize) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut kept = String::new();
    for (i, line) in text.lines().enumerate() {
        let keep = i == 0
            || line
                .split(',')
                .nth(1)
                .and_then(|v| v.parse::<usize>().ok())
                .is_some_and(|e| e < completed);
        if keep {
            kept.push_str(line);
            kept.push('\n');
        }
    }
    fs::write(path, kept).map_err(|e| Error::io(path, e))
}

fn eval_context(stream: &SeededStream, upto: usize) -> Result<EvalContext> {
    let seen: BTreeSet<usize> = stream.stream.experiences[..=upto]
        .iter()
        .flat_map(|e| e.present_classes.iter().copied())
        .collect();
    let ctx = EvalContext::new(seen, stream.stream.experiences[upto].present_classes.clone())?;
    Ok(match &stream.infrequent {
        Some(inf) => ctx.with_infrequent(inf.clone()),
        None => ctx,
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    digest: &str,
    data: &Datasets,
    strategy: Strategy,
    stream: &SeededStream,
    out: &Path,
    opts: &RunOptions,
) -> Result<CellSummary> {
    let seed = stream.seed;
    let dir = cell_dir(out, strategy, seed);
    let result = train_cell(cfg, digest, data, strategy, stream, &dir, opts);
    if let Err(e) = &result {
        write_error_report(&dir, digest, e);
    }
    result
}

fn train_cell(
    cfg: &ExperimentConfig,
    digest: &str,
    data: &Datasets,
    strategy: Strategy,
    stream: &SeededStream,
    dir: &Path,
    opts: &RunOptions,
) -> Result<CellSummary> {
    let seed = stream.seed;
    let n = stream.stream.len();
    let name = strategy.to_string();
    let metrics_path = dir.join("metrics.csv");
    let trace_path = dir.join("buffer_trace.csv");
    let state_path = dir.join(STATE_FILE);
    let marker = dir.join(INCOMPLETE_MARKER);
    let schedule = checkpoint_schedule(cfg.checkpoints.interval, n);
    let tc = cfg.train.train_config();

    let resumed: Option<CellState> = if opts.resume && state_path.is_file() {
        let text = fs::read_to_string(&state_path).map_err(|e| Error::io(&state_path, e))?;
        let st: CellState = serde_json::from_str(&text)?;
        if st.config_digest != digest {
            return Err(Error::config(format!(
                "{}: saved state belongs to config {} (current {digest})",
                dir.display(),
                st.config_digest
            )));
        }
        Some(st)
    } else {
        None
    };

    let (mut params, mut buffer, start) = match resumed {
        Some(st) => {
            truncate_rows(&metrics_path, st.completed)?;
            if st.buffer.is_some() {
                truncate_rows(&trace_path, st.completed)?;
            }
            (st.params, st.buffer, st.completed)
        }
        None => {
            if dir.exists() {
                fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::create_dir_all(dir.join("checkpoints")).map_err(|e| Error::io(dir, e))?;
            let params = ModelParams::init(
                data.train.dim(),
                &cfg.train.hidden,
                data.train.num_classes(),
                cfg.train.activation,
                &mut component_rng(seed, "init"),
            )?;
            let buffer = strategy
                .policy()
                .map(|p| ReplayBuffer::new(p, cfg.buffer.size));
            MetricsWriter::create(&metrics_path, data.train.num_classes(), digest)?;
            if buffer.is_some() {
                fs::write(&trace_path, format!("{TRACE_HEADER}\n"))
                    .map_err(|e| Error::io(&trace_path, e))?;
            }
            stream
                .stream
                .write_manifest(&dir.join("stream.json"), Some(digest))?;
            save_checkpoint(dir, &params, 0, digest)?;
            (params, buffer, 0)
        }
    };

    fs::write(&marker, b"").map_err(|e| Error::io(&marker, e))?;
    let mut metrics = MetricsWriter::append(&metrics_path, digest)?;
    let mut trace = match buffer {
        Some(_) => Some(
            fs::OpenOptions::new()
                .append(true)
                .open(&trace_path)
                .map_err(|e| Error::io(&trace_path, e))?,
        ),
        None => None,
    };

    let mut done = start;
    for i in start..n {
        if opts.stop_after.is_some_and(|s| done >= s) {
            break;
        }
        let exp = &stream.stream.experiences[i];
        train_on_experience(
            &mut params,
            &data.train,
            &exp.instances,
            buffer.as_ref(),
            &tc,
            &mut indexed_rng(seed, "learner", i as u64),
        )?;
        if let Some(buf) = buffer.as_mut() {
            buf.update(&exp.labelled(&data.train), &mut indexed_rng(seed, "buffer", i as u64));
            let file = trace.as_mut().expect("trace open with buffer");
            let mut lines = String::new();
            for row in buf.trace_rows(i) {
                lines.push_str(&trace_line(digest, &row));
                lines.push('\n');
            }
            file.write_all(lines.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| Error::io(&trace_path, e))?;
        }
        let ctx = eval_context(stream, i)?;
        metrics.write(&evaluate(&params, &data.test, &ctx, i, &name, seed)?)?;
        done = i + 1;
        if schedule.contains(&done) {
            save_checkpoint(dir, &params, done, digest)?;
        }
        let state = CellState {
            config_digest: digest.to_owned(),
            completed: done,
            params: params.clone(),
            buffer: buffer.clone(),
        };
        write_atomic(&state_path, &serde_json::to_vec(&state)?)?;
    }

    let complete = done == n;
    if complete {
        if cfg.analysis.any() {
            analyze_cell(cfg, digest, data, stream, dir, &cfg.analysis_flags())?;
        }
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    let records = read_metrics(&metrics_path)?;
    Ok(CellSummary {
        strategy: name,
        seed,
        complete,
        experiences_done: done,
        final_record: records.last().cloned().filter(|_| complete),
    })
}

fn save_checkpoint(dir: &Path, params: &ModelParams, completed: usize, digest: &str) -> Result<()> {
    let mut ck = snapshot(params, completed.checked_sub(1));
    ck.config_digest = Some(digest.to_owned());
    ck.save(&checkpoint_path(dir, completed))
}

/// Which analyses to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisFlags {
    pub interpolation: bool,
    pub block_distance: bool,
    pub cka: bool,
}

impl AnalysisFlags {
    pub const ALL: AnalysisFlags = AnalysisFlags {
        interpolation: true,
        block_distance: true,
        cka: true,
    };
}

impl ExperimentConfig {
    pub fn analysis_flags(&self) -> AnalysisFlags {
        AnalysisFlags {
            interpolation: self.analysis.interpolation,
            block_distance: self.analysis.block_distance,
            cka: self.analysis.cka,
        }
    }
}

/// Loads the checkpoints present in `dir/checkpoints`, keyed by the number
/// of experiences trained.
fn load_checkpoints(dir: &Path, digest: &str) -> Result<BTreeMap<usize, ModelParams>> {
    let ck_dir = dir.join("checkpoints");
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(&ck_dir).map_err(|e| Error::io(&ck_dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&ck_dir, e))?.path();
        let Some(n) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.strip_prefix("ckpt_"))
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        let (ck, params): (Checkpoint, ModelParams) = Checkpoint::load(&path)?;
        if ck.config_digest.as_deref().is_some_and(|d| d != digest) {
            return Err(Error::Checkpoint {
                path,
                reason: format!("written by config {:?}, expected {digest}", ck.config_digest),
            });
        }
        out.insert(n, params);
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Computes the enabled analyses for one finished cell from its checkpoints.
pub fn analyze_cell(
    cfg: &ExperimentConfig,
    digest: &str,
    data: &Datasets,
    stream: &SeededStream,
    dir: &Path,
    flags: &AnalysisFlags,
) -> Result<()> {
    let ckpts = load_checkpoints(dir, digest)?;
    let init = ckpts
        .get(&0)
        .ok_or_else(|| Error::data(format!("{}: initial checkpoint missing", dir.display())))?;
    let adir = dir.join("analysis");
    fs::create_dir_all(&adir).map_err(|e| Error::io(&adir, e))?;
    let a = &cfg.analysis;

    if flags.interpolation {
        let mut csv = String::from("config_digest,pair_id,start,end,alpha,accuracy\n");
        let starts: Vec<usize> = ckpts
            .keys()
            .copied()
            .filter(|&t| t > 0 && ckpts.contains_key(&(t + a.delta)))
            .collect();
        for (pair, &t) in starts.iter().enumerate() {
            // evaluated on the data the first checkpoint was trained on last
            let (x, y) = data.train.gather(&stream.stream.experiences[t - 1].instances);
            let curve = interpolate_checkpoints(&ckpts[&t], &ckpts[&(t + a.delta)], a.points, x.view(), &y)?;
            for (alpha, acc) in curve.alphas.iter().zip(&curve.accuracies) {
                csv.push_str(&format!("{digest},{pair},{t},{},{alpha:.6},{acc:.6}\n", t + a.delta));
            }
        }
        fs::write(adir.join("interpolation.csv"), csv).map_err(|e| Error::io(&adir, e))?;
    }

    if flags.block_distance {
        let mut csv = String::from("config_digest,experience,block,distance\n");
        for (&n, params) in ckpts.iter().filter(|(&n, _)| n > 0) {
            for b in block_distance(init, params)?.blocks {
                csv.push_str(&format!("{digest},{n},{},{}\n", b.block, fmt_opt(b.distance)));
            }
        }
        fs::write(adir.join("block_distance.csv"), csv).map_err(|e| Error::io(&adir, e))?;
    }

    if flags.cka {
        let trained: Vec<usize> = ckpts.keys().copied().filter(|&n| n > 0).collect();
        let mut csv = String::from("config_digest,pair_id,checkpoint_x,checkpoint_y,layer_x,layer_y,value\n");
        if let (Some(&first), Some(&last)) = (trained.first(), trained.last()) {
            let mid = trained[trained.len() / 2];
            let probe = probe_batch(&data.train, a.probe_size, a.probe_seed);
            for (pair, (p, q)) in [(first, mid), (mid, last), (first, last)].into_iter().enumerate() {
                let m = cka_matrix(&ckpts[&p], &ckpts[&q], probe.view())?;
                for (lx, row) in m.iter().enumerate() {
                    for (ly, v) in row.iter().enumerate() {
                        csv.push_str(&format!(
                            "{digest},{pair},{p},{q},block{lx},block{ly},{}\n",
                            fmt_opt(*v)
                        ));
                    }
                }
            }
        }
        fs::write(adir.join("cka.csv"), csv).map_err(|e| Error::io(&adir, e))?;
    }
    Ok(())
}

/// Fixed probe inputs: `size` training instances drawn without replacement.
pub fn probe_batch(train: &LabeledDataset, size: usize, seed: u64) -> Array2<f64> {
    let n = size.min(train.len());
    let mut picks = index::sample(&mut component_rng(seed, "probe"), train.len(), n).into_vec();
    picks.sort_unstable();
    train.gather(&picks).0
}

/// Recomputes analysis tables for every finished cell of an existing run.
/// All analyses run when the stored config enables none.
pub fn analyze(run_dir: &Path) -> Result<usize> {
    let path = run_dir.join("config.toml");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let cfg = ExperimentConfig::from_toml_str(&text, Some(run_dir), &[])?;
    let digest = cfg.digest();
    let flags = if cfg.analysis.any() {
        cfg.analysis_flags()
    } else {
        AnalysisFlags::ALL
    };
    let data = load_datasets(&cfg.dataset)?;
    let mut analysed = 0;
    for seed in &cfg.seeds {
        let stream = build_stream(&cfg.generator, &data.train, *seed)?;
        for st in cfg.strategies()? {
            let dir = cell_dir(run_dir, st, *seed);
            if !dir.is_dir() || dir.join(INCOMPLETE_MARKER).exists() {
                continue;
            }
            analyze_cell(&cfg, &digest, &data, &stream, &dir, &flags)?;
            analysed += 1;
        }
    }
    Ok(analysed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub class: usize,
    pub first_occurrence: Option<usize>,
    pub occurrences: usize,
    /// Presence rate over the experiences after the first occurrence.
    pub repetition_rate: Option<f64>,
    pub infrequent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectReport {
    pub config_digest: String,
    pub seed: u64,
    pub experiences: usize,
    pub classes: usize,
    pub scenario: ScenarioKind,
    pub concept_pattern: ScenarioKind,
    pub instance_coverage: f64,
    pub covered_classes: usize,
    pub instance_overlap_total: u64,
    pub concept_overlap_total: u64,
    pub infrequent_fraction: Option<f64>,
    pub class_stats: Vec<ClassStats>,
    pub notes: Vec<String>,
}

impl InspectReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("config digest      {}\n", self.config_digest));
        s.push_str(&format!("seed               {}\n", self.seed));
        s.push_str(&format!("experiences        {}\n", self.experiences));
        s.push_str(&format!("classes            {} ({} covered)\n", self.classes, self.covered_classes));
        s.push_str(&format!("scenario           {}\n", self.scenario));
        s.push_str(&format!("class pattern      {}\n", self.concept_pattern));
        s.push_str(&format!("instance coverage  {:.4}\n", self.instance_coverage));
        s.push_str(&format!("instance overlap   {}\n", self.instance_overlap_total));
        s.push_str(&format!("concept overlap    {}\n", self.concept_overlap_total));
        if let Some(f) = self.infrequent_fraction {
            let n = self.class_stats.iter().filter(|c| c.infrequent == Some(true)).count();
            s.push_str(&format!("low-repetition     {n} classes ({:.1}%)\n", 100.0 * f));
        }
        s.push_str("class  first  occurrences  repetition_rate\n");
        for c in &self.class_stats {
            s.push_str(&format!(
                "{:>5}  {:>5}  {:>11}  {:>15}\n",
                c.class,
                c.first_occurrence.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                c.occurrences,
                c.repetition_rate.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            ));
        }
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s
    }
}

/// Generates the stream of `seed` (default: the first configured seed) and
/// reports its statistics without training. With `out`, writes
/// `occurrence.csv` and `class_stats.csv` there.
pub fn inspect(cfg: &ExperimentConfig, seed: Option<u64>, out: Option<&Path>) -> Result<InspectReport> {
    cfg.validate()?;
    let seed = seed.unwrap_or(cfg.seeds[0]);
    let data = load_datasets(&cfg.dataset)?;
    let s = build_stream(&cfg.generator, &data.train, seed)?;
    let props = verify_scenario_properties(&s.stream, &data.train)?;
    let classes = data.train.num_classes();
    let presence = s.stream.presence_matrix(classes);
    let n = s.stream.len();

    let class_stats: Vec<ClassStats> = (0..classes)
        .map(|c| {
            let row = &presence[c];
            let first = row.iter().position(|&v| v == 1);
            let rate = first.and_then(|f| {
                let rest = &row[f + 1..];
                (!rest.is_empty())
                    .then(|| rest.iter().filter(|&&v| v == 1).count() as f64 / rest.len() as f64)
            });
            ClassStats {
                class: c,
                first_occurrence: first,
                occurrences: row.iter().filter(|&&v| v == 1).count(),
                repetition_rate: rate,
                infrequent: s.infrequent.as_ref().map(|inf| inf.contains(&c)),
            }
        })
        .collect();

    let digest = cfg.digest();
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut occ = String::from("config_digest,class");
        for e in 0..n {
            occ.push_str(&format!(",e{e}"));
        }
        occ.push('\n');
        for (c, row) in presence.iter().enumerate() {
            occ.push_str(&format!("{digest},{c}"));
            for v in row {
                occ.push_str(&format!(",{v}"));
            }
            occ.push('\n');
        }
        fs::write(dir.join("occurrence.csv"), occ).map_err(|e| Error::io(dir, e))?;
        let mut w = csv::Writer::from_path(dir.join("class_stats.csv"))?;
        w.write_record([
            "config_digest",
            "class",
            "first_occurrence",
            "occurrences",
            "repetition_rate",
            "infrequent",
        ])?;
        for c in &class_stats {
            w.write_record([
                digest.clone(),
                c.class.to_string(),
                c.first_occurrence.map(|v| v.to_string()).unwrap_or_default(),
                c.occurrences.to_string(),
                fmt_opt(c.repetition_rate),
                c.infrequent.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
    }

    let mut notes = s.stream.notes.clone();
    if let Some(m) = &s.matrix {
        notes.extend(m.repairs().iter().map(|r| {
            format!("experience {} was empty; class {} added ({})", r.experience, r.class, r.reason)
        }));
    }
    Ok(InspectReport {
        config_digest: digest,
        seed,
        experiences: n,
        classes,
        scenario: props.scenario,
        concept_pattern: props.concept_pattern,
        instance_coverage: props.instance_coverage(),
        covered_classes: props.covered_classes,
        instance_overlap_total: props.instance_overlap_total,
        concept_overlap_total: props.concept_overlap_total,
        infrequent_fraction: s
            .infrequent
            .as_ref()
            .map(|inf| inf.len() as f64 / classes as f64),
        class_stats,
        notes,
    })
}
