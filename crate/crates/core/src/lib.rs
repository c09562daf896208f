//! Class-incremental-with-repetition (CIR) stream toolkit.
//!
//! Builds continual-learning streams from a finite labelled dataset with a
//! slot-based generator ([`slot`]) or an occurrence-matrix sampler
//! ([`sampling`]), simulates rehearsal memories under reservoir,
//! class-balanced and frequency-aware storage policies ([`buffer`]), trains a
//! small softmax/MLP learner over the stream ([`learner`]) and reports
//! per-experience metrics ([`metrics`]) and weight-space diagnostics
//! ([`analysis`]). [`harness`] ties these together behind the `cirstream` CLI.

pub mod analysis;
pub mod buffer;
pub mod config;
pub mod dataset;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod rng;
pub mod sampling;
pub mod slot;
pub mod stream;

pub use buffer::{BufferComposition, ReplayBuffer, StoragePolicy};
pub use dataset::{LabeledDataset, SyntheticData, SyntheticSpec};
pub use distributions::{PmfKind, PmfSpec, ProbabilityVector};
pub use error::{Error, Result};
pub use learner::{ModelParams, TrainConfig};
pub use metrics::{EvalContext, RunRecord};
pub use rng::SeededRng;
pub use sampling::{BimodalSpec, OccurrenceMatrix, SamplingConfig};
pub use slot::SlotConfig;
pub use stream::{Experience, GeneratorSpec, PropertyReport, ScenarioKind, Stream};
