//! Discrete distributions over experience indices.
//!
//! Used for the first-occurrence distribution of the sampling generator.
//! Indices are 0-based: experience 0 is the first one in the stream.
//! Infinite-support families (Poisson, Geometric) are evaluated on the first
//! `support_len` points and renormalised.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PmfKind {
    /// `f(i) ∝ 1 / (i + 1)^exponent`.
    Zipf { exponent: f64 },
    /// `f(i) ∝ mean^i e^{-mean} / i!`.
    Poisson { mean: f64 },
    /// `f(i) ∝ (1 - p)^i p`, so `p = 1` puts all mass on experience 0.
    Geometric { p: f64 },
    Uniform,
    Custom { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfSpec {
    #[serde(flatten)]
    pub kind: PmfKind,
    pub support_len: usize,
}

impl PmfSpec {
    pub fn new(kind: PmfKind, support_len: usize) -> Self {
        Self { kind, support_len }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.support_len;
        if n == 0 {
            return Err(Error::config("pmf support length must be positive"));
        }
        match &self.kind {
            PmfKind::Zipf { exponent } => {
                if !exponent.is_finite() || *exponent < 0.0 {
                    return Err(Error::config(format!(
                        "zipf exponent must be finite and >= 0, got {exponent}"
                    )));
                }
            }
            PmfKind::Poisson { mean } => {
                if !mean.is_finite() || *mean < 0.0 {
                    return Err(Error::config(format!(
                        "poisson mean must be finite and >= 0, got {mean}"
                    )));
                }
            }
            PmfKind::Geometric { p } => {
                if !p.is_finite() || *p <= 0.0 || *p > 1.0 {
                    return Err(Error::config(format!(
                        "geometric p must lie in (0, 1], got {p}"
                    )));
                }
            }
            PmfKind::Uniform => {}
            PmfKind::Custom { weights } => {
                if weights.len() != n {
                    return Err(Error::config(format!(
                        "custom pmf has {} weights but support length is {n}",
                        weights.len()
                    )));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::config(
                        "custom pmf weights must be finite and non-negative",
                    ));
                }
                if !weights.iter().any(|w| *w > 0.0) {
                    return Err(Error::config("custom pmf weights are all zero"));
                }
            }
        }
        Ok(())
    }
}

/// A normalised probability mass function over `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    /// Wraps raw non-negative weights, normalising them to sum to one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::config("empty probability vector"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config(
                "probability weights must be finite and non-negative",
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::config("probability weights sum to zero"));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum()
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    /// Reusable sampler; cheaper than [`ProbabilityVector::sample_index`]
    /// when drawing many times.
    pub fn sampler(&self) -> IndexSampler {
        let degenerate = self.probs.iter().position(|p| *p == 1.0);
        IndexSampler {
            // weights were validated on construction
            inner: WeightedIndex::new(&self.probs).expect("validated weights"),
            degenerate,
        }
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler().sample(rng)
    }
}

#[derive(Debug, Clone)]
pub struct IndexSampler {
    inner: WeightedIndex<f64>,
    degenerate: Option<usize>,
}

impl IndexSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self.degenerate {
            // still consume one draw so the stream position does not depend
            // on the distribution's shape
            Some(i) => {
                let _: f64 = rng.random();
                i
            }
            None => self.inner.sample(rng),
        }
    }
}

pub fn materialize_pmf(spec: &PmfSpec) -> Result<ProbabilityVector> {
    spec.validate()?;
    let n = spec.support_len;
    let weights: Vec<f64> = match &spec.kind {
        PmfKind::Zipf { exponent } => (1..=n).map(|r| (r as f64).powf(-exponent)).collect(),
        PmfKind::Poisson { mean } => {
            if *mean == 0.0 {
                let mut w = vec![0.0; n];
                w[0] = 1.0;
                w
            } else {
                let ln_mean = mean.ln();
                let mut ln_fact = 0.0;
                (0..n)
                    .map(|i| {
                        if i > 0 {
                            ln_fact += (i as f64).ln();
                        }
                        (i as f64 * ln_mean - mean - ln_fact).exp()
                    })
                    .collect()
            }
        }
        PmfKind::Geometric { p } => {
            let q = 1.0 - p;
            (0..n).map(|i| q.powi(i as i32) * p).collect()
        }
        PmfKind::Uniform => vec![1.0; n],
        PmfKind::Custom { weights } => weights.clone(),
    };
    if weights.iter().all(|w| *w == 0.0) {
        // e.g. geometric with tiny p underflowing everywhere cannot happen for
        // index 0, but a huge poisson mean can underflow the whole window
        return Err(Error::config(format!(
            "{:?} has no representable mass on the first {n} experiences",
            spec.kind
        )));
    }
    ProbabilityVector::from_weights(weights)
}
