//! Weight-space and representation diagnostics: linear interpolation between
//! checkpoints, per-block distance from the initialisation, and linear CKA.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolationCurve {
    pub alphas: Vec<f64>,
    pub accuracies: Vec<f64>,
}

impl InterpolationCurve {
    pub fn min_accuracy(&self) -> f64 {
        self.accuracies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Accuracy at `alpha = 1`, i.e. of the first checkpoint.
    pub fn start_accuracy(&self) -> f64 {
        *self.accuracies.last().expect("at least two points")
    }

    /// Largest drop below the first checkpoint's own accuracy along the path.
    pub fn max_drop(&self) -> f64 {
        self.start_accuracy() - self.min_accuracy()
    }
}

/// Evaluates `w(α) = α·a + (1−α)·b` on an evenly spaced grid of `n_points`
/// values from 0 to 1 (both endpoints included).
pub fn interpolate_checkpoints(
    a: &ModelParams,
    b: &ModelParams,
    n_points: usize,
    x: ArrayView2<f64>,
    y: &[usize],
) -> Result<InterpolationCurve> {
    if n_points < 2 {
        return Err(Error::config("interpolation needs at least 2 points"));
    }
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(
            "interpolation endpoints have different architectures".into(),
        ));
    }
    let alphas: Vec<f64> = (0..n_points)
        .map(|k| k as f64 / (n_points - 1) as f64)
        .collect();
    let accuracies = alphas
        .iter()
        .map(|&alpha| {
            // endpoints are evaluated on the checkpoints themselves
            if alpha == 1.0 {
                a.accuracy(x, y)
            } else if alpha == 0.0 {
                b.accuracy(x, y)
            } else {
                a.interpolate(b, alpha)?.accuracy(x, y)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InterpolationCurve { alphas, accuracies })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDistance {
    pub block: String,
    /// `‖θ₀ − θⱼ‖₂ / ‖θ₀‖₂` over the block's weights and bias; `None` when
    /// the initial block is all zeros.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDistanceReport {
    pub blocks: Vec<BlockDistance>,
}

fn check_same_shape(a: &ModelParams, b: &ModelParams) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(
            "models have different architectures".into(),
        ))
    }
}

/// Raw `θ₀ − θⱼ` per block, weights flattened row-major followed by the bias.
pub fn block_differences(theta0: &ModelParams, thetaj: &ModelParams) -> Result<Vec<Array1<f64>>> {
    check_same_shape(theta0, thetaj)?;
    Ok(theta0
        .layers
        .iter()
        .zip(&thetaj.layers)
        .map(|(a, b)| {
            a.weight
                .iter()
                .zip(b.weight.iter())
                .chain(a.bias.iter().zip(b.bias.iter()))
                .map(|(u, v)| u - v)
                .collect()
        })
        .collect())
}

pub fn block_distance(theta0: &ModelParams, thetaj: &ModelParams) -> Result<BlockDistanceReport> {
    let diffs = block_differences(theta0, thetaj)?;
    let blocks = theta0
        .layers
        .iter()
        .zip(diffs)
        .map(|(layer, diff)| {
            let base = layer
                .weight
                .iter()
                .chain(layer.bias.iter())
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            let num = diff.dot(&diff).sqrt();
            BlockDistance {
                block: layer.name.clone(),
                distance: (base > 0.0).then(|| num / base),
            }
        })
        .collect();
    Ok(BlockDistanceReport { blocks })
}

fn center_columns(x: ArrayView2<f64>) -> Array2<f64> {
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    &x - &mean
}

/// Linear CKA `‖Yᵀ X‖²_F / (‖Xᵀ X‖_F ‖Yᵀ Y‖_F)` on column-centred inputs.
/// Rows are samples; the two matrices may have different widths.
pub fn linear_cka(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    if x.nrows() != y.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "CKA inputs have {} and {} samples",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < 2 {
        return Err(Error::data("CKA needs at least 2 samples"));
    }
    let xc = center_columns(x);
    let yc = center_columns(y);
    let frob2 = |m: &Array2<f64>| m.iter().map(|v| v * v).sum::<f64>();
    let xx = frob2(&xc.t().dot(&xc)).sqrt();
    let yy = frob2(&yc.t().dot(&yc)).sqrt();
    if xx == 0.0 || yy == 0.0 {
        return Err(Error::data("CKA input has zero variance"));
    }
    let yx = frob2(&yc.t().dot(&xc));
    Ok((yx / (xx * yy)).clamp(0.0, 1.0))
}

/// CKA between every pair of block outputs of two models on the same probe
/// inputs: entry `[i][j]` compares block `i` of `a` with block `j` of `b`.
pub fn cka_matrix(a: &ModelParams, b: &ModelParams, probe: ArrayView2<f64>) -> Result<Vec<Vec<Option<f64>>>> {
    let acts_a = a.activations(probe)?;
    let acts_b = b.activations(probe)?;
    Ok(acts_a
        .iter()
        .map(|xa| {
            acts_b
                .iter()
                .map(|xb| linear_cka(xa.view(), xb.view()).ok())
                .collect()
        })
        .collect())
}
