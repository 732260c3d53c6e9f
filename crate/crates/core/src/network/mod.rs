//! Dense feed-forward ReLU networks: representation, loading and evaluation.
//!
//! A [`Network`] is an ordered list of fully-connected [`Layer`]s. Hidden
//! layers may use either ReLU or identity activation; the output layer is
//! always affine. Networks are immutable once built and can be shared
//! freely across worker threads.

mod json;
mod nnet;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use json::{network_from_json, network_to_json};
pub use nnet::{network_from_nnet, network_to_nnet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    #[serde(rename = "relu")]
    Relu,
    #[serde(rename = "linear", alias = "identity")]
    Identity,
}

/// On-disk network encodings understood by [`load_network`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkFormat {
    Json,
    #[serde(rename = "nnet")]
    NNet,
}

impl NetworkFormat {
    /// Guesses the format from a file extension (`.nnet` or anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("nnet") => NetworkFormat::NNet,
            _ => NetworkFormat::Json,
        }
    }
}

/// A fully-connected layer `act(W x + b)` with `W` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<S = f64> {
    weights: Vec<S>,
    bias: Vec<S>,
    in_dim: usize,
    activation: Activation,
}

impl<S: Scalar> Layer<S> {
    /// Builds a layer from nested rows (`weights[r][c]`, rows = outputs).
    pub fn new(weights: Vec<Vec<S>>, bias: Vec<S>, activation: Activation) -> Result<Self> {
        let in_dim = weights.first().map_or(0, Vec::len);
        if let Some((r, row)) = weights
            .iter()
            .enumerate()
            .find(|(_, row)| row.len() != in_dim)
        {
            return Err(Error::Shape(format!(
                "weight row {r} has {} columns, expected {in_dim}",
                row.len()
            )));
        }
        Self::from_row_major(
            weights.len(),
            in_dim,
            weights.into_iter().flatten().collect(),
            bias,
            activation,
        )
    }

    pub fn from_row_major(
        rows: usize,
        cols: usize,
        weights: Vec<S>,
        bias: Vec<S>,
        activation: Activation,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "layer of shape {rows}x{cols} is empty"
            )));
        }
        if weights.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {} weights for a {rows}x{cols} layer, got {}",
                rows * cols,
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(Error::Shape(format!(
                "bias length {} does not match {rows} weight rows",
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer weights or bias".into()));
        }
        Ok(Layer {
            weights,
            bias,
            in_dim: cols,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Row-major weight matrix.
    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.weights[r * self.in_dim..(r + 1) * self.in_dim]
    }

    pub fn bias(&self) -> &[S] {
        &self.bias
    }

    fn apply_into(&self, x: &[S], out: &mut Vec<S>) {
        out.clear();
        out.extend(self.bias.iter().enumerate().map(|(r, &b)| {
            let z = self
                .row(r)
                .iter()
                .zip(x)
                .fold(b, |acc, (&w, &xi)| acc + w * xi);
            match self.activation {
                Activation::Relu => z.max(S::zero()),
                Activation::Identity => z,
            }
        }));
    }

    fn cast<T: Scalar>(&self) -> Layer<T> {
        Layer {
            weights: self.weights.iter().map(|w| T::of(w.as_f64())).collect(),
            bias: self.bias.iter().map(|b| T::of(b.as_f64())).collect(),
            in_dim: self.in_dim,
            activation: self.activation,
        }
    }
}

/// Per-input normalization constants carried by NNet files.
///
/// The network itself operates on normalized coordinates; these constants
/// only map raw inputs into that space (and outputs back out of it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputNormalization {
    pub mins: Vec<f64>,
    pub maxes: Vec<f64>,
    pub means: Vec<f64>,
    pub ranges: Vec<f64>,
    pub output_mean: f64,
    pub output_range: f64,
}

impl InputNormalization {
    /// Clamps a raw input to the declared range and applies `(x - mean) / range`.
    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .enumerate()
            .map(|(i, &x)| {
                let clamped = x.max(self.mins[i]).min(self.maxes[i]);
                (clamped - self.means[i]) / self.ranges[i]
            })
            .collect()
    }

    pub fn denormalize_output(&self, y: f64) -> f64 {
        y * self.output_range + self.output_mean
    }
}

/// Reusable activation buffers for allocation-free forward passes.
#[derive(Clone, Debug, Default)]
pub struct ForwardBuffer<S> {
    front: Vec<S>,
    back: Vec<S>,
}

impl<S: Scalar> ForwardBuffer<S> {
    pub fn new() -> Self {
        ForwardBuffer {
            front: Vec::new(),
            back: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<S = f64> {
    layers: Vec<Layer<S>>,
    normalization: Option<InputNormalization>,
}

impl<S: Scalar> Network<S> {
    pub fn new(layers: Vec<Layer<S>>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::Shape("network has no layers".into()));
        };
        if last.activation != Activation::Identity {
            return Err(Error::Shape(
                "output layer must use linear (identity) activation".into(),
            ));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(Error::Shape(format!(
                    "layer {} expects {} inputs but layer {k} produces {}",
                    k + 1,
                    pair[1].in_dim(),
                    pair[0].out_dim()
                )));
            }
        }
        Ok(Network {
            layers,
            normalization: None,
        })
    }

    pub fn with_normalization(mut self, normalization: InputNormalization) -> Result<Self> {
        let n = self.input_dim();
        if normalization.mins.len() != n
            || normalization.maxes.len() != n
            || normalization.means.len() != n
            || normalization.ranges.len() != n
        {
            return Err(Error::Shape(format!(
                "normalization constants must have one entry per input ({n})"
            )));
        }
        self.normalization = Some(normalization);
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn normalization(&self) -> Option<&InputNormalization> {
        self.normalization.as_ref()
    }

    /// Evaluates the network on `x`.
    pub fn forward(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        let mut buf = ForwardBuffer::new();
        Ok(self.forward_with(x, &mut buf).to_vec())
    }

    /// Unchecked forward pass reusing `buf`; `x` must have `input_dim` entries.
    pub fn forward_with<'b>(&self, x: &[S], buf: &'b mut ForwardBuffer<S>) -> &'b [S] {
        debug_assert_eq!(x.len(), self.input_dim());
        let ForwardBuffer { front, back } = buf;
        self.layers[0].apply_into(x, front);
        for layer in &self.layers[1..] {
            layer.apply_into(front, back);
            std::mem::swap(front, back);
        }
        front
    }

    /// Converts every weight to another scalar type.
    pub fn cast<T: Scalar>(&self) -> Network<T> {
        Network {
            layers: self.layers.iter().map(Layer::cast).collect(),
            normalization: self.normalization.clone(),
        }
    }
}

pub fn load_network(path: impl AsRef<Path>, format: NetworkFormat) -> Result<Network<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    match format {
        NetworkFormat::Json => network_from_json(&text, &origin),
        NetworkFormat::NNet => network_from_nnet(&text, &origin),
    }
}

pub fn save_network<S: Scalar>(
    net: &Network<S>,
    path: impl AsRef<Path>,
    format: NetworkFormat,
) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        NetworkFormat::Json => network_to_json(net),
        NetworkFormat::NNet => network_to_nnet(net),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Builds a seeded random network with the given layer widths
/// (`sizes[0]` inputs, `sizes[last]` outputs, ReLU on every hidden layer).
///
/// Weights and biases are uniform in `±1/sqrt(fan_in)`.
pub fn random_network(sizes: &[usize], seed: u64) -> Result<Network<f64>> {
    if sizes.len() < 2 {
        return Err(Error::Shape(
            "need at least an input and an output width".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = sizes.len() - 2;
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let scale = 1.0 / (fan_in.max(1) as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-scale..=scale))
                .collect();
            let bias = (0..fan_out)
                .map(|_| rng.random_range(-scale..=scale))
                .collect();
            let act = if k == last {
                Activation::Identity
            } else {
                Activation::Relu
            };
            Layer::from_row_major(fan_out, fan_in, weights, bias, act)
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}
