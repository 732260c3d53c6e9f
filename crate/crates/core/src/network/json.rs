//! JSON network encoding:
//! `{"input_dim": n, "layers": [{"weights": [[..]], "bias": [..], "activation": "relu"|"linear"}]}`.

use serde::{Deserialize, Serialize};

use super::{Activation, InputNormalization, Layer, Network};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    input_dim: usize,
    layers: Vec<LayerDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalization: Option<InputNormalization>,
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

const DENSE_KINDS: &[&str] = &["dense", "linear", "fully_connected", "fc"];

pub fn network_from_json<S: Scalar>(text: &str, origin: &str) -> Result<Network<S>> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        origin: origin.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;

    let mut layers = Vec::with_capacity(doc.layers.len());
    for (k, l) in doc.layers.into_iter().enumerate() {
        if let Some(kind) = &l.kind {
            if !DENSE_KINDS.contains(&kind.to_ascii_lowercase().as_str()) {
                return Err(Error::UnsupportedLayer(format!(
                    "{origin}: layer {k} has type {kind:?}; only fully-connected layers are supported"
                )));
            }
        }
        let weights = l
            .weights
            .into_iter()
            .map(|row| row.into_iter().map(S::of).collect())
            .collect();
        let bias = l.bias.into_iter().map(S::of).collect();
        let layer = Layer::new(weights, bias, l.activation).map_err(|e| match e {
            Error::Shape(m) => Error::Shape(format!("{origin}: layer {k}: {m}")),
            Error::NonFinite(m) => Error::NonFinite(format!("{origin}: layer {k} {m}")),
            other => other,
        })?;
        layers.push(layer);
    }
    let net = Network::new(layers)?;
    if net.input_dim() != doc.input_dim {
        return Err(Error::Shape(format!(
            "{origin}: input_dim is {} but the first layer takes {} inputs",
            doc.input_dim,
            net.input_dim()
        )));
    }
    match doc.normalization {
        Some(n) => net.with_normalization(n),
        None => Ok(net),
    }
}

pub fn network_to_json<S: Scalar>(net: &Network<S>) -> String {
    let doc = NetworkDoc {
        input_dim: net.input_dim(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                kind: None,
                weights: (0..l.out_dim())
                    .map(|r| l.row(r).iter().map(|w| w.as_f64()).collect())
                    .collect(),
                bias: l.bias().iter().map(|b| b.as_f64()).collect(),
                activation: l.activation(),
            })
            .collect(),
        normalization: net.normalization().cloned(),
    };
    serde_json::to_string(&doc).expect("network document always serializes")
}
