//! Reader and writer for the plain-text NNet format used by the ACAS Xu
//! benchmark networks.
//!
//! Layout after any `//` comment lines, all values comma separated:
//! layer count, input size, output size, max layer size; the layer sizes;
//! a legacy "symmetric" flag; input mins; input maxes; means (inputs then
//! output); ranges (inputs then output); then for every layer its weight
//! rows followed by one bias per row. Hidden layers are ReLU, the last layer
//! is linear.

use std::fmt::Write as _;

use super::{Activation, InputNormalization, Layer, Network};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

struct Tokens<'a> {
    origin: &'a str,
    values: Vec<(f64, usize)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn parse(text: &str, origin: &'a str) -> Result<Self> {
        let mut values = Vec::new();
        let mut last_line = 0;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with("//") {
                continue;
            }
            last_line = line_no;
            for field in trimmed.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    origin: origin.to_string(),
                    line: line_no,
                    message: format!("expected a number, found {field:?}"),
                })?;
                values.push((v, line_no));
            }
        }
        Ok(Tokens {
            origin,
            values,
            pos: 0,
            last_line,
        })
    }

    fn error(&self, line: usize, message: String) -> Error {
        Error::Parse {
            origin: self.origin.to_string(),
            line,
            message,
        }
    }

    fn next(&mut self, what: &str) -> Result<(f64, usize)> {
        let tok = self.values.get(self.pos).copied().ok_or_else(|| {
            self.error(
                self.last_line,
                format!("unexpected end of file while reading {what}"),
            )
        })?;
        self.pos += 1;
        Ok(tok)
    }

    fn real(&mut self, what: &str) -> Result<f64> {
        let (v, line) = self.next(what)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{}:{line}: {what}", self.origin)));
        }
        Ok(v)
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let (v, line) = self.next(what)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(self.error(
                line,
                format!("{what} must be a non-negative integer, got {v}"),
            ));
        }
        Ok(v as usize)
    }

    fn reals(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        (0..n).map(|_| self.real(what)).collect()
    }
}

pub fn network_from_nnet<S: Scalar>(text: &str, origin: &str) -> Result<Network<S>> {
    let mut t = Tokens::parse(text, origin)?;
    let num_layers = t.count("layer count")?;
    let input_size = t.count("input size")?;
    let output_size = t.count("output size")?;
    let _max_layer = t.count("max layer size")?;
    if num_layers == 0 {
        return Err(Error::Shape(format!(
            "{origin}: network declares zero layers"
        )));
    }
    let sizes = (0..=num_layers)
        .map(|_| t.count("layer size"))
        .collect::<Result<Vec<_>>>()?;
    if sizes[0] != input_size || sizes[num_layers] != output_size {
        return Err(Error::Shape(format!(
            "{origin}: layer sizes {sizes:?} disagree with {input_size} inputs / {output_size} outputs"
        )));
    }
    let _symmetric = t.count("symmetric flag")?;
    let mins = t.reals(input_size, "input minimum")?;
    let maxes = t.reals(input_size, "input maximum")?;
    let mut means = t.reals(input_size + 1, "mean")?;
    let mut ranges = t.reals(input_size + 1, "range")?;
    let output_mean = means.pop().unwrap_or(0.0);
    let output_range = ranges.pop().unwrap_or(1.0);

    let mut layers = Vec::with_capacity(num_layers);
    for k in 0..num_layers {
        let (cols, rows) = (sizes[k], sizes[k + 1]);
        let weights = t.reals(rows * cols, "weight")?;
        let bias = t.reals(rows, "bias")?;
        let act = if k + 1 == num_layers {
            Activation::Identity
        } else {
            Activation::Relu
        };
        let layer = Layer::from_row_major(
            rows,
            cols,
            weights.into_iter().map(S::of).collect(),
            bias.into_iter().map(S::of).collect(),
            act,
        )
        .map_err(|e| match e {
            Error::Shape(m) => Error::Shape(format!("{origin}: layer {k}: {m}")),
            Error::NonFinite(m) => Error::NonFinite(format!("{origin}: layer {k} {m}")),
            other => other,
        })?;
        layers.push(layer);
    }
    if let Some(&(_, line)) = t.values.get(t.pos) {
        return Err(t.error(line, "trailing values after the last layer".into()));
    }

    Network::new(layers)?.with_normalization(InputNormalization {
        mins,
        maxes,
        means,
        ranges,
        output_mean,
        output_range,
    })
}

/// Writes `net` in NNet form. Networks without normalization metadata get
/// identity constants (mean 0, range 1, unbounded min/max).
///
/// Only ReLU-hidden / linear-output networks are representable; other
/// activation layouts are written as if they had that layout.
pub fn network_to_nnet<S: Scalar>(net: &Network<S>) -> String {
    let n_in = net.input_dim();
    let identity = InputNormalization {
        mins: vec![f64::MIN; n_in],
        maxes: vec![f64::MAX; n_in],
        means: vec![0.0; n_in],
        ranges: vec![1.0; n_in],
        output_mean: 0.0,
        output_range: 1.0,
    };
    let norm = net.normalization().unwrap_or(&identity);
    let mut sizes = vec![n_in];
    sizes.extend(net.layers().iter().map(Layer::out_dim));

    let mut out = String::new();
    let join = |vals: &mut dyn Iterator<Item = f64>| -> String {
        vals.map(|v| format!("{v:?},")).collect::<String>()
    };
    out.push_str("// fully-connected ReLU network\n");
    let _ = writeln!(
        out,
        "{},{},{},{},",
        net.layers().len(),
        n_in,
        net.output_dim(),
        sizes.iter().max().copied().unwrap_or(0)
    );
    let _ = writeln!(
        out,
        "{}",
        sizes.iter().map(|s| format!("{s},")).collect::<String>()
    );
    out.push_str("0,\n");
    let _ = writeln!(out, "{}", join(&mut norm.mins.iter().copied()));
    let _ = writeln!(out, "{}", join(&mut norm.maxes.iter().copied()));
    let _ = writeln!(
        out,
        "{}",
        join(&mut norm.means.iter().copied().chain([norm.output_mean]))
    );
    let _ = writeln!(
        out,
        "{}",
        join(&mut norm.ranges.iter().copied().chain([norm.output_range]))
    );
    for layer in net.layers() {
        for r in 0..layer.out_dim() {
            let _ = writeln!(
                out,
                "{}",
                join(&mut layer.row(r).iter().map(|w| w.as_f64()))
            );
        }
        for b in layer.bias() {
            let _ = writeln!(out, "{:?},", b.as_f64());
        }
    }
    out
}
