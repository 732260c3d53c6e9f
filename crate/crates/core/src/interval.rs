//! Interval arithmetic and the two output-bound back-ends.
//!
//! [`propagate_formal`] pushes an input box through the network with plain
//! interval arithmetic and returns an over-approximation of the reachable
//! outputs. [`propagate_sampled`] evaluates the network on concrete points
//! drawn from the box and returns their per-output hull, an
//! under-approximation. Endpoints are not rounded outward, so formal bounds
//! are sound up to floating point rounding only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ForwardBuffer, Network};
use crate::scalar::Scalar;

/// Closed interval `[lo, hi]` with finite endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<S = f64> {
    lo: S,
    hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidInterval {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(v: S) -> Self {
        Interval { lo: v, hi: v }
    }

    #[inline]
    pub fn lo(&self) -> S {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> S {
        self.hi
    }

    #[inline]
    pub fn width(&self) -> S {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> S {
        self.lo + (self.hi - self.lo) / S::of(2.0)
    }

    pub fn contains(&self, v: S) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// `true` when `other ⊆ self`.
    pub fn encloses(&self, other: &Interval<S>) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn relu(&self) -> Self {
        Interval {
            lo: self.lo.max(S::zero()),
            hi: self.hi.max(S::zero()),
        }
    }
}

impl<S: Scalar> Serialize for Interval<S> {
    fn serialize<Ser: serde::Serializer>(
        &self,
        s: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        [self.lo.as_f64(), self.hi.as_f64()].serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for Interval<S> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[f64; 2]>::deserialize(d)?;
        Interval::new(S::of(lo), S::of(hi)).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned input region: one interval per network input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    bound = "S: Scalar",
    try_from = "Vec<Interval<S>>",
    into = "Vec<Interval<S>>"
)]
pub struct InputBox<S = f64> {
    dims: Vec<Interval<S>>,
}

impl<S: Scalar> TryFrom<Vec<Interval<S>>> for InputBox<S> {
    type Error = Error;

    fn try_from(dims: Vec<Interval<S>>) -> Result<Self> {
        InputBox::new(dims)
    }
}

impl<S: Scalar> From<InputBox<S>> for Vec<Interval<S>> {
    fn from(b: InputBox<S>) -> Self {
        b.dims
    }
}

impl<S: Scalar> InputBox<S> {
    pub fn new(dims: Vec<Interval<S>>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Shape(
                "input box needs at least one dimension".into(),
            ));
        }
        Ok(InputBox { dims })
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(S::of(lo), S::of(hi)))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }

    /// The unit hypercube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![Interval::new(S::zero(), S::one())?; dim])
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[Interval<S>] {
        &self.dims
    }

    pub fn center(&self) -> Vec<S> {
        self.dims.iter().map(Interval::midpoint).collect()
    }

    pub fn contains_point(&self, x: &[S]) -> bool {
        x.len() == self.dims.len() && self.dims.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    /// `true` when `other ⊆ self`.
    pub fn encloses(&self, other: &InputBox<S>) -> bool {
        self.dims.len() == other.dims.len()
            && self
                .dims
                .iter()
                .zip(&other.dims)
                .all(|(a, b)| a.encloses(b))
    }

    /// Indices of dimensions with positive width.
    pub fn free_dims(&self) -> impl Iterator<Item = usize> + '_ {
        self.dims
            .iter()
            .enumerate()
            .filter(|(_, iv)| iv.width() > S::zero())
            .map(|(i, _)| i)
    }

    /// Product of widths over dimensions with positive width (1 for a point).
    pub fn volume(&self) -> f64 {
        self.dims
            .iter()
            .map(|iv| iv.width().as_f64())
            .filter(|&w| w > 0.0)
            .product()
    }

    pub(crate) fn with_dim(&self, k: usize, iv: Interval<S>) -> Self {
        let mut dims = self.dims.clone();
        dims[k] = iv;
        InputBox { dims }
    }

    /// Draws a point uniformly at random from the box.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<S> {
        let mut x = Vec::with_capacity(self.dims.len());
        self.sample_into(rng, &mut x);
        x
    }

    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut Vec<S>) {
        x.clear();
        x.extend(self.dims.iter().map(|iv| {
            let w = iv.width();
            if w > S::zero() {
                let u: f64 = rng.random();
                (iv.lo + w * S::of(u)).min(iv.hi)
            } else {
                iv.lo
            }
        }));
    }

    /// Stable 64-bit fingerprint of the endpoint bit patterns.
    pub(crate) fn fingerprint(&self) -> u64 {
        self.dims.iter().fold(0x243f_6a88_85a3_08d3, |h, iv| {
            let h = mix64(h ^ iv.lo.as_f64().to_bits());
            mix64(h ^ iv.hi.as_f64().to_bits())
        })
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Sound over-approximation from interval arithmetic.
    Formal,
    /// Hull of concrete evaluations; an under-approximation.
    Sampled,
}

/// One interval per network output.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct OutputBounds<S = f64> {
    pub outs: Vec<Interval<S>>,
    pub provenance: Provenance,
}

impl<S: Scalar> OutputBounds<S> {
    /// `true` when every interval of `inner` lies inside the matching one here.
    pub fn encloses(&self, inner: &OutputBounds<S>) -> bool {
        self.outs.len() == inner.outs.len()
            && self
                .outs
                .iter()
                .zip(&inner.outs)
                .all(|(a, b)| a.encloses(b))
    }

    pub fn contains_point(&self, y: &[S]) -> bool {
        y.len() == self.outs.len() && self.outs.iter().zip(y).all(|(iv, &v)| iv.contains(v))
    }
}

/// Width `hi - lo` of output `j`.
pub fn bound_width<S: Scalar>(bounds: &OutputBounds<S>, j: usize) -> Result<S> {
    bounds
        .outs
        .get(j)
        .map(Interval::width)
        .ok_or(Error::IndexOutOfRange {
            index: j,
            len: bounds.outs.len(),
        })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Random points per box.
    pub n: usize,
    pub seed: u64,
    /// Also evaluate the box corners when there are at most `n` of them.
    pub include_vertices: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n: 20,
            seed: 0,
            include_vertices: true,
        }
    }
}

impl SamplingConfig {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        let cfg = SamplingConfig {
            n,
            seed,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!(
                "sample count must be at least 2, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Interval image of `x ↦ W x + b` with `W` given row-major
/// (`bias.len()` rows, `input.len()` columns).
pub fn affine_image<S: Scalar>(
    weights: &[S],
    bias: &[S],
    input: &[Interval<S>],
) -> Result<Vec<Interval<S>>> {
    let cols = input.len();
    if weights.len() != bias.len() * cols {
        return Err(Error::DimensionMismatch {
            expected: bias.len() * cols,
            actual: weights.len(),
        });
    }
    let mut out = Vec::with_capacity(bias.len());
    affine_into(weights, bias, input, &mut out);
    Ok(out)
}

fn affine_into<S: Scalar>(
    weights: &[S],
    bias: &[S],
    input: &[Interval<S>],
    out: &mut Vec<Interval<S>>,
) {
    let cols = input.len();
    out.clear();
    out.extend(bias.iter().enumerate().map(|(r, &b)| {
        let row = &weights[r * cols..(r + 1) * cols];
        let (mut lo, mut hi) = (b, b);
        for (&w, iv) in row.iter().zip(input) {
            let (a, c) = (w * iv.lo, w * iv.hi);
            lo = lo + a.min(c);
            hi = hi + a.max(c);
        }
        Interval { lo, hi }
    }));
}

pub fn relu_image<S: Scalar>(input: &[Interval<S>]) -> Vec<Interval<S>> {
    input.iter().map(Interval::relu).collect()
}

/// Sound interval enclosure of the network's outputs over `region`.
pub fn propagate_formal<S: Scalar>(
    net: &Network<S>,
    region: &InputBox<S>,
) -> Result<OutputBounds<S>> {
    check_dim(net, region)?;
    let mut cur = region.dims.clone();
    let mut next = Vec::new();
    for layer in net.layers() {
        affine_into(layer.weights(), layer.bias(), &cur, &mut next);
        if layer.activation() == crate::network::Activation::Relu {
            next.iter_mut().for_each(|iv| *iv = iv.relu());
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(OutputBounds {
        outs: cur,
        provenance: Provenance::Formal,
    })
}

/// Points drawn from a box together with their network outputs.
#[derive(Clone, Debug)]
pub struct SampleSet<S = f64> {
    pub inputs: Vec<Vec<S>>,
    pub outputs: Vec<Vec<S>>,
}

impl<S: Scalar> SampleSet<S> {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Per-output `[min, max]` over all samples.
    pub fn bounds(&self) -> OutputBounds<S> {
        let dim = self.outputs.first().map_or(0, Vec::len);
        let mut outs: Vec<Interval<S>> = (0..dim)
            .map(|_| Interval {
                lo: S::infinity(),
                hi: S::neg_infinity(),
            })
            .collect();
        for y in &self.outputs {
            for (iv, &v) in outs.iter_mut().zip(y) {
                iv.lo = iv.lo.min(v);
                iv.hi = iv.hi.max(v);
            }
        }
        OutputBounds {
            outs,
            provenance: Provenance::Sampled,
        }
    }
}

/// Evaluates `cfg.n` uniform points (plus the corners, when enabled and
/// `2^free_dims <= n`) of `region`.
///
/// The generator is seeded from `cfg.seed` and the box itself, so equal
/// inputs always produce the same samples and a larger `n` extends the
/// sample sequence of a smaller one.
pub fn draw_samples<S: Scalar>(
    net: &Network<S>,
    region: &InputBox<S>,
    cfg: &SamplingConfig,
) -> Result<SampleSet<S>> {
    check_dim(net, region)?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(cfg.seed ^ region.fingerprint()));
    let mut inputs: Vec<Vec<S>> = (0..cfg.n).map(|_| region.sample_point(&mut rng)).collect();

    let free: Vec<usize> = region.free_dims().collect();
    if cfg.include_vertices && free.len() < usize::BITS as usize && (1usize << free.len()) <= cfg.n
    {
        for mask in 0..(1usize << free.len()) {
            let mut x: Vec<S> = region.dims.iter().map(|iv| iv.lo).collect();
            for (bit, &d) in free.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    x[d] = region.dims[d].hi;
                }
            }
            inputs.push(x);
        }
    }

    let mut buf = ForwardBuffer::new();
    let outputs = inputs
        .iter()
        .map(|x| net.forward_with(x, &mut buf).to_vec())
        .collect();
    Ok(SampleSet { inputs, outputs })
}

/// Hull of sampled network outputs over `region`; see [`draw_samples`].
pub fn propagate_sampled<S: Scalar>(
    net: &Network<S>,
    region: &InputBox<S>,
    cfg: &SamplingConfig,
) -> Result<OutputBounds<S>> {
    Ok(draw_samples(net, region, cfg)?.bounds())
}

fn check_dim<S: Scalar>(net: &Network<S>, region: &InputBox<S>) -> Result<()> {
    if region.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: region.dim(),
        });
    }
    Ok(())
}
