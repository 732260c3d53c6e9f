//! Brute-force grid evaluation, used as independent ground truth for bounds
//! and rates on small input dimensions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interval::{InputBox, Interval, OutputBounds, Provenance};
use crate::network::{ForwardBuffer, Network};
use crate::property::DecisionProperty;
use crate::scalar::Scalar;

pub const DEFAULT_GRID_BUDGET: u128 = 100_000_000;

const CHUNK: u128 = 1 << 14;

/// Evenly spaced grid over a box, endpoints included. Zero-width dimensions
/// contribute a single coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<S = f64> {
    pub points_per_dim: usize,
    pub region: InputBox<S>,
    pub budget: u128,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(points_per_dim: usize, region: InputBox<S>) -> Result<Self> {
        if points_per_dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 2 points per dimension, got {points_per_dim}"
            )));
        }
        Ok(GridSpec {
            points_per_dim,
            region,
            budget: DEFAULT_GRID_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    /// Largest per-dimension density whose grid fits in `budget`, capped at `max_per_dim`.
    pub fn densest(region: InputBox<S>, max_per_dim: usize, budget: u128) -> Result<Self> {
        let free = region.free_dims().count() as u32;
        let mut p = max_per_dim.max(2);
        while p > 2 && (p as u128).checked_pow(free).is_none_or(|t| t > budget) {
            p -= 1;
        }
        Ok(Self::new(p, region)?.with_budget(budget))
    }

    fn axes(&self) -> Vec<Vec<S>> {
        self.region
            .dims()
            .iter()
            .map(|iv| linspace(iv, self.points_per_dim))
            .collect()
    }

    pub fn total_points(&self) -> u128 {
        self.axes().iter().map(|a| a.len() as u128).product()
    }

    fn checked_axes(&self) -> Result<Vec<Vec<S>>> {
        let axes = self.axes();
        let total = axes
            .iter()
            .try_fold(1u128, |acc, a| acc.checked_mul(a.len() as u128))
            .unwrap_or(u128::MAX);
        if total > self.budget {
            return Err(Error::BudgetExceeded {
                requested: total,
                budget: self.budget,
            });
        }
        Ok(axes)
    }
}

fn linspace<S: Scalar>(iv: &Interval<S>, n: usize) -> Vec<S> {
    if iv.width() == S::zero() {
        return vec![iv.lo()];
    }
    let last = n - 1;
    (0..n)
        .map(|k| {
            if k == last {
                iv.hi()
            } else {
                iv.lo() + iv.width() * S::of(k as f64 / last as f64)
            }
        })
        .collect()
}

/// Visits every grid point in `[start, end)` (mixed-radix index order).
fn for_each_point<S: Scalar>(axes: &[Vec<S>], start: u128, end: u128, mut f: impl FnMut(&[S])) {
    let mut x: Vec<S> = vec![S::zero(); axes.len()];
    for idx in start..end {
        let mut rem = idx;
        for (d, axis) in axes.iter().enumerate().rev() {
            let n = axis.len() as u128;
            x[d] = axis[(rem % n) as usize];
            rem /= n;
        }
        f(&x);
    }
}

fn chunks(total: u128) -> Vec<(u128, u128)> {
    let mut out = Vec::new();
    let mut s = 0;
    while s < total {
        let e = (s + CHUNK).min(total);
        out.push((s, e));
        s = e;
    }
    out
}

/// Fraction of grid points where the property's assertion holds.
pub fn grid_rate<S: Scalar>(
    net: &Network<S>,
    prop: &DecisionProperty<S>,
    grid: &GridSpec<S>,
) -> Result<f64> {
    prop.bind(net)?;
    let axes = grid.checked_axes()?;
    if axes.len() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: axes.len(),
        });
    }
    let total: u128 = axes.iter().map(|a| a.len() as u128).product();
    let holding: u128 = chunks(total)
        .into_par_iter()
        .map(|(s, e)| {
            let mut buf = ForwardBuffer::new();
            let mut count = 0u128;
            for_each_point(&axes, s, e, |x| {
                if prop.assertion.holds_at(net.forward_with(x, &mut buf)) {
                    count += 1;
                }
            });
            count
        })
        .sum();
    Ok(holding as f64 / total as f64)
}

/// Per-output `[min, max]` over all grid points.
pub fn grid_bounds<S: Scalar>(net: &Network<S>, grid: &GridSpec<S>) -> Result<OutputBounds<S>> {
    let axes = grid.checked_axes()?;
    if axes.len() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: axes.len(),
        });
    }
    let total: u128 = axes.iter().map(|a| a.len() as u128).product();
    let m = net.output_dim();
    let empty = || (vec![S::infinity(); m], vec![S::neg_infinity(); m]);
    let merge = |(mut lo, mut hi): (Vec<S>, Vec<S>), (lo2, hi2): (Vec<S>, Vec<S>)| {
        for j in 0..lo.len() {
            lo[j] = lo[j].min(lo2[j]);
            hi[j] = hi[j].max(hi2[j]);
        }
        (lo, hi)
    };
    let (lo, hi) = chunks(total)
        .into_par_iter()
        .map(|(s, e)| {
            let mut buf = ForwardBuffer::new();
            let (mut lo, mut hi) = empty();
            for_each_point(&axes, s, e, |x| {
                for (j, &v) in net.forward_with(x, &mut buf).iter().enumerate() {
                    lo[j] = lo[j].min(v);
                    hi[j] = hi[j].max(v);
                }
            });
            (lo, hi)
        })
        .reduce(empty, merge);
    let outs = lo
        .into_iter()
        .zip(hi)
        .map(|(l, h)| Interval::new(l, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(OutputBounds {
        outs,
        provenance: Provenance::Sampled,
    })
}
