//! Subarea-tree search that turns per-box verdicts into safe, violation and
//! unknown rates.
//!
//! The input box of a property is the root of a tree. Every node is bounded
//! with the configured back-end and checked; decided nodes become leaves
//! whose normalized volume is credited to the safe or violation mass, and
//! undecided nodes are split into equal-width children along one dimension.
//! Nodes that hit `max_depth` or the `min_width` floor are settled by the
//! [`MixedLeafPolicy`].
//!
//! Sibling subtrees are explored in parallel. Each node's randomness is
//! derived from the configured seeds and the node's position in the tree,
//! and subtree results are merged in child order, so reports do not depend
//! on scheduling.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{
    draw_samples, mix64, propagate_formal, InputBox, Interval, SampleSet, SamplingConfig,
};
use crate::network::{ForwardBuffer, Network};
use crate::property::{check_dominance, DecisionProperty, DominanceAssertion, Verdict};
use crate::scalar::Scalar;

/// Subtrees above this depth are explored with rayon; below it, serially.
const PARALLEL_DEPTH: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Interval arithmetic bounds; decided mass is sound.
    Formal,
    /// Sampled bounds and concrete witnesses.
    Sampled,
    /// Sampled first, with every sampled proof re-checked formally.
    Hybrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitStrategy {
    #[serde(rename = "random")]
    Random,
    /// Widest splittable dimension, lowest index on ties.
    #[serde(rename = "widest")]
    WidestDim,
    /// Cycles through splittable dimensions by depth.
    #[serde(rename = "roundrobin")]
    RoundRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedLeafPolicy {
    /// Undecided leaves count as unknown mass.
    Unknown,
    /// Undecided leaves split their mass by the fraction of satisfying samples.
    ProportionalBySamples,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifierConfig {
    pub backend: Backend,
    pub sampling: SamplingConfig,
    pub max_depth: usize,
    /// Dimensions narrower than this are never split.
    pub min_width: f64,
    pub split_strategy: SplitStrategy,
    pub split_arity: usize,
    pub rng_seed: u64,
    pub mixed_leaf_policy: MixedLeafPolicy,
    /// Cap on counterexamples kept in a report.
    pub max_counterexamples: usize,
}

impl VerifierConfig {
    /// Defaults for a back-end: formal runs leave undecided leaves unknown,
    /// sampled and hybrid runs apportion them by samples.
    pub fn for_backend(backend: Backend) -> Self {
        VerifierConfig {
            backend,
            sampling: SamplingConfig::default(),
            max_depth: 12,
            min_width: 1e-6,
            split_strategy: SplitStrategy::Random,
            split_arity: 2,
            rng_seed: 0,
            mixed_leaf_policy: match backend {
                Backend::Formal => MixedLeafPolicy::Unknown,
                Backend::Sampled | Backend::Hybrid => MixedLeafPolicy::ProportionalBySamples,
            },
            max_counterexamples: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        if !(self.min_width > 0.0 && self.min_width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "min_width must be positive and finite, got {}",
                self.min_width
            )));
        }
        if self.split_arity < 2 {
            return Err(Error::InvalidConfig(format!(
                "split arity must be at least 2, got {}",
                self.split_arity
            )));
        }
        Ok(())
    }
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self::for_backend(Backend::Sampled)
    }
}

/// Picks the dimension to split, or `None` when no dimension is at least
/// `min_width` wide (zero-width dimensions never qualify).
pub fn choose_split_dim<S: Scalar, R: Rng + ?Sized>(
    region: &InputBox<S>,
    strategy: SplitStrategy,
    depth: usize,
    min_width: f64,
    rng: &mut R,
) -> Option<usize> {
    let eligible: Vec<usize> = region
        .free_dims()
        .filter(|&k| region.dims()[k].width().as_f64() >= min_width)
        .collect();
    if eligible.is_empty() {
        return None;
    }
    Some(match strategy {
        SplitStrategy::Random => eligible[rng.random_range(0..eligible.len())],
        SplitStrategy::RoundRobin => eligible[depth % eligible.len()],
        SplitStrategy::WidestDim => {
            let mut best = eligible[0];
            for &k in &eligible[1..] {
                if region.dims()[k].width() > region.dims()[best].width() {
                    best = k;
                }
            }
            best
        }
    })
}

/// Cuts `region` into `arity` equal-width pieces along `dim`.
pub fn split_along<S: Scalar>(region: &InputBox<S>, dim: usize, arity: usize) -> Vec<InputBox<S>> {
    let iv = region.dims()[dim];
    let (lo, hi) = (iv.lo(), iv.hi());
    let mut cuts = Vec::with_capacity(arity + 1);
    cuts.push(lo);
    for i in 1..arity {
        let t = S::of(i as f64 / arity as f64);
        let prev = *cuts.last().expect("non-empty");
        cuts.push((lo + (hi - lo) * t).max(prev).min(hi));
    }
    cuts.push(hi);
    cuts.windows(2)
        .map(|c| region.with_dim(dim, Interval::new(c[0], c[1]).expect("ordered cuts")))
        .collect()
}

/// Splits `region` into `arity` boxes along the dimension `strategy` picks.
pub fn split_box<S: Scalar, R: Rng + ?Sized>(
    region: &InputBox<S>,
    strategy: SplitStrategy,
    arity: usize,
    depth: usize,
    rng: &mut R,
) -> Result<Vec<InputBox<S>>> {
    if arity < 2 {
        return Err(Error::InvalidConfig(format!(
            "split arity must be at least 2, got {arity}"
        )));
    }
    let dim = choose_split_dim(region, strategy, depth, 0.0, rng).ok_or(Error::Degenerate)?;
    Ok(split_along(region, dim, arity))
}

/// A node of the explored subarea tree.
#[derive(Clone, Debug)]
pub struct SubareaNode<S = f64> {
    pub region: InputBox<S>,
    pub depth: usize,
    /// Fraction of the root volume covered by this node.
    pub mass: f64,
    pub verdict: Verdict<S>,
    pub children: Vec<SubareaNode<S>>,
}

impl<S: Scalar> SubareaNode<S> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// This node and all descendants, breadth-first.
    pub fn walk(&self) -> Vec<&SubareaNode<S>> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let node = out[i];
            out.extend(node.children.iter());
            i += 1;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafCounts {
    pub proved: u64,
    pub denied: u64,
    pub unknown: u64,
    /// Unknown leaves whose mass was split by sample fractions.
    pub apportioned: u64,
}

impl LeafCounts {
    fn add(&mut self, o: &LeafCounts) {
        self.proved += o.proved;
        self.denied += o.denied;
        self.unknown += o.unknown;
        self.apportioned += o.apportioned;
    }

    pub fn total(&self) -> u64 {
        self.proved + self.denied + self.unknown
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub property: String,
    pub safe_rate: f64,
    pub violation_rate: f64,
    pub unknown_rate: f64,
    pub leaves: LeafCounts,
    pub counterexamples: Vec<Vec<f64>>,
    /// Bound computations performed (formal or sampled).
    pub propagations: u64,
    pub nodes: u64,
    pub max_depth_reached: usize,
    pub wall_time_secs: f64,
    pub config: VerifierConfig,
}

impl VerificationReport {
    /// Copy with timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        VerificationReport {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn row(&self) -> ReportRow {
        ReportRow {
            property: self.property.clone(),
            backend: self.config.backend,
            safe_rate: self.safe_rate,
            violation_rate: self.violation_rate,
            unknown_rate: self.unknown_rate,
            leaves_proved: self.leaves.proved,
            leaves_denied: self.leaves.denied,
            leaves_unknown: self.leaves.unknown,
            counterexamples: self.counterexamples.len(),
            propagations: self.propagations,
            nodes: self.nodes,
            max_depth: self.config.max_depth,
            seed: self.config.rng_seed,
            wall_time_secs: self.wall_time_secs,
        }
    }
}

/// Flat per-property summary, one CSV row per report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub property: String,
    pub backend: Backend,
    pub safe_rate: f64,
    pub violation_rate: f64,
    pub unknown_rate: f64,
    pub leaves_proved: u64,
    pub leaves_denied: u64,
    pub leaves_unknown: u64,
    pub counterexamples: usize,
    pub propagations: u64,
    pub nodes: u64,
    pub max_depth: usize,
    pub seed: u64,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub safe_rate: f64,
    pub violation_rate: f64,
    pub unknown_rate: f64,
    pub rows: Vec<ReportRow>,
}

/// Mean safe / violation / unknown rates across properties.
pub fn aggregate(reports: &[VerificationReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&VerificationReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(AggregateReport {
        safe_rate: mean(|r| r.safe_rate),
        violation_rate: mean(|r| r.violation_rate),
        unknown_rate: mean(|r| r.unknown_rate),
        rows: reports.iter().map(VerificationReport::row).collect(),
    })
}

/// Fraction of `n` uniform samples of the property box where the assertion holds.
pub fn informal_rate<S: Scalar>(
    net: &Network<S>,
    prop: &DecisionProperty<S>,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "informal rate needs at least one sample".into(),
        ));
    }
    prop.bind(net)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = ForwardBuffer::new();
    let mut x = Vec::with_capacity(net.input_dim());
    let mut holds = 0usize;
    for _ in 0..n {
        prop.input_box.sample_into(&mut rng, &mut x);
        if prop.assertion.holds_at(net.forward_with(&x, &mut buf)) {
            holds += 1;
        }
    }
    Ok(holds as f64 / n as f64)
}

pub fn verify<S: Scalar>(
    net: &Network<S>,
    prop: &DecisionProperty<S>,
    cfg: &VerifierConfig,
) -> Result<VerificationReport> {
    Ok(run(net, prop, cfg, false)?.0)
}

/// Like [`verify`], also returning the explored subarea tree.
pub fn verify_tree<S: Scalar>(
    net: &Network<S>,
    prop: &DecisionProperty<S>,
    cfg: &VerifierConfig,
) -> Result<(VerificationReport, SubareaNode<S>)> {
    let (report, tree) = run(net, prop, cfg, true)?;
    Ok((report, tree.expect("tree recorded on request")))
}

fn run<S: Scalar>(
    net: &Network<S>,
    prop: &DecisionProperty<S>,
    cfg: &VerifierConfig,
    record_tree: bool,
) -> Result<(VerificationReport, Option<SubareaNode<S>>)> {
    cfg.validate()?;
    prop.bind(net)?;
    let start = Instant::now();
    let search = Search {
        net,
        assertion: &prop.assertion,
        cfg,
        record_tree,
    };
    let root_path = mix64(cfg.rng_seed);
    let (tally, tree) = search.explore(prop.input_box.clone(), 0, 1.0, root_path);
    let wall_time_secs = start.elapsed().as_secs_f64();

    let report = VerificationReport {
        property: prop.name.clone(),
        safe_rate: tally.safe,
        violation_rate: tally.violation,
        unknown_rate: tally.unknown,
        leaves: tally.leaves,
        counterexamples: tally
            .counterexamples
            .iter()
            .map(|x| x.iter().map(|v| v.as_f64()).collect())
            .collect(),
        propagations: tally.propagations,
        nodes: tally.nodes,
        max_depth_reached: tally.max_depth,
        wall_time_secs,
        config: cfg.clone(),
    };
    Ok((report, tree))
}

struct Tally<S> {
    safe: f64,
    violation: f64,
    unknown: f64,
    leaves: LeafCounts,
    counterexamples: Vec<Vec<S>>,
    propagations: u64,
    nodes: u64,
    max_depth: usize,
}

impl<S: Scalar> Tally<S> {
    fn new(depth: usize) -> Self {
        Tally {
            safe: 0.0,
            violation: 0.0,
            unknown: 0.0,
            leaves: LeafCounts::default(),
            counterexamples: Vec::new(),
            propagations: 0,
            nodes: 1,
            max_depth: depth,
        }
    }

    fn absorb(&mut self, other: Tally<S>, cap: usize) {
        self.safe += other.safe;
        self.violation += other.violation;
        self.unknown += other.unknown;
        self.leaves.add(&other.leaves);
        let room = cap.saturating_sub(self.counterexamples.len());
        self.counterexamples
            .extend(other.counterexamples.into_iter().take(room));
        self.propagations += other.propagations;
        self.nodes += other.nodes;
        self.max_depth = self.max_depth.max(other.max_depth);
    }

    fn witness(&mut self, x: Vec<S>, cap: usize) {
        if self.counterexamples.len() < cap {
            self.counterexamples.push(x);
        }
    }
}

struct Search<'a, S> {
    net: &'a Network<S>,
    assertion: &'a DominanceAssertion,
    cfg: &'a VerifierConfig,
    record_tree: bool,
}

impl<S: Scalar> Search<'_, S> {
    fn samples(&self, region: &InputBox<S>, tally: &mut Tally<S>) -> SampleSet<S> {
        tally.propagations += 1;
        draw_samples(self.net, region, &self.cfg.sampling).expect("dimensions checked at bind time")
    }

    fn formal_verdict(&self, region: &InputBox<S>, tally: &mut Tally<S>) -> Verdict<S> {
        tally.propagations += 1;
        let bounds = propagate_formal(self.net, region).expect("dimensions checked at bind time");
        check_dominance(&bounds, self.assertion).expect("indices checked at bind time")
    }

    /// Verdict for one node, plus the samples drawn for it, if any.
    fn evaluate(
        &self,
        region: &InputBox<S>,
        tally: &mut Tally<S>,
    ) -> (Verdict<S>, Option<SampleSet<S>>) {
        match self.cfg.backend {
            Backend::Formal => {
                let verdict = match self.formal_verdict(region, tally) {
                    Verdict::Denied { .. } => {
                        let center = region.center();
                        let y = self.net.forward(&center).expect("center is finite");
                        let witness = self.assertion.violated_at(&y).then_some(center);
                        Verdict::Denied { witness }
                    }
                    v => v,
                };
                (verdict, None)
            }
            Backend::Sampled | Backend::Hybrid => {
                let samples = self.samples(region, tally);
                let sampled = check_dominance(&samples.bounds(), self.assertion)
                    .expect("indices checked at bind time");
                let verdict = if sampled == Verdict::Proved {
                    if self.cfg.backend == Backend::Hybrid
                        && self.formal_verdict(region, tally) != Verdict::Proved
                    {
                        Verdict::Unknown
                    } else {
                        Verdict::Proved
                    }
                } else if samples
                    .outputs
                    .iter()
                    .all(|y| self.assertion.violated_at(y))
                {
                    Verdict::Denied {
                        witness: samples.inputs.first().cloned(),
                    }
                } else {
                    Verdict::Unknown
                };
                (verdict, Some(samples))
            }
        }
    }

    fn explore(
        &self,
        region: InputBox<S>,
        depth: usize,
        mass: f64,
        path: u64,
    ) -> (Tally<S>, Option<SubareaNode<S>>) {
        let cap = self.cfg.max_counterexamples;
        let mut tally = Tally::new(depth);
        let (verdict, samples) = self.evaluate(&region, &mut tally);
        let mut children_nodes = Vec::new();

        match &verdict {
            Verdict::Proved => {
                tally.safe += mass;
                tally.leaves.proved += 1;
            }
            Verdict::Denied { witness } => {
                tally.violation += mass;
                tally.leaves.denied += 1;
                if let Some(x) = witness {
                    tally.witness(x.clone(), cap);
                }
            }
            Verdict::Unknown => {
                let mut rng = ChaCha8Rng::seed_from_u64(path);
                let split_dim = (depth < self.cfg.max_depth)
                    .then(|| {
                        choose_split_dim(
                            &region,
                            self.cfg.split_strategy,
                            depth,
                            self.cfg.min_width,
                            &mut rng,
                        )
                    })
                    .flatten();
                match split_dim {
                    Some(dim) => {
                        let arity = self.cfg.split_arity;
                        let child_mass = mass / arity as f64;
                        let children: Vec<(usize, InputBox<S>)> = split_along(&region, dim, arity)
                            .into_iter()
                            .enumerate()
                            .collect();
                        let visit = |(i, child): (usize, InputBox<S>)| {
                            self.explore(child, depth + 1, child_mass, mix64(path ^ (i as u64 + 1)))
                        };
                        let results: Vec<_> = if depth < PARALLEL_DEPTH {
                            children.into_par_iter().map(visit).collect()
                        } else {
                            children.into_iter().map(visit).collect()
                        };
                        for (t, node) in results {
                            tally.absorb(t, cap);
                            children_nodes.extend(node);
                        }
                    }
                    None => self.settle_leaf(&region, mass, samples, &mut tally),
                }
            }
        }

        let node = self.record_tree.then_some(SubareaNode {
            region,
            depth,
            mass,
            verdict,
            children: children_nodes,
        });
        (tally, node)
    }

    fn settle_leaf(
        &self,
        region: &InputBox<S>,
        mass: f64,
        samples: Option<SampleSet<S>>,
        tally: &mut Tally<S>,
    ) {
        tally.leaves.unknown += 1;
        match self.cfg.mixed_leaf_policy {
            MixedLeafPolicy::Unknown => tally.unknown += mass,
            MixedLeafPolicy::ProportionalBySamples => {
                let samples = samples.unwrap_or_else(|| self.samples(region, tally));
                let mut violating = 0usize;
                let mut first = None;
                for (x, y) in samples.inputs.iter().zip(&samples.outputs) {
                    if self.assertion.violated_at(y) {
                        violating += 1;
                        first.get_or_insert(x);
                    }
                }
                let violation = mass * violating as f64 / samples.len() as f64;
                tally.violation += violation;
                tally.safe += mass - violation;
                tally.leaves.apportioned += 1;
                if let Some(x) = first {
                    tally.witness(x.clone(), self.cfg.max_counterexamples);
                }
            }
        }
    }
}
