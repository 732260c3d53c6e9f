//! Safety-rate estimation for feed-forward ReLU decision policies.
//!
//! A property asserts that one output of the policy network stays strictly
//! below another (or a set of others) everywhere in an input box. The
//! [`verifier`] bisects that box into a tree of subareas, bounds the outputs
//! on each subarea with interval arithmetic ([`interval::propagate_formal`])
//! or with sampled forward passes ([`interval::propagate_sampled`]), and
//! reports the fraction of the box that is proved safe, shown to violate the
//! property, or left undecided.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases below fix the common `f64` instantiation.

pub mod error;
pub mod interval;
pub mod network;
pub mod oracle;
pub mod property;
pub mod scalar;
pub mod verifier;

pub use error::{Error, Result};
pub use interval::{
    affine_image, bound_width, draw_samples, propagate_formal, propagate_sampled, relu_image,
    InputBox, Interval, OutputBounds, Provenance, SampleSet, SamplingConfig,
};
pub use network::{
    load_network, random_network, save_network, Activation, Layer, Network, NetworkFormat,
};
pub use oracle::{grid_bounds, grid_rate, GridSpec};
pub use property::{
    check_dominance, parse_properties, parse_properties_for, sample_counterexample,
    DecisionProperty, DominanceAssertion, DominanceMode, Verdict, VerdictKind,
};
pub use scalar::Scalar;
pub use verifier::{
    aggregate, informal_rate, split_box, verify, verify_tree, AggregateReport, Backend, LeafCounts,
    MixedLeafPolicy, ReportRow, SplitStrategy, SubareaNode, VerificationReport, VerifierConfig,
};

pub type NetworkF64 = Network<f64>;
pub type NetworkF32 = Network<f32>;
pub type IntervalF64 = Interval<f64>;
pub type IntervalF32 = Interval<f32>;
pub type InputBoxF64 = InputBox<f64>;
pub type InputBoxF32 = InputBox<f32>;
pub type OutputBoundsF64 = OutputBounds<f64>;
pub type OutputBoundsF32 = OutputBounds<f32>;
pub type PropertyF64 = DecisionProperty<f64>;
pub type PropertyF32 = DecisionProperty<f32>;
