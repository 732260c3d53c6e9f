#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfv_core::{
    random_network, Activation, DecisionProperty, DominanceAssertion, InputBox, Layer, Network,
};

/// `y0 = x`, `y1 = 0.5` on one input.
pub fn crossing_net() -> Network {
    let layer = Layer::new(
        vec![vec![1.0], vec![0.0]],
        vec![0.0, 0.5],
        Activation::Identity,
    )
    .unwrap();
    Network::new(vec![layer]).unwrap()
}

/// `y1 < y0` over `[0, 1]`: holds exactly on `(0.5, 1]`.
pub fn crossing_property() -> DecisionProperty {
    DecisionProperty::new(
        "crossing",
        InputBox::unit(1).unwrap(),
        DominanceAssertion::less_than(1, 0).unwrap(),
    )
}

pub fn constant_net(values: &[f64], inputs: usize) -> Network {
    let layer = Layer::new(
        vec![vec![0.0; inputs]; values.len()],
        values.to_vec(),
        Activation::Identity,
    )
    .unwrap();
    Network::new(vec![layer]).unwrap()
}

/// Two-input piecewise-linear net with outputs `y0 = x0 + x1`, `y1 = 1`
/// behind a ReLU layer, so `y0 < y1` holds exactly below the line
/// `x0 + x1 = 1` (analytic safe area 1/2 on the unit square).
pub fn diagonal_net() -> Network {
    let hidden = Layer::new(
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![0.0, 0.0],
        Activation::Relu,
    )
    .unwrap();
    let out = Layer::new(
        vec![vec![1.0, 1.0], vec![0.0, 0.0]],
        vec![0.0, 1.0],
        Activation::Identity,
    )
    .unwrap();
    Network::new(vec![hidden, out]).unwrap()
}

/// Straight-line evaluator used as an oracle for `Network::forward`.
#[allow(clippy::needless_range_loop)]
pub fn reference_forward(net: &Network, x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    for layer in net.layers() {
        let mut next = vec![0.0; layer.out_dim()];
        for r in 0..layer.out_dim() {
            let mut acc = layer.bias()[r];
            for c in 0..layer.in_dim() {
                acc += layer.weights()[r * layer.in_dim() + c] * cur[c];
            }
            next[r] = if layer.activation() == Activation::Relu && acc < 0.0 {
                0.0
            } else {
                acc
            };
        }
        cur = next;
    }
    cur
}

/// The 100-net family: 2..=5 inputs, 2..=12 outputs, one or two hidden
/// ReLU layers of at most 64 units.
pub fn soundness_family() -> Vec<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100u64)
        .map(|i| {
            let din = rng.random_range(2..=5);
            let dout = rng.random_range(2..=12);
            let hidden = rng.random_range(1..=2);
            let mut sizes = vec![din];
            for _ in 0..hidden {
                sizes.push(rng.random_range(4..=64));
            }
            sizes.push(dout);
            random_network(&sizes, 1000 + i).unwrap()
        })
        .collect()
}

/// Small nets with at most three inputs, paired with a dominance property
/// over the unit box.
pub fn small_family(count: usize, seed: u64) -> Vec<(Network, DecisionProperty)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let din = rng.random_range(1..=3);
            let dout = rng.random_range(2..=4);
            let width = rng.random_range(4..=24);
            let net = random_network(&[din, width, width, dout], seed * 1000 + i as u64).unwrap();
            let assertion = if dout > 2 && i % 2 == 1 {
                DominanceAssertion::new(0, 1..dout, sfv_core::DominanceMode::AnyOf).unwrap()
            } else {
                DominanceAssertion::less_than(0, 1).unwrap()
            };
            let prop = DecisionProperty::new(
                format!("small-{i}"),
                InputBox::unit(din).unwrap(),
                assertion,
            );
            (net, prop)
        })
        .collect()
}

pub fn repo_root() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}
