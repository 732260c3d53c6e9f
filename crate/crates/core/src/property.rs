//! Output-dominance properties and their per-box verdicts.
//!
//! A [`DecisionProperty`] states that, for every input in its box, the
//! output `loser` is strictly below the outputs in `winners` (all of them,
//! or at least one of them depending on [`DominanceMode`]).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{draw_samples, InputBox, OutputBounds, Provenance, SamplingConfig};
use crate::network::Network;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceMode {
    /// `y_loser < y_w` for every winner `w`.
    #[default]
    AllOf,
    /// `y_loser < y_w` for at least one winner `w`.
    AnyOf,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DominanceAssertion {
    loser: usize,
    winners: Vec<usize>,
    mode: DominanceMode,
}

impl DominanceAssertion {
    /// Winners are sorted and deduplicated.
    pub fn new(
        loser: usize,
        winners: impl IntoIterator<Item = usize>,
        mode: DominanceMode,
    ) -> Result<Self> {
        let mut winners: Vec<usize> = winners.into_iter().collect();
        winners.sort_unstable();
        winners.dedup();
        if winners.is_empty() {
            return Err(Error::InvalidProperty("winner set is empty".into()));
        }
        if winners.contains(&loser) {
            return Err(Error::InvalidProperty(format!(
                "output {loser} cannot dominate itself"
            )));
        }
        Ok(DominanceAssertion {
            loser,
            winners,
            mode,
        })
    }

    /// Single-winner form `y_loser < y_winner`.
    pub fn less_than(loser: usize, winner: usize) -> Result<Self> {
        Self::new(loser, [winner], DominanceMode::AllOf)
    }

    pub fn loser(&self) -> usize {
        self.loser
    }

    pub fn winners(&self) -> &[usize] {
        &self.winners
    }

    pub fn mode(&self) -> DominanceMode {
        self.mode
    }

    pub fn check_indices(&self, output_dim: usize) -> Result<()> {
        let max = self
            .winners
            .iter()
            .copied()
            .chain([self.loser])
            .max()
            .unwrap_or(0);
        if max >= output_dim {
            return Err(Error::IndexOutOfRange {
                index: max,
                len: output_dim,
            });
        }
        Ok(())
    }

    /// Pointwise check on a concrete output vector.
    pub fn holds_at<S: Scalar>(&self, y: &[S]) -> bool {
        let l = y[self.loser];
        match self.mode {
            DominanceMode::AllOf => self.winners.iter().all(|&w| l < y[w]),
            DominanceMode::AnyOf => self.winners.iter().any(|&w| l < y[w]),
        }
    }

    pub fn violated_at<S: Scalar>(&self, y: &[S]) -> bool {
        !self.holds_at(y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionProperty<S = f64> {
    pub name: String,
    pub input_box: InputBox<S>,
    pub assertion: DominanceAssertion,
    pub description: Option<String>,
}

impl<S: Scalar> DecisionProperty<S> {
    pub fn new(
        name: impl Into<String>,
        input_box: InputBox<S>,
        assertion: DominanceAssertion,
    ) -> Self {
        DecisionProperty {
            name: name.into(),
            input_box,
            assertion,
            description: None,
        }
    }

    /// Checks that the property fits `net`'s input and output arity.
    pub fn bind(&self, net: &Network<S>) -> Result<()> {
        if self.input_box.dim() != net.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: net.input_dim(),
                actual: self.input_box.dim(),
            });
        }
        self.assertion.check_indices(net.output_dim())
    }

    pub fn cast<T: Scalar>(&self) -> DecisionProperty<T> {
        let dims = self
            .input_box
            .dims()
            .iter()
            .map(|iv| (iv.lo().as_f64(), iv.hi().as_f64()))
            .collect::<Vec<_>>();
        DecisionProperty {
            name: self.name.clone(),
            input_box: InputBox::from_bounds(&dims).expect("cast of a valid box"),
            assertion: self.assertion.clone(),
            description: self.description.clone(),
        }
    }
}

/// Outcome of checking a property on one box.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict<S = f64> {
    Proved,
    /// Violated; `witness` is a concrete violating input when one is known.
    Denied {
        witness: Option<Vec<S>>,
    },
    Unknown,
}

impl<S> Verdict<S> {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Proved => VerdictKind::Proved,
            Verdict::Denied { .. } => VerdictKind::Denied,
            Verdict::Unknown => VerdictKind::Unknown,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Proved,
    Denied,
    Unknown,
}

/// Decides the assertion from output bounds alone.
///
/// `Proved` needs strict separation `hi(loser) < lo(winner)`. `Denied` is
/// only issued for formal bounds, when `hi(winner) <= lo(loser)` for the
/// relevant winners. Sampled bounds never deny through overlap.
pub fn check_dominance<S: Scalar>(
    bounds: &OutputBounds<S>,
    a: &DominanceAssertion,
) -> Result<Verdict<S>> {
    a.check_indices(bounds.outs.len())?;
    let l = bounds.outs[a.loser];
    let below = |w: &usize| l.hi() < bounds.outs[*w].lo();
    let above = |w: &usize| bounds.outs[*w].hi() <= l.lo();
    let (proved, denied) = match a.mode {
        DominanceMode::AllOf => (a.winners.iter().all(below), a.winners.iter().any(above)),
        DominanceMode::AnyOf => (a.winners.iter().any(below), a.winners.iter().all(above)),
    };
    Ok(if proved {
        Verdict::Proved
    } else if denied && bounds.provenance == Provenance::Formal {
        Verdict::Denied { witness: None }
    } else {
        Verdict::Unknown
    })
}

/// Searches `cfg.n` sampled points of `region` for one that violates `a`.
pub fn sample_counterexample<S: Scalar>(
    net: &Network<S>,
    region: &InputBox<S>,
    a: &DominanceAssertion,
    cfg: &SamplingConfig,
) -> Option<Vec<S>> {
    a.check_indices(net.output_dim()).ok()?;
    let samples = draw_samples(net, region, cfg).ok()?;
    samples
        .inputs
        .into_iter()
        .zip(&samples.outputs)
        .find(|(_, y)| a.violated_at(y))
        .map(|(x, _)| x)
}

#[derive(Serialize, Deserialize)]
struct PropertyDoc {
    name: String,
    #[serde(rename = "box")]
    bounds: Vec<[f64; 2]>,
    loser: usize,
    winners: Vec<usize>,
    #[serde(default)]
    mode: DominanceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PropertyFile {
    Many(Vec<PropertyDoc>),
    One(PropertyDoc),
}

/// Parses a property file: one property object or an array of them.
pub fn parse_properties_str(text: &str, origin: &str) -> Result<Vec<DecisionProperty>> {
    // untagged enums hide line information, so decode the generic value first
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        origin: origin.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let docs = match serde_json::from_value::<PropertyFile>(value) {
        Ok(PropertyFile::Many(v)) => v,
        Ok(PropertyFile::One(p)) => vec![p],
        Err(_) => {
            // re-run the typed decoder on the text to get a located message
            let err = serde_json::from_str::<Vec<PropertyDoc>>(text)
                .err()
                .or_else(|| serde_json::from_str::<PropertyDoc>(text).err());
            let (line, message) = err
                .map_or((1, "unrecognized property document".to_string()), |e| {
                    (e.line(), e.to_string())
                });
            return Err(Error::Parse {
                origin: origin.to_string(),
                line,
                message,
            });
        }
    };
    docs.into_iter()
        .map(|d| {
            let bounds: Vec<(f64, f64)> = d.bounds.iter().map(|&[lo, hi]| (lo, hi)).collect();
            let input_box = InputBox::from_bounds(&bounds).map_err(|e| {
                Error::InvalidProperty(format!("{origin}: property {:?}: {e}", d.name))
            })?;
            let assertion = DominanceAssertion::new(d.loser, d.winners, d.mode).map_err(|e| {
                Error::InvalidProperty(format!("{origin}: property {:?}: {e}", d.name))
            })?;
            Ok(DecisionProperty {
                name: d.name,
                input_box,
                assertion,
                description: d.description,
            })
        })
        .collect()
}

pub fn parse_properties(path: impl AsRef<Path>) -> Result<Vec<DecisionProperty>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_properties_str(&text, &path.display().to_string())
}

/// Parses properties and checks each against `net`'s arity.
pub fn parse_properties_for(
    path: impl AsRef<Path>,
    net: &Network,
) -> Result<Vec<DecisionProperty>> {
    let props = parse_properties(path)?;
    for p in &props {
        p.bind(net)?;
    }
    Ok(props)
}

pub fn properties_to_json<S: Scalar>(props: &[DecisionProperty<S>]) -> String {
    let docs: Vec<PropertyDoc> = props
        .iter()
        .map(|p| PropertyDoc {
            name: p.name.clone(),
            bounds: p
                .input_box
                .dims()
                .iter()
                .map(|iv| [iv.lo().as_f64(), iv.hi().as_f64()])
                .collect(),
            loser: p.assertion.loser,
            winners: p.assertion.winners.clone(),
            mode: p.assertion.mode,
            description: p.description.clone(),
        })
        .collect();
    serde_json::to_string_pretty(&docs).expect("property documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;

    fn bounds(outs: &[(f64, f64)], provenance: Provenance) -> OutputBounds {
        OutputBounds {
            outs: outs
                .iter()
                .map(|&(lo, hi)| Interval::new(lo, hi).unwrap())
                .collect(),
            provenance,
        }
    }

    #[test]
    fn separated_bounds_prove() {
        let a = DominanceAssertion::less_than(0, 1).unwrap();
        let b = bounds(&[(0.0, 1.0), (2.0, 3.0)], Provenance::Formal);
        assert_eq!(check_dominance(&b, &a).unwrap(), Verdict::Proved);
    }

    #[test]
    fn reversed_bounds_deny_only_when_formal() {
        let a = DominanceAssertion::less_than(0, 1).unwrap();
        let f = bounds(&[(2.0, 3.0), (0.0, 1.0)], Provenance::Formal);
        assert_eq!(check_dominance(&f, &a).unwrap().kind(), VerdictKind::Denied);
        let s = bounds(&[(2.0, 3.0), (0.0, 1.0)], Provenance::Sampled);
        assert_eq!(check_dominance(&s, &a).unwrap(), Verdict::Unknown);
    }

    #[test]
    fn overlap_is_unknown() {
        let a = DominanceAssertion::less_than(0, 1).unwrap();
        let b = bounds(&[(0.0, 2.0), (1.0, 3.0)], Provenance::Formal);
        assert_eq!(check_dominance(&b, &a).unwrap(), Verdict::Unknown);
    }

    #[test]
    fn touching_bounds_are_unknown() {
        let a = DominanceAssertion::less_than(0, 1).unwrap();
        let b = bounds(&[(0.0, 1.0), (1.0, 2.0)], Provenance::Formal);
        assert_eq!(check_dominance(&b, &a).unwrap(), Verdict::Unknown);
        // hi(winner) == lo(loser) means y_w <= y_l everywhere
        let b = bounds(&[(1.0, 2.0), (0.0, 1.0)], Provenance::Formal);
        assert_eq!(check_dominance(&b, &a).unwrap().kind(), VerdictKind::Denied);
    }

    #[test]
    fn any_of_versus_all_of() {
        let b = bounds(&[(0.0, 1.0), (2.0, 3.0), (-1.0, 0.5)], Provenance::Formal);
        let all = DominanceAssertion::new(0, [1, 2], DominanceMode::AllOf).unwrap();
        let any = DominanceAssertion::new(0, [1, 2], DominanceMode::AnyOf).unwrap();
        assert_eq!(check_dominance(&b, &all).unwrap(), Verdict::Unknown);
        assert_eq!(check_dominance(&b, &any).unwrap(), Verdict::Proved);

        let b = bounds(&[(5.0, 6.0), (2.0, 3.0), (-1.0, 0.5)], Provenance::Formal);
        assert_eq!(
            check_dominance(&b, &any).unwrap().kind(),
            VerdictKind::Denied
        );
        let b = bounds(&[(5.0, 6.0), (2.0, 7.0), (-1.0, 0.5)], Provenance::Formal);
        assert_eq!(
            check_dominance(&b, &all).unwrap().kind(),
            VerdictKind::Denied
        );
        assert_eq!(check_dominance(&b, &any).unwrap(), Verdict::Unknown);
    }

    #[test]
    fn index_out_of_range() {
        let a = DominanceAssertion::less_than(0, 3).unwrap();
        let b = bounds(&[(0.0, 1.0), (2.0, 3.0)], Provenance::Formal);
        assert!(matches!(
            check_dominance(&b, &a),
            Err(Error::IndexOutOfRange { index: 3, len: 2 })
        ));
    }

    #[test]
    fn assertion_invariants() {
        assert!(DominanceAssertion::less_than(0, 0).is_err());
        assert!(DominanceAssertion::new(1, [], DominanceMode::AnyOf).is_err());
        let a = DominanceAssertion::new(0, [3, 1, 3], DominanceMode::AnyOf).unwrap();
        assert_eq!(a.winners(), &[1, 3]);
    }

    #[test]
    fn pointwise_semantics() {
        let all = DominanceAssertion::new(0, [1, 2], DominanceMode::AllOf).unwrap();
        let any = DominanceAssertion::new(0, [1, 2], DominanceMode::AnyOf).unwrap();
        let y = [1.0, 2.0, 0.5];
        assert!(all.violated_at(&y));
        assert!(any.holds_at(&y));
        // ties violate the strict inequality
        assert!(DominanceAssertion::less_than(0, 1)
            .unwrap()
            .violated_at(&[1.0, 1.0]));
    }

    #[test]
    fn parses_single_and_list() {
        let one = r#"{"name": "p", "box": [[0, 1]], "loser": 1, "winners": [0]}"#;
        let props = parse_properties_str(one, "one.json").unwrap();
        assert_eq!(props.len(), 1);
        assert_eq!(props[0].assertion.mode(), DominanceMode::AllOf);

        let many = r#"[
            {"name": "a", "box": [[0, 1]], "loser": 1, "winners": [0], "mode": "any_of"},
            {"name": "b", "box": [[0, 0.5]], "loser": 0, "winners": [1]}
        ]"#;
        let props = parse_properties_str(many, "many.json").unwrap();
        assert_eq!(props.len(), 2);
        assert_eq!(props[0].assertion.mode(), DominanceMode::AnyOf);
        let back = parse_properties_str(&properties_to_json(&props), "rt").unwrap();
        assert_eq!(back, props);
    }

    #[test]
    fn rejects_self_dominance_and_bad_boxes() {
        let selfish = r#"{"name": "p", "box": [[0, 1]], "loser": 0, "winners": [0]}"#;
        assert!(matches!(
            parse_properties_str(selfish, "x"),
            Err(Error::InvalidProperty(_))
        ));
        let empty = r#"{"name": "p", "box": [[0, 1]], "loser": 0, "winners": []}"#;
        assert!(matches!(
            parse_properties_str(empty, "x"),
            Err(Error::InvalidProperty(_))
        ));
        let inverted = r#"{"name": "p", "box": [[1, 0]], "loser": 0, "winners": [1]}"#;
        assert!(matches!(
            parse_properties_str(inverted, "x"),
            Err(Error::InvalidProperty(_))
        ));
    }

    #[test]
    fn malformed_file_reports_location() {
        let text = "[\n {\"name\": \"p\",\n  \"box\": [[0, 1]],\n  \"loser\": \"zero\", \"winners\": [1]}\n]";
        match parse_properties_str(text, "props.json") {
            Err(Error::Parse { origin, line, .. }) => {
                assert_eq!(origin, "props.json");
                assert_eq!(line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_properties_str("{ nope", "p.json"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn bind_checks_arity() {
        let net = crate::network::random_network(&[2, 4, 2], 0).unwrap();
        let p = DecisionProperty::new(
            "p",
            InputBox::unit(2).unwrap(),
            DominanceAssertion::less_than(0, 2).unwrap(),
        );
        assert!(matches!(p.bind(&net), Err(Error::IndexOutOfRange { .. })));
        let p = DecisionProperty::new(
            "p",
            InputBox::unit(3).unwrap(),
            DominanceAssertion::less_than(0, 1).unwrap(),
        );
        assert!(matches!(p.bind(&net), Err(Error::DimensionMismatch { .. })));
    }
}
