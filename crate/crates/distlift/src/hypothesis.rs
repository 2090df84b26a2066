//! Hypotheses: serializable `Point -> {+1, -1}` predictors.
//!
//! Besides the primitive forms (constants, signs of low-degree polynomials,
//! lookup tables), hypotheses compose: a decision tree or an ordered subcube
//! list routes each point to a piece, and a [`HypothesisMap`] supplies the
//! per-piece predictor. List-composed hypotheses may abstain on points no
//! entry covers; an abstention always scores as an error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cover::SubcubeList;
use crate::cube::{Point, Restriction, Sign};
use crate::error::{Error, Result};
use crate::sample::LabeledSample;
use crate::tree::DecisionTree;

/// One monomial of a polynomial over cube coordinates: the product of the
/// coordinates in `monomial` (a bit mask; the empty mask is the constant 1),
/// scaled by `weight`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub monomial: u32,
    pub weight: f64,
}

/// The character of `monomial` at `x`: the product of the selected
/// coordinates, each valued in `{+1, -1}`.
pub fn monomial_value(monomial: u32, x: Point) -> f64 {
    if (!x.0 & monomial).count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// A predictor over points of a fixed-dimension cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Always answers the same label.
    Constant(Sign),
    /// Sign of a polynomial; a value of exactly zero answers `+1`.
    SignPolynomial { terms: Vec<PolyTerm> },
    /// Majority-style lookup table keyed by point bits, with a default for
    /// unseen points.
    LookupTable {
        default: Sign,
        entries: BTreeMap<u32, Sign>,
    },
    /// A decision tree routing each point to a leaf restriction, answered by
    /// the leaf's entry in the map.
    TreeComposed(Box<TreeHypothesis>),
    /// An ordered subcube list with first-match routing; abstains off-list.
    ListComposed(Box<ListHypothesis>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeHypothesis {
    pub n: usize,
    pub tree: DecisionTree,
    pub map: HypothesisMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ListHypothesis {
    pub list: SubcubeList,
    pub map: HypothesisMap,
}

impl Hypothesis {
    pub fn constant(v: Sign) -> Hypothesis {
        Hypothesis::Constant(v)
    }

    /// The coordinate-`i` dictator, or its negation.
    pub fn dictator(i: usize, negated: bool) -> Hypothesis {
        Hypothesis::SignPolynomial {
            terms: vec![PolyTerm {
                monomial: 1 << i,
                weight: if negated { -1.0 } else { 1.0 },
            }],
        }
    }

    /// Parity of the given coordinates (as a `{+1,-1}`-valued product).
    pub fn parity(coords: &[usize]) -> Hypothesis {
        let mut mask = 0u32;
        for &c in coords {
            mask |= 1 << c;
        }
        Hypothesis::SignPolynomial {
            terms: vec![PolyTerm {
                monomial: mask,
                weight: 1.0,
            }],
        }
    }

    /// Builds a tree-composed hypothesis, checking that every leaf of the
    /// tree has an entry in the map.
    pub fn tree_composed(n: usize, tree: DecisionTree, map: HypothesisMap) -> Result<Hypothesis> {
        for leaf in tree.leaves(&Restriction::all_free(n))? {
            if map.get(&leaf).is_none() {
                return Err(Error::MissingHypothesis {
                    pattern: leaf.pattern(),
                });
            }
        }
        Ok(Hypothesis::TreeComposed(Box::new(TreeHypothesis {
            n,
            tree,
            map,
        })))
    }

    /// Builds a list-composed hypothesis, checking that every list entry has
    /// an entry in the map.
    pub fn list_composed(list: SubcubeList, map: HypothesisMap) -> Result<Hypothesis> {
        for entry in list.entries() {
            if map.get(entry).is_none() {
                return Err(Error::MissingHypothesis {
                    pattern: entry.pattern(),
                });
            }
        }
        Ok(Hypothesis::ListComposed(Box::new(ListHypothesis {
            list,
            map,
        })))
    }

    /// Predicts a label, or `None` when a list-composed hypothesis abstains.
    /// Composition constructors guarantee routed pieces have entries, so the
    /// only `None` source is an uncovered point under a list.
    pub fn predict(&self, x: Point) -> Option<Sign> {
        match self {
            Hypothesis::Constant(v) => Some(*v),
            Hypothesis::SignPolynomial { terms } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.weight * monomial_value(t.monomial, x);
                }
                Some(if acc < 0.0 { Sign::Minus } else { Sign::Plus })
            }
            Hypothesis::LookupTable { default, entries } => {
                Some(entries.get(&x.0).copied().unwrap_or(*default))
            }
            Hypothesis::TreeComposed(t) => {
                let leaf = t.tree.route(&Restriction::all_free(t.n), x).ok()?;
                t.map.get(&leaf)?.predict(x)
            }
            Hypothesis::ListComposed(l) => {
                let (_, entry) = l.list.route(x)?;
                l.map.get(entry)?.predict(x)
            }
        }
    }

    /// Content fingerprint of the serialized form, for cross-referencing
    /// hypotheses in result records.
    pub fn content_id(&self) -> String {
        let text = serde_json::to_string(self).expect("hypotheses serialize");
        let digest = Sha256::digest(text.as_bytes());
        let mut id = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            id.push_str(&format!("{byte:02x}"));
        }
        id
    }
}

/// Trained hypotheses keyed by restriction, in canonical key order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HypothesisMap {
    map: BTreeMap<Restriction, Hypothesis>,
}

impl HypothesisMap {
    pub fn new() -> HypothesisMap {
        HypothesisMap::default()
    }

    pub fn insert(&mut self, key: Restriction, value: Hypothesis) {
        self.map.insert(key, value);
    }

    pub fn get(&self, key: &Restriction) -> Option<&Hypothesis> {
        self.map.get(key)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &Restriction> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Restriction, &Hypothesis)> {
        self.map.iter()
    }
}

/// Evaluates a tree-composed predictor, reporting a missing leaf entry as an
/// invariant error rather than an abstention.
pub fn eval_tree_hypothesis(
    tree: &DecisionTree,
    map: &HypothesisMap,
    n: usize,
    x: Point,
) -> Result<Sign> {
    let leaf = tree.route(&Restriction::all_free(n), x)?;
    let h = map.get(&leaf).ok_or_else(|| Error::MissingHypothesis {
        pattern: leaf.pattern(),
    })?;
    h.predict(x).ok_or_else(|| Error::InvariantViolation {
        detail: format!("leaf predictor abstained at {}", x.encode(n)),
    })
}

/// Evaluates a list-composed predictor: `Ok(None)` means no entry covers
/// `x` (the list abstains), while a missing map entry for a routed piece is
/// an invariant error.
pub fn eval_list_hypothesis(
    list: &SubcubeList,
    map: &HypothesisMap,
    x: Point,
) -> Result<Option<Sign>> {
    let Some((_, entry)) = list.route(x) else {
        return Ok(None);
    };
    let h = map.get(entry).ok_or_else(|| Error::MissingHypothesis {
        pattern: entry.pattern(),
    })?;
    Ok(h.predict(x))
}

/// Number of examples the hypothesis gets wrong; abstentions count as
/// errors.
pub fn raw_error(h: &Hypothesis, sample: &LabeledSample) -> u64 {
    sample
        .iter()
        .filter(|&&(x, y)| h.predict(x) != Some(y))
        .count() as u64
}

/// Fraction of examples the hypothesis gets wrong; an empty sample has
/// error 0.
pub fn empirical_error(h: &Hypothesis, sample: &LabeledSample) -> f64 {
    if sample.is_empty() {
        0.0
    } else {
        raw_error(h, sample) as f64 / sample.len() as f64
    }
}
