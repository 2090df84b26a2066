//! Learning over structured mixtures on the Boolean cube.
//!
//! A *base learner* is an algorithm that achieves small expected error when
//! its training data comes from a simple marginal distribution, such as the
//! uniform distribution over a subcube. This crate lifts such learners to
//! much richer distributions: mixtures whose pieces are carved out by a
//! decision tree or by a list of subcubes, with one simple distribution per
//! piece. Two lifters are provided:
//!
//! - [`lift_dt::tree_learn`] trains one base hypothesis per restriction of
//!   bounded depth and then searches, exactly, for the depth-`d` tree whose
//!   leaf-wise stitching of those hypotheses minimizes held-out error.
//! - [`lift_subcube::partition_learn`] greedily assembles an ordered list of
//!   subcubes, each paired with its trained hypothesis, that covers the
//!   held-out sample while keeping per-piece error small.
//!
//! Supporting modules supply the vocabulary ([`cube`], [`tree`], [`cover`],
//! [`hypothesis`], [`sample`]), exact distribution arithmetic on dense
//! probability vectors ([`pmf`], [`labeled`], [`family`]), concrete base
//! learners and a confidence booster ([`learners`], [`boost`]), a
//! concentration-based certificate that some distributions are far from
//! every shallow tree mixture ([`lowerbound`]), and a reproducible
//! experiment harness ([`experiment`]).
//!
//! Everything is sized for exact, desk-scale evaluation: dimensions are
//! capped at 24 so that distributions fit in dense vectors and every "true
//! error" or "total variation" figure is computed by full enumeration, never
//! estimated. All randomness flows through explicit 64-bit seeds (see
//! [`rng`]), so every run is bit-for-bit reproducible.

pub mod boost;
pub mod cover;
pub mod cube;
pub mod error;
pub mod experiment;
pub mod family;
pub mod hypothesis;
pub mod labeled;
pub mod learners;
pub mod lift_dt;
pub mod lift_subcube;
pub mod lowerbound;
pub mod pmf;
pub mod rng;
pub mod sample;
pub mod tree;

pub use error::{Error, Result};

pub use cover::{validate_partition, SubcubeList, SubcubePartition};
pub use cube::{Point, Restriction, Sign, MAX_DIMENSION};
pub use hypothesis::{
    empirical_error, eval_list_hypothesis, eval_tree_hypothesis, raw_error, Hypothesis,
    HypothesisMap,
};
pub use labeled::{corrupt, leaf_tv_decomposition, LabeledDistribution, NoiseMode, NoiseModel};
pub use pmf::DensePmf;
pub use sample::LabeledSample;
pub use tree::DecisionTree;
