//! The decision-tree lifter: train one hypothesis per shallow restriction,
//! then search for the depth-`d` tree whose leaf-wise stitching of those
//! hypotheses exactly minimizes held-out error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cube::{enumerate_restrictions, Restriction, Sign};
use crate::error::{Error, Result};
use crate::hypothesis::{Hypothesis, HypothesisMap};
use crate::learners::BaseLearner;
use crate::rng::derive_seed;
use crate::sample::LabeledSample;
use crate::tree::DecisionTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftDtConfig {
    pub d: usize,
    pub eps: f64,
    pub m_train: usize,
    pub m_test: usize,
    pub master_seed: u64,
}

/// Training-set size that gives every depth-`d` leaf enough conditional
/// examples: ⌈(2^d/ε)·max(2m, 8)⌉ for a base learner needing `m`.
pub fn default_dt_m_train(d: usize, eps: f64, m: usize) -> usize {
    let per_leaf = (2 * m).max(8) as f64;
    ((1u64 << d) as f64 / eps * per_leaf).ceil() as usize
}

/// Held-out size under which empirical and true error of every candidate
/// tree agree to within ε/2: ⌈4·2^d·ln(n)/ε²⌉.
pub fn default_dt_m_test(n: usize, d: usize, eps: f64) -> usize {
    let ln_n = (n as f64).max(2.0).ln();
    (4.0 * (1u64 << d) as f64 * ln_n / (eps * eps)).ceil() as usize
}

impl LiftDtConfig {
    pub fn with_defaults(
        n: usize,
        d: usize,
        eps: f64,
        learner: &dyn BaseLearner,
        master_seed: u64,
    ) -> Result<LiftDtConfig> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter {
                detail: format!("error target must lie in (0,1), got {eps}"),
            });
        }
        if d > n {
            return Err(Error::InvalidParameter {
                detail: format!("tree depth {d} exceeds dimension {n}"),
            });
        }
        let m = learner.sample_complexity(n);
        Ok(LiftDtConfig {
            d,
            eps,
            m_train: default_dt_m_train(d, eps, m),
            m_test: default_dt_m_test(n, d, eps),
            master_seed,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct TrainStats {
    pub learner_calls: u64,
}

/// Runs the base learner once per restriction of depth ≤ `d`, on the
/// conditional training sample, keyed by restriction. Depth-exactly-`d`
/// entries are what the tree search stitches into leaves; the shallower
/// ones serve under-budgeted searches and the subcube lifter.
///
/// Per-restriction seeds are derived from the master seed and the
/// restriction pattern, so the map is independent of evaluation order.
pub fn train_hypothesis_map(
    learner: &dyn BaseLearner,
    s_train: &LabeledSample,
    d: usize,
    master_seed: u64,
) -> Result<(HypothesisMap, TrainStats)> {
    let n = s_train.n();
    if d > n {
        return Err(Error::InvalidParameter {
            detail: format!("restriction depth {d} exceeds dimension {n}"),
        });
    }
    let mut map = HypothesisMap::new();
    let mut calls = 0u64;
    for rho in enumerate_restrictions(n, d) {
        // A learner that provably ignores examples past its budget lets us
        // stop filtering early; the result is identical either way.
        let conditional = match learner.sample_budget(n) {
            Some(cap) => s_train.filter_up_to(&rho, cap)?,
            None => s_train.filter(&rho)?,
        };
        let seed = derive_seed(master_seed, &format!("train/{}", rho.pattern()), 0);
        map.insert(rho, learner.learn(&conditional, seed));
        calls += 1;
    }
    Ok((map, TrainStats { learner_calls: calls }))
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct FindTreeStats {
    /// Search invocations, memoized hits included.
    pub calls: u64,
}

type Memo = BTreeMap<(Restriction, usize), (DecisionTree, u64)>;

fn leaf_raw_error(s_test: &LabeledSample, map: &HypothesisMap, rho: &Restriction) -> Result<u64> {
    let h = map.get(rho).ok_or_else(|| Error::MissingHypothesis {
        pattern: rho.pattern(),
    })?;
    Ok(s_test
        .items()
        .iter()
        .filter(|&&(x, y)| rho.consistent(x) && h.predict(x) != Some(y))
        .count() as u64)
}

fn search(
    s_test: &LabeledSample,
    map: &HypothesisMap,
    rho: &Restriction,
    depth_left: usize,
    mut memo: Option<&mut Memo>,
    calls: &mut u64,
) -> Result<(DecisionTree, u64)> {
    *calls += 1;
    if let Some(m) = memo.as_deref() {
        if let Some((tree, err)) = m.get(&(rho.clone(), depth_left)) {
            return Ok((tree.clone(), *err));
        }
    }
    let result = if depth_left == 0 {
        (DecisionTree::leaf(), leaf_raw_error(s_test, map, rho)?)
    } else {
        let mut best: Option<(usize, DecisionTree, DecisionTree, u64)> = None;
        for i in rho.free_coords().collect::<Vec<_>>() {
            let minus = rho.refine(i, Sign::Minus)?;
            let plus = rho.refine(i, Sign::Plus)?;
            let (tree_m, err_m) =
                search(s_test, map, &minus, depth_left - 1, memo.as_deref_mut(), calls)?;
            let (tree_p, err_p) =
                search(s_test, map, &plus, depth_left - 1, memo.as_deref_mut(), calls)?;
            // Raw errors add across the two sides because the test items
            // split between them; strict improvement keeps the smallest
            // splitting coordinate on ties.
            let total = err_m + err_p;
            if best.as_ref().map_or(true, |b| total < b.3) {
                best = Some((i, tree_m, tree_p, total));
            }
        }
        let (i, tree_m, tree_p, err) = best.ok_or_else(|| Error::DepthExceedsFree {
            depth: depth_left,
            free: rho.free_count(),
            pattern: rho.pattern(),
        })?;
        (DecisionTree::split(i, tree_m, tree_p), err)
    };
    if let Some(m) = memo.as_deref_mut() {
        m.insert((rho.clone(), depth_left), result.clone());
    }
    Ok(result)
}

fn check_find_tree_inputs(s_test: &LabeledSample, d: usize, rho: &Restriction) -> Result<()> {
    if rho.n() != s_test.n() {
        return Err(Error::DimensionMismatch {
            expected: s_test.n(),
            got: rho.n(),
        });
    }
    if d > rho.free_count() {
        return Err(Error::DepthExceedsFree {
            depth: d,
            free: rho.free_count(),
            pattern: rho.pattern(),
        });
    }
    Ok(())
}

/// Finds a complete depth-`d` tree over the free coordinates of `rho` whose
/// stitched hypothesis has the minimum possible raw error on the test items
/// consistent with `rho`.
///
/// The minimum is over every such tree; ties resolve toward smaller
/// splitting coordinates. Returns the tree, its raw error count, and the
/// number of search calls. Equal subproblems are memoized on
/// (restriction, remaining depth), which changes the call count but not the
/// result.
pub fn find_tree(
    s_test: &LabeledSample,
    d: usize,
    map: &HypothesisMap,
    rho: &Restriction,
) -> Result<(DecisionTree, u64, FindTreeStats)> {
    check_find_tree_inputs(s_test, d, rho)?;
    let mut memo = Memo::new();
    let mut calls = 0;
    let (tree, err) = search(s_test, map, rho, d, Some(&mut memo), &mut calls)?;
    Ok((tree, err, FindTreeStats { calls }))
}

/// The same search without memoization; slower, used to cross-check that
/// memoization is purely an optimization.
pub fn find_tree_unmemoized(
    s_test: &LabeledSample,
    d: usize,
    map: &HypothesisMap,
    rho: &Restriction,
) -> Result<(DecisionTree, u64, FindTreeStats)> {
    check_find_tree_inputs(s_test, d, rho)?;
    let mut calls = 0;
    let (tree, err) = search(s_test, map, rho, d, None, &mut calls)?;
    Ok((tree, err, FindTreeStats { calls }))
}

/// Worst-case call count of the unmemoized search: 1 + 2n + ⋯ + (2n)^d.
pub fn count_findtree_calls(n: usize, d: usize) -> u128 {
    let mut total = 0u128;
    let mut term = 1u128;
    for _ in 0..=d {
        total += term;
        term *= 2 * n as u128;
    }
    total
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeLearnStats {
    pub learner_calls: u64,
    pub findtree_calls: u64,
    pub test_raw_error: u64,
    pub test_size: usize,
}

pub struct TreeLearnOutcome {
    pub tree: DecisionTree,
    /// Every trained hypothesis, all depths ≤ d.
    pub map: HypothesisMap,
    /// The returned tree stitched with its leaf hypotheses.
    pub hypothesis: Hypothesis,
    pub stats: TreeLearnStats,
}

/// The full lifter: training phase on `s_train`, exact tree search on
/// `s_test`.
pub fn tree_learn(
    learner: &dyn BaseLearner,
    s_train: &LabeledSample,
    s_test: &LabeledSample,
    d: usize,
    master_seed: u64,
) -> Result<TreeLearnOutcome> {
    let n = s_train.n();
    if s_test.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s_test.n(),
        });
    }
    let (map, train_stats) = train_hypothesis_map(learner, s_train, d, master_seed)?;
    let root = Restriction::all_free(n);
    let (tree, raw, find_stats) = find_tree(s_test, d, &map, &root)?;

    let mut leaf_map = HypothesisMap::new();
    for leaf in tree.leaves(&root)? {
        let h = map.get(&leaf).ok_or_else(|| Error::MissingHypothesis {
            pattern: leaf.pattern(),
        })?;
        leaf_map.insert(leaf, h.clone());
    }
    let hypothesis = Hypothesis::tree_composed(n, tree.clone(), leaf_map)?;
    Ok(TreeLearnOutcome {
        tree,
        map,
        hypothesis,
        stats: TreeLearnStats {
            learner_calls: train_stats.learner_calls,
            findtree_calls: find_stats.calls,
            test_raw_error: raw,
            test_size: s_test.len(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{restriction_count, Point};
    use crate::hypothesis::raw_error;
    use crate::learners::{MemorizingLearner, PluralityLearner};

    fn sample_from(n: usize, rows: &[(&str, i8)]) -> LabeledSample {
        let items = rows
            .iter()
            .map(|&(p, y)| (Point::decode(p).unwrap().0, Sign::from_value(y).unwrap()))
            .collect();
        LabeledSample::new(n, items).unwrap()
    }

    #[test]
    fn training_visits_every_shallow_restriction_once() {
        let learner = PluralityLearner::new(0.2).unwrap();
        let s = sample_from(2, &[("++", 1), ("--", -1)]);
        let (map, stats) = train_hypothesis_map(&learner, &s, 1, 7).unwrap();
        assert_eq!(map.len(), 5);
        assert_eq!(stats.learner_calls, 5);
        assert_eq!(restriction_count(4, 2), 33);
    }

    #[test]
    fn depth_zero_returns_the_root_hypothesis_as_a_leaf() {
        let learner = PluralityLearner::new(0.2).unwrap();
        let s = sample_from(2, &[("++", 1), ("-+", 1), ("--", -1)]);
        let (map, _) = train_hypothesis_map(&learner, &s, 0, 7).unwrap();
        let (tree, err, stats) = find_tree(&s, 0, &map, &Restriction::all_free(2)).unwrap();
        assert_eq!(tree, DecisionTree::leaf());
        assert_eq!(err, 1);
        assert_eq!(stats.calls, 1);
    }

    #[test]
    fn the_search_picks_the_split_that_separates_the_labels() {
        // Labels equal coordinate 1; a depth-1 split on it is perfect.
        let learner = PluralityLearner::new(0.2).unwrap();
        let s = sample_from(2, &[("++", 1), ("-+", 1), ("+-", -1), ("--", -1)]);
        let (map, _) = train_hypothesis_map(&learner, &s, 1, 7).unwrap();
        let (tree, err, _) = find_tree(&s, 1, &map, &Restriction::all_free(2)).unwrap();
        assert_eq!(err, 0);
        match tree {
            DecisionTree::Split { index, .. } => assert_eq!(index, 1),
            DecisionTree::Leaf => panic!("expected a split"),
        }
    }

    #[test]
    fn memoized_and_unmemoized_searches_agree() {
        let learner = MemorizingLearner;
        let s = sample_from(
            3,
            &[
                ("+++", 1),
                ("++-", -1),
                ("+-+", 1),
                ("-++", -1),
                ("---", 1),
                ("--+", -1),
            ],
        );
        let (map, _) = train_hypothesis_map(&learner, &s, 2, 1).unwrap();
        let root = Restriction::all_free(3);
        let (t1, e1, fast) = find_tree(&s, 2, &map, &root).unwrap();
        let (t2, e2, slow) = find_tree_unmemoized(&s, 2, &map, &root).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(e1, e2);
        assert!(fast.calls <= slow.calls);
        assert!(u128::from(slow.calls) <= count_findtree_calls(3, 2));
    }

    #[test]
    fn call_counts_respect_the_geometric_bound() {
        assert_eq!(count_findtree_calls(3, 0), 1);
        assert_eq!(count_findtree_calls(3, 1), 7);
        assert_eq!(count_findtree_calls(2, 2), 21);

        let learner = PluralityLearner::new(0.2).unwrap();
        let s = sample_from(2, &[("++", 1), ("--", -1), ("+-", 1), ("-+", -1)]);
        let (map, _) = train_hypothesis_map(&learner, &s, 2, 3).unwrap();
        let (_, _, stats) = find_tree(&s, 2, &map, &Restriction::all_free(2)).unwrap();
        assert!(u128::from(stats.calls) <= count_findtree_calls(2, 2));
    }

    #[test]
    fn asking_for_more_depth_than_free_coordinates_fails() {
        let learner = PluralityLearner::new(0.2).unwrap();
        let s = sample_from(2, &[("++", 1)]);
        let (map, _) = train_hypothesis_map(&learner, &s, 2, 3).unwrap();
        let err = find_tree(&s, 3, &map, &Restriction::all_free(2)).unwrap_err();
        assert!(matches!(err, Error::DepthExceedsFree { .. }));
    }

    #[test]
    fn stitched_hypothesis_error_matches_the_search_result() {
        let learner = PluralityLearner::new(0.2).unwrap();
        let train = sample_from(2, &[("++", 1), ("-+", -1), ("+-", 1), ("--", -1)]);
        let test = sample_from(2, &[("++", 1), ("-+", -1), ("--", -1), ("+-", 1)]);
        let outcome = tree_learn(&learner, &train, &test, 1, 11).unwrap();
        assert_eq!(
            raw_error(&outcome.hypothesis, &test),
            outcome.stats.test_raw_error
        );
        assert_eq!(outcome.stats.learner_calls, 5);
    }

    #[test]
    fn default_sizes_match_their_formulas() {
        assert_eq!(default_dt_m_train(1, 0.05, 100), 8000);
        assert_eq!(default_dt_m_train(0, 0.5, 1), 16);
        let expect = (4.0 * 4.0 * (8f64).ln() / 0.0025).ceil() as usize;
        assert_eq!(default_dt_m_test(8, 2, 0.05), expect);
    }
}
