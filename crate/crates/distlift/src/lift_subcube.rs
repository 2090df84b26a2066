//! The subcube-list lifter: train on every shallow restriction as in
//! [`crate::lift_dt`], then greedily grow an ordered list of subcubes whose
//! stitched hypotheses cover the held-out sample with small per-piece error.
//!
//! The greedy loop repeatedly scans the trained restrictions, keeps those
//! covering at least a 1/(2s) fraction of the not-yet-covered test items,
//! and appends the one with the smallest conditional error. Selection uses
//! raw integer counts compared by cross-multiplication, so runs are exactly
//! reproducible and the recorded trace supports exact after-the-fact audits.

use serde::{Deserialize, Serialize};

use crate::cover::{SubcubeList, SubcubePartition};
use crate::cube::{Point, Restriction, Sign};
use crate::error::{Error, Result};
use crate::hypothesis::{raw_error, Hypothesis, HypothesisMap};
use crate::learners::BaseLearner;
use crate::lift_dt::train_hypothesis_map;
use crate::sample::LabeledSample;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftSubcubeConfig {
    pub d: usize,
    /// Size budget of the decomposition being chased.
    pub s: usize,
    pub eps: f64,
    /// Fraction of the test sample the list may leave uncovered.
    pub eps_additional: f64,
    pub m_train: usize,
    pub m_test: usize,
    pub master_seed: u64,
}

/// The base learner is run at this sharper target so that per-piece errors
/// still sum to O(ε) after the list accumulates ln(1/ε) many pieces.
pub fn refined_base_target(eps: f64) -> f64 {
    eps / (1.0 / eps).ln().max(1.0)
}

/// ⌈(s·ln(1/ε)/ε)·max(2m, 8)⌉ for a base learner needing `m` examples at
/// the refined target.
pub fn default_subcube_m_train(s: usize, eps: f64, m_refined: usize) -> usize {
    let per_piece = (2 * m_refined).max(8) as f64;
    (s as f64 * (1.0 / eps).ln().max(1.0) / eps * per_piece).ceil() as usize
}

/// ⌈4·s·d·ln(n)·ln³(1/ε)/ε²⌉, with the depth and log factors floored at 1
/// so degenerate parameters still get a usable holdout.
pub fn default_subcube_m_test(n: usize, s: usize, d: usize, eps: f64) -> usize {
    let ln_n = (n as f64).max(2.0).ln();
    let ln_eps = (1.0 / eps).ln().max(1.0);
    (4.0 * s as f64 * d.max(1) as f64 * ln_n * ln_eps.powi(3) / (eps * eps)).ceil() as usize
}

/// ⌈2s·ln(1/ε_a)⌉, the greedy loop's iteration cap.
pub fn iteration_cap(s: usize, eps_additional: f64) -> usize {
    (2.0 * s as f64 * (1.0 / eps_additional).ln()).ceil().max(1.0) as usize
}

impl LiftSubcubeConfig {
    pub fn with_defaults(
        n: usize,
        d: usize,
        s: usize,
        eps: f64,
        learner: &dyn BaseLearner,
        master_seed: u64,
    ) -> Result<LiftSubcubeConfig> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter {
                detail: format!("error target must lie in (0,1), got {eps}"),
            });
        }
        if d > n {
            return Err(Error::InvalidParameter {
                detail: format!("restriction depth {d} exceeds dimension {n}"),
            });
        }
        if s == 0 {
            return Err(Error::InvalidParameter {
                detail: "size budget must be positive".into(),
            });
        }
        let refined = learner.retargeted(refined_base_target(eps))?;
        Ok(LiftSubcubeConfig {
            d,
            s,
            eps,
            eps_additional: eps,
            m_train: default_subcube_m_train(s, eps, refined.sample_complexity(n)),
            m_test: default_subcube_m_test(n, s, d, eps),
            master_seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    /// Remaining fraction dropped to ε_additional or below.
    Covered,
    IterationCap,
    /// No candidate met the 1/(2s) coverage threshold; the list so far is
    /// returned. With a good plantable partition still uncovered this
    /// signals a misconfigured size budget.
    NoEligiblePiece,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreedyStep {
    pub restriction: Restriction,
    /// Uncovered test items at the start of the iteration.
    pub remaining_before: usize,
    /// Items of those this piece covers.
    pub covered: usize,
    /// Covered items the piece's hypothesis gets wrong.
    pub raw_error: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub total: usize,
    pub steps: Vec<GreedyStep>,
    pub remaining_after: usize,
    pub exit: ExitReason,
}

fn count_consistent(items: &[(Point, Sign)], rho: &Restriction) -> u64 {
    items.iter().filter(|&&(x, _)| rho.consistent(x)).count() as u64
}

fn count_errors(items: &[(Point, Sign)], rho: &Restriction, h: &Hypothesis) -> u64 {
    items
        .iter()
        .filter(|&&(x, y)| rho.consistent(x) && h.predict(x) != Some(y))
        .count() as u64
}

/// Greedily grows an ordered subcube list out of the trained restrictions.
///
/// Each iteration scans the map's restrictions in canonical order, skips
/// those covering fewer than a 1/(2s) fraction of the still-uncovered test
/// items, and appends the one whose hypothesis errs least on the items it
/// covers (ties keep the earliest candidate). Covered items are then
/// removed. The loop stops once the uncovered fraction is at most
/// `eps_additional`, the iteration cap ⌈2s·ln(1/ε_a)⌉ is reached, or no
/// candidate is eligible.
pub fn find_subcube(
    s_test: &LabeledSample,
    map: &HypothesisMap,
    eps_additional: f64,
    s: usize,
) -> Result<(SubcubeList, GreedyTrace)> {
    if !(eps_additional > 0.0 && eps_additional < 1.0) {
        return Err(Error::InvalidParameter {
            detail: format!("halting fraction must lie in (0,1), got {eps_additional}"),
        });
    }
    if s == 0 {
        return Err(Error::InvalidParameter {
            detail: "size budget must be positive".into(),
        });
    }
    let n = s_test.n();
    for rho in map.keys() {
        if rho.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rho.n(),
            });
        }
    }

    let cap = iteration_cap(s, eps_additional);
    let total = s_test.len();
    let mut remaining: Vec<(Point, Sign)> = s_test.items().to_vec();
    let mut steps: Vec<GreedyStep> = Vec::new();
    let exit = loop {
        if remaining.len() as f64 <= eps_additional * total as f64 {
            break ExitReason::Covered;
        }
        if steps.len() >= cap {
            break ExitReason::IterationCap;
        }
        let rem = remaining.len() as u64;
        let mut best: Option<(&Restriction, u64, u64)> = None;
        for (rho, h) in map.iter() {
            let live = count_consistent(&remaining, rho);
            if 2 * s as u64 * live < rem {
                continue;
            }
            let err = count_errors(&remaining, rho, h);
            // err/live < best_err/best_live, compared without division.
            let improves = match best {
                None => true,
                Some((_, best_live, best_err)) => {
                    u128::from(err) * u128::from(best_live)
                        < u128::from(best_err) * u128::from(live)
                }
            };
            if improves {
                best = Some((rho, live, err));
            }
        }
        let Some((rho, live, err)) = best else {
            break ExitReason::NoEligiblePiece;
        };
        let rho = rho.clone();
        remaining.retain(|&(x, _)| !rho.consistent(x));
        steps.push(GreedyStep {
            restriction: rho,
            remaining_before: rem as usize,
            covered: live as usize,
            raw_error: err,
        });
    };

    let list = SubcubeList::new(n, steps.iter().map(|s| s.restriction.clone()).collect())?;
    Ok((
        list,
        GreedyTrace {
            total,
            steps,
            remaining_after: remaining.len(),
            exit,
        },
    ))
}

/// Raw test error of answering each item through a fixed partition: route
/// to its piece, answer with that piece's hypothesis. Items no piece covers
/// count as errors.
pub fn partition_raw_error(
    s_test: &LabeledSample,
    map: &HypothesisMap,
    partition: &SubcubePartition,
) -> Result<u64> {
    let mut wrong = 0u64;
    for &(x, y) in s_test.items() {
        match partition.route(x) {
            None => wrong += 1,
            Some(idx) => {
                let piece = &partition.pieces()[idx];
                let h = map.get(piece).ok_or_else(|| Error::MissingHypothesis {
                    pattern: piece.pattern(),
                })?;
                if h.predict(x) != Some(y) {
                    wrong += 1;
                }
            }
        }
    }
    Ok(wrong)
}

/// Per-iteration witnesses that the greedy loop always had a good planted
/// piece available: replaying the recorded trace, each iteration must admit
/// a planted piece covering ≥ 1/(2s) of the remaining items whose
/// conditional error is at most twice the planted partition's overall test
/// error rescaled to the remaining set. All checks are exact integer
/// comparisons.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreedyCertificate {
    /// Test error of the planted partition's own stitching.
    pub raw_planted: u64,
    /// For each iteration, the index of a planted piece witnessing the
    /// greedy invariant, if one exists.
    pub witnesses: Vec<Option<usize>>,
    pub violations: usize,
}

pub fn greedy_certificate(
    s_test: &LabeledSample,
    map: &HypothesisMap,
    planted: &SubcubePartition,
    s: usize,
    trace: &GreedyTrace,
) -> Result<GreedyCertificate> {
    let raw_planted = partition_raw_error(s_test, map, planted)?;
    let mut remaining: Vec<(Point, Sign)> = s_test.items().to_vec();
    let mut witnesses = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        if remaining.len() != step.remaining_before {
            return Err(Error::InvariantViolation {
                detail: format!(
                    "trace expected {} remaining items, replay found {}",
                    step.remaining_before,
                    remaining.len()
                ),
            });
        }
        let rem = remaining.len() as u64;
        let mut witness = None;
        for (j, piece) in planted.pieces().iter().enumerate() {
            let live = count_consistent(&remaining, piece);
            if 2 * s as u64 * live < rem {
                continue;
            }
            let h = map.get(piece).ok_or_else(|| Error::MissingHypothesis {
                pattern: piece.pattern(),
            })?;
            let err = count_errors(&remaining, piece, h);
            if u128::from(err) * u128::from(rem)
                <= 2 * u128::from(raw_planted) * u128::from(live)
            {
                witness = Some(j);
                break;
            }
        }
        witnesses.push(witness);
        remaining.retain(|&(x, _)| !step.restriction.consistent(x));
    }
    let violations = witnesses.iter().filter(|w| w.is_none()).count();
    Ok(GreedyCertificate {
        raw_planted,
        witnesses,
        violations,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionLearnStats {
    pub learner_calls: u64,
    pub list_len: usize,
    pub test_raw_error: u64,
    pub test_size: usize,
}

pub struct PartitionLearnOutcome {
    pub list: SubcubeList,
    /// Every trained hypothesis, all depths ≤ d.
    pub map: HypothesisMap,
    /// The list stitched with its per-entry hypotheses; abstains off-list.
    pub hypothesis: Hypothesis,
    pub trace: GreedyTrace,
    pub stats: PartitionLearnStats,
}

/// The full lifter: trains the base learner (sharpened to the refined
/// target) on every depth-≤d restriction of `s_train`, then greedily covers
/// `s_test` with `eps_additional` set to `eps`.
pub fn partition_learn(
    learner: &dyn BaseLearner,
    d: usize,
    s: usize,
    eps: f64,
    s_train: &LabeledSample,
    s_test: &LabeledSample,
    master_seed: u64,
) -> Result<PartitionLearnOutcome> {
    let n = s_train.n();
    if s_test.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s_test.n(),
        });
    }
    let refined = learner.retargeted(refined_base_target(eps))?;
    let (map, train_stats) = train_hypothesis_map(refined.as_ref(), s_train, d, master_seed)?;
    let (list, trace) = find_subcube(s_test, &map, eps, s)?;

    let mut entry_map = HypothesisMap::new();
    for rho in list.entries() {
        let h = map.get(rho).ok_or_else(|| Error::MissingHypothesis {
            pattern: rho.pattern(),
        })?;
        entry_map.insert(rho.clone(), h.clone());
    }
    let hypothesis = Hypothesis::list_composed(list.clone(), entry_map)?;
    let stats = PartitionLearnStats {
        learner_calls: train_stats.learner_calls,
        list_len: list.len(),
        test_raw_error: raw_error(&hypothesis, s_test),
        test_size: s_test.len(),
    };
    Ok(PartitionLearnOutcome {
        list,
        map,
        hypothesis,
        trace,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeled::{LabeledDistribution, TruthTable};
    use crate::learners::PluralityLearner;
    use crate::pmf::DensePmf;

    fn constant_map(entries: &[(&str, Sign)]) -> HypothesisMap {
        let mut map = HypothesisMap::new();
        for &(pat, sign) in entries {
            map.insert(Restriction::parse(pat).unwrap(), Hypothesis::constant(sign));
        }
        map
    }

    fn dictator_sample(n: usize, i: usize, m: usize, seed: u64) -> LabeledSample {
        LabeledDistribution::clean(DensePmf::uniform(n), TruthTable::dictator(n, i))
            .unwrap()
            .sample(m, seed)
    }

    #[test]
    fn a_perfect_root_hypothesis_covers_everything_in_one_step() {
        let s_test = LabeledSample::new(
            2,
            Restriction::all_free(2)
                .points()
                .map(|x| (x, Sign::Plus))
                .collect(),
        )
        .unwrap();
        let map = constant_map(&[("**", Sign::Plus)]);
        let (list, trace) = find_subcube(&s_test, &map, 0.01, 1).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.exit, ExitReason::Covered);
        assert_eq!(trace.remaining_after, 0);
    }

    #[test]
    fn small_pieces_are_ineligible_even_when_perfect() {
        // Ten items; the depth-2 piece covers two of them (1/5 < 1/(2s) for
        // s=2) with zero error, yet the noisy root must win.
        let pts = ["--+", "-++", "+-+", "++-", "+++", "---", "-+-", "+--", "--+", "-++"];
        let items: Vec<(Point, Sign)> = pts
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let x = Point::decode(p).unwrap().0;
                (x, Sign::from_bool(k != 0 && k != 8))
            })
            .collect();
        let s_test = LabeledSample::new(3, items).unwrap();
        let map = constant_map(&[("***", Sign::Plus), ("--+", Sign::Minus)]);
        // "--+" covers items 0 and 8 exactly, both labeled minus.
        let (_, trace) = find_subcube(&s_test, &map, 0.05, 2).unwrap();
        assert_eq!(trace.steps[0].restriction.pattern(), "***");
    }

    #[test]
    fn every_selected_piece_clears_the_coverage_threshold() {
        let s = 2;
        let s_train = dictator_sample(3, 0, 400, 5);
        let s_test = dictator_sample(3, 0, 300, 6);
        let learner = PluralityLearner::new(0.1).unwrap();
        let out = partition_learn(&learner, 1, s, 0.05, &s_train, &s_test, 42).unwrap();
        for step in &out.trace.steps {
            assert!(2 * s * step.covered >= step.remaining_before);
        }
        assert!(out.trace.steps.len() <= iteration_cap(s, 0.05));
        if out.trace.exit == ExitReason::Covered {
            assert!(out.trace.remaining_after as f64 <= 0.05 * out.trace.total as f64);
        }
        assert_eq!(out.stats.list_len, out.trace.steps.len());
    }

    #[test]
    fn no_eligible_piece_halts_with_the_partial_list() {
        let items: Vec<(Point, Sign)> = Restriction::all_free(2)
            .points()
            .map(|x| (x, Sign::Plus))
            .collect();
        let s_test = LabeledSample::new(2, items).unwrap();
        // Only point-size candidates, each covering 1/4 < 1/2 of the items.
        let map = constant_map(&[
            ("--", Sign::Plus),
            ("-+", Sign::Plus),
            ("+-", Sign::Plus),
            ("++", Sign::Plus),
        ]);
        let (list, trace) = find_subcube(&s_test, &map, 0.01, 1).unwrap();
        assert_eq!(list.len(), 0);
        assert_eq!(trace.exit, ExitReason::NoEligiblePiece);
        assert_eq!(trace.remaining_after, 4);
    }

    #[test]
    fn planted_partition_witnesses_every_iteration() {
        let s = 2;
        let learner = PluralityLearner::new(0.1).unwrap();
        // Labels depend only on coordinate 0, so the split on it is a
        // perfect planted partition.
        let s_train = dictator_sample(3, 0, 500, 15);
        let s_test = dictator_sample(3, 0, 400, 16);
        let out = partition_learn(&learner, 1, s, 0.05, &s_train, &s_test, 7).unwrap();
        let planted = SubcubePartition::new(
            3,
            vec![
                Restriction::parse("-**").unwrap(),
                Restriction::parse("+**").unwrap(),
            ],
        )
        .unwrap();
        let cert = greedy_certificate(&s_test, &out.map, &planted, s, &out.trace).unwrap();
        assert_eq!(cert.violations, 0);
        assert_eq!(cert.witnesses.len(), out.trace.steps.len());
        assert_eq!(cert.raw_planted, 0);
    }

    #[test]
    fn degenerate_budget_runs_the_learner_once_on_everything() {
        let learner = PluralityLearner::new(0.2).unwrap();
        let s_train = dictator_sample(2, 0, 60, 1);
        let items: Vec<(Point, Sign)> = (0..4)
            .map(|i| (Point(i), Sign::Plus))
            .collect();
        let s_test = LabeledSample::new(2, items).unwrap();
        let out = partition_learn(&learner, 0, 1, 0.1, &s_train, &s_test, 3).unwrap();
        assert_eq!(out.stats.learner_calls, 1);
        assert_eq!(out.list.len(), 1);
        assert_eq!(out.list.entries()[0].pattern(), "**");
    }

    #[test]
    fn default_sizes_match_their_formulas() {
        assert_eq!(iteration_cap(2, 0.01), 19);
        let m_ref = 100;
        let expect =
            (2.0 * (1.0f64 / 0.1).ln() / 0.1 * 200.0).ceil() as usize;
        assert_eq!(default_subcube_m_train(2, 0.1, m_ref), expect);
        let expect_test = (4.0 * 2.0 * 2.0 * (8.0f64).ln() * (1.0f64 / 0.1).ln().powi(3)
            / 0.01)
            .ceil() as usize;
        assert_eq!(default_subcube_m_test(8, 2, 2, 0.1), expect_test);
    }
}
