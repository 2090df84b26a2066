//! Base learners and the contract the lifters consume them through.
//!
//! A base learner promises small expected error only when its training data
//! comes from its declared family. The lifters never check that promise;
//! they call `learn` on whatever conditional samples the training phase
//! produces and let the tree or list search sort out which hypotheses are
//! worth keeping. The one hard requirement is determinism: the hypothesis
//! must be a pure function of the sample and the seed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cube::{Point, Sign};
use crate::error::{Error, Result};
use crate::family::{enclosing_restriction_of_points, BaseFamily};
use crate::hypothesis::{monomial_value, Hypothesis, PolyTerm};
use crate::sample::LabeledSample;

pub trait BaseLearner {
    /// Stable identifier used in run records.
    fn name(&self) -> String;

    /// The distribution family the error guarantee is declared on.
    fn family(&self) -> BaseFamily;

    /// Declared expected error on in-family data with enough samples.
    fn target_error(&self) -> f64;

    /// Samples sufficient to reach the declared target at dimension `n`.
    fn sample_complexity(&self, n: usize) -> usize;

    /// Robustness constant `c` (output error grows by at most `c` times the
    /// corruption distance); `None` when no such guarantee is declared.
    fn robustness(&self) -> Option<f64>;

    /// A sample count beyond which additional examples are provably ignored
    /// by `learn`, so callers may truncate a larger sample to this prefix
    /// without changing the output. `None` means the learner reads
    /// everything.
    fn sample_budget(&self, _n: usize) -> Option<usize> {
        None
    }

    /// The same algorithm aimed at a different error target.
    fn retargeted(&self, eps: f64) -> Result<Box<dyn BaseLearner>>;

    /// Deterministic in `(sample, seed)`; an empty sample yields the
    /// constant `+1` hypothesis.
    fn learn(&self, sample: &LabeledSample, seed: u64) -> Hypothesis;
}

fn check_eps(eps: f64) -> Result<f64> {
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(Error::InvalidParameter {
            detail: format!("error target must lie in (0,1), got {eps}"),
        })
    }
}

/// Learns the best constant: the plurality label of the sample.
#[derive(Clone, Copy, Debug)]
pub struct PluralityLearner {
    eps: f64,
}

impl PluralityLearner {
    pub fn new(eps: f64) -> Result<PluralityLearner> {
        Ok(PluralityLearner {
            eps: check_eps(eps)?,
        })
    }
}

impl BaseLearner for PluralityLearner {
    fn name(&self) -> String {
        "plurality".into()
    }

    fn family(&self) -> BaseFamily {
        BaseFamily::ProductOnSubcube
    }

    fn target_error(&self) -> f64 {
        self.eps
    }

    fn sample_complexity(&self, _n: usize) -> usize {
        (1.0 / (self.eps * self.eps)).ceil() as usize
    }

    fn robustness(&self) -> Option<f64> {
        Some(1.0)
    }

    fn retargeted(&self, eps: f64) -> Result<Box<dyn BaseLearner>> {
        Ok(Box::new(PluralityLearner::new(eps)?))
    }

    fn learn(&self, sample: &LabeledSample, _seed: u64) -> Hypothesis {
        let plus = sample
            .items()
            .iter()
            .filter(|&&(_, y)| y == Sign::Plus)
            .count();
        Hypothesis::constant(Sign::from_bool(2 * plus >= sample.len()))
    }
}

/// Memorizes the majority label of every point it has seen; unseen points
/// answer `+1`. With enough samples to see every point of a small subcube,
/// this is an exact learner for the uniform distribution there, and its
/// error under corruption moves only as fast as the corruption itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct MemorizingLearner;

impl BaseLearner for MemorizingLearner {
    fn name(&self) -> String {
        "memorizing".into()
    }

    fn family(&self) -> BaseFamily {
        BaseFamily::UniformOnSubcube
    }

    fn target_error(&self) -> f64 {
        0.0
    }

    /// Coupon-collector size: enough uniform draws to see every point of a
    /// full dimension-`n` cube with comfortable slack.
    fn sample_complexity(&self, n: usize) -> usize {
        let points = (1u64 << n) as f64;
        (points * (points.ln() + 4.0)).ceil() as usize
    }

    fn robustness(&self) -> Option<f64> {
        Some(1.0)
    }

    fn retargeted(&self, _eps: f64) -> Result<Box<dyn BaseLearner>> {
        Ok(Box::new(MemorizingLearner))
    }

    fn learn(&self, sample: &LabeledSample, _seed: u64) -> Hypothesis {
        let mut counts: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for &(x, y) in sample.items() {
            let entry = counts.entry(x.0).or_insert((0, 0));
            match y {
                Sign::Plus => entry.0 += 1,
                Sign::Minus => entry.1 += 1,
            }
        }
        let entries: BTreeMap<u32, Sign> = counts
            .into_iter()
            .filter(|&(_, (plus, minus))| minus > plus)
            .map(|(bits, _)| (bits, Sign::Minus))
            .collect();
        Hypothesis::LookupTable {
            default: Sign::Plus,
            entries,
        }
    }
}

/// Estimates all low-degree monomial correlations over the free coordinates
/// of the smallest subcube enclosing its sample and predicts with the sign
/// of the resulting polynomial. On uniform-over-subcube data this is the
/// standard polynomial-regression learner for degree-`k`-representable
/// targets; elsewhere it still returns something deterministic.
#[derive(Clone, Copy, Debug)]
pub struct LowDegreeLearner {
    degree: usize,
    eps: f64,
}

impl LowDegreeLearner {
    pub fn new(degree: usize, eps: f64) -> Result<LowDegreeLearner> {
        if degree == 0 || degree > 4 {
            return Err(Error::InvalidParameter {
                detail: format!("polynomial degree must be 1..=4, got {degree}"),
            });
        }
        Ok(LowDegreeLearner {
            degree,
            eps: check_eps(eps)?,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn monomials_over(&self, free: &[usize]) -> Vec<u32> {
        // All coordinate subsets of size ≤ degree, as bit masks.
        let mut out = vec![0u32];
        let mut current: Vec<u32> = vec![0];
        for _ in 0..self.degree {
            let mut next = Vec::new();
            for &mask in &current {
                let high = 31 - (mask | 1).leading_zeros() as usize;
                for &i in free {
                    if mask == 0 || i > high {
                        next.push(mask | 1 << i);
                    }
                }
            }
            out.extend_from_slice(&next);
            current = next;
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl BaseLearner for LowDegreeLearner {
    fn name(&self) -> String {
        format!("lowdegree-{}", self.degree)
    }

    fn family(&self) -> BaseFamily {
        BaseFamily::UniformOnSubcube
    }

    fn target_error(&self) -> f64 {
        self.eps
    }

    fn sample_complexity(&self, n: usize) -> usize {
        let n_f = n as f64;
        let ln_n = n_f.max(2.0).ln();
        (8.0 * n_f.powi(self.degree as i32) * ln_n / (self.eps * self.eps)).ceil() as usize
    }

    fn robustness(&self) -> Option<f64> {
        None
    }

    /// Correlation estimates only sharpen past the declared complexity, so
    /// the learner reads at most that many examples.
    fn sample_budget(&self, n: usize) -> Option<usize> {
        Some(self.sample_complexity(n))
    }

    fn retargeted(&self, eps: f64) -> Result<Box<dyn BaseLearner>> {
        Ok(Box::new(LowDegreeLearner::new(self.degree, eps)?))
    }

    fn learn(&self, sample: &LabeledSample, _seed: u64) -> Hypothesis {
        let cap = self.sample_complexity(sample.n());
        let items = &sample.items()[..sample.len().min(cap)];
        if items.is_empty() {
            return Hypothesis::constant(Sign::Plus);
        }
        let points: Vec<Point> = items.iter().map(|&(x, _)| x).collect();
        let enclosing = enclosing_restriction_of_points(sample.n(), &points)
            .expect("nonempty sample has an enclosing subcube");
        let free: Vec<usize> = enclosing.free_coords().collect();
        let monomials = self.monomials_over(&free);

        let mut acc = vec![0i64; monomials.len()];
        for &(x, y) in items {
            let y_val = i64::from(y.value());
            for (a, &m) in acc.iter_mut().zip(&monomials) {
                *a += y_val * monomial_value(m, x) as i64;
            }
        }
        let len = items.len() as f64;
        let terms: Vec<PolyTerm> = monomials
            .into_iter()
            .zip(acc)
            .filter(|&(_, a)| a != 0)
            .map(|(monomial, a)| PolyTerm {
                monomial,
                weight: a as f64 / len,
            })
            .collect();
        Hypothesis::SignPolynomial { terms }
    }
}

/// Serializable learner description, the form configs and the CLI use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum LearnerSpec {
    Plurality { eps: f64 },
    Memorizing,
    LowDegree { degree: usize, eps: f64 },
}

impl LearnerSpec {
    pub fn build(&self) -> Result<Box<dyn BaseLearner>> {
        match *self {
            LearnerSpec::Plurality { eps } => Ok(Box::new(PluralityLearner::new(eps)?)),
            LearnerSpec::Memorizing => Ok(Box::new(MemorizingLearner)),
            LearnerSpec::LowDegree { degree, eps } => {
                Ok(Box::new(LowDegreeLearner::new(degree, eps)?))
            }
        }
    }

    /// Parses compact CLI syntax: `plurality[:eps]`, `memorizing`,
    /// `lowdegree:degree[:eps]`. Omitted error targets default to 0.1.
    pub fn parse(text: &str) -> Result<LearnerSpec> {
        let mut parts = text.split(':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let parse_f64 = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                detail: format!("expected a number in learner spec, got {s:?}"),
            })
        };
        match (head, rest.as_slice()) {
            ("plurality", []) => Ok(LearnerSpec::Plurality { eps: 0.1 }),
            ("plurality", [eps]) => Ok(LearnerSpec::Plurality {
                eps: parse_f64(eps)?,
            }),
            ("memorizing", []) => Ok(LearnerSpec::Memorizing),
            ("lowdegree", [degree]) => Ok(LearnerSpec::LowDegree {
                degree: degree.parse().map_err(|_| Error::Parse {
                    detail: format!("expected a degree in learner spec, got {degree:?}"),
                })?,
                eps: 0.1,
            }),
            ("lowdegree", [degree, eps]) => Ok(LearnerSpec::LowDegree {
                degree: degree.parse().map_err(|_| Error::Parse {
                    detail: format!("expected a degree in learner spec, got {degree:?}"),
                })?,
                eps: parse_f64(eps)?,
            }),
            _ => Err(Error::Parse {
                detail: format!("unknown learner spec {text:?}"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Restriction;

    fn labeled(n: usize, rows: &[(&str, i8)]) -> LabeledSample {
        let items = rows
            .iter()
            .map(|&(pat, y)| {
                (
                    Point::decode(pat).unwrap().0,
                    Sign::from_value(y).unwrap(),
                )
            })
            .collect();
        LabeledSample::new(n, items).unwrap()
    }

    #[test]
    fn plurality_follows_the_majority_with_plus_ties() {
        let learner = PluralityLearner::new(0.1).unwrap();
        let s = labeled(2, &[("++", 1), ("-+", 1), ("--", -1)]);
        assert_eq!(learner.learn(&s, 0), Hypothesis::constant(Sign::Plus));
        let all_minus = labeled(2, &[("++", -1), ("--", -1)]);
        assert_eq!(
            learner.learn(&all_minus, 0),
            Hypothesis::constant(Sign::Minus)
        );
        assert_eq!(
            learner.learn(&LabeledSample::empty(2), 0),
            Hypothesis::constant(Sign::Plus)
        );
    }

    #[test]
    fn memorizer_recalls_seen_points_and_defaults_unseen_to_plus() {
        let learner = MemorizingLearner;
        let s = labeled(
            2,
            &[("--", -1), ("--", -1), ("--", 1), ("+-", -1), ("++", 1)],
        );
        let h = learner.learn(&s, 0);
        assert_eq!(h.predict(Point::decode("--").unwrap().0), Some(Sign::Minus));
        assert_eq!(h.predict(Point::decode("+-").unwrap().0), Some(Sign::Minus));
        assert_eq!(h.predict(Point::decode("++").unwrap().0), Some(Sign::Plus));
        assert_eq!(h.predict(Point::decode("-+").unwrap().0), Some(Sign::Plus));
    }

    #[test]
    fn lowdegree_recovers_a_dictator_from_exhaustive_data() {
        let learner = LowDegreeLearner::new(1, 0.2).unwrap();
        let rho = Restriction::all_free(3);
        let items: Vec<(Point, Sign)> = rho.points().map(|x| (x, x.coord(1))).collect();
        let s = LabeledSample::new(3, items).unwrap();
        let h = learner.learn(&s, 0);
        for x in rho.points() {
            assert_eq!(h.predict(x), Some(x.coord(1)));
        }
    }

    #[test]
    fn lowdegree_cannot_express_parity_and_fails_visibly() {
        let learner = LowDegreeLearner::new(1, 0.2).unwrap();
        let rho = Restriction::all_free(2);
        let parity = crate::labeled::TruthTable::parity(2, &[0, 1]);
        let items: Vec<(Point, Sign)> = rho.points().map(|x| (x, parity.value(x))).collect();
        let s = LabeledSample::new(2, items).unwrap();
        let h = learner.learn(&s, 0);
        let wrong = rho
            .points()
            .filter(|&x| h.predict(x) != Some(parity.value(x)))
            .count();
        assert_eq!(wrong, 2);
    }

    #[test]
    fn lowdegree_truncates_to_its_declared_budget() {
        let learner = LowDegreeLearner::new(1, 0.9).unwrap();
        let n = 2;
        let budget = learner.sample_budget(n).unwrap();
        let corners: Vec<Point> = Restriction::all_free(n).points().collect();
        let items: Vec<(Point, Sign)> = corners
            .iter()
            .cycle()
            .take(budget + 17)
            .map(|&x| (x, x.coord(0)))
            .collect();
        let full = LabeledSample::new(n, items.clone()).unwrap();
        let prefix = LabeledSample::new(n, items[..budget].to_vec()).unwrap();
        assert_eq!(learner.learn(&full, 1), learner.learn(&prefix, 1));
    }

    #[test]
    fn learner_specs_build_and_parse() {
        assert_eq!(
            LearnerSpec::parse("lowdegree:2:0.05").unwrap(),
            LearnerSpec::LowDegree {
                degree: 2,
                eps: 0.05
            }
        );
        assert_eq!(
            LearnerSpec::parse("plurality").unwrap(),
            LearnerSpec::Plurality { eps: 0.1 }
        );
        assert!(LearnerSpec::parse("perceptron").is_err());
        assert_eq!(
            LearnerSpec::Memorizing.build().unwrap().name(),
            "memorizing"
        );
        let round: LearnerSpec = serde_json::from_str(
            &serde_json::to_string(&LearnerSpec::LowDegree {
                degree: 1,
                eps: 0.05,
            })
            .unwrap(),
        )
        .unwrap();
        assert_eq!(
            round,
            LearnerSpec::LowDegree {
                degree: 1,
                eps: 0.05
            }
        );
    }

    #[test]
    fn learning_is_deterministic_and_serializes_stably() {
        let learner = LowDegreeLearner::new(1, 0.3).unwrap();
        let s = labeled(3, &[("++-", 1), ("-+-", -1), ("+++", 1), ("--+", -1)]);
        let a = learner.learn(&s, 42);
        let b = learner.learn(&s, 43);
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
    }
}
