//! Turning expected-error guarantees into high-probability ones: run
//! independent copies of a learner on disjoint slices and keep the copy
//! that looks best on a held-out slice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{empirical_error, Hypothesis};
use crate::learners::BaseLearner;
use crate::rng::derive_seed;
use crate::sample::LabeledSample;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    /// The base learner's expected-error target; the selected hypothesis is
    /// good to roughly twice this.
    pub eps: f64,
    /// Acceptable probability of selecting a bad copy.
    pub delta: f64,
    pub copies: usize,
    /// Held-out examples used to compare the copies.
    pub test_size: usize,
}

impl BoostConfig {
    /// Default shape: 2·ln(1/δ) copies, and a holdout large enough that all
    /// copies' validation errors concentrate to within ε/2 simultaneously.
    pub fn new(eps: f64, delta: f64) -> Result<BoostConfig> {
        let copies = (2.0 * (1.0 / Self::check(delta)?).ln()).ceil().max(1.0) as usize;
        BoostConfig::with_copies(eps, delta, copies)
    }

    pub fn with_copies(eps: f64, delta: f64, copies: usize) -> Result<BoostConfig> {
        Self::check(eps)?;
        Self::check(delta)?;
        if copies == 0 {
            return Err(Error::InvalidParameter {
                detail: "boosting needs at least one copy".into(),
            });
        }
        let union = 4.0 * copies as f64 / delta;
        let test_size = (2.0 * union.ln() / (eps * eps)).ceil() as usize;
        Ok(BoostConfig {
            eps,
            delta,
            copies,
            test_size,
        })
    }

    fn check(v: f64) -> Result<f64> {
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err(Error::InvalidParameter {
                detail: format!("boost parameters must lie in (0,1), got {v}"),
            })
        }
    }

    /// Total examples `boost` will consume for a learner needing `m` per
    /// copy.
    pub fn required_sample(&self, m: usize) -> usize {
        self.copies * m + self.test_size
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoostReport {
    /// Index of the selected copy.
    pub chosen: usize,
    pub validation_errors: Vec<f64>,
    /// Seeds handed to the copies, for reproducing any one of them.
    pub copy_seeds: Vec<u64>,
}

/// Trains `cfg.copies` copies of `learner` on disjoint prefix slices of
/// `pool` and returns the copy with the smallest held-out error (ties go to
/// the earliest copy).
pub fn boost(
    learner: &dyn BaseLearner,
    cfg: &BoostConfig,
    pool: &LabeledSample,
    seed: u64,
) -> Result<(Hypothesis, BoostReport)> {
    let m = learner.sample_complexity(pool.n());
    let required = cfg.required_sample(m);
    if pool.len() < required {
        return Err(Error::InsufficientSample {
            got: pool.len(),
            required,
        });
    }
    let copy_seeds: Vec<u64> = (0..cfg.copies)
        .map(|i| derive_seed(seed, "boost-copy", i as u64))
        .collect();
    let hypotheses: Vec<Hypothesis> = copy_seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| Ok(learner.learn(&pool.slice(i * m, m)?, s)))
        .collect::<Result<_>>()?;
    let holdout = pool.slice(cfg.copies * m, cfg.test_size)?;
    let validation_errors: Vec<f64> = hypotheses
        .iter()
        .map(|h| empirical_error(h, &holdout))
        .collect();
    let chosen = validation_errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one copy");
    let mut hypotheses = hypotheses;
    let winner = hypotheses.swap_remove(chosen);
    Ok((
        winner,
        BoostReport {
            chosen,
            validation_errors,
            copy_seeds,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Sign;
    use crate::labeled::{LabeledDistribution, TruthTable};
    use crate::learners::PluralityLearner;
    use crate::pmf::DensePmf;

    #[test]
    fn config_sizes_scale_with_delta_and_eps() {
        let cfg = BoostConfig::new(0.1, 0.1).unwrap();
        assert_eq!(cfg.copies, 5);
        assert!(cfg.test_size >= (2.0 * (4.0 * 5.0 / 0.1f64).ln() / 0.01) as usize);
        assert!(BoostConfig::new(0.0, 0.1).is_err());
        let wide = BoostConfig::with_copies(0.1, 0.1, 8).unwrap();
        assert_eq!(wide.copies, 8);
    }

    #[test]
    fn single_copy_degenerates_to_the_base_learner() {
        let learner = PluralityLearner::new(0.2).unwrap();
        let d = LabeledDistribution::clean(
            DensePmf::uniform(3),
            TruthTable::constant(3, Sign::Minus),
        )
        .unwrap();
        let cfg = BoostConfig::with_copies(0.2, 0.2, 1).unwrap();
        let pool = d.sample(cfg.required_sample(learner.sample_complexity(3)), 11);
        let (h, report) = boost(&learner, &cfg, &pool, 5).unwrap();
        assert_eq!(h, Hypothesis::constant(Sign::Minus));
        assert_eq!(report.chosen, 0);
        assert_eq!(report.validation_errors, vec![0.0]);
    }

    #[test]
    fn insufficient_pools_are_rejected_with_the_required_size() {
        let learner = PluralityLearner::new(0.2).unwrap();
        let cfg = BoostConfig::new(0.2, 0.1).unwrap();
        let short = LabeledSample::empty(3);
        let err = boost(&learner, &cfg, &short, 5).unwrap_err();
        match err {
            Error::InsufficientSample { got, required } => {
                assert_eq!(got, 0);
                assert_eq!(
                    required,
                    cfg.required_sample(learner.sample_complexity(3))
                );
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn boosting_is_deterministic() {
        let learner = PluralityLearner::new(0.3).unwrap();
        let d = LabeledDistribution::clean(DensePmf::uniform(2), TruthTable::dictator(2, 0))
            .unwrap();
        let cfg = BoostConfig::new(0.3, 0.2).unwrap();
        let pool = d.sample(cfg.required_sample(learner.sample_complexity(2)), 3);
        let (h1, r1) = boost(&learner, &cfg, &pool, 9).unwrap();
        let (h2, r2) = boost(&learner, &cfg, &pool, 9).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(r1.chosen, r2.chosen);
        assert_eq!(r1.validation_errors, r2.validation_errors);
    }
}
