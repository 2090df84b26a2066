//! Reproducible end-to-end runs: a planted scenario, a base learner, a
//! lifter, optional noise, and a trial count, all described by one
//! serializable config whose hash names the run.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cover::SubcubePartition;
use crate::cube::{Point, Restriction, Sign};
use crate::error::{Error, Result};
use crate::hypothesis::{empirical_error, Hypothesis};
use crate::labeled::{corrupt, LabeledDistribution, NoiseModel, TruthTable};
use crate::learners::{BaseLearner, LearnerSpec};
use crate::lift_dt::{default_dt_m_test, default_dt_m_train, tree_learn};
use crate::lift_subcube::{
    default_subcube_m_test, default_subcube_m_train, partition_learn, refined_base_target,
};
use crate::pmf::{
    compose_partition_dist, compose_tree_dist, tribes_accepts, tribes_partition,
    tribes_support_dist, DensePmf,
};
use crate::rng::derive_seed;
use crate::tree::DecisionTree;

/// Target labels inside one planted piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum LeafTarget {
    Constant { value: Sign },
    Dictator { coord: usize },
    NegatedDictator { coord: usize },
    Parity { coords: Vec<usize> },
}

impl LeafTarget {
    pub fn value(&self, x: Point) -> Sign {
        match self {
            LeafTarget::Constant { value } => *value,
            LeafTarget::Dictator { coord } => x.coord(*coord),
            LeafTarget::NegatedDictator { coord } => x.coord(*coord).flip(),
            LeafTarget::Parity { coords } => Sign::from_bool(
                coords.iter().filter(|&&i| x.coord(i) == Sign::Minus).count() % 2 == 0,
            ),
        }
    }
}

/// Conditional distribution inside one planted piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum LeafDist {
    Uniform,
    /// Independent coordinates, each positive with probability `plus_bias`.
    Product { plus_bias: f64 },
}

impl LeafDist {
    pub fn build(&self, rho: &Restriction) -> Result<DensePmf> {
        match self {
            LeafDist::Uniform => Ok(DensePmf::uniform_on_restriction(rho)),
            LeafDist::Product { plus_bias } => {
                DensePmf::product_on_restriction(rho, &vec![*plus_bias; rho.n()])
            }
        }
    }
}

/// A scenario the lifters are supposed to handle: a distribution built from
/// planted subcube structure, plus the target labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "planted", rename_all = "snake_case")]
pub enum PlantedDescriptor {
    TreeMixture {
        n: usize,
        tree: DecisionTree,
        weights: Vec<f64>,
        targets: Vec<LeafTarget>,
        dists: Vec<LeafDist>,
    },
    PartitionMixture {
        n: usize,
        pieces: Vec<Restriction>,
        weights: Vec<f64>,
        targets: Vec<LeafTarget>,
        dists: Vec<LeafDist>,
        default_label: Sign,
    },
    TribesSupport {
        width: usize,
        count: usize,
    },
}

pub struct PlantedScenario {
    pub n: usize,
    pub clean: LabeledDistribution,
    pub target: TruthTable,
    /// The planted pieces, for certificates and noise placement.
    pub partition: SubcubePartition,
    pub tree: Option<DecisionTree>,
}

fn check_component_counts(pieces: usize, weights: usize, targets: usize, dists: usize) -> Result<()> {
    if weights != pieces || targets != pieces || dists != pieces {
        return Err(Error::InvalidParameter {
            detail: format!(
                "{pieces} pieces need matching weights/targets/dists, got {weights}/{targets}/{dists}"
            ),
        });
    }
    Ok(())
}

fn routed_truth_table(
    n: usize,
    pieces: &[Restriction],
    targets: &[LeafTarget],
    default_label: Sign,
) -> TruthTable {
    TruthTable::from_fn(n, |x| {
        match pieces.iter().position(|rho| rho.consistent(x)) {
            Some(i) => targets[i].value(x),
            None => default_label,
        }
    })
}

impl PlantedDescriptor {
    pub fn build(&self) -> Result<PlantedScenario> {
        match self {
            PlantedDescriptor::TreeMixture {
                n,
                tree,
                weights,
                targets,
                dists,
            } => {
                let leaves = tree.leaves(&Restriction::all_free(*n))?;
                check_component_counts(leaves.len(), weights.len(), targets.len(), dists.len())?;
                let leaf_dists: Vec<DensePmf> = leaves
                    .iter()
                    .zip(dists)
                    .map(|(rho, spec)| spec.build(rho))
                    .collect::<Result<_>>()?;
                let base = compose_tree_dist(*n, tree, weights, &leaf_dists)?;
                let target = routed_truth_table(*n, &leaves, targets, Sign::Plus);
                Ok(PlantedScenario {
                    n: *n,
                    clean: LabeledDistribution::clean(base, target.clone())?,
                    target,
                    partition: SubcubePartition::new(*n, leaves)?,
                    tree: Some(tree.clone()),
                })
            }
            PlantedDescriptor::PartitionMixture {
                n,
                pieces,
                weights,
                targets,
                dists,
                default_label,
            } => {
                let partition = SubcubePartition::new(*n, pieces.clone())?;
                check_component_counts(pieces.len(), weights.len(), targets.len(), dists.len())?;
                let piece_dists: Vec<DensePmf> = pieces
                    .iter()
                    .zip(dists)
                    .map(|(rho, spec)| spec.build(rho))
                    .collect::<Result<_>>()?;
                let base = compose_partition_dist(&partition, weights, &piece_dists)?;
                let target = routed_truth_table(*n, pieces, targets, *default_label);
                Ok(PlantedScenario {
                    n: *n,
                    clean: LabeledDistribution::clean(base, target.clone())?,
                    target,
                    partition,
                    tree: None,
                })
            }
            PlantedDescriptor::TribesSupport { width, count } => {
                let n = width * count;
                let base = tribes_support_dist(*width, *count)?;
                let target = TruthTable::from_fn(n, |x| {
                    Sign::from_bool(tribes_accepts(*width, *count, x))
                });
                Ok(PlantedScenario {
                    n,
                    clean: LabeledDistribution::clean(base, target.clone())?,
                    target,
                    partition: tribes_partition(*width, *count)?,
                    tree: None,
                })
            }
        }
    }

    pub fn n(&self) -> usize {
        match self {
            PlantedDescriptor::TreeMixture { n, .. }
            | PlantedDescriptor::PartitionMixture { n, .. } => *n,
            PlantedDescriptor::TribesSupport { width, count } => width * count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lifter", rename_all = "snake_case")]
pub enum LifterSpec {
    Dt { d: usize },
    Subcube { d: usize, s: usize },
    /// Run the base learner directly on the training sample.
    BaseOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Free-form label naming the run in result files.
    pub scenario: String,
    pub descriptor: PlantedDescriptor,
    pub learner: LearnerSpec,
    pub lifter: LifterSpec,
    pub eps: f64,
    /// Overrides for the lifter's default sample sizes.
    #[serde(default)]
    pub m_train: Option<usize>,
    #[serde(default)]
    pub m_test: Option<usize>,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    pub trials: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// The sample sizes this run will draw, applying defaults where the
    /// config leaves them open.
    pub fn resolved_sizes(&self, learner: &dyn BaseLearner) -> Result<(usize, usize)> {
        let n = self.descriptor.n();
        let (train_default, test_default) = match self.lifter {
            LifterSpec::Dt { d } => (
                default_dt_m_train(d, self.eps, learner.sample_complexity(n)),
                default_dt_m_test(n, d, self.eps),
            ),
            LifterSpec::Subcube { d, s } => {
                let refined = learner.retargeted(refined_base_target(self.eps))?;
                (
                    default_subcube_m_train(s, self.eps, refined.sample_complexity(n)),
                    default_subcube_m_test(n, s, d, self.eps),
                )
            }
            LifterSpec::BaseOnly => (
                learner.sample_complexity(n),
                default_dt_m_test(n, 0, self.eps),
            ),
        };
        Ok((
            self.m_train.unwrap_or(train_default),
            self.m_test.unwrap_or(test_default),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Error measured on the trial's held-out sample.
    pub empirical_test_error: f64,
    /// Exact error of the learned hypothesis against the clean scenario,
    /// computed by full enumeration.
    pub true_error: f64,
    /// Content fingerprint of the learned hypothesis.
    pub hypothesis_id: String,
    /// Wall time of the trial. Deliberately left out of the serialized
    /// form so identical configs produce byte-identical result files.
    #[serde(skip)]
    pub millis: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_error: f64,
    pub std_error: f64,
    pub min_error: f64,
    pub median_error: f64,
    pub max_error: f64,
    pub mean_empirical_error: f64,
}

impl Aggregate {
    pub fn from_records(records: &[TrialRecord]) -> Aggregate {
        let k = records.len() as f64;
        let mean = records.iter().map(|r| r.true_error).sum::<f64>() / k;
        let var = records
            .iter()
            .map(|r| (r.true_error - mean).powi(2))
            .sum::<f64>()
            / k;
        let mut sorted: Vec<f64> = records.iter().map(|r| r.true_error).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("errors are finite"));
        let median = if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
        };
        Aggregate {
            mean_error: mean,
            std_error: var.sqrt(),
            min_error: sorted[0],
            median_error: median,
            max_error: *sorted.last().expect("at least one trial"),
            mean_empirical_error: records.iter().map(|r| r.empirical_test_error).sum::<f64>() / k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub n: usize,
    pub m_train: usize,
    pub m_test: usize,
    pub records: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

/// SHA-256 of the config's JSON form, hex encoded. Struct fields and all
/// ordered maps serialize deterministically, so equal configs hash equal.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Runs the configured trials. Each trial draws fresh train and test
/// samples from the (possibly corrupted) scenario distribution with seeds
/// derived from the master seed, learns, and scores the result against the
/// clean distribution.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter {
            detail: "experiment needs at least one trial".into(),
        });
    }
    if !(config.eps > 0.0 && config.eps < 1.0) {
        return Err(Error::InvalidParameter {
            detail: format!("error target must lie in (0,1), got {}", config.eps),
        });
    }
    let scenario = config.descriptor.build()?;
    let learner = config.learner.build()?;
    let source = match &config.noise {
        None => scenario.clean.clone(),
        Some(model) => corrupt(&scenario.clean, model)?,
    };
    let (m_train, m_test) = config.resolved_sizes(learner.as_ref())?;

    let mut records = Vec::with_capacity(config.trials);
    for t in 0..config.trials {
        let started = std::time::Instant::now();
        let trial_seed = derive_seed(config.master_seed, "trial", t as u64);
        let s_train = source.sample(m_train, derive_seed(config.master_seed, "train-sample", t as u64));
        let s_test = source.sample(m_test, derive_seed(config.master_seed, "test-sample", t as u64));
        let (hypothesis, empirical): (Hypothesis, f64) = match config.lifter {
            LifterSpec::Dt { d } => {
                let out = tree_learn(learner.as_ref(), &s_train, &s_test, d, trial_seed)?;
                let empirical = out.stats.test_raw_error as f64 / out.stats.test_size.max(1) as f64;
                (out.hypothesis, empirical)
            }
            LifterSpec::Subcube { d, s } => {
                let out = partition_learn(
                    learner.as_ref(),
                    d,
                    s,
                    config.eps,
                    &s_train,
                    &s_test,
                    trial_seed,
                )?;
                let empirical = out.stats.test_raw_error as f64 / out.stats.test_size.max(1) as f64;
                (out.hypothesis, empirical)
            }
            LifterSpec::BaseOnly => {
                let h = learner.learn(&s_train, trial_seed);
                let empirical = empirical_error(&h, &s_test);
                (h, empirical)
            }
        };
        records.push(TrialRecord {
            trial: t,
            empirical_test_error: empirical,
            true_error: scenario.clean.true_error(&hypothesis),
            hypothesis_id: hypothesis.content_id(),
            millis: started.elapsed().as_millis() as u64,
        });
    }
    Ok(ExperimentResult {
        config: config.clone(),
        config_hash: config_hash(config)?,
        n: scenario.n,
        m_train,
        m_test,
        records: records.clone(),
        aggregate: Aggregate::from_records(&records),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub config_hash: String,
    pub mean_error: f64,
    pub min_error: f64,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

/// A copy of `config` with one axis value substituted. Supported axes:
/// `m_train`, `eta` (requires a noise model), and `d` (requires a lifter
/// with a depth).
pub fn apply_axis(config: &ExperimentConfig, axis: &str, value: f64) -> Result<ExperimentConfig> {
    let mut out = config.clone();
    match axis {
        "m_train" => {
            if !(value >= 1.0) {
                return Err(Error::InvalidParameter {
                    detail: format!("m_train must be at least 1, got {value}"),
                });
            }
            out.m_train = Some(value as usize);
        }
        "eta" => match out.noise.as_mut() {
            Some(model) => model.eta = value,
            None => {
                return Err(Error::InvalidParameter {
                    detail: "sweeping eta requires a noise model in the config".into(),
                })
            }
        },
        "d" => {
            if !(value >= 0.0) {
                return Err(Error::InvalidParameter {
                    detail: format!("depth must be nonnegative, got {value}"),
                });
            }
            match &mut out.lifter {
                LifterSpec::Dt { d } | LifterSpec::Subcube { d, .. } => *d = value as usize,
                LifterSpec::BaseOnly => {
                    return Err(Error::InvalidParameter {
                        detail: "the base-only lifter has no depth to sweep".into(),
                    })
                }
            }
        }
        other => {
            return Err(Error::InvalidParameter {
                detail: format!("unknown sweep axis {other:?}, expected m_train, eta, or d"),
            })
        }
    }
    Ok(out)
}

pub fn sweep(template: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<SweepResult> {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let config = apply_axis(template, axis, value)?;
        let result = run_experiment(&config)?;
        rows.push(SweepRow {
            value,
            config_hash: result.config_hash,
            mean_error: result.aggregate.mean_error,
            min_error: result.aggregate.min_error,
            max_error: result.aggregate.max_error,
        });
    }
    Ok(SweepResult {
        axis: axis.to_string(),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    pub fn parse(text: &str) -> Result<TableFormat> {
        match text {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::Parse {
                detail: format!("unknown table format {other:?}, expected csv or json"),
            }),
        }
    }
}

pub fn emit_table(result: &SweepResult, format: TableFormat) -> Result<String> {
    match format {
        TableFormat::Json => Ok(serde_json::to_string_pretty(result)?),
        TableFormat::Csv => {
            let mut out = format!("{},mean_error,min_error,max_error\n", result.axis);
            for row in &result.rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    row.value, row.mean_error, row.min_error, row.max_error
                ));
            }
            Ok(out)
        }
    }
}

/// Per-trial errors of one run as a flat table.
pub fn trial_table(result: &ExperimentResult) -> String {
    let mut out = String::from("trial,empirical_test_error,true_error,hypothesis_id\n");
    for r in &result.records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.trial, r.empirical_test_error, r.true_error, r.hypothesis_id
        ));
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeled::NoiseMode;

    fn split_scenario() -> PlantedDescriptor {
        PlantedDescriptor::TreeMixture {
            n: 2,
            tree: DecisionTree::split(0, DecisionTree::leaf(), DecisionTree::leaf()),
            weights: vec![0.5, 0.5],
            targets: vec![
                LeafTarget::Constant { value: Sign::Minus },
                LeafTarget::Constant { value: Sign::Plus },
            ],
            dists: vec![LeafDist::Uniform, LeafDist::Uniform],
        }
    }

    #[test]
    fn tree_mixture_builds_the_expected_distribution_and_labels() {
        let scenario = split_scenario().build().unwrap();
        assert_eq!(scenario.n, 2);
        let marginal = scenario.clean.marginal();
        for x in Restriction::all_free(2).points() {
            assert!((marginal.mass_at(x) - 0.25).abs() < 1e-12);
            assert_eq!(scenario.target.value(x), x.coord(0));
        }
        assert_eq!(scenario.partition.pieces().len(), 2);
        assert!(scenario.tree.is_some());
    }

    #[test]
    fn tribes_scenario_labels_exactly_the_accepting_points() {
        let scenario = PlantedDescriptor::TribesSupport { width: 2, count: 1 }
            .build()
            .unwrap();
        assert_eq!(scenario.target.value(Point(0)), Sign::Minus);
        for v in 1..4u32 {
            assert_eq!(scenario.target.value(Point(v)), Sign::Plus);
        }
        assert_eq!(scenario.clean.marginal().mass_at(Point(0)), 0.0);
    }

    #[test]
    fn mismatched_component_counts_are_rejected() {
        let bad = PlantedDescriptor::PartitionMixture {
            n: 2,
            pieces: vec![
                Restriction::parse("-*").unwrap(),
                Restriction::parse("+*").unwrap(),
            ],
            weights: vec![1.0],
            targets: vec![LeafTarget::Constant { value: Sign::Plus }],
            dists: vec![LeafDist::Uniform],
            default_label: Sign::Plus,
        };
        assert!(bad.build().is_err());
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            scenario: "unit-split".into(),
            descriptor: split_scenario(),
            learner: LearnerSpec::Plurality { eps: 0.2 },
            lifter: LifterSpec::Dt { d: 1 },
            eps: 0.2,
            m_train: Some(400),
            m_test: Some(200),
            noise: None,
            trials: 3,
            master_seed: 11,
        }
    }

    #[test]
    fn a_plantable_split_is_learned_essentially_perfectly() {
        let result = run_experiment(&small_config()).unwrap();
        assert_eq!(result.records.len(), 3);
        assert!(result.aggregate.mean_error < 0.05);
        assert_eq!(result.m_train, 400);
    }

    #[test]
    fn identical_configs_reproduce_byte_identical_results() {
        let a = run_experiment(&small_config()).unwrap();
        let b = run_experiment(&small_config()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn config_hash_tracks_content() {
        let mut other = small_config();
        other.master_seed += 1;
        assert_ne!(
            config_hash(&small_config()).unwrap(),
            config_hash(&other).unwrap()
        );
    }

    #[test]
    fn axis_substitution_validates_its_target() {
        let cfg = small_config();
        assert!(apply_axis(&cfg, "eta", 0.1).is_err());
        assert!(apply_axis(&cfg, "unknown", 0.1).is_err());
        let deeper = apply_axis(&cfg, "d", 2.0).unwrap();
        assert_eq!(deeper.lifter, LifterSpec::Dt { d: 2 });
        let mut noisy = cfg;
        noisy.noise = Some(NoiseModel {
            eta: 0.0,
            mode: NoiseMode::LabelFlip,
        });
        let swept = apply_axis(&noisy, "eta", 0.05).unwrap();
        assert_eq!(swept.noise.unwrap().eta, 0.05);
    }

    #[test]
    fn sweeping_m_train_emits_one_row_per_value() {
        let mut cfg = small_config();
        cfg.trials = 2;
        let result = sweep(&cfg, "m_train", &[50.0, 200.0]).unwrap();
        assert_eq!(result.rows.len(), 2);
        let table = emit_table(&result, TableFormat::Csv).unwrap();
        assert!(table.starts_with("m_train,mean_error"));
        assert_eq!(table.lines().count(), 3);
        assert!(emit_table(&result, TableFormat::Json).unwrap().contains("rows"));
    }

    #[test]
    fn json_round_trip_preserves_the_result() {
        let result = run_experiment(&small_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.json");
        write_json(&path, &result).unwrap();
        let back: ExperimentResult = read_json(&path).unwrap();
        assert_eq!(
            serde_json::to_string(&back).unwrap(),
            serde_json::to_string(&result).unwrap()
        );
        // Aggregates are recomputable from the per-trial records.
        assert_eq!(Aggregate::from_records(&back.records), back.aggregate);
    }
}
