//! Labeled distributions: a marginal over points together with labels,
//! either as a clean target function or as a joint mass over (point, label)
//! pairs, plus the TV-bounded corruption adversary.

use serde::{Deserialize, Serialize};

use crate::cube::{Point, Restriction, Sign, MAX_DIMENSION};
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::pmf::{DensePmf, MASS_TOLERANCE};
use crate::rng::rng_from_seed;
use crate::sample::LabeledSample;
use crate::tree::DecisionTree;
use rand::Rng;

/// A total labeling of the cube, stored as a dense truth table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTruthTable")]
pub struct TruthTable {
    n: usize,
    labels: Vec<Sign>,
}

#[derive(Deserialize)]
struct RawTruthTable {
    n: usize,
    labels: Vec<Sign>,
}

impl TryFrom<RawTruthTable> for TruthTable {
    type Error = Error;

    fn try_from(raw: RawTruthTable) -> Result<TruthTable> {
        if raw.n == 0 || raw.n > MAX_DIMENSION {
            return Err(Error::InvalidParameter {
                detail: format!("truth table dimension must be 1..={MAX_DIMENSION}, got {}", raw.n),
            });
        }
        if raw.labels.len() != 1 << raw.n {
            return Err(Error::Parse {
                detail: format!(
                    "truth table for n={} needs {} labels, got {}",
                    raw.n,
                    1usize << raw.n,
                    raw.labels.len()
                ),
            });
        }
        Ok(TruthTable {
            n: raw.n,
            labels: raw.labels,
        })
    }
}

impl TruthTable {
    pub fn from_fn(n: usize, f: impl Fn(Point) -> Sign) -> TruthTable {
        assert!(n >= 1 && n <= MAX_DIMENSION);
        let labels = (0..1u32 << n).map(|bits| f(Point(bits))).collect();
        TruthTable { n, labels }
    }

    pub fn constant(n: usize, sign: Sign) -> TruthTable {
        TruthTable::from_fn(n, |_| sign)
    }

    /// The function x ↦ x_i.
    pub fn dictator(n: usize, i: usize) -> TruthTable {
        assert!(i < n);
        TruthTable::from_fn(n, |x| x.coord(i))
    }

    pub fn negated_dictator(n: usize, i: usize) -> TruthTable {
        assert!(i < n);
        TruthTable::from_fn(n, |x| x.coord(i).flip())
    }

    /// +1 iff an even number of the listed coordinates are −1.
    pub fn parity(n: usize, coords: &[usize]) -> TruthTable {
        assert!(coords.iter().all(|&i| i < n));
        let mask: u32 = coords.iter().fold(0, |m, &i| m | 1 << i);
        TruthTable::from_fn(n, |x| {
            Sign::from_bool((!x.0 & mask).count_ones() % 2 == 0)
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, x: Point) -> Sign {
        self.labels[x.index()]
    }
}

fn joint_index(x: Point, y: Sign) -> usize {
    (x.index() << 1) | usize::from(y == Sign::Plus)
}

/// A distribution over labeled examples (x, y) ∈ {±1}^n × {±1}.
///
/// The `Clean` form pairs a marginal with a target function, so every point
/// carries a single label. Corruption produces the `Joint` form, a dense
/// mass vector over all 2^{n+1} outcomes indexed by `(point_bits << 1) |
/// is_plus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(try_from = "RawLabeledDistribution")]
pub enum LabeledDistribution {
    Clean { base: DensePmf, target: TruthTable },
    Joint { n: usize, mass: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawLabeledDistribution {
    Clean { base: DensePmf, target: TruthTable },
    Joint { n: usize, mass: Vec<f64> },
}

impl TryFrom<RawLabeledDistribution> for LabeledDistribution {
    type Error = Error;

    fn try_from(raw: RawLabeledDistribution) -> Result<LabeledDistribution> {
        match raw {
            RawLabeledDistribution::Clean { base, target } => {
                LabeledDistribution::clean(base, target)
            }
            RawLabeledDistribution::Joint { n, mass } => LabeledDistribution::joint(n, mass),
        }
    }
}

impl LabeledDistribution {
    pub fn clean(base: DensePmf, target: TruthTable) -> Result<LabeledDistribution> {
        if base.n() != target.n() {
            return Err(Error::DimensionMismatch {
                expected: base.n(),
                got: target.n(),
            });
        }
        Ok(LabeledDistribution::Clean { base, target })
    }

    pub fn joint(n: usize, mass: Vec<f64>) -> Result<LabeledDistribution> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::InvalidParameter {
                detail: format!("dimension must be 1..={MAX_DIMENSION}, got {n}"),
            });
        }
        if mass.len() != 1 << (n + 1) {
            return Err(Error::InvalidMass {
                detail: format!(
                    "joint mass for n={n} needs {} entries, got {}",
                    1usize << (n + 1),
                    mass.len()
                ),
            });
        }
        let mut total = 0.0;
        for &m in &mass {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMass {
                    detail: format!("joint mass {m} is not a probability"),
                });
            }
            total += m;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMass {
                detail: format!("joint masses sum to {total}, not 1"),
            });
        }
        Ok(LabeledDistribution::Joint { n, mass })
    }

    pub fn n(&self) -> usize {
        match self {
            LabeledDistribution::Clean { base, .. } => base.n(),
            LabeledDistribution::Joint { n, .. } => *n,
        }
    }

    pub fn joint_mass_at(&self, x: Point, y: Sign) -> f64 {
        match self {
            LabeledDistribution::Clean { base, target } => {
                if target.value(x) == y {
                    base.mass_at(x)
                } else {
                    0.0
                }
            }
            LabeledDistribution::Joint { mass, .. } => mass[joint_index(x, y)],
        }
    }

    /// The marginal distribution over points.
    pub fn marginal(&self) -> DensePmf {
        match self {
            LabeledDistribution::Clean { base, .. } => base.clone(),
            LabeledDistribution::Joint { n, mass } => {
                let sums: Vec<f64> = (0..1usize << n)
                    .map(|i| mass[i << 1] + mass[(i << 1) | 1])
                    .collect();
                DensePmf::new(*n, sums).expect("marginal of a validated joint")
            }
        }
    }

    pub fn to_joint(&self) -> LabeledDistribution {
        match self {
            LabeledDistribution::Joint { .. } => self.clone(),
            LabeledDistribution::Clean { base, target } => {
                let n = base.n();
                let mut mass = vec![0.0; 1 << (n + 1)];
                for i in 0..1usize << n {
                    let x = Point::from_index(i);
                    mass[joint_index(x, target.value(x))] = base.mass_at(x);
                }
                LabeledDistribution::Joint { n, mass }
            }
        }
    }

    /// Exact TV distance between joint distributions over (point, label).
    pub fn tv_distance(&self, other: &LabeledDistribution) -> Result<f64> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: other.n(),
            });
        }
        let mut l1 = 0.0;
        for i in 0..1u32 << self.n() {
            let x = Point(i);
            for y in [Sign::Minus, Sign::Plus] {
                l1 += (self.joint_mass_at(x, y) - other.joint_mass_at(x, y)).abs();
            }
        }
        Ok(l1 / 2.0)
    }

    /// Exact probability that `h` disagrees with a draw; abstentions count
    /// as errors.
    pub fn true_error(&self, h: &Hypothesis) -> f64 {
        let mut err = 0.0;
        for i in 0..1u32 << self.n() {
            let x = Point(i);
            let p = h.predict(x);
            for y in [Sign::Minus, Sign::Plus] {
                if p != Some(y) {
                    err += self.joint_mass_at(x, y);
                }
            }
        }
        err
    }

    /// Marginal probability of the subcube of `rho`.
    pub fn mass_of(&self, rho: &Restriction) -> Result<f64> {
        if rho.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: rho.n(),
            });
        }
        let mut w = 0.0;
        for x in rho.points() {
            w += self.joint_mass_at(x, Sign::Minus) + self.joint_mass_at(x, Sign::Plus);
        }
        Ok(w)
    }

    /// Conditions on x ∈ ρ. A clean distribution stays clean.
    pub fn conditional_on(&self, rho: &Restriction) -> Result<LabeledDistribution> {
        match self {
            LabeledDistribution::Clean { base, target } => Ok(LabeledDistribution::Clean {
                base: base.restrict(rho)?,
                target: target.clone(),
            }),
            LabeledDistribution::Joint { n, mass } => {
                let z = self.mass_of(rho)?;
                if z == 0.0 {
                    return Err(Error::ConditioningOnNull {
                        pattern: rho.pattern(),
                    });
                }
                let mut out = vec![0.0; mass.len()];
                for x in rho.points() {
                    for y in [Sign::Minus, Sign::Plus] {
                        out[joint_index(x, y)] = mass[joint_index(x, y)] / z;
                    }
                }
                LabeledDistribution::joint(*n, out)
            }
        }
    }

    /// Draws `m` i.i.d. labeled examples. Deterministic given the seed.
    pub fn sample(&self, m: usize, seed: u64) -> LabeledSample {
        let n = self.n();
        let mut outcomes: Vec<(Point, Sign)> = Vec::new();
        let mut cumulative: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for i in 0..1u32 << n {
            let x = Point(i);
            for y in [Sign::Minus, Sign::Plus] {
                let mass = self.joint_mass_at(x, y);
                if mass > 0.0 {
                    acc += mass;
                    outcomes.push((x, y));
                    cumulative.push(acc);
                }
            }
        }
        let mut rng = rng_from_seed(seed);
        let items = (0..m)
            .map(|_| {
                let u: f64 = rng.gen();
                let idx = cumulative
                    .partition_point(|&c| c <= u)
                    .min(outcomes.len() - 1);
                outcomes[idx]
            })
            .collect();
        LabeledSample::new(n, items).expect("samples drawn within dimension")
    }
}

/// How the corruption budget is spent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseMode {
    /// Move label mass from each point's majority label to the other label,
    /// heaviest points first.
    LabelFlip,
    /// Move point mass onto a single junk point, mislabeled.
    PointReplacement,
    /// Spend the whole budget flipping labels inside one cell of the given
    /// disjoint cover (the lightest cell that can absorb it), spilling to
    /// the next-lightest only when the budget exceeds the cell's mass.
    WorstLeaf { leaves: Vec<Restriction> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub eta: f64,
    pub mode: NoiseMode,
}

/// Points of a region ordered heaviest-first (ties toward smaller index),
/// by total point mass in `joint`.
fn points_by_mass_desc(joint: &[f64], points: impl Iterator<Item = Point>) -> Vec<Point> {
    let mut with_mass: Vec<(Point, f64)> = points
        .map(|x| (x, joint[joint_index(x, Sign::Minus)] + joint[joint_index(x, Sign::Plus)]))
        .collect();
    with_mass.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0 .0.cmp(&b.0 .0)));
    with_mass.into_iter().map(|(x, _)| x).collect()
}

/// Flips label mass at the given points, majority label first per point,
/// until `budget` is spent. Returns the amount actually moved.
fn flip_labels(joint: &mut [f64], ordered_points: &[Point], budget: f64) -> f64 {
    let mut left = budget;
    for &x in ordered_points {
        if left <= 0.0 {
            break;
        }
        let plus = joint_index(x, Sign::Plus);
        let minus = joint_index(x, Sign::Minus);
        let (from, to) = if joint[plus] >= joint[minus] {
            (plus, minus)
        } else {
            (minus, plus)
        };
        let delta = joint[from].min(left);
        joint[from] -= delta;
        joint[to] += delta;
        left -= delta;
    }
    budget - left
}

fn max_label_mass(joint: &[f64], x: Point) -> f64 {
    joint[joint_index(x, Sign::Plus)].max(joint[joint_index(x, Sign::Minus)])
}

/// Produces a corrupted copy at exact TV distance `eta` from `clean`.
///
/// Every mode moves mass in one direction only (no outcome both gains and
/// loses), so the TV distance equals the total mass moved; the result is
/// re-verified by exact TV computation before being returned.
pub fn corrupt(clean: &LabeledDistribution, noise: &NoiseModel) -> Result<LabeledDistribution> {
    if !(0.0..=1.0).contains(&noise.eta) {
        return Err(Error::InvalidParameter {
            detail: format!("noise level {} is outside [0,1]", noise.eta),
        });
    }
    if noise.eta == 0.0 {
        return Ok(clean.clone());
    }
    let n = clean.n();
    let LabeledDistribution::Joint { mut mass, .. } = clean.to_joint() else {
        unreachable!("to_joint returns the joint form");
    };

    match &noise.mode {
        NoiseMode::LabelFlip => {
            let all = Restriction::all_free(n);
            let movable: f64 = all.points().map(|x| max_label_mass(&mass, x)).sum();
            if noise.eta > movable + MASS_TOLERANCE {
                return Err(Error::InfeasibleNoise {
                    requested: noise.eta,
                    movable,
                });
            }
            let order = points_by_mass_desc(&mass, all.points());
            flip_labels(&mut mass, &order, noise.eta);
        }
        NoiseMode::PointReplacement => {
            // The junk point is the lightest one; everything moved lands on
            // its minority label so the corruption actually misleads.
            let all = Restriction::all_free(n);
            let mut order = points_by_mass_desc(&mass, all.points());
            let receiver = *order.last().expect("cube is nonempty");
            order.pop();
            let receiver_mass =
                mass[joint_index(receiver, Sign::Plus)] + mass[joint_index(receiver, Sign::Minus)];
            let movable = 1.0 - receiver_mass;
            if noise.eta > movable + MASS_TOLERANCE {
                return Err(Error::InfeasibleNoise {
                    requested: noise.eta,
                    movable,
                });
            }
            let to = if mass[joint_index(receiver, Sign::Plus)]
                <= mass[joint_index(receiver, Sign::Minus)]
            {
                joint_index(receiver, Sign::Plus)
            } else {
                joint_index(receiver, Sign::Minus)
            };
            let mut left = noise.eta;
            'donors: for x in order {
                for y in [Sign::Plus, Sign::Minus] {
                    if left <= 0.0 {
                        break 'donors;
                    }
                    let from = joint_index(x, y);
                    let delta = mass[from].min(left);
                    mass[from] -= delta;
                    mass[to] += delta;
                    left -= delta;
                }
            }
        }
        NoiseMode::WorstLeaf { leaves } => {
            if leaves.is_empty() {
                return Err(Error::InvalidParameter {
                    detail: "worst-leaf noise needs at least one leaf".into(),
                });
            }
            for (i, a) in leaves.iter().enumerate() {
                if a.n() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: a.n(),
                    });
                }
                for b in &leaves[..i] {
                    if !a.disjoint_from(b) {
                        return Err(Error::InvalidParameter {
                            detail: format!("leaves {} and {} overlap", b.pattern(), a.pattern()),
                        });
                    }
                }
            }
            let flippable: Vec<f64> = leaves
                .iter()
                .map(|leaf| leaf.points().map(|x| max_label_mass(&mass, x)).sum())
                .collect();
            let total_movable: f64 = flippable.iter().sum();
            if noise.eta > total_movable + MASS_TOLERANCE {
                return Err(Error::InfeasibleNoise {
                    requested: noise.eta,
                    movable: total_movable,
                });
            }
            // Lightest cell that can hold the whole budget, if any.
            let mut order: Vec<usize> = (0..leaves.len()).collect();
            order.sort_by(|&a, &b| {
                flippable[a]
                    .partial_cmp(&flippable[b])
                    .unwrap()
                    .then(leaves[a].cmp(&leaves[b]))
            });
            let target = order
                .iter()
                .copied()
                .find(|&i| flippable[i] + MASS_TOLERANCE >= noise.eta);
            let mut left = noise.eta;
            let fill_order: Vec<usize> = match target {
                Some(i) => vec![i],
                None => order,
            };
            for i in fill_order {
                if left <= 0.0 {
                    break;
                }
                let pts = points_by_mass_desc(&mass, leaves[i].points());
                left -= flip_labels(&mut mass, &pts, left);
            }
        }
    }

    let corrupted = LabeledDistribution::joint(n, mass)?;
    let achieved = clean.tv_distance(&corrupted)?;
    if (achieved - noise.eta).abs() > 1e-9 {
        return Err(Error::InvariantViolation {
            detail: format!(
                "corruption moved {achieved} total variation, wanted {}",
                noise.eta
            ),
        });
    }
    Ok(corrupted)
}

/// One leaf's share of the distance between two labeled distributions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeafTv {
    pub leaf: Restriction,
    /// Probability of reaching the leaf under the second distribution.
    pub reach: f64,
    /// TV distance between the leaf-conditional labeled distributions; 1 if
    /// exactly one side has mass there, 0 if neither does.
    pub tv: f64,
}

/// Splits the distance between `first` and `second` across the leaves of
/// `tree`: the reach-weighted sum of per-leaf conditional TVs is at most
/// twice the overall TV distance (checked before returning).
pub fn leaf_tv_decomposition(
    first: &LabeledDistribution,
    second: &LabeledDistribution,
    tree: &DecisionTree,
) -> Result<Vec<LeafTv>> {
    let n = first.n();
    if second.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: second.n(),
        });
    }
    let leaves = tree.leaves(&Restriction::all_free(n))?;
    let mut out = Vec::with_capacity(leaves.len());
    for leaf in leaves {
        let w1 = first.mass_of(&leaf)?;
        let w2 = second.mass_of(&leaf)?;
        let tv = if w1 == 0.0 && w2 == 0.0 {
            0.0
        } else if w1 == 0.0 || w2 == 0.0 {
            1.0
        } else {
            let mut l1 = 0.0;
            for x in leaf.points() {
                for y in [Sign::Minus, Sign::Plus] {
                    l1 += (first.joint_mass_at(x, y) / w1 - second.joint_mass_at(x, y) / w2).abs();
                }
            }
            l1 / 2.0
        };
        out.push(LeafTv {
            leaf,
            reach: w2,
            tv,
        });
    }
    let weighted: f64 = out.iter().map(|l| l.reach * l.tv).sum();
    let total = first.tv_distance(second)?;
    if weighted > 2.0 * total + 1e-12 {
        return Err(Error::InvariantViolation {
            detail: format!(
                "leaf-wise TV sum {weighted} exceeds twice the overall distance {total}"
            ),
        });
    }
    Ok(out)
}

/// Reach-weighted sum of per-leaf TVs from a decomposition.
pub fn weighted_leaf_tv(decomposition: &[LeafTv]) -> f64 {
    decomposition.iter().map(|l| l.reach * l.tv).sum()
}
