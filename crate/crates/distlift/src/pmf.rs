//! Dense probability mass functions over the cube, with exact arithmetic.
//!
//! All distances, conditionals, and compositions here are computed by full
//! enumeration of the `2^n` outcomes. Nothing in this module estimates;
//! sampling lives in [`crate::labeled`].

use serde::{Deserialize, Serialize};

use crate::cover::{validate_partition, SubcubePartition};
use crate::cube::{Point, Restriction, Sign, MAX_DIMENSION};
use crate::error::{Error, Result};
use crate::tree::DecisionTree;

/// Tolerance on "masses sum to one" at construction.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A probability distribution over `{+1,-1}^n` stored as a dense vector of
/// `2^n` masses, indexed by point bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensePmf")]
pub struct DensePmf {
    n: usize,
    mass: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDensePmf {
    n: usize,
    mass: Vec<f64>,
}

impl TryFrom<RawDensePmf> for DensePmf {
    type Error = Error;

    fn try_from(raw: RawDensePmf) -> Result<DensePmf> {
        DensePmf::new(raw.n, raw.mass)
    }
}

impl DensePmf {
    pub fn new(n: usize, mass: Vec<f64>) -> Result<DensePmf> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::InvalidParameter {
                detail: format!("pmf dimension must be 1..={MAX_DIMENSION}, got {n}"),
            });
        }
        if mass.len() != 1 << n {
            return Err(Error::InvalidMass {
                detail: format!("expected {} masses for n={n}, got {}", 1 << n, mass.len()),
            });
        }
        let mut total = 0.0;
        for (i, &m) in mass.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMass {
                    detail: format!("mass[{i}] = {m} is not a probability"),
                });
            }
            total += m;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMass {
                detail: format!("masses sum to {total}, not 1"),
            });
        }
        Ok(DensePmf { n, mass })
    }

    pub fn uniform(n: usize) -> DensePmf {
        let size = 1usize << n;
        DensePmf::new(n, vec![1.0 / size as f64; size]).expect("uniform masses are valid")
    }

    pub fn point_mass(n: usize, x: Point) -> Result<DensePmf> {
        let mut mass = vec![0.0; 1 << n];
        let idx = x.index();
        if idx >= mass.len() {
            return Err(Error::InvalidParameter {
                detail: format!("point {:#x} outside dimension {n}", x.0),
            });
        }
        mass[idx] = 1.0;
        DensePmf::new(n, mass)
    }

    /// Uniform over the subcube of points consistent with `rho`.
    pub fn uniform_on_restriction(rho: &Restriction) -> DensePmf {
        let size = 1u64 << rho.free_count();
        let mut mass = vec![0.0; 1 << rho.n()];
        let share = 1.0 / size as f64;
        for p in rho.points() {
            mass[p.index()] = share;
        }
        DensePmf {
            n: rho.n(),
            mass,
        }
    }

    /// Uniform over an explicit point set (duplicates rejected).
    pub fn uniform_on_points(n: usize, points: &[Point]) -> Result<DensePmf> {
        if points.is_empty() {
            return Err(Error::InvalidMass {
                detail: "cannot build a distribution on an empty point set".into(),
            });
        }
        let mut mass = vec![0.0; 1 << n];
        let share = 1.0 / points.len() as f64;
        for &p in points {
            if p.index() >= mass.len() {
                return Err(Error::InvalidParameter {
                    detail: format!("point {:#x} outside dimension {n}", p.0),
                });
            }
            if mass[p.index()] != 0.0 {
                return Err(Error::InvalidParameter {
                    detail: format!("duplicate point {}", p.encode(n)),
                });
            }
            mass[p.index()] = share;
        }
        DensePmf::new(n, mass)
    }

    /// A product distribution on the free coordinates of `rho`, with fixed
    /// coordinates pinned to their values. `plus_probability[i]` is the
    /// chance coordinate `i` equals `+1`; entries at fixed coordinates are
    /// ignored.
    pub fn product_on_restriction(rho: &Restriction, plus_probability: &[f64]) -> Result<DensePmf> {
        let n = rho.n();
        if plus_probability.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: plus_probability.len(),
            });
        }
        for (i, &p) in plus_probability.iter().enumerate() {
            if !rho.is_fixed(i) && !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter {
                    detail: format!("plus probability {p} at coordinate {i} is outside [0,1]"),
                });
            }
        }
        let mut mass = vec![0.0; 1 << n];
        for x in rho.points() {
            let mut m = 1.0;
            for i in 0..n {
                if rho.is_fixed(i) {
                    continue;
                }
                m *= match x.coord(i) {
                    Sign::Plus => plus_probability[i],
                    Sign::Minus => 1.0 - plus_probability[i],
                };
            }
            mass[x.index()] = m;
        }
        // Product weights over a full subcube sum to 1 up to rounding.
        DensePmf::new(n, mass)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_at(&self, x: Point) -> f64 {
        self.mass[x.index()]
    }

    /// Total mass of the subcube consistent with `rho`.
    pub fn mass_of(&self, rho: &Restriction) -> Result<f64> {
        if rho.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: rho.n(),
            });
        }
        Ok(rho.points().map(|p| self.mass[p.index()]).sum())
    }

    /// Points with strictly positive mass, ascending by index.
    pub fn support(&self) -> Vec<Point> {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(i, _)| Point::from_index(i))
            .collect()
    }

    /// Exact total variation distance: half the L1 distance between the
    /// mass vectors.
    pub fn tv_distance(&self, other: &DensePmf) -> Result<f64> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let l1: f64 = self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(l1 / 2.0)
    }

    /// Conditions on the subcube of `rho`. Conditioning on a zero-mass
    /// region is an error; tiny positive mass is legal.
    pub fn restrict(&self, rho: &Restriction) -> Result<DensePmf> {
        let z = self.mass_of(rho)?;
        if z == 0.0 {
            return Err(Error::ConditioningOnNull {
                pattern: rho.pattern(),
            });
        }
        let mut mass = vec![0.0; self.mass.len()];
        for p in rho.points() {
            mass[p.index()] = self.mass[p.index()] / z;
        }
        // Renormalization can leave the sum a hair off 1; constructing
        // through `new` re-checks it within tolerance.
        DensePmf::new(self.n, mass)
    }
}

fn check_weights(weights: &[f64], expected: usize, what: &str) -> Result<()> {
    if weights.len() != expected {
        return Err(Error::InvalidParameter {
            detail: format!("expected {expected} {what} weights, got {}", weights.len()),
        });
    }
    let mut total = 0.0;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidMass {
                detail: format!("{what} weight {w} is not a probability"),
            });
        }
        total += w;
    }
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidMass {
            detail: format!("{what} weights sum to {total}, not 1"),
        });
    }
    Ok(())
}

fn mix_components(
    n: usize,
    cells: &[Restriction],
    weights: &[f64],
    components: &[DensePmf],
    what: &str,
) -> Result<DensePmf> {
    check_weights(weights, cells.len(), what)?;
    if components.len() != cells.len() {
        return Err(Error::InvalidParameter {
            detail: format!(
                "expected {} component distributions, got {}",
                cells.len(),
                components.len()
            ),
        });
    }
    let mut mass = vec![0.0; 1 << n];
    for ((cell, &w), comp) in cells.iter().zip(weights).zip(components) {
        if comp.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: comp.n(),
            });
        }
        for (i, &m) in comp.mass.iter().enumerate() {
            if m > 0.0 && !cell.consistent(Point::from_index(i)) {
                return Err(Error::SupportLeakage {
                    pattern: cell.pattern(),
                });
            }
        }
        if w == 0.0 {
            continue;
        }
        for p in cell.points() {
            mass[p.index()] += w * comp.mass[p.index()];
        }
    }
    DensePmf::new(n, mass)
}

/// Mixes one distribution per leaf of a decision tree into a single
/// distribution: leaf `i` (minus-branch first order) receives weight
/// `leaf_weights[i]` and contributes `leaf_dists[i]`, which must be
/// supported inside that leaf's subcube.
///
/// Conditioning the result on a positive-weight leaf reproduces that leaf's
/// component exactly, because distinct leaves are disjoint.
pub fn compose_tree_dist(
    n: usize,
    tree: &DecisionTree,
    leaf_weights: &[f64],
    leaf_dists: &[DensePmf],
) -> Result<DensePmf> {
    let leaves = tree.leaves(&Restriction::all_free(n))?;
    mix_components(n, &leaves, leaf_weights, leaf_dists, "leaf")
}

/// Mixes one distribution per piece of a subcube partition, with the same
/// support and weight checks as [`compose_tree_dist`].
pub fn compose_partition_dist(
    partition: &SubcubePartition,
    piece_weights: &[f64],
    piece_dists: &[DensePmf],
) -> Result<DensePmf> {
    validate_partition(partition, partition.n(), None)?;
    mix_components(
        partition.n(),
        partition.pieces(),
        piece_weights,
        piece_dists,
        "piece",
    )
}

fn tribes_dimensions(width: usize, count: usize) -> Result<usize> {
    if width == 0 || count == 0 {
        return Err(Error::InvalidParameter {
            detail: "tribes width and count must be positive".into(),
        });
    }
    let n = width * count;
    if n > MAX_DIMENSION {
        return Err(Error::InvalidParameter {
            detail: format!("tribes over {n} coordinates exceeds the cap {MAX_DIMENSION}"),
        });
    }
    Ok(n)
}

/// Whether every block of `width` consecutive coordinates contains at least
/// one `+1`.
pub fn tribes_accepts(width: usize, count: usize, x: Point) -> bool {
    let block_mask = (1u32 << width) - 1;
    (0..count).all(|j| x.0 >> (j * width) & block_mask != 0)
}

/// The uniform distribution over the accepting inputs of the tribes
/// predicate with `count` blocks of `width` coordinates each (every block
/// must contain a `+1`).
pub fn tribes_support_dist(width: usize, count: usize) -> Result<DensePmf> {
    let n = tribes_dimensions(width, count)?;
    let accepting: Vec<Point> = (0..1u32 << n)
        .map(Point)
        .filter(|&x| tribes_accepts(width, count, x))
        .collect();
    DensePmf::uniform_on_points(n, &accepting)
}

/// An explicit subcube partition of the tribes accepting set: one piece per
/// choice of the first `+1` position within each block. The pieces are
/// pairwise disjoint, cover exactly the accepting set, and the conditional
/// of [`tribes_support_dist`] on each piece is uniform on that piece.
pub fn tribes_partition(width: usize, count: usize) -> Result<SubcubePartition> {
    let n = tribes_dimensions(width, count)?;
    let mut pieces = Vec::new();
    let mut positions = vec![0usize; count];
    loop {
        let mut rho = Restriction::all_free(n);
        for (j, &p) in positions.iter().enumerate() {
            for q in 0..p {
                rho = rho.refine(j * width + q, Sign::Minus)?;
            }
            rho = rho.refine(j * width + p, Sign::Plus)?;
        }
        pieces.push(rho);
        // Advance the mixed-radix counter of first-plus positions.
        let mut j = 0;
        loop {
            if j == count {
                return SubcubePartition::new(n, pieces);
            }
            positions[j] += 1;
            if positions[j] < width {
                break;
            }
            positions[j] = 0;
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_masses_are_exact() {
        let u = DensePmf::uniform(3);
        assert_eq!(u.mass_at(Point(5)), 0.125);
        assert_eq!(u.mass().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn invalid_masses_are_rejected() {
        assert!(DensePmf::new(2, vec![0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(DensePmf::new(2, vec![0.5, 0.5, -0.1, 0.1]).is_err());
        assert!(DensePmf::new(2, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn tv_distance_between_disjoint_uniforms_is_one() {
        let a = DensePmf::uniform_on_restriction(&Restriction::parse("+*").unwrap());
        let b = DensePmf::uniform_on_restriction(&Restriction::parse("-*").unwrap());
        assert_eq!(a.tv_distance(&b).unwrap(), 1.0);
        assert_eq!(a.tv_distance(&a).unwrap(), 0.0);
        let u = DensePmf::uniform(2);
        assert!((a.tv_distance(&u).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn restrict_renormalizes_and_rejects_null_regions() {
        let u = DensePmf::uniform(3);
        let rho = Restriction::parse("+**").unwrap();
        let cond = u.restrict(&rho).unwrap();
        assert_eq!(cond.mass_at(Point::decode("+++").unwrap().0), 0.25);
        assert_eq!(cond.mass_at(Point::decode("-++").unwrap().0), 0.0);

        let a = DensePmf::uniform_on_restriction(&Restriction::parse("+**").unwrap());
        let null = Restriction::parse("-**").unwrap();
        assert!(matches!(
            a.restrict(&null),
            Err(Error::ConditioningOnNull { .. })
        ));
    }

    #[test]
    fn composition_then_conditioning_recovers_each_leaf() {
        let tree = DecisionTree::complete_on(&[0]).unwrap();
        let left = Restriction::parse("-**").unwrap();
        let right = Restriction::parse("+**").unwrap();
        let left_dist = DensePmf::uniform_on_restriction(&left);
        let right_dist = DensePmf::product_on_restriction(&right, &[0.5, 0.25, 0.75]).unwrap();
        let mixed =
            compose_tree_dist(3, &tree, &[0.375, 0.625], &[left_dist.clone(), right_dist.clone()])
                .unwrap();

        assert!((mixed.mass_of(&left).unwrap() - 0.375).abs() < 1e-12);
        let back = mixed.restrict(&right).unwrap();
        assert!(back.tv_distance(&right_dist).unwrap() < 1e-12);
    }

    #[test]
    fn support_leakage_is_detected() {
        let tree = DecisionTree::complete_on(&[0]).unwrap();
        let left = Restriction::parse("-*").unwrap();
        let u = DensePmf::uniform(2); // leaks outside either leaf
        let err = compose_tree_dist(2, &tree, &[0.5, 0.5], &[u.clone(), u]).unwrap_err();
        assert!(matches!(err, Error::SupportLeakage { .. }));
        let _ = left;
    }

    #[test]
    fn product_distribution_matches_closed_form() {
        let rho = Restriction::parse("+**").unwrap();
        let p = DensePmf::product_on_restriction(&rho, &[0.0, 0.25, 0.75]).unwrap();
        let x = Point::decode("++-").unwrap().0;
        assert!((p.mass_at(x) - 0.25 * 0.25).abs() < 1e-15);
        assert_eq!(p.mass_at(Point::decode("-++").unwrap().0), 0.0);
    }

    #[test]
    fn single_block_tribes_support_counts_or_acceptors() {
        // One block of two coordinates: x0 or x1 must be +1.
        let d = tribes_support_dist(2, 1).unwrap();
        assert_eq!(d.support().len(), 3);
        for p in d.support() {
            assert!((d.mass_at(p) - 1.0 / 3.0).abs() < 1e-15);
        }
        // One block of one coordinate: only +1 accepts.
        let single = tribes_support_dist(1, 1).unwrap();
        assert_eq!(single.support(), vec![Point(1)]);
    }

    #[test]
    fn tribes_partition_covers_accepting_set_with_uniform_pieces() {
        let (width, count) = (2, 2);
        let d = tribes_support_dist(width, count).unwrap();
        let partition = tribes_partition(width, count).unwrap();
        assert_eq!(partition.len(), 4);
        validate_partition(&partition, partition.n(), Some(&d.support())).unwrap();
        // Every piece lies inside the accepting set and the conditional is
        // uniform on it.
        for piece in partition.pieces() {
            for x in piece.points() {
                assert!(tribes_accepts(width, count, x));
            }
            let cond = d.restrict(piece).unwrap();
            let uniform_piece = DensePmf::uniform_on_restriction(piece);
            assert!(cond.tv_distance(&uniform_piece).unwrap() < 1e-12);
        }
    }
}
