//! Evidence that shallow subcube structure cannot approximate a random
//! half of the cube.
//!
//! The positive tools above learn any distribution that decomposes into few
//! shallow subcubes. This module provides the matching negative side: the
//! uniform distribution over a uniformly random half of the cube is, with
//! high probability, at total variation distance at least 1/3 from every
//! distribution that a shallow tree of subcubes can express, yet small
//! samples from it are indistinguishable from uniform. Both facts are
//! checkable by exact integer counting, and this module implements the
//! checks plus small sampling experiments around them.

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::cube::{enumerate_restrictions, restriction_count, Point, Restriction, MAX_DIMENSION};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Upper bound on the number of restrictions a concentration sweep will
/// visit.
pub const SWEEP_RESTRICTION_CAP: u128 = 100_000_000;

/// A set of exactly half the points of the cube, with membership kept in a
/// bitset for O(1) queries. The member order is the order points were drawn
/// or supplied in.
#[derive(Clone, Debug)]
pub struct HalfSupport {
    n: u8,
    members: Vec<Point>,
    bits: Vec<u64>,
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 1 || n > MAX_DIMENSION {
        return Err(Error::InvalidParameter {
            detail: format!("dimension {n} is outside 1..={MAX_DIMENSION}"),
        });
    }
    Ok(())
}

impl HalfSupport {
    /// Draws a uniformly random size-2^(n-1) subset by running the first
    /// half of a Fisher-Yates shuffle of all cube points.
    pub fn draw(n: usize, seed: u64) -> Result<HalfSupport> {
        check_dimension(n)?;
        let full = 1usize << n;
        let mut rng = rng_from_seed(seed);
        let mut pool: Vec<u32> = (0..full as u32).collect();
        let mut members = Vec::with_capacity(full / 2);
        for j in 0..full / 2 {
            let r = rng.gen_range(j..full);
            pool.swap(j, r);
            members.push(Point(pool[j]));
        }
        Ok(HalfSupport::assemble(n, members))
    }

    /// Wraps an explicit list of points, which must be distinct and number
    /// exactly 2^(n-1).
    pub fn from_points(n: usize, points: Vec<Point>) -> Result<HalfSupport> {
        check_dimension(n)?;
        let full = 1usize << n;
        if points.len() != full / 2 {
            return Err(Error::InvalidParameter {
                detail: format!(
                    "a half support over {n} coordinates has {} points, got {}",
                    full / 2,
                    points.len()
                ),
            });
        }
        let mut seen = vec![false; full];
        for &x in &points {
            if x.index() >= full {
                return Err(Error::InvalidParameter {
                    detail: format!("point index {} is outside the {n}-cube", x.index()),
                });
            }
            if seen[x.index()] {
                return Err(Error::InvalidParameter {
                    detail: format!("duplicate point at index {}", x.index()),
                });
            }
            seen[x.index()] = true;
        }
        Ok(HalfSupport::assemble(n, points))
    }

    fn assemble(n: usize, members: Vec<Point>) -> HalfSupport {
        let words = ((1usize << n) + 63) / 64;
        let mut bits = vec![0u64; words];
        for &x in &members {
            bits[x.index() >> 6] |= 1u64 << (x.index() & 63);
        }
        HalfSupport {
            n: n as u8,
            members,
            bits,
        }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Point] {
        &self.members
    }

    pub fn contains(&self, x: Point) -> bool {
        let i = x.index();
        i < 1usize << self.n && self.bits[i >> 6] >> (i & 63) & 1 == 1
    }

    /// How many members fall inside the subcube of `rho`.
    pub fn count_of(&self, rho: &Restriction) -> Result<u64> {
        if rho.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: rho.n(),
            });
        }
        Ok(rho.points().filter(|&x| self.contains(x)).count() as u64)
    }
}

/// The deepest tree the half-support argument rules out at dimension `n`:
/// n minus the smallest t with 2^t at least n cubed, floored at zero.
/// Computed entirely in integers.
pub fn default_decomposition_depth(n: usize) -> usize {
    let cube = (n as u128).pow(3);
    let mut t = 0usize;
    while (1u128 << t) < cube {
        t += 1;
    }
    n.saturating_sub(t)
}

/// Outcome of sweeping every restriction of depth at most `d` over a half
/// support. A restriction of depth k is in the good band when its member
/// count, tripled, lies in [2^(n-k), 2^(n-k+1)]; everything outside is a
/// violation. The per-restriction counts are retained only for small
/// sweeps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub d: usize,
    pub total_restrictions: u64,
    pub counts: Option<Vec<(Restriction, u64)>>,
    pub violations: Vec<Restriction>,
}

pub fn count_concentration_check(support: &HalfSupport, d: usize) -> Result<ConcentrationReport> {
    let n = support.n();
    if d > n {
        return Err(Error::InvalidParameter {
            detail: format!("sweep depth {d} exceeds dimension {n}"),
        });
    }
    let total = restriction_count(n, d);
    if total > SWEEP_RESTRICTION_CAP {
        return Err(Error::InvalidParameter {
            detail: format!(
                "sweeping {total} restrictions exceeds the cap {SWEEP_RESTRICTION_CAP}"
            ),
        });
    }
    let keep_counts = total <= 10_000;
    let mut counts = keep_counts.then(Vec::new);
    let mut violations = Vec::new();
    for rho in enumerate_restrictions(n, d) {
        let c = support.count_of(&rho)?;
        let cell = 1u64 << (n - rho.depth());
        if 3 * c < cell || 3 * c > 2 * cell {
            violations.push(rho.clone());
        }
        if let Some(counts) = counts.as_mut() {
            counts.push((rho, c));
        }
    }
    Ok(ConcentrationReport {
        n,
        d,
        total_restrictions: total as u64,
        counts,
        violations,
    })
}

/// A clean sweep certifies that the uniform distribution on the support is
/// at total variation distance at least 1/3 from every mixture expressible
/// by a depth-d tree of uniform subcube pieces: each piece must leave at
/// least a third of its own cell outside the support, and that mass is
/// unmatched.
pub fn tv_lowerbound_certificate(report: &ConcentrationReport) -> Option<f64> {
    report.violations.is_empty().then_some(1.0 / 3.0)
}

/// Exact distance floor from brute force over every complete depth-d tree.
///
/// For a fixed tree, the best subcube mixture it supports disagrees with
/// the uniform-on-support distribution on at least min(c, N - c) points per
/// leaf, where the leaf holds c members out of N points. `disagreement` is
/// that sum minimized over all trees, so the true total variation distance
/// to any such mixture is at least `disagreement / 2^n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TvFloor {
    pub disagreement: u64,
    pub total_points: u64,
    pub tv_floor: f64,
    /// Whether the floor already clears 1/3, i.e. 3·disagreement >= 2^n.
    pub certified: bool,
}

pub fn decomposition_tv_floor(support: &HalfSupport, d: usize) -> Result<TvFloor> {
    let n = support.n();
    if n > 8 {
        return Err(Error::InvalidParameter {
            detail: format!("exhaustive tree sweep is capped at 8 coordinates, got {n}"),
        });
    }
    if d > n {
        return Err(Error::InvalidParameter {
            detail: format!("tree depth {d} exceeds dimension {n}"),
        });
    }
    let mut memo: std::collections::BTreeMap<Restriction, u64> = std::collections::BTreeMap::new();
    fn go(
        support: &HalfSupport,
        rho: &Restriction,
        depth_left: usize,
        memo: &mut std::collections::BTreeMap<Restriction, u64>,
    ) -> u64 {
        if depth_left == 0 {
            let cell = 1u64 << rho.free_count();
            let c = rho.points().filter(|&x| support.contains(x)).count() as u64;
            return c.min(cell - c);
        }
        if let Some(&v) = memo.get(rho) {
            return v;
        }
        let mut best = u64::MAX;
        for i in rho.free_coords().collect::<Vec<_>>() {
            let minus = rho.refine(i, crate::cube::Sign::Minus).expect("free coordinate");
            let plus = rho.refine(i, crate::cube::Sign::Plus).expect("free coordinate");
            let sum =
                go(support, &minus, depth_left - 1, memo) + go(support, &plus, depth_left - 1, memo);
            best = best.min(sum);
        }
        memo.insert(rho.clone(), best);
        best
    }
    let disagreement = go(support, &Restriction::all_free(n), d, &mut memo);
    let total_points = 1u64 << n;
    Ok(TvFloor {
        disagreement,
        total_points,
        tv_floor: disagreement as f64 / total_points as f64,
        certified: 3 * disagreement >= total_points,
    })
}

/// A statistical test trying to tell samples of a half-support's uniform
/// distribution apart from fully uniform samples.
pub trait Distinguisher {
    fn name(&self) -> String;
    /// True when the sample looks non-uniform to this test.
    fn flags(&self, n: usize, sample: &[Point]) -> bool;
}

/// Pearson chi-square on the joint distribution of the lowest `bits`
/// coordinates. The default threshold 7.815 is the 0.05 critical value at
/// three degrees of freedom, matching `bits = 2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChiSquareFirstBits {
    pub bits: usize,
    pub threshold: f64,
}

impl Default for ChiSquareFirstBits {
    fn default() -> Self {
        ChiSquareFirstBits {
            bits: 2,
            threshold: 7.815,
        }
    }
}

impl ChiSquareFirstBits {
    pub fn statistic(&self, sample: &[Point]) -> f64 {
        let buckets = 1usize << self.bits;
        let mut counts = vec![0u64; buckets];
        for &x in sample {
            counts[x.index() & (buckets - 1)] += 1;
        }
        let expected = sample.len() as f64 / buckets as f64;
        counts
            .iter()
            .map(|&c| {
                let diff = c as f64 - expected;
                diff * diff / expected
            })
            .sum()
    }
}

impl Distinguisher for ChiSquareFirstBits {
    fn name(&self) -> String {
        format!("chi-square-first-{}-bits", self.bits)
    }

    fn flags(&self, _n: usize, sample: &[Point]) -> bool {
        !sample.is_empty() && self.statistic(sample) > self.threshold
    }
}

/// The built-in distinguishers an experiment can be run against.
pub fn default_distinguishers() -> Vec<Box<dyn Distinguisher>> {
    vec![Box::new(ChiSquareFirstBits::default())]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistinguisherReport {
    pub name: String,
    pub half_flag_rate: f64,
    pub uniform_flag_rate: f64,
    /// Absolute difference of the two flag rates.
    pub advantage: f64,
}

/// Collision statistics of small samples drawn from random half supports
/// versus the full uniform distribution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollisionReport {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    /// Fraction of half-support trials with at least one repeated point.
    pub half_collision_rate: f64,
    pub uniform_collision_rate: f64,
    /// First-order birthday estimates: C(m,2)/2^(n-1) and C(m,2)/2^n.
    pub expected_half_rate: f64,
    pub expected_uniform_rate: f64,
    pub distinguisher: Option<DistinguisherReport>,
}

/// Draws `m` points per trial from the uniform distribution over a freshly
/// random half support, and `m` points from the uniform cube, recording how
/// often each sample contains a collision and how often the optional
/// distinguisher flags each side.
///
/// The half support is never materialized. A sample of it is simulated
/// lazily: member slots are drawn as independent indices in [0, 2^(n-1)),
/// which fixes the collision pattern, and each distinct slot is then given
/// a fresh uniform point distinct from the others, which is exactly the
/// distribution of a random half support read at those slots.
pub fn collision_experiment(
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
    distinguisher: Option<&dyn Distinguisher>,
) -> Result<CollisionReport> {
    check_dimension(n)?;
    if n < 2 {
        return Err(Error::InvalidParameter {
            detail: "collision experiment needs at least 2 coordinates".into(),
        });
    }
    if m == 0 || trials == 0 {
        return Err(Error::InvalidParameter {
            detail: "sample size and trial count must be positive".into(),
        });
    }
    let half = 1u64 << (n - 1);
    let full = 1u64 << n;
    let mut half_collisions = 0usize;
    let mut uniform_collisions = 0usize;
    let mut half_flags = 0usize;
    let mut uniform_flags = 0usize;
    let mut points = Vec::with_capacity(m);

    for t in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, "collision-half", t as u64));
        let mut assigned: Vec<(u64, Point)> = Vec::with_capacity(m);
        let mut collided = false;
        points.clear();
        for _ in 0..m {
            let slot = rng.gen_range(0..half);
            if let Some(&(_, x)) = assigned.iter().find(|&&(s, _)| s == slot) {
                collided = true;
                points.push(x);
                continue;
            }
            let x = loop {
                let v = Point(rng.gen_range(0..full) as u32);
                if !assigned.iter().any(|&(_, y)| y == v) {
                    break v;
                }
            };
            assigned.push((slot, x));
            points.push(x);
        }
        half_collisions += collided as usize;
        if let Some(d) = distinguisher {
            half_flags += d.flags(n, &points) as usize;
        }

        let mut rng = rng_from_seed(derive_seed(seed, "collision-uniform", t as u64));
        points.clear();
        let mut collided = false;
        for _ in 0..m {
            let v = Point(rng.gen_range(0..full) as u32);
            collided |= points.contains(&v);
            points.push(v);
        }
        uniform_collisions += collided as usize;
        if let Some(d) = distinguisher {
            uniform_flags += d.flags(n, &points) as usize;
        }
    }

    let pairs = (m * (m - 1) / 2) as f64;
    let report = distinguisher.map(|d| {
        let half_rate = half_flags as f64 / trials as f64;
        let uniform_rate = uniform_flags as f64 / trials as f64;
        DistinguisherReport {
            name: d.name(),
            half_flag_rate: half_rate,
            uniform_flag_rate: uniform_rate,
            advantage: (half_rate - uniform_rate).abs(),
        }
    });
    Ok(CollisionReport {
        n,
        m,
        trials,
        half_collision_rate: half_collisions as f64 / trials as f64,
        uniform_collision_rate: uniform_collisions as f64 / trials as f64,
        expected_half_rate: pairs / half as f64,
        expected_uniform_rate: pairs / full as f64,
        distinguisher: report,
    })
}

/// Empirical check that sampling without replacement concentrates at least
/// as sharply as the with-replacement tail bound 2·exp(-2ε²k/range²).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HoeffdingReport {
    pub population_mean: f64,
    pub n_draws: usize,
    pub eps: f64,
    pub trials: usize,
    /// Fraction of without-replacement trials whose sample mean strays
    /// from the population mean by more than ε.
    pub wor_exceed_rate: f64,
    pub wr_exceed_rate: f64,
    pub bound: f64,
}

pub fn hoeffding_wor_check(
    values: &[f64],
    n_draws: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<HoeffdingReport> {
    if values.is_empty() || n_draws == 0 || n_draws > values.len() {
        return Err(Error::InvalidParameter {
            detail: format!(
                "need 1 <= draws <= population, got {} draws from {}",
                n_draws,
                values.len()
            ),
        });
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter {
            detail: "population values must be finite".into(),
        });
    }
    if !(eps > 0.0) || trials == 0 {
        return Err(Error::InvalidParameter {
            detail: "deviation and trial count must be positive".into(),
        });
    }
    let population_mean = values.iter().sum::<f64>() / values.len() as f64;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    let bound = 2.0 * (-2.0 * eps * eps * n_draws as f64 / (range * range)).exp();

    let mut wor_exceed = 0usize;
    let mut wr_exceed = 0usize;
    for t in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, "wor-trial", t as u64));
        let mut idx: Vec<usize> = (0..values.len()).collect();
        let mut sum = 0.0;
        for j in 0..n_draws {
            let r = rng.gen_range(j..idx.len());
            idx.swap(j, r);
            sum += values[idx[j]];
        }
        if (sum / n_draws as f64 - population_mean).abs() > eps {
            wor_exceed += 1;
        }

        let mut rng = rng_from_seed(derive_seed(seed, "wr-trial", t as u64));
        let sum: f64 = (0..n_draws)
            .map(|_| values[rng.gen_range(0..values.len())])
            .sum();
        if (sum / n_draws as f64 - population_mean).abs() > eps {
            wr_exceed += 1;
        }
    }
    Ok(HoeffdingReport {
        population_mean,
        n_draws,
        eps,
        trials,
        wor_exceed_rate: wor_exceed as f64 / trials as f64,
        wr_exceed_rate: wr_exceed as f64 / trials as f64,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Sign;

    fn parity_half(n: usize) -> HalfSupport {
        let points = (0..1u32 << n)
            .filter(|v| v.count_ones() % 2 == 0)
            .map(Point)
            .collect();
        HalfSupport::from_points(n, points).unwrap()
    }

    #[test]
    fn drawing_is_deterministic_and_yields_distinct_points() {
        let a = HalfSupport::draw(6, 9).unwrap();
        let b = HalfSupport::draw(6, 9).unwrap();
        assert_eq!(a.members(), b.members());
        assert_eq!(a.len(), 32);
        let mut sorted: Vec<u32> = a.members().iter().map(|p| p.0).collect();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 32);
        let c = HalfSupport::draw(6, 10).unwrap();
        assert_ne!(a.members(), c.members());
    }

    #[test]
    fn membership_and_subcube_counts_agree_with_the_member_list() {
        let s = HalfSupport::draw(5, 3).unwrap();
        let inside = s.members().iter().filter(|x| s.contains(**x)).count();
        assert_eq!(inside, s.len());
        assert_eq!(s.count_of(&Restriction::all_free(5)).unwrap(), 16);
        let rho = Restriction::all_free(5).refine(2, Sign::Plus).unwrap();
        let by_hand = s
            .members()
            .iter()
            .filter(|x| rho.consistent(**x))
            .count() as u64;
        assert_eq!(s.count_of(&rho).unwrap(), by_hand);
    }

    #[test]
    fn from_points_rejects_wrong_sizes_and_duplicates() {
        assert!(HalfSupport::from_points(3, vec![Point(0)]).is_err());
        assert!(HalfSupport::from_points(
            3,
            vec![Point(0), Point(0), Point(1), Point(2)]
        )
        .is_err());
    }

    #[test]
    fn default_depth_is_integer_exact() {
        assert_eq!(default_decomposition_depth(8), 0);
        assert_eq!(default_decomposition_depth(10), 0);
        assert_eq!(default_decomposition_depth(12), 1);
        assert_eq!(default_decomposition_depth(16), 4);
    }

    #[test]
    fn parity_support_passes_the_sweep_and_certifies() {
        let s = parity_half(4);
        let report = count_concentration_check(&s, 1).unwrap();
        assert_eq!(report.total_restrictions, 9);
        assert!(report.violations.is_empty());
        assert!(report.counts.is_some());
        assert_eq!(tv_lowerbound_certificate(&report), Some(1.0 / 3.0));
        // Any depth-2 subcube still holds exactly half its four points.
        let floor = decomposition_tv_floor(&s, 2).unwrap();
        assert_eq!(floor.disagreement, 8);
        assert!(floor.certified);
        assert!((floor.tv_floor - 0.5).abs() < 1e-12);
    }

    #[test]
    fn a_single_subcube_support_is_decomposable_and_flagged() {
        let points = (0..8u32).filter(|v| v >> 2 & 1 == 1).map(Point).collect();
        let s = HalfSupport::from_points(3, points).unwrap();
        let report = count_concentration_check(&s, 1).unwrap();
        assert!(!report.violations.is_empty());
        assert_eq!(tv_lowerbound_certificate(&report), None);
        // Splitting on the support's own coordinate reproduces it exactly.
        let floor = decomposition_tv_floor(&s, 1).unwrap();
        assert_eq!(floor.disagreement, 0);
        assert!(!floor.certified);
    }

    #[test]
    fn tree_sweep_minimizes_over_coordinates() {
        // Support fixes coordinate 0 negative; splitting there scores zero,
        // splitting on coordinate 1 scores two.
        let s = HalfSupport::from_points(2, vec![Point(0b00), Point(0b10)]).unwrap();
        let floor = decomposition_tv_floor(&s, 1).unwrap();
        assert_eq!(floor.disagreement, 0);
    }

    #[test]
    fn random_supports_rarely_violate_a_shallow_sweep() {
        let mut bad_seeds = 0;
        for seed in 0..40 {
            let s = HalfSupport::draw(10, seed).unwrap();
            let d = default_decomposition_depth(10);
            let report = count_concentration_check(&s, d).unwrap();
            bad_seeds += usize::from(!report.violations.is_empty());
        }
        assert_eq!(bad_seeds, 0);
    }

    #[test]
    fn collision_rates_track_the_birthday_estimates() {
        let chi = ChiSquareFirstBits::default();
        let report = collision_experiment(10, 6, 4000, 11, Some(&chi)).unwrap();
        assert!((report.expected_half_rate - 15.0 / 512.0).abs() < 1e-12);
        assert!((report.expected_uniform_rate - 15.0 / 1024.0).abs() < 1e-12);
        let sigma = (report.expected_half_rate / 4000.0f64).sqrt();
        assert!(report.half_collision_rate <= report.expected_half_rate + 5.0 * sigma);
        assert!(report.uniform_collision_rate <= report.expected_uniform_rate + 5.0 * sigma);
        let d = report.distinguisher.unwrap();
        // A level-0.05 test fires at roughly its level on both sides.
        assert!(d.half_flag_rate <= 0.15);
        assert!(d.uniform_flag_rate <= 0.15);
    }

    #[test]
    fn collision_experiment_is_deterministic() {
        let a = collision_experiment(8, 4, 500, 7, None).unwrap();
        let b = collision_experiment(8, 4, 500, 7, None).unwrap();
        assert_eq!(a.half_collision_rate, b.half_collision_rate);
        assert_eq!(a.uniform_collision_rate, b.uniform_collision_rate);
    }

    #[test]
    fn without_replacement_tails_stay_under_the_bound() {
        let values: Vec<f64> = (0..100).map(|i| f64::from(u8::from(i % 2 == 0))).collect();
        let report = hoeffding_wor_check(&values, 30, 0.2, 400, 5).unwrap();
        assert!(report.wor_exceed_rate <= report.bound);
        assert!((report.population_mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chi_square_flags_a_constant_low_bit_sample() {
        let chi = ChiSquareFirstBits::default();
        let sample: Vec<Point> = (0..40).map(|i| Point(i << 2)).collect();
        assert!(chi.flags(8, &sample));
        let spread: Vec<Point> = (0..40).map(Point).collect();
        assert!(!chi.flags(8, &spread));
    }
}
