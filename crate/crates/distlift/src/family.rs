//! Families of base distributions that are closed under conditioning on a
//! subcube.
//!
//! A base learner declares which family it is guaranteed on. The lifters
//! never inspect the family themselves; it exists so tests can verify the
//! closure property the lifting argument relies on: conditioning a member on
//! any positive-mass restriction lands back in the family.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cube::{Point, Restriction, Sign};
use crate::error::{Error, Result};
use crate::pmf::DensePmf;

/// Pointwise tolerance for membership checks.
const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseFamily {
    /// Uniform over the points of a single subcube.
    UniformOnSubcube,
    /// Independent coordinates within a single subcube: free coordinates
    /// carry arbitrary biases, fixed ones are pinned.
    ProductOnSubcube,
}

/// The smallest restriction whose subcube contains the support: a
/// coordinate is fixed exactly when every support point agrees on it.
pub fn smallest_enclosing_restriction(dist: &DensePmf) -> Result<Restriction> {
    let support = dist.support();
    let first = *support.first().ok_or_else(|| Error::InvalidMass {
        detail: "distribution has empty support".into(),
    })?;
    let mut rho = Restriction::all_free(dist.n());
    for i in 0..dist.n() {
        let v = first.coord(i);
        if support.iter().all(|x| x.coord(i) == v) {
            rho = rho.refine(i, v)?;
        }
    }
    Ok(rho)
}

/// The smallest restriction enclosing a point set, ignoring masses.
pub fn enclosing_restriction_of_points(n: usize, points: &[Point]) -> Result<Restriction> {
    let first = *points.first().ok_or_else(|| Error::InvalidParameter {
        detail: "cannot enclose an empty point set".into(),
    })?;
    let mut rho = Restriction::all_free(n);
    for i in 0..n {
        let v = first.coord(i);
        if points.iter().all(|x| x.coord(i) == v) {
            rho = rho.refine(i, v)?;
        }
    }
    Ok(rho)
}

impl BaseFamily {
    pub fn name(&self) -> &'static str {
        match self {
            BaseFamily::UniformOnSubcube => "uniform-on-subcube",
            BaseFamily::ProductOnSubcube => "product-on-subcube",
        }
    }

    pub fn parse(name: &str) -> Result<BaseFamily> {
        match name {
            "uniform-on-subcube" => Ok(BaseFamily::UniformOnSubcube),
            "product-on-subcube" => Ok(BaseFamily::ProductOnSubcube),
            other => Err(Error::Parse {
                detail: format!("unknown distribution family {other:?}"),
            }),
        }
    }

    /// Exact membership check by full enumeration of the enclosing subcube.
    pub fn contains(&self, dist: &DensePmf) -> bool {
        let Ok(rho) = smallest_enclosing_restriction(dist) else {
            return false;
        };
        match self {
            BaseFamily::UniformOnSubcube => {
                let share = 1.0 / (1u64 << rho.free_count()) as f64;
                rho.points()
                    .all(|x| (dist.mass_at(x) - share).abs() <= MEMBERSHIP_TOLERANCE)
            }
            BaseFamily::ProductOnSubcube => {
                // Free-coordinate biases are read off the marginals; the
                // distribution is in the family iff it factorizes exactly
                // into those biases on the subcube.
                let mut plus = vec![0.0; dist.n()];
                for x in rho.points() {
                    let m = dist.mass_at(x);
                    for i in 0..dist.n() {
                        if !rho.is_fixed(i) && x.coord(i) == Sign::Plus {
                            plus[i] += m;
                        }
                    }
                }
                rho.points().all(|x| {
                    let mut expect = 1.0;
                    for i in 0..dist.n() {
                        if rho.is_fixed(i) {
                            continue;
                        }
                        expect *= match x.coord(i) {
                            Sign::Plus => plus[i],
                            Sign::Minus => 1.0 - plus[i],
                        };
                    }
                    (dist.mass_at(x) - expect).abs() <= MEMBERSHIP_TOLERANCE
                })
            }
        }
    }
}

impl fmt::Display for BaseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_membership() {
        let fam = BaseFamily::UniformOnSubcube;
        assert!(fam.contains(&DensePmf::uniform(3)));
        let rho = Restriction::parse("+*-*").unwrap();
        assert!(fam.contains(&DensePmf::uniform_on_restriction(&rho)));
        // Uniform over a non-subcube support is out.
        let three = DensePmf::uniform_on_points(2, &[Point(0), Point(1), Point(2)]).unwrap();
        assert!(!fam.contains(&three));
    }

    #[test]
    fn product_membership_includes_uniform_and_excludes_mixtures() {
        let fam = BaseFamily::ProductOnSubcube;
        assert!(fam.contains(&DensePmf::uniform(3)));
        let rho = Restriction::parse("*+*").unwrap();
        let p = DensePmf::product_on_restriction(&rho, &[0.3, 0.5, 0.9]).unwrap();
        assert!(fam.contains(&p));
        // An even mixture of two point masses on antipodal points does not
        // factorize.
        let mix = DensePmf::uniform_on_points(2, &[Point(0), Point(3)]).unwrap();
        assert!(!fam.contains(&mix));
    }

    #[test]
    fn enclosing_restriction_fixes_agreeing_coordinates() {
        let d = DensePmf::uniform_on_points(3, &[Point::decode("+-+").unwrap().0, Point::decode("+++").unwrap().0])
            .unwrap();
        let rho = smallest_enclosing_restriction(&d).unwrap();
        assert_eq!(rho.pattern(), "+*+");
    }

    #[test]
    fn closure_under_conditioning_spot_checks() {
        let p = DensePmf::product_on_restriction(&Restriction::all_free(3), &[0.2, 0.5, 0.8])
            .unwrap();
        for pat in ["+**", "*-*", "+*-"] {
            let rho = Restriction::parse(pat).unwrap();
            let cond = p.restrict(&rho).unwrap();
            assert!(BaseFamily::ProductOnSubcube.contains(&cond), "failed at {pat}");
        }
        let u = DensePmf::uniform(3);
        for pat in ["-**", "*+-"] {
            let rho = Restriction::parse(pat).unwrap();
            assert!(BaseFamily::UniformOnSubcube.contains(&u.restrict(&rho).unwrap()));
        }
    }
}
