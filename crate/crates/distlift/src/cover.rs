//! Subcube partitions and ordered subcube lists.
//!
//! A [`SubcubePartition`] is a set of pairwise-disjoint restrictions; it is
//! the ground-truth shape of a planted piecewise distribution. A
//! [`SubcubeList`] is an ordered sequence of restrictions that may overlap:
//! routing takes the first consistent entry, so the effective cells are
//! disjoint even when the entries are not. Lists are what the greedy subcube
//! lifter produces.

use serde::{Deserialize, Serialize};

use crate::cube::{Point, Restriction};
use crate::error::{Error, Result};

/// Pairwise-disjoint subcubes over a common dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcubePartition {
    n: u8,
    pieces: Vec<Restriction>,
}

impl SubcubePartition {
    /// Builds a partition, checking dimensions and pairwise disjointness.
    pub fn new(n: usize, pieces: Vec<Restriction>) -> Result<SubcubePartition> {
        for p in &pieces {
            if p.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.n(),
                });
            }
        }
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                if !pieces[i].disjoint_from(&pieces[j]) {
                    return Err(Error::InvalidParameter {
                        detail: format!(
                            "pieces {} and {} overlap",
                            pieces[i].pattern(),
                            pieces[j].pattern()
                        ),
                    });
                }
            }
        }
        Ok(SubcubePartition {
            n: n as u8,
            pieces,
        })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn pieces(&self) -> &[Restriction] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn max_depth(&self) -> usize {
        self.pieces.iter().map(|p| p.depth()).max().unwrap_or(0)
    }

    /// Index of the piece containing `x`, if any. Disjointness makes it
    /// unique.
    pub fn route(&self, x: Point) -> Option<usize> {
        self.pieces.iter().position(|p| p.consistent(x))
    }
}

/// Validates a partition against a depth budget and, optionally, a set of
/// points that must all be covered.
pub fn validate_partition(
    partition: &SubcubePartition,
    max_depth: usize,
    must_cover: Option<&[Point]>,
) -> Result<()> {
    for p in partition.pieces() {
        if p.depth() > max_depth {
            return Err(Error::InvalidParameter {
                detail: format!(
                    "piece {} has depth {} > allowed {max_depth}",
                    p.pattern(),
                    p.depth()
                ),
            });
        }
    }
    if let Some(points) = must_cover {
        for &x in points {
            if partition.route(x).is_none() {
                return Err(Error::InvalidParameter {
                    detail: format!(
                        "point {} is not covered by any piece",
                        x.encode(partition.n())
                    ),
                });
            }
        }
    }
    Ok(())
}

/// An ordered list of subcubes with first-match routing. Entries may
/// overlap; later entries only see points missed by earlier ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcubeList {
    n: u8,
    entries: Vec<Restriction>,
}

impl SubcubeList {
    pub fn new(n: usize, entries: Vec<Restriction>) -> Result<SubcubeList> {
        for e in &entries {
            if e.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: e.n(),
                });
            }
        }
        Ok(SubcubeList {
            n: n as u8,
            entries,
        })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn entries(&self) -> &[Restriction] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First entry consistent with `x`, or `None` (the list abstains).
    pub fn route(&self, x: Point) -> Option<(usize, &Restriction)> {
        self.entries
            .iter()
            .enumerate()
            .find(|(_, e)| e.consistent(x))
    }
}

impl From<&SubcubePartition> for SubcubeList {
    /// Views a partition as a list; disjointness makes the entry order
    /// irrelevant for routing.
    fn from(p: &SubcubePartition) -> SubcubeList {
        SubcubeList {
            n: p.n,
            entries: p.pieces.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlapping_pieces_are_rejected() {
        let a = Restriction::parse("+**").unwrap();
        let b = Restriction::parse("*+*").unwrap();
        assert!(SubcubePartition::new(3, vec![a, b]).is_err());
        let c = Restriction::parse("-**").unwrap();
        assert!(SubcubePartition::new(3, vec![a, c]).is_ok());
    }

    #[test]
    fn partition_routing_is_unique() {
        let pieces = vec![
            Restriction::parse("+*").unwrap(),
            Restriction::parse("-+").unwrap(),
        ];
        let p = SubcubePartition::new(2, pieces).unwrap();
        assert_eq!(p.route(Point::decode("++").unwrap().0), Some(0));
        assert_eq!(p.route(Point::decode("-+").unwrap().0), Some(1));
        assert_eq!(p.route(Point::decode("--").unwrap().0), None);
    }

    #[test]
    fn validate_checks_depth_and_coverage() {
        let pieces = vec![
            Restriction::parse("+*").unwrap(),
            Restriction::parse("-+").unwrap(),
        ];
        let p = SubcubePartition::new(2, pieces).unwrap();
        assert!(validate_partition(&p, 2, None).is_ok());
        assert!(validate_partition(&p, 1, None).is_err());
        let covered = [Point::decode("++").unwrap().0];
        assert!(validate_partition(&p, 2, Some(&covered)).is_ok());
        let uncovered = [Point::decode("--").unwrap().0];
        assert!(validate_partition(&p, 2, Some(&uncovered)).is_err());
    }

    #[test]
    fn list_routing_takes_the_first_match() {
        let entries = vec![
            Restriction::parse("+*").unwrap(),
            Restriction::parse("**").unwrap(),
        ];
        let l = SubcubeList::new(2, entries).unwrap();
        assert_eq!(l.route(Point::decode("++").unwrap().0).unwrap().0, 0);
        assert_eq!(l.route(Point::decode("-+").unwrap().0).unwrap().0, 1);
    }
}
