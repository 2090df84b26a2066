//! Binary decision trees over cube coordinates.
//!
//! Trees here carry no labels: they carve the cube into the subcubes at
//! their leaves. Walking from a root restriction to a leaf and fixing the
//! split coordinate at each internal node yields the leaf's restriction; a
//! hypothesis map then assigns a predictor to each leaf (see
//! [`crate::hypothesis`]).

use serde::{Deserialize, Serialize};

use crate::cube::{Point, Restriction, Sign};
use crate::error::{Error, Result};

/// A decision tree shape. `Split` sends points with the coordinate at `-1`
/// to `minus` and points with it at `+1` to `plus`. No coordinate may repeat
/// along a root-to-leaf path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionTree {
    Leaf,
    Split {
        index: usize,
        minus: Box<DecisionTree>,
        plus: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn leaf() -> DecisionTree {
        DecisionTree::Leaf
    }

    pub fn split(index: usize, minus: DecisionTree, plus: DecisionTree) -> DecisionTree {
        DecisionTree::Split {
            index,
            minus: Box::new(minus),
            plus: Box::new(plus),
        }
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf => 0,
            DecisionTree::Split { minus, plus, .. } => 1 + minus.depth().max(plus.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            DecisionTree::Leaf => 1,
            DecisionTree::Split { minus, plus, .. } => minus.leaf_count() + plus.leaf_count(),
        }
    }

    /// Whether every leaf sits at the same depth. A complete depth-`d` tree
    /// has exactly `2^d` leaves.
    pub fn is_complete(&self) -> bool {
        fn check(t: &DecisionTree, depth: usize, expected: usize) -> bool {
            match t {
                DecisionTree::Leaf => depth == expected,
                DecisionTree::Split { minus, plus, .. } => {
                    check(minus, depth + 1, expected) && check(plus, depth + 1, expected)
                }
            }
        }
        check(self, 0, self.depth())
    }

    /// Checks split indices are in range and no path fixes a coordinate
    /// twice.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.leaves(&Restriction::all_free(n)).map(|_| ())
    }

    /// Leaf restrictions reached from `root`, minus-branch first. Fails if a
    /// path revisits a coordinate already fixed (in the tree or in `root`).
    pub fn leaves(&self, root: &Restriction) -> Result<Vec<Restriction>> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.collect_leaves(root, &mut out)?;
        Ok(out)
    }

    fn collect_leaves(&self, at: &Restriction, out: &mut Vec<Restriction>) -> Result<()> {
        match self {
            DecisionTree::Leaf => {
                out.push(*at);
                Ok(())
            }
            DecisionTree::Split { index, minus, plus } => {
                minus.collect_leaves(&at.refine(*index, Sign::Minus)?, out)?;
                plus.collect_leaves(&at.refine(*index, Sign::Plus)?, out)
            }
        }
    }

    /// The leaf restriction that `x` falls into, starting from `root`.
    pub fn route(&self, root: &Restriction, x: Point) -> Result<Restriction> {
        match self {
            DecisionTree::Leaf => Ok(*root),
            DecisionTree::Split { index, minus, plus } => {
                let side = x.coord(*index);
                let next = root.refine(*index, side)?;
                match side {
                    Sign::Minus => minus.route(&next, x),
                    Sign::Plus => plus.route(&next, x),
                }
            }
        }
    }

    /// A complete tree splitting the given coordinates in order at every
    /// level. Handy for constructing planted shapes.
    pub fn complete_on(coords: &[usize]) -> Result<DecisionTree> {
        let mut seen = std::collections::BTreeSet::new();
        for &c in coords {
            if !seen.insert(c) {
                return Err(Error::InvalidParameter {
                    detail: format!("coordinate {c} repeats in complete_on"),
                });
            }
        }
        fn build(coords: &[usize]) -> DecisionTree {
            match coords.split_first() {
                None => DecisionTree::Leaf,
                Some((&first, rest)) => {
                    DecisionTree::split(first, build(rest), build(rest))
                }
            }
        }
        Ok(build(coords))
    }
}
