//! Labeled samples: multisets of `(point, label)` pairs.

use serde::{Deserialize, Serialize};

use crate::cube::{Point, Restriction, Sign, MAX_DIMENSION};
use crate::error::{Error, Result};

/// An immutable multiset of labeled points over a fixed dimension.
///
/// Order is preserved from construction; filtering keeps the original order,
/// so "the first m consistent examples" is a well-defined, reproducible
/// notion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    n: u8,
    items: Vec<(Point, Sign)>,
}

impl LabeledSample {
    pub fn new(n: usize, items: Vec<(Point, Sign)>) -> Result<LabeledSample> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::InvalidParameter {
                detail: format!("sample dimension must be 1..={MAX_DIMENSION}, got {n}"),
            });
        }
        let mask = u32::MAX << n;
        for (p, _) in &items {
            if p.0 & mask != 0 {
                return Err(Error::InvalidParameter {
                    detail: format!("point {:#x} has bits outside dimension {n}", p.0),
                });
            }
        }
        Ok(LabeledSample {
            n: n as u8,
            items,
        })
    }

    pub fn empty(n: usize) -> LabeledSample {
        LabeledSample::new(n, Vec::new()).expect("empty sample is always valid")
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(Point, Sign)] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Point, Sign)> {
        self.items.iter()
    }

    /// The sub-multiset consistent with `rho`, in the original order.
    pub fn filter(&self, rho: &Restriction) -> Result<LabeledSample> {
        self.filter_up_to(rho, usize::MAX)
    }

    /// Like [`LabeledSample::filter`], but stops after collecting `cap`
    /// consistent examples. Since items are kept in draw order, this is the
    /// "first `cap` consistent examples" of the filtered sample.
    pub fn filter_up_to(&self, rho: &Restriction, cap: usize) -> Result<LabeledSample> {
        if rho.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: rho.n(),
            });
        }
        let mut kept = Vec::new();
        for &(p, y) in &self.items {
            if kept.len() >= cap {
                break;
            }
            if rho.consistent(p) {
                kept.push((p, y));
            }
        }
        Ok(LabeledSample {
            n: self.n,
            items: kept,
        })
    }

    /// A contiguous slice copied out as its own sample (for carving disjoint
    /// training folds out of one pool).
    pub fn slice(&self, start: usize, len: usize) -> Result<LabeledSample> {
        let end = start.checked_add(len).filter(|&e| e <= self.items.len());
        let Some(end) = end else {
            return Err(Error::InvalidParameter {
                detail: format!(
                    "slice {start}..{} out of bounds for sample of {}",
                    start.saturating_add(len),
                    self.items.len()
                ),
            });
        };
        Ok(LabeledSample {
            n: self.n,
            items: self.items[start..end].to_vec(),
        })
    }

    /// Serializes as CSV rows `x,label`, e.g. `+-++,-1`, one per example.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.items.len() * (self.n() + 4));
        for &(p, y) in &self.items {
            out.push_str(&p.encode(self.n()));
            out.push(',');
            out.push_str(if y == Sign::Plus { "+1" } else { "-1" });
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form; the dimension is inferred from the first row and
    /// must be consistent across rows.
    pub fn from_csv(text: &str) -> Result<LabeledSample> {
        let mut n: Option<usize> = None;
        let mut items = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (xs, label) = line.split_once(',').ok_or_else(|| Error::Parse {
                detail: format!("line {}: expected `x,label`", lineno + 1),
            })?;
            let (p, row_n) = Point::decode(xs.trim())?;
            match n {
                None => n = Some(row_n),
                Some(prev) if prev != row_n => {
                    return Err(Error::Parse {
                        detail: format!(
                            "line {}: dimension {row_n} disagrees with {prev}",
                            lineno + 1
                        ),
                    })
                }
                _ => {}
            }
            let y = match label.trim() {
                "+1" | "1" => Sign::Plus,
                "-1" => Sign::Minus,
                other => {
                    return Err(Error::Parse {
                        detail: format!("line {}: bad label {other:?}", lineno + 1),
                    })
                }
            };
            items.push((p, y));
        }
        let n = n.ok_or_else(|| Error::Parse {
            detail: "empty sample text".to_string(),
        })?;
        LabeledSample::new(n, items)
    }
}
