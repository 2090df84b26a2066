//! Points and restrictions of the Boolean cube `{+1, -1}^n`.
//!
//! A [`Point`] is a full assignment to all `n` coordinates, bit-packed into a
//! machine word (the dimension travels with the surrounding context). A
//! [`Restriction`] fixes a subset of coordinates and leaves the rest free;
//! the set of points consistent with it is a subcube. Restrictions have a
//! canonical text encoding, a string over `+`, `-`, `*` with one character
//! per coordinate, and all tie-breaking in this crate follows the
//! lexicographic order of that encoding (`*` < `+` < `-`).

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Hard cap on the cube dimension. Dense 2^n vectors stay desk-sized.
pub const MAX_DIMENSION: usize = 24;

/// A coordinate value or label: `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn from_bool(plus: bool) -> Sign {
        if plus {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn from_value(v: i8) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::Parse {
                detail: format!("expected label +1 or -1, got {other}"),
            }),
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn glyph(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Sign, D::Error> {
        let v = i8::deserialize(d)?;
        Sign::from_value(v).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// A point of `{+1, -1}^n`, bit-packed: bit `i` set means coordinate `i` is
/// `+1`. The dimension `n` is supplied by context (sample, distribution, or
/// restriction) rather than stored per point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub u32);

impl Point {
    pub fn coord(self, i: usize) -> Sign {
        Sign::from_bool(self.0 >> i & 1 == 1)
    }

    pub fn with_coord(self, i: usize, v: Sign) -> Point {
        match v {
            Sign::Plus => Point(self.0 | 1 << i),
            Sign::Minus => Point(self.0 & !(1 << i)),
        }
    }

    /// Index of this point in a dense 2^n vector.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Point {
        Point(index as u32)
    }

    /// Canonical text encoding: one `+`/`-` per coordinate, coordinate 0 first.
    pub fn encode(self, n: usize) -> String {
        (0..n).map(|i| self.coord(i).glyph()).collect()
    }

    /// Parses the canonical encoding; the string length determines `n`.
    pub fn decode(text: &str) -> Result<(Point, usize)> {
        let n = text.chars().count();
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::Parse {
                detail: format!("point encoding must have 1..={MAX_DIMENSION} characters"),
            });
        }
        let mut bits = 0u32;
        for (i, c) in text.chars().enumerate() {
            match c {
                '+' => bits |= 1 << i,
                '-' => {}
                other => {
                    return Err(Error::Parse {
                        detail: format!("invalid point character {other:?}"),
                    })
                }
            }
        }
        Ok((Point(bits), n))
    }
}

/// A restriction of `{+1, -1}^n`: some coordinates fixed to a sign, the rest
/// free. Immutable; [`Restriction::refine`] returns a new value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Restriction {
    n: u8,
    /// Bit `i` set means coordinate `i` is fixed.
    fixed: u32,
    /// For fixed coordinates, bit `i` set means the fixed value is `+1`.
    /// Bits outside `fixed` are zero.
    values: u32,
}

impl Restriction {
    /// The all-free restriction over `n` coordinates.
    pub fn all_free(n: usize) -> Restriction {
        assert!(n >= 1 && n <= MAX_DIMENSION, "dimension out of range");
        Restriction {
            n: n as u8,
            fixed: 0,
            values: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// Number of fixed coordinates.
    pub fn depth(&self) -> usize {
        self.fixed.count_ones() as usize
    }

    pub fn free_count(&self) -> usize {
        self.n() - self.depth()
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed >> i & 1 == 1
    }

    /// The fixed value at coordinate `i`, or `None` if `i` is free.
    pub fn fixed_value(&self, i: usize) -> Option<Sign> {
        if self.is_fixed(i) {
            Some(Sign::from_bool(self.values >> i & 1 == 1))
        } else {
            None
        }
    }

    /// Free coordinates in ascending order.
    pub fn free_coords(&self) -> impl Iterator<Item = usize> + '_ {
        let n = self.n();
        (0..n).filter(move |&i| !self.is_fixed(i))
    }

    /// Whether `x` agrees with every fixed coordinate.
    pub fn consistent(&self, x: Point) -> bool {
        (x.0 ^ self.values) & self.fixed == 0
    }

    /// Fixes free coordinate `i` to `v`. Fixing an already-fixed coordinate
    /// is an error.
    pub fn refine(&self, i: usize, v: Sign) -> Result<Restriction> {
        if i >= self.n() {
            return Err(Error::InvalidParameter {
                detail: format!("coordinate {i} out of range for n={}", self.n),
            });
        }
        if self.is_fixed(i) {
            return Err(Error::CoordinateAlreadyFixed {
                index: i,
                pattern: self.pattern(),
            });
        }
        let bit = 1u32 << i;
        Ok(Restriction {
            n: self.n,
            fixed: self.fixed | bit,
            values: if v == Sign::Plus {
                self.values | bit
            } else {
                self.values
            },
        })
    }

    /// Whether the two subcubes share no point, i.e. some coordinate is
    /// fixed to opposite signs in both.
    pub fn disjoint_from(&self, other: &Restriction) -> bool {
        let common = self.fixed & other.fixed;
        (self.values ^ other.values) & common != 0
    }

    /// The point obtained by reading all fixed values and filling free
    /// coordinates with `-1`. Meaningful mostly for full-depth restrictions.
    pub fn base_point(&self) -> Point {
        Point(self.values)
    }

    /// Iterates over all `2^(n-depth)` consistent points, in ascending
    /// index order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let mask = (1u32 << self.n()) - 1;
        let free = !self.fixed & mask;
        let base = self.values;
        let mut sub = 0u32;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let p = Point(base | sub);
            if sub == free {
                done = true;
            } else {
                sub = (sub | !free).wrapping_add(1) & free;
            }
            Some(p)
        })
    }

    /// Canonical encoding: `+`/`-` for fixed coordinates, `*` for free ones,
    /// coordinate 0 first.
    pub fn pattern(&self) -> String {
        (0..self.n())
            .map(|i| match self.fixed_value(i) {
                None => '*',
                Some(s) => s.glyph(),
            })
            .collect()
    }

    /// Parses the canonical encoding; the string length determines `n`.
    pub fn parse(text: &str) -> Result<Restriction> {
        let n = text.chars().count();
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::Parse {
                detail: format!("restriction pattern must have 1..={MAX_DIMENSION} characters"),
            });
        }
        let mut fixed = 0u32;
        let mut values = 0u32;
        for (i, c) in text.chars().enumerate() {
            match c {
                '*' => {}
                '+' => {
                    fixed |= 1 << i;
                    values |= 1 << i;
                }
                '-' => fixed |= 1 << i,
                other => {
                    return Err(Error::Parse {
                        detail: format!("invalid restriction character {other:?}"),
                    })
                }
            }
        }
        Ok(Restriction {
            n: n as u8,
            fixed,
            values,
        })
    }

    fn rank_at(&self, i: usize) -> u8 {
        match self.fixed_value(i) {
            None => 0,
            Some(Sign::Plus) => 1,
            Some(Sign::Minus) => 2,
        }
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pattern())
    }
}

/// Orders restrictions by the lexicographic order of their canonical
/// encoding (`*` < `+` < `-`); shorter dimensions sort first.
impl Ord for Restriction {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let common = self.n().min(other.n());
        for i in 0..common {
            match self.rank_at(i).cmp(&other.rank_at(i)) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.n.cmp(&other.n)
    }
}

impl PartialOrd for Restriction {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for Restriction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.pattern())
    }
}

impl<'de> Deserialize<'de> for Restriction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Restriction, D::Error> {
        let text = String::deserialize(d)?;
        Restriction::parse(&text).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// All restrictions of depth at most `max_depth`, in canonical order.
///
/// There are `sum over k <= max_depth of C(n, k) * 2^k` of them.
pub fn enumerate_restrictions(n: usize, max_depth: usize) -> Vec<Restriction> {
    assert!(n >= 1 && n <= MAX_DIMENSION, "dimension out of range");
    let max_depth = max_depth.min(n);
    let mut out = Vec::new();
    let mut coords = Vec::new();
    collect_coord_sets(n, max_depth, 0, &mut coords, &mut out);
    out.sort();
    out
}

fn collect_coord_sets(
    n: usize,
    max_depth: usize,
    start: usize,
    coords: &mut Vec<usize>,
    out: &mut Vec<Restriction>,
) {
    let k = coords.len();
    // Every value assignment over the chosen coordinate set.
    for assignment in 0..1u32 << k {
        let mut r = Restriction::all_free(n);
        for (j, &i) in coords.iter().enumerate() {
            let v = Sign::from_bool(assignment >> j & 1 == 1);
            r = r.refine(i, v).expect("coordinates are distinct");
        }
        out.push(r);
    }
    if k == max_depth {
        return;
    }
    for i in start..n {
        coords.push(i);
        collect_coord_sets(n, max_depth, i + 1, coords, out);
        coords.pop();
    }
}

/// `sum over k <= max_depth of C(n, k) * 2^k`, the exact size of
/// [`enumerate_restrictions`].
pub fn restriction_count(n: usize, max_depth: usize) -> u128 {
    let mut total = 0u128;
    for k in 0..=max_depth.min(n) {
        total += binomial(n, k) << k;
    }
    total
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
