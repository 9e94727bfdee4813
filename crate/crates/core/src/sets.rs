//! Measurable subsets of `[0,1)` as canonical finite unions of half-open
//! rational intervals, identified modulo null sets.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Result};
use crate::rational::{self, Rational};

/// Boolean set operation for [`IntervalSet::combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetOp {
    Union,
    Intersect,
    Minus,
    Symdiff,
}

impl SetOp {
    fn apply(self, a: bool, b: bool) -> bool {
        match self {
            SetOp::Union => a || b,
            SetOp::Intersect => a && b,
            SetOp::Minus => a && !b,
            SetOp::Symdiff => a != b,
        }
    }
}

/// A finite union of half-open intervals `[lo, hi)` inside `[0,1)`.
///
/// Intervals are sorted, pairwise disjoint and non-adjacent (`hi_i < lo_{i+1}`),
/// so two sets that agree up to a null set have identical representations.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    ivs: Vec<(Rational, Rational)>,
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ivs.is_empty() {
            return write!(f, "∅");
        }
        for (i, (lo, hi)) in self.ivs.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "[{lo},{hi})")?;
        }
        Ok(())
    }
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self { ivs: Vec::new() }
    }

    pub fn full() -> Self {
        Self {
            ivs: vec![(Rational::zero(), Rational::one())],
        }
    }

    /// Normalizes raw pairs, rejecting endpoints outside `[0,1]` or `lo > hi`.
    pub fn new(raw: Vec<(Rational, Rational)>) -> Result<Self> {
        let zero = Rational::zero();
        let one = Rational::one();
        for (lo, hi) in &raw {
            if *lo < zero || *hi > one || lo > hi {
                return domain(format!("interval [{lo},{hi}) not inside [0,1]"));
            }
        }
        Ok(Self::from_pieces(raw))
    }

    /// Single interval `[lo, hi)`.
    pub fn interval(lo: Rational, hi: Rational) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    /// Convenience constructor from small integer fractions `(p1,q1,p2,q2)`.
    pub fn from_ratios(raw: &[(i64, i64, i64, i64)]) -> Result<Self> {
        Self::new(
            raw.iter()
                .map(|&(a, b, c, d)| (rational::ratio(a, b), rational::ratio(c, d)))
                .collect(),
        )
    }

    /// Sort-and-merge normalization of pieces already known to lie in `[0,1]`.
    pub(crate) fn from_pieces(mut raw: Vec<(Rational, Rational)>) -> Self {
        raw.retain(|(lo, hi)| lo < hi);
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        Self::merge_sorted(raw)
    }

    /// Merges pieces sorted by left endpoint.
    pub(crate) fn merge_sorted(raw: Vec<(Rational, Rational)>) -> Self {
        let mut ivs: Vec<(Rational, Rational)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            if lo >= hi {
                continue;
            }
            match ivs.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => ivs.push((lo, hi)),
            }
        }
        Self { ivs }
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.ivs
    }

    pub fn into_intervals(self) -> Vec<(Rational, Rational)> {
        self.ivs
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ivs.len()
    }

    pub fn measure(&self) -> Rational {
        self.ivs
            .iter()
            .fold(Rational::zero(), |acc, (lo, hi)| acc + (hi - lo))
    }

    pub fn is_canonical(&self) -> bool {
        let zero = Rational::zero();
        let one = Rational::one();
        self.ivs.iter().all(|(lo, hi)| lo < hi && *lo >= zero && *hi <= one)
            && self.ivs.windows(2).all(|w| w[0].1 < w[1].0)
    }

    /// Boolean operation by a linear merge of the two endpoint sequences.
    pub fn combine(&self, other: &IntervalSet, op: SetOp) -> IntervalSet {
        let ea = self.ivs.len() * 2;
        let eb = other.ivs.len() * 2;
        let endpoint = |s: &IntervalSet, i: usize| -> Rational {
            let (lo, hi) = &s.ivs[i / 2];
            if i.is_multiple_of(2) {
                lo.clone()
            } else {
                hi.clone()
            }
        };
        let (mut i, mut j) = (0usize, 0usize);
        let mut out = Vec::new();
        let mut start: Option<Rational> = None;
        while i < ea || j < eb {
            let x = match (i < ea, j < eb) {
                (true, true) => {
                    let a = &self.ivs[i / 2];
                    let b = &other.ivs[j / 2];
                    let xa = if i % 2 == 0 { &a.0 } else { &a.1 };
                    let xb = if j % 2 == 0 { &b.0 } else { &b.1 };
                    if xa <= xb {
                        xa.clone()
                    } else {
                        xb.clone()
                    }
                }
                (true, false) => endpoint(self, i),
                (false, true) => endpoint(other, j),
                (false, false) => unreachable!(),
            };
            while i < ea && endpoint_ref(&self.ivs, i) == &x {
                i += 1;
            }
            while j < eb && endpoint_ref(&other.ivs, j) == &x {
                j += 1;
            }
            // after passing x, membership is determined by parity of consumed endpoints
            let in_a = i % 2 == 1;
            let in_b = j % 2 == 1;
            let inside = op.apply(in_a, in_b);
            match (&start, inside) {
                (None, true) => start = Some(x),
                (Some(_), false) => out.push((start.take().unwrap(), x)),
                _ => {}
            }
        }
        IntervalSet { ivs: out }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Union)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Intersect)
    }

    pub fn minus(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Minus)
    }

    pub fn symdiff(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Symdiff)
    }

    pub fn complement(&self) -> IntervalSet {
        IntervalSet::full().minus(self)
    }

    /// Θ(A,B) = μ(A △ B).
    pub fn theta(&self, other: &IntervalSet) -> Rational {
        self.symdiff(other).measure()
    }

    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.minus(other).is_empty()
    }

    pub fn is_disjoint_from(&self, other: &IntervalSet) -> bool {
        self.intersect(other).is_empty()
    }

    /// Splits into a leftmost part of measure exactly `m` and the rest.
    pub fn split_at_mass(&self, m: &Rational) -> Result<(IntervalSet, IntervalSet)> {
        let total = self.measure();
        if *m < Rational::zero() || *m > total {
            return domain(format!("split mass {m} outside [0, {total}]"));
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut remaining = m.clone();
        for (lo, hi) in &self.ivs {
            if remaining.is_zero() {
                right.push((lo.clone(), hi.clone()));
                continue;
            }
            let len = hi - lo;
            if len <= remaining {
                remaining -= &len;
                left.push((lo.clone(), hi.clone()));
            } else {
                let cut = lo + &remaining;
                left.push((lo.clone(), cut.clone()));
                right.push((cut, hi.clone()));
                remaining = Rational::zero();
            }
        }
        Ok((IntervalSet { ivs: left }, IntervalSet { ivs: right }))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let idx = self.ivs.partition_point(|(lo, _)| lo <= x);
        idx > 0 && *x < self.ivs[idx - 1].1
    }

    /// `self ∩ [lo, hi)` using binary search.
    pub fn restrict(&self, lo: &Rational, hi: &Rational) -> IntervalSet {
        let start = self.ivs.partition_point(|(_, h)| h <= lo);
        let mut out = Vec::new();
        for (a, b) in &self.ivs[start..] {
            if a >= hi {
                break;
            }
            let a = if a < lo { lo.clone() } else { a.clone() };
            let b = if b > hi { hi.clone() } else { b.clone() };
            if a < b {
                out.push((a, b));
            }
        }
        IntervalSet { ivs: out }
    }

    /// Measure of `self ∩ [lo, hi)`.
    pub fn measure_in(&self, lo: &Rational, hi: &Rational) -> Rational {
        self.restrict(lo, hi).measure()
    }

    /// Image under `x ↦ offset + scale·x`; caller guarantees the image stays in `[0,1)`.
    pub(crate) fn affine(&self, scale: &Rational, offset: &Rational) -> Vec<(Rational, Rational)> {
        self.ivs
            .iter()
            .map(|(lo, hi)| (offset + scale * lo, offset + scale * hi))
            .collect()
    }

    /// Union of many sets by a single sort-and-merge.
    pub fn union_all<'a, I: IntoIterator<Item = &'a IntervalSet>>(sets: I) -> IntervalSet {
        let raw: Vec<_> = sets.into_iter().flat_map(|s| s.ivs.iter().cloned()).collect();
        IntervalSet::from_pieces(raw)
    }

    /// Largest `e` such that some endpoint has denominator `2^e` (non-dyadic endpoints ignored).
    pub fn dyadic_depth(&self) -> u64 {
        self.ivs
            .iter()
            .flat_map(|(lo, hi)| [lo, hi])
            .filter_map(rational::dyadic_exponent)
            .max()
            .unwrap_or(0)
    }
}

fn endpoint_ref(ivs: &[(Rational, Rational)], i: usize) -> &Rational {
    let (lo, hi) = &ivs[i / 2];
    if i.is_multiple_of(2) {
        lo
    } else {
        hi
    }
}

impl PartialOrd for IntervalSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for IntervalSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ivs.cmp(&other.ivs)
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<[String; 2]> = self
            .ivs
            .iter()
            .map(|(lo, hi)| [rational::to_string(lo), rational::to_string(hi)])
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<[String; 2]>::deserialize(d)?;
        let raw = v
            .iter()
            .map(|[a, b]| Ok((rational::parse(a)?, rational::parse(b)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        IntervalSet::new(raw).map_err(serde::de::Error::custom)
    }
}
