//! Rokhlin towers for the odometer.
//!
//! The exact dyadic tower of depth `k` has base `[0, 2^{-k})` and levels
//! `T^j[0, 2^{-k})`, `j < 2^k`; level `j` is the dyadic interval starting at
//! `rev_k(j) / 2^k`. A point of level `j` is described by its base coordinate
//! `v ∈ [0,1)`: `x = rev_k(j)/2^k + 2^{-k} v`. Moving up a level keeps `v`;
//! leaving the top level returns to level 0 with `v ↦ T(v)`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::odometer::{image_pieces, odometer_image};
use crate::rational::{dyadic, pow2, Rational};
use crate::sets::IntervalSet;

/// Reverses the low `k` bits of `j`.
pub fn rev_bits(j: u64, k: u32) -> u64 {
    if k == 0 {
        0
    } else {
        j.reverse_bits() >> (64 - k)
    }
}

/// Coordinates of the exact dyadic tower of depth `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TowerFrame {
    pub k: u32,
}

impl TowerFrame {
    pub fn new(k: u32) -> Self {
        assert!(k < 63, "tower depth {k} too large");
        Self { k }
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.k
    }

    pub fn width(&self) -> Rational {
        dyadic(self.k)
    }

    /// Left endpoint of level `j`.
    pub fn left(&self, j: u64) -> Rational {
        Rational::new(rev_bits(j, self.k).into(), pow2(self.k))
    }

    /// Level `j` as an interval set.
    pub fn level_set(&self, j: u64) -> IntervalSet {
        let lo = self.left(j);
        let hi = &lo + self.width();
        IntervalSet::from_pieces(vec![(lo, hi)])
    }

    /// Splits an absolute level index into `(pass, level)`.
    pub fn split(&self, abs: i64) -> (i64, u64) {
        let n = self.levels() as i64;
        (abs.div_euclid(n), abs.rem_euclid(n) as u64)
    }

    /// Appends the points `T^{abs}(base point with coordinate v)` for `v` in `vset`.
    pub fn place_into(&self, abs: i64, vset: &IntervalSet, out: &mut Vec<(Rational, Rational)>) {
        if vset.is_empty() {
            return;
        }
        let (pass, level) = self.split(abs);
        let left = self.left(level);
        let w = self.width();
        if pass == 0 {
            out.extend(vset.affine(&w, &left));
        } else {
            let mut pieces = Vec::new();
            image_pieces(vset, pass, &mut pieces);
            out.extend(pieces.into_iter().map(|(a, b)| (&left + &w * a, &left + &w * b)));
        }
    }

    pub fn place(&self, abs: i64, vset: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        self.place_into(abs, vset, &mut out);
        IntervalSet::from_pieces(out)
    }

    /// Base coordinates of `set ∩ level j`.
    pub fn pull(&self, set: &IntervalSet, j: u64) -> IntervalSet {
        let lo = self.left(j);
        let hi = &lo + self.width();
        let scale = Rational::from_integer(pow2(self.k));
        let part = set.restrict(&lo, &hi);
        let shifted: Vec<_> = part
            .intervals()
            .iter()
            .map(|(a, b)| ((a - &lo) * &scale, (b - &lo) * &scale))
            .collect();
        IntervalSet::merge_sorted(shifted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerProvenance {
    /// Depth of the exact dyadic tower the tower was regrouped from.
    pub k: u32,
    /// Number of exact-tower blocks of height `n` stacked into the base.
    pub q: u64,
}

/// Base, height and junk set of a Rokhlin tower.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RokhlinTower {
    pub base: IntervalSet,
    pub height: u64,
    pub junk: IntervalSet,
    pub provenance: TowerProvenance,
}

impl RokhlinTower {
    pub fn frame(&self) -> TowerFrame {
        TowerFrame::new(self.provenance.k)
    }

    /// Exact-tower level indices of the base (`j·height`, `j < q`).
    pub fn base_levels(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.provenance.q).map(move |j| j * self.height)
    }

    /// `T^i(base)`.
    pub fn level(&self, i: u64) -> IntervalSet {
        odometer_image(&self.base, i as i64)
    }

    /// All levels, each one step of `T` above the previous.
    pub fn levels(&self) -> Vec<IntervalSet> {
        let mut out = Vec::with_capacity(self.height as usize);
        let mut cur = self.base.clone();
        for _ in 0..self.height {
            let next = odometer_image(&cur, 1);
            out.push(cur);
            cur = next;
        }
        out
    }

    /// Exact check: levels pairwise disjoint, junk disjoint from them, union is `[0,1)`.
    pub fn is_partition(&self) -> bool {
        let levels = self.levels();
        let mut total = self.junk.measure();
        for l in &levels {
            total += l.measure();
        }
        if total != Rational::one() {
            return false;
        }
        let union = IntervalSet::union_all(levels.iter().chain(std::iter::once(&self.junk)));
        union == IntervalSet::full()
    }
}

/// The exact tower with base `[0, 2^{-k})`, height `2^k` and empty junk.
pub fn exact_dyadic_tower(k: u32) -> RokhlinTower {
    let frame = TowerFrame::new(k);
    RokhlinTower {
        base: frame.level_set(0),
        height: frame.levels(),
        junk: IntervalSet::empty(),
        provenance: TowerProvenance { k, q: 1 },
    }
}

/// Tower of height `n` with junk measure `< n·2^{-k} ≤ gamma`, regrouped from
/// the exact tower of minimal depth `k` with `2^k ≥ n / gamma`.
pub fn rokhlin_tower(n: u64, gamma: &Rational) -> Result<RokhlinTower> {
    if n == 0 {
        return domain("tower height must be positive");
    }
    if *gamma <= Rational::zero() || *gamma > Rational::one() {
        return domain(format!("gamma = {gamma} outside (0, 1]"));
    }
    let target = Rational::from_integer(n.into()) / gamma;
    let mut k = 0u32;
    while Rational::from_integer(pow2(k)) < target {
        k += 1;
    }
    let frame = TowerFrame::new(k);
    let total = frame.levels();
    let q = total / n;
    let base = IntervalSet::from_pieces((0..q).map(|j| level_piece(&frame, j * n)).collect());
    let junk = IntervalSet::from_pieces((q * n..total).map(|j| level_piece(&frame, j)).collect());
    Ok(RokhlinTower {
        base,
        height: n,
        junk,
        provenance: TowerProvenance { k, q },
    })
}

fn level_piece(frame: &TowerFrame, j: u64) -> (Rational, Rational) {
    let lo = frame.left(j);
    let hi = &lo + frame.width();
    (lo, hi)
}
