//! Tower-coordinate view of an interval set and the windowed counting engine
//! behind Birkhoff sums.
//!
//! A set `X` is described level by level in the exact dyadic tower of depth
//! `k`: each level is empty, full, or holds a partial subset in base
//! coordinates. The Birkhoff count `S_n(1_X)` on level `j` is the number of
//! full levels among `j, …, j+n-1` (cyclically, wrapping passes) plus the
//! overlay of the partial levels hit by the window, pulled back to pass 0.
//! Consecutive levels whose windows hit the same partial levels share one
//! overlay, so the work is one integer sweep over `2^k` levels plus one small
//! rational overlay per run.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::exec::Execution;
use crate::odometer::odometer_image;
use crate::rational::{ceil_int, floor_int, pow2, Rational};
use crate::sets::IntervalSet;
use crate::tower::{rev_bits, TowerFrame};

/// Deepest tower used for level views.
pub const MAX_DEPTH: u32 = 26;

/// Levels per parallel work item.
const CHUNK: u64 = 1 << 15;

/// Bitset with constant-time rank.
#[derive(Debug, Clone)]
struct RankBits {
    words: Vec<u64>,
    prefix: Vec<u64>,
    len: u64,
}

impl RankBits {
    fn new(len: u64) -> Self {
        let nw = len.div_ceil(64) as usize;
        Self {
            words: vec![0; nw],
            prefix: Vec::new(),
            len,
        }
    }

    fn set(&mut self, i: u64) {
        self.words[(i / 64) as usize] |= 1 << (i % 64);
    }

    fn finish(&mut self) {
        let mut acc = 0;
        self.prefix = Vec::with_capacity(self.words.len() + 1);
        for w in &self.words {
            self.prefix.push(acc);
            acc += w.count_ones() as u64;
        }
        self.prefix.push(acc);
    }

    fn get(&self, i: u64) -> bool {
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    /// Ones in `[0, i)`.
    fn rank(&self, i: u64) -> u64 {
        if i >= self.len {
            return *self.prefix.last().unwrap();
        }
        let w = (i / 64) as usize;
        let r = i % 64;
        let mask = if r == 0 { 0 } else { u64::MAX >> (64 - r) };
        self.prefix[w] + (self.words[w] & mask).count_ones() as u64
    }

    fn total(&self) -> u64 {
        *self.prefix.last().unwrap()
    }
}

/// Content of one tower level in base coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Empty,
    Full,
    Partial(IntervalSet),
}

impl Slot {
    fn classify(v: IntervalSet) -> Slot {
        if v.is_empty() {
            Slot::Empty
        } else if v == IntervalSet::full() {
            Slot::Full
        } else {
            Slot::Partial(v)
        }
    }
}

/// An interval set decomposed along the levels of an exact dyadic tower.
#[derive(Debug, Clone)]
pub struct LevelView {
    frame: TowerFrame,
    full: RankBits,
    partial_levels: Vec<u64>,
    partial_sets: Vec<IntervalSet>,
    set: IntervalSet,
}

/// One run of consecutive levels sharing the same partial hits.
#[derive(Debug, Clone)]
pub(crate) struct WindowRun {
    pub start: u64,
    pub end: u64,
    /// Partition of base coordinates `[0,1)` into pieces with extra counts.
    pub overlay: Vec<(Rational, Rational, u64)>,
}

/// Base-coordinate cell with the membership of each orbit step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub cell: IntervalSet,
    pub hits: Vec<bool>,
}

fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Default depth for evaluating `S_n` on `set`.
pub fn choose_depth(set: &IntervalSet, n: u64) -> u32 {
    let d = (set.dyadic_depth().min(MAX_DEPTH as u64)) as u32;
    d.max(ceil_log2(n).min(20))
}

impl LevelView {
    pub fn new(set: &IntervalSet, k: u32) -> Self {
        assert!(k <= MAX_DEPTH, "depth {k} exceeds {MAX_DEPTH}");
        let frame = TowerFrame::new(k);
        let n = frame.levels();
        let mut full = RankBits::new(n);
        let scale = Rational::from_integer(pow2(k));
        let mut partial: BTreeMap<u64, Vec<(Rational, Rational)>> = BTreeMap::new();
        let mut add_partial = |p: u64, lo: &Rational, hi: &Rational| {
            let base = Rational::from_integer(BigInt::from(p));
            partial
                .entry(rev_bits(p, k))
                .or_default()
                .push((lo * &scale - &base, hi * &scale - &base));
        };
        for (lo, hi) in set.intervals() {
            let slo = lo * &scale;
            let shi = hi * &scale;
            let first_full = ceil_int(&slo).to_u64().unwrap();
            let end_full = floor_int(&shi).to_u64().unwrap();
            if first_full > end_full {
                // inside a single cell
                add_partial(end_full, lo, hi);
                continue;
            }
            let lo_cell = floor_int(&slo).to_u64().unwrap();
            if lo_cell < first_full {
                let cell_hi = Rational::new(BigInt::from(first_full), pow2(k));
                add_partial(lo_cell, lo, &cell_hi);
            }
            for p in first_full..end_full {
                full.set(rev_bits(p, k));
            }
            if Rational::from_integer(BigInt::from(end_full)) < shi {
                let cell_lo = Rational::new(BigInt::from(end_full), pow2(k));
                add_partial(end_full, &cell_lo, hi);
            }
        }
        full.finish();
        let (partial_levels, partial_sets) = partial
            .into_iter()
            .map(|(l, pieces)| (l, IntervalSet::from_pieces(pieces)))
            .unzip();
        Self {
            frame,
            full,
            partial_levels,
            partial_sets,
            set: set.clone(),
        }
    }

    /// View at the default depth for windows of length `n`.
    pub fn for_window(set: &IntervalSet, n: u64) -> Self {
        Self::new(set, choose_depth(set, n))
    }

    pub fn frame(&self) -> TowerFrame {
        self.frame
    }

    pub fn set(&self) -> &IntervalSet {
        &self.set
    }

    pub fn partial_count(&self) -> usize {
        self.partial_levels.len()
    }

    fn partial_index(&self, level: u64) -> Option<usize> {
        self.partial_levels.binary_search(&level).ok()
    }

    /// Slot of level `j` of this view's own tower.
    pub fn slot(&self, j: u64) -> Slot {
        if self.full.get(j) {
            Slot::Full
        } else if let Some(i) = self.partial_index(j) {
            Slot::Partial(self.partial_sets[i].clone())
        } else {
            Slot::Empty
        }
    }

    /// Whether level `j` of `big` (depth ≥ own depth) is entirely full or
    /// empty, without allocating; `None` means partial.
    pub fn uniform_in(&self, big: TowerFrame, j: u64) -> Option<bool> {
        let k = self.frame.k;
        if big.k < k {
            return match self.slot_in(big, j) {
                Slot::Empty => Some(false),
                Slot::Full => Some(true),
                Slot::Partial(_) => None,
            };
        }
        let small = j & (self.frame.levels() - 1);
        if self.full.get(small) {
            return Some(true);
        }
        match self.partial_index(small) {
            None => Some(false),
            Some(_) => match self.slot_in(big, j) {
                Slot::Empty => Some(false),
                Slot::Full => Some(true),
                Slot::Partial(_) => None,
            },
        }
    }

    /// Slot of level `j` of an arbitrary exact tower.
    pub fn slot_in(&self, big: TowerFrame, j: u64) -> Slot {
        let k = self.frame.k;
        if big.k == k {
            return self.slot(j);
        }
        if big.k < k {
            return Slot::classify(big.pull(&self.set, j));
        }
        let small = j & (self.frame.levels() - 1);
        if self.full.get(small) {
            return Slot::Full;
        }
        let Some(i) = self.partial_index(small) else {
            return Slot::Empty;
        };
        let d = big.k - k;
        let s = Rational::new(BigInt::from(rev_bits(j >> k, d)), pow2(d));
        let w = Rational::new(BigInt::one(), pow2(d));
        let part = self.partial_sets[i].restrict(&s, &(&s + &w));
        let scale = Rational::from_integer(pow2(d));
        let v = IntervalSet::merge_sorted(
            part.intervals()
                .iter()
                .map(|(a, b)| ((a - &s) * &scale, (b - &s) * &scale))
                .collect(),
        );
        Slot::classify(v)
    }

    /// Number of full levels among absolute indices `[start, start + len)`.
    pub fn full_count(&self, start: i64, len: u64) -> u64 {
        let n = self.frame.levels() as i128;
        let total = self.full.total() as i128;
        let count = |x: i128| -> i128 {
            x.div_euclid(n) * total + self.full.rank(x.rem_euclid(n) as u64) as i128
        };
        let s = start as i128;
        (count(s + len as i128) - count(s)) as u64
    }

    /// Partial hits `(abs, partial index)` with `lo ≤ abs < hi`, sorted by `abs`.
    fn partial_hits(&self, lo: i64, hi: i64) -> Vec<(i64, usize)> {
        let n = self.frame.levels() as i64;
        let mut out = Vec::new();
        if self.partial_levels.is_empty() || lo >= hi {
            return out;
        }
        let mut pass = lo.div_euclid(n);
        loop {
            let base = pass * n;
            if base >= hi {
                break;
            }
            for (i, &l) in self.partial_levels.iter().enumerate() {
                let abs = base + l as i64;
                if abs >= lo && abs < hi {
                    out.push((abs, i));
                }
            }
            pass += 1;
        }
        out
    }

    fn pulled(&self, abs: i64, idx: usize) -> IntervalSet {
        let pass = abs.div_euclid(self.frame.levels() as i64);
        odometer_image(&self.partial_sets[idx], -pass)
    }

    /// Runs of levels `j ∈ [0, 2^k)` whose windows `[j, j+n)` hit the same partial levels.
    ///
    /// Levels are cut into chunks; inside a chunk the active partial sets are
    /// kept as a map of endpoint deltas and updated incrementally.
    pub(crate) fn window_runs(&self, n: u64, exec: Execution) -> Vec<WindowRun> {
        let levels = self.frame.levels();
        let hits = self.partial_hits(0, levels as i64 + n as i64 - 1);
        let pulled: Vec<IntervalSet> = exec.map(&hits, |&(abs, idx)| self.pulled(abs, idx));
        let mut cuts: Vec<u64> = (0..=levels).step_by(CHUNK as usize).collect();
        cuts.push(levels);
        for &(abs, _) in &hits {
            for c in [abs + 1, abs - n as i64 + 1] {
                if c > 0 && (c as u64) < levels {
                    cuts.push(c as u64);
                }
            }
        }
        cuts.sort_unstable();
        cuts.dedup();
        let mut chunks: Vec<Vec<(u64, u64)>> = Vec::new();
        for w in cuts.windows(2) {
            let chunk = (w[0] / CHUNK) as usize;
            if chunks.len() <= chunk {
                chunks.resize(chunk + 1, Vec::new());
            }
            chunks[chunk].push((w[0], w[1]));
        }
        let parts = exec.map(&chunks, |spans| {
            let mut active: BTreeMap<Rational, i64> = BTreeMap::new();
            let (mut lo, mut hi) = (0usize, 0usize);
            let mut out = Vec::with_capacity(spans.len());
            for &(a, b) in spans {
                let new_lo = hits.partition_point(|&(abs, _)| abs < a as i64);
                let new_hi = hits.partition_point(|&(abs, _)| abs < (a + n) as i64);
                if out.is_empty() {
                    lo = new_lo;
                    hi = new_lo;
                }
                for s in &pulled[hi.max(new_lo)..new_hi.max(hi)] {
                    apply(&mut active, s, 1);
                }
                for s in &pulled[lo..new_lo.min(hi)] {
                    apply(&mut active, s, -1);
                }
                lo = new_lo;
                hi = new_hi.max(hi);
                out.push(WindowRun {
                    start: a,
                    end: b,
                    overlay: overlay_from_deltas(&active),
                });
            }
            out
        });
        parts.into_iter().flatten().collect()
    }

    /// Exact measure of `{S_n(1_X) = c}` for every attained count `c`.
    pub fn count_masses(&self, n: u64, exec: Execution) -> BTreeMap<u64, Rational> {
        let runs = self.window_runs(n, exec);
        let parts = exec.map(&runs, |run| {
            let mut whole: BTreeMap<u64, u64> = BTreeMap::new();
            let mut frac: BTreeMap<u64, Rational> = BTreeMap::new();
            let hist = self.full_histogram(run.start, run.end, n);
            let trivial = run.overlay.len() == 1;
            for (&f, &c) in &hist {
                if trivial {
                    *whole.entry(f + run.overlay[0].2).or_default() += c;
                } else {
                    let cr = Rational::from_integer(BigInt::from(c));
                    for (lo, hi, e) in &run.overlay {
                        *frac.entry(f + e).or_insert_with(Rational::zero) += &cr * (hi - lo);
                    }
                }
            }
            (whole, frac)
        });
        let mut whole: BTreeMap<u64, u64> = BTreeMap::new();
        let mut frac: BTreeMap<u64, Rational> = BTreeMap::new();
        for (w, f) in parts {
            for (c, m) in w {
                *whole.entry(c).or_default() += m;
            }
            for (c, m) in f {
                *frac.entry(c).or_insert_with(Rational::zero) += m;
            }
        }
        let unit = self.frame.width();
        let mut out: BTreeMap<u64, Rational> = BTreeMap::new();
        for (c, m) in whole {
            *out.entry(c).or_insert_with(Rational::zero) += Rational::from_integer(BigInt::from(m));
        }
        for (c, m) in frac {
            *out.entry(c).or_insert_with(Rational::zero) += m;
        }
        out.into_iter()
            .map(|(c, m)| (c, m * &unit))
            .filter(|(_, m)| !m.is_zero())
            .collect()
    }

    /// Histogram of `full_count(j, n)` for `j ∈ [a, b)`, updated incrementally.
    fn full_histogram(&self, a: u64, b: u64, n: u64) -> BTreeMap<u64, u64> {
        let levels = self.frame.levels();
        let mut hist = BTreeMap::new();
        let mut f = self.full_count(a as i64, n);
        for j in a..b {
            *hist.entry(f).or_insert(0u64) += 1;
            let leaving = self.full.get(j);
            let entering = self.full.get((j + n) % levels);
            f = f + entering as u64 - leaving as u64;
        }
        hist
    }

    /// Raw pieces of `{x : select(S_n(1_X)(x))}` grouped by count.
    pub fn count_cells<F>(&self, n: u64, exec: Execution, select: F) -> BTreeMap<u64, Vec<(Rational, Rational)>>
    where
        F: Fn(u64) -> bool + Sync + Send,
    {
        let runs = self.window_runs(n, exec);
        let levels = self.frame.levels();
        let width = self.frame.width();
        let parts = exec.map(&runs, |run| {
            let mut out: BTreeMap<u64, Vec<(Rational, Rational)>> = BTreeMap::new();
            let mut f = self.full_count(run.start as i64, n);
            for j in run.start..run.end {
                let left = self.frame.left(j);
                for (lo, hi, e) in &run.overlay {
                    let c = f + e;
                    if select(c) {
                        out.entry(c).or_default().push((&left + &width * lo, &left + &width * hi));
                    }
                }
                f = f + self.full.get((j + n) % levels) as u64 - self.full.get(j) as u64;
            }
            out
        });
        let mut merged: BTreeMap<u64, Vec<(Rational, Rational)>> = BTreeMap::new();
        for p in parts {
            for (c, mut v) in p {
                merged.entry(c).or_default().append(&mut v);
            }
        }
        merged
    }

    /// Membership of `T^t(x)` in the set for `t < len`, for base points `x` of
    /// absolute level `start` in `frame`, refined into cells of constant pattern.
    pub fn profile(&self, frame: TowerFrame, start: i64, len: usize) -> Vec<Profile> {
        let mut base = vec![false; len];
        let mut partial: Vec<(usize, IntervalSet)> = Vec::new();
        for (t, slot) in base.iter_mut().enumerate() {
            let (pass, level) = frame.split(start + t as i64);
            match self.uniform_in(frame, level) {
                Some(b) => *slot = b,
                None => {
                    if let Slot::Partial(s) = self.slot_in(frame, level) {
                        partial.push((t, odometer_image(&s, -pass)));
                    }
                }
            }
        }
        if partial.is_empty() {
            return vec![Profile {
                cell: IntervalSet::full(),
                hits: base,
            }];
        }
        let mut cuts: Vec<Rational> = vec![Rational::zero(), Rational::one()];
        for (_, s) in &partial {
            for (a, b) in s.intervals() {
                cuts.push(a.clone());
                cuts.push(b.clone());
            }
        }
        cuts.sort();
        cuts.dedup();
        let two = Rational::from_integer(2.into());
        let mut groups: HashMap<Vec<bool>, Vec<(Rational, Rational)>> = HashMap::new();
        for w in cuts.windows(2) {
            let mid = (&w[0] + &w[1]) / &two;
            let mut hits = base.clone();
            for (t, s) in &partial {
                if s.contains(&mid) {
                    hits[*t] = true;
                }
            }
            groups.entry(hits).or_default().push((w[0].clone(), w[1].clone()));
        }
        let mut out: Vec<Profile> = groups
            .into_iter()
            .map(|(hits, pieces)| Profile {
                cell: IntervalSet::merge_sorted(pieces),
                hits,
            })
            .collect();
        out.sort_by(|a, b| a.cell.cmp(&b.cell));
        out
    }
}

fn apply(active: &mut BTreeMap<Rational, i64>, s: &IntervalSet, w: i64) {
    for (a, b) in s.intervals() {
        for (x, d) in [(a, w), (b, -w)] {
            let e = active.entry(x.clone()).or_insert(0);
            *e += d;
            if *e == 0 {
                active.remove(x);
            }
        }
    }
}

fn overlay_from_deltas(active: &BTreeMap<Rational, i64>) -> Vec<(Rational, Rational, u64)> {
    let mut out = Vec::new();
    let mut pos = Rational::zero();
    let mut count: i64 = 0;
    for (x, d) in active {
        if *x > pos {
            push_piece(&mut out, pos, x.clone(), count as u64);
            pos = x.clone();
        }
        count += d;
    }
    if pos < Rational::one() {
        push_piece(&mut out, pos, Rational::one(), count as u64);
    }
    out
}

/// Partition of `[0,1)` by how many of `sets` cover each point.
pub(crate) fn overlay(sets: &[&IntervalSet]) -> Vec<(Rational, Rational, u64)> {
    if sets.is_empty() {
        return vec![(Rational::zero(), Rational::one(), 0)];
    }
    let mut events: Vec<(Rational, i64)> = Vec::new();
    for s in sets {
        for (a, b) in s.intervals() {
            events.push((a.clone(), 1));
            events.push((b.clone(), -1));
        }
    }
    events.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(Rational, Rational, u64)> = Vec::new();
    let mut pos = Rational::zero();
    let mut count: i64 = 0;
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0.clone();
        if x > pos {
            push_piece(&mut out, pos, x.clone(), count as u64);
            pos = x.clone();
        }
        while i < events.len() && events[i].0 == x {
            count += events[i].1;
            i += 1;
        }
    }
    if pos < Rational::one() {
        push_piece(&mut out, pos, Rational::one(), count as u64);
    }
    out
}

fn push_piece(out: &mut Vec<(Rational, Rational, u64)>, lo: Rational, hi: Rational, c: u64) {
    if let Some(last) = out.last_mut() {
        if last.2 == c && last.1 == lo {
            last.1 = hi;
            return;
        }
    }
    out.push((lo, hi, c));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn rank_bits() {
        let mut b = RankBits::new(130);
        for i in [0, 5, 64, 127, 129] {
            b.set(i);
        }
        b.finish();
        assert_eq!(b.rank(0), 0);
        assert_eq!(b.rank(6), 2);
        assert_eq!(b.rank(65), 3);
        assert_eq!(b.rank(130), 5);
        assert_eq!(b.total(), 5);
    }

    #[test]
    fn view_slots_cover_the_set() {
        let a = IntervalSet::from_ratios(&[(0, 1, 3, 8), (1, 2, 2, 3)]).unwrap();
        let v = LevelView::new(&a, 3);
        let f = v.frame();
        let mut pieces = Vec::new();
        for j in 0..8 {
            match v.slot(j) {
                Slot::Empty => {}
                Slot::Full => f.place_into(j as i64, &IntervalSet::full(), &mut pieces),
                Slot::Partial(s) => f.place_into(j as i64, &s, &mut pieces),
            }
        }
        assert_eq!(IntervalSet::from_pieces(pieces), a);
        assert_eq!(v.partial_count(), 1);
    }

    #[test]
    fn slot_in_deeper_frame() {
        let a = IntervalSet::from_ratios(&[(0, 1, 1, 3)]).unwrap();
        let v = LevelView::new(&a, 1);
        let big = TowerFrame::new(4);
        let mut pieces = Vec::new();
        for j in 0..16 {
            match v.slot_in(big, j) {
                Slot::Empty => {}
                Slot::Full => big.place_into(j as i64, &IntervalSet::full(), &mut pieces),
                Slot::Partial(s) => big.place_into(j as i64, &s, &mut pieces),
            }
        }
        assert_eq!(IntervalSet::from_pieces(pieces), a);
    }

    #[test]
    fn overlay_counts() {
        let a = IntervalSet::from_ratios(&[(0, 1, 1, 2)]).unwrap();
        let b = IntervalSet::from_ratios(&[(1, 4, 3, 4)]).unwrap();
        let o = overlay(&[&a, &b]);
        assert_eq!(
            o,
            vec![
                (ratio(0, 1), ratio(1, 4), 1),
                (ratio(1, 4), ratio(1, 2), 2),
                (ratio(1, 2), ratio(3, 4), 1),
                (ratio(3, 4), ratio(1, 1), 0)
            ]
        );
    }
}
