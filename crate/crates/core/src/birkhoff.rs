//! Birkhoff sums `S_n(1_A) = Σ_{i<n} 1_A ∘ T^i` as exact level partitions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::levels::{overlay, LevelView};
use crate::odometer::odometer_image;
use crate::rational::Rational;
use crate::sets::IntervalSet;

/// Cells partitioning `[0,1)` with the value of `S_n(1_A)` on each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelPartition {
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub cell: IntervalSet,
    pub count: u64,
}

impl LevelPartition {
    fn from_groups(groups: BTreeMap<u64, Vec<(Rational, Rational)>>) -> Self {
        let cells = groups
            .into_iter()
            .map(|(count, pieces)| Cell {
                cell: IntervalSet::from_pieces(pieces),
                count,
            })
            .filter(|c| !c.cell.is_empty())
            .collect();
        Self { cells }
    }

    /// `Σ count · μ(cell)`, which equals `n·μ(A)`.
    pub fn integral(&self) -> Rational {
        self.cells
            .iter()
            .map(|c| c.cell.measure() * Rational::from_integer(BigInt::from(c.count)))
            .sum()
    }

    pub fn total_measure(&self) -> Rational {
        self.cells.iter().map(|c| c.cell.measure()).sum()
    }

    pub fn count_on(&self, count: u64) -> IntervalSet {
        self.cells
            .iter()
            .find(|c| c.count == count)
            .map(|c| c.cell.clone())
            .unwrap_or_default()
    }
}

/// Level partition of `S_n(1_A)` computed in tower coordinates.
pub fn birkhoff_partition(a: &IntervalSet, n: u64) -> LevelPartition {
    birkhoff_partition_with(a, n, Execution::default())
}

pub fn birkhoff_partition_with(a: &IntervalSet, n: u64, exec: Execution) -> LevelPartition {
    assert!(n >= 1, "n must be positive");
    let view = LevelView::for_window(a, n);
    LevelPartition::from_groups(view.count_cells(n, exec, |_| true))
}

/// Same partition by a direct breakpoint sweep over `T^{-i}(A)`, `i < n`.
/// Quadratic; kept as an independent reference.
pub fn birkhoff_partition_sweep(a: &IntervalSet, n: u64) -> LevelPartition {
    assert!(n >= 1, "n must be positive");
    let pulled: Vec<IntervalSet> = (0..n as i64).map(|i| odometer_image(a, -i)).collect();
    let refs: Vec<&IntervalSet> = pulled.iter().collect();
    let mut groups: BTreeMap<u64, Vec<(Rational, Rational)>> = BTreeMap::new();
    for (lo, hi, c) in overlay(&refs) {
        groups.entry(c).or_default().push((lo, hi));
    }
    LevelPartition::from_groups(groups)
}

/// Exact measure of `{S_n(1_A) = c}` for each attained `c`.
pub fn count_masses(a: &IntervalSet, n: u64, exec: Execution) -> BTreeMap<u64, Rational> {
    assert!(n >= 1, "n must be positive");
    LevelView::for_window(a, n).count_masses(n, exec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `S_n(1_A) ≤ n(μ(A) + bound)`
    Upper,
    /// `|S_n(1_A) − n μ(A)| ≤ n·bound`
    TwoSided,
}

fn admits(mode: Mode, c: u64, n: u64, mu: &Rational, bound: &Rational) -> bool {
    let nr = Rational::from_integer(BigInt::from(n));
    let cr = Rational::from_integer(BigInt::from(c));
    match mode {
        Mode::Upper => cr <= &nr * (mu + bound),
        Mode::TwoSided => {
            let dev = &cr - &nr * mu;
            let lim = &nr * bound;
            dev <= lim && -dev <= lim
        }
    }
}

/// The set where the Birkhoff average of `A` at scale `n` stays within `bound`.
pub fn sublevel_birkhoff(a: &IntervalSet, n: u64, bound: &Rational, mode: Mode) -> IntervalSet {
    sublevel_birkhoff_with(a, n, bound, mode, Execution::default())
}

pub fn sublevel_birkhoff_with(a: &IntervalSet, n: u64, bound: &Rational, mode: Mode, exec: Execution) -> IntervalSet {
    assert!(n >= 1, "n must be positive");
    let mu = a.measure();
    let view = LevelView::for_window(a, n);
    let cells = view.count_cells(n, exec, |c| admits(mode, c, n, &mu, bound));
    IntervalSet::from_pieces(cells.into_values().flatten().collect())
}

/// Measure of the sublevel set without materializing it.
pub fn sublevel_measure(a: &IntervalSet, n: u64, bound: &Rational, mode: Mode, exec: Execution) -> Rational {
    let mu = a.measure();
    count_masses(a, n, exec)
        .into_iter()
        .filter(|(c, _)| admits(mode, *c, n, &mu, bound))
        .fold(Rational::zero(), |acc, (_, m)| acc + m)
}
