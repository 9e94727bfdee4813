//! Seeded generators shared by the integration suites.
#![allow(dead_code)]

use birkhoff_lab::rational::{int, ratio};
use birkhoff_lab::{DiscreteMeasure, IntervalSet, Rational};
use num_traits::{Signed, Zero};
use rand::Rng;

const DENOMS: [i64; 6] = [8, 16, 64, 12, 10, 7];

/// Up to `pieces` intervals with endpoints on a mix of dyadic and other grids.
pub fn random_set<R: Rng>(rng: &mut R, pieces: usize) -> IntervalSet {
    let q = DENOMS[rng.gen_range(0..DENOMS.len())];
    let count = 2 * rng.gen_range(1..=pieces);
    let mut ends: Vec<i64> = (0..count).map(|_| rng.gen_range(0..=q)).collect();
    ends.sort_unstable();
    let raw = ends.chunks(2).map(|c| (ratio(c[0], q), ratio(c[1], q))).collect();
    IntervalSet::new(raw).unwrap()
}

/// Random law with `atoms ≥ 2` atoms of values `p/4 ∈ [−4, 4]`, rebalanced to mean zero.
pub fn zero_mean_measure<R: Rng>(rng: &mut R, atoms: usize) -> DiscreteMeasure {
    let mut values: Vec<Rational> = (0..atoms).map(|_| ratio(rng.gen_range(-16..=16), 4)).collect();
    values[0] = ratio(-rng.gen_range(1..=16), 4);
    values[1] = ratio(rng.gen_range(1..=16), 4);
    let mut masses: Vec<Rational> = (0..atoms).map(|_| int(rng.gen_range(1..=9))).collect();
    let moment: Rational = values.iter().zip(&masses).map(|(v, m)| v * m).sum();
    // move the first moment to zero by loading the atom on the opposite side
    if moment.is_positive() {
        masses[0] += &moment / values[0].abs();
    } else if moment.is_negative() {
        masses[1] += moment.abs() / &values[1];
    }
    let total: Rational = masses.iter().sum();
    let m = DiscreteMeasure::new(values.into_iter().zip(masses.into_iter().map(|m| m / &total)).collect()).unwrap();
    assert!(m.mean().is_zero());
    m
}

/// Arbitrary-mean law with up to `atoms` atoms.
pub fn random_measure<R: Rng>(rng: &mut R, atoms: usize) -> DiscreteMeasure {
    let k = rng.gen_range(1..=atoms);
    let raw = (0..k)
        .map(|_| (ratio(rng.gen_range(-24..=24), 8), int(rng.gen_range(1..=9))))
        .collect::<Vec<_>>();
    let total: Rational = raw.iter().map(|(_, m)| m).sum();
    DiscreteMeasure::new(raw.into_iter().map(|(v, m)| (v, m / &total)).collect()).unwrap()
}

/// Step function on `[0,1)`: sorted cut points `0 = c_0 < … < c_k = 1` and a value per piece.
pub struct Step {
    pub cuts: Vec<Rational>,
    pub values: Vec<Rational>,
}

pub fn random_step<R: Rng>(rng: &mut R, pieces: usize) -> Step {
    let q = DENOMS[rng.gen_range(0..DENOMS.len())] * 4;
    let mut inner: Vec<i64> = (0..rng.gen_range(0..pieces)).map(|_| rng.gen_range(1..q)).collect();
    inner.sort_unstable();
    inner.dedup();
    let mut cuts = vec![Rational::zero()];
    cuts.extend(inner.into_iter().map(|c| ratio(c, q)));
    cuts.push(int(1));
    let values = (1..cuts.len()).map(|_| ratio(rng.gen_range(-12..=12), 4)).collect();
    Step { cuts, values }
}

impl Step {
    fn value_at(&self, x: &Rational) -> Rational {
        let i = self.cuts.partition_point(|c| c <= x) - 1;
        self.values[i].clone()
    }

    pub fn law(&self) -> DiscreteMeasure {
        DiscreteMeasure::new(
            self.cuts
                .windows(2)
                .zip(&self.values)
                .map(|(w, v)| (v.clone(), &w[1] - &w[0]))
                .collect(),
        )
        .unwrap()
    }

    /// Law of `self + other` on the common refinement.
    pub fn sum_law(&self, other: &Step) -> DiscreteMeasure {
        let mut cuts: Vec<Rational> = self.cuts.iter().chain(&other.cuts).cloned().collect();
        cuts.sort();
        cuts.dedup();
        DiscreteMeasure::new(
            cuts.windows(2)
                .map(|w| {
                    let mid = (&w[0] + &w[1]) / int(2);
                    (self.value_at(&mid) + other.value_at(&mid), &w[1] - &w[0])
                })
                .collect(),
        )
        .unwrap()
    }
}
