use birkhoff_lab::birkhoff::{birkhoff_partition, birkhoff_partition_sweep, count_masses};
use birkhoff_lab::evaluator::exact_law;
use birkhoff_lab::lattice::{discretize_at, lattice_alpha};
use birkhoff_lab::odometer::{odometer_image, step_point, step_point_inv};
use birkhoff_lab::rational::{int, ratio};
use birkhoff_lab::{DiscreteMeasure, Execution, IntervalSet, NormalizingSequence, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

const DEN: i64 = 256;

fn arb_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((0..DEN, 0..DEN), 0..6).prop_map(|pairs| {
        let raw: Vec<_> = pairs
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), DEN, a.max(b), DEN))
            .collect();
        IntervalSet::from_ratios(&raw).unwrap()
    })
}

fn arb_point() -> impl Strategy<Value = Rational> {
    (0..1024i64).prop_map(|p| ratio(p, 1024))
}

fn arb_measure() -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::btree_map(-8i64..8, 1i64..6, 1..5).prop_map(|atoms| {
        let total: i64 = atoms.values().sum();
        let raw: Vec<_> = atoms.into_iter().map(|(v, w)| (v, 2, w, total)).collect();
        let nu = DiscreteMeasure::from_ratios(&raw).unwrap();
        nu.shift(&-nu.mean())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inclusion_exclusion(a in arb_set(), b in arb_set()) {
        prop_assert_eq!(a.union(&b).measure() + a.intersect(&b).measure(), a.measure() + b.measure());
        prop_assert_eq!(a.symdiff(&b).measure(), a.union(&b).measure() - a.intersect(&b).measure());
        prop_assert!(a.union(&b).is_canonical());
    }

    #[test]
    fn complement_laws(a in arb_set(), b in arb_set()) {
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert_eq!(a.measure() + a.complement().measure(), Rational::one());
        prop_assert_eq!(a.minus(&b), a.intersect(&b.complement()));
        prop_assert!(a.is_disjoint_from(&a.complement()));
    }

    #[test]
    fn split_at_mass_partitions(a in arb_set(), p in 0i64..=64) {
        let m = a.measure() * ratio(p, 64);
        let (lo, hi) = a.split_at_mass(&m).unwrap();
        prop_assert_eq!(lo.measure(), m);
        prop_assert_eq!(lo.union(&hi), a);
        prop_assert!(lo.is_disjoint_from(&hi));
    }

    #[test]
    fn odometer_point_round_trip(x in arb_point()) {
        prop_assert_eq!(step_point_inv(&step_point(&x)), x.clone());
        prop_assert_eq!(step_point(&step_point_inv(&x)), x);
    }

    #[test]
    fn odometer_image_preserves_measure(a in arb_set(), b in arb_set(), t in -40i64..40) {
        let ta = odometer_image(&a, t);
        prop_assert_eq!(ta.measure(), a.measure());
        prop_assert_eq!(odometer_image(&ta, -t), a.clone());
        prop_assert_eq!(odometer_image(&a.union(&b), t), ta.union(&odometer_image(&b, t)));
    }

    #[test]
    fn image_agrees_with_points(a in arb_set(), x in arb_point()) {
        prop_assert_eq!(odometer_image(&a, 1).contains(&step_point(&x)), a.contains(&x));
    }

    #[test]
    fn engine_matches_sweep(a in arb_set(), n in 1u64..40) {
        prop_assert_eq!(birkhoff_partition(&a, n), birkhoff_partition_sweep(&a, n));
    }

    #[test]
    fn count_masses_integrate(a in arb_set(), n in 1u64..200) {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let masses = count_masses(&a, n, exec);
            prop_assert_eq!(masses.values().sum::<Rational>(), Rational::one());
            let mean: Rational = masses.iter().map(|(c, m)| int(*c as i64) * m).sum();
            prop_assert_eq!(mean, int(n as i64) * a.measure());
        }
    }

    #[test]
    fn law_is_centered(a in arb_set(), n in 1u64..200) {
        let seq = NormalizingSequence::sqrt(1 << 20);
        let law = exact_law(&a, n, &seq).unwrap().law;
        prop_assert_eq!(law.atoms().iter().map(|(_, p)| p).sum::<Rational>(), Rational::one());
        prop_assert!(law.mean().is_zero());
    }

    #[test]
    fn discretized_law_is_centered_lattice(nu in arb_measure(), k in 1u32..8, n in 4u64..4096) {
        let alpha = ratio(1, 1 << k);
        let a_n = NormalizingSequence::sqrt(1 << 20).get(n).unwrap();
        let lat = discretize_at(&nu, &lattice_alpha(&alpha), &a_n).unwrap();
        prop_assert!(lat.eta.mean().is_zero());
        prop_assert_eq!(lat.eta.atoms().iter().map(|(_, p)| p).sum::<Rational>(), Rational::one());
    }
}
