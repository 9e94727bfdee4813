use birkhoff_lab::birkhoff::count_masses;
use birkhoff_lab::constructors::{
    approximate_on_disjoint, flatten_at, flatten_subsequence, realize_targets, ConstructionCertificate, Target,
};
use birkhoff_lab::evaluator::exact_law;
use birkhoff_lab::lattice::{discretize_at, lattice_alpha};
use birkhoff_lab::measures::dirac_bound;
use birkhoff_lab::rational::{self, int, ratio};
use birkhoff_lab::{DiscreteMeasure, Error, Execution, IntervalSet, NormalizingSequence, Rational};
use num_traits::{One, Zero};

fn m(raw: &[(i64, i64, i64, i64)]) -> DiscreteMeasure {
    DiscreteMeasure::from_ratios(raw).unwrap()
}

fn set(raw: &[(i64, i64, i64, i64)]) -> IntervalSet {
    IntervalSet::from_ratios(raw).unwrap()
}

fn seq() -> NormalizingSequence {
    NormalizingSequence::sqrt(1 << 24)
}

fn param(cert: &ConstructionCertificate, key: &str) -> u64 {
    cert.parameters[key].parse().unwrap()
}

fn assert_certified(cert: &ConstructionCertificate) {
    assert!(cert.verified.iter().all(|c| c.holds), "{:?}", cert.verified);
    assert!(cert.verify().ok(), "{:?}", cert.verify());
}

#[test]
fn approximate_degenerate_target() {
    let cert = approximate_on_disjoint(&IntervalSet::empty(), &DiscreteMeasure::dirac(int(0)), &ratio(1, 10), &seq(), 10)
        .unwrap();
    assert!(cert.output_set.is_empty());
    assert_certified(&cert);
}

#[test]
fn approximate_on_empty_set() {
    let cert = approximate_on_disjoint(&IntervalSet::empty(), &m(&[(-1, 1, 1, 2), (1, 1, 1, 2)]), &ratio(1, 2), &seq(), 1 << 20)
        .unwrap();
    assert_certified(&cert);
    assert!(cert.output_set.measure() <= ratio(1, 2));
}

#[test]
fn approximate_skewed_target() {
    let a = set(&[(0, 1, 5, 8)]);
    let nu = m(&[(-1, 1, 2, 3), (2, 1, 1, 3)]);
    let eps = ratio(1, 4);
    let cert = approximate_on_disjoint(&a, &nu, &eps, &seq(), 1 << 20).unwrap();
    assert_certified(&cert);
    let b = &cert.output_set;
    assert!(b.is_disjoint_from(&a));
    assert!(b.measure() <= eps);
    assert_eq!(b.measure(), int(param(&cert, "d") as i64) * rational::parse(&cert.parameters["mu_F"]).unwrap());

    // most points see exactly h + d points of B, for an atom h of the lattice law
    let alpha = rational::parse(&cert.parameters["alpha"]).unwrap();
    let n = param(&cert, "n");
    let a_n = seq().get(n).unwrap();
    let eta = discretize_at(&nu, &lattice_alpha(&alpha), &a_n).unwrap().eta;
    let d = param(&cert, "d") as i64;
    let counts = count_masses(b, n, Execution::default());
    let on_pattern: Rational = eta
        .atoms()
        .iter()
        .filter_map(|(h, _)| counts.get(&((rational::floor_i64(h) + d) as u64)))
        .sum();
    assert!(on_pattern >= Rational::one() - alpha * int(3), "{on_pattern}");
}

#[test]
fn approximate_errors() {
    let nu = m(&[(-1, 1, 1, 2), (1, 1, 1, 2)]);
    assert!(matches!(
        approximate_on_disjoint(&IntervalSet::full(), &nu, &ratio(1, 4), &seq(), 1 << 20),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        approximate_on_disjoint(&IntervalSet::empty(), &m(&[(1, 1, 1, 1)]), &ratio(1, 4), &seq(), 1 << 20),
        Err(Error::Domain(_))
    ));
    match approximate_on_disjoint(&set(&[(0, 1, 5, 8)]), &nu, &ratio(1, 4), &seq(), 100) {
        Err(Error::Capacity { required, .. }) => assert!(required > 100),
        other => panic!("expected capacity error, got {other:?}"),
    }
}

#[test]
fn flatten_empty_set() {
    let cert = flatten_at(&IntervalSet::empty(), &ratio(1, 4), 3, &seq()).unwrap();
    assert!(cert.output_set.is_empty());
    assert!(param(&cert, "n") >= 3);
    assert_certified(&cert);
}

#[test]
fn flatten_half() {
    let a = set(&[(0, 1, 1, 2)]);
    let cert = flatten_at(&a, &ratio(1, 4), 4, &seq()).unwrap();
    assert_certified(&cert);
    let c = &cert.output_set;
    assert_eq!(c.measure(), a.measure());
    assert!(a.theta(c) <= ratio(1, 4));
    let law = exact_law(c, param(&cert, "n"), &seq()).unwrap().law;
    assert!(dirac_bound(&law, &ratio(1, 4)));
}

#[test]
fn flatten_two_pieces() {
    let a = set(&[(0, 1, 1, 2), (3, 4, 13, 16)]);
    let cert = flatten_at(&a, &ratio(1, 8), 1, &seq()).unwrap();
    assert_certified(&cert);
    assert_eq!(cert.output_set.measure(), a.measure());
    assert!(a.theta(&cert.output_set) <= ratio(1, 8));
}

#[test]
fn flatten_rejects_full_set() {
    assert!(matches!(flatten_at(&IntervalSet::full(), &ratio(1, 4), 1, &seq()), Err(Error::Domain(_))));
}

#[test]
fn subsequence_single_step_is_flatten() {
    let a = set(&[(0, 1, 1, 2)]);
    let cert = flatten_subsequence(&a, &ratio(1, 4), 1, &seq()).unwrap();
    assert_certified(&cert);
    let ledger = cert.ledger.as_ref().unwrap();
    assert_eq!(ledger.steps.len(), 1);
    assert_eq!(ledger.steps[0].eps_k, ratio(1, 8));
    let direct = flatten_at(&a, &ratio(1, 8), 1, &seq()).unwrap();
    assert_eq!(direct.output_set, ledger.final_set);
}

#[test]
fn subsequence_of_empty_set() {
    let cert = flatten_subsequence(&IntervalSet::empty(), &ratio(1, 4), 3, &seq()).unwrap();
    assert_certified(&cert);
    let ledger = cert.ledger.unwrap();
    assert!(ledger.final_set.is_empty());
    assert!(ledger.steps.iter().all(|s| s.theta.is_zero() && s.measure.is_zero()));
}

#[test]
fn no_targets() {
    let a0 = set(&[(1, 3, 1, 2)]);
    let cert = realize_targets(&a0, &[], &seq()).unwrap();
    assert_eq!(cert.output_set, a0);
    assert!(cert.verified.is_empty());
    assert!(cert.verify().ok());
}

#[test]
fn single_target() {
    let target = Target {
        nu: m(&[(-1, 1, 1, 2), (1, 1, 1, 2)]),
        eps: ratio(1, 3),
    };
    let cert = realize_targets(&set(&[(0, 1, 1, 2)]), &[target], &seq()).unwrap();
    assert_certified(&cert);
    assert_eq!(cert.verified.len(), 1);
}

#[test]
fn targets_capacity_names_the_target() {
    let target = Target {
        nu: m(&[(-1, 1, 1, 2), (1, 1, 1, 2)]),
        eps: ratio(1, 3),
    };
    match realize_targets(&set(&[(0, 1, 1, 2)]), &[target], &NormalizingSequence::sqrt(500)) {
        Err(Error::Capacity { message, .. }) => assert!(message.starts_with("target 1"), "{message}"),
        other => panic!("expected capacity error, got {other:?}"),
    }
}
