//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
//! Exits non-zero if any criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use birkhoff_lab::constructors::{
    approximate_on_disjoint, flatten_at, flatten_subsequence, realize_targets, ConstructionCertificate, Target,
};
use birkhoff_lab::evaluator::{exact_law, monte_carlo_kolmogorov};
use birkhoff_lab::lattice::{discretize_at, discretize_center, lattice_alpha, lattice_n0};
use birkhoff_lab::manifest::{Outputs, RunManifest};
use birkhoff_lab::measures::{dirac_bound, levy_distance, levy_le};
use birkhoff_lab::odometer::odometer_image;
use birkhoff_lab::rational::{dyadic, int, ratio};
use birkhoff_lab::tower::{exact_dyadic_tower, rokhlin_tower};
use birkhoff_lab::{DiscreteMeasure, IntervalSet, NormalizingSequence, Rational};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_901;
const LNOT_INSTANCES: usize = 500;
const LEVY_TOL_BITS: u32 = 10;
const KOLMOGOROV_TOL: f64 = 0.02;
const MC_SAMPLES: usize = 100_000;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn m(raw: &[(i64, i64, i64, i64)]) -> DiscreteMeasure {
    DiscreteMeasure::from_ratios(raw).unwrap()
}

fn set(raw: &[(i64, i64, i64, i64)]) -> IntervalSet {
    IntervalSet::from_ratios(raw).unwrap()
}

fn claims_hold(cert: &ConstructionCertificate) -> Result<(), String> {
    let bad: Vec<_> = cert.verified.iter().filter(|c| !c.holds).map(|c| c.id.clone()).collect();
    ensure(bad.is_empty(), || format!("false claims {bad:?}"))
}

/// Serializes into a manifest, parses it back and re-verifies from scratch.
fn manifest_round_trip(command: &str, cert: &ConstructionCertificate) -> Result<String, String> {
    let manifest = RunManifest::new(
        command,
        serde_json::json!({}),
        Outputs::Certificate {
            certificate: Box::new(cert.clone()),
        },
    );
    let json = manifest.to_json();
    let back = RunManifest::from_json(&json).map_err(|e| e.to_string())?;
    let report = back.verify();
    ensure(report.ok(), || format!("verify failed: {:?}", report.failures))?;
    Ok(json)
}

fn lnot() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let tol = dyadic(LEVY_TOL_BITS);
    for i in 0..LNOT_INSTANCES {
        // (i) conditioning costs at most the removed mass
        let nu = common::random_measure(&mut rng, 6);
        let lo = ratio(rng.gen_range(-24..=24), 8);
        let hi = &lo + ratio(rng.gen_range(0..=24), 8);
        let b = vec![(lo, hi)];
        if let Ok(cond) = nu.condition(&b) {
            let outside: Rational = nu
                .atoms()
                .iter()
                .filter(|(v, _)| !(b[0].0 <= *v && *v <= b[0].1))
                .map(|(_, w)| w.clone())
                .sum();
            ensure(levy_le(&cond, &nu, &outside), || format!("(i) instance {i}"))?;
        }
        // (ii) scaling by x ≥ 1 does not increase the distance
        let eta = common::random_measure(&mut rng, 6);
        let (_, d) = levy_distance(&nu, &eta, &tol).unwrap();
        let x = ratio(rng.gen_range(4..=40), 4);
        ensure(levy_le(&nu.scale(&x).unwrap(), &eta.scale(&x).unwrap(), &d), || format!("(ii) instance {i}"))?;
        // (iii) adding g costs at most d(law g, δ₀)
        let f = common::random_step(&mut rng, 6);
        let g = common::random_step(&mut rng, 6);
        let target = common::random_measure(&mut rng, 6);
        let (_, h1) = levy_distance(&f.law(), &target, &tol).unwrap();
        let (_, h2) = levy_distance(&g.law(), &DiscreteMeasure::dirac(Rational::zero()), &tol).unwrap();
        ensure(levy_le(&f.sum_law(&g), &target, &(h1 + h2)), || format!("(iii) instance {i}"))?;
        // (iv) tail characterization of the distance to δ₀
        let a = ratio(rng.gen_range(0..=40), 16);
        let zero = DiscreteMeasure::dirac(Rational::zero());
        ensure(dirac_bound(&nu, &a) == levy_le(&nu, &zero, &a), || format!("(iv) instance {i}"))?;
    }
    Ok(format!("{LNOT_INSTANCES} instances each of (i)–(iv)"))
}

fn lsupport() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let seq = NormalizingSequence::sqrt(1 << 20);
    let mut checked = 0;
    for _ in 0..20 {
        let atoms = rng.gen_range(2..=6);
        let nu = common::zero_mean_measure(&mut rng, atoms);
        for eps in [ratio(1, 4), ratio(1, 10)] {
            let n0 = lattice_n0(&seq, &lattice_alpha(&eps)).unwrap();
            for n in [n0, n0 + 7] {
                let l = discretize_center(&nu, &eps, &seq, n).unwrap();
                let half = &l.a_n * &l.c;
                ensure(l.eta.mean().is_zero(), || "mean not zero".into())?;
                for (v, _) in l.eta.atoms() {
                    ensure(v.is_integer() && v.abs() <= half, || format!("atom {v} outside lattice"))?;
                }
                ensure(levy_le(&l.eta.scale(&l.a_n).unwrap(), &nu, &eps), || format!("levy fails at n = {n}"))?;
                checked += 1;
            }
        }
    }
    let worked = discretize_at(&m(&[(-1, 1, 1, 4), (1, 3, 3, 4)]), &lattice_alpha(&ratio(1, 4)), &int(4)).unwrap();
    ensure(worked.eta == m(&[(-4, 1, 4, 17), (1, 1, 12, 17), (4, 1, 1, 17)]), || {
        format!("worked example gave {:?}", worked.eta)
    })?;
    Ok(format!("{checked} discretizations + worked recentering example"))
}

fn system() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for _ in 0..200 {
        let a = common::random_set(&mut rng, 4);
        let i = rng.gen_range(-64..=64);
        let img = odometer_image(&a, i);
        ensure(img.measure() == a.measure(), || format!("measure changed under T^{i}"))?;
        ensure(odometer_image(&img, -i) == a, || format!("T^{i} not inverted"))?;
    }
    for k in 0..=12 {
        ensure(exact_dyadic_tower(k).is_partition(), || format!("exact tower {k}"))?;
    }
    let mut towers = 0;
    for gamma in [ratio(1, 4), ratio(1, 16)] {
        for n in 1..=200 {
            let t = rokhlin_tower(n, &gamma).unwrap();
            ensure(t.junk.measure() <= gamma && t.is_partition(), || format!("tower n = {n}, γ = {gamma}"))?;
            towers += 1;
        }
    }
    Ok(format!("200 round trips, 13 exact towers, {towers} Rokhlin towers"))
}

fn evaluator() -> Outcome {
    let seq = NormalizingSequence::sqrt(1 << 10);
    let half = exact_law(&set(&[(0, 1, 1, 2)]), 2, &seq).unwrap();
    ensure(half.law == DiscreteMeasure::dirac(Rational::zero()), || "[0,1/2) at n = 2".into())?;
    // the hand-derived ±1/4 uses a_2 = 2; rescale from a_2 = ⌊√2⌋₂₀
    let quarter = exact_law(&set(&[(0, 1, 1, 4)]), 2, &seq).unwrap();
    let rescaled = quarter.law.scale(&(int(2) / &quarter.a_n)).unwrap();
    ensure(rescaled == m(&[(-1, 4, 1, 2), (1, 4, 1, 2)]), || format!("[0,1/4) gave {rescaled:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    for _ in 0..200 {
        let b = common::random_set(&mut rng, 4);
        let n = rng.gen_range(1..=64);
        let law = exact_law(&b, n, &seq).unwrap().law;
        ensure(law.mean().is_zero(), || format!("mean of {b:?} at n = {n}"))?;
    }
    let mut worst: f64 = 0.0;
    for s in 0..5 {
        let b = common::random_set(&mut rng, 4);
        let n = rng.gen_range(1..=64);
        let d = monte_carlo_kolmogorov(&b, n, MC_SAMPLES, SEED + s);
        worst = worst.max(d);
    }
    ensure(worst <= KOLMOGOROV_TOL, || format!("Monte-Carlo Kolmogorov {worst:.4}"))?;
    Ok(format!("examples exact, 200 zero means, MC Kolmogorov max {worst:.4} ≤ {KOLMOGOROV_TOL}"))
}

fn lem() -> Outcome {
    let a = set(&[(0, 1, 5, 8)]);
    let eps = ratio(1, 4);
    let cert = approximate_on_disjoint(&a, &m(&[(-1, 1, 1, 2), (1, 1, 1, 2)]), &eps, &NormalizingSequence::sqrt(20_000), 20_000)
        .map_err(|e| e.to_string())?;
    claims_hold(&cert)?;
    let b = &cert.output_set;
    ensure(b.is_disjoint_from(&a), || "B meets A".into())?;
    ensure(b.measure() <= eps, || "μ(B) > 1/4".into())?;
    manifest_round_trip("construct approximate", &cert)?;
    let levy = &cert.claim("levy").unwrap().quantities["levy_hi"];
    Ok(format!("n = {}, μ(B) = {}, Lévy ≤ {levy}", cert.parameters["n"], b.measure()))
}

fn correct() -> Outcome {
    let a = set(&[(0, 1, 1, 2)]);
    let eps = ratio(1, 4);
    let seq = NormalizingSequence::sqrt(1 << 24);
    let cert = flatten_at(&a, &eps, 4, &seq).map_err(|e| e.to_string())?;
    claims_hold(&cert)?;
    let c = &cert.output_set;
    let n: u64 = cert.parameters["n"].parse().unwrap();
    ensure(n >= 4, || "n < N".into())?;
    ensure(a.theta(c) <= eps, || "Θ(A,C) > 1/4".into())?;
    ensure(c.measure() == a.measure(), || "μ(C) ≠ μ(A)".into())?;
    ensure(dirac_bound(&exact_law(c, n, &seq).unwrap().law, &eps), || "tail bound fails".into())?;
    manifest_round_trip("construct flatten", &cert)?;
    Ok(format!("n = {n}, Θ = {}, M = {}", a.theta(c), cert.parameters["M"]))
}

fn thelemma() -> Outcome {
    let a = set(&[(0, 1, 1, 2)]);
    let eps = ratio(1, 4);
    let seq = NormalizingSequence::sqrt(1 << 24);
    let cert = flatten_subsequence(&a, &eps, 3, &seq).map_err(|e| e.to_string())?;
    claims_hold(&cert)?;
    let ledger = cert.ledger.as_ref().ok_or("missing ledger")?;
    ensure(ledger.steps.len() == 3, || "ledger length".into())?;
    let mut expect = &eps / int(2);
    let mut total = Rational::zero();
    for w in ledger.steps.windows(2) {
        ensure(w[0].n_k < w[1].n_k, || "times not increasing".into())?;
    }
    for s in &ledger.steps {
        ensure(s.eps_k == expect, || format!("ε_{} off recursion", s.k))?;
        total += &s.eps_k;
        expect = &s.eps_k / int(2 * s.n_k as i64);
        let law = exact_law(&ledger.final_set, s.n_k, &seq).unwrap().law;
        ensure(levy_le(&law, &DiscreteMeasure::dirac(Rational::zero()), &eps), || format!("δ₀ bound at n_{}", s.k))?;
    }
    ensure(total <= eps, || "Σ ε_k > eps".into())?;
    manifest_round_trip("construct flatten-seq", &cert)?;
    let times: Vec<u64> = ledger.steps.iter().map(|s| s.n_k).collect();
    Ok(format!("n_k = {times:?}, Σε_k = {total}"))
}

fn capstone_targets() -> Vec<Target> {
    vec![
        Target {
            nu: m(&[(-1, 1, 1, 2), (1, 1, 1, 2)]),
            eps: ratio(1, 3),
        },
        Target {
            nu: m(&[(-1, 2, 2, 3), (1, 1, 1, 3)]),
            eps: ratio(1, 3),
        },
    ]
}

fn capstone_manifest() -> Result<String, String> {
    let targets = capstone_targets();
    let seq = NormalizingSequence::sqrt(1 << 26);
    let cert = realize_targets(&set(&[(0, 1, 1, 2)]), &targets, &seq).map_err(|e| e.to_string())?;
    claims_hold(&cert)?;
    let n1: u64 = cert.parameters["n_1"].parse().unwrap();
    let n2: u64 = cert.parameters["n_2"].parse().unwrap();
    ensure(n1 < n2, || "times not increasing".into())?;
    for (j, t) in targets.iter().enumerate() {
        let n = [n1, n2][j];
        let law = exact_law(&cert.output_set, n, &seq).unwrap().law;
        ensure(levy_le(&law, &t.nu, &t.eps), || format!("target {} fails", j + 1))?;
    }
    manifest_round_trip("construct targets", &cert)
}

fn theorem(store: &mut Option<String>) -> Outcome {
    let json = capstone_manifest()?;
    let back = RunManifest::from_json(&json).unwrap();
    let Outputs::Certificate { certificate } = &back.outputs else {
        return Err("not a certificate".into());
    };
    let summary = format!(
        "n₁ = {}, n₂ = {}, Lévy ≤ {} / {}",
        certificate.parameters["n_1"],
        certificate.parameters["n_2"],
        certificate.claim("levy_1").unwrap().quantities["levy_hi"],
        certificate.claim("levy_2").unwrap().quantities["levy_hi"],
    );
    *store = Some(json);
    Ok(summary)
}

fn determinism(first: &Option<String>) -> Outcome {
    let first = first.as_ref().ok_or("criterion 8 produced no manifest")?;
    let second = capstone_manifest()?;
    ensure(*first == second, || "manifests differ".into())?;
    Ok(format!("{} identical bytes", second.len()))
}

fn run(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let elapsed = start.elapsed();
    let (ok, detail) = match result {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; too slow")),
        Err(e) => (false, e),
    };
    println!(
        "criterion {id} [{name}]: {} ({:.1}s / {}s) {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut manifest = None;
    let results = [
        run(1, "Lnot", secs(60), lnot),
        run(2, "Lsupport", secs(30), lsupport),
        run(3, "system", secs(60), system),
        run(4, "evaluator", secs(60), evaluator),
        run(5, "lem", secs(120), lem),
        run(6, "correct", secs(120), correct),
        run(7, "thelemma", secs(300), thelemma),
        run(8, "theorem", secs(600), || theorem(&mut manifest)),
        run(9, "determinism", secs(600), || determinism(&manifest)),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
