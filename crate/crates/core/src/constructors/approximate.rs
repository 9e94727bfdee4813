//! A small set disjoint from `A` whose normalized Birkhoff law at one time
//! `n` is close to a prescribed zero-mean law.
//!
//! Along a tower of height `n`, a base slice `F` is split into parts `F_h`
//! with relative masses `η(h)`; above each point of `F_h` the first `h + d`
//! orbit points outside `A` (within `n̄` steps) go into `B`. Most points then
//! see exactly `h + d` points of `B` in a window of length `n`.

use num_traits::{One, Signed, Zero};

use super::certificate::{ConstructionCertificate, Inputs};
use super::{a_at, ceil_u64, initial_alpha, r_u64, retryable, round_up, Params, RETRIES};
use crate::birkhoff::{sublevel_birkhoff, sublevel_measure, Mode};
use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::lattice::{discretize_at, lattice_alpha, truncation_level, CenteredLattice};
use crate::levels::{LevelView, MAX_DEPTH};
use crate::measures::{levy_le, realize_on_base, DiscreteMeasure};
use crate::rational::{floor_int, int, Rational};
use crate::sequence::NormalizingSequence;
use crate::sets::IntervalSet;
use crate::tower::rokhlin_tower;

/// Longest linear scan for `n̄` before giving up on a given `α`.
const SCALE_SCAN: u64 = 1 << 14;

/// Builds `B` with `A ∩ B = ∅`, `μ(B) ≤ eps` and the law of
/// `S_n(1_B − μ(B))/a_n` within Lévy distance `eps` of `nu`, for some `n ≤ n_cap`.
pub fn approximate_on_disjoint(
    a: &IntervalSet,
    nu: &DiscreteMeasure,
    eps: &Rational,
    seq: &NormalizingSequence,
    n_cap: u64,
) -> Result<ConstructionCertificate> {
    approximate_aligned(a, nu, eps, seq, n_cap, 1, 1)
}

/// As [`approximate_on_disjoint`], with `n ≥ n_min` and `n` a multiple of `period`.
pub(crate) fn approximate_aligned(
    a: &IntervalSet,
    nu: &DiscreteMeasure,
    eps: &Rational,
    seq: &NormalizingSequence,
    n_cap: u64,
    n_min: u64,
    period: u64,
) -> Result<ConstructionCertificate> {
    let mu_a = a.measure();
    if mu_a >= Rational::one() {
        return domain("A must have measure < 1");
    }
    if !eps.is_positive() {
        return domain("eps must be positive");
    }
    if !nu.mean().is_zero() {
        return domain(format!("target law has mean {} ≠ 0", nu.mean()));
    }
    let inputs = Inputs::Approximate {
        a: a.clone(),
        nu: nu.clone(),
        eps: eps.clone(),
        n_cap,
    };
    let zero = DiscreteMeasure::dirac(Rational::zero());
    if levy_le(&zero, nu, eps) {
        let n = round_up(n_min.max(1), period);
        if n > n_cap {
            return Err(Error::Capacity { message: "n_cap below the aligned start".into(), required: n });
        }
        let mut p = Params::default();
        p.u("degenerate", true).u("n", n);
        return ConstructionCertificate::seal(seq.clone(), inputs, p.0, IntervalSet::empty(), None);
    }

    let mut alpha = initial_alpha(eps, &mu_a);
    let mut last = String::new();
    for _ in 0..=RETRIES {
        match attempt(a, nu, &alpha, seq, n_cap, n_min, period) {
            Ok((b, params)) => match ConstructionCertificate::seal(seq.clone(), inputs.clone(), params, b, None) {
                Ok(cert) => return Ok(cert),
                Err(e) if retryable(&e) => last = e.to_string(),
                Err(e) => return Err(e),
            },
            Err(e) if retryable(&e) => last = e.to_string(),
            Err(e) => return Err(e),
        }
        alpha /= int(2);
    }
    Err(Error::Construction(format!("no certified set after {RETRIES} halvings of alpha: {last}")))
}

/// Smallest `m ≥ start` where `{S_m(1_A) ≤ m(μ(A)+α)}` has measure `> threshold`.
struct ScaleSearch<'a> {
    a: &'a IntervalSet,
    alpha: &'a Rational,
    threshold: Rational,
    found: Option<(u64, u64)>,
}

impl ScaleSearch<'_> {
    fn find(&mut self, start: u64) -> Result<u64> {
        if let Some((s, m)) = self.found {
            if s <= start && start <= m {
                return Ok(m);
            }
        }
        for m in start..start + SCALE_SCAN {
            let e = sublevel_measure(self.a, m, self.alpha, Mode::Upper, Execution::default());
            if e > self.threshold {
                self.found = Some((start, m));
                return Ok(m);
            }
        }
        Err(Error::Construction(format!("no scale n̄ in [{start}, {})", start + SCALE_SCAN)))
    }
}

/// One pass with fixed `α`; returns `B` and its parameters.
fn attempt(
    a: &IntervalSet,
    nu: &DiscreteMeasure,
    alpha: &Rational,
    seq: &NormalizingSequence,
    n_cap: u64,
    n_min: u64,
    period: u64,
) -> Result<(IntervalSet, std::collections::BTreeMap<String, String>)> {
    let mu_a = a.measure();
    let lat_alpha = lattice_alpha(alpha);
    let c = truncation_level(nu, &lat_alpha);
    let gamma = alpha / (&c + int(1));
    let free = Rational::one() - &mu_a - alpha;
    let mut search = ScaleSearch {
        a,
        alpha,
        threshold: Rational::one() - &gamma / int(2),
        found: None,
    };

    // n ≥ n̄/α, 2(a_n C + 1) ≤ αn, and n̄ depends on n through d
    let mut n = round_up(n_min.max(1), period);
    let (n_bar, d, lattice) = loop {
        if n > n_cap {
            return Err(Error::Capacity {
                message: format!("approximation needs n ≥ {n} but n_cap = {n_cap}"),
                required: n,
            });
        }
        let a_n = a_at(seq, n)?;
        let d: num_bigint::BigInt = floor_int(&(&a_n * &c)) + 1;
        let d_u: u64 = d.try_into().map_err(|_| Error::Capacity { message: "d overflow".into(), required: n })?;
        let n_bar = search.find(ceil_u64(&(r_u64(2 * d_u) / &free)).max(1))?;
        let mut next = n.max(ceil_u64(&(r_u64(n_bar) / alpha)));
        if (&a_n * &c + int(1)) * int(2) > alpha * r_u64(n) {
            next = next.max(n + 1);
        }
        let next = round_up(next, period);
        if next == n {
            break (n_bar, d_u, discretize_at(nu, &lat_alpha, &a_n)?);
        }
        n = next;
    };
    let CenteredLattice { eta, a_n, .. } = &lattice;
    if !levy_le(&eta.scale(a_n)?, nu, alpha) {
        return Err(Error::Construction("lattice law too far from target".into()));
    }

    let tower = rokhlin_tower(n, &(&gamma / int(2)))?;
    let k = tower.provenance.k;
    if k > MAX_DEPTH {
        return Err(Error::Capacity {
            message: format!("tower depth {k} exceeds {MAX_DEPTH}"),
            required: n,
        });
    }
    let frame = tower.frame();
    let q = tower.provenance.q;
    let e_set = sublevel_birkhoff(a, n_bar, alpha, Mode::Upper);
    let need = (Rational::one() - &gamma) / r_u64(n);
    let slice = |i: u64| -> Rational {
        (0..q)
            .map(|col| {
                let lo = frame.left(col * n + i);
                let hi = &lo + frame.width();
                e_set.measure_in(&lo, &hi)
            })
            .sum()
    };
    let i0 = (0..=n - n_bar)
        .find(|&i| slice(i) >= need)
        .ok_or_else(|| Error::Construction("no tower level meets E in enough mass".into()))?;

    let f = IntervalSet::union_all(
        (0..q)
            .map(|col| frame.level_set(col * n + i0).intersect(&e_set))
            .collect::<Vec<_>>()
            .iter(),
    );
    let parts = realize_on_base(&f, eta)?;
    let view = LevelView::new(a, k);
    let mut pieces = Vec::new();
    let (mut g_min, mut g_max) = (u64::MAX, 0u64);
    for col in 0..q {
        let start = col * n + i0;
        let profile = view.profile(frame, start as i64, n_bar as usize);
        for (h, part) in &parts {
            let base = frame.pull(part, start);
            if base.is_empty() {
                continue;
            }
            let g: u64 = (floor_int(h) + num_bigint::BigInt::from(d))
                .try_into()
                .map_err(|_| Error::Construction(format!("negative count for atom {h}")))?;
            g_min = g_min.min(g);
            g_max = g_max.max(g);
            for cell in &profile {
                let x = base.intersect(&cell.cell);
                if x.is_empty() {
                    continue;
                }
                let times: Vec<usize> = (0..cell.hits.len()).filter(|&t| !cell.hits[t]).take(g as usize).collect();
                if (times.len() as u64) < g {
                    return Err(Error::Construction(format!("only {} free orbit points, need {g}", times.len())));
                }
                for t in times {
                    frame.place_into((start + t as u64) as i64, &x, &mut pieces);
                }
            }
        }
    }
    let b = IntervalSet::new(pieces)?;

    let mut p = Params::default();
    p.r("alpha", alpha)
        .r("C", &c)
        .r("gamma", &gamma)
        .u("n_bar", n_bar)
        .u("n", n)
        .r("a_n", a_n)
        .u("d", d)
        .u("tower_k", k)
        .u("tower_q", q)
        .u("i0", i0)
        .r("mu_F", &f.measure())
        .u("g_min", g_min)
        .u("g_max", g_max);
    Ok((b, p.0))
}
