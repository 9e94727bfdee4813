//! Flattening: a nearby set of the same measure whose centered Birkhoff sums
//! at time `n` stay small, so the normalized law is close to `δ₀`.
//!
//! A tower of height `Mn` is cut into blocks of length `M`. In every block the
//! number of visits is pushed into `[Mμ−1, Mμ+1]` by removing or adding the
//! earliest points, keeping the running total within one of `bMμ`. A final
//! patch on the top level and the junk restores the exact measure.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::certificate::{ConstructionCertificate, FlattenLedger, Inputs, LedgerStep};
use super::{a_at, ceil_u64, initial_alpha, r_u64, retryable, round_up, Params, RETRIES};
use crate::birkhoff::{sublevel_birkhoff, Mode};
use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::levels::{LevelView, Profile, MAX_DEPTH};
use crate::rational::{ceil_int, floor_int, int, Rational};
use crate::sequence::NormalizingSequence;
use crate::sets::IntervalSet;
use crate::tower::{rokhlin_tower, TowerFrame};

const SCALE_SCAN: u64 = 1 << 14;
/// Consecutive candidate times tried before doubling.
const LINEAR_TRIES: u64 = 8;

fn profiles(view: &LevelView, frame: TowerFrame, starts: &[u64], len: u64) -> Vec<Vec<Profile>> {
    Execution::default().map(starts, |&s| view.profile(frame, s as i64, len as usize))
}

/// Largest spread `max_b D_b − min_b D_b`, `D_b = S_{bM}(1_C) − bMμ(C)`,
/// `b = 0..=blocks`, over the columns `c·M·blocks + k0`, `c < q`, of the
/// exact tower of depth `k`.
pub fn block_spread(set: &IntervalSet, k: u32, q: u64, block: u64, blocks: u64, k0: u64) -> Result<Rational> {
    let height = block
        .checked_mul(blocks)
        .filter(|h| *h > 0 && k <= MAX_DEPTH && k0 < block)
        .ok_or_else(|| Error::Validation("invalid block layout".into()))?;
    if q.checked_mul(height).is_none_or(|t| t > 1u64 << k) {
        return Err(Error::Validation("columns exceed the tower".into()));
    }
    let mu = set.measure();
    let view = LevelView::new(set, k);
    let starts: Vec<u64> = (0..q).map(|c| c * height + k0).collect();
    let mut worst = Rational::zero();
    for column in profiles(&view, view.frame(), &starts, height) {
        for p in column {
            let (mut lo, mut hi) = (Rational::zero(), Rational::zero());
            let mut count = 0u64;
            for b in 1..=blocks {
                let range = ((b - 1) * block) as usize..(b * block) as usize;
                count += p.hits[range].iter().filter(|h| **h).count() as u64;
                let d = r_u64(count) - r_u64(b * block) * &mu;
                if d < lo {
                    lo = d;
                } else if d > hi {
                    hi = d;
                }
            }
            worst = worst.max(hi - lo);
        }
    }
    Ok(worst)
}

/// Per-block target counts: each in `[Mμ−1, Mμ+1] ∩ [0, M]`, running total
/// within one of `(b+1)Mμ`, as close as possible to the current count.
fn block_targets(counts: &[u64], m: u64, mu: &Rational) -> Option<Vec<u64>> {
    let mm = r_u64(m) * mu;
    let one = Rational::one();
    let mut prev = 0u64;
    let mut out = Vec::with_capacity(counts.len());
    for (b, &c) in counts.iter().enumerate() {
        let drift = r_u64(b as u64 + 1) * &mm - r_u64(prev);
        let lo = (&mm - &one).max(&drift - &one);
        let hi = (&mm + &one).min(&drift + &one);
        let lo = ceil_int(&lo).max(BigInt::zero()).to_u64()?;
        let hi = floor_int(&hi).min(BigInt::from(m)).to_u64()?;
        if lo > hi {
            return None;
        }
        let t = c.clamp(lo, hi);
        prev += t;
        out.push(t);
    }
    Some(out)
}

/// Times to toggle in one profile cell.
fn surgery_times(hits: &[bool], m: u64, mu: &Rational) -> Result<Vec<usize>> {
    let m = m as usize;
    let counts: Vec<u64> = hits.chunks(m).map(|c| c.iter().filter(|h| **h).count() as u64).collect();
    let targets = block_targets(&counts, m as u64, mu)
        .ok_or_else(|| Error::Construction("no admissible block count".into()))?;
    let mut out = Vec::new();
    for (b, (&have, &want)) in counts.iter().zip(&targets).enumerate() {
        let block = &hits[b * m..(b + 1) * m];
        let (member, k) = if want < have {
            (true, have - want)
        } else {
            (false, want - have)
        };
        out.extend(
            (0..m)
                .filter(|&t| block[t] == member)
                .take(k as usize)
                .map(|t| b * m + t),
        );
    }
    Ok(out)
}

/// Candidate times `≥ n_min`, multiples of `period`: a few consecutive ones, then doubling.
fn candidate_times(n_min: u64, period: u64, horizon: u64) -> Vec<u64> {
    let first = round_up(n_min.max(1), period);
    let mut out: Vec<u64> = (0..LINEAR_TRIES).map(|i| first + i * period).collect();
    let mut n = *out.last().unwrap();
    while n <= horizon / 2 {
        n = round_up(n * 2, period);
        out.push(n);
    }
    out.retain(|&n| n <= horizon);
    out
}

/// `C` with `Θ(A,C) ≤ eps`, `μ(C) = μ(A)` and the law at some `n ≥ N`
/// within `eps` of `δ₀` in the tail sense.
pub fn flatten_at(a: &IntervalSet, eps: &Rational, n_min: u64, seq: &NormalizingSequence) -> Result<ConstructionCertificate> {
    flatten_aligned(a, eps, n_min, seq, 1)
}

pub(crate) fn flatten_aligned(
    a: &IntervalSet,
    eps: &Rational,
    n_min: u64,
    seq: &NormalizingSequence,
    period: u64,
) -> Result<ConstructionCertificate> {
    let mu = a.measure();
    if mu >= Rational::one() {
        return domain("A must have measure < 1");
    }
    if !eps.is_positive() {
        return domain("eps must be positive");
    }
    let inputs = Inputs::FlattenAt {
        a: a.clone(),
        eps: eps.clone(),
        n_min,
    };
    let mut alpha = initial_alpha(eps, &mu);
    let mut last: Option<Error> = None;
    for _ in 0..=RETRIES {
        let m = match block_length(a, &alpha) {
            Ok(m) => m,
            Err(e) if retryable(&e) => {
                last = Some(e);
                alpha /= int(2);
                continue;
            }
            Err(e) => return Err(e),
        };
        let g = sublevel_birkhoff(a, m, &alpha, Mode::TwoSided);
        for n in candidate_times(n_min, period, seq.horizon) {
            match surgery(a, &g, &alpha, m, n, seq) {
                Ok((c, params)) => match ConstructionCertificate::seal(seq.clone(), inputs.clone(), params, c, None) {
                    Ok(cert) => return Ok(cert),
                    Err(e) if retryable(&e) => last = Some(e),
                    Err(e) => return Err(e),
                },
                Err(Error::Capacity { .. }) => break,
                Err(e) if retryable(&e) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        alpha /= int(2);
    }
    match last {
        Some(Error::Construction(msg)) => Err(Error::Construction(format!(
            "no certified flattening after {RETRIES} halvings of alpha: {msg}"
        ))),
        _ => Err(Error::Capacity {
            message: "flattening tower exceeds the supported depth".into(),
            required: n_min,
        }),
    }
}

/// Smallest `M ≥ (1−α)/α` with `μ{|S_M(1_A) − Mμ| ≤ αM} > 1 − α`.
fn block_length(a: &IntervalSet, alpha: &Rational) -> Result<u64> {
    let start = ceil_u64(&((Rational::one() - alpha) / alpha)).max(1);
    let threshold = Rational::one() - alpha;
    for m in start..start + SCALE_SCAN {
        let g = crate::birkhoff::sublevel_measure(a, m, alpha, Mode::TwoSided, Execution::default());
        if g > threshold {
            return Ok(m);
        }
    }
    Err(Error::Construction(format!("no block length in [{start}, {})", start + SCALE_SCAN)))
}

fn surgery(
    a: &IntervalSet,
    g: &IntervalSet,
    alpha: &Rational,
    m: u64,
    n: u64,
    seq: &NormalizingSequence,
) -> Result<(IntervalSet, BTreeMap<String, String>)> {
    let a_n = a_at(seq, n)?;
    let height = m * n;
    let tower = rokhlin_tower(height, alpha)?;
    let k = tower.provenance.k;
    if k > MAX_DEPTH {
        return Err(Error::Capacity {
            message: format!("tower depth {k} exceeds {MAX_DEPTH}"),
            required: n,
        });
    }
    let q = tower.provenance.q;
    let frame = tower.frame();
    let mu = a.measure();

    // k0: the block phase whose starting levels leave G least often
    let bound = alpha * int(2) / r_u64(m);
    let outside = |k0: u64| -> Rational {
        let mut total = Rational::zero();
        for c in 0..q {
            for j in 0..n {
                let lo = frame.left(c * height + j * m + k0);
                let hi = &lo + frame.width();
                total += frame.width() - g.measure_in(&lo, &hi);
            }
        }
        total
    };
    let k0 = (0..m)
        .find(|&k0| outside(k0) <= bound)
        .ok_or_else(|| Error::Construction("no block phase k0".into()))?;

    let view = LevelView::new(a, k);
    let starts: Vec<u64> = (0..q).map(|c| c * height + k0).collect();
    let mut toggles = Vec::new();
    for (start, column) in starts.iter().zip(profiles(&view, frame, &starts, height)) {
        for p in column {
            for t in surgery_times(&p.hits, m, &mu)? {
                frame.place_into((start + t as u64) as i64, &p.cell, &mut toggles);
            }
        }
    }
    let c0 = a.symdiff(&IntervalSet::new(toggles)?);

    // restore μ(C) = μ(A) on the junk and the top levels
    let diff = c0.measure() - &mu;
    let mut c = c0.clone();
    let mut top = 0u64;
    if !diff.is_zero() {
        let mut patched = false;
        while top < m && !patched {
            top += 1;
            let region = IntervalSet::union_all(
                std::iter::once(tower.junk.clone())
                    .chain((0..q).flat_map(|col| (0..top).map(move |i| (col, i))).map(|(col, i)| {
                        frame.level_set(col * height + height - 1 - i)
                    }))
                    .collect::<Vec<_>>()
                    .iter(),
            );
            let pool = if diff.is_positive() {
                c0.intersect(&region)
            } else {
                region.minus(&c0)
            };
            if pool.measure() >= diff.abs() {
                let (head, _) = pool.split_at_mass(&diff.abs())?;
                c = if diff.is_positive() { c0.minus(&head) } else { c0.union(&head) };
                patched = true;
            }
        }
        if !patched {
            return Err(Error::Construction("measure patch does not fit".into()));
        }
    }

    let mut p = Params::default();
    p.r("alpha", alpha)
        .u("M", m)
        .u("n", n)
        .r("a_n", &a_n)
        .u("tower_k", k)
        .u("tower_q", q)
        .u("k0", k0)
        .u("patch_levels", top)
        .r("patch_mass", &diff)
        .u("proof_scale_met", r_u64(m) / &a_n <= *alpha);
    Ok((c, p.0))
}

/// Finitized iteration `ε₁ = eps/2`, `ε_{k+1} = ε_k/(2n_k)`, flattening at
/// strictly increasing times; the final set is checked against `δ₀` at every `n_k`.
pub fn flatten_subsequence(
    a: &IntervalSet,
    eps: &Rational,
    steps: u64,
    seq: &NormalizingSequence,
) -> Result<ConstructionCertificate> {
    if a.measure() >= Rational::one() {
        return domain("A must have measure < 1");
    }
    if steps == 0 {
        return domain("need at least one step");
    }
    if !eps.is_positive() {
        return domain("eps must be positive");
    }
    let mut eps_k = eps / int(2);
    let mut current = a.clone();
    let mut n_prev = 0u64;
    let mut rows = Vec::new();
    for k in 1..=steps {
        let cert = flatten_at(&current, &eps_k, n_prev + 1, seq)?;
        let n_k: u64 = cert.parameter("n").and_then(|s| s.parse().ok()).expect("flatten records n");
        let next = cert.output_set;
        rows.push(LedgerStep {
            k,
            eps_k: eps_k.clone(),
            n_k,
            intervals: next.len(),
            measure: next.measure(),
            theta: current.theta(&next),
        });
        eps_k = &eps_k / r_u64(2 * n_k);
        n_prev = n_k;
        current = next;
    }
    let mut p = Params::default();
    p.u("K", steps);
    let ledger = FlattenLedger {
        steps: rows,
        final_set: current.clone(),
    };
    ConstructionCertificate::seal(
        seq.clone(),
        Inputs::FlattenSeq {
            a: a.clone(),
            eps: eps.clone(),
            steps,
        },
        p.0,
        current,
        Some(ledger),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn targets_track_running_total() {
        let mu = ratio(1, 2);
        // five visits per block of 5 is too many; running total stays near 2.5b
        let t = block_targets(&[5, 5, 5, 0], 5, &mu).unwrap();
        let mut prev = 0i64;
        for (b, c) in t.iter().enumerate() {
            prev += *c as i64;
            let drift = Rational::from_integer(prev.into()) - ratio(5 * (b as i64 + 1), 2);
            assert!(drift.abs() <= Rational::one());
        }
        assert_eq!(t, vec![3, 3, 2, 2]);
    }

    #[test]
    fn surgery_uses_earliest_points() {
        let hits = [true, true, true, false, false, false];
        let times = surgery_times(&hits, 3, &ratio(1, 2)).unwrap();
        // block 0: 3 visits, target 2 → drop t = 0; block 1: 0 visits, target 1 → add t = 3
        assert_eq!(times, vec![0, 3]);
    }

    #[test]
    fn candidate_schedule() {
        assert_eq!(candidate_times(4, 1, 40), vec![4, 5, 6, 7, 8, 9, 10, 11, 22]);
        assert_eq!(candidate_times(3, 4, 100), vec![4, 8, 12, 16, 20, 24, 28, 32, 64]);
    }
}
