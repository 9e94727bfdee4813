//! One set whose normalized Birkhoff laws approach several targets at
//! increasing times.
//!
//! Per target: flatten the current set if its law at the next time is not
//! already near `δ₀`, then add a small disjoint set realizing the target.
//! Each time is a multiple of the previous tower period, so earlier pieces
//! contribute an almost constant count over the new window.

use num_traits::{One, Zero};

use super::approximate::approximate_aligned;
use super::certificate::{ConstructionCertificate, Inputs, Target};
use super::flatten::flatten_aligned;
use super::{r_u64, Params};
use crate::error::{domain, Error, Result};
use crate::evaluator::exact_law;
use crate::measures::dirac_bound;
use crate::rational::{self, int, Rational};
use crate::sequence::NormalizingSequence;
use crate::sets::IntervalSet;

/// Share of each target's budget reserved for the flat part.
const FLAT_SHARE: i64 = 8;

fn blocking(j: usize, e: Error) -> Error {
    match e {
        Error::Capacity { message, required } => Error::Capacity {
            message: format!("target {j}: {message}"),
            required,
        },
        Error::Construction(m) => Error::Construction(format!("target {j}: {m}")),
        other => other,
    }
}

fn param_u64(cert: &ConstructionCertificate, key: &str) -> Option<u64> {
    cert.parameter(key).and_then(|s| s.parse().ok())
}

/// Builds `A*` with the law at `n_j` within `eps_j` of `nu_j` for every target.
pub fn realize_targets(a0: &IntervalSet, targets: &[Target], seq: &NormalizingSequence) -> Result<ConstructionCertificate> {
    if a0.measure() >= Rational::one() {
        return domain("A0 must have measure < 1");
    }
    for (j, t) in targets.iter().enumerate() {
        if !t.nu.mean().is_zero() {
            return domain(format!("target {} has mean {} ≠ 0", j + 1, t.nu.mean()));
        }
        if t.eps <= Rational::zero() {
            return domain(format!("target {} has non-positive eps", j + 1));
        }
    }
    let mut current = a0.clone();
    let mut period = 1u64;
    let mut n_prev = 0u64;
    let mut p = Params::default();
    let mut stages: Vec<(u64, IntervalSet)> = Vec::new();
    for (idx, t) in targets.iter().enumerate() {
        let j = idx + 1;
        let beta = &t.eps / int(FLAT_SHARE);
        let mut n_start = super::round_up(n_prev + 1, period);
        let law = exact_law(&current, n_start, seq).map_err(|e| blocking(j, e))?;
        let flattened = !dirac_bound(&law.law, &beta);
        if flattened {
            let cert = flatten_aligned(&current, &beta, n_start, seq, period).map_err(|e| blocking(j, e))?;
            n_start = param_u64(&cert, "n").expect("flatten records n");
            current = cert.output_set;
        }
        let approx_eps = &t.eps - &beta;
        let cert = approximate_aligned(&current, &t.nu, &approx_eps, seq, seq.horizon, n_start, period)
            .map_err(|e| blocking(j, e))?;
        let n_j = param_u64(&cert, "n").expect("approximation records n");
        if let Some(k) = param_u64(&cert, "tower_k") {
            period = 1u64 << k;
        }
        p.u(&format!("n_{j}"), n_j)
            .u(&format!("flattened_{j}"), flattened)
            .r(&format!("flat_budget_{j}"), &beta)
            .r(&format!("mu_B_{j}"), &cert.output_set.measure())
            .u(&format!("period_{j}"), period);
        if let Some(alpha) = cert.parameter("alpha") {
            p.0.insert(format!("alpha_{j}"), alpha.to_string());
        }
        current = current.union(&cert.output_set);
        stages.push((n_j, current.clone()));
        n_prev = n_j;
    }
    let mut cert = ConstructionCertificate::seal(
        seq.clone(),
        Inputs::Targets {
            a0: a0.clone(),
            targets: targets.to_vec(),
        },
        p.0,
        current.clone(),
        None,
    )?;
    // sufficient condition from the density argument; reported, not required
    for (idx, (n_j, stage)) in stages.iter().enumerate() {
        let j = idx + 1;
        let shift = r_u64(*n_j) * stage.theta(&current);
        let met = shift <= targets[idx].eps;
        cert.informational.insert(format!("n_theta_{j}"), rational::to_string(&shift));
        cert.informational.insert(format!("budget_condition_{j}"), met.to_string());
    }
    Ok(cert)
}
