//! Discretize a zero-mean law onto the integer lattice `[−a_n C, a_n C] ∩ ℤ`
//! and recenter it to exact mean zero.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::measures::DiscreteMeasure;
use crate::rational::{self, dyadic, floor_int, int, Rational};
use crate::sequence::NormalizingSequence;

const REFINE_STEPS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeProvenance {
    pub tau: DiscreteMeasure,
    pub eta_prime: DiscreteMeasure,
    #[serde(with = "rational::serde_str")]
    pub p: Rational,
    /// Sign of the mean of `eta_prime` (`0` when no recentering was needed).
    pub s: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenteredLattice {
    pub eta: DiscreteMeasure,
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
    pub n0: u64,
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    #[serde(with = "rational::serde_str")]
    pub a_n: Rational,
    pub provenance: LatticeProvenance,
}

impl CenteredLattice {
    /// `⌊a_n C⌋`, the half-width of the support.
    pub fn half_width(&self) -> BigInt {
        floor_int(&(&self.a_n * &self.c))
    }
}

/// `α = min(ε/6, 1/2 − 2^-10)`.
pub fn lattice_alpha(eps: &Rational) -> Rational {
    let cap = rational::ratio(1, 2) - dyadic(10);
    (eps / int(6)).min(cap)
}

/// `∫_{|x|>c} |x| dν`.
fn tail_moment(nu: &DiscreteMeasure, c: &Rational) -> Rational {
    nu.atoms()
        .iter()
        .filter(|(v, _)| v.abs() > *c)
        .map(|(v, m)| v.abs() * m)
        .sum()
}

/// Smallest `C ≥ 1` on the doubling-then-bisection grid with tail first
/// moment at most `alpha`.
pub fn truncation_level(nu: &DiscreteMeasure, alpha: &Rational) -> Rational {
    let mut hi = int(1);
    if tail_moment(nu, &hi) <= *alpha {
        return hi;
    }
    while tail_moment(nu, &hi) > *alpha {
        hi *= int(2);
    }
    let mut lo = &hi / int(2);
    for _ in 0..REFINE_STEPS {
        let mid = (&lo + &hi) / int(2);
        if tail_moment(nu, &mid) <= *alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Discretization for a given `a_n`, with `α` and the truncation already fixed.
pub fn discretize_at(nu: &DiscreteMeasure, alpha: &Rational, a_n: &Rational) -> Result<CenteredLattice> {
    if !nu.mean().is_zero() {
        return domain(format!("law has mean {} ≠ 0", nu.mean()));
    }
    let c = truncation_level(nu, alpha);
    let tau = nu.condition(&[(-&c, c.clone())])?;
    let m = floor_int(&(a_n * &c));
    let mr = Rational::from_integer(m.clone());
    let bins = tau.atoms().iter().map(|(v, w)| {
        // v = −C lands one bin below −⌊a_n C⌋ when a_n C is not an integer
        let k = Rational::from_integer(floor_int(&(v * a_n))).max(-&mr);
        (k, w.clone())
    });
    let eta_prime = DiscreteMeasure::new(bins.collect())?;
    let e = eta_prime.mean();
    let (eta, p, s) = if e.is_zero() {
        (eta_prime.clone(), Rational::one(), 0)
    } else {
        let s: i8 = if e.is_positive() { 1 } else { -1 };
        let p = Rational::one() + e.abs() / &mr;
        let target = if s > 0 { -&mr } else { mr.clone() };
        let mut atoms: Vec<_> = eta_prime
            .atoms()
            .iter()
            .map(|(v, w)| (v.clone(), w / &p))
            .collect();
        atoms.push((target, (&p - Rational::one()) / &p));
        (DiscreteMeasure::new(atoms)?, p, s)
    };
    debug_assert!(eta.mean().is_zero());
    Ok(CenteredLattice {
        eta,
        c,
        n0: 0,
        alpha: alpha.clone(),
        a_n: a_n.clone(),
        provenance: LatticeProvenance { tau, eta_prime, p, s },
    })
}

/// Minimal `n₀` with `1/a_{n₀} < α`.
pub fn lattice_n0(seq: &NormalizingSequence, alpha: &Rational) -> Result<u64> {
    let bound = Rational::one() / alpha;
    seq.first_above(&bound).ok_or_else(|| Error::Capacity {
        message: format!("a_n never exceeds {bound} within horizon {}", seq.horizon),
        required: seq.horizon + 1,
    })
}

/// The full discretize-and-center step for time `n ≥ n₀`.
pub fn discretize_center(
    nu: &DiscreteMeasure,
    eps: &Rational,
    seq: &NormalizingSequence,
    n: u64,
) -> Result<CenteredLattice> {
    if !eps.is_positive() {
        return domain("eps must be positive");
    }
    if !nu.mean().is_zero() {
        return domain(format!("law has mean {} ≠ 0", nu.mean()));
    }
    let alpha = lattice_alpha(eps);
    let n0 = lattice_n0(seq, &alpha)?;
    if n < n0 {
        return Err(Error::Capacity {
            message: format!("discretization needs n ≥ n0 = {n0}"),
            required: n0,
        });
    }
    let mut out = discretize_at(nu, &alpha, &seq.get(n)?)?;
    out.n0 = n0;
    Ok(out)
}

/// Symmetric `m`-point quantile discretization of `N(0, σ²)` on the grid
/// `2^-20`; symmetric atoms make the mean exactly zero.
pub fn gaussian_lattice(m: usize, sigma: &Rational) -> Result<DiscreteMeasure> {
    use statrs::distribution::{ContinuousCDF, Normal};
    if m == 0 || !sigma.is_positive() {
        return domain("need m ≥ 1 and σ > 0");
    }
    let normal = Normal::new(0.0, rational::to_f64(sigma)).map_err(|e| Error::Domain(e.to_string()))?;
    let grid = f64::from(1u32 << 20);
    let mass = Rational::new(BigInt::one(), BigInt::from(m));
    let mut atoms = Vec::with_capacity(m);
    for i in 0..m.div_ceil(2) {
        let q = normal.inverse_cdf((i as f64 + 0.5) / m as f64);
        let v = Rational::new(BigInt::from((q * grid).round() as i64), BigInt::from(1u64 << 20));
        atoms.push((v.clone(), mass.clone()));
        if m - 1 - i != i {
            atoms.push((-v, mass.clone()));
        }
    }
    DiscreteMeasure::new(atoms)
}
