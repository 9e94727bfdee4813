//! Finitely supported probability laws with rational atoms, the Lévy metric
//! decided exactly, and quantile realization on a set.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::rational::{self, Rational};
use crate::sets::IntervalSet;

/// A probability law `Σ mass·δ_value` with strictly increasing values and
/// positive masses summing to one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiscreteMeasure {
    atoms: Vec<(Rational, Rational)>,
    /// `cum[i]` = total mass of the first `i` atoms.
    cum: Vec<Rational>,
}

impl DiscreteMeasure {
    /// Canonical measure from raw atoms; duplicate values are merged,
    /// zero masses dropped.
    pub fn new(raw: Vec<(Rational, Rational)>) -> Result<Self> {
        let mut merged: BTreeMap<Rational, Rational> = BTreeMap::new();
        for (v, m) in raw {
            if m.is_negative() {
                return Err(Error::Validation(format!("negative mass {m} at {v}")));
            }
            *merged.entry(v).or_insert_with(Rational::zero) += m;
        }
        let atoms: Vec<_> = merged.into_iter().filter(|(_, m)| !m.is_zero()).collect();
        let total: Rational = atoms.iter().map(|(_, m)| m).sum();
        if !total.is_one() {
            return Err(Error::Validation(format!("masses sum to {total}, not 1")));
        }
        Ok(Self::from_sorted(atoms))
    }

    /// Convenience constructor from `(value_p, value_q, mass_p, mass_q)`.
    pub fn from_ratios(raw: &[(i64, i64, i64, i64)]) -> Result<Self> {
        Self::new(
            raw.iter()
                .map(|&(a, b, c, d)| (rational::ratio(a, b), rational::ratio(c, d)))
                .collect(),
        )
    }

    pub(crate) fn from_sorted(atoms: Vec<(Rational, Rational)>) -> Self {
        let mut cum = Vec::with_capacity(atoms.len() + 1);
        let mut acc = Rational::zero();
        cum.push(acc.clone());
        for (_, m) in &atoms {
            acc += m;
            cum.push(acc.clone());
        }
        Self { atoms, cum }
    }

    pub fn dirac(v: Rational) -> Self {
        Self::from_sorted(vec![(v, Rational::one())])
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> Rational {
        self.atoms.iter().map(|(v, m)| v * m).sum()
    }

    pub fn mass_of(&self, v: &Rational) -> Rational {
        match self.atoms.binary_search_by(|(a, _)| a.cmp(v)) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    /// `F(t) = ν((−∞, t])`.
    pub fn cdf(&self, t: &Rational) -> Rational {
        let i = self.atoms.partition_point(|(v, _)| v <= t);
        self.cum[i].clone()
    }

    /// `ν((−∞, t))`.
    pub fn cdf_left(&self, t: &Rational) -> Rational {
        let i = self.atoms.partition_point(|(v, _)| v < t);
        self.cum[i].clone()
    }

    /// Conditional law `ν_B` for a finite union of closed intervals `B`.
    pub fn condition(&self, b: &[(Rational, Rational)]) -> Result<Self> {
        let inside = |v: &Rational| b.iter().any(|(lo, hi)| lo <= v && v <= hi);
        let kept: Vec<_> = self.atoms.iter().filter(|(v, _)| inside(v)).cloned().collect();
        let total: Rational = kept.iter().map(|(_, m)| m).sum();
        if total.is_zero() {
            return domain("conditioning on a set of measure zero");
        }
        Ok(Self::from_sorted(
            kept.into_iter().map(|(v, m)| (v, m / &total)).collect(),
        ))
    }

    /// `ν_x(B) = ν(xB)`: the law of `Y/x` for `Y ~ ν`.
    pub fn scale(&self, x: &Rational) -> Result<Self> {
        if !x.is_positive() {
            return domain(format!("scale factor {x} must be positive"));
        }
        Ok(Self::from_sorted(
            self.atoms.iter().map(|(v, m)| (v / x, m.clone())).collect(),
        ))
    }

    /// Law of `Y + c`.
    pub fn shift(&self, c: &Rational) -> Self {
        Self::from_sorted(self.atoms.iter().map(|(v, m)| (v + c, m.clone())).collect())
    }

    /// CDF as CSV rows `t,t_exact,F,F_exact` at each atom.
    pub fn cdf_csv(&self) -> String {
        let mut out = String::from("t,t_exact,F,F_exact\n");
        for (i, (v, _)) in self.atoms.iter().enumerate() {
            let f = &self.cum[i + 1];
            let _ = writeln!(
                out,
                "{},{},{},{}",
                rational::to_decimal(v, 12),
                rational::to_string(v),
                rational::to_decimal(f, 12),
                rational::to_string(f)
            );
        }
        out
    }
}

/// Decides `d(ν, η) ≤ ε` for the Lévy metric: for all `t`,
/// `G(t−ε) − ε ≤ F(t) ≤ G(t+ε) + ε` with `F`, `G` the cdfs of `ν`, `η`.
///
/// Both sides are right-continuous step functions, so it suffices to test
/// the points where either side jumps.
pub fn levy_le(nu: &DiscreteMeasure, eta: &DiscreteMeasure, eps: &Rational) -> bool {
    if eps.is_negative() {
        return false;
    }
    if *eps >= Rational::one() {
        return true;
    }
    let upper = nu
        .atoms
        .iter()
        .map(|(v, _)| v.clone())
        .chain(eta.atoms.iter().map(|(v, _)| v - eps));
    for t in upper {
        if nu.cdf(&t) > eta.cdf(&(&t + eps)) + eps {
            return false;
        }
    }
    let lower = nu
        .atoms
        .iter()
        .map(|(v, _)| v.clone())
        .chain(eta.atoms.iter().map(|(v, _)| v + eps));
    for t in lower {
        if eta.cdf(&(&t - eps)) - eps > nu.cdf(&t) {
            return false;
        }
    }
    true
}

/// Certified bracket `(lo, hi)` for the Lévy distance: `d ≤ hi`, and
/// `d > lo` unless `lo = 0`; `hi − lo ≤ tol`.
pub fn levy_distance(nu: &DiscreteMeasure, eta: &DiscreteMeasure, tol: &Rational) -> Result<(Rational, Rational)> {
    if !tol.is_positive() {
        return domain("tolerance must be positive");
    }
    let mut lo = Rational::zero();
    let mut hi = Rational::one();
    if levy_le(nu, eta, &lo) {
        return Ok((lo.clone(), lo));
    }
    let two = rational::int(2);
    while &hi - &lo > *tol {
        let mid = (&lo + &hi) / &two;
        if levy_le(nu, eta, &mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// `ν((−∞,−a)) ≤ a` and `ν((a,∞)) ≤ a`, equivalent to `d(ν, δ₀) ≤ a`.
pub fn dirac_bound(nu: &DiscreteMeasure, a: &Rational) -> bool {
    if a.is_negative() {
        return false;
    }
    let left = nu.cdf_left(&-a);
    let right = Rational::one() - nu.cdf(a);
    left <= *a && right <= *a
}

/// Splits `f` left to right into parts of relative mass `η({v})`, in atom
/// order: the quantile construction of a function with law `η` on `f`.
pub fn realize_on_base(f: &IntervalSet, eta: &DiscreteMeasure) -> Result<Vec<(Rational, IntervalSet)>> {
    let mf = f.measure();
    if mf.is_zero() {
        return domain("cannot realize a law on a null set");
    }
    let mut rest = f.clone();
    let mut out = Vec::with_capacity(eta.len());
    let last = eta.len() - 1;
    for (i, (v, m)) in eta.atoms.iter().enumerate() {
        if i == last {
            out.push((v.clone(), std::mem::take(&mut rest)));
            break;
        }
        let (head, tail) = rest.split_at_mass(&(m * &mf))?;
        out.push((v.clone(), head));
        rest = tail;
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    value: String,
    mass: String,
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.atoms
            .iter()
            .map(|(v, m)| AtomRepr {
                value: rational::to_string(v),
                mass: rational::to_string(m),
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<AtomRepr>::deserialize(d)?;
        let atoms = raw
            .iter()
            .map(|a| Ok((rational::parse(&a.value)?, rational::parse(&a.mass)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        DiscreteMeasure::new(atoms).map_err(serde::de::Error::custom)
    }
}
