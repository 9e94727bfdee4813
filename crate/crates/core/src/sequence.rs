//! Normalizing sequences `a_n ↗ ∞` with `a_n / n → 0`.
//!
//! Values are `⌊n^{p/q}·2^20⌋ / 2^20`, computed exactly with integer roots.
//! Ties would be broken by adding `2^-40` per repeated value; for the built-in
//! families they never occur below `2^38`. The limit behaviour is a property
//! of the family, not something checked from finitely many values.

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rational::{dyadic, Rational};

const GRID: u32 = 20;
const TIE_STEP: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `n^{1/2}`
    Sqrt,
    /// `n^{3/4}`
    Pow34,
}

impl Family {
    fn exponent(self) -> (u32, u32) {
        match self {
            Family::Sqrt => (1, 2),
            Family::Pow34 => (3, 4),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(Family::Sqrt),
            "pow34" => Ok(Family::Pow34),
            _ => domain(format!("unknown sequence family {s:?} (expected sqrt or pow34)")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Sqrt => "sqrt",
            Family::Pow34 => "pow34",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizingSequence {
    pub family: Family,
    pub horizon: u64,
}

impl NormalizingSequence {
    pub fn new(family: Family, horizon: u64) -> Self {
        Self { family, horizon }
    }

    pub fn sqrt(horizon: u64) -> Self {
        Self::new(Family::Sqrt, horizon)
    }

    pub fn pow34(horizon: u64) -> Self {
        Self::new(Family::Pow34, horizon)
    }

    /// `⌊n^{p/q}·2^20⌋` before tie breaking.
    fn raw_numer(&self, n: u64) -> BigInt {
        let (p, q) = self.family.exponent();
        let x = num_traits::pow(BigInt::from(n), p as usize) << (GRID * q);
        x.nth_root(q)
    }

    /// Number of consecutive ties ending at `n`.
    fn ties(&self, n: u64) -> u64 {
        let mut t = 0;
        let mut m = n;
        let mut cur = self.raw_numer(m);
        while m > 1 {
            let prev = self.raw_numer(m - 1);
            if prev < cur {
                break;
            }
            t += 1;
            m -= 1;
            cur = prev;
        }
        t
    }

    /// Whether `a_n` carries a tie-breaking adjustment.
    pub fn adjusted(&self, n: u64) -> bool {
        n > 1 && self.ties(n) > 0
    }

    /// `a_n` for `1 ≤ n ≤ horizon`.
    pub fn get(&self, n: u64) -> Result<Rational> {
        if n == 0 || n > self.horizon {
            return domain(format!("n = {n} outside [1, {}]", self.horizon));
        }
        Ok(self.value(n))
    }

    pub(crate) fn value(&self, n: u64) -> Rational {
        let base = Rational::new(self.raw_numer(n), BigInt::one() << GRID);
        let t = self.ties(n);
        if t == 0 {
            base
        } else {
            base + dyadic(TIE_STEP) * Rational::from_integer(BigInt::from(t))
        }
    }

    /// Smallest `n ≤ horizon` with `a_n > x`, if any.
    pub fn first_above(&self, x: &Rational) -> Option<u64> {
        if self.value(self.horizon) <= *x {
            return None;
        }
        let (mut lo, mut hi) = (0u64, self.horizon);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.value(mid) > *x {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}
