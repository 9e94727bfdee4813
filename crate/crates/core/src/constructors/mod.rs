//! Set constructions with certified Birkhoff-sum laws.
//!
//! Proof constants are used as starting points; whenever the exact
//! re-check of a claim fails the construction halves `α` and tries again.

mod approximate;
mod certificate;
mod flatten;
mod targets;

pub use approximate::approximate_on_disjoint;
pub use certificate::{
    BudgetStep, Check, Claim, ConstructionCertificate, FlattenLedger, Inputs, Kind, LedgerStep, SetRef, Target,
    VerifyReport,
};
pub use flatten::{block_spread, flatten_at, flatten_subsequence};
pub use targets::realize_targets;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::rational::{self, ceil_int, int, Rational};
use crate::sequence::NormalizingSequence;

/// Halvings of `α` after a failed verification.
pub const RETRIES: u32 = 8;

/// `ε/5`, halved until `μ + 2α < 1`.
fn initial_alpha(eps: &Rational, mu: &Rational) -> Rational {
    let mut alpha = eps / int(5);
    while mu + &alpha * int(2) >= Rational::one() {
        alpha /= int(2);
    }
    alpha
}

fn ceil_u64(r: &Rational) -> u64 {
    ceil_int(r).to_u64().unwrap_or(u64::MAX)
}

fn r_u64(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `a_n`, reporting a horizon overflow as a capacity error.
fn a_at(seq: &NormalizingSequence, n: u64) -> Result<Rational> {
    seq.get(n).map_err(|_| Error::Capacity {
        message: format!("sequence horizon {} too short", seq.horizon),
        required: n,
    })
}

/// Smallest multiple of `period` that is `≥ n`.
fn round_up(n: u64, period: u64) -> u64 {
    n.div_ceil(period) * period
}

#[derive(Default)]
struct Params(BTreeMap<String, String>);

impl Params {
    fn r(&mut self, key: &str, v: &Rational) -> &mut Self {
        self.0.insert(key.into(), rational::to_string(v));
        self
    }

    fn u(&mut self, key: &str, v: impl ToString) -> &mut Self {
        self.0.insert(key.into(), v.to_string());
        self
    }
}

fn retryable(e: &Error) -> bool {
    matches!(e, Error::Construction(_))
}
