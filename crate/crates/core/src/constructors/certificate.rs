//! Certificates: a constructed set together with exactly re-checked claims.
//!
//! Each claim names a decidable check. The list of checks is a function of
//! the inputs and recorded parameters, so verification rebuilds it, compares
//! it with the stored one, and re-evaluates every check from scratch.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::exact_law;
use crate::measures::{dirac_bound, levy_distance, levy_le, DiscreteMeasure};
use crate::rational::{self, dyadic, Rational};
use crate::sequence::NormalizingSequence;
use crate::sets::IntervalSet;

use super::flatten::block_spread;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Approximate,
    FlattenAt,
    FlattenSeq,
    Targets,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub nu: DiscreteMeasure,
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Inputs {
    Approximate {
        a: IntervalSet,
        nu: DiscreteMeasure,
        #[serde(with = "rational::serde_str")]
        eps: Rational,
        n_cap: u64,
    },
    FlattenAt {
        a: IntervalSet,
        #[serde(with = "rational::serde_str")]
        eps: Rational,
        n_min: u64,
    },
    FlattenSeq {
        a: IntervalSet,
        #[serde(with = "rational::serde_str")]
        eps: Rational,
        steps: u64,
    },
    Targets {
        a0: IntervalSet,
        targets: Vec<Target>,
    },
}

impl Inputs {
    pub fn input_set(&self) -> &IntervalSet {
        match self {
            Inputs::Approximate { a, .. } | Inputs::FlattenAt { a, .. } | Inputs::FlattenSeq { a, .. } => a,
            Inputs::Targets { a0, .. } => a0,
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            Inputs::Approximate { .. } => Kind::Approximate,
            Inputs::FlattenAt { .. } => Kind::FlattenAt,
            Inputs::FlattenSeq { .. } => Kind::FlattenSeq,
            Inputs::Targets { .. } => Kind::Targets,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetRef {
    Input,
    Output,
}

/// One row of the budget recursion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetStep {
    #[serde(with = "rational::serde_str")]
    pub eps_k: Rational,
    pub n_k: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    /// `μ(a ∩ b) = 0`
    Disjoint { a: SetRef, b: SetRef },
    MeasureAtMost {
        set: SetRef,
        #[serde(with = "rational::serde_str")]
        bound: Rational,
    },
    MeasureEquals {
        set: SetRef,
        #[serde(with = "rational::serde_str")]
        value: Rational,
    },
    /// `μ(a △ b) ≤ bound`
    ThetaAtMost {
        a: SetRef,
        b: SetRef,
        #[serde(with = "rational::serde_str")]
        bound: Rational,
    },
    /// Lévy distance between the normalized law at time `n` and `target` is at most `eps`.
    LawBound {
        set: SetRef,
        n: u64,
        target: DiscreteMeasure,
        #[serde(with = "rational::serde_str")]
        eps: Rational,
    },
    /// Both open tails of the normalized law at time `n` beyond `±eps` carry mass `≤ eps`.
    DiracBound {
        set: SetRef,
        n: u64,
        #[serde(with = "rational::serde_str")]
        eps: Rational,
    },
    /// `ε_1 = eps/2`, `ε_k = ε_{k−1}/(2 n_{k−1})`, `Σ ε_k ≤ eps`.
    BudgetRecursion {
        #[serde(with = "rational::serde_str")]
        eps: Rational,
        steps: Vec<BudgetStep>,
    },
    /// Cumulative block sums `S_{bM}(1_C) − bMμ(C)` along every column of the
    /// tower `(k, q, M·blocks, k0)` spread by at most `bound`.
    BlockControl {
        set: SetRef,
        k: u32,
        q: u64,
        block: u64,
        blocks: u64,
        k0: u64,
        bound: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    #[serde(flatten)]
    pub check: Check,
    pub holds: bool,
    pub quantities: BTreeMap<String, String>,
}

/// Resolution used for the reported Lévy bracket.
const BRACKET_TOL: u32 = 12;

struct Ctx<'a> {
    input: &'a IntervalSet,
    output: &'a IntervalSet,
    seq: &'a NormalizingSequence,
}

impl Ctx<'_> {
    fn set(&self, r: SetRef) -> &IntervalSet {
        match r {
            SetRef::Input => self.input,
            SetRef::Output => self.output,
        }
    }
}

fn q(map: &mut BTreeMap<String, String>, key: &str, r: &Rational) {
    map.insert(key.to_string(), rational::to_string(r));
}

impl Check {
    fn evaluate(&self, ctx: &Ctx) -> Result<(bool, BTreeMap<String, String>)> {
        let mut out = BTreeMap::new();
        let holds = match self {
            Check::Disjoint { a, b } => {
                let overlap = ctx.set(*a).intersect(ctx.set(*b)).measure();
                q(&mut out, "overlap", &overlap);
                overlap.is_zero()
            }
            Check::MeasureAtMost { set, bound } => {
                let m = ctx.set(*set).measure();
                q(&mut out, "measure", &m);
                m <= *bound
            }
            Check::MeasureEquals { set, value } => {
                let m = ctx.set(*set).measure();
                q(&mut out, "measure", &m);
                m == *value
            }
            Check::ThetaAtMost { a, b, bound } => {
                let t = ctx.set(*a).theta(ctx.set(*b));
                q(&mut out, "theta", &t);
                t <= *bound
            }
            Check::LawBound { set, n, target, eps } => {
                let law = exact_law(ctx.set(*set), *n, ctx.seq)?.law;
                let (_, hi) = levy_distance(&law, target, &dyadic(BRACKET_TOL))?;
                q(&mut out, "levy_hi", &hi);
                out.insert("atoms".into(), law.len().to_string());
                levy_le(&law, target, eps)
            }
            Check::DiracBound { set, n, eps } => {
                let law = exact_law(ctx.set(*set), *n, ctx.seq)?.law;
                q(&mut out, "tail_below", &law.cdf_left(&-eps));
                q(&mut out, "tail_above", &(Rational::one() - law.cdf(eps)));
                dirac_bound(&law, eps)
            }
            Check::BudgetRecursion { eps, steps } => {
                let mut ok = !steps.is_empty();
                let mut expect = eps / rational::int(2);
                let mut total = Rational::zero();
                for s in steps {
                    ok &= s.eps_k == expect;
                    total += &s.eps_k;
                    expect = &s.eps_k / Rational::from_integer(BigInt::from(2 * s.n_k));
                }
                ok &= steps.windows(2).all(|w| w[0].n_k < w[1].n_k);
                q(&mut out, "sum", &total);
                ok && total <= *eps
            }
            Check::BlockControl { set, k, q: cols, block, blocks, k0, bound } => {
                let spread = block_spread(ctx.set(*set), *k, *cols, *block, *blocks, *k0)?;
                q(&mut out, "spread", &spread);
                spread <= Rational::from_integer(BigInt::from(*bound))
            }
        };
        Ok((holds, out))
    }
}

/// Per-step record of the finitized subsequence construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerStep {
    pub k: u64,
    #[serde(with = "rational::serde_str")]
    pub eps_k: Rational,
    pub n_k: u64,
    /// Number of intervals and measure of `C_k`.
    pub intervals: usize,
    #[serde(with = "rational::serde_str")]
    pub measure: Rational,
    /// `Θ(C_{k−1}, C_k)`
    #[serde(with = "rational::serde_str")]
    pub theta: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlattenLedger {
    pub steps: Vec<LedgerStep>,
    pub final_set: IntervalSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionCertificate {
    pub kind: Kind,
    pub seq: NormalizingSequence,
    pub inputs: Inputs,
    pub parameters: BTreeMap<String, String>,
    pub output_set: IntervalSet,
    pub verified: Vec<Claim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<FlattenLedger>,
    /// Quantities reported but not required to hold.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub informational: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerifyReport {
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn param<T: std::str::FromStr>(p: &BTreeMap<String, String>, key: &str) -> Result<T> {
    p.get(key)
        .ok_or_else(|| Error::Validation(format!("missing parameter {key}")))?
        .parse()
        .map_err(|_| Error::Validation(format!("bad parameter {key}")))
}

fn param_rational(p: &BTreeMap<String, String>, key: &str) -> Result<Rational> {
    rational::parse(p.get(key).ok_or_else(|| Error::Validation(format!("missing parameter {key}")))?)
}

impl ConstructionCertificate {
    /// Checks implied by the inputs and parameters, in order.
    pub fn expected_checks(&self) -> Result<Vec<(String, Check)>> {
        let p = &self.parameters;
        let mut out = Vec::new();
        match &self.inputs {
            Inputs::Approximate { nu, eps, .. } => {
                out.push(("disjoint".into(), Check::Disjoint { a: SetRef::Input, b: SetRef::Output }));
                out.push((
                    "measure".into(),
                    Check::MeasureAtMost { set: SetRef::Output, bound: eps.clone() },
                ));
                if p.get("degenerate").map(String::as_str) != Some("true") {
                    let d: u64 = param(p, "d")?;
                    let mu_f = param_rational(p, "mu_F")?;
                    out.push((
                        "measure_identity".into(),
                        Check::MeasureEquals {
                            set: SetRef::Output,
                            value: mu_f * Rational::from_integer(BigInt::from(d)),
                        },
                    ));
                }
                out.push((
                    "levy".into(),
                    Check::LawBound {
                        set: SetRef::Output,
                        n: param(p, "n")?,
                        target: nu.clone(),
                        eps: eps.clone(),
                    },
                ));
            }
            Inputs::FlattenAt { a, eps, .. } => {
                out.push((
                    "theta".into(),
                    Check::ThetaAtMost { a: SetRef::Input, b: SetRef::Output, bound: eps.clone() },
                ));
                out.push((
                    "measure".into(),
                    Check::MeasureEquals { set: SetRef::Output, value: a.measure() },
                ));
                out.push((
                    "dirac".into(),
                    Check::DiracBound { set: SetRef::Output, n: param(p, "n")?, eps: eps.clone() },
                ));
                out.push((
                    "block_control".into(),
                    Check::BlockControl {
                        set: SetRef::Output,
                        k: param(p, "tower_k")?,
                        q: param(p, "tower_q")?,
                        block: param(p, "M")?,
                        blocks: param(p, "n")?,
                        k0: param(p, "k0")?,
                        bound: 3,
                    },
                ));
            }
            Inputs::FlattenSeq { eps, .. } => {
                let ledger = self
                    .ledger
                    .as_ref()
                    .ok_or_else(|| Error::Validation("missing ledger".into()))?;
                let steps: Vec<BudgetStep> = ledger
                    .steps
                    .iter()
                    .map(|s| BudgetStep { eps_k: s.eps_k.clone(), n_k: s.n_k })
                    .collect();
                out.push((
                    "budget".into(),
                    Check::BudgetRecursion { eps: eps.clone(), steps: steps.clone() },
                ));
                out.push((
                    "theta".into(),
                    Check::ThetaAtMost { a: SetRef::Input, b: SetRef::Output, bound: eps.clone() },
                ));
                for (i, s) in steps.iter().enumerate() {
                    out.push((
                        format!("dirac_{}", i + 1),
                        Check::LawBound {
                            set: SetRef::Output,
                            n: s.n_k,
                            target: DiscreteMeasure::dirac(Rational::zero()),
                            eps: eps.clone(),
                        },
                    ));
                }
            }
            Inputs::Targets { targets, .. } => {
                for (j, t) in targets.iter().enumerate() {
                    out.push((
                        format!("levy_{}", j + 1),
                        Check::LawBound {
                            set: SetRef::Output,
                            n: param(p, &format!("n_{}", j + 1))?,
                            target: t.nu.clone(),
                            eps: t.eps.clone(),
                        },
                    ));
                }
            }
        }
        Ok(out)
    }

    fn evaluate_all(&self) -> Result<Vec<Claim>> {
        let ctx = Ctx {
            input: self.inputs.input_set(),
            output: &self.output_set,
            seq: &self.seq,
        };
        self.expected_checks()?
            .into_iter()
            .map(|(id, check)| {
                let (holds, quantities) = check.evaluate(&ctx)?;
                Ok(Claim { id, check, holds, quantities })
            })
            .collect()
    }

    /// Evaluates every claim; returns the certificate only if all hold,
    /// otherwise a construction error naming the failed claims.
    pub fn seal(
        seq: NormalizingSequence,
        inputs: Inputs,
        parameters: BTreeMap<String, String>,
        output_set: IntervalSet,
        ledger: Option<FlattenLedger>,
    ) -> Result<Self> {
        let mut cert = Self {
            kind: inputs.kind(),
            seq,
            inputs,
            parameters,
            output_set,
            verified: Vec::new(),
            ledger,
            informational: BTreeMap::new(),
        };
        cert.verified = cert.evaluate_all()?;
        let failed: Vec<_> = cert.verified.iter().filter(|c| !c.holds).map(|c| c.id.clone()).collect();
        if failed.is_empty() {
            Ok(cert)
        } else {
            Err(Error::Construction(format!("claims failed: {}", failed.join(", "))))
        }
    }

    /// Re-derives the claim list and re-evaluates it from scratch.
    pub fn verify(&self) -> VerifyReport {
        let mut report = VerifyReport::default();
        if self.kind != self.inputs.kind() {
            report.failures.push("kind does not match inputs".into());
            return report;
        }
        if let Some(l) = &self.ledger {
            if l.final_set != self.output_set {
                report.failures.push("ledger final set differs from output".into());
            }
        }
        let fresh = match self.evaluate_all() {
            Ok(f) => f,
            Err(e) => {
                report.failures.push(e.to_string());
                return report;
            }
        };
        if fresh.len() != self.verified.len() {
            report.failures.push(format!(
                "expected {} claims, manifest has {}",
                fresh.len(),
                self.verified.len()
            ));
        }
        for (f, s) in fresh.iter().zip(&self.verified) {
            if f.id != s.id || f.check != s.check {
                report.failures.push(format!("claim {} does not match the construction", s.id));
            } else if f.quantities != s.quantities || f.holds != s.holds {
                report.failures.push(format!("claim {} does not reproduce", s.id));
            } else if !f.holds {
                report.failures.push(format!("claim {} is false", s.id));
            }
        }
        report
    }

    pub fn claim(&self, id: &str) -> Option<&Claim> {
        self.verified.iter().find(|c| c.id == id)
    }

    pub fn parameter(&self, key: &str) -> Option<&str> {
        self.parameters.get(key).map(String::as_str)
    }
}
