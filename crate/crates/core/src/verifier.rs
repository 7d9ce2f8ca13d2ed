//! Independent checker for proof certificates.
//!
//! Only the kernel rules are used here, never the LP. A recorded line is
//! accepted when it dominates, exponent by exponent, what the exact rule
//! produces from the previous recorded line: larger exponents describe larger
//! classes, so the chain of inclusions stays sound.

use std::fmt;

use thiserror::Error;

use crate::kernel::{self, ClassLine, Rule, RuleStep};
use crate::rational::Rational;

/// A fully instantiated chain `NTIME[n^{a0}] ⊆ … ⊆ NTIME[n^{ν}]` under the
/// assumption `SAT ∈ DTS[n^c]`, with `ν ≤ a0 − eps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofCertificate {
    pub c: Rational,
    pub eps: Rational,
    pub a0: Rational,
    pub steps: Vec<RuleStep>,
    pub final_ntime_exp: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Field {
    Dts,
    Guess(usize),
    Feed(usize),
    FinalExponent,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Dts => f.write_str("dts"),
            Field::Guess(i) => write!(f, "blocks[{i}].a"),
            Field::Feed(i) => write!(f, "blocks[{i}].b"),
            Field::FinalExponent => f.write_str("nu"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("{field} = {recorded} is below the required {required}")]
    DominanceViolation {
        field: Field,
        recorded: Rational,
        required: Rational,
    },
    #[error("nu = {nu} is not below a0 - eps = {bound}")]
    NoContradiction { nu: Rational, bound: Rational },
}

/// A failed check. `step` is 1-based; `None` marks certificate-level checks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct Rejected {
    pub step: Option<usize>,
    pub reason: Rejection,
}

impl fmt::Display for Rejected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(s) => write!(f, "step {s}: {}", self.reason),
            None => write!(f, "{}", self.reason),
        }
    }
}

fn reject(step: Option<usize>, reason: Rejection) -> Rejected {
    Rejected { step, reason }
}

fn malformed(step: Option<usize>, msg: impl Into<String>) -> Rejected {
    reject(step, Rejection::Malformed(msg.into()))
}

fn dominates(step: usize, recorded: &ClassLine, required: &ClassLine) -> Result<(), Rejected> {
    let shape_ok = recorded.block_count() == required.block_count()
        && recorded
            .blocks()
            .iter()
            .zip(required.blocks())
            .all(|(r, k)| r.quantifier == k.quantifier);
    if !shape_ok {
        return Err(malformed(
            Some(step),
            format!("recorded line {recorded} does not have the shape of {required}"),
        ));
    }
    let violation = |field, recorded: &Rational, required: &Rational| {
        reject(
            Some(step),
            Rejection::DominanceViolation {
                field,
                recorded: recorded.clone(),
                required: required.clone(),
            },
        )
    };
    for (i, (r, k)) in recorded.blocks().iter().zip(required.blocks()).enumerate() {
        if r.guess_exp < k.guess_exp {
            return Err(violation(Field::Guess(i), &r.guess_exp, &k.guess_exp));
        }
        if r.feed_exp < k.feed_exp {
            return Err(violation(Field::Feed(i), &r.feed_exp, &k.feed_exp));
        }
    }
    if recorded.dts_exp() < required.dts_exp() {
        return Err(violation(
            Field::Dts,
            recorded.dts_exp(),
            required.dts_exp(),
        ));
    }
    Ok(())
}

pub fn verify(cert: &ProofCertificate) -> Result<(), Rejected> {
    let one = Rational::one();
    if cert.a0 < one {
        return Err(malformed(None, format!("a0 = {} is below 1", cert.a0)));
    }
    if cert.c < one {
        return Err(malformed(None, format!("c = {} is below 1", cert.c)));
    }
    if !cert.eps.is_positive() {
        return Err(malformed(
            None,
            format!("eps = {} is not positive", cert.eps),
        ));
    }
    let first = cert
        .steps
        .first()
        .ok_or_else(|| malformed(None, "certificate has no steps"))?;
    if first.rule != Rule::Slowdown || first.x.is_some() {
        return Err(malformed(
            Some(1),
            "first step must be the anchoring slowdown",
        ));
    }
    if first.result.block_count() != 0 {
        return Err(malformed(Some(1), "anchor must produce a plain DTS class"));
    }
    let anchor = kernel::anchor_slowdown(&cert.a0, &cert.c)
        .map_err(|e| malformed(Some(1), e.to_string()))?;
    dominates(1, &first.result, &anchor)?;

    for (idx, pair) in cert.steps.windows(2).enumerate() {
        let step = idx + 2;
        let (prev, cur) = (&pair[0].result, &pair[1]);
        let required = match (cur.rule, &cur.x) {
            (Rule::Speedup, Some(x)) => kernel::apply_speedup(prev, x),
            (Rule::Slowdown, None) => kernel::apply_slowdown(prev, &cert.c),
            (Rule::Speedup, None) => {
                return Err(malformed(Some(step), "speedup step without x"));
            }
            (Rule::Slowdown, Some(_)) => {
                return Err(malformed(Some(step), "slowdown step carries an x"));
            }
        }
        .map_err(|e| malformed(Some(step), e.to_string()))?;
        dominates(step, &cur.result, &required)?;
    }

    let last = &cert.steps[cert.steps.len() - 1].result;
    let closing = kernel::close_line(last).map_err(|e| malformed(None, e.to_string()))?;
    if cert.final_ntime_exp < closing {
        return Err(reject(
            None,
            Rejection::DominanceViolation {
                field: Field::FinalExponent,
                recorded: cert.final_ntime_exp.clone(),
                required: closing,
            },
        ));
    }
    let bound = &cert.a0 - &cert.eps;
    if cert.final_ntime_exp > bound {
        return Err(reject(
            None,
            Rejection::NoContradiction {
                nu: cert.final_ntime_exp.clone(),
                bound,
            },
        ));
    }
    Ok(())
}
