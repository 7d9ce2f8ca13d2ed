//! Quantified small-space classes and the rules that rewrite them.
//!
//! A [`ClassLine`] is `(Q₁ n^{a₁})^{b₁} ⋯ (Q_k n^{a_k})^{b_k} DTS[n^{d}]`, stored
//! outermost block first. The rules below are the exact exponent semantics of
//! the speedup, slowdown, merge-adjacent-quantifiers and closing steps, with
//! all `o(1)` terms dropped. Nothing in this module uses a tolerance.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("anchor exponent a0 = {0} is below 1")]
    AnchorBelowOne(Rational),
    #[error("lower-bound exponent c = {0} is below 1")]
    ExponentBelowOne(Rational),
    #[error("speedup parameter x = {0} is negative")]
    NegativeSpeedup(Rational),
    #[error("slowdown needs at least one quantifier block")]
    EmptyPrefix,
    #[error("cannot close a line with {0} quantifier blocks")]
    TooManyBlocks(usize),
    #[error("cannot close a universally quantified line into NTIME")]
    ForallOnlyPrefix,
    #[error("malformed class line: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    #[serde(rename = "E")]
    Exists,
    #[serde(rename = "A")]
    Forall,
}

impl Quantifier {
    pub fn opposite(self) -> Self {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Quantifier::Exists => "∃",
            Quantifier::Forall => "∀",
        }
    }
}

/// A stage guessing `n^{guess_exp}` bits and feeding `n^{feed_exp}` of them inward.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuantifierBlock {
    pub quantifier: Quantifier,
    pub guess_exp: Rational,
    pub feed_exp: Rational,
}

impl QuantifierBlock {
    pub fn new(quantifier: Quantifier, guess_exp: Rational, feed_exp: Rational) -> Self {
        QuantifierBlock {
            quantifier,
            guess_exp,
            feed_exp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassLine {
    blocks: Vec<QuantifierBlock>,
    dts_exp: Rational,
}

impl ClassLine {
    /// Builds a line after checking every structural invariant: `dts_exp ≥ 1`,
    /// nonnegative block exponents, alternating quantifiers, `∃` outermost.
    pub fn new(blocks: Vec<QuantifierBlock>, dts_exp: Rational) -> Result<Self, KernelError> {
        if dts_exp < Rational::one() {
            return Err(KernelError::Malformed(format!(
                "DTS exponent {dts_exp} is below 1"
            )));
        }
        for (i, block) in blocks.iter().enumerate() {
            if block.guess_exp.is_negative() || block.feed_exp.is_negative() {
                return Err(KernelError::Malformed(format!(
                    "block {i} has a negative exponent"
                )));
            }
        }
        if let Some(first) = blocks.first() {
            if first.quantifier != Quantifier::Exists {
                return Err(KernelError::Malformed(
                    "outermost quantifier must be ∃".to_string(),
                ));
            }
        }
        if let Some(i) = blocks
            .windows(2)
            .position(|w| w[0].quantifier == w[1].quantifier)
        {
            return Err(KernelError::Malformed(format!(
                "blocks {i} and {} share a quantifier",
                i + 1
            )));
        }
        Ok(ClassLine { blocks, dts_exp })
    }

    /// Plain `DTS[n^{dts_exp}]`.
    pub fn dts(dts_exp: Rational) -> Result<Self, KernelError> {
        ClassLine::new(Vec::new(), dts_exp)
    }

    /// Outermost first.
    pub fn blocks(&self) -> &[QuantifierBlock] {
        &self.blocks
    }

    pub fn innermost(&self) -> Option<&QuantifierBlock> {
        self.blocks.last()
    }

    pub fn dts_exp(&self) -> &Rational {
        &self.dts_exp
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

impl fmt::Display for ClassLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in &self.blocks {
            write!(
                f,
                "({} n^{{{}}})^{{{}}}",
                block.quantifier.symbol(),
                block.guess_exp,
                block.feed_exp
            )?;
        }
        if !self.blocks.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "DTS[n^{{{}}}]", self.dts_exp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Slowdown,
    Speedup,
}

/// One line of a proof: the rule applied and the class it produced. `x` is
/// present exactly for speedup steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleStep {
    pub rule: Rule,
    pub x: Option<Rational>,
    pub result: ClassLine,
}

/// `NTIME[n^{a0}] ⊆ DTS[n^{c·a0}]` under the assumption `SAT ∈ DTS[n^c]`.
pub fn anchor_slowdown(a0: &Rational, c: &Rational) -> Result<ClassLine, KernelError> {
    let one = Rational::one();
    if *a0 < one {
        return Err(KernelError::AnchorBelowOne(a0.clone()));
    }
    if *c < one {
        return Err(KernelError::ExponentBelowOne(c.clone()));
    }
    ClassLine::dts((c * a0).max(one))
}

/// Guesses `n^x` configuration snapshots, trading `n^x` of running time for one
/// more alternation. The new outer quantifier always matches the current
/// innermost block and is merged into it.
pub fn apply_speedup(line: &ClassLine, x: &Rational) -> Result<ClassLine, KernelError> {
    if x.is_negative() {
        return Err(KernelError::NegativeSpeedup(x.clone()));
    }
    let dts_exp = (line.dts_exp() - x).max(Rational::one());
    let mut blocks = line.blocks.clone();
    match blocks.pop() {
        None => {
            blocks.push(QuantifierBlock::new(
                Quantifier::Exists,
                x.clone(),
                x.clone(),
            ));
            blocks.push(QuantifierBlock::new(
                Quantifier::Forall,
                Rational::one(),
                Rational::one(),
            ));
        }
        Some(inner) => {
            let feed = inner.feed_exp.clone();
            blocks.push(QuantifierBlock::new(
                inner.quantifier,
                inner.guess_exp.max(x.clone()),
                x.clone().max(inner.feed_exp),
            ));
            blocks.push(QuantifierBlock::new(
                inner.quantifier.opposite(),
                Rational::one(),
                feed,
            ));
        }
    }
    ClassLine::new(blocks, dts_exp)
}

/// Removes the innermost quantifier: the new running time is
/// `c · max(dts, a_k, b_{k-1})`, with `b_{k-1} = 1` when no block remains.
pub fn apply_slowdown(line: &ClassLine, c: &Rational) -> Result<ClassLine, KernelError> {
    if *c < Rational::one() {
        return Err(KernelError::ExponentBelowOne(c.clone()));
    }
    let mut blocks = line.blocks.clone();
    let removed = blocks.pop().ok_or(KernelError::EmptyPrefix)?;
    let feed_in = blocks
        .last()
        .map_or_else(Rational::one, |b| b.feed_exp.clone());
    let inner = line.dts_exp.clone().max(removed.guess_exp).max(feed_in);
    ClassLine::new(blocks, c * inner)
}

/// The NTIME exponent a closable line lands in.
pub fn close_line(line: &ClassLine) -> Result<Rational, KernelError> {
    match line.blocks() {
        [] => Ok(line.dts_exp.clone()),
        [block] if block.quantifier == Quantifier::Exists => {
            Ok(line.dts_exp.clone().max(block.guess_exp.clone()))
        }
        [_] => Err(KernelError::ForallOnlyPrefix),
        blocks => Err(KernelError::TooManyBlocks(blocks.len())),
    }
}
