//! The feasibility program of a proof shape.
//!
//! For a fixed annotation and a fixed exponent `c`, every exponent of every
//! line becomes a variable and each rule becomes a set of `≥` relaxations of
//! its `max` semantics. Minimizing the sum of all variables makes the
//! relaxations tight, so an optimum reads back as an ordinary proof.

use thiserror::Error;

use crate::annotation::{Annotation, Tag};
use crate::kernel::{ClassLine, KernelError, Quantifier, QuantifierBlock, Rule, RuleStep};
use crate::lp::{LinearProgram, LpSolution, Relation};
use crate::rational::Rational;
use crate::verifier::ProofCertificate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("lower-bound exponent c = {0} is below 1")]
    ExponentBelowOne(Rational),
    #[error("eps = {0} must be positive")]
    NonPositiveEps(Rational),
    #[error("cannot extract a certificate from an infeasible program")]
    Infeasible,
    #[error("assignment does not satisfy constraint {0}")]
    NotAFeasiblePoint(usize),
    #[error("assignment does not describe a valid class line: {0}")]
    Kernel(#[from] KernelError),
}

/// Variable indices of one proof line. Block vectors are indexed innermost
/// first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineVars {
    pub dts: usize,
    pub guess: Vec<usize>,
    pub feed: Vec<usize>,
    pub x: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ProofProgram {
    pub program: LinearProgram,
    pub a0: usize,
    pub nu: usize,
    pub lines: Vec<LineVars>,
}

struct Builder {
    lp: LinearProgram,
}

impl Builder {
    fn var(&mut self, name: String) -> usize {
        self.lp
            .add_variable(name)
            .expect("proof program variable names are unique")
    }

    fn rel(&mut self, terms: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        self.lp
            .add_constraint(terms, relation, rhs)
            .expect("proof program only references declared variables");
    }

    /// `lhs ≥ k·rhs`
    fn at_least(&mut self, lhs: usize, k: &Rational, rhs: usize) {
        self.rel(
            vec![(lhs, Rational::one()), (rhs, -k)],
            Relation::Ge,
            Rational::zero(),
        );
    }

    fn at_least_const(&mut self, lhs: usize, value: Rational) {
        self.rel(vec![(lhs, Rational::one())], Relation::Ge, value);
    }

    fn equal(&mut self, lhs: usize, rhs: usize) {
        self.rel(
            vec![(lhs, Rational::one()), (rhs, -Rational::one())],
            Relation::Eq,
            Rational::zero(),
        );
    }

    fn equal_const(&mut self, lhs: usize, value: Rational) {
        self.rel(vec![(lhs, Rational::one())], Relation::Eq, value);
    }

    /// `dts ≥ prev − x`
    fn at_least_minus(&mut self, dts: usize, prev: usize, x: usize) {
        self.rel(
            vec![
                (dts, Rational::one()),
                (prev, -Rational::one()),
                (x, Rational::one()),
            ],
            Relation::Ge,
            Rational::zero(),
        );
    }

    fn line(&mut self, i: usize, blocks: usize, speedup: bool) -> LineVars {
        let dts = self.var(format!("d{i}"));
        let mut guess = Vec::with_capacity(blocks);
        let mut feed = Vec::with_capacity(blocks);
        for t in 1..=blocks {
            guess.push(self.var(format!("g{i}_{t}")));
            feed.push(self.var(format!("f{i}_{t}")));
        }
        let x = speedup.then(|| self.var(format!("x{i}")));
        LineVars {
            dts,
            guess,
            feed,
            x,
        }
    }
}

pub fn build_lp(a: &Annotation, c: &Rational, eps: &Rational) -> Result<ProofProgram, BuildError> {
    let one = Rational::one();
    if *c < one {
        return Err(BuildError::ExponentBelowOne(c.clone()));
    }
    if !eps.is_positive() {
        return Err(BuildError::NonPositiveEps(eps.clone()));
    }
    let mut b = Builder {
        lp: LinearProgram::new(),
    };
    let trace = a.block_trace();
    let a0 = b.var("a0".to_string());

    let anchor = b.line(1, 0, false);
    b.at_least(anchor.dts, c, a0);
    b.at_least_const(anchor.dts, one.clone());
    b.at_least_const(a0, one.clone());
    let mut lines = vec![anchor];

    for (idx, &tag) in a.tags().iter().enumerate().skip(1) {
        let i = idx + 1;
        let cur = b.line(i, trace[idx], tag == Tag::S);
        let prev = &lines[idx - 1];
        let prev_m = trace[idx - 1];
        match tag {
            Tag::S => {
                let x = cur.x.expect("speedup lines carry x");
                b.at_least_const(cur.dts, one.clone());
                b.at_least_minus(cur.dts, prev.dts, x);
                if prev_m == 0 {
                    b.equal_const(cur.guess[0], one.clone());
                    b.equal_const(cur.feed[0], one.clone());
                    b.at_least(cur.guess[1], &one, x);
                    b.at_least(cur.feed[1], &one, x);
                } else {
                    b.equal(cur.feed[0], prev.feed[0]);
                    b.equal_const(cur.guess[0], one.clone());
                    b.at_least(cur.guess[1], &one, prev.guess[0]);
                    b.at_least(cur.guess[1], &one, x);
                    b.at_least(cur.feed[1], &one, x);
                    b.at_least(cur.feed[1], &one, prev.feed[0]);
                    for t in 2..cur.guess.len() {
                        b.equal(cur.guess[t], prev.guess[t - 1]);
                        b.equal(cur.feed[t], prev.feed[t - 1]);
                    }
                }
            }
            Tag::D => {
                b.at_least(cur.dts, c, prev.dts);
                b.at_least(cur.dts, c, prev.guess[0]);
                if prev_m >= 2 {
                    b.at_least(cur.dts, c, prev.feed[1]);
                    for t in 0..cur.guess.len() {
                        b.equal(cur.guess[t], prev.guess[t + 1]);
                        b.equal(cur.feed[t], prev.feed[t + 1]);
                    }
                } else {
                    b.at_least_const(cur.dts, c.clone());
                }
            }
        }
        lines.push(cur);
    }

    let nu = b.var("nu".to_string());
    let last = lines.last().expect("annotation is nonempty");
    let (last_dts, last_guess) = (last.dts, last.guess.first().copied());
    b.at_least(nu, &one, last_dts);
    if let Some(g) = last_guess {
        b.at_least(nu, &one, g);
    }
    b.rel(
        vec![(nu, one.clone()), (a0, -one.clone())],
        Relation::Le,
        -eps,
    );

    let all = (0..b.lp.num_variables())
        .map(|v| (v, one.clone()))
        .collect();
    b.lp.minimize(all)
        .expect("objective uses declared variables");
    Ok(ProofProgram {
        program: b.lp,
        a0,
        nu,
        lines,
    })
}

impl ProofProgram {
    /// The class of line `i` (0-based) under an assignment.
    pub fn class_line(&self, i: usize, assignment: &[Rational]) -> Result<ClassLine, KernelError> {
        let vars = &self.lines[i];
        let count = vars.guess.len();
        let blocks = (0..count)
            .rev()
            .map(|t| {
                // Outermost block (t = count − 1) is always ∃.
                let quantifier = if (count - 1 - t).is_multiple_of(2) {
                    Quantifier::Exists
                } else {
                    Quantifier::Forall
                };
                QuantifierBlock::new(
                    quantifier,
                    assignment[vars.guess[t]].clone(),
                    assignment[vars.feed[t]].clone(),
                )
            })
            .collect();
        ClassLine::new(blocks, assignment[vars.dts].clone())
    }
}

/// Reads a feasible point of `build_lp(a, c, eps)` back as a certificate.
pub fn extract_certificate(
    a: &Annotation,
    c: &Rational,
    eps: &Rational,
    solution: &LpSolution,
) -> Result<ProofCertificate, BuildError> {
    let assignment = solution.assignment().ok_or(BuildError::Infeasible)?;
    let program = build_lp(a, c, eps)?;
    if let Some(k) = program.program.first_violation(assignment) {
        return Err(BuildError::NotAFeasiblePoint(k));
    }
    let steps = a
        .tags()
        .iter()
        .enumerate()
        .map(|(i, &tag)| {
            Ok(RuleStep {
                rule: match tag {
                    Tag::D => Rule::Slowdown,
                    Tag::S => Rule::Speedup,
                },
                x: program.lines[i].x.map(|v| assignment[v].clone()),
                result: program.class_line(i, assignment)?,
            })
        })
        .collect::<Result<Vec<_>, KernelError>>()?;
    Ok(ProofCertificate {
        c: c.clone(),
        eps: eps.clone(),
        a0: assignment[program.a0].clone(),
        steps,
        final_ntime_exp: assignment[program.nu].clone(),
    })
}
