//! Mechanized alternation-trading proofs of time lower bounds for SAT on
//! machines with `n^{o(1)}` workspace.
//!
//! A proof is a chain of class inclusions produced by two rules: speedup
//! (trade running time for a quantifier block) and slowdown (remove a block
//! using the hypothesis `SAT ∈ DTS[n^c]`). Once the order of rule applications
//! is fixed, finding the best exponents is a linear program; bisection over
//! `c` then yields the best lower bound that order can prove. Every result is
//! emitted as a certificate that the LP-free [`verifier`] re-checks.
//!
//! The [`recurrence`] module is a separate toolkit for branching-algorithm
//! running-time recurrences.

pub mod annotation;
pub mod cli;
pub mod kernel;
pub mod lp;
pub mod prover;
pub mod rational;
pub mod recurrence;
pub mod verifier;

pub use annotation::{Annotation, AnnotationError, Tag};
pub use kernel::{ClassLine, Quantifier, QuantifierBlock, Rule, RuleStep};
pub use lp::{LinearProgram, LpSolution, Relation};
pub use rational::Rational;
pub use verifier::{verify, ProofCertificate};
