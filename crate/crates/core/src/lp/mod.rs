//! Linear programs over exact rationals.
//!
//! Every variable is implicitly bounded below by zero. [`simplex::solve`] is a
//! dense two-phase simplex using Bland's rule, and [`proof`] builds the
//! feasibility program for a fixed proof shape.

use std::fmt;

use thiserror::Error;

use crate::rational::Rational;

mod guided;
pub mod proof;
pub mod simplex;

pub use proof::{build_lp, extract_certificate, LineVars, ProofProgram};
pub use simplex::{find_feasible, solve};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("objective is unbounded below")]
    UnboundedObjective,
    #[error("variable index {0} is not declared")]
    UnknownVariable(usize),
    #[error("duplicate variable name {0:?}")]
    DuplicateVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

/// `Σ coeff·var  relation  rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs_value(&self, assignment: &[Rational]) -> Rational {
        self.terms.iter().map(|(v, k)| k * &assignment[*v]).sum()
    }

    pub fn is_satisfied(&self, assignment: &[Rational]) -> bool {
        self.relation.holds(&self.lhs_value(assignment), &self.rhs)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearProgram {
    names: Vec<String>,
    constraints: Vec<Constraint>,
    objective: Vec<(usize, Rational)>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>) -> Result<usize, LpError> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(LpError::DuplicateVariable(name));
        }
        self.names.push(name);
        Ok(self.names.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        terms: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> Result<(), LpError> {
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| *v >= self.names.len()) {
            return Err(LpError::UnknownVariable(v));
        }
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Replaces the objective; the program always minimizes.
    pub fn minimize(&mut self, terms: Vec<(usize, Rational)>) -> Result<(), LpError> {
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| *v >= self.names.len()) {
            return Err(LpError::UnknownVariable(v));
        }
        self.objective = terms;
        Ok(())
    }

    pub fn num_variables(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn variable(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, Rational)] {
        &self.objective
    }

    pub fn objective_value(&self, assignment: &[Rational]) -> Rational {
        self.objective
            .iter()
            .map(|(v, k)| k * &assignment[*v])
            .sum()
    }

    /// Index of the first violated constraint, if any. Nonnegativity is
    /// checked too and reported as `usize::MAX`.
    pub fn first_violation(&self, assignment: &[Rational]) -> Option<usize> {
        if assignment.len() != self.names.len() || assignment.iter().any(Rational::is_negative) {
            return Some(usize::MAX);
        }
        self.constraints
            .iter()
            .position(|c| !c.is_satisfied(assignment))
    }

    pub fn is_feasible_point(&self, assignment: &[Rational]) -> bool {
        self.first_violation(assignment).is_none()
    }

    fn write_expr(&self, f: &mut fmt::Formatter<'_>, terms: &[(usize, Rational)]) -> fmt::Result {
        if terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (v, k)) in terms.iter().enumerate() {
            let name = &self.names[*v];
            let (sign, mag) = if k.is_negative() {
                ("-", -k)
            } else {
                ("+", k.clone())
            };
            match (i, sign) {
                (0, "+") => {}
                (0, _) => f.write_str("-")?,
                _ => write!(f, " {sign} ")?,
            }
            if mag == Rational::one() {
                f.write_str(name)?;
            } else {
                write!(f, "{mag} {name}")?;
            }
        }
        Ok(())
    }
}

/// Human-readable dump, one constraint per line, exact `p/q` coefficients.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("minimize\n  ")?;
        self.write_expr(f, &self.objective)?;
        f.write_str("\nsubject to\n")?;
        for c in &self.constraints {
            f.write_str("  ")?;
            self.write_expr(f, &c.terms)?;
            writeln!(f, " {} {}", c.relation.symbol(), c.rhs)?;
        }
        f.write_str("bounds\n")?;
        for name in &self.names {
            writeln!(f, "  {name} >= 0")?;
        }
        f.write_str("end\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpSolution {
    Feasible {
        assignment: Vec<Rational>,
        objective_value: Rational,
    },
    Infeasible,
}

impl LpSolution {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpSolution::Feasible { .. })
    }

    pub fn assignment(&self) -> Option<&[Rational]> {
        match self {
            LpSolution::Feasible { assignment, .. } => Some(assignment),
            LpSolution::Infeasible => None,
        }
    }

    pub fn objective_value(&self) -> Option<&Rational> {
        match self {
            LpSolution::Feasible {
                objective_value, ..
            } => Some(objective_value),
            LpSolution::Infeasible => None,
        }
    }
}
