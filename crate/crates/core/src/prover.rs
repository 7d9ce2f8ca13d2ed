//! Best lower bound per proof shape, and searches over shapes.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rayon::prelude::*;
use thiserror::Error;

use crate::annotation::{self, Annotation};
use crate::lp::{self, proof::BuildError, LpError, LpSolution};
use crate::rational::Rational;
use crate::verifier::ProofCertificate;

/// `2cos(π/7)` rounded up, the conjectured limit of the proof system.
pub const CONJECTURED_LIMIT: &str = "18019/10000";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error("annotation {0} proves nothing: c = 1 is infeasible")]
    AnchorInfeasible(String),
    #[error("annotation {0} is feasible at c = 2")]
    CeilingFeasible(String),
    #[error("tolerance {0} must lie in (0, 1/100]")]
    BadTolerance(Rational),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Solves `build_lp(a, c, eps)`.
pub fn feasibility(
    a: &Annotation,
    c: &Rational,
    eps: &Rational,
) -> Result<LpSolution, ProverError> {
    let program = lp::build_lp(a, c, eps)?;
    Ok(lp::solve(&program.program)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestExponent {
    /// Largest `c` shown feasible; the reported exponent.
    pub lower: Rational,
    /// Smallest `c` shown infeasible.
    pub upper: Rational,
    pub certificate: ProofCertificate,
}

impl BestExponent {
    pub fn midpoint(&self) -> Rational {
        (&self.lower + &self.upper) / Rational::from_integer(2)
    }
}

/// Bisects `c` over `[1, 2]` until the bracket is at most `tol` wide.
/// Feasibility is downward closed in `c`, so `lower` stays feasible and
/// `upper` infeasible throughout.
pub fn best_exponent(
    a: &Annotation,
    tol: &Rational,
    eps: &Rational,
) -> Result<BestExponent, ProverError> {
    bisect(a, tol, eps, None)
}

fn is_feasible(a: &Annotation, c: &Rational, eps: &Rational) -> Result<bool, ProverError> {
    let program = lp::build_lp(a, c, eps)?;
    Ok(lp::find_feasible(&program.program).is_feasible())
}

/// Bisection that takes every midpoint at or below `known` as feasible
/// without solving. The bracket is the same as with `known = None`: the
/// midpoints are fixed dyadic points and each decision is implied by
/// downward closure.
fn bisect(
    a: &Annotation,
    tol: &Rational,
    eps: &Rational,
    known: Option<&Rational>,
) -> Result<BestExponent, ProverError> {
    if !tol.is_positive() || *tol > Rational::new(1, 100) {
        return Err(ProverError::BadTolerance(tol.clone()));
    }
    let mut lower = Rational::one();
    let mut upper = Rational::from_integer(2);
    let settled = |c: &Rational| known.is_some_and(|k| c <= k);
    if !settled(&lower) && !is_feasible(a, &lower, eps)? {
        return Err(ProverError::AnchorInfeasible(a.to_string()));
    }
    if is_feasible(a, &upper, eps)? {
        return Err(ProverError::CeilingFeasible(a.to_string()));
    }
    let two = Rational::from_integer(2);
    while &upper - &lower > *tol {
        let mid = (&lower + &upper) / &two;
        if settled(&mid) || is_feasible(a, &mid, eps)? {
            lower = mid;
        } else {
            upper = mid;
        }
    }
    // Only the final point is optimized, for a tight certificate.
    let witness = feasibility(a, &lower, eps)?;
    let certificate = lp::extract_certificate(a, &lower, eps, &witness)?;
    Ok(BestExponent {
        lower,
        upper,
        certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchRecord {
    pub annotation: Annotation,
    pub best_c: Rational,
    pub upper_c: Rational,
    pub lines: usize,
    pub certificate: ProofCertificate,
}

impl SearchRecord {
    fn from_best(annotation: Annotation, best: BestExponent) -> Self {
        SearchRecord {
            lines: annotation.len(),
            annotation,
            best_c: best.lower,
            upper_c: best.upper,
            certificate: best.certificate,
        }
    }

    pub fn midpoint(&self) -> Rational {
        (&self.best_c + &self.upper_c) / Rational::from_integer(2)
    }

    /// Higher `best_c` first, then fewer lines, then lexicographic.
    pub fn rank(&self, other: &Self) -> Ordering {
        other
            .best_c
            .cmp(&self.best_c)
            .then(self.lines.cmp(&other.lines))
            .then_with(|| self.annotation.cmp(&other.annotation))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    pub tol: Rational,
    pub eps: Rational,
    pub workers: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            tol: Rational::pow10_neg(6),
            eps: Rational::new(1, 1000),
            workers: 1,
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, ProverError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ProverError::Pool(e.to_string()))
}

/// Evaluates shapes concurrently; output order follows input order.
/// Shapes without any speedup are skipped since they prove nothing.
pub fn evaluate_all(
    annotations: &[Annotation],
    config: &SearchConfig,
) -> Result<Vec<SearchRecord>, ProverError> {
    let pool = pool(config.workers)?;
    let results: Vec<Result<SearchRecord, ProverError>> = pool.install(|| {
        annotations
            .par_iter()
            .filter(|a| a.speedups() > 0)
            .map(|a| {
                best_exponent(a, &config.tol, &config.eps)
                    .map(|best| SearchRecord::from_best(a.clone(), best))
            })
            .collect()
    });
    results.into_iter().collect()
}

/// Best shape of each length up to `max_lines`; lengths without a proof are
/// absent. Ties go to the lexicographically least shape.
pub fn exhaustive_search(
    max_lines: usize,
    config: &SearchConfig,
) -> Result<Vec<SearchRecord>, ProverError> {
    let mut table = Vec::new();
    for length in 1..=max_lines {
        let records = evaluate_all(&annotation::enumerate(length), config)?;
        if let Some(best) = best_of(records) {
            table.push(best);
        }
    }
    Ok(table)
}

/// Highest `best_c`, lexicographically least shape among ties.
pub fn best_of(records: impl IntoIterator<Item = SearchRecord>) -> Option<SearchRecord> {
    records.into_iter().min_by(|a, b| a.rank(b))
}

struct Queued(SearchRecord);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the greatest element: invert the rank.
        other.0.rank(&self.0)
    }
}

/// Local improvement by inserting (or removing) rule applications.
///
/// Pops the best queued proof, evaluates its unseen neighbors (at most
/// `budget` evaluations in total), and queues each neighbor that beats the
/// proof it came from. Returns every proof that entered the queue, best first.
pub fn heuristic_search(
    seeds: &[SearchRecord],
    budget: usize,
    config: &SearchConfig,
) -> Result<Vec<SearchRecord>, ProverError> {
    let mut seen: BTreeSet<Annotation> = seeds.iter().map(|r| r.annotation.clone()).collect();
    let mut queue: BinaryHeap<Queued> = seeds.iter().cloned().map(Queued).collect();
    let mut kept: Vec<SearchRecord> = seeds.to_vec();
    let mut spent = 0usize;
    while spent < budget {
        let Some(Queued(parent)) = queue.pop() else {
            break;
        };
        let batch: Vec<Annotation> = annotation::neighbors(&parent.annotation)
            .into_iter()
            .filter(|a| a.speedups() > 0 && !seen.contains(a))
            .take(budget - spent)
            .collect();
        spent += batch.len();
        seen.extend(batch.iter().cloned());
        for record in improvements(&batch, &parent, config)? {
            queue.push(Queued(record.clone()));
            kept.push(record);
        }
    }
    kept.sort_by(|a, b| a.rank(b));
    Ok(kept)
}

/// The shapes of `batch` whose best exponent exceeds the parent's.
///
/// Brackets live on one dyadic grid, so a shape beats the parent exactly
/// when it is feasible at the parent's `upper_c`; one LP settles the rest.
fn improvements(
    batch: &[Annotation],
    parent: &SearchRecord,
    config: &SearchConfig,
) -> Result<Vec<SearchRecord>, ProverError> {
    let pool = pool(config.workers)?;
    let results: Vec<Result<Option<SearchRecord>, ProverError>> = pool.install(|| {
        batch
            .par_iter()
            .map(|a| {
                if !is_feasible(a, &parent.upper_c, &config.eps)? {
                    return Ok(None);
                }
                let best = bisect(a, &config.tol, &config.eps, Some(&parent.upper_c))?;
                Ok(Some(SearchRecord::from_best(a.clone(), best)))
            })
            .collect()
    });
    results.into_iter().filter_map(Result::transpose).collect()
}

/// Best record of each length, shortest first.
pub fn frontier(records: &[SearchRecord]) -> Vec<SearchRecord> {
    let mut lengths: Vec<usize> = records.iter().map(|r| r.lines).collect();
    lengths.sort_unstable();
    lengths.dedup();
    lengths
        .into_iter()
        .filter_map(|l| best_of(records.iter().filter(|r| r.lines == l).cloned()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SafetyViolation {
    /// A proof of an `n^2` lower bound, which the proof system cannot give.
    Ceiling(Annotation, Rational),
    /// An exponent above `2cos(π/7)`; needs human review.
    Conjecture(Annotation, Rational),
}

pub fn safety_violations(records: &[SearchRecord]) -> Vec<SafetyViolation> {
    let ceiling = Rational::from_integer(2) - Rational::pow10_neg(6);
    let conjecture: Rational = CONJECTURED_LIMIT
        .parse::<Rational>()
        .expect("constant parses")
        + Rational::pow10_neg(4);
    let mut out = Vec::new();
    for r in records {
        if r.best_c >= ceiling {
            out.push(SafetyViolation::Ceiling(
                r.annotation.clone(),
                r.best_c.clone(),
            ));
        } else if r.best_c > conjecture {
            out.push(SafetyViolation::Conjecture(
                r.annotation.clone(),
                r.best_c.clone(),
            ));
        }
    }
    out
}
