//! Running-time recurrences of branching algorithms.
//!
//! A branching rule that recurses on instances smaller by `d₁, …, d_k` gives
//! `T(n) ≤ Σ T(n − dᵢ)`, hence `T(n) = O(xⁿ)` for the unique `x ≥ 1` with
//! `Σ x^{−dᵢ} = 1`. With several progress measures, a weight vector folds
//! them into one potential and the weights are tuned to minimize the worst
//! root over all branching rules.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::rational::Rational;

/// Largest scaled exponent handled by exact rational evaluation; beyond it
/// roots are bracketed in binary floating point.
const EXACT_EXPONENT_LIMIT: u64 = 4096;
const MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecurrenceError {
    #[error("decrement list is empty")]
    NoDecrements,
    #[error("decrement {0} is not positive")]
    NonPositiveDecrement(Rational),
    #[error("tolerance {0} must be positive")]
    NonPositiveTolerance(Rational),
    #[error("branch {0} has a zero weighted decrement")]
    ZeroDecrement(usize),
    #[error("expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("branch {0} must be nonnegative with a positive entry")]
    BadBranch(usize),
    #[error("weight {0} is negative")]
    NegativeWeight(Rational),
    #[error("no point of the weight domain gives positive decrements")]
    DegenerateBox,
    #[error("empty interval for coordinate {0}")]
    EmptyInterval(usize),
    #[error("cannot parse {0:?}")]
    Parse(String),
}

/// `lo ≤ x* ≤ hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootBracket {
    pub lo: Rational,
    pub hi: Rational,
    /// False when the endpoints came from floating-point bisection.
    pub exact: bool,
}

impl RootBracket {
    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

impl fmt::Display for RootBracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

fn check_decrements(decrements: &[Rational]) -> Result<(), RecurrenceError> {
    if decrements.is_empty() {
        return Err(RecurrenceError::NoDecrements);
    }
    if let Some(d) = decrements.iter().find(|d| !d.is_positive()) {
        return Err(RecurrenceError::NonPositiveDecrement(d.clone()));
    }
    Ok(())
}

/// The growth root of `T(n) ≤ Σ T(n − dᵢ)`, bracketed to width `tol`.
///
/// Decrements with common denominator `Q` are handled exactly through
/// `x = y^Q`, which turns every term into an integer power of `y`.
pub fn growth_root(
    decrements: &[Rational],
    tol: &Rational,
) -> Result<RootBracket, RecurrenceError> {
    check_decrements(decrements)?;
    if !tol.is_positive() {
        return Err(RecurrenceError::NonPositiveTolerance(tol.clone()));
    }
    if decrements.len() == 1 {
        return Ok(RootBracket {
            lo: Rational::one(),
            hi: Rational::one(),
            exact: true,
        });
    }
    let q = decrements
        .iter()
        .fold(BigInt::one(), |acc, d| acc.lcm(d.denom()));
    let scaled: Option<Vec<u64>> = decrements
        .iter()
        .map(|d| (d.numer() * (&q / d.denom())).to_u64())
        .collect();
    match (q.to_u64(), scaled) {
        (Some(q), Some(p)) if q <= 64 && p.iter().all(|&e| e <= EXACT_EXPONENT_LIMIT) => {
            Ok(exact_root(&p, q as u32, tol))
        }
        _ => Ok(float_root(decrements, tol)),
    }
}

fn exact_root(exponents: &[u64], q: u32, tol: &Rational) -> RootBracket {
    // sign of 1 − Σ y^{−pᵢ}: negative below the root, positive above.
    let above = |y: &Rational| {
        let s: Rational = exponents.iter().map(|&p| y.pow(-(p as i32))).sum();
        s <= Rational::one()
    };
    let mut lo = Rational::one();
    let mut step = Rational::one();
    let mut hi = &lo + &step;
    while !above(&hi) {
        lo = hi;
        step = &step * Rational::from_integer(2);
        hi = &Rational::one() + &step;
    }
    let two = Rational::from_integer(2);
    let qi = q as i32;
    while &hi.pow(qi) - &lo.pow(qi) > *tol {
        let mid = (&lo + &hi) / &two;
        if above(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    RootBracket {
        lo: lo.pow(qi),
        hi: hi.pow(qi),
        exact: true,
    }
}

fn float_root(decrements: &[Rational], tol: &Rational) -> RootBracket {
    let d: Vec<f64> = decrements.iter().map(Rational::to_f64).collect();
    let tol = tol.to_f64().max(1e-12);
    let (lo, hi) = float_bracket(&d, tol / 2.0);
    // Cover rounding in the sign evaluations.
    let slack = 8.0 * f64::EPSILON * hi;
    RootBracket {
        lo: Rational::from_f64((lo - slack).max(1.0)).expect("finite"),
        hi: Rational::from_f64(hi + slack).expect("finite"),
        exact: false,
    }
}

fn float_bracket(d: &[f64], tol: f64) -> (f64, f64) {
    let above = |x: f64| d.iter().map(|&di| x.powf(-di)).sum::<f64>() <= 1.0;
    let mut lo = 1.0f64;
    let mut step = 1.0f64;
    let mut hi = lo + step;
    while !above(hi) {
        lo = hi;
        step *= 2.0;
        hi = 1.0 + step;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Floating-point growth root, for use inside searches.
pub fn growth_root_f64(decrements: &[f64]) -> f64 {
    if decrements.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return f64::INFINITY;
    }
    if decrements.len() == 1 {
        return 1.0;
    }
    let (lo, hi) = float_bracket(decrements, 1e-14);
    0.5 * (lo + hi)
}

/// Decrement vectors over named progress measures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchRecurrence {
    pub measures: Vec<String>,
    pub branches: Vec<Vec<Rational>>,
}

impl BranchRecurrence {
    pub fn new(
        measures: Vec<String>,
        branches: Vec<Vec<Rational>>,
    ) -> Result<Self, RecurrenceError> {
        if branches.is_empty() {
            return Err(RecurrenceError::NoDecrements);
        }
        for (i, b) in branches.iter().enumerate() {
            if b.len() != measures.len() {
                return Err(RecurrenceError::DimensionMismatch {
                    expected: measures.len(),
                    found: b.len(),
                });
            }
            if b.iter().any(Rational::is_negative) || !b.iter().any(Rational::is_positive) {
                return Err(RecurrenceError::BadBranch(i));
            }
        }
        Ok(BranchRecurrence { measures, branches })
    }

    pub fn dimension(&self) -> usize {
        self.measures.len()
    }
}

/// Parses `"3,1;5,4"`: branches split by `;`, coordinates by `,`. Measures
/// are named `m1, m2, …`.
impl FromStr for BranchRecurrence {
    type Err = RecurrenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let branches = s
            .split(';')
            .map(parse_list)
            .collect::<Result<Vec<_>, _>>()?;
        let dim = branches.first().map_or(0, Vec::len);
        let measures = (1..=dim).map(|i| format!("m{i}")).collect();
        BranchRecurrence::new(measures, branches)
    }
}

/// Comma-separated rationals.
pub fn parse_list(s: &str) -> Result<Vec<Rational>, RecurrenceError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<Rational>()
                .map_err(|_| RecurrenceError::Parse(s.to_string()))
        })
        .collect()
}

/// `⟨weights, δ⟩` for every branch `δ`.
pub fn combine_weights(
    r: &BranchRecurrence,
    weights: &[Rational],
) -> Result<Vec<Rational>, RecurrenceError> {
    if weights.len() != r.dimension() {
        return Err(RecurrenceError::DimensionMismatch {
            expected: r.dimension(),
            found: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| w.is_negative()) {
        return Err(RecurrenceError::NegativeWeight(w.clone()));
    }
    r.branches
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let d: Rational = b.iter().zip(weights).map(|(x, w)| x * w).sum();
            if d.is_positive() {
                Ok(d)
            } else {
                Err(RecurrenceError::ZeroDecrement(i))
            }
        })
        .collect()
}

/// Per-coordinate closed intervals, optionally intersected with the
/// hyperplane `Σ wᵢ = sum` (the last coordinate is then determined by the
/// others).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightDomain {
    pub bounds: Vec<(Rational, Rational)>,
    pub sum: Option<Rational>,
}

impl WeightDomain {
    pub fn boxed(bounds: Vec<(Rational, Rational)>) -> Self {
        WeightDomain { bounds, sum: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightOptimum {
    pub weights: Vec<Rational>,
    pub objective: RootBracket,
    /// Coordinate descent settled and no perturbation of the result improved it.
    pub converged: bool,
}

struct Objective {
    branches: Vec<Vec<Vec<f64>>>,
    bounds: Vec<(f64, f64)>,
    sum: Option<f64>,
}

impl Objective {
    fn free(&self) -> usize {
        self.bounds.len() - usize::from(self.sum.is_some())
    }

    /// Completes the free coordinates to a full weight vector.
    fn full(&self, free: &[f64]) -> Option<Vec<f64>> {
        let mut w = free.to_vec();
        if let Some(s) = self.sum {
            let last = s - free.iter().sum::<f64>();
            let (lo, hi) = self.bounds[self.bounds.len() - 1];
            if last < lo - 1e-12 || last > hi + 1e-12 {
                return None;
            }
            w.push(last.clamp(lo, hi));
        }
        Some(w)
    }

    fn value(&self, free: &[f64]) -> f64 {
        let Some(w) = self.full(free) else {
            return f64::INFINITY;
        };
        self.branches
            .iter()
            .map(|system| {
                let d: Vec<f64> = system
                    .iter()
                    .map(|b| b.iter().zip(&w).map(|(x, y)| x * y).sum())
                    .collect();
                growth_root_f64(&d)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Feasible range of free coordinate `j` with the others fixed.
    fn range(&self, free: &[f64], j: usize) -> (f64, f64) {
        let (mut lo, mut hi) = self.bounds[j];
        if let Some(s) = self.sum {
            let (llo, lhi) = self.bounds[self.bounds.len() - 1];
            let others: f64 = free
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, v)| v)
                .sum();
            lo = lo.max(s - others - lhi);
            hi = hi.min(s - others - llo);
        }
        (lo, hi)
    }

    fn line_search(&self, point: &mut [f64], j: usize) {
        let (lo0, hi0) = self.range(point, j);
        if lo0 > hi0 {
            return;
        }
        let eval = |p: &mut [f64], v: f64| {
            p[j] = v;
            self.value(p)
        };
        let mut probe = point.to_vec();
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..200 {
            if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
                break;
            }
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if eval(&mut probe, m1) <= eval(&mut probe, m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let mut best = (self.value(point), point[j]);
        for v in [0.5 * (lo + hi), lo0, hi0] {
            let f = eval(&mut probe, v);
            if f < best.0 {
                best = (f, v);
            }
        }
        point[j] = best.1;
    }
}

/// Simplest rational in `[lo, hi]` (smallest denominator), for `0 ≤ lo ≤ hi`.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    let fl = Rational::from_big(lo.as_big().floor().to_integer(), BigInt::one());
    if fl == *lo {
        return fl;
    }
    let next = &fl + Rational::one();
    if next <= *hi {
        return next;
    }
    let inner = simplest_between(&(hi - &fl).recip(), &(lo - &fl).recip());
    fl + inner.recip()
}

/// Minimizes the worst growth root over `systems` across the weight domain by
/// cyclic coordinate descent with ternary line searches.
pub fn optimize_weights(
    systems: &[BranchRecurrence],
    domain: &WeightDomain,
    tol: &Rational,
) -> Result<WeightOptimum, RecurrenceError> {
    if systems.is_empty() {
        return Err(RecurrenceError::NoDecrements);
    }
    if !tol.is_positive() {
        return Err(RecurrenceError::NonPositiveTolerance(tol.clone()));
    }
    let dim = domain.bounds.len();
    for s in systems {
        if s.dimension() != dim {
            return Err(RecurrenceError::DimensionMismatch {
                expected: dim,
                found: s.dimension(),
            });
        }
    }
    for (i, (lo, hi)) in domain.bounds.iter().enumerate() {
        if lo > hi {
            return Err(RecurrenceError::EmptyInterval(i));
        }
        if lo.is_negative() {
            return Err(RecurrenceError::NegativeWeight(lo.clone()));
        }
    }
    let objective = Objective {
        branches: systems
            .iter()
            .map(|s| {
                s.branches
                    .iter()
                    .map(|b| b.iter().map(Rational::to_f64).collect())
                    .collect()
            })
            .collect(),
        bounds: domain
            .bounds
            .iter()
            .map(|(lo, hi)| (lo.to_f64(), hi.to_f64()))
            .collect(),
        sum: domain.sum.as_ref().map(Rational::to_f64),
    };
    let tol_f = tol.to_f64();

    let free = objective.free();
    let mut point: Vec<f64> = objective.bounds[..free]
        .iter()
        .map(|(lo, hi)| 0.5 * (lo + hi))
        .collect();
    if !objective.value(&point).is_finite() {
        let corners = [
            objective.bounds[..free]
                .iter()
                .map(|b| b.1)
                .collect::<Vec<_>>(),
            objective.bounds[..free]
                .iter()
                .map(|b| b.0)
                .collect::<Vec<_>>(),
        ];
        point = corners
            .into_iter()
            .find(|c| objective.value(c).is_finite())
            .ok_or(RecurrenceError::DegenerateBox)?;
    }

    let mut current = objective.value(&point);
    let mut settled = false;
    for _ in 0..MAX_SWEEPS {
        let before = point.clone();
        for j in 0..free {
            objective.line_search(&mut point, j);
        }
        let value = objective.value(&point);
        let moved = point
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let gain = current - value;
        current = value;
        if gain <= tol_f * 1e-3 && moved <= 1e-10 {
            settled = true;
            break;
        }
    }

    // Prefer short rationals that are just as good.
    let candidate: Vec<Rational> = point
        .iter()
        .zip(&domain.bounds)
        .map(|(&v, (lo, hi))| {
            let exact = Rational::from_f64(v).expect("finite coordinate");
            let radius = Rational::from_f64(1e-9).expect("finite");

            simplest_between(
                &(&exact - &radius).max(lo.clone()),
                &(&exact + &radius).min(hi.clone()),
            )
        })
        .collect();
    let snapped_f: Vec<f64> = candidate.iter().map(Rational::to_f64).collect();
    let free_weights = if objective.value(&snapped_f) <= current + tol_f * 1e-2 {
        candidate
    } else {
        point
            .iter()
            .map(|&v| Rational::from_f64(v).expect("finite coordinate"))
            .collect()
    };
    let mut weights = free_weights;
    if let Some(s) = &domain.sum {
        let rest: Rational = weights.iter().sum();
        let (lo, hi) = &domain.bounds[dim - 1];
        weights.push((s - &rest).max(lo.clone()).min(hi.clone()));
    }

    let mut lo = Rational::one();
    let mut hi = Rational::one();
    let mut exact = true;
    for s in systems {
        let root = growth_root(&combine_weights(s, &weights)?, tol)?;
        lo = lo.max(root.lo);
        hi = hi.max(root.hi);
        exact &= root.exact;
    }

    let reported: Vec<f64> = weights[..free].iter().map(Rational::to_f64).collect();
    let base = objective.value(&reported);
    let perturbation_improves = (0..free).any(|j| {
        [-1e-6, 1e-6].iter().any(|&h| {
            let mut p = reported.clone();
            p[j] += h;
            let (a, b) = objective.bounds[j];
            p[j] >= a && p[j] <= b && objective.value(&p) < base - tol_f
        })
    });

    Ok(WeightOptimum {
        weights,
        objective: RootBracket { lo, hi, exact },
        converged: settled && !perturbation_improves,
    })
}

/// Node count of the recursion tree `T(k) = 1 + Σ T(k − dᵢ)`, `T(k ≤ 0) = 1`.
pub fn tree_size(decrements: &[u64], budget: u64) -> BigUint {
    let k = budget as usize;
    let mut t: Vec<BigUint> = Vec::with_capacity(k + 1);
    t.push(BigUint::one());
    for i in 1..=k {
        let mut v = BigUint::one();
        for &d in decrements {
            v += if (d as usize) < i {
                t[i - d as usize].clone()
            } else {
                BigUint::one()
            };
        }
        t.push(v);
    }
    t.pop().unwrap_or_else(BigUint::zero)
}
