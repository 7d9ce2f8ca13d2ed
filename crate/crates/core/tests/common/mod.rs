//! Shared helpers for the integration tests: a brute-force LP oracle and
//! seeded generators.

#![allow(dead_code)]

use atlp::lp::Constraint;
use atlp::rational::q;
use atlp::{LinearProgram, Rational, Relation};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleStatus {
    Infeasible,
    Unbounded,
    Optimal(Rational),
}

/// A hyperplane `row · x = rhs`.
type Plane = (Vec<Rational>, Rational);

/// Solves a square system by Gauss-Jordan elimination; `None` if singular.
pub fn solve_square(planes: &[&Plane]) -> Option<Vec<Rational>> {
    let n = planes.len();
    let mut m: Vec<Vec<Rational>> = planes
        .iter()
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for j in col..=n {
            m[col][j] = &m[col][j] * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in col..=n {
                    m[r][j] = &m[r][j] - &f * &m[col][j];
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

fn dense(c: &Constraint, n: usize) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); n];
    for (v, k) in &c.terms {
        row[*v] = &row[*v] + k;
    }
    row
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Least objective over the vertices of `{x >= 0, rows}`, where each row is
/// `(coefficients, relation, rhs)`. `None` if there is no vertex.
fn best_vertex(
    n: usize,
    rows: &[(Vec<Rational>, Relation, Rational)],
    objective: &[Rational],
) -> Option<Rational> {
    let mut planes: Vec<Plane> = rows
        .iter()
        .map(|(r, _, b)| (r.clone(), b.clone()))
        .collect();
    for j in 0..n {
        let mut e = vec![Rational::zero(); n];
        e[j] = Rational::one();
        planes.push((e, Rational::zero()));
    }
    let feasible = |x: &[Rational]| {
        x.iter().all(|v| !v.is_negative())
            && rows.iter().all(|(r, rel, b)| rel.holds(&dot(r, x), b))
    };
    let mut best: Option<Rational> = None;
    for subset in subsets(planes.len(), n) {
        let chosen: Vec<&Plane> = subset.iter().map(|&i| &planes[i]).collect();
        let Some(x) = solve_square(&chosen) else {
            continue;
        };
        if feasible(&x) {
            let value = dot(objective, &x);
            if best.as_ref().is_none_or(|b| value < *b) {
                best = Some(value);
            }
        }
    }
    best
}

/// Status and optimum by vertex enumeration. Unboundedness is decided on the
/// recession cone normalized by `sum d = 1`.
pub fn vertex_oracle(lp: &LinearProgram) -> OracleStatus {
    let n = lp.num_variables();
    let mut objective = vec![Rational::zero(); n];
    for (v, k) in lp.objective() {
        objective[*v] = &objective[*v] + k;
    }
    let rows: Vec<(Vec<Rational>, Relation, Rational)> = lp
        .constraints()
        .iter()
        .map(|c| (dense(c, n), c.relation, c.rhs.clone()))
        .collect();
    let Some(best) = best_vertex(n, &rows, &objective) else {
        return OracleStatus::Infeasible;
    };
    let mut cone: Vec<(Vec<Rational>, Relation, Rational)> = rows
        .iter()
        .map(|(r, rel, _)| (r.clone(), *rel, Rational::zero()))
        .collect();
    cone.push((vec![Rational::one(); n], Relation::Eq, Rational::one()));
    match best_vertex(n, &cone, &objective) {
        Some(slope) if slope.is_negative() => OracleStatus::Unbounded,
        _ => OracleStatus::Optimal(best),
    }
}

pub fn random_rational(rng: &mut ChaCha8Rng, span: i64) -> Rational {
    q(rng.gen_range(-span..=span), rng.gen_range(1..=3))
}

/// A program with at most 4 variables and at most 6 constraints.
pub fn random_program(rng: &mut ChaCha8Rng) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let n = rng.gen_range(1..=4);
    let vars: Vec<usize> = (0..n)
        .map(|j| lp.add_variable(format!("x{j}")).unwrap())
        .collect();
    for _ in 0..rng.gen_range(0..=6) {
        let mut terms: Vec<(usize, Rational)> = Vec::new();
        for &v in &vars {
            if rng.gen_bool(0.7) {
                terms.push((v, random_rational(rng, 5)));
            }
        }
        let relation = match rng.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Le,
            _ => Relation::Ge,
        };
        lp.add_constraint(terms, relation, random_rational(rng, 8))
            .unwrap();
    }
    // Mostly nonnegative costs so that bounded optima are common.
    let objective = vars
        .iter()
        .map(|&v| {
            let k = random_rational(rng, 4);
            (v, if rng.gen_bool(0.8) { k.abs() } else { k })
        })
        .collect();
    lp.minimize(objective).unwrap();
    lp
}
