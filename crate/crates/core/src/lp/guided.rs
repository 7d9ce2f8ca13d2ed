//! Floating-point guidance for the exact solver.
//!
//! A dense `f64` simplex proposes a final basis; the basis is then checked in
//! exact arithmetic by two sparse solves (primal values and duals). A basis
//! that passes the check proves the claimed outcome exactly. Anything else
//! (rounding trouble, iteration cap, unboundedness) returns `None` and the
//! caller falls back to the exact tableau.

use std::collections::BTreeMap;

use crate::lp::{LinearProgram, LpSolution, Relation};
use crate::rational::Rational;

const TOL: f64 = 1e-9;

/// The program as `A x = b`, `b >= 0`, `x >= 0`, with one slack or surplus
/// column per inequality and one artificial column per row lacking a slack.
struct Standard {
    /// Sparse columns: structural, then slacks, then artificials.
    columns: Vec<Vec<(usize, Rational)>>,
    rhs: Vec<Rational>,
    n: usize,
    first_artificial: usize,
    /// Row whose starting basic column is this artificial or slack.
    start_basis: Vec<usize>,
}

impl Standard {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_variables();
        let constraints = lp.constraints();
        let m = constraints.len();
        let mut columns: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];
        let mut rhs = Vec::with_capacity(m);
        let mut slacks = Vec::new();
        let mut needs_artificial = Vec::new();
        let mut start_basis = vec![usize::MAX; m];
        for (r, c) in constraints.iter().enumerate() {
            let flip = c.rhs.is_negative();
            let mut merged: BTreeMap<usize, Rational> = BTreeMap::new();
            for (v, k) in &c.terms {
                let e = merged.entry(*v).or_insert_with(Rational::zero);
                *e = &*e + k;
            }
            for (v, k) in merged {
                if !k.is_zero() {
                    columns[v].push((r, if flip { -k } else { k }));
                }
            }
            rhs.push(if flip { -&c.rhs } else { c.rhs.clone() });
            let relation = match (c.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            };
            match relation {
                Relation::Le => {
                    start_basis[r] = n + slacks.len();
                    slacks.push(vec![(r, Rational::one())]);
                }
                Relation::Ge => {
                    slacks.push(vec![(r, -Rational::one())]);
                    needs_artificial.push(r);
                }
                Relation::Eq => needs_artificial.push(r),
            }
        }
        columns.extend(slacks);
        let first_artificial = columns.len();
        for r in needs_artificial {
            start_basis[r] = columns.len();
            columns.push(vec![(r, Rational::one())]);
        }
        Standard {
            columns,
            rhs,
            n,
            first_artificial,
            start_basis,
        }
    }

    fn dot(&self, j: usize, y: &[Rational]) -> Rational {
        self.columns[j].iter().map(|(r, v)| v * &y[*r]).sum()
    }
}

enum Claim {
    Infeasible,
    Feasible,
}

/// Dense floating-point two-phase simplex; returns the final basis.
fn float_basis(sf: &Standard, costs: Option<&[f64]>) -> Option<(Claim, Vec<usize>)> {
    let m = sf.rhs.len();
    let width = sf.columns.len();
    let mut t = vec![vec![0.0f64; width]; m];
    for (j, col) in sf.columns.iter().enumerate() {
        for (r, v) in col {
            t[*r][j] = v.to_f64();
        }
    }
    let mut rhs: Vec<f64> = sf.rhs.iter().map(Rational::to_f64).collect();
    let mut basis = sf.start_basis.clone();
    let cap = 20 * (m + width) + 100;
    let mut iterations = 0;

    let mut run = |t: &mut Vec<Vec<f64>>,
                   rhs: &mut Vec<f64>,
                   basis: &mut Vec<usize>,
                   c: &[f64],
                   allowed: usize|
     -> Option<bool> {
        let mut cost: Vec<f64> = c.to_vec();
        for r in 0..m {
            let cb = c[basis[r]];
            if cb != 0.0 {
                for j in 0..width {
                    cost[j] -= cb * t[r][j];
                }
            }
        }
        loop {
            iterations += 1;
            if iterations > cap {
                return None;
            }
            // Dantzig entering rule, Bland tie-break.
            let mut col = None;
            let mut most = -TOL;
            for (j, &cj) in cost.iter().enumerate().take(allowed) {
                if cj < most {
                    most = cj;
                    col = Some(j);
                }
            }
            let Some(col) = col else {
                return Some(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = t[r][col];
                if a <= TOL {
                    continue;
                }
                let ratio = rhs[r] / a;
                let better = match best {
                    None => true,
                    Some((br, bratio)) => {
                        ratio < bratio - TOL || (ratio <= bratio + TOL && basis[r] < basis[br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            let Some((row, _)) = best else {
                return Some(false);
            };
            let inv = 1.0 / t[row][col];
            for v in t[row].iter_mut() {
                *v *= inv;
            }
            rhs[row] *= inv;
            let pivot_row = t[row].clone();
            for r in 0..m {
                if r == row {
                    continue;
                }
                let f = t[r][col];
                if f != 0.0 {
                    for (v, p) in t[r].iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                    t[r][col] = 0.0;
                    rhs[r] -= f * rhs[row];
                }
            }
            let f = cost[col];
            for (v, p) in cost.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            cost[col] = 0.0;
            basis[row] = col;
        }
    };

    let mut phase_one = vec![0.0; width];
    phase_one[sf.first_artificial..].fill(1.0);
    if !run(&mut t, &mut rhs, &mut basis, &phase_one, width)? {
        return None;
    }
    let infeasibility: f64 = (0..m)
        .filter(|&r| basis[r] >= sf.first_artificial)
        .map(|r| rhs[r])
        .sum();
    if infeasibility > 1e-7 {
        return Some((Claim::Infeasible, basis));
    }
    // Drive zero-level artificials out where a real column allows it.
    for r in 0..m {
        if basis[r] < sf.first_artificial {
            continue;
        }
        if let Some(col) = (0..sf.first_artificial).find(|&j| t[r][j].abs() > 1e-7) {
            let inv = 1.0 / t[r][col];
            for v in t[r].iter_mut() {
                *v *= inv;
            }
            rhs[r] *= inv;
            let pivot_row = t[r].clone();
            for i in 0..m {
                if i != r && t[i][col] != 0.0 {
                    let f = t[i][col];
                    for (v, p) in t[i].iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                    rhs[i] -= f * rhs[r];
                }
            }
            basis[r] = col;
        }
    }
    if let Some(c) = costs {
        let mut full = vec![0.0; width];
        full[..sf.n].copy_from_slice(c);
        if !run(&mut t, &mut rhs, &mut basis, &full, sf.first_artificial)? {
            return None;
        }
    }
    Some((Claim::Feasible, basis))
}

/// Solves a square sparse system `rows · x = rhs` exactly, by Gaussian
/// elimination with a cheapest-column pivot choice. `None` if singular.
fn sparse_solve(
    mut rows: Vec<BTreeMap<usize, Rational>>,
    mut rhs: Vec<Rational>,
) -> Option<Vec<Rational>> {
    let m = rows.len();
    let mut in_col: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (r, row) in rows.iter().enumerate() {
        for &c in row.keys() {
            in_col[c].push(r);
        }
    }
    let mut row_done = vec![false; m];
    let mut col_done = vec![false; m];
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(m);
    for _ in 0..m {
        // Column with the fewest live rows, then the shortest such row.
        let mut pick: Option<(usize, usize, usize)> = None;
        for c in (0..m).filter(|&c| !col_done[c]) {
            in_col[c].retain(|&r| !row_done[r] && rows[r].contains_key(&c));
            let count = in_col[c].len();
            if count == 0 {
                return None;
            }
            if pick.is_none_or(|(_, _, best)| count < best) {
                let r = *in_col[c]
                    .iter()
                    .min_by_key(|&&r| (rows[r].len(), r))
                    .unwrap();
                pick = Some((r, c, count));
                if count == 1 {
                    break;
                }
            }
        }
        let (pr, pc, _) = pick?;
        row_done[pr] = true;
        col_done[pc] = true;
        order.push((pr, pc));
        let pivot_row = rows[pr].clone();
        let pivot = pivot_row[&pc].clone();
        let targets: Vec<usize> = in_col[pc].iter().copied().filter(|&r| r != pr).collect();
        for r in targets {
            let Some(a) = rows[r].get(&pc).cloned() else {
                continue;
            };
            let f = &a / &pivot;
            for (c, v) in &pivot_row {
                let e = rows[r].entry(*c).or_insert_with(Rational::zero);
                *e = &*e - &f * v;
                if e.is_zero() {
                    rows[r].remove(c);
                } else if !in_col[*c].contains(&r) {
                    in_col[*c].push(r);
                }
            }
            rows[r].remove(&pc);
            rhs[r] = &rhs[r] - &f * &rhs[pr];
        }
    }
    let mut x = vec![Rational::zero(); m];
    for &(r, c) in order.iter().rev() {
        let mut acc = rhs[r].clone();
        for (j, v) in &rows[r] {
            if *j != c {
                acc = acc - v * &x[*j];
            }
        }
        x[c] = acc / &rows[r][&c];
    }
    Some(x)
}

/// Exact outcome proven from a floating-point basis, if the proof succeeds.
pub fn solve(lp: &LinearProgram, optimize: bool) -> Option<LpSolution> {
    let sf = Standard::new(lp);
    let m = sf.rhs.len();
    if m == 0 {
        return None;
    }
    let mut costs = vec![Rational::zero(); sf.n];
    for (v, k) in lp.objective() {
        costs[*v] = &costs[*v] + k;
    }
    let float_costs: Vec<f64> = costs.iter().map(Rational::to_f64).collect();
    let (claim, basis) = float_basis(&sf, optimize.then_some(float_costs.as_slice()))?;

    // Rows of B (for the primal values) and of B^T (for the duals).
    let mut b_rows: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); m];
    let mut bt_rows: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); m];
    for (k, &j) in basis.iter().enumerate() {
        for (r, v) in &sf.columns[j] {
            b_rows[*r].insert(k, v.clone());
            bt_rows[k].insert(*r, v.clone());
        }
    }
    let basic_cost = |j: usize| -> Rational {
        match claim {
            Claim::Infeasible => {
                if j >= sf.first_artificial {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Claim::Feasible => {
                if optimize && j < sf.n {
                    costs[j].clone()
                } else {
                    Rational::zero()
                }
            }
        }
    };
    match claim {
        Claim::Infeasible => {
            // Farkas: y^T A_j <= 0 on every real column and y^T b > 0.
            let y = sparse_solve(bt_rows, basis.iter().map(|&j| basic_cost(j)).collect())?;
            let yb: Rational = y.iter().zip(&sf.rhs).map(|(a, b)| a * b).sum();
            if !yb.is_positive() {
                return None;
            }
            if (0..sf.first_artificial).any(|j| sf.dot(j, &y).is_positive()) {
                return None;
            }
            Some(LpSolution::Infeasible)
        }
        Claim::Feasible => {
            let xb = sparse_solve(b_rows, sf.rhs.clone())?;
            if xb.iter().any(Rational::is_negative) {
                return None;
            }
            let mut assignment = vec![Rational::zero(); sf.n];
            for (k, &j) in basis.iter().enumerate() {
                if j >= sf.first_artificial && !xb[k].is_zero() {
                    return None;
                }
                if j < sf.n {
                    assignment[j] = xb[k].clone();
                }
            }
            if optimize {
                let y = sparse_solve(bt_rows, basis.iter().map(|&j| basic_cost(j)).collect())?;
                let dual_feasible = (0..sf.first_artificial).all(|j| {
                    let c = if j < sf.n {
                        costs[j].clone()
                    } else {
                        Rational::zero()
                    };
                    !(c - sf.dot(j, &y)).is_negative()
                });
                if !dual_feasible {
                    return None;
                }
            }
            let objective_value = lp.objective_value(&assignment);
            Some(LpSolution::Feasible {
                assignment,
                objective_value,
            })
        }
    }
}
