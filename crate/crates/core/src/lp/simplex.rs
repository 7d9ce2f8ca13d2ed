//! Dense two-phase primal simplex over exact rationals.
//!
//! Bland's smallest-index rule is used for both the entering and the leaving
//! variable, which rules out cycling. Pivots skip zero entries, which matters
//! for the sparse proof programs.
//!
//! Before the tableau is built, equalities of the form `k·x = b` and
//! `x − y = 0` are eliminated by substitution; proof programs consist largely
//! of such copy constraints. [`solve`] then tries a floating-point basis
//! checked exactly (see `guided`) and only runs the tableau if that fails.

use crate::lp::{guided, Constraint, LinearProgram, LpError, LpSolution, Relation};
use crate::rational::Rational;

struct Presolve {
    parent: Vec<usize>,
    fixed: Vec<Option<Rational>>,
}

impl Presolve {
    fn find(&mut self, v: usize) -> usize {
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = v;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Terms over surviving roots (merged, nonzero) plus the constant
    /// contributed by fixed variables.
    fn reduce(&mut self, terms: &[(usize, Rational)]) -> (Vec<(usize, Rational)>, Rational) {
        let mut constant = Rational::zero();
        let mut out: Vec<(usize, Rational)> = Vec::with_capacity(terms.len());
        for (v, k) in terms {
            let r = self.find(*v);
            if let Some(value) = &self.fixed[r] {
                constant = constant + k * value;
            } else if let Some(slot) = out.iter_mut().find(|(u, _)| *u == r) {
                slot.1 = &slot.1 + k;
            } else {
                out.push((r, k.clone()));
            }
        }
        out.retain(|(_, k)| !k.is_zero());
        (out, constant)
    }

    /// Returns false if the system is found infeasible.
    fn fix(&mut self, root: usize, value: Rational) -> bool {
        if value.is_negative() {
            return false;
        }
        match &self.fixed[root] {
            Some(old) => *old == value,
            None => {
                self.fixed[root] = Some(value);
                true
            }
        }
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        let (keep, drop) = (ra.min(rb), ra.max(rb));
        self.parent[drop] = keep;
        match self.fixed[drop].take() {
            Some(v) => self.fix(keep, v),
            None => true,
        }
    }
}

/// Substitutes away simple equalities. `None` means infeasible.
fn presolve(lp: &LinearProgram) -> Option<(Presolve, LinearProgram, Vec<Option<usize>>)> {
    let n = lp.num_variables();
    let mut ps = Presolve {
        parent: (0..n).collect(),
        fixed: vec![None; n],
    };
    let mut changed = true;
    while changed {
        changed = false;
        for c in lp
            .constraints()
            .iter()
            .filter(|c| c.relation == Relation::Eq)
        {
            let (terms, constant) = ps.reduce(&c.terms);
            let rhs = &c.rhs - &constant;
            match terms.as_slice() {
                [] if !rhs.is_zero() => return None,
                [(v, k)] => {
                    if !ps.fix(*v, &rhs / k) {
                        return None;
                    }
                    changed = true;
                }
                [(u, a), (w, b)] if rhs.is_zero() && *a == -b => {
                    if !ps.union(*u, *w) {
                        return None;
                    }
                    changed = true;
                }
                _ => {}
            }
        }
    }

    let mut index = vec![None; n];
    let mut reduced = LinearProgram::new();
    for v in 0..n {
        if ps.find(v) == v && ps.fixed[v].is_none() {
            index[v] = Some(
                reduced
                    .add_variable(lp.names()[v].clone())
                    .expect("names are unique"),
            );
        }
    }
    let remap = |terms: Vec<(usize, Rational)>| -> Vec<(usize, Rational)> {
        terms
            .into_iter()
            .map(|(v, k)| (index[v].expect("surviving root"), k))
            .collect()
    };
    for Constraint {
        terms,
        relation,
        rhs,
    } in lp.constraints()
    {
        let (terms, constant) = ps.reduce(terms);
        let rhs = rhs - &constant;
        if terms.is_empty() {
            if !relation.holds(&Rational::zero(), &rhs) {
                return None;
            }
            continue;
        }
        reduced
            .add_constraint(remap(terms), *relation, rhs)
            .expect("remapped variables exist");
    }
    let (objective, _) = ps.reduce(lp.objective());
    reduced
        .minimize(remap(objective))
        .expect("remapped variables exist");
    Some((ps, reduced, index))
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Reduced costs, one per column.
    cost: Vec<Rational>,
    /// Negated objective value of the current basis.
    cost_rhs: Rational,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        let support: Vec<usize> = (0..self.rows[row].len())
            .filter(|&j| !self.rows[row][j].is_zero())
            .collect();
        for &j in &support {
            self.rows[row][j] = &self.rows[row][j] * &inv;
        }
        self.rhs[row] = &self.rhs[row] * &inv;

        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for r in 0..self.rows.len() {
            if r == row || self.rows[r][col].is_zero() {
                continue;
            }
            let factor = self.rows[r][col].clone();
            for &j in &support {
                self.rows[r][j] = &self.rows[r][j] - &factor * &pivot_row[j];
            }
            self.rhs[r] = &self.rhs[r] - &factor * &pivot_rhs;
        }
        if !self.cost[col].is_zero() {
            let factor = self.cost[col].clone();
            for &j in &support {
                self.cost[j] = &self.cost[j] - &factor * &pivot_row[j];
            }
            self.cost_rhs = &self.cost_rhs - &factor * &pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations over the columns `< allowed`. Returns `false`
    /// when the objective is unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        loop {
            let Some(col) = (0..allowed).find(|&j| self.cost[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &best {
                    None => true,
                    Some((br, bratio)) => {
                        ratio < *bratio || (ratio == *bratio && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }

    fn set_costs(&mut self, costs: &[Rational]) {
        self.cost = costs.to_vec();
        self.cost_rhs = Rational::zero();
        for r in 0..self.rows.len() {
            let cb = &costs[self.basis[r]];
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.cost.len() {
                if !self.rows[r][j].is_zero() {
                    self.cost[j] = &self.cost[j] - cb * &self.rows[r][j];
                }
            }
            self.cost_rhs = &self.cost_rhs - cb * &self.rhs[r];
        }
    }
}

/// Minimizes the program's objective over the nonnegative orthant.
///
/// Returns [`LpError::UnboundedObjective`] if the objective has no finite
/// minimum over a nonempty feasible region.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, true)
}

/// Some feasible point, without optimizing the objective.
pub fn find_feasible(lp: &LinearProgram) -> LpSolution {
    solve_with(lp, false).expect("phase one alone cannot be unbounded")
}

fn solve_with(lp: &LinearProgram, optimize: bool) -> Result<LpSolution, LpError> {
    let Some((mut ps, reduced, index)) = presolve(lp) else {
        return Ok(LpSolution::Infeasible);
    };
    let solution = match guided::solve(&reduced, optimize) {
        Some(sol) => sol,
        None => run_dense(&reduced, optimize)?,
    };
    let inner = match solution {
        LpSolution::Infeasible => return Ok(LpSolution::Infeasible),
        LpSolution::Feasible { assignment, .. } => assignment,
    };
    let assignment: Vec<Rational> = (0..lp.num_variables())
        .map(|v| {
            let r = ps.find(v);
            match (&ps.fixed[r], index[r]) {
                (Some(value), _) => value.clone(),
                (None, Some(i)) => inner[i].clone(),
                (None, None) => unreachable!("every root is fixed or kept"),
            }
        })
        .collect();
    debug_assert!(lp.is_feasible_point(&assignment));
    let objective_value = lp.objective_value(&assignment);
    Ok(LpSolution::Feasible {
        assignment,
        objective_value,
    })
}

/// The tableau method proper, without presolve.
pub fn solve_dense(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    run_dense(lp, true)
}

fn run_dense(lp: &LinearProgram, optimize: bool) -> Result<LpSolution, LpError> {
    let n = lp.num_variables();
    let constraints = lp.constraints();
    let m = constraints.len();

    // Column layout: originals, then one slack/surplus per inequality, then
    // one artificial per row that lacks a unit slack.
    let num_slacks = constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut needs_artificial = Vec::with_capacity(m);
    let mut slack_col = n;
    for c in constraints {
        let mut row = vec![Rational::zero(); n + num_slacks];
        for (v, k) in &c.terms {
            row[*v] = &row[*v] + k;
        }
        let mut b = c.rhs.clone();
        let mut relation = c.relation;
        if b.is_negative() {
            row.iter_mut().for_each(|x| *x = -&*x);
            b = -b;
            relation = match relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        match relation {
            Relation::Le => {
                row[slack_col] = Rational::one();
                basis.push(slack_col);
                needs_artificial.push(false);
                slack_col += 1;
            }
            Relation::Ge => {
                row[slack_col] = -Rational::one();
                basis.push(usize::MAX);
                needs_artificial.push(true);
                slack_col += 1;
            }
            Relation::Eq => {
                basis.push(usize::MAX);
                needs_artificial.push(true);
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    let first_artificial = n + num_slacks;
    let num_artificial = needs_artificial.iter().filter(|&&b| b).count();
    let width = first_artificial + num_artificial;
    let mut art = first_artificial;
    for (r, row) in rows.iter_mut().enumerate() {
        row.resize(width, Rational::zero());
        if needs_artificial[r] {
            row[art] = Rational::one();
            basis[r] = art;
            art += 1;
        }
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        cost: Vec::new(),
        cost_rhs: Rational::zero(),
    };

    // Phase one: minimize the sum of artificials.
    if num_artificial > 0 {
        let mut phase_one = vec![Rational::zero(); width];
        phase_one[first_artificial..].fill(Rational::one());
        tab.set_costs(&phase_one);
        let bounded = tab.optimize(width);
        debug_assert!(bounded, "phase one is bounded below by zero");
        if !tab.cost_rhs.is_zero() {
            return Ok(LpSolution::Infeasible);
        }
        // Pivot zero-level artificials out of the basis; rows where that is
        // impossible are redundant and dropped.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] < first_artificial {
                r += 1;
                continue;
            }
            match (0..first_artificial).find(|&j| !tab.rows[r][j].is_zero()) {
                Some(col) => {
                    tab.pivot(r, col);
                    r += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.rhs.remove(r);
                    tab.basis.remove(r);
                }
            }
        }
    }

    if optimize {
        let mut costs = vec![Rational::zero(); width];
        for (v, k) in lp.objective() {
            costs[*v] = &costs[*v] + k;
        }
        tab.set_costs(&costs);
        if !tab.optimize(first_artificial) {
            return Err(LpError::UnboundedObjective);
        }
    }

    let mut assignment = vec![Rational::zero(); n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            assignment[b] = tab.rhs[r].clone();
        }
    }
    let objective_value = lp.objective_value(&assignment);
    debug_assert!(!optimize || objective_value == -tab.cost_rhs.clone());
    Ok(LpSolution::Feasible {
        assignment,
        objective_value,
    })
}
