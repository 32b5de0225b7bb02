use num_traits::{Signed, Zero};

use super::{evaluate, LinearProgram, LpOutcome, LpStatus, Relation, Sense};
use crate::instance::{zero, Rational};

/// How an original variable is expressed through nonnegative columns:
/// `x = offset + sum(sign * y_col)`.
struct Substitution {
    offset: Rational,
    columns: Vec<(usize, bool)>, // (column, negated)
}

struct Row {
    coeffs: Vec<(usize, Rational)>,
    relation: Relation,
    rhs: Rational,
}

struct Tableau {
    /// `rows[r]` has `width + 1` entries; the last one is the right-hand side.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    /// Reduced costs of a minimization, followed by minus the objective value.
    costs: Vec<Rational>,
    /// Columns that may enter the basis.
    allowed: usize,
}

enum Pivoting {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.costs.len() - 1
    }

    fn rhs(&self, r: usize) -> &Rational {
        &self.rows[r][self.width()]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.width();
        let inv = self.rows[pr][pc].recip();
        let pivot_row = &mut self.rows[pr];
        let mut nonzero = Vec::new();
        for c in 0..=width {
            if !pivot_row[c].is_zero() {
                pivot_row[c] *= &inv;
                nonzero.push(c);
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[pr]);
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == pr || row[pc].is_zero() {
                continue;
            }
            let factor = row[pc].clone();
            for &c in &nonzero {
                row[c] -= &factor * &pivot_row[c];
            }
        }
        if !self.costs[pc].is_zero() {
            let factor = self.costs[pc].clone();
            for &c in &nonzero {
                self.costs[c] -= &factor * &pivot_row[c];
            }
        }
        self.rows[pr] = pivot_row;
        self.basis[pr] = pc;
    }

    /// Bland's rule: lowest-index improving column enters, ratio ties go to
    /// the lowest-index basic variable.
    fn run(&mut self) -> Pivoting {
        let width = self.width();
        loop {
            let Some(enter) = (0..self.allowed).find(|&c| self.costs[c].is_negative()) else {
                return Pivoting::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rows[r][width] / a;
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Pivoting::Unbounded,
            }
        }
    }

    fn load_costs(&mut self, costs: &[Rational]) {
        let width = self.width();
        self.costs = costs.to_vec();
        self.costs.resize(width + 1, zero());
        for r in 0..self.rows.len() {
            let cb = self.costs[self.basis[r]].clone();
            if cb.is_zero() {
                continue;
            }
            for c in 0..=width {
                if !self.rows[r][c].is_zero() {
                    let delta = &cb * &self.rows[r][c];
                    self.costs[c] -= delta;
                }
            }
        }
    }
}

/// Solves `lp` exactly with a two-phase dense simplex.
pub fn solve(lp: &LinearProgram) -> LpOutcome {
    // Rewrite every variable over nonnegative columns.
    let mut subs = Vec::with_capacity(lp.vars.len());
    let mut bound_rows = Vec::new();
    let mut structural = 0usize;
    for var in &lp.vars {
        let sub = match (&var.lower, &var.upper) {
            (Some(l), upper) => {
                let col = structural;
                structural += 1;
                if let Some(u) = upper {
                    bound_rows.push(Row {
                        coeffs: vec![(col, Rational::from_integer(1.into()))],
                        relation: Relation::Le,
                        rhs: u - l,
                    });
                }
                Substitution {
                    offset: l.clone(),
                    columns: vec![(col, false)],
                }
            }
            (None, Some(u)) => {
                structural += 1;
                Substitution {
                    offset: u.clone(),
                    columns: vec![(structural - 1, true)],
                }
            }
            (None, None) => {
                structural += 2;
                Substitution {
                    offset: zero(),
                    columns: vec![(structural - 2, false), (structural - 1, true)],
                }
            }
        };
        subs.push(sub);
    }

    let substitute = |terms: &[(super::VarId, Rational)]| -> (Vec<(usize, Rational)>, Rational) {
        let mut dense: Vec<Rational> = vec![zero(); structural];
        let mut shift = zero();
        for (v, c) in terms {
            if c.is_zero() {
                continue;
            }
            let sub = &subs[v.0];
            if !sub.offset.is_zero() {
                shift += c * &sub.offset;
            }
            for &(col, negated) in &sub.columns {
                if negated {
                    dense[col] -= c;
                } else {
                    dense[col] += c;
                }
            }
        }
        let sparse = dense
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        (sparse, shift)
    };

    let mut rows: Vec<Row> = lp
        .constraints
        .iter()
        .map(|c| {
            let (coeffs, shift) = substitute(&c.terms);
            Row {
                coeffs,
                relation: c.relation,
                rhs: &c.rhs - shift,
            }
        })
        .collect();
    rows.extend(bound_rows);

    // Normalize to nonnegative right-hand sides.
    for row in &mut rows {
        if row.rhs.is_negative() {
            row.rhs = -&row.rhs;
            for (_, c) in &mut row.coeffs {
                *c = -&*c;
            }
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let slack_count = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let artificial_count = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let first_slack = structural;
    let first_artificial = structural + slack_count;
    let width = first_artificial + artificial_count;

    let mut table = Vec::with_capacity(rows.len());
    let mut basis = Vec::with_capacity(rows.len());
    let (mut next_slack, mut next_art) = (first_slack, first_artificial);
    for row in &rows {
        let mut dense = vec![zero(); width + 1];
        for (c, v) in &row.coeffs {
            dense[*c] = v.clone();
        }
        dense[width] = row.rhs.clone();
        match row.relation {
            Relation::Le => {
                dense[next_slack] = Rational::from_integer(1.into());
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                dense[next_slack] = Rational::from_integer((-1).into());
                next_slack += 1;
                dense[next_art] = Rational::from_integer(1.into());
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                dense[next_art] = Rational::from_integer(1.into());
                basis.push(next_art);
                next_art += 1;
            }
        }
        table.push(dense);
    }

    let mut tab = Tableau {
        rows: table,
        basis,
        costs: vec![zero(); width + 1],
        allowed: width,
    };

    // Phase 1: minimize the sum of artificials.
    if artificial_count > 0 {
        let mut phase1 = vec![zero(); width];
        for c in phase1.iter_mut().skip(first_artificial) {
            *c = Rational::from_integer(1.into());
        }
        tab.load_costs(&phase1);
        tab.run();
        if !tab.costs[width].is_zero() {
            return LpOutcome::infeasible();
        }
        // Drive remaining (zero-level) artificials out of the basis.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= first_artificial {
                match (0..first_artificial).find(|&c| !tab.rows[r][c].is_zero()) {
                    Some(c) => {
                        tab.pivot(r, c);
                        r += 1;
                    }
                    None => {
                        // redundant row
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        tab.allowed = first_artificial;
        for row in &mut tab.rows {
            for v in row.iter_mut().take(width).skip(first_artificial) {
                *v = zero();
            }
        }
    }

    if lp.sense != Sense::Feasibility {
        let (obj, _) = substitute(&lp.objective);
        let mut costs = vec![zero(); width];
        for (c, v) in obj {
            costs[c] = match lp.sense {
                Sense::Maximize => -v,
                _ => v,
            };
        }
        tab.load_costs(&costs);
        if let Pivoting::Unbounded = tab.run() {
            return LpOutcome::unbounded();
        }
    }

    let mut columns = vec![zero(); width];
    for (r, &b) in tab.basis.iter().enumerate() {
        columns[b] = tab.rhs(r).clone();
    }
    let values: Vec<Rational> = subs
        .iter()
        .map(|sub| {
            let mut x = sub.offset.clone();
            for &(col, negated) in &sub.columns {
                if negated {
                    x -= &columns[col];
                } else {
                    x += &columns[col];
                }
            }
            x
        })
        .collect();
    let objective = match lp.sense {
        Sense::Feasibility => zero(),
        _ => evaluate(&lp.objective, &values),
    };
    debug_assert!(lp.is_feasible_point(&values), "simplex returned an infeasible point");
    LpOutcome {
        status: LpStatus::Optimal,
        solution: Some(values),
        objective: Some(objective),
    }
}
