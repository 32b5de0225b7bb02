//! Exact rational linear programming.
//!
//! Programs are built incrementally ([`LinearProgram`]) and solved by a
//! dense two-phase simplex ([`solve`]) over `BigRational` using Bland's
//! rule, so results are exact, deterministic, and always basic feasible
//! solutions.

mod simplex;

use std::fmt;

use num_traits::{Signed, Zero};

use crate::instance::{zero, Rational};

pub use simplex::solve;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
    /// Only feasibility matters; the objective is ignored.
    Feasibility,
}

pub type Terms = Vec<(VarId, Rational)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Terms,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(terms: Terms, relation: Relation, rhs: Rational) -> Self {
        Self { terms, relation, rhs }
    }

    pub fn lhs(&self, values: &[Rational]) -> Rational {
        evaluate(&self.terms, values)
    }

    pub fn is_satisfied(&self, values: &[Rational]) -> bool {
        self.relation.holds(&self.lhs(values), &self.rhs)
    }
}

pub fn evaluate(terms: &[(VarId, Rational)], values: &[Rational]) -> Rational {
    let mut acc = zero();
    for (v, c) in terms {
        if !c.is_zero() {
            acc += c * &values[v.0];
        }
    }
    acc
}

#[derive(Clone, Debug)]
struct Variable {
    name: String,
    lower: Option<Rational>,
    upper: Option<Rational>,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    vars: Vec<Variable>,
    objective: Terms,
    sense: Sense,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            vars: Vec::new(),
            objective: Vec::new(),
            sense,
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<Rational>, upper: Option<Rational>) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, Some(zero()), None)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, None, None)
    }

    /// Panics if a term references an undeclared variable.
    pub fn add_constraint(&mut self, terms: Terms, relation: Relation, rhs: Rational) {
        self.check_terms(&terms);
        self.constraints.push(Constraint::new(terms, relation, rhs));
    }

    pub fn push(&mut self, constraint: Constraint) {
        self.check_terms(&constraint.terms);
        self.constraints.push(constraint);
    }

    pub fn set_objective(&mut self, terms: Terms) {
        self.check_terms(&terms);
        self.objective = terms;
    }

    pub fn set_sense(&mut self, sense: Sense) {
        self.sense = sense;
    }

    fn check_terms(&self, terms: &[(VarId, Rational)]) {
        if let Some((v, _)) = terms.iter().find(|(v, _)| v.0 >= self.vars.len()) {
            panic!("constraint references undeclared variable #{}", v.0);
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, Rational)] {
        &self.objective
    }

    pub fn bounds(&self, v: VarId) -> (Option<&Rational>, Option<&Rational>) {
        let var = &self.vars[v.0];
        (var.lower.as_ref(), var.upper.as_ref())
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.vars[v.0].name
    }

    /// Exact re-substitution check of every constraint and bound.
    pub fn is_feasible_point(&self, values: &[Rational]) -> bool {
        values.len() == self.vars.len()
            && self.vars.iter().zip(values).all(|(var, x)| {
                var.lower.as_ref().map_or(true, |l| x >= l) && var.upper.as_ref().map_or(true, |u| x <= u)
            })
            && self.constraints.iter().all(|c| c.is_satisfied(values))
    }
}

impl fmt::Display for LinearProgram {
    /// CPLEX-like text dump, for debugging.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_terms = |f: &mut fmt::Formatter<'_>, terms: &[(VarId, Rational)]| -> fmt::Result {
            if terms.is_empty() {
                return write!(f, "0");
            }
            for (idx, (v, c)) in terms.iter().enumerate() {
                let sign = if c.is_negative() { "- " } else if idx > 0 { "+ " } else { "" };
                if idx > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{sign}{} {}", c.abs(), self.vars[v.0].name)?;
            }
            Ok(())
        };
        match self.sense {
            Sense::Maximize => writeln!(f, "Maximize")?,
            Sense::Minimize => writeln!(f, "Minimize")?,
            Sense::Feasibility => writeln!(f, "Feasibility")?,
        }
        write!(f, " obj: ")?;
        write_terms(f, &self.objective)?;
        writeln!(f)?;
        writeln!(f, "Subject To")?;
        for (idx, c) in self.constraints.iter().enumerate() {
            write!(f, " c{}: ", idx + 1)?;
            write_terms(f, &c.terms)?;
            writeln!(f, " {} {}", c.relation.symbol(), c.rhs)?;
        }
        writeln!(f, "Bounds")?;
        for var in &self.vars {
            match (&var.lower, &var.upper) {
                (None, None) => writeln!(f, " {} free", var.name)?,
                (Some(l), None) => writeln!(f, " {} >= {l}", var.name)?,
                (None, Some(u)) => writeln!(f, " -inf <= {} <= {u}", var.name)?,
                (Some(l), Some(u)) => writeln!(f, " {l} <= {} <= {u}", var.name)?,
            }
        }
        writeln!(f, "End")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve`]. For feasibility programs an `Optimal` status
/// means "feasible" and the objective value is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub solution: Option<Vec<Rational>>,
    pub objective: Option<Rational>,
}

impl LpOutcome {
    pub fn infeasible() -> Self {
        Self {
            status: LpStatus::Infeasible,
            solution: None,
            objective: None,
        }
    }

    pub fn unbounded() -> Self {
        Self {
            status: LpStatus::Unbounded,
            solution: None,
            objective: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Panics unless the outcome is optimal.
    pub fn value(&self, v: VarId) -> &Rational {
        &self.solution.as_ref().expect("no solution: program not optimal")[v.0]
    }
}

/// A constraint that only applies when its guard is strictly positive.
#[derive(Clone, Debug)]
pub struct Conditional {
    pub guard: Rational,
    pub constraint: Constraint,
}

/// Solves `base` together with every conditional whose guard is positive.
/// Guards are evaluated by the caller; inactive conditionals are dropped.
pub fn solve_conditional_feasibility(base: &LinearProgram, conditionals: &[Conditional]) -> LpOutcome {
    let mut lp = base.clone();
    for c in conditionals.iter().filter(|c| c.guard.is_positive()) {
        lp.push(c.constraint.clone());
    }
    solve(&lp)
}
