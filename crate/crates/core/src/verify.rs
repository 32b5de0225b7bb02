//! Independent checks of envy-freeness, Pareto optimality and welfare.
//!
//! Envy-freeness is a finite set of exact comparisons. Pareto optimality
//! is decided by an LP that looks for another lottery giving every agent
//! at least her current expected utility and maximizes the total surplus;
//! the lottery is undominated exactly when that optimum is zero.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_traits::Zero;
use serde_json::json;

use crate::assign::max_weight_assignment;
use crate::bvn::decompose;
use crate::error::{Error, Result};
use crate::instance::{ensure_valid, format_rational, one, to_f64, utility_table, zero, Instance, Lottery, Rational, SquareMatrix};
use crate::ratlp::{self, LinearProgram, Relation, Sense, VarId};
use crate::solver::model::LotteryModel;

/// Largest `m * n^2` handled by the exact backend in [`Backend::Auto`].
pub const EXACT_VARIABLE_LIMIT: usize = 50_000;

/// Objectives at or below this are treated as zero by the float backend.
pub const APPROX_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvyPair {
    pub envious: usize,
    pub envied: usize,
    /// `u_envious(q; envious)`
    pub own: Rational,
    /// `u_envious(q; envied)`
    pub other: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfReport {
    pub envy_free: bool,
    pub pairs: Vec<EnvyPair>,
}

pub fn verify_ef(inst: &Instance, lot: &Lottery) -> Result<EfReport> {
    ensure_valid(inst, lot)?;
    let table = utility_table(inst, lot)?;
    let mut pairs = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for (other, value) in row.iter().enumerate() {
            if other != i && value > &row[i] {
                pairs.push(EnvyPair {
                    envious: i,
                    envied: other,
                    own: row[i].clone(),
                    other: value.clone(),
                });
            }
        }
    }
    Ok(EfReport {
        envy_free: pairs.is_empty(),
        pairs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Approx,
    /// Exact up to [`EXACT_VARIABLE_LIMIT`], float beyond.
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParetoObjective {
    Exact(Rational),
    Approx(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParetoCertificate {
    pub dominated: bool,
    pub objective: ParetoObjective,
    /// Per-agent surplus `t_i` of the dominating lottery (exact mode only).
    pub excess: Option<Vec<Rational>>,
    pub dominating_lottery: Option<Lottery>,
    /// Exact mode, undominated: weights `y >= 1` for which the lottery
    /// maximizes `sum_i y_i u_i`.
    pub weights: Option<Vec<Rational>>,
}

impl ParetoCertificate {
    pub fn is_exact(&self) -> bool {
        matches!(self.objective, ParetoObjective::Exact(_))
    }
}

/// The dominance LP written out in full:
/// `max sum t_i` s.t. `u_i(q'; i) >= u_i(q; i) + t_i`, `t >= 0`, `q'` a lottery.
pub(crate) fn pareto_program(inst: &Instance, lot: &Lottery) -> Result<LinearProgram> {
    let table = utility_table(inst, lot)?;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let model = LotteryModel::add_to(&mut lp, inst.n(), inst.m());
    let surplus: Vec<VarId> = (0..inst.n()).map(|i| lp.add_nonneg(format!("t{}", i + 1))).collect();
    for (i, &t) in surplus.iter().enumerate() {
        let mut terms = model.utility_terms(inst, i, i);
        terms.push((t, -one()));
        lp.add_constraint(terms, Relation::Ge, table[i][i].clone());
    }
    lp.set_objective(surplus.iter().map(|&t| (t, one())).collect());
    Ok(lp)
}

pub fn verify_pareto(inst: &Instance, lot: &Lottery, backend: Backend) -> Result<ParetoCertificate> {
    ensure_valid(inst, lot)?;
    let exact = match backend {
        Backend::Exact => true,
        Backend::Approx => false,
        Backend::Auto => inst.m() * inst.n() * inst.n() <= EXACT_VARIABLE_LIMIT,
    };
    if exact {
        verify_pareto_exact(inst, lot)
    } else {
        verify_pareto_approx(inst, lot)
    }
}

/// Exact dominance check by cutting planes on the dual of the dominance
/// LP. The restricted dual over a set `S` of deterministic allocations is
/// `min mu - u.y` subject to `mu >= a_s.y` for `s` in `S` and `y >= 1`,
/// where `a_s` is the utility profile of `s` and `u` the profile of `lot`.
/// A maximum-weight assignment per partition finds the most violated
/// allocation. `S` starts from the support of the lottery, which keeps the
/// restricted dual bounded below by zero.
fn verify_pareto_exact(inst: &Instance, lot: &Lottery) -> Result<ParetoCertificate> {
    let n = inst.n();
    let table = utility_table(inst, lot)?;
    let own: Vec<Rational> = (0..n).map(|i| table[i][i].clone()).collect();
    let profile = |k: usize, perm: &[usize]| -> Vec<Rational> {
        perm.iter().enumerate().map(|(i, &j)| inst.utility(k, i, j).clone()).collect()
    };

    let mut columns: Vec<(usize, Vec<usize>)> = Vec::new();
    for part in decompose(lot)?.partitions() {
        for (perm, _) in &part.terms {
            columns.push((part.partition, perm.clone()));
        }
    }
    let mut profiles: Vec<Vec<Rational>> = columns.iter().map(|(k, perm)| profile(*k, perm)).collect();

    let (weights, gap) = loop {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let y: Vec<VarId> = (0..n).map(|i| lp.add_var(format!("y{}", i + 1), Some(one()), None)).collect();
        let mu = lp.add_free("mu");
        for a in &profiles {
            let mut terms = vec![(mu, one())];
            terms.extend(y.iter().zip(a).filter(|(_, c)| !c.is_zero()).map(|(&v, c)| (v, -c)));
            lp.add_constraint(terms, Relation::Ge, zero());
        }
        let mut objective = vec![(mu, one())];
        objective.extend(y.iter().zip(&own).filter(|(_, c)| !c.is_zero()).map(|(&v, c)| (v, -c)));
        lp.set_objective(objective);
        let out = ratlp::solve(&lp);
        let Some(gap) = out.objective.clone() else {
            return Err(Error::Internal(format!("restricted dominance dual reported {:?}", out.status)));
        };
        let weights: Vec<Rational> = y.iter().map(|&v| out.value(v).clone()).collect();
        let bound = out.value(mu).clone();

        let mut added = false;
        for k in 0..inst.m() {
            let w: Vec<Vec<Rational>> = (0..n)
                .map(|i| (0..n).map(|j| &weights[i] * inst.utility(k, i, j)).collect())
                .collect();
            let (perm, value) = max_weight_assignment(&w);
            if value > bound {
                profiles.push(profile(k, &perm));
                columns.push((k, perm));
                added = true;
            }
        }
        if !added {
            break (weights, gap);
        }
    };

    if gap.is_zero() {
        return Ok(ParetoCertificate {
            dominated: false,
            objective: ParetoObjective::Exact(gap),
            excess: None,
            dominating_lottery: None,
            weights: Some(weights),
        });
    }

    // Restricted primal over the final columns has the same optimum.
    let mut lp = LinearProgram::new(Sense::Maximize);
    let lambda: Vec<VarId> = (0..columns.len()).map(|s| lp.add_nonneg(format!("l{}", s + 1))).collect();
    let surplus: Vec<VarId> = (0..n).map(|i| lp.add_nonneg(format!("t{}", i + 1))).collect();
    for i in 0..n {
        let mut terms: Vec<_> = lambda
            .iter()
            .zip(&profiles)
            .filter(|(_, a)| !a[i].is_zero())
            .map(|(&l, a)| (l, a[i].clone()))
            .collect();
        terms.push((surplus[i], -one()));
        lp.add_constraint(terms, Relation::Ge, own[i].clone());
    }
    lp.add_constraint(lambda.iter().map(|&l| (l, one())).collect(), Relation::Eq, one());
    lp.set_objective(surplus.iter().map(|&t| (t, one())).collect());
    let out = ratlp::solve(&lp);
    if out.objective.as_ref() != Some(&gap) {
        return Err(Error::Internal("restricted dominance primal and dual disagree".into()));
    }
    let mut p = vec![zero(); inst.m()];
    let mut q = vec![SquareMatrix::zeros(n); inst.m()];
    for (&l, (k, perm)) in lambda.iter().zip(&columns) {
        let mass = out.value(l);
        if mass.is_zero() {
            continue;
        }
        p[*k] += mass;
        for (i, &j) in perm.iter().enumerate() {
            q[*k][(i, j)] += mass;
        }
    }
    Ok(ParetoCertificate {
        dominated: true,
        objective: ParetoObjective::Exact(gap),
        excess: Some(surplus.iter().map(|&t| out.value(t).clone()).collect()),
        dominating_lottery: Some(Lottery::new(p, q)?),
        weights: None,
    })
}

fn verify_pareto_approx(inst: &Instance, lot: &Lottery) -> Result<ParetoCertificate> {
    let (n, m) = (inst.n(), inst.m());
    let table = utility_table(inst, lot)?;
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let p: Vec<_> = (0..m).map(|_| problem.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let q: Vec<Vec<_>> = (0..m)
        .map(|_| (0..n * n).map(|_| problem.add_var(0.0, (0.0, f64::INFINITY))).collect())
        .collect();
    let t: Vec<_> = (0..n).map(|_| problem.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for k in 0..m {
        for j in 0..n {
            let mut row: Vec<_> = (0..n).map(|i| (q[k][i * n + j], 1.0)).collect();
            row.push((p[k], -1.0));
            problem.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
        }
        for i in 0..n {
            let mut row: Vec<_> = (0..n).map(|j| (q[k][i * n + j], 1.0)).collect();
            row.push((p[k], -1.0));
            problem.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
        }
    }
    let total: Vec<_> = p.iter().map(|&v| (v, 1.0)).collect();
    problem.add_constraint(total.as_slice(), ComparisonOp::Eq, 1.0);
    for i in 0..n {
        let mut row = Vec::new();
        for k in 0..m {
            for j in 0..n {
                let u = inst.utility(k, i, j);
                if !u.is_zero() {
                    row.push((q[k][i * n + j], to_f64(u)));
                }
            }
        }
        row.push((t[i], -1.0));
        problem.add_constraint(row.as_slice(), ComparisonOp::Ge, to_f64(&table[i][i]));
    }
    let solution = problem
        .solve()
        .map_err(|e| Error::Internal(format!("approximate dominance LP failed: {e}")))?;
    let objective = solution.objective();
    Ok(ParetoCertificate {
        dominated: objective > APPROX_TOLERANCE,
        objective: ParetoObjective::Approx(objective),
        excess: None,
        dominating_lottery: None,
        weights: None,
    })
}

/// Envy-free, undominated, and social welfare at least `threshold`.
pub fn verify_threshold(inst: &Instance, lot: &Lottery, threshold: &Rational) -> Result<bool> {
    let report = verify(inst, lot, Backend::Auto)?;
    Ok(report.envy_free && !report.pareto.dominated && &report.social_welfare >= threshold)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub envy_free: bool,
    pub envy_pairs: Vec<EnvyPair>,
    pub pareto: ParetoCertificate,
    pub social_welfare: Rational,
}

impl VerificationReport {
    pub fn passes(&self) -> bool {
        self.envy_free && !self.pareto.dominated
    }

    /// Report with 1-based agent indices and rational strings.
    pub fn to_json(&self) -> serde_json::Value {
        let (objective, mode) = match &self.pareto.objective {
            ParetoObjective::Exact(v) => (json!(format_rational(v)), "exact"),
            ParetoObjective::Approx(v) => (json!(v), "approx"),
        };
        let pairs: Vec<_> = self
            .envy_pairs
            .iter()
            .map(|p| {
                json!({
                    "envious": p.envious + 1,
                    "envied": p.envied + 1,
                    "own": format_rational(&p.own),
                    "other": format_rational(&p.other),
                })
            })
            .collect();
        json!({
            "ef": self.envy_free,
            "envy_pairs": pairs,
            "pareto": {"dominated": self.pareto.dominated, "objective": objective, "mode": mode},
            "social_welfare": format_rational(&self.social_welfare),
        })
    }
}

pub fn verify(inst: &Instance, lot: &Lottery, backend: Backend) -> Result<VerificationReport> {
    let ef = verify_ef(inst, lot)?;
    let pareto = verify_pareto(inst, lot, backend)?;
    let table = utility_table(inst, lot)?;
    let social_welfare = table.iter().enumerate().fold(zero(), |acc, (i, row)| acc + &row[i]);
    Ok(VerificationReport {
        envy_free: ef.envy_free,
        envy_pairs: ef.pairs,
        pareto,
        social_welfare,
    })
}
