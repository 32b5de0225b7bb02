use super::model::LotteryModel;
use super::{weighted_sum_lp, Method, SolveReport};
use crate::envy::{compute_rho, EnvyGraph, RhoEpsilon, WeightVector};
use crate::error::{Error, Result};
use crate::instance::{utility_table, Instance, Lottery};
use crate::ratlp::{self, LinearProgram, Relation, Sense};

pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationRecord {
    pub weights: WeightVector,
    pub envy_arcs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonConvergence {
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    /// Depth vectors tried by the fallback.
    pub candidates_tested: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixpointOutcome {
    Converged(SolveReport),
    NotConverged(NonConvergence),
}

impl FixpointOutcome {
    pub fn converged(self) -> Option<SolveReport> {
        match self {
            FixpointOutcome::Converged(r) => Some(r),
            FixpointOutcome::NotConverged(_) => None,
        }
    }
}

/// Looks for a pair `(q, w)` where `q` maximizes the `w`-weighted welfare
/// and `w` solves the weight program at `q`, which makes `q` envy-free
/// and Pareto-optimal.
///
/// Starting from uniform weights, each round solves the weighted-sum LP
/// and accepts its vertex if `w` already separates every envy arc. If not,
/// the optimal face at `w` is searched for a lottery in which no agent
/// envies anyone that `w` fails to separate her from; otherwise the
/// weights are re-synthesized from the envy graph. After `max_iters`
/// rounds every depth vector in `{0, .., n-1}^n` is tried the same way.
pub fn fixpoint_solve(inst: &Instance, max_iters: usize) -> Result<FixpointOutcome> {
    if max_iters == 0 {
        return Err(Error::Index("max_iters must be at least 1".into()));
    }
    let n = inst.n();
    let re = compute_rho(inst);
    let mut w = WeightVector::uniform(n);
    let mut trace = Vec::new();

    for round in 1..=max_iters {
        let (found, graph) = certify(inst, &w, &re)?;
        if let Some(lottery) = found {
            return Ok(FixpointOutcome::Converged(report(lottery, w, round, false)));
        }
        trace.push(IterationRecord {
            weights: w.clone(),
            envy_arcs: graph.arcs().iter().copied().collect(),
        });
        // A weighted-sum optimum is Pareto-optimal, so its envy graph is
        // acyclic; a cycle here means the LP result is wrong.
        let next = crate::envy::synthesize_weights(&graph, &re)?;
        // Each round is a function of w alone, so a repeat means a cycle.
        if next == w || trace.iter().any(|rec: &IterationRecord| rec.weights == next) {
            break;
        }
        w = next;
    }

    let iterations = trace.len();
    let mut depths = vec![0usize; n];
    let mut tested = 0;
    loop {
        tested += 1;
        let candidate = WeightVector::from_depths(&depths, &re.rho);
        if let (Some(lottery), _) = certify(inst, &candidate, &re)? {
            return Ok(FixpointOutcome::Converged(report(lottery, candidate, iterations + tested, true)));
        }
        if !next_depths(&mut depths, n) {
            break;
        }
    }
    Ok(FixpointOutcome::NotConverged(NonConvergence {
        iterations,
        trace,
        candidates_tested: tested,
    }))
}

fn report(lottery: Lottery, w: WeightVector, iterations: usize, fallback: bool) -> SolveReport {
    SolveReport {
        lottery,
        method: Method::Fixpoint,
        weights: w.into_inner(),
        iterations,
        faces_examined: 0,
        fallback,
    }
}

/// Odometer over `{0, .., n-1}^n`; returns false after the last vector.
fn next_depths(depths: &mut [usize], n: usize) -> bool {
    for d in depths.iter_mut().rev() {
        if *d + 1 < n {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

/// One weighted-sum round at `w`: returns a certified lottery, if any, and
/// the envy graph of the LP vertex.
fn certify(inst: &Instance, w: &WeightVector, re: &RhoEpsilon) -> Result<(Option<Lottery>, EnvyGraph)> {
    let optimum = weighted_sum_lp(inst, w)?;
    let graph = EnvyGraph::from_table(&utility_table(inst, &optimum.lottery)?);
    if w.separates(&graph, &re.rho) {
        return Ok((Some(optimum.lottery), graph));
    }

    // Search the whole optimal face: keep the weighted welfare at its
    // optimum and forbid envy wherever w_h > rho * w_l.
    let mut lp = LinearProgram::new(Sense::Feasibility);
    let model = LotteryModel::add_to(&mut lp, inst.n(), inst.m());
    lp.add_constraint(
        model.weighted_welfare_terms(inst, w.as_slice()),
        Relation::Eq,
        optimum.objective.clone(),
    );
    let ws = w.as_slice();
    for l in 0..inst.n() {
        for h in 0..inst.n() {
            if l != h && ws[h] > &re.rho * &ws[l] {
                model.add_no_envy(&mut lp, inst, l, h);
            }
        }
    }
    let out = ratlp::solve(&lp);
    Ok((out.is_optimal().then(|| model.extract(&out)), graph))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odometer_covers_all_vectors() {
        let mut d = vec![0; 3];
        let mut count = 1;
        while next_depths(&mut d, 3) {
            count += 1;
        }
        assert_eq!(count, 27);
        assert_eq!(d, vec![0, 0, 0]);
    }

    #[test]
    fn zero_iterations_rejected() {
        let inst = Instance::from_int_rows(&[&[&[1]]]).unwrap();
        assert!(fixpoint_solve(&inst, 0).is_err());
    }
}
