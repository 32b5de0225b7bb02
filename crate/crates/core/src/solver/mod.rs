//! Computing envy-free and Pareto-optimal lotteries.
//!
//! Two routes are provided. [`hull_solve`] enumerates every deterministic
//! allocation, finds the strictly-positive supporting hyperplanes of the
//! resulting utility profiles, and searches each for an envy-free lottery
//! by LP; it is exact and complete but exponential in `n`.
//! [`fixpoint_solve`] alternates weighted-sum optimization with weight
//! synthesis from the envy graph and works for any `n`, but may fail to
//! converge.

mod fixpoint;
mod hull;
pub(crate) mod model;

use serde::Serialize;

use crate::envy::WeightVector;
use crate::error::{Error, Result};
use crate::instance::{format_rational, Instance, Lottery, Rational};
use crate::ratlp::{self, LinearProgram, Sense};

pub use fixpoint::{fixpoint_solve, FixpointOutcome, IterationRecord, NonConvergence, DEFAULT_MAX_ITERS};
pub use hull::{
    enumerate_profiles, hull_solve, max_welfare_ef_po, pareto_faces, welfare_at_least, ParetoFace, UtilityProfile,
    WelfareOptimum, DEFAULT_PROFILE_CAP,
};
use model::LotteryModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hull,
    Fixpoint,
}

/// An envy-free, Pareto-optimal lottery and how it was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveReport {
    pub lottery: Lottery,
    pub method: Method,
    /// Fixpoint: the certifying agent weights. Hull: the face normal.
    pub weights: Vec<Rational>,
    /// Weighted-sum LPs solved (fixpoint only).
    pub iterations: usize,
    /// Faces tried before success (hull only).
    pub faces_examined: usize,
    /// Set when the fixpoint result came from the depth-vector fallback.
    pub fallback: bool,
}

impl SolveReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "weights": self.weights.iter().map(format_rational).collect::<Vec<_>>(),
            "iterations": self.iterations,
            "faces_examined": self.faces_examined,
            "fallback": self.fallback,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedOptimum {
    pub lottery: Lottery,
    pub objective: Rational,
}

/// Maximizes `sum_i w_i u_i(q; i)` over all lotteries and returns the
/// optimal vertex reached by the simplex. Optimal lotteries of strictly
/// positive weights are Pareto-optimal.
pub fn weighted_sum_lp(inst: &Instance, w: &WeightVector) -> Result<WeightedOptimum> {
    if w.len() != inst.n() {
        return Err(Error::Dimension(format!("{} weights for {} agents", w.len(), inst.n())));
    }
    if w.as_slice().iter().any(|x| *x <= crate::instance::zero()) {
        return Err(Error::Dimension("weights must be strictly positive".into()));
    }
    let mut lp = LinearProgram::new(Sense::Maximize);
    let model = LotteryModel::add_to(&mut lp, inst.n(), inst.m());
    lp.set_objective(model.weighted_welfare_terms(inst, w.as_slice()));
    let out = ratlp::solve(&lp);
    if !out.is_optimal() {
        return Err(Error::Internal(format!("weighted-sum LP reported {:?}", out.status)));
    }
    Ok(WeightedOptimum {
        lottery: model.extract(&out),
        objective: out.objective.expect("optimal outcome has an objective"),
    })
}
