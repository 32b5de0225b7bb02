use std::collections::BTreeMap;

use num_traits::Zero;

use super::model::LotteryModel;
use super::{Method, SolveReport};
use crate::error::{Error, Result};
use crate::instance::{one, zero, Instance, Lottery, Rational};
use crate::perm::permutations;
use crate::ratlp::{self, LinearProgram, Relation, Sense, Terms, VarId};

/// Largest `n` for which all `m * n!` allocations are enumerated.
pub const DEFAULT_PROFILE_CAP: usize = 6;

/// Utilities of one deterministic allocation: partition `k`, agent `i`
/// receiving bundle `assignment[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UtilityProfile {
    pub partition: usize,
    pub assignment: Vec<usize>,
    pub values: Vec<Rational>,
}

/// Supporting hyperplane `normal . x = offset` of the profile hull with a
/// strictly positive normal; `support` indexes the profiles on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParetoFace {
    pub normal: Vec<Rational>,
    pub offset: Rational,
    pub support: Vec<usize>,
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn enumerate_profiles(inst: &Instance, cap: usize) -> Result<Vec<UtilityProfile>> {
    let n = inst.n();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let perms = permutations(n);
    let mut out = Vec::with_capacity(inst.m() * perms.len());
    for k in 0..inst.m() {
        for perm in &perms {
            out.push(UtilityProfile {
                partition: k,
                assignment: perm.clone(),
                values: perm.iter().enumerate().map(|(i, &j)| inst.utility(k, i, j).clone()).collect(),
            });
        }
    }
    Ok(out)
}

fn weakly_dominates(a: &[Rational], b: &[Rational]) -> bool {
    a != b && a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Calls `f` on every `size`-subset of `0..len` in lexicographic order.
fn for_each_subset(len: usize, size: usize, mut f: impl FnMut(&[usize])) {
    if size > len {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        f(&idx);
        let Some(pos) = (0..size).rev().find(|&p| idx[p] < len - size + p) else {
            return;
        };
        idx[pos] += 1;
        for p in pos + 1..size {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

/// Supporting hyperplanes with strictly positive normals covering every
/// Pareto-optimal point of the convex hull of `profiles`.
///
/// Any such point lies in a face spanned by at most `n` undominated
/// profiles, so each candidate support of that size gets an LP asking
/// for a normal `w >= 1` that makes the support tie for the maximum.
/// Normals are scaled to have first coordinate one and returned in
/// lexicographic order.
pub fn pareto_faces(profiles: &[UtilityProfile]) -> Vec<ParetoFace> {
    let Some(first) = profiles.first() else {
        return Vec::new();
    };
    let n = first.values.len();
    let mut points: Vec<&Vec<Rational>> = profiles.iter().map(|p| &p.values).collect();
    points.sort();
    points.dedup();
    let frontier: Vec<&Vec<Rational>> = points
        .iter()
        .copied()
        .filter(|v| !points.iter().any(|u| weakly_dominates(u, v)))
        .collect();

    let mut faces: BTreeMap<Vec<Rational>, Rational> = BTreeMap::new();
    for size in 1..=n.min(frontier.len()) {
        for_each_subset(frontier.len(), size, |subset| {
            if let Some(normal) = supporting_normal(&frontier, subset, n) {
                let scale = normal[0].clone();
                let normal: Vec<Rational> = normal.into_iter().map(|x| x / &scale).collect();
                let offset = dot(&normal, frontier[subset[0]]);
                faces.entry(normal).or_insert(offset);
            }
        });
    }

    faces
        .into_iter()
        .map(|(normal, offset)| {
            let support = profiles
                .iter()
                .enumerate()
                .filter(|(_, p)| dot(&normal, &p.values) == offset)
                .map(|(idx, _)| idx)
                .collect();
            ParetoFace { normal, offset, support }
        })
        .collect()
}

fn supporting_normal(frontier: &[&Vec<Rational>], subset: &[usize], n: usize) -> Option<Vec<Rational>> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let w: Vec<VarId> = (0..n).map(|i| lp.add_var(format!("w{}", i + 1), Some(one()), None)).collect();
    let anchor = frontier[subset[0]];
    let diff_terms = |v: &[Rational]| -> Terms {
        w.iter()
            .zip(v.iter().zip(anchor.iter()))
            .map(|(&var, (a, b))| (var, a - b))
            .filter(|(_, c)| !c.is_zero())
            .collect()
    };
    for (idx, v) in frontier.iter().enumerate() {
        if idx == subset[0] {
            continue;
        }
        let relation = if subset.contains(&idx) { Relation::Eq } else { Relation::Le };
        lp.add_constraint(diff_terms(v), relation, zero());
    }
    lp.set_objective(w.iter().map(|&v| (v, one())).collect());
    let out = ratlp::solve(&lp);
    out.solution.map(|x| w.iter().map(|v| x[v.0].clone()).collect())
}

/// Lottery polytope, envy-freeness, and `sum w_i u_i(q; i) = offset`.
fn face_program(inst: &Instance, face: &ParetoFace, sense: Sense) -> (LinearProgram, LotteryModel) {
    let mut lp = LinearProgram::new(sense);
    let model = LotteryModel::add_to(&mut lp, inst.n(), inst.m());
    model.add_envy_freeness(&mut lp, inst);
    lp.add_constraint(model.weighted_welfare_terms(inst, &face.normal), Relation::Eq, face.offset.clone());
    (lp, model)
}

/// The first face, in normal order, that contains an envy-free lottery.
pub fn hull_solve(inst: &Instance, cap: usize) -> Result<SolveReport> {
    let profiles = enumerate_profiles(inst, cap)?;
    let faces = pareto_faces(&profiles);
    for (idx, face) in faces.iter().enumerate() {
        let (lp, model) = face_program(inst, face, Sense::Feasibility);
        let out = ratlp::solve(&lp);
        if out.is_optimal() {
            return Ok(SolveReport {
                lottery: model.extract(&out),
                method: Method::Hull,
                weights: face.normal.clone(),
                iterations: 0,
                faces_examined: idx + 1,
                fallback: false,
            });
        }
    }
    Err(Error::Internal(format!(
        "none of the {} Pareto faces contains an envy-free lottery",
        faces.len()
    )))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WelfareOptimum {
    pub lottery: Lottery,
    pub welfare: Rational,
    /// Normal of the face the optimum was found on.
    pub normal: Vec<Rational>,
}

/// Maximum social welfare over envy-free, Pareto-optimal lotteries.
/// Ties between faces go to the first face in normal order.
pub fn max_welfare_ef_po(inst: &Instance, cap: usize) -> Result<WelfareOptimum> {
    let profiles = enumerate_profiles(inst, cap)?;
    let mut best: Option<WelfareOptimum> = None;
    let ones = vec![one(); inst.n()];
    for face in pareto_faces(&profiles) {
        let (mut lp, model) = face_program(inst, &face, Sense::Maximize);
        lp.set_objective(model.weighted_welfare_terms(inst, &ones));
        let out = ratlp::solve(&lp);
        let Some(welfare) = out.objective.clone() else {
            continue;
        };
        if best.as_ref().map_or(true, |b| welfare > b.welfare) {
            best = Some(WelfareOptimum {
                lottery: model.extract(&out),
                welfare,
                normal: face.normal.clone(),
            });
        }
    }
    best.ok_or_else(|| Error::Internal("no Pareto face contains an envy-free lottery".into()))
}

/// Whether some envy-free, Pareto-optimal lottery has welfare at least `k`.
pub fn welfare_at_least(inst: &Instance, threshold: &Rational, cap: usize) -> Result<bool> {
    Ok(&max_welfare_ef_po(inst, cap)?.welfare >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_in_lexicographic_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_subset(3, 4, |_| count += 1);
        assert_eq!(count, 0);
    }

    #[test]
    fn dominance_is_strict_somewhere() {
        let a = vec![one(), one()];
        let b = vec![one(), zero()];
        assert!(weakly_dominates(&a, &b));
        assert!(!weakly_dominates(&b, &a));
        assert!(!weakly_dominates(&a, &a));
    }
}
