//! Envy graphs, the separation constant rho, and weight synthesis.
//!
//! If agent `l` envies agent `h` under the weighted-sum optimum, giving
//! `h` a weight at most `rho` times that of `l` removes the envy. Weight
//! vectors are built from longest-path depths in the (acyclic) envy graph
//! so that every arc gets that separation at once.

use std::collections::BTreeSet;

use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::instance::{int, one, utility_table, zero, Instance, Lottery, Rational};
use crate::ratlp::{self, Conditional, Constraint, LinearProgram, Relation, Sense, VarId};

/// Arc `(l, h)` means agent `l` strictly prefers `h`'s random bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvyGraph {
    n: usize,
    arcs: BTreeSet<(usize, usize)>,
}

impl EnvyGraph {
    pub fn new(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let arcs: BTreeSet<_> = arcs.into_iter().collect();
        if let Some(&(l, h)) = arcs.iter().find(|&&(l, h)| l == h || l >= n || h >= n) {
            return Err(Error::Index(format!("arc ({}, {}) on {n} nodes", l + 1, h + 1)));
        }
        Ok(Self { n, arcs })
    }

    /// Builds the graph from a table of expected utilities,
    /// `table[i][other] = u_i(q; other)`.
    pub fn from_table(table: &[Vec<Rational>]) -> Self {
        let n = table.len();
        let mut arcs = BTreeSet::new();
        for (l, row) in table.iter().enumerate() {
            for h in 0..n {
                if h != l && row[l] < row[h] {
                    arcs.insert((l, h));
                }
            }
        }
        Self { n, arcs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &BTreeSet<(usize, usize)> {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.n];
        for &(l, h) in &self.arcs {
            succ[l].push(h);
        }
        succ
    }

    /// A directed cycle, listed in arc order, if one exists.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let succ = self.successors();
        let mut mark = vec![Mark::New; self.n];
        let mut stack: Vec<usize> = Vec::new();
        for root in 0..self.n {
            if mark[root] != Mark::New {
                continue;
            }
            // iterative DFS holding (node, next successor index)
            let mut frames = vec![(root, 0usize)];
            mark[root] = Mark::Open;
            stack.push(root);
            while let Some(&mut (node, ref mut next)) = frames.last_mut() {
                if let Some(&child) = succ[node].get(*next) {
                    *next += 1;
                    match mark[child] {
                        Mark::New => {
                            mark[child] = Mark::Open;
                            stack.push(child);
                            frames.push((child, 0));
                        }
                        Mark::Open => {
                            let start = stack.iter().position(|&x| x == child).unwrap();
                            return Some(stack[start..].to_vec());
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[node] = Mark::Done;
                    stack.pop();
                    frames.pop();
                }
            }
        }
        None
    }

    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Length of the longest directed path ending at each node.
    pub fn depths(&self) -> Result<Vec<usize>> {
        if let Some(cycle) = self.find_cycle() {
            return Err(Error::Cyclic(cycle));
        }
        let succ = self.successors();
        let mut indegree = vec![0usize; self.n];
        for &(_, h) in &self.arcs {
            indegree[h] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..self.n).filter(|&i| indegree[i] == 0).collect();
        let mut depth = vec![0usize; self.n];
        while let Some(node) = ready.pop_first() {
            for &h in &succ[node] {
                depth[h] = depth[h].max(depth[node] + 1);
                indegree[h] -= 1;
                if indegree[h] == 0 {
                    ready.insert(h);
                }
            }
        }
        Ok(depth)
    }
}

pub fn envy_graph(inst: &Instance, lot: &Lottery) -> Result<EnvyGraph> {
    Ok(EnvyGraph::from_table(&utility_table(inst, lot)?))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoEpsilon {
    pub rho: Rational,
    /// `rho^n / n`, the minimum admissible weight.
    pub epsilon: Rational,
    /// Number of tuples `(k, l, h, a, b)` in the minimization.
    pub j_size: u64,
}

impl RhoEpsilon {
    pub fn from_rho(rho: Rational, n: usize, j_size: u64) -> Self {
        let epsilon = pow(&rho, n) / int(n as i64);
        Self { rho, epsilon, j_size }
    }
}

fn pow(base: &Rational, exp: usize) -> Rational {
    let mut acc = one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Half the smallest ratio `(u_lb - u_la) / (u_hb - u_ha)` over all
/// partitions `k`, bundle pairs `(a, b)` and agents `l`, `h` that both
/// strictly prefer `b` to `a`; one half if no such tuple exists.
///
/// For a fixed `(k, a, b)` the smallest ratio is the smallest gain divided
/// by the largest gain among the agents preferring `b`, so this runs in
/// `O(m n^3)` rather than enumerating all `m n^4` tuples.
pub fn compute_rho(inst: &Instance) -> RhoEpsilon {
    let n = inst.n();
    let mut best: Option<Rational> = None;
    let mut j_size = 0u64;
    for u in inst.partitions() {
        for a in 0..n {
            for b in 0..n {
                let mut lo: Option<Rational> = None;
                let mut hi: Option<Rational> = None;
                let mut count = 0u64;
                for i in 0..n {
                    let gain = &u[(i, b)] - &u[(i, a)];
                    if !gain.is_positive() {
                        continue;
                    }
                    count += 1;
                    if lo.as_ref().map_or(true, |x| &gain < x) {
                        lo = Some(gain.clone());
                    }
                    if hi.as_ref().map_or(true, |x| &gain > x) {
                        hi = Some(gain);
                    }
                }
                if let (Some(lo), Some(hi)) = (lo, hi) {
                    j_size += count * count;
                    let ratio = lo / hi;
                    if best.as_ref().map_or(true, |x| &ratio < x) {
                        best = Some(ratio);
                    }
                }
            }
        }
    }
    let rho = best.unwrap_or_else(one) / int(2);
    RhoEpsilon::from_rho(rho, n, j_size)
}

/// Agent weights; members of the admissible simplex sum to one with every
/// entry at least epsilon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector(Vec<Rational>);

impl WeightVector {
    pub fn new(w: Vec<Rational>) -> Self {
        Self(w)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![Rational::new(1.into(), (n as i64).into()); n])
    }

    /// `w_i = rho^{d_i} / sum_j rho^{d_j}`.
    pub fn from_depths(depths: &[usize], rho: &Rational) -> Self {
        let powers: Vec<Rational> = depths.iter().map(|&d| pow(rho, d)).collect();
        let total: Rational = powers.iter().sum();
        Self(powers.into_iter().map(|x| x / &total).collect())
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Rational> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn in_simplex(&self, epsilon: &Rational) -> bool {
        self.0.iter().sum::<Rational>().is_one() && self.0.iter().all(|w| w >= epsilon)
    }

    /// `w_h <= rho * w_l` for every arc `(l, h)`.
    pub fn separates(&self, graph: &EnvyGraph, rho: &Rational) -> bool {
        graph.arcs().iter().all(|&(l, h)| self.0[h] <= rho * &self.0[l])
    }
}

/// Closed-form solution of the weight program for an acyclic envy graph.
pub fn synthesize_weights(graph: &EnvyGraph, re: &RhoEpsilon) -> Result<WeightVector> {
    let depths = graph.depths()?;
    Ok(WeightVector::from_depths(&depths, &re.rho))
}

/// The weight program as an LP: `sum w = 1`, `w_i >= epsilon`, and
/// `w_h - rho w_l <= 0` guarded by `u_l(q;h) - u_l(q;l)`.
pub fn solve_weight_program(table: &[Vec<Rational>], re: &RhoEpsilon) -> Option<WeightVector> {
    let n = table.len();
    let mut lp = LinearProgram::new(Sense::Feasibility);
    let w: Vec<VarId> = (0..n)
        .map(|i| lp.add_var(format!("w{}", i + 1), Some(re.epsilon.clone()), None))
        .collect();
    lp.add_constraint(w.iter().map(|&v| (v, one())).collect(), Relation::Eq, one());
    let mut conditionals = Vec::new();
    for l in 0..n {
        for h in 0..n {
            if l == h {
                continue;
            }
            conditionals.push(Conditional {
                guard: &table[l][h] - &table[l][l],
                constraint: Constraint::new(vec![(w[h], one()), (w[l], -re.rho.clone())], Relation::Le, zero()),
            });
        }
    }
    let out = ratlp::solve_conditional_feasibility(&lp, &conditionals);
    out.solution.map(WeightVector)
}
