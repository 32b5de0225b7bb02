//! The lottery polytope as LP variables and constraints.

use crate::instance::{one, zero, Instance, Lottery, Rational, SquareMatrix};
use crate::ratlp::{LinearProgram, LpOutcome, Relation, Terms, VarId};

pub(crate) struct LotteryModel {
    n: usize,
    p: Vec<VarId>,
    /// `q[k][i * n + j]`
    q: Vec<Vec<VarId>>,
}

impl LotteryModel {
    /// Declares `p_k >= 0`, `q^k_ij >= 0` and adds the bistochastic-slice
    /// constraints plus `sum p = 1`.
    pub fn add_to(lp: &mut LinearProgram, n: usize, m: usize) -> Self {
        let p: Vec<VarId> = (0..m).map(|k| lp.add_nonneg(format!("p{}", k + 1))).collect();
        let q: Vec<Vec<VarId>> = (0..m)
            .map(|k| {
                (0..n * n)
                    .map(|x| lp.add_nonneg(format!("q{}_{}_{}", k + 1, x / n + 1, x % n + 1)))
                    .collect()
            })
            .collect();
        let minus_one = -one();
        for k in 0..m {
            for j in 0..n {
                let mut terms: Terms = (0..n).map(|i| (q[k][i * n + j], one())).collect();
                terms.push((p[k], minus_one.clone()));
                lp.add_constraint(terms, Relation::Eq, zero());
            }
            for i in 0..n {
                let mut terms: Terms = (0..n).map(|j| (q[k][i * n + j], one())).collect();
                terms.push((p[k], minus_one.clone()));
                lp.add_constraint(terms, Relation::Eq, zero());
            }
        }
        lp.add_constraint(p.iter().map(|&v| (v, one())).collect(), Relation::Eq, one());
        Self { n, p, q }
    }

    /// `u_i(q; other) = sum_k sum_j u^k_ij q^k_{other, j}`.
    pub fn utility_terms(&self, inst: &Instance, i: usize, other: usize) -> Terms {
        let n = self.n;
        let mut terms = Vec::new();
        for (k, vars) in self.q.iter().enumerate() {
            for j in 0..n {
                let u = inst.utility(k, i, j);
                if *u != zero() {
                    terms.push((vars[other * n + j], u.clone()));
                }
            }
        }
        terms
    }

    /// `sum_i coeff_i * u_i(q; i)`
    pub fn weighted_welfare_terms(&self, inst: &Instance, coeffs: &[Rational]) -> Terms {
        let mut terms = Vec::new();
        for (i, c) in coeffs.iter().enumerate() {
            for (v, u) in self.utility_terms(inst, i, i) {
                terms.push((v, u * c));
            }
        }
        terms
    }

    /// `u_i(q; i) - u_i(q; other) >= 0` for every ordered pair.
    pub fn add_envy_freeness(&self, lp: &mut LinearProgram, inst: &Instance) {
        for i in 0..self.n {
            for other in 0..self.n {
                if i != other {
                    self.add_no_envy(lp, inst, i, other);
                }
            }
        }
    }

    pub fn add_no_envy(&self, lp: &mut LinearProgram, inst: &Instance, i: usize, other: usize) {
        let mut terms = self.utility_terms(inst, i, i);
        terms.extend(self.utility_terms(inst, i, other).into_iter().map(|(v, c)| (v, -c)));
        lp.add_constraint(terms, Relation::Ge, zero());
    }

    pub fn extract(&self, out: &LpOutcome) -> Lottery {
        let n = self.n;
        let p = self.p.iter().map(|&v| out.value(v).clone()).collect();
        let q = self
            .q
            .iter()
            .map(|vars| {
                let mut m = SquareMatrix::zeros(n);
                for (x, &v) in vars.iter().enumerate() {
                    m[(x / n, x % n)] = out.value(v).clone();
                }
                m
            })
            .collect();
        Lottery::new(p, q).expect("model shape is consistent")
    }
}
