//! Fair division instances with partition-based utilities, and lotteries
//! over their allocations.
//!
//! Agents, bundles and partitions are 0-based here. Human-facing text
//! (violation messages, CLI reports) is 1-based.

mod io;
mod rational;

use std::fmt;
use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub use io::{InstanceFile, LotteryFile, PartitionFile};
pub use rational::{format_rational, int, one, parse_rational, rat, to_f64, zero, Rational};

/// Dense row-major `n x n` matrix of rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<Rational>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Rational::zero(); n * n],
        }
    }

    /// Identity scaled by `scale`.
    pub fn scaled_identity(n: usize, scale: &Rational) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = scale.clone();
        }
        m
    }

    /// Permutation matrix with a 1 at `(i, perm[i])`, scaled by `scale`.
    pub fn scaled_permutation(perm: &[usize], scale: &Rational) -> Self {
        let mut m = Self::zeros(perm.len());
        for (i, &j) in perm.iter().enumerate() {
            m[(i, j)] = scale.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    /// Convenience constructor for small integer matrices.
    pub fn from_ints(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| int(v)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        self.data.chunks(self.n.max(1)).take(self.n)
    }

    pub fn row_sum(&self, i: usize) -> Rational {
        self.row(i).iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> Rational {
        (0..self.n).map(|i| &self[(i, j)]).sum()
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        self.rows().map(<[Rational]>::to_vec).collect()
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = Rational;

    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.n + j]
    }
}

/// `n` agents and `m` admissible partitions; `utilities[k][(i, j)]` is the
/// value agent `i` has for bundle `j` of partition `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    utilities: Vec<SquareMatrix>,
    labels: Vec<Option<Vec<String>>>,
}

impl Instance {
    pub fn new(utilities: Vec<SquareMatrix>) -> Result<Self> {
        let m = utilities.len();
        Self::with_labels(utilities, vec![None; m])
    }

    pub fn with_labels(utilities: Vec<SquareMatrix>, labels: Vec<Option<Vec<String>>>) -> Result<Self> {
        let n = match utilities.first() {
            Some(u) => u.dim(),
            None => return Err(Error::Dimension("an instance needs at least one partition".into())),
        };
        if n == 0 {
            return Err(Error::Dimension("an instance needs at least one agent".into()));
        }
        for (k, u) in utilities.iter().enumerate() {
            if u.dim() != n {
                return Err(Error::Dimension(format!(
                    "partition {} is {}x{}, expected {n}x{n}",
                    k + 1,
                    u.dim(),
                    u.dim()
                )));
            }
        }
        if labels.len() != utilities.len() {
            return Err(Error::Dimension(format!(
                "{} label lists for {} partitions",
                labels.len(),
                utilities.len()
            )));
        }
        for (k, l) in labels.iter().enumerate() {
            if let Some(l) = l {
                if l.len() != n {
                    return Err(Error::Dimension(format!(
                        "partition {} has {} bundle labels, expected {n}",
                        k + 1,
                        l.len()
                    )));
                }
            }
        }
        Ok(Self { n, utilities, labels })
    }

    /// Single-partition shorthand used throughout the tests.
    pub fn from_int_rows(partitions: &[&[&[i64]]]) -> Result<Self> {
        Self::new(
            partitions
                .iter()
                .map(|rows| SquareMatrix::from_ints(rows))
                .collect::<Result<_>>()?,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.utilities.len()
    }

    pub fn utility(&self, k: usize, i: usize, j: usize) -> &Rational {
        &self.utilities[k][(i, j)]
    }

    pub fn partition(&self, k: usize) -> &SquareMatrix {
        &self.utilities[k]
    }

    pub fn partitions(&self) -> &[SquareMatrix] {
        &self.utilities
    }

    pub fn labels(&self, k: usize) -> Option<&[String]> {
        self.labels[k].as_deref()
    }

    fn check_agent(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::Index(format!("agent {} of {}", i + 1, self.n)));
        }
        Ok(())
    }
}

/// Partition probabilities `p[k]` and assignment masses `q[k][(i, j)]`.
///
/// Shape is checked against an instance when it is used, not on
/// construction; the probabilistic constraints are checked by
/// [`validate_lottery`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lottery {
    p: Vec<Rational>,
    q: Vec<SquareMatrix>,
}

impl Lottery {
    pub fn new(p: Vec<Rational>, q: Vec<SquareMatrix>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::Dimension(format!(
                "{} partition probabilities but {} assignment matrices",
                p.len(),
                q.len()
            )));
        }
        if let Some(n) = q.first().map(SquareMatrix::dim) {
            if let Some(k) = q.iter().position(|m| m.dim() != n) {
                return Err(Error::Dimension(format!(
                    "assignment matrix {} is {}x{}, expected {n}x{n}",
                    k + 1,
                    q[k].dim(),
                    q[k].dim()
                )));
            }
        }
        Ok(Self { p, q })
    }

    /// Deterministic allocation: partition `k` with agent `i` receiving
    /// bundle `perm[i]`.
    pub fn pure(m: usize, k: usize, perm: &[usize]) -> Self {
        let n = perm.len();
        let p = (0..m).map(|x| if x == k { one() } else { zero() }).collect();
        let q = (0..m)
            .map(|x| {
                if x == k {
                    SquareMatrix::scaled_permutation(perm, &one())
                } else {
                    SquareMatrix::zeros(n)
                }
            })
            .collect();
        Self { p, q }
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn n(&self) -> usize {
        self.q.first().map_or(0, SquareMatrix::dim)
    }

    pub fn p(&self) -> &[Rational] {
        &self.p
    }

    pub fn q(&self, k: usize) -> &SquareMatrix {
        &self.q[k]
    }

    pub fn masses(&self) -> &[SquareMatrix] {
        &self.q
    }

    /// Coordinatewise `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Lottery, lambda: &Rational) -> Result<Lottery> {
        if self.m() != other.m() || self.n() != other.n() {
            return Err(Error::Dimension("mixing lotteries of different shapes".into()));
        }
        let mu = one() - lambda;
        let p = self
            .p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| a * lambda + b * &mu)
            .collect();
        let q = self
            .q
            .iter()
            .zip(&other.q)
            .map(|(a, b)| {
                let mut out = a.scale(lambda);
                for i in 0..out.dim() {
                    for j in 0..out.dim() {
                        out[(i, j)] += &b[(i, j)] * &mu;
                    }
                }
                out
            })
            .collect();
        Ok(Lottery { p, q })
    }

    pub fn check_shape(&self, inst: &Instance) -> Result<()> {
        if self.m() != inst.m() {
            return Err(Error::Dimension(format!(
                "lottery has {} partitions, instance has {}",
                self.m(),
                inst.m()
            )));
        }
        if self.n() != inst.n() {
            return Err(Error::Dimension(format!(
                "lottery is over {} agents, instance has {}",
                self.n(),
                inst.n()
            )));
        }
        Ok(())
    }
}

/// A single violated lottery constraint. Indices are 0-based; `Display`
/// renders them 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NegativeProbability { k: usize, value: Rational },
    NegativeMass { k: usize, i: usize, j: usize, value: Rational },
    /// Bundle `j` of partition `k` is not assigned with total mass `p_k`.
    ColumnSum { k: usize, j: usize, sum: Rational, expected: Rational },
    /// Agent `i` does not receive total mass `p_k` in partition `k`.
    RowSum { k: usize, i: usize, sum: Rational, expected: Rational },
    TotalProbability { sum: Rational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeProbability { k, value } => {
                write!(f, "p_{} = {value} is negative", k + 1)
            }
            Violation::NegativeMass { k, i, j, value } => {
                write!(f, "q[{}][{}][{}] = {value} is negative", k + 1, i + 1, j + 1)
            }
            Violation::ColumnSum { k, j, sum, expected } => write!(
                f,
                "column {} of partition {} sums to {sum} != p_{} = {expected}",
                j + 1,
                k + 1,
                k + 1
            ),
            Violation::RowSum { k, i, sum, expected } => write!(
                f,
                "row {} of partition {} sums to {sum} != p_{} = {expected}",
                i + 1,
                k + 1,
                k + 1
            ),
            Violation::TotalProbability { sum } => {
                write!(f, "partition probabilities sum to {sum} != 1")
            }
        }
    }
}

/// Checks every lottery constraint exactly. A shape mismatch is an error;
/// constraint failures are returned as data.
pub fn validate_lottery(inst: &Instance, lot: &Lottery) -> Result<Vec<Violation>> {
    lot.check_shape(inst)?;
    Ok(lottery_violations(lot))
}

/// Constraint failures of `lot` on its own dimensions.
pub fn lottery_violations(lot: &Lottery) -> Vec<Violation> {
    let n = lot.n();
    let mut violations = Vec::new();
    for (k, (pk, qk)) in lot.p.iter().zip(&lot.q).enumerate() {
        if pk < &zero() {
            violations.push(Violation::NegativeProbability { k, value: pk.clone() });
        }
        for i in 0..n {
            for j in 0..n {
                let v = &qk[(i, j)];
                if v < &zero() {
                    violations.push(Violation::NegativeMass { k, i, j, value: v.clone() });
                }
            }
        }
        for j in 0..n {
            let sum = qk.col_sum(j);
            if &sum != pk {
                violations.push(Violation::ColumnSum { k, j, sum, expected: pk.clone() });
            }
        }
        for i in 0..n {
            let sum = qk.row_sum(i);
            if &sum != pk {
                violations.push(Violation::RowSum { k, i, sum, expected: pk.clone() });
            }
        }
    }
    let total: Rational = lot.p.iter().sum();
    if !total.is_one() {
        violations.push(Violation::TotalProbability { sum: total });
    }
    violations
}

/// Like [`validate_lottery`] but turns violations into an error.
pub fn ensure_valid(inst: &Instance, lot: &Lottery) -> Result<()> {
    let violations = validate_lottery(inst, lot)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidLottery(violations))
    }
}

/// Expected utility of agent `i` for the random bundle of agent `other`.
pub fn expected_utility(inst: &Instance, lot: &Lottery, i: usize, other: usize) -> Result<Rational> {
    lot.check_shape(inst)?;
    inst.check_agent(i)?;
    inst.check_agent(other)?;
    let mut total = zero();
    for (u, q) in inst.utilities.iter().zip(&lot.q) {
        for (a, b) in u.row(i).iter().zip(q.row(other)) {
            if !a.is_zero() && !b.is_zero() {
                total += a * b;
            }
        }
    }
    Ok(total)
}

/// All `n x n` expected utilities at once: entry `[i][other]` equals
/// `expected_utility(inst, lot, i, other)`. Skips zero masses and zero
/// utilities, which dominate the large reduction instances.
pub fn utility_table(inst: &Instance, lot: &Lottery) -> Result<Vec<Vec<Rational>>> {
    lot.check_shape(inst)?;
    let n = inst.n();
    let mut table = vec![vec![zero(); n]; n];
    for (u, q) in inst.utilities.iter().zip(&lot.q) {
        // agents with a nonzero value for each bundle
        let mut valuers: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, v) in u.row(i).iter().enumerate() {
                if !v.is_zero() {
                    valuers[j].push(i);
                }
            }
        }
        for other in 0..n {
            for (j, mass) in q.row(other).iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                for &i in &valuers[j] {
                    table[i][other] += &u[(i, j)] * mass;
                }
            }
        }
    }
    Ok(table)
}

pub fn social_welfare(inst: &Instance, lot: &Lottery) -> Result<Rational> {
    let table = utility_table(inst, lot)?;
    Ok(table.iter().enumerate().map(|(i, row)| &row[i]).sum())
}
