//! Birkhoff–von Neumann decomposition of lotteries and seeded sampling of
//! deterministic allocations.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{format_rational, lottery_violations, one, parse_rational, to_f64, zero, Lottery, Rational, SquareMatrix};

/// Decomposition of one partition's scaled assignment matrix `q^k / p_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionTerms {
    pub partition: usize,
    pub p: Rational,
    /// `(perm, alpha)` with agent `i` receiving bundle `perm[i]`.
    pub terms: Vec<(Vec<usize>, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BvnDecomposition {
    m: usize,
    n: usize,
    partitions: Vec<PartitionTerms>,
}

/// Largest number of permutation matrices needed for an `n x n`
/// doubly stochastic matrix.
pub fn birkhoff_bound(n: usize) -> usize {
    if n == 0 {
        1
    } else {
        (n - 1) * (n - 1) + 1
    }
}

impl BvnDecomposition {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Partitions with positive probability, in index order.
    pub fn partitions(&self) -> &[PartitionTerms] {
        &self.partitions
    }

    /// Rebuilds `q^k_{ij} = p_k * sum_{perm(i)=j} alpha_perm`.
    pub fn reconstruct(&self) -> Lottery {
        let mut p = vec![zero(); self.m];
        let mut q = vec![SquareMatrix::zeros(self.n); self.m];
        for part in &self.partitions {
            p[part.partition] = part.p.clone();
            for (perm, alpha) in &part.terms {
                let mass = &part.p * alpha;
                for (i, &j) in perm.iter().enumerate() {
                    q[part.partition][(i, j)] += &mass;
                }
            }
        }
        Lottery::new(p, q).expect("shapes agree by construction")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DecompositionFile::from(self)).expect("decomposition serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DecompositionFile = serde_json::from_str(text)?;
        Self::try_from(&file)
    }
}

/// Decomposes every partition with `p_k > 0`.
pub fn decompose(lot: &Lottery) -> Result<BvnDecomposition> {
    let violations = lottery_violations(lot);
    if !violations.is_empty() {
        return Err(Error::InvalidLottery(violations));
    }
    let n = lot.n();
    let mut partitions = Vec::new();
    for (k, pk) in lot.p().iter().enumerate() {
        if pk.is_zero() {
            continue;
        }
        let scaled = lot.q(k).scale(&(one() / pk));
        let mut terms = peel(scaled)?;
        reduce_support(&mut terms, n);
        partitions.push(PartitionTerms {
            partition: k,
            p: pk.clone(),
            terms,
        });
    }
    Ok(BvnDecomposition {
        m: lot.m(),
        n,
        partitions,
    })
}

/// Greedy peeling of a doubly stochastic matrix.
fn peel(mut rest: SquareMatrix) -> Result<Vec<(Vec<usize>, Rational)>> {
    if rest.dim() == 0 {
        return Ok(vec![(Vec::new(), one())]);
    }
    let mut terms = Vec::new();
    let mut remaining = one();
    while remaining.is_positive() {
        let perm = perfect_matching(&rest)
            .ok_or_else(|| Error::Internal("support of a doubly stochastic matrix has no perfect matching".into()))?;
        let alpha = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| &rest[(i, j)])
            .min()
            .cloned()
            .expect("n >= 1");
        for (i, &j) in perm.iter().enumerate() {
            rest[(i, j)] -= &alpha;
        }
        remaining -= &alpha;
        terms.push((perm, alpha));
    }
    Ok(terms)
}

/// Lexicographically smallest perfect matching on the positive entries,
/// as `perm` with row `i` matched to column `perm[i]`.
///
/// Kuhn's augmenting paths find some matching; then each row in turn is
/// moved to its smallest column that still extends to a perfect matching
/// of the later rows, found by an alternating path.
fn perfect_matching(mat: &SquareMatrix) -> Option<Vec<usize>> {
    let n = mat.dim();
    let mut col_owner: Vec<Option<usize>> = vec![None; n];
    for row in 0..n {
        let mut visited = vec![false; n];
        if !augment(mat, row, &mut visited, &mut col_owner, 0) {
            return None;
        }
    }
    let mut perm = vec![0; n];
    for (j, owner) in col_owner.iter().enumerate() {
        perm[owner.expect("all columns matched")] = j;
    }
    for i in 0..n {
        for j in 0..perm[i] {
            let Some(r) = col_owner[j] else { continue };
            if r < i || !mat[(i, j)].is_positive() {
                continue;
            }
            // Free i's column, hand j to i, and re-route r among later rows.
            let freed = perm[i];
            let mut trial = col_owner.clone();
            trial[freed] = None;
            trial[j] = Some(i);
            let mut visited = vec![false; n];
            visited[j] = true;
            if augment(mat, r, &mut visited, &mut trial, i + 1) {
                col_owner = trial;
                for (c, owner) in col_owner.iter().enumerate() {
                    perm[owner.expect("all columns matched")] = c;
                }
                break;
            }
        }
    }
    Some(perm)
}

/// Augmenting path from `row`; rows below `first_row` keep their columns.
fn augment(
    mat: &SquareMatrix,
    row: usize,
    visited: &mut [bool],
    col_owner: &mut [Option<usize>],
    first_row: usize,
) -> bool {
    for j in 0..mat.dim() {
        if visited[j] || !mat[(row, j)].is_positive() {
            continue;
        }
        visited[j] = true;
        let movable = col_owner[j].map_or(true, |other| {
            other >= first_row && augment(mat, other, visited, col_owner, first_row)
        });
        if movable {
            col_owner[j] = Some(row);
            return true;
        }
    }
    false
}

/// Carathéodory reduction: while there are more terms than the Birkhoff
/// bound, find an affine dependency among the permutation matrices and
/// shift weight along it until a coefficient vanishes.
fn reduce_support(terms: &mut Vec<(Vec<usize>, Rational)>, n: usize) {
    let bound = birkhoff_bound(n);
    while terms.len() > bound {
        let window = &terms[..bound + 1];
        let c = affine_dependency(window, n).expect("more than the bound are affinely dependent");
        let theta = window
            .iter()
            .zip(&c)
            .filter(|(_, ci)| ci.is_positive())
            .map(|((_, a), ci)| a / ci)
            .min()
            .expect("a nonzero dependency with zero sum has a positive entry");
        for (term, ci) in terms.iter_mut().zip(&c) {
            term.1 -= &theta * ci;
        }
        terms.retain(|(_, a)| !a.is_zero());
    }
}

/// Nonzero `c` with `sum c_t P_t = 0` and `sum c_t = 0`, if one exists.
fn affine_dependency(terms: &[(Vec<usize>, Rational)], n: usize) -> Option<Vec<Rational>> {
    let cols = terms.len();
    // rows: one per matrix entry plus the all-ones row
    let mut a: Vec<Vec<Rational>> = (0..n * n + 1)
        .map(|r| {
            terms
                .iter()
                .map(|(perm, _)| {
                    if r == n * n || perm[r / n] == r % n {
                        one()
                    } else {
                        zero()
                    }
                })
                .collect()
        })
        .collect();

    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(pr) = (row..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, pr);
        let inv = one() / &a[row][col];
        for x in a[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..a.len() {
            if r != row && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..cols {
                    let delta = &factor * &a[row][c];
                    a[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }

    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut c = vec![zero(); cols];
    c[free] = one();
    for (r, &pc) in pivots.iter().enumerate() {
        c[pc] = -a[r][free].clone();
    }
    Some(c)
}

/// Seeded sampler of `(partition, permutation)` draws.
pub struct Sampler<'a> {
    dec: &'a BvnDecomposition,
    rng: ChaCha8Rng,
    partition_cdf: Vec<f64>,
    term_cdfs: Vec<Vec<f64>>,
}

fn cumulative<'r>(weights: impl Iterator<Item = &'r Rational>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += to_f64(w);
            acc
        })
        .collect()
}

fn pick(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("nonempty");
    cdf.iter().position(|&c| u * total < c).unwrap_or(cdf.len() - 1)
}

impl<'a> Sampler<'a> {
    pub fn new(dec: &'a BvnDecomposition, seed: u64) -> Self {
        Self {
            dec,
            rng: ChaCha8Rng::seed_from_u64(seed),
            partition_cdf: cumulative(dec.partitions.iter().map(|p| &p.p)),
            term_cdfs: dec
                .partitions
                .iter()
                .map(|p| cumulative(p.terms.iter().map(|(_, a)| a)))
                .collect(),
        }
    }

    /// Draws `k` with probability `p_k`, then a permutation with
    /// probability `alpha`. Indices are 0-based.
    pub fn draw(&mut self) -> (usize, Vec<usize>) {
        let part = pick(&self.partition_cdf, self.rng.gen::<f64>());
        let term = pick(&self.term_cdfs[part], self.rng.gen::<f64>());
        let entry = &self.dec.partitions[part];
        (entry.partition, entry.terms[term].0.clone())
    }
}

impl Iterator for Sampler<'_> {
    type Item = (usize, Vec<usize>);

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.draw())
    }
}

/// A single seeded draw.
pub fn sample(dec: &BvnDecomposition, seed: u64) -> (usize, Vec<usize>) {
    Sampler::new(dec, seed).draw()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionFile {
    pub m: usize,
    pub n: usize,
    pub partitions: Vec<PartitionTermsFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionTermsFile {
    /// 1-based.
    pub partition: usize,
    pub p: String,
    pub terms: Vec<TermFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    /// 1-based bundle of each agent.
    pub perm: Vec<usize>,
    pub alpha: String,
}

impl From<&BvnDecomposition> for DecompositionFile {
    fn from(dec: &BvnDecomposition) -> Self {
        Self {
            m: dec.m,
            n: dec.n,
            partitions: dec
                .partitions
                .iter()
                .map(|p| PartitionTermsFile {
                    partition: p.partition + 1,
                    p: format_rational(&p.p),
                    terms: p
                        .terms
                        .iter()
                        .map(|(perm, alpha)| TermFile {
                            perm: perm.iter().map(|j| j + 1).collect(),
                            alpha: format_rational(alpha),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&DecompositionFile> for BvnDecomposition {
    type Error = Error;

    fn try_from(file: &DecompositionFile) -> Result<Self> {
        let n = file.n;
        let mut partitions = Vec::with_capacity(file.partitions.len());
        for part in &file.partitions {
            if part.partition == 0 || part.partition > file.m {
                return Err(Error::Index(format!("partition {} outside 1..={}", part.partition, file.m)));
            }
            let mut terms = Vec::with_capacity(part.terms.len());
            for term in &part.terms {
                let mut seen = vec![false; n];
                if term.perm.len() != n {
                    return Err(Error::Dimension(format!("permutation of length {}, expected {n}", term.perm.len())));
                }
                for &j in &term.perm {
                    if j == 0 || j > n || std::mem::replace(&mut seen[j - 1], true) {
                        return Err(Error::Index(format!("{:?} is not a permutation of 1..={n}", term.perm)));
                    }
                }
                terms.push((term.perm.iter().map(|j| j - 1).collect(), parse_rational(&term.alpha)?));
            }
            partitions.push(PartitionTerms {
                partition: part.partition - 1,
                p: parse_rational(&part.p)?,
                terms,
            });
        }
        let dec = BvnDecomposition { m: file.m, n, partitions };
        let bad_weights = dec.partitions.iter().any(|p| {
            !p.p.is_positive()
                || p.terms.is_empty()
                || p.terms.iter().any(|(_, a)| !a.is_positive())
                || p.terms.iter().map(|(_, a)| a).sum::<Rational>() != one()
        });
        let total: Rational = dec.partitions.iter().map(|p| &p.p).sum();
        if bad_weights || total != one() {
            return Err(Error::Dimension("decomposition weights are not probability distributions".into()));
        }
        Ok(dec)
    }
}
