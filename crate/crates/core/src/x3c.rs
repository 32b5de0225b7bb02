//! Fair division instances built from Exact Cover by 3-Sets.
//!
//! Agents and bundles share one index space, laid out as base agents
//! `b_0..b_t`, then set agents `h_{j,1..2t}` grouped by `j`, then the
//! element triples `(v_i, w_i, z_i)`. Partition `P_{j,c}` has index
//! `3(j-1) + (c-1)`. Names in maps and messages are 1-based; indices in
//! code are 0-based.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{format_rational, int, one, rat, Instance, Lottery, Rational, SquareMatrix};

/// Elements `0..r` and a family of 3-element subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct X3cInstance {
    r: usize,
    triples: Vec<[usize; 3]>,
}

impl X3cInstance {
    /// `triples` hold 0-based elements.
    pub fn new(r: usize, triples: Vec<[usize; 3]>) -> Result<Self> {
        if r % 3 != 0 {
            return Err(Error::MalformedX3c(format!("r = {r} is not a multiple of 3")));
        }
        for (j, s) in triples.iter().enumerate() {
            if s.iter().any(|&e| e >= r) {
                return Err(Error::MalformedX3c(format!(
                    "triple {} has an element outside 1..={r}",
                    j + 1
                )));
            }
            if s[0] == s[1] || s[0] == s[2] || s[1] == s[2] {
                return Err(Error::MalformedX3c(format!("triple {} repeats an element", j + 1)));
            }
        }
        Ok(Self { r, triples })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn t(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    /// `f_i`: number of triples containing element `i`.
    pub fn frequencies(&self) -> Vec<usize> {
        let mut f = vec![0; self.r];
        for s in &self.triples {
            for &e in s {
                f[e] += 1;
            }
        }
        f
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: X3cFile = serde_json::from_str(text)?;
        let triples = file
            .triples
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if s.iter().any(|&e| e == 0) {
                    return Err(Error::MalformedX3c(format!("triple {} has element 0; elements are 1-based", j + 1)));
                }
                Ok([s[0] - 1, s[1] - 1, s[2] - 1])
            })
            .collect::<Result<_>>()?;
        Self::new(file.r, triples)
    }

    pub fn to_json(&self) -> String {
        let file = X3cFile {
            r: self.r,
            triples: self.triples.iter().map(|s| s.map(|e| e + 1)).collect(),
        };
        serde_json::to_string_pretty(&file).expect("x3c instance serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct X3cFile {
    r: usize,
    triples: Vec<[usize; 3]>,
}

/// A planted-cover instance: a random partition of `0..r` into triples
/// plus `decoys` random triples, in shuffled order. Returns the instance
/// and the indices of the planted cover.
pub fn planted_instance(r: usize, decoys: usize, seed: u64) -> Result<(X3cInstance, Vec<usize>)> {
    if r % 3 != 0 {
        return Err(Error::MalformedX3c(format!("r = {r} is not a multiple of 3")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elements: Vec<usize> = (0..r).collect();
    elements.shuffle(&mut rng);
    let mut tagged: Vec<([usize; 3], bool)> = elements.chunks(3).map(|c| ([c[0], c[1], c[2]], true)).collect();
    for _ in 0..decoys {
        let pick: Vec<usize> = (0..r).collect::<Vec<_>>().choose_multiple(&mut rng, 3).copied().collect();
        tagged.push(([pick[0], pick[1], pick[2]], false));
    }
    tagged.shuffle(&mut rng);
    let cover = tagged.iter().enumerate().filter(|(_, (_, c))| *c).map(|(j, _)| j).collect();
    let phi = X3cInstance::new(r, tagged.into_iter().map(|(s, _)| s).collect())?;
    Ok((phi, cover))
}

/// Index layout of the reduction instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    t: usize,
    r: usize,
}

impl Layout {
    pub fn new(t: usize, r: usize) -> Self {
        Self { t, r }
    }

    pub fn n(&self) -> usize {
        self.t + 1 + 2 * self.t * self.t + 3 * self.r
    }

    pub fn m(&self) -> usize {
        3 * self.t
    }

    /// `b_k`, `k` in `0..=t`.
    pub fn base(&self, k: usize) -> usize {
        k
    }

    /// `h_{j+1, l+1}`, `j < t`, `l < 2t`.
    pub fn set(&self, j: usize, l: usize) -> usize {
        self.t + 1 + 2 * self.t * j + l
    }

    fn element(&self, i: usize) -> usize {
        self.t + 1 + 2 * self.t * self.t + 3 * i
    }

    pub fn v(&self, i: usize) -> usize {
        self.element(i)
    }

    pub fn w(&self, i: usize) -> usize {
        self.element(i) + 1
    }

    pub fn z(&self, i: usize) -> usize {
        self.element(i) + 2
    }

    /// `P_{j+1, c+1}`, `c < 3`.
    pub fn partition(&self, j: usize, c: usize) -> usize {
        3 * j + c
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionParams {
    pub epsilon: Rational,
    pub big_r: Rational,
    pub big_q: Rational,
}

impl ReductionParams {
    /// `eps = 1/(12 t^2)`, `R = 6 t^3 / eps`, `Q = 6 t / eps`.
    pub fn for_t(t: usize) -> Self {
        let t = t as i64;
        let epsilon = rat(1, 12 * t * t);
        Self {
            big_r: int(6 * t * t * t) / &epsilon,
            big_q: int(6 * t) / &epsilon,
            epsilon,
        }
    }

    /// `K = R + R/t + Q + 6 + r/t`.
    pub fn threshold(&self, t: usize, r: usize) -> Rational {
        let t = int(t as i64);
        &self.big_r + &self.big_r / &t + &self.big_q + int(6) + int(r as i64) / &t
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionOutput {
    pub instance: Instance,
    pub params: ReductionParams,
    pub threshold: Rational,
    pub layout: Layout,
    /// Agent name (`b_0`, `h_1_1`, `v_1`, ...) to 0-based index.
    pub agent_index: BTreeMap<String, usize>,
    /// Partition name (`P_1_1`, ...) to 0-based index.
    pub partition_index: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
    pub phi: X3cInstance,
}

pub fn generate(phi: &X3cInstance) -> Result<ReductionOutput> {
    let (t, r) = (phi.t(), phi.r());
    let f = phi.frequencies();
    if let Some(i) = f.iter().position(|&x| x == 0) {
        return Err(Error::OrphanElement(i + 1));
    }
    let mut warnings = Vec::new();
    if t < 9 {
        warnings.push(format!("t = {t} < 9: the reduction is not guaranteed to be sound"));
    }
    if r > 3 * t {
        warnings.push(format!("r = {r} > 3t = {}: the reduction is not guaranteed to be sound", 3 * t));
    }

    let layout = Layout::new(t, r);
    let params = ReductionParams::for_t(t);
    let ReductionParams { epsilon, big_r, big_q } = &params;
    let n = layout.n();
    let r_over_t = big_r / int(t as i64);
    let q_minus = big_q * (one() - epsilon);
    let two = int(2);
    let two_thirds = rat(2, 3);
    let inv_f: Vec<Rational> = f.iter().map(|&x| rat(1, x as i64)).collect();
    let w_value: Vec<Rational> = inv_f.iter().map(|g| (one() + g) * g).collect();

    let mut utilities = Vec::with_capacity(layout.m());
    for (j, s) in phi.triples().iter().enumerate() {
        for c in 0..3 {
            let mut u = SquareMatrix::zeros(n);
            let b0 = layout.base(0);
            let bj = layout.base(j + 1);
            u[(b0, b0)] = r_over_t.clone();
            u[(b0, bj)] = big_r.clone();
            u[(bj, bj)] = big_r.clone();
            let h1 = layout.set(j, 0);
            let h2 = layout.set(j, 1);
            match c {
                0 => u[(h1, h1)] = big_q.clone(),
                1 => u[(h2, h2)] = big_q.clone(),
                _ => {
                    u[(h1, h1)] = q_minus.clone();
                    u[(h2, h2)] = q_minus.clone();
                    for l in 2..=t {
                        u[(layout.set(j, l), h1)] = epsilon.clone();
                    }
                    for l in t + 1..2 * t {
                        u[(layout.set(j, l), h2)] = epsilon.clone();
                    }
                }
            }
            for &i in s {
                let (v, w, z) = (layout.v(i), layout.w(i), layout.z(i));
                u[(z, z)] = inv_f[i].clone();
                if c != 1 {
                    u[(v, v)] = two.clone();
                    u[(z, v)] = two_thirds.clone();
                }
                if c != 0 {
                    u[(w, w)] = two.clone();
                    u[(z, w)] = w_value[i].clone();
                }
            }
            utilities.push(u);
        }
    }

    let mut agent_index = BTreeMap::new();
    for k in 0..=t {
        agent_index.insert(format!("b_{k}"), layout.base(k));
    }
    for j in 0..t {
        for l in 0..2 * t {
            agent_index.insert(format!("h_{}_{}", j + 1, l + 1), layout.set(j, l));
        }
    }
    for i in 0..r {
        agent_index.insert(format!("v_{}", i + 1), layout.v(i));
        agent_index.insert(format!("w_{}", i + 1), layout.w(i));
        agent_index.insert(format!("z_{}", i + 1), layout.z(i));
    }
    let mut partition_index = BTreeMap::new();
    for j in 0..t {
        for c in 0..3 {
            partition_index.insert(format!("P_{}_{}", j + 1, c + 1), layout.partition(j, c));
        }
    }

    Ok(ReductionOutput {
        instance: Instance::new(utilities)?,
        threshold: params.threshold(t, r),
        params,
        layout,
        agent_index,
        partition_index,
        warnings,
        phi: phi.clone(),
    })
}

impl ReductionOutput {
    /// Parameters, threshold, and index maps with 1-based indices.
    pub fn sidecar_json(&self) -> serde_json::Value {
        let plus_one = |m: &BTreeMap<String, usize>| -> BTreeMap<String, usize> {
            m.iter().map(|(k, v)| (k.clone(), v + 1)).collect()
        };
        serde_json::json!({
            "epsilon": format_rational(&self.params.epsilon),
            "R": format_rational(&self.params.big_r),
            "Q": format_rational(&self.params.big_q),
            "K": format_rational(&self.threshold),
            "agent_index": plus_one(&self.agent_index),
            "partition_index": plus_one(&self.partition_index),
        })
    }
}

/// The canonical allocation of `P_{j+1, c+1}`. Bundles carry their
/// agent's index, so this is the identity.
pub fn canonical_allocation(out: &ReductionOutput, j: usize, c: usize) -> Result<Vec<usize>> {
    if j >= out.phi.t() || c >= 3 {
        return Err(Error::Index(format!(
            "partition P_{}_{} outside t = {}, c in 1..=3",
            j + 1,
            c + 1,
            out.phi.t()
        )));
    }
    Ok((0..out.layout.n()).collect())
}

/// Checks that `cover` (0-based triple indices) is an exact cover and
/// names the first offending element otherwise.
pub fn check_cover(phi: &X3cInstance, cover: &[usize]) -> Result<()> {
    let mut hits = vec![0usize; phi.r()];
    for &j in cover {
        let s = phi
            .triples()
            .get(j)
            .ok_or_else(|| Error::InvalidCover(format!("triple {} does not exist (t = {})", j + 1, phi.t())))?;
        for &e in s {
            hits[e] += 1;
        }
    }
    for (e, &h) in hits.iter().enumerate() {
        match h {
            1 => {}
            0 => return Err(Error::InvalidCover(format!("element {} is not covered", e + 1))),
            _ => return Err(Error::InvalidCover(format!("element {} is covered {h} times", e + 1))),
        }
    }
    Ok(())
}

pub fn is_exact_cover(phi: &X3cInstance, cover: &[usize]) -> bool {
    check_cover(phi, cover).is_ok()
}

/// Probability `1/t` on the canonical allocation of `P_{j,1}` for `j` in
/// the cover and of `P_{j,2}` otherwise.
pub fn witness_lottery(out: &ReductionOutput, cover: &[usize]) -> Result<Lottery> {
    check_cover(&out.phi, cover)?;
    let t = out.phi.t();
    let n = out.layout.n();
    let share = rat(1, t as i64);
    let mut p = vec![Rational::zero(); out.layout.m()];
    for j in 0..t {
        let c = if cover.contains(&j) { 0 } else { 1 };
        p[out.layout.partition(j, c)] = share.clone();
    }
    let q = p.iter().map(|pk| SquareMatrix::scaled_identity(n, pk)).collect();
    Lottery::new(p, q)
}
