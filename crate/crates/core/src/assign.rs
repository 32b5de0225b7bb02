//! Exact maximum-weight perfect matching (Hungarian method with
//! potentials) over rationals.

use crate::instance::{zero, Rational};

/// Returns `perm` maximizing `sum_i w[i][perm[i]]` and the maximum.
pub(crate) fn max_weight_assignment(w: &[Vec<Rational>]) -> (Vec<usize>, Rational) {
    let n = w.len();
    // 1-based rows and columns; column 0 is a sentinel.
    let mut u = vec![zero(); n + 1];
    let mut v = vec![zero(); n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv: Vec<Option<Rational>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta: Option<Rational> = None;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = -&w[i0 - 1][j - 1] - &u[i0] - &v[j];
                if minv[j].as_ref().map_or(true, |m| &cur < m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].as_ref().expect("just set");
                if delta.as_ref().map_or(true, |d| mj < d) {
                    delta = Some(mj.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += &delta;
                    v[j] -= &delta;
                } else if let Some(m) = minv[j].as_mut() {
                    *m -= &delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[owner[j] - 1] = j - 1;
    }
    let value = perm.iter().enumerate().map(|(i, &j)| &w[i][j]).sum();
    (perm, value)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::instance::int;
    use crate::perm::permutations;

    fn ints(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn small_cases() {
        assert_eq!(max_weight_assignment(&[]), (vec![], zero()));
        let (perm, value) = max_weight_assignment(&ints(&[&[1, 5], &[4, 1]]));
        assert_eq!(perm, vec![1, 0]);
        assert_eq!(value, int(9));
        let (_, value) = max_weight_assignment(&ints(&[&[-3, -1, -2], &[-2, -3, -1], &[-1, -2, -3]]));
        assert_eq!(value, int(-3));
    }

    proptest! {
        #[test]
        fn matches_enumeration(n in 1usize..=5, raw in proptest::collection::vec(-9i64..=9, 25)) {
            let w: Vec<Vec<Rational>> = (0..n).map(|i| (0..n).map(|j| int(raw[i * 5 + j])).collect()).collect();
            let best = permutations(n)
                .iter()
                .map(|p| p.iter().enumerate().map(|(i, &j)| w[i][j].clone()).sum::<Rational>())
                .max()
                .unwrap();
            let (perm, value) = max_weight_assignment(&w);
            prop_assert_eq!(&value, &best);
            let mut sorted = perm.clone();
            sorted.sort();
            prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
    }
}
