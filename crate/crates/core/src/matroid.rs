//! Disjoint bases in multisets of `F_p^k` vectors (the linear matroid on
//! element copies) and the additive-basis union experiment.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{rank_of_indices, GroupSpec};
use crate::sumset::{sumset, Multiset};

/// `t` pairwise disjoint bases drawn from a multiset, plus whatever is left over.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasePacking {
    pub bases: Vec<Multiset>,
    pub leftover: Multiset,
}

impl BasePacking {
    /// Each base spans with exactly `k` elements, and bases plus leftover
    /// reconstitute `input` as a multiset.
    pub fn verify(&self, input: &Multiset) -> bool {
        let k = input.spec().dim();
        let bases_ok = self.bases.iter().all(|b| {
            b.spec() == input.spec() && b.len() == k && rank_of_indices(b.spec(), &b.indices()) == k
        });
        let mut all = self.leftover.clone();
        for b in &self.bases {
            all = all.union(b);
        }
        bases_ok && all == *input
    }
}

fn independent(spec: &GroupSpec, tokens: &[usize], values: &[usize]) -> bool {
    let v: Vec<usize> = tokens.iter().map(|&t| values[t]).collect();
    rank_of_indices(spec, &v) == v.len() && v.iter().all(|&x| x != 0)
}

/// `t` disjoint bases of the full space, if they exist.
///
/// Each copy of an element is a separate token. Tokens are inserted in
/// canonical order by matroid-partition augmentation: a breadth-first search
/// over exchanges `y enters I_j, displacing z in the circuit of I_j + y`, so
/// every augmenting path is shortest and every set stays independent.
pub fn pack_disjoint_bases(s: &Multiset, t: usize) -> Result<Option<BasePacking>> {
    let spec = *s.spec();
    let k = spec.dim();
    let values = s.indices();
    let r = rank_of_indices(&spec, &values);
    if r < k {
        return Err(Error::RankDeficient { rank: r, k });
    }
    if t == 0 {
        return Err(Error::Precondition("t must be at least 1".into()));
    }
    if values.len() < t * k {
        return Ok(None);
    }
    let n = values.len();
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); t];
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut placed = 0;

    for x in 0..n {
        if placed == t * k {
            break;
        }
        if values[x] == 0 {
            continue;
        }
        // parent[z] = token that takes z's place when the path is applied.
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[x] = true;
        let mut queue = VecDeque::from([x]);
        let mut end: Option<(usize, usize)> = None;
        'bfs: while let Some(y) = queue.pop_front() {
            for j in 0..t {
                if owner[y] == Some(j) {
                    continue;
                }
                let mut with_y = sets[j].clone();
                with_y.push(y);
                if independent(&spec, &with_y, &values) {
                    end = Some((y, j));
                    break 'bfs;
                }
                for &z in &sets[j] {
                    if seen[z] {
                        continue;
                    }
                    let swapped: Vec<usize> =
                        sets[j].iter().map(|&w| if w == z { y } else { w }).collect();
                    if independent(&spec, &swapped, &values) {
                        seen[z] = true;
                        parent[z] = Some(y);
                        queue.push_back(z);
                    }
                }
            }
        }
        let Some((mut cur, mut target)) = end else {
            continue;
        };
        loop {
            let old = owner[cur];
            if let Some(o) = old {
                sets[o].retain(|&w| w != cur);
            }
            sets[target].push(cur);
            owner[cur] = Some(target);
            match (parent[cur], old) {
                (Some(prev), Some(o)) => {
                    cur = prev;
                    target = o;
                }
                _ => break,
            }
        }
        debug_assert!(sets.iter().all(|s| independent(&spec, s, &values)));
        placed += 1;
    }

    if placed < t * k {
        return Ok(None);
    }
    let bases = sets
        .iter()
        .map(|set| Multiset::from_indices(spec, set.iter().map(|&tok| values[tok])))
        .collect();
    let leftover =
        Multiset::from_indices(spec, (0..n).filter(|&tok| owner[tok].is_none()).map(|tok| values[tok]));
    Ok(Some(BasePacking { bases, leftover }))
}

/// Default cap on the number of sub-multisets the counting condition may visit.
pub const DEFAULT_PACKING_BUDGET: u128 = 1 << 20;

/// Whether every sub-multiset `T` satisfies `|S| - |T| >= t (rank S - rank T)`,
/// checked by enumerating all multiplicity vectors.
pub fn packing_condition_bruteforce(s: &Multiset, t: usize, budget: u128) -> Result<bool> {
    let spec = *s.spec();
    let distinct = s.distinct();
    let combos: u128 = distinct.iter().map(|(_, m)| *m as u128 + 1).product();
    if combos > budget {
        return Err(Error::BudgetExceeded { needed: combos, budget });
    }
    let total = s.len();
    let rank_s = rank_of_indices(&spec, &s.indices());
    let mut counts = vec![0usize; distinct.len()];
    loop {
        let size: usize = counts.iter().sum();
        let support: Vec<usize> = distinct
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c > 0)
            .map(|((e, _), _)| e.index())
            .collect();
        let rank_t = rank_of_indices(&spec, &support);
        if total - size < t * (rank_s - rank_t) {
            return Ok(false);
        }
        let mut pos = 0;
        loop {
            if pos == counts.len() {
                return Ok(true);
            }
            counts[pos] += 1;
            if counts[pos] <= distinct[pos].1 {
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
    }
}

/// Smallest integer `l >= (p-1) log2 k + p - 2`.
pub fn additive_basis_threshold(p: u32, k: u32) -> usize {
    let raw = (p as f64 - 1.0) * (k as f64).log2() + p as f64 - 2.0;
    (raw - 1e-9).ceil().max(0.0) as usize
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisUnionReport {
    pub p: u32,
    pub k: u32,
    #[serde(rename = "ℓ")]
    pub l: usize,
    pub trials: usize,
    pub full_fraction: f64,
    pub failures: Vec<Multiset>,
}

fn random_basis(rng: &mut ChaCha8Rng, spec: &GroupSpec) -> Vec<usize> {
    loop {
        let rows: Vec<usize> = (0..spec.dim()).map(|_| rng.gen_range(0..spec.order())).collect();
        if rank_of_indices(spec, &rows) == spec.dim() {
            return rows;
        }
    }
}

/// Samples `trials` unions of `l` uniformly random bases and reports how many
/// have the whole group as sumset. Trial `i` uses seed `seed + i`.
pub fn additive_basis_union_test(
    p: u32,
    k: u32,
    l: usize,
    trials: usize,
    seed: u64,
) -> Result<BasisUnionReport> {
    if l == 0 {
        return Err(Error::Precondition("l must be at least 1".into()));
    }
    let spec = GroupSpec::new(p, k)?;
    let outcomes: Vec<Option<Multiset>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let union = Multiset::from_indices(
                spec,
                (0..l).flat_map(|_| random_basis(&mut rng, &spec)).collect::<Vec<_>>(),
            );
            (!sumset(&union).is_full()).then_some(union)
        })
        .collect();
    let failures: Vec<Multiset> = outcomes.into_iter().flatten().collect();
    let full_fraction = if trials == 0 {
        1.0
    } else {
        (trials - failures.len()) as f64 / trials as f64
    };
    Ok(BasisUnionReport { p, k, l, trials, full_fraction, failures })
}
