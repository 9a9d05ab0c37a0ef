//! Largest reduced multisets (`h_p(k)`), polynomial-coefficient certificates of
//! full sumsets, and the planar refutation procedure for oversized reduced sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec, LinearMap};
use crate::sumset::{is_reduced_indices, sumset, sumset_bits, Bitmap, Multiset};

/// `k(p-1)`: the size of `p-1` copies of every elementary basis vector.
pub fn h_lower_bound(p: u32, k: u32) -> usize {
    (p as usize - 1) * k as usize
}

/// `(p-1)(log2 k + 1) k`.
pub fn h_upper_bound(p: u32, k: u32) -> f64 {
    if k == 0 {
        return 0.0;
    }
    (p as f64 - 1.0) * ((k as f64).log2() + 1.0) * k as f64
}

/// Best integer upper bound on `h_p(r)` available without search: exact for
/// `r <= 1` and `p = 2`, the general logarithmic bound otherwise.
pub fn h_bound(p: u32, r: u32) -> usize {
    match (p, r) {
        (_, 0) => 0,
        (_, 1) => p as usize - 1,
        (2, r) => r as usize,
        _ => (h_upper_bound(p, r) + 1e-9).floor() as usize,
    }
}

/// `p-1` copies of each `e_i`; reduced, of size `k(p-1)`.
pub fn h_lower_witness(p: u32, k: u32) -> Result<Multiset> {
    let spec = GroupSpec::new(p, k)?;
    let elements = (0..spec.dim())
        .flat_map(|i| std::iter::repeat_n(spec.basis(i), p as usize - 1))
        .collect();
    Ok(Multiset::new(spec, elements))
}

#[derive(Clone, Debug, Serialize)]
pub struct HBoundsReport {
    pub p: u32,
    pub k: u32,
    pub lower: usize,
    pub upper: f64,
    pub exact: Option<usize>,
    pub witness: Option<Multiset>,
    pub nodes: u64,
}

struct HSearch {
    spec: GroupSpec,
    order: usize,
    line_cap: usize,
    depth_cap: usize,
    budget: u64,
    nodes: u64,
    line_counts: Vec<usize>,
    best: Vec<usize>,
}

impl HSearch {
    /// Returns `false` once the node budget is exhausted.
    fn dfs(&mut self, elems: &mut Vec<usize>, sums: &Bitmap, start: usize) -> bool {
        let size = sums.count();
        // Each further element of a reduced extension adds at least one new sum.
        if elems.len() + (self.order - size) <= self.best.len() || elems.len() >= self.depth_cap {
            return true;
        }
        for c in start.max(1)..self.order {
            self.nodes += 1;
            if self.nodes > self.budget {
                return false;
            }
            let line = self.spec.direction_idx(c);
            if self.line_counts[line] >= self.line_cap {
                continue;
            }
            let mut next = sums.clone();
            for x in sums.ones() {
                next.set(self.spec.add_idx(x, c));
            }
            if next.count() == size {
                continue;
            }
            elems.push(c);
            if is_reduced_indices(&self.spec, elems) {
                if elems.len() > self.best.len() {
                    self.best = elems.clone();
                }
                self.line_counts[line] += 1;
                let ok = self.dfs(elems, &next, c);
                self.line_counts[line] -= 1;
                if !ok {
                    elems.pop();
                    return false;
                }
            }
            elems.pop();
        }
        true
    }
}

/// Exact `h_p(k)` by depth-first search over multisets listed in non-decreasing
/// canonical order. Every prefix of a reduced multiset is reduced, so pruning
/// non-reduced prefixes loses nothing; at most `p-1` elements may share a line
/// through the origin. The witness is the lexicographically least multiset of
/// maximum size.
pub fn h_exact(p: u32, k: u32, budget: u64) -> Result<HBoundsReport> {
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    let spec = GroupSpec::new(p, k)?;
    let upper = h_upper_bound(p, k);
    let mut search = HSearch {
        spec,
        order: spec.order(),
        line_cap: p as usize - 1,
        depth_cap: (upper + 1e-9).floor() as usize,
        budget,
        nodes: 0,
        line_counts: vec![0; spec.order()],
        best: Vec::new(),
    };
    let mut root = Bitmap::new(spec.order());
    root.set(0);
    let complete = search.dfs(&mut Vec::new(), &root, 1);
    let witness = Multiset::from_indices(spec, search.best.iter().copied());
    Ok(HBoundsReport {
        p,
        k,
        lower: h_lower_bound(p, k),
        upper,
        exact: complete.then_some(witness.len()),
        witness: Some(witness),
        nodes: search.nodes.min(budget),
    })
}

/// Coefficient of `prod_i z_i^{d_i}` in `prod_j (sum_i V[j](i) z_i)` over `F_p`,
/// i.e. the sum over ordered partitions `(I_1..I_k)` of the rows with
/// `|I_i| = d_i` of `prod_i prod_{j in I_i} V[j](i)`.
pub fn equipartition_coefficient(
    spec: &GroupSpec,
    vectors: &[GroupElement],
    degrees: &[usize],
) -> Result<u32> {
    let k = spec.dim();
    if degrees.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: degrees.len() });
    }
    if degrees.iter().sum::<usize>() != vectors.len() {
        return Err(Error::Precondition(format!(
            "degrees sum to {} but {} vectors were given",
            degrees.iter().sum::<usize>(),
            vectors.len()
        )));
    }
    let p = spec.p() as u64;
    // Mixed-radix state: number of factors already assigned to each coordinate.
    let mut radix = Vec::with_capacity(k);
    let mut states = 1usize;
    for &d in degrees {
        radix.push(states);
        states *= d + 1;
    }
    let mut dp = vec![0u64; states];
    dp[0] = 1;
    for (j, v) in vectors.iter().enumerate() {
        let mut next = vec![0u64; states];
        for (state, &val) in dp.iter().enumerate() {
            if val == 0 {
                continue;
            }
            let mut used = 0;
            for i in 0..k {
                used += state / radix[i] % (degrees[i] + 1);
            }
            if used != j {
                continue;
            }
            for i in 0..k {
                let c = state / radix[i] % (degrees[i] + 1);
                let a = v.coords()[i] as u64;
                if c < degrees[i] && a != 0 {
                    let t = state + radix[i];
                    next[t] = (next[t] + val * a) % p;
                }
            }
        }
        dp = next;
    }
    Ok(dp[states - 1] as u32)
}

/// One-sided certificate that `Σ(S)` is the whole group: `|S| = k(p-1)` and the
/// balanced coefficient is nonzero. `false` is inconclusive.
pub fn full_sumset_by_coefficient(s: &Multiset) -> Result<bool> {
    let spec = s.spec();
    let need = h_lower_bound(spec.p(), spec.k());
    if s.len() != need {
        return Err(Error::Precondition(format!(
            "expected {need} elements, got {}",
            s.len()
        )));
    }
    let degrees = vec![spec.p() as usize - 1; spec.dim()];
    Ok(equipartition_coefficient(spec, s.elements(), &degrees)? != 0)
}

/// A proper sub-multiset with the same sumset, witnessing that `input` is not reduced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationCertificate {
    pub input: Multiset,
    pub proper_subset: Multiset,
    pub shared_sumset_size: usize,
}

impl RefutationCertificate {
    /// Recomputes both sumsets and checks strict containment.
    pub fn verify(&self) -> bool {
        self.input.spec() == self.proper_subset.spec()
            && self.proper_subset.len() < self.input.len()
            && self.proper_subset.is_submultiset_of(&self.input)
            && {
                let a = sumset(&self.input);
                a == sumset(&self.proper_subset) && a.size() == self.shared_sumset_size
            }
    }
}

/// Trace of one run of the planar refutation procedure.
#[derive(Clone, Debug, Serialize)]
pub struct RefutationRun {
    /// Direction whose line meets `S` least often.
    pub direction: GroupElement,
    pub direction_count: usize,
    /// Matrix of the injective map sending `direction` to `(0,1)`.
    pub transform: Vec<Vec<u32>>,
    /// Largest line multiplicity left after removing the greedy `p-1` vectors.
    pub max_line_after_greedy: usize,
    pub certificate: Option<RefutationCertificate>,
    pub failure: Option<String>,
}

/// Greedy refutation for `S` in `Z_p^2` of size `ceil(5(p-1)/2)` with no zero
/// and at most `p-1` elements per line: finds `2(p-1)` elements whose
/// coefficient certificate proves their sumset is the whole plane.
pub fn refute_reduced_dim2(s: &Multiset) -> Result<RefutationRun> {
    let spec = *s.spec();
    let p = spec.p();
    if spec.k() != 2 {
        return Err(Error::Precondition("group must be two-dimensional".into()));
    }
    if p < 7 {
        return Err(Error::Precondition(format!("p = {p} < 7")));
    }
    let expected = (5 * (p as usize - 1)).div_ceil(2);
    if s.len() != expected {
        return Err(Error::Precondition(format!(
            "expected {expected} elements, got {}",
            s.len()
        )));
    }
    if s.elements().iter().any(GroupElement::is_zero) {
        return Err(Error::Precondition("multiset contains 0".into()));
    }
    let mut line_counts = vec![0usize; spec.order()];
    for e in s.elements() {
        line_counts[spec.direction_idx(e.index())] += 1;
    }
    if let Some(line) = line_counts.iter().position(|&c| c > p as usize - 1) {
        return Err(Error::Precondition(format!(
            "line through {} holds {} > p-1 elements",
            spec.element_at(line),
            line_counts[line]
        )));
    }

    // Directions (0,1) and (1,i); choose the least populated, ties by index.
    let directions: Vec<usize> = (0..spec.order())
        .filter(|&x| x != 0 && spec.direction_idx(x) == x)
        .collect();
    debug_assert_eq!(directions.len(), p as usize + 1);
    let &dir = directions
        .iter()
        .min_by_key(|&&d| (line_counts[d], d))
        .expect("p+1 directions");
    let dir_el = spec.element_at(dir);
    let vertical = spec.index_of(&[0, 1]);
    let transform = if dir == vertical {
        LinearMap::identity(spec)
    } else {
        let i = dir_el.coords()[1];
        // (x, y) -> (y - i x, x) sends (1, i) to (0, 1).
        LinearMap::new(spec, vec![vec![(p - i) % p, 1], vec![1, 0]])?
    };
    debug_assert!(transform.is_injective());
    let image: Vec<GroupElement> = s.elements().iter().map(|e| transform.apply(e)).collect();
    let dir_of = |pos: usize| spec.direction_idx(image[pos].index());

    // Greedy: p-1 vectors off the vertical line, each maximizing its line's
    // multiplicity among those still available.
    let mut pool: Vec<usize> = (0..image.len()).filter(|&q| dir_of(q) != vertical).collect();
    let mut chosen = Vec::with_capacity(2 * (p as usize - 1));
    for _ in 0..p - 1 {
        let &pick = pool
            .iter()
            .max_by_key(|&&q| {
                let mult = pool.iter().filter(|&&r| dir_of(r) == dir_of(q)).count();
                (mult, std::cmp::Reverse((image[q].index(), q)))
            })
            .expect("more than p-1 vectors off the vertical line");
        pool.retain(|&q| q != pick);
        chosen.push(pick);
    }

    let mut rest: Vec<usize> = (0..image.len()).filter(|q| !chosen.contains(q)).collect();
    let mut after = vec![0usize; spec.order()];
    for &q in &rest {
        after[dir_of(q)] += 1;
    }
    let max_line_after_greedy = after.into_iter().max().unwrap_or(0);

    let mut run = RefutationRun {
        direction: dir_el,
        direction_count: line_counts[dir],
        transform: transform.matrix().to_vec(),
        max_line_after_greedy,
        certificate: None,
        failure: None,
    };

    // Extend one vector at a time keeping the (p-1, t) coefficient nonzero.
    rest.sort_by_key(|&q| (image[q].index(), q));
    for t in 1..p as usize {
        let degrees = [p as usize - 1, t];
        let mut found = None;
        for (slot, &q) in rest.iter().enumerate() {
            let trial: Vec<GroupElement> = chosen
                .iter()
                .chain(std::iter::once(&q))
                .map(|&r| image[r].clone())
                .collect();
            if equipartition_coefficient(&spec, &trial, &degrees)? != 0 {
                found = Some(slot);
                break;
            }
        }
        match found {
            Some(slot) => chosen.push(rest.remove(slot)),
            None => {
                run.failure = Some(format!("no admissible extension at step t = {t}"));
                return Ok(run);
            }
        }
    }

    let proper_subset =
        Multiset::new(spec, chosen.iter().map(|&q| s.elements()[q].clone()).collect());
    let shared = sumset(&proper_subset);
    let full = sumset_bits(&spec, s.indices());
    if shared.bits() != &full || !shared.is_full() {
        run.failure = Some("coefficient certificate did not yield a full sumset".into());
        return Ok(run);
    }
    run.certificate = Some(RefutationCertificate {
        input: s.clone(),
        shared_sumset_size: shared.size(),
        proper_subset,
    });
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sumset::is_reduced;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Sum over all assignments of rows to coordinates with the prescribed counts.
    fn partition_sum_bruteforce(spec: &GroupSpec, v: &[GroupElement], d: &[usize]) -> u32 {
        let k = spec.dim();
        let m = v.len();
        let p = spec.p() as u64;
        let mut total = 0u64;
        let mut assign = vec![0usize; m];
        loop {
            let mut counts = vec![0usize; k];
            for &a in &assign {
                counts[a] += 1;
            }
            if counts == d {
                let term = assign
                    .iter()
                    .enumerate()
                    .fold(1u64, |acc, (j, &i)| acc * v[j].coords()[i] as u64 % p);
                total = (total + term) % p;
            }
            let mut pos = 0;
            loop {
                if pos == m {
                    return total as u32;
                }
                assign[pos] += 1;
                if assign[pos] < k {
                    break;
                }
                assign[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn lower_witness_shapes() {
        let w = h_lower_witness(2, 3).unwrap();
        assert_eq!(w.len(), 3);
        assert!(is_reduced(&w));
        let w = h_lower_witness(3, 1).unwrap();
        assert_eq!(w.indices(), vec![1, 1]);
        let w = h_lower_witness(3, 2).unwrap();
        assert_eq!(w.len(), 4);
        assert!(is_reduced(&w));
    }

    #[test]
    fn h_small_values() {
        for k in 1..=4 {
            assert_eq!(h_exact(2, k, u64::MAX).unwrap().exact, Some(k as usize));
        }
        for p in [2, 3, 5, 7] {
            let r = h_exact(p, 1, u64::MAX).unwrap();
            assert_eq!(r.exact, Some(p as usize - 1));
            assert!(is_reduced(r.witness.as_ref().unwrap()));
        }
    }

    #[test]
    fn budget_exhaustion_reports_best_effort() {
        let r = h_exact(3, 2, 10).unwrap();
        assert_eq!(r.exact, None);
        assert!(is_reduced(r.witness.as_ref().unwrap()));
    }

    #[test]
    fn bounds_formulas() {
        assert_eq!(h_lower_bound(3, 2), 4);
        assert!((h_upper_bound(3, 2) - 8.0).abs() < 1e-12);
        assert!((h_upper_bound(5, 1) - 4.0).abs() < 1e-12);
        assert_eq!(h_bound(2, 7), 7);
        assert_eq!(h_bound(5, 1), 4);
        assert_eq!(h_bound(3, 2), 8);
        assert_eq!(h_bound(3, 0), 0);
    }

    #[test]
    fn coefficient_examples() {
        let z3 = GroupSpec::new(3, 1).unwrap();
        let v = vec![z3.element(&[1]).unwrap(), z3.element(&[2]).unwrap()];
        assert_eq!(equipartition_coefficient(&z3, &v, &[2]).unwrap(), 2);
        let z2 = GroupSpec::new(2, 2).unwrap();
        let v = vec![z2.basis(0), z2.basis(1)];
        assert_eq!(equipartition_coefficient(&z2, &v, &[1, 1]).unwrap(), 1);
        assert!(equipartition_coefficient(&z2, &v, &[2, 1]).is_err());
        assert!(equipartition_coefficient(&z2, &v, &[2]).is_err());
    }

    #[test]
    fn coefficient_matches_partition_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..100 {
            let (p, k) = [(2, 2), (3, 2), (5, 2), (3, 3), (7, 1), (5, 3)][trial % 6];
            let spec = GroupSpec::new(p, k).unwrap();
            let m = rng.gen_range(0..=8);
            let v: Vec<GroupElement> =
                (0..m).map(|_| spec.element_at(rng.gen_range(0..spec.order()))).collect();
            let mut d = vec![0usize; k as usize];
            for _ in 0..m {
                d[rng.gen_range(0..k as usize)] += 1;
            }
            assert_eq!(
                equipartition_coefficient(&spec, &v, &d).unwrap(),
                partition_sum_bruteforce(&spec, &v, &d)
            );
        }
    }

    #[test]
    fn coefficient_is_multilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let spec = GroupSpec::new(5, 2).unwrap();
            let m = rng.gen_range(1..=6);
            let mut v: Vec<GroupElement> =
                (0..m).map(|_| spec.element_at(rng.gen_range(0..spec.order()))).collect();
            let d = {
                let a = rng.gen_range(0..=m);
                vec![a, m - a]
            };
            let base = equipartition_coefficient(&spec, &v, &d).unwrap();
            let j = rng.gen_range(0..m);
            let lambda = rng.gen_range(0..5u32);
            v[j] = spec.element_at(spec.scale_idx(lambda, v[j].index()));
            let scaled = equipartition_coefficient(&spec, &v, &d).unwrap();
            assert_eq!(scaled, base * lambda % 5);
        }
    }

    #[test]
    fn coefficient_certificate_examples() {
        let z3 = GroupSpec::new(3, 1).unwrap();
        let s = Multiset::from_indices(z3, [1, 2]);
        assert!(full_sumset_by_coefficient(&s).unwrap());
        assert!(sumset(&s).is_full());
        let s = Multiset::from_indices(z3, [0, 1]);
        assert!(!full_sumset_by_coefficient(&s).unwrap());
        assert!(full_sumset_by_coefficient(&Multiset::from_indices(z3, [1])).is_err());
    }

    #[test]
    fn coefficient_certificate_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let spec = GroupSpec::new(3, 2).unwrap();
        for _ in 0..200 {
            let s = Multiset::from_indices(spec, (0..4).map(|_| rng.gen_range(0..9)));
            if full_sumset_by_coefficient(&s).unwrap() {
                assert!(sumset(&s).is_full());
            }
        }
    }

    #[test]
    fn refutation_rejects_bad_inputs() {
        let spec = GroupSpec::new(7, 2).unwrap();
        // Seven copies of e1 break the line cap.
        let mut idx = vec![1; 7];
        idx.extend((0..8).map(|i| spec.index_of(&[i % 6 + 1, 1])));
        let s = Multiset::from_indices(spec, idx);
        assert!(matches!(refute_reduced_dim2(&s), Err(Error::Precondition(_))));
        let small = Multiset::from_indices(GroupSpec::new(5, 2).unwrap(), [1; 10]);
        assert!(refute_reduced_dim2(&small).is_err());
    }

    #[test]
    fn refutation_on_a_fixed_input() {
        let spec = GroupSpec::new(7, 2).unwrap();
        let idx: Vec<usize> = (0..15).map(|i| spec.index_of(&[1 + i % 6, (i / 3) % 7])).collect();
        let s = Multiset::from_indices(spec, idx);
        let run = refute_reduced_dim2(&s).unwrap();
        let cert = run.certificate.expect("certificate");
        assert!(cert.verify());
        assert_eq!(cert.proper_subset.len(), 12);
        assert_eq!(cert.shared_sumset_size, 49);
        assert!(run.max_line_after_greedy <= 3);
    }

    #[test]
    fn tampered_certificate_fails() {
        let spec = GroupSpec::new(3, 1).unwrap();
        let input = Multiset::from_indices(spec, [1, 1, 2]);
        let good = RefutationCertificate {
            input: input.clone(),
            proper_subset: Multiset::from_indices(spec, [1, 1]),
            shared_sumset_size: 3,
        };
        assert!(good.verify());
        let not_proper = RefutationCertificate { proper_subset: input.clone(), ..good.clone() };
        assert!(!not_proper.verify());
        let smaller = RefutationCertificate {
            proper_subset: Multiset::from_indices(spec, [1]),
            ..good
        };
        assert!(!smaller.verify());
    }
}
