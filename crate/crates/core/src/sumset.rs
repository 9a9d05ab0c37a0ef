//! Multisets over `Z_p^k`, their subset-sum images, reduction and stabilizers.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec, Subspace};

/// Membership bitmap over the canonical indices of a group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    pub(crate) fn new(len: usize) -> Self {
        Bitmap { words: vec![0; len.div_ceil(64)], len }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize) -> bool {
        let was = self.get(i);
        self.words[i >> 6] |= 1 << (i & 63);
        !was
    }

    pub(crate) fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub(crate) fn is_subset_of(&self, other: &Bitmap) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }
}

/// Bitmap of the subset sums of `elements` (given as indices).
pub(crate) fn sumset_bits(spec: &GroupSpec, elements: impl IntoIterator<Item = usize>) -> Bitmap {
    let mut bits = Bitmap::new(spec.order());
    bits.set(0);
    for s in elements {
        if s == 0 {
            continue;
        }
        let current: Vec<usize> = bits.ones().collect();
        for x in current {
            bits.set(spec.add_idx(x, s));
        }
    }
    bits
}

/// A multiset of group elements kept sorted by canonical index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Multiset {
    spec: GroupSpec,
    elements: Vec<GroupElement>,
}

impl Multiset {
    pub fn new(spec: GroupSpec, mut elements: Vec<GroupElement>) -> Self {
        elements.sort();
        Multiset { spec, elements }
    }

    pub fn from_indices(spec: GroupSpec, indices: impl IntoIterator<Item = usize>) -> Self {
        Self::new(spec, indices.into_iter().map(|i| spec.element_at(i)).collect())
    }

    /// Builds a multiset from raw coordinate vectors, validating each.
    pub fn from_coords(spec: GroupSpec, coords: &[Vec<u32>]) -> Result<Self> {
        let elements = coords.iter().map(|c| spec.element(c)).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(spec, elements))
    }

    pub fn empty(spec: GroupSpec) -> Self {
        Multiset { spec, elements: Vec::new() }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn indices(&self) -> Vec<usize> {
        self.elements.iter().map(GroupElement::index).collect()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn push(&mut self, e: GroupElement) {
        let pos = self.elements.partition_point(|x| x <= &e);
        self.elements.insert(pos, e);
    }

    /// Removes one copy of `e`; returns whether a copy was present.
    pub fn remove_one(&mut self, e: &GroupElement) -> bool {
        match self.elements.binary_search(e) {
            Ok(pos) => {
                self.elements.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    /// Multiset union.
    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut all = self.elements.clone();
        all.extend(other.elements.iter().cloned());
        Multiset::new(self.spec, all)
    }

    /// `self - other`: one copy removed per element of `other` (absent ones ignored).
    pub fn difference(&self, other: &Multiset) -> Multiset {
        let mut out = self.clone();
        for e in &other.elements {
            out.remove_one(e);
        }
        out
    }

    /// Sub-multiset test counting multiplicities.
    pub fn is_submultiset_of(&self, other: &Multiset) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.elements.len() {
            if j == other.elements.len() {
                return false;
            }
            match self.elements[i].cmp(&other.elements[j]) {
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Less => return false,
            }
        }
        true
    }

    pub fn sum(&self) -> GroupElement {
        self.spec.sum(&self.elements)
    }

    /// Distinct values with their multiplicities, in canonical order.
    pub fn distinct(&self) -> Vec<(GroupElement, usize)> {
        let mut out: Vec<(GroupElement, usize)> = Vec::new();
        for e in &self.elements {
            match out.last_mut() {
                Some((last, n)) if last == e => *n += 1,
                _ => out.push((e.clone(), 1)),
            }
        }
        out
    }

    pub fn map<F: Fn(&GroupElement) -> GroupElement>(&self, spec: GroupSpec, f: F) -> Multiset {
        Multiset::new(spec, self.elements.iter().map(f).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct MultisetJson {
    p: u32,
    k: u32,
    elements: Vec<Vec<u32>>,
}

impl Serialize for Multiset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MultisetJson {
            p: self.spec.p(),
            k: self.spec.k(),
            elements: self.elements.iter().map(|e| e.coords().to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Multiset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MultisetJson::deserialize(d)?;
        let spec = GroupSpec::new(raw.p, raw.k).map_err(D::Error::custom)?;
        Multiset::from_coords(spec, &raw.elements).map_err(D::Error::custom)
    }
}

/// The set `Σ(S)` of subset sums, as a bitmap over canonical indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SumsetImage {
    spec: GroupSpec,
    bits: Bitmap,
}

impl SumsetImage {
    /// Wraps an arbitrary index set; used for stabilizer queries on non-sumset inputs.
    pub fn from_indices(spec: GroupSpec, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = Bitmap::new(spec.order());
        for i in indices {
            bits.set(i);
        }
        SumsetImage { spec, bits }
    }

    pub(crate) fn from_bits(spec: GroupSpec, bits: Bitmap) -> Self {
        debug_assert_eq!(bits.len(), spec.order());
        SumsetImage { spec, bits }
    }

    pub(crate) fn bits(&self) -> &Bitmap {
        &self.bits
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn size(&self) -> usize {
        self.bits.count()
    }

    pub fn contains_idx(&self, x: usize) -> bool {
        self.bits.get(x)
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.contains_idx(x.index())
    }

    pub fn is_full(&self) -> bool {
        self.size() == self.spec.order()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits.ones().collect()
    }

    pub fn is_subset_of(&self, other: &SumsetImage) -> bool {
        self.bits.is_subset_of(&other.bits)
    }

    /// `x + X == X`.
    pub fn is_invariant_under(&self, x: usize) -> bool {
        self.bits.ones().all(|y| self.bits.get(self.spec.add_idx(x, y)))
    }
}

impl Serialize for SumsetImage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices().serialize(s)
    }
}

/// `Σ(S)`, built incrementally via `Σ(S + s) = Σ(S) ∪ (s + Σ(S))`.
pub fn sumset(s: &Multiset) -> SumsetImage {
    SumsetImage::from_bits(s.spec, sumset_bits(&s.spec, s.elements.iter().map(|e| e.index())))
}

/// A sub-multiset of `s` summing to `target`, if one exists.
///
/// Back-pointers record, for every newly reached sum, the first element (in
/// canonical order) that reached it, so the answer is deterministic and `0`
/// is always witnessed by the empty sub-multiset.
pub fn subset_sum_witness(s: &Multiset, target: &GroupElement) -> Option<Multiset> {
    let spec = s.spec;
    let order = spec.order();
    // parent[x] = (element position, predecessor sum)
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; order];
    let mut reached = Bitmap::new(order);
    reached.set(0);
    for (pos, e) in s.elements.iter().enumerate() {
        if reached.get(target.index()) {
            break;
        }
        let current: Vec<usize> = reached.ones().collect();
        for x in current {
            let y = spec.add_idx(x, e.index());
            if reached.set(y) {
                parent[y] = Some((pos, x));
            }
        }
    }
    if !reached.get(target.index()) {
        return None;
    }
    let mut picked = Vec::new();
    let mut cur = target.index();
    while let Some((pos, prev)) = parent[cur] {
        picked.push(s.elements[pos].clone());
        cur = prev;
    }
    Some(Multiset::new(spec, picked))
}

/// Positions of `elements` that survive reduction, scanning candidates in
/// descending canonical order (ties by descending position) until no single
/// removal preserves the sumset.
pub(crate) fn reduce_keep(spec: &GroupSpec, elements: &[usize]) -> Vec<bool> {
    let target = sumset_bits(spec, elements.iter().copied()).count();
    let mut keep = vec![true; elements.len()];
    let mut order: Vec<usize> = (0..elements.len()).collect();
    order.sort_by(|&a, &b| elements[b].cmp(&elements[a]).then(b.cmp(&a)));
    loop {
        let mut changed = false;
        for &pos in &order {
            if !keep[pos] {
                continue;
            }
            keep[pos] = false;
            let size = sumset_bits(
                spec,
                elements.iter().zip(&keep).filter(|(_, &k)| k).map(|(&e, _)| e),
            )
            .count();
            if size == target {
                changed = true;
            } else {
                keep[pos] = true;
            }
        }
        if !changed {
            return keep;
        }
    }
}

pub(crate) fn is_reduced_indices(spec: &GroupSpec, elements: &[usize]) -> bool {
    let full = sumset_bits(spec, elements.iter().copied()).count();
    let mut seen: Vec<usize> = Vec::new();
    for (pos, &e) in elements.iter().enumerate() {
        if seen.contains(&e) {
            continue;
        }
        seen.push(e);
        let rest = elements
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != pos)
            .map(|(_, &x)| x);
        if sumset_bits(spec, rest).count() >= full {
            return false;
        }
    }
    true
}

/// Whether removing any single element strictly shrinks `|Σ(S)|`.
pub fn is_reduced(s: &Multiset) -> bool {
    is_reduced_indices(&s.spec, &s.indices())
}

/// A reduced sub-multiset with the same sumset.
pub fn reduce(s: &Multiset) -> Multiset {
    let idx = s.indices();
    let keep = reduce_keep(&s.spec, &idx);
    let kept = s
        .elements
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(e, _)| e.clone())
        .collect();
    Multiset { spec: s.spec, elements: kept }
}

/// `{x : x + X = X}` as a subspace.
pub fn stabilizer(x: &SumsetImage) -> Result<Subspace> {
    if !x.contains_idx(0) {
        return Err(Error::MissingIdentity);
    }
    // 0 ∈ X forces every stabilizing x into X.
    let members: Vec<usize> = x.bits.ones().filter(|&c| x.is_invariant_under(c)).collect();
    let sub = Subspace::span(x.spec, members.iter().copied());
    if sub.size() != members.len() {
        return Err(Error::NotSubgroup);
    }
    Ok(sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{rank, LinearMap};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn ms(spec: GroupSpec, coords: &[&[u32]]) -> Multiset {
        let v: Vec<Vec<u32>> = coords.iter().map(|c| c.to_vec()).collect();
        Multiset::from_coords(spec, &v).unwrap()
    }

    /// Subset sums by enumerating all 2^n subsets.
    fn brute_sumset(s: &Multiset) -> BTreeSet<usize> {
        let idx = s.indices();
        let g = s.spec();
        (0u32..1 << idx.len())
            .map(|mask| {
                idx.iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .fold(0, |acc, (_, &e)| g.add_idx(acc, e))
            })
            .collect()
    }

    fn random_multiset(rng: &mut ChaCha8Rng, g: GroupSpec, max_len: usize) -> Multiset {
        let n = rng.gen_range(0..=max_len);
        Multiset::from_indices(g, (0..n).map(|_| rng.gen_range(0..g.order())))
    }

    #[test]
    fn empty_sumset_is_identity_only() {
        let g = GroupSpec::new(5, 1).unwrap();
        let img = sumset(&Multiset::empty(g));
        assert_eq!(img.indices(), vec![0]);
        assert_eq!(img.size(), 1);
    }

    #[test]
    fn small_sumsets() {
        let z3 = GroupSpec::new(3, 1).unwrap();
        assert_eq!(sumset(&ms(z3, &[&[1], &[1]])).indices(), vec![0, 1, 2]);
        let z22 = GroupSpec::new(2, 2).unwrap();
        assert_eq!(sumset(&ms(z22, &[&[1, 0], &[0, 1]])).indices(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn sumset_matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (p, k) in [(2, 3), (3, 2), (5, 2), (7, 1)] {
            let g = GroupSpec::new(p, k).unwrap();
            for _ in 0..30 {
                let s = random_multiset(&mut rng, g, 9);
                let expect: Vec<usize> = brute_sumset(&s).into_iter().collect();
                assert_eq!(sumset(&s).indices(), expect);
            }
        }
    }

    #[test]
    fn incremental_union_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..1000 {
            let g = GroupSpec::new([2, 3, 5][trial % 3], 2).unwrap();
            let s = random_multiset(&mut rng, g, 6);
            let add = rng.gen_range(0..g.order());
            let before = sumset(&s);
            let mut bigger = s.clone();
            bigger.push(g.element_at(add));
            let after = sumset(&bigger);
            let expect: BTreeSet<usize> = before
                .indices()
                .into_iter()
                .flat_map(|x| [x, g.add_idx(x, add)])
                .collect();
            assert_eq!(after.indices(), expect.into_iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn witness_for_zero_is_empty() {
        let z3 = GroupSpec::new(3, 1).unwrap();
        let s = ms(z3, &[&[1], &[2]]);
        assert_eq!(subset_sum_witness(&s, &z3.zero()), Some(Multiset::empty(z3)));
    }

    #[test]
    fn witnesses_resum_to_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..200 {
            let g = GroupSpec::new([2, 3, 5][trial % 3], 2).unwrap();
            let s = random_multiset(&mut rng, g, 5);
            let t = g.element_at(rng.gen_range(0..g.order()));
            let img = sumset(&s);
            match subset_sum_witness(&s, &t) {
                Some(w) => {
                    assert!(w.is_submultiset_of(&s));
                    assert_eq!(w.sum(), t);
                }
                None => assert!(!img.contains(&t)),
            }
        }
    }

    #[test]
    fn reducedness_examples() {
        let z3 = GroupSpec::new(3, 1).unwrap();
        assert!(!is_reduced(&ms(z3, &[&[1], &[1], &[1]])));
        assert!(is_reduced(&ms(z3, &[&[1], &[1]])));
        assert!(!is_reduced(&ms(z3, &[&[0], &[1]])));
        let z2 = GroupSpec::new(2, 4).unwrap();
        let indep = Multiset::new(z2, (0..4).map(|i| z2.basis(i)).collect());
        assert!(is_reduced(&indep));
        assert!(is_reduced(&Multiset::empty(z2)));
    }

    #[test]
    fn reduced_over_z2_iff_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = GroupSpec::new(2, 4).unwrap();
        for _ in 0..300 {
            let s = random_multiset(&mut rng, g, 5);
            assert_eq!(is_reduced(&s), rank(&s) == s.len());
        }
    }

    #[test]
    fn reduce_examples() {
        let g = GroupSpec::new(2, 2).unwrap();
        let s = ms(g, &[&[0, 0], &[1, 0]]);
        assert_eq!(reduce(&s), ms(g, &[&[1, 0]]));
        let r = ms(g, &[&[1, 0], &[0, 1]]);
        assert_eq!(reduce(&r), r);
    }

    #[test]
    fn reduce_is_reduced_and_preserves_sumset() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..500 {
            let g = GroupSpec::new([2, 3, 5, 7][trial % 4], [3, 2, 2, 1][trial % 4]).unwrap();
            let s = random_multiset(&mut rng, g, 10);
            let r = reduce(&s);
            assert!(is_reduced(&r));
            assert!(r.is_submultiset_of(&s));
            assert_eq!(sumset(&r), sumset(&s));
        }
    }

    #[test]
    fn subsets_of_reduced_are_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut checked = 0;
        while checked < 200 {
            let g = GroupSpec::new(3, 2).unwrap();
            let s = reduce(&random_multiset(&mut rng, g, 8));
            let mask: u32 = rng.gen_range(0..1 << s.len());
            let t = Multiset::new(
                g,
                s.elements()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, e)| e.clone())
                    .collect(),
            );
            assert!(is_reduced(&t));
            assert!(sumset(&t).size() <= sumset(&s).size());
            checked += 1;
        }
    }

    #[test]
    fn stabilizer_examples() {
        let g = GroupSpec::new(2, 2).unwrap();
        let whole = SumsetImage::from_indices(g, 0..4);
        assert_eq!(stabilizer(&whole).unwrap(), Subspace::whole(g));
        let zero = SumsetImage::from_indices(g, [0]);
        assert_eq!(stabilizer(&zero).unwrap(), Subspace::zero(g));
        let line = sumset(&ms(g, &[&[1, 0]]));
        assert_eq!(stabilizer(&line).unwrap(), Subspace::span(g, [g.basis(0).index()]));
        assert_eq!(
            stabilizer(&SumsetImage::from_indices(g, [1])),
            Err(Error::MissingIdentity)
        );
    }

    #[test]
    fn stabilizer_is_a_subgroup_fixing_the_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..200 {
            let g = GroupSpec::new([2, 3, 5][trial % 3], [4, 2, 2][trial % 3]).unwrap();
            let img = sumset(&random_multiset(&mut rng, g, 8));
            let b = stabilizer(&img).unwrap();
            let members = b.element_indices();
            for &x in &members {
                assert!(img.contains_idx(x));
                for &y in &members {
                    assert!(b.contains_idx(g.add_idx(x, y)));
                }
                for l in 0..g.p() {
                    assert!(b.contains_idx(g.scale_idx(l, x)));
                }
            }
            for e in b.basis() {
                assert!(img.is_invariant_under(e.index()));
            }
        }
    }

    #[test]
    fn json_shape() {
        let g = GroupSpec::new(3, 2).unwrap();
        let s: Multiset =
            serde_json::from_str(r#"{"p":3,"k":2,"elements":[[1,0],[1,0],[0,2]]}"#).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.spec(), &g);
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(back, r#"{"p":3,"k":2,"elements":[[1,0],[1,0],[0,2]]}"#);
        assert!(serde_json::from_str::<Multiset>(r#"{"p":4,"k":1,"elements":[]}"#).is_err());
        assert!(serde_json::from_str::<Multiset>(r#"{"p":3,"k":1,"elements":[[3]]}"#).is_err());
    }

    fn invertible_matrix(rng: &mut ChaCha8Rng, g: GroupSpec) -> LinearMap {
        loop {
            let m: Vec<Vec<u32>> = (0..g.dim())
                .map(|_| (0..g.dim()).map(|_| rng.gen_range(0..g.p())).collect())
                .collect();
            let f = LinearMap::new(g, m).unwrap();
            if f.is_injective() {
                return f;
            }
        }
    }

    proptest! {
        #[test]
        fn injective_maps_commute_with_sumsets(seed in any::<u64>(), which in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = GroupSpec::new([2, 3, 5][which], [3, 2, 2][which]).unwrap();
            let s = random_multiset(&mut rng, g, 7);
            let f = invertible_matrix(&mut rng, g);
            let fs = s.map(g, |e| f.apply(e));
            let mapped: BTreeSet<usize> = sumset(&s).indices().into_iter().map(|x| f.apply_idx(x)).collect();
            prop_assert_eq!(sumset(&fs).indices(), mapped.into_iter().collect::<Vec<_>>());
            prop_assert_eq!(is_reduced(&fs), is_reduced(&s));
        }

        #[test]
        fn rank_is_monotone_and_ignores_repetition(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = GroupSpec::new(3, 3).unwrap();
            let s = random_multiset(&mut rng, g, 8);
            let extra = random_multiset(&mut rng, g, 3);
            prop_assert!(rank(&s) <= rank(&s.union(&extra)));
            prop_assert_eq!(rank(&s.union(&s)), rank(&s));
        }
    }
}
