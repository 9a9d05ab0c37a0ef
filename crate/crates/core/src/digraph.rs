//! Complete digraphs with `Z_p^k` edge weights: simple-cycle enumeration, the
//! brute-force zero-sum cycle oracle, the extremal construction, and exhaustive
//! determination of `f(Z_p^k)` on tiny vertex counts.

use std::collections::HashMap;
use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};

/// Largest vertex count the brute-force cycle oracle accepts by default.
pub const DEFAULT_MAX_VERTICES: usize = 9;

/// A complete digraph on `n >= 2` vertices with one weight per ordered pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightedDigraph {
    spec: GroupSpec,
    n: usize,
    // Row-major n x n table of element indices; the diagonal is unused.
    weights: Vec<usize>,
}

impl WeightedDigraph {
    pub fn zero(spec: GroupSpec, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!("a digraph needs n >= 2, got {n}")));
        }
        Ok(WeightedDigraph { spec, n, weights: vec![0; n * n] })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> usize>(spec: GroupSpec, n: usize, mut f: F) -> Result<Self> {
        let mut g = Self::zero(spec, n)?;
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    let w = f(u, v);
                    assert!(w < spec.order());
                    g.weights[u * n + v] = w;
                }
            }
        }
        Ok(g)
    }

    pub fn random(spec: GroupSpec, n: usize, rng: &mut impl Rng) -> Result<Self> {
        Self::from_fn(spec, n, |_, _| rng.gen_range(0..spec.order()))
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight_idx(&self, u: usize, v: usize) -> usize {
        debug_assert!(u != v);
        self.weights[u * self.n + v]
    }

    pub fn weight(&self, u: usize, v: usize) -> GroupElement {
        self.spec.element_at(self.weight_idx(u, v))
    }

    pub fn set_weight_idx(&mut self, u: usize, v: usize, w: usize) {
        assert!(u != v && w < self.spec.order());
        self.weights[u * self.n + v] = w;
    }

    /// Sum of the edge weights along a closed walk through `vertices` in order.
    pub fn cycle_weight_idx(&self, vertices: &[usize]) -> usize {
        let len = vertices.len();
        (0..len).fold(0, |acc, i| {
            self.spec.add_idx(acc, self.weight_idx(vertices[i], vertices[(i + 1) % len]))
        })
    }

    /// Sum of the edge weights along a path.
    pub fn path_weight_idx(&self, vertices: &[usize]) -> usize {
        vertices
            .windows(2)
            .fold(0, |acc, e| self.spec.add_idx(acc, self.weight_idx(e[0], e[1])))
    }

    /// The sub-digraph induced on `vertices`, relabelled `0..len` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Result<Self> {
        Self::from_fn(self.spec, vertices.len(), |a, b| self.weight_idx(vertices[a], vertices[b]))
    }
}

#[derive(Serialize, Deserialize)]
struct DigraphJson {
    p: u32,
    k: u32,
    n: usize,
    weights: Vec<Vec<Option<Vec<u32>>>>,
}

impl Serialize for WeightedDigraph {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let weights = (0..self.n)
            .map(|u| {
                (0..self.n)
                    .map(|v| (u != v).then(|| self.spec.coords_of(self.weight_idx(u, v))))
                    .collect()
            })
            .collect();
        DigraphJson { p: self.spec.p(), k: self.spec.k(), n: self.n, weights }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightedDigraph {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = DigraphJson::deserialize(d)?;
        let spec = GroupSpec::new(raw.p, raw.k).map_err(D::Error::custom)?;
        let mut g = WeightedDigraph::zero(spec, raw.n).map_err(D::Error::custom)?;
        if raw.weights.len() != raw.n {
            return Err(D::Error::custom("weights must have n rows"));
        }
        for (u, row) in raw.weights.iter().enumerate() {
            if row.len() != raw.n {
                return Err(D::Error::custom(format!("row {u} must have n entries")));
            }
            for (v, cell) in row.iter().enumerate() {
                match (u == v, cell) {
                    (true, None) => {}
                    (true, Some(_)) => {
                        return Err(D::Error::custom(format!("diagonal entry ({u},{u}) must be null")))
                    }
                    (false, None) => return Err(D::Error::custom(format!("edge ({u},{v}) has no weight"))),
                    (false, Some(c)) => {
                        let e = spec.element(c).map_err(D::Error::custom)?;
                        g.weights[u * raw.n + v] = e.index();
                    }
                }
            }
        }
        Ok(g)
    }
}

/// A claimed zero-sum cycle `v_1 -> ... -> v_l -> v_1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleCertificate {
    pub vertices: Vec<usize>,
    pub claimed_sum: GroupElement,
}

/// Wire form of a [`CycleCertificate`]; the group comes from the accompanying weighting.
#[derive(Clone, Debug, Deserialize)]
pub struct CycleCertificateJson {
    pub vertices: Vec<usize>,
    pub claimed_sum: Vec<u32>,
}

impl CycleCertificateJson {
    pub fn into_certificate(self, spec: &GroupSpec) -> Result<CycleCertificate> {
        Ok(CycleCertificate { vertices: self.vertices, claimed_sum: spec.element(&self.claimed_sum)? })
    }
}

impl CycleCertificate {
    pub fn from_cycle(g: &WeightedDigraph, vertices: Vec<usize>) -> Self {
        let claimed_sum = g.spec.element_at(g.cycle_weight_idx(&vertices));
        CycleCertificate { vertices, claimed_sum }
    }
}

/// Replays a certificate. Malformed cycles are errors; a well-formed cycle whose
/// recomputed sum is nonzero (or differs from the claim) is `false`.
pub fn verify_cycle(g: &WeightedDigraph, cert: &CycleCertificate) -> Result<bool> {
    let vs = &cert.vertices;
    if vs.len() < 2 {
        return Err(Error::MalformedCertificate(format!("cycle of length {}", vs.len())));
    }
    if let Some(&bad) = vs.iter().find(|&&v| v >= g.n) {
        return Err(Error::MalformedCertificate(format!("vertex {bad} out of range")));
    }
    let mut seen = vec![false; g.n];
    for &v in vs {
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::MalformedCertificate(format!("vertex {v} repeated")));
        }
    }
    if cert.claimed_sum.coords().len() != g.spec.dim() {
        return Err(Error::MalformedCertificate("claimed sum has wrong dimension".into()));
    }
    let sum = g.cycle_weight_idx(vs);
    Ok(sum == 0 && cert.claimed_sum.index() == sum)
}

/// Visits every simple directed cycle (length >= 2) once, rotated so its
/// smallest vertex comes first. Within a start vertex, paths are extended in
/// increasing vertex order and each path is closed before it is extended.
pub fn for_each_simple_cycle<F>(n: usize, mut visit: F) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    fn extend<F: FnMut(&[usize]) -> ControlFlow<()>>(
        n: usize,
        path: &mut Vec<usize>,
        used: &mut [bool],
        visit: &mut F,
    ) -> ControlFlow<()> {
        let start = path[0];
        for next in start + 1..n {
            if used[next] {
                continue;
            }
            path.push(next);
            used[next] = true;
            visit(path)?;
            extend(n, path, used, visit)?;
            used[next] = false;
            path.pop();
        }
        ControlFlow::Continue(())
    }
    let mut used = vec![false; n];
    for start in 0..n {
        let mut path = vec![start];
        used[start] = true;
        extend(n, &mut path, &mut used, &mut visit)?;
        used[start] = false;
    }
    ControlFlow::Continue(())
}

/// Like [`for_each_simple_cycle`] but tracks the open-path weight so each
/// closing check is O(1).
fn search_zero_cycle(g: &WeightedDigraph, count_all: bool) -> (Option<Vec<usize>>, u64) {
    fn extend(
        g: &WeightedDigraph,
        path: &mut Vec<usize>,
        used: &mut [bool],
        partial: usize,
        count_all: bool,
        found: &mut Option<Vec<usize>>,
        count: &mut u64,
    ) -> bool {
        let start = path[0];
        let last = *path.last().unwrap();
        for next in start + 1..g.n {
            if used[next] {
                continue;
            }
            let s = g.spec.add_idx(partial, g.weight_idx(last, next));
            path.push(next);
            used[next] = true;
            if g.spec.add_idx(s, g.weight_idx(next, start)) == 0 {
                *count += 1;
                if found.is_none() {
                    *found = Some(path.clone());
                }
                if !count_all {
                    return true;
                }
            }
            if extend(g, path, used, s, count_all, found, count) {
                return true;
            }
            used[next] = false;
            path.pop();
        }
        false
    }
    let mut used = vec![false; g.n];
    let mut found = None;
    let mut count = 0;
    for start in 0..g.n {
        let mut path = vec![start];
        used[start] = true;
        if extend(g, &mut path, &mut used, 0, count_all, &mut found, &mut count) {
            break;
        }
        used[start] = false;
    }
    (found, count)
}

/// First zero-sum simple cycle in canonical enumeration order, by plain enumeration.
pub fn find_zero_sum_cycle_bruteforce(g: &WeightedDigraph) -> Result<Option<CycleCertificate>> {
    find_zero_sum_cycle_bounded(g, DEFAULT_MAX_VERTICES)
}

pub fn find_zero_sum_cycle_bounded(
    g: &WeightedDigraph,
    max_vertices: usize,
) -> Result<Option<CycleCertificate>> {
    if g.n > max_vertices {
        return Err(Error::BudgetExceeded { needed: g.n as u128, budget: max_vertices as u128 });
    }
    Ok(search_zero_cycle(g, false).0.map(|vs| CycleCertificate::from_cycle(g, vs)))
}

/// Number of zero-sum simple cycles.
pub fn count_zero_sum_cycles(g: &WeightedDigraph) -> u64 {
    search_zero_cycle(g, true).1
}

/// `(p-1)k` vertices in consecutive blocks `V_1..V_k` of size `p-1`; every
/// edge leaving a vertex of `V_i` is weighted `e_i`.
pub fn lower_bound_construction(p: u32, k: u32) -> Result<WeightedDigraph> {
    let spec = GroupSpec::new(p, k)?;
    let block = p as usize - 1;
    let n = block * k as usize;
    if n < 2 {
        return Err(Error::Precondition(format!("(p-1)k = {n} < 2")));
    }
    WeightedDigraph::from_fn(spec, n, |x, _| spec.basis(x / block).index())
}

/// Known bounds on `f(Z_p^k)` evaluated numerically; logarithms are base 2.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub p: u32,
    pub k: u32,
    /// `(p-1)k`, attained by [`lower_bound_construction`].
    pub lower: u64,
    /// `600 p k (log 10k)^2`.
    pub upper_general: f64,
    /// `600 k log 2k`, only for `p = 2`.
    pub upper_binary: Option<f64>,
    /// The better of the two upper bounds.
    pub upper: f64,
    /// Upper bound on `h_p(10k)` used in the next field.
    pub h_bound_10k: usize,
    /// `60 log(2k) h_p(10k)`, with `h_p` replaced by its bound.
    pub recursion_relation: f64,
}

pub fn bounds_row(p: u32, k: u32) -> Result<BoundsRow> {
    GroupSpec::with_capacity(p, 1, usize::MAX)?;
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    let (pf, kf) = (p as f64, k as f64);
    let upper_general = 600.0 * pf * kf * (10.0 * kf).log2().powi(2);
    let upper_binary = (p == 2).then(|| 600.0 * kf * (2.0 * kf).log2());
    let h_bound_10k = crate::reduced::h_bound(p, 10 * k);
    Ok(BoundsRow {
        p,
        k,
        lower: (p as u64 - 1) * k as u64,
        upper_general,
        upper_binary,
        upper: upper_binary.map_or(upper_general, |b| b.min(upper_general)),
        h_bound_10k,
        recursion_relation: 60.0 * (2.0 * kf).log2() * h_bound_10k as f64,
    })
}

/// Outcome of an exhaustive sweep over normalized weightings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FVerdict {
    AllHaveCycle { weightings: u64 },
    Counterexample { counter: u64, weighting: WeightedDigraph },
    BudgetExceeded { needed: String, budget: u64 },
}

/// Progress record for resumable sweeps: `range_done` is a half-open counter range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub p: u32,
    pub k: u32,
    pub n: usize,
    pub range_done: [u64; 2],
    pub verdict_so_far: String,
}

#[derive(Clone, Debug)]
pub struct FSearchOptions {
    pub budget: u64,
    /// Counter value to resume from; everything below it is assumed cycle-rich.
    pub resume_from: u64,
    /// Weightings per checkpoint block.
    pub block: u64,
}

impl Default for FSearchOptions {
    fn default() -> Self {
        FSearchOptions { budget: 50_000_000, resume_from: 0, block: 1 << 16 }
    }
}

/// The free edges of a weighting normalized at vertex 0: every `(u, v)` with
/// `u != 0`, in lexicographic order.
fn free_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect()
}

/// Decodes a mixed-radix counter (first free edge most significant) into a
/// weighting whose out-edges at vertex 0 are all zero.
pub fn normalized_weighting(spec: GroupSpec, n: usize, counter: u64) -> Result<WeightedDigraph> {
    let mut g = WeightedDigraph::zero(spec, n)?;
    let order = spec.order() as u64;
    let mut c = counter;
    for &(u, v) in free_edges(n).iter().rev() {
        g.set_weight_idx(u, v, (c % order) as usize);
        c /= order;
    }
    Ok(g)
}

/// Whether every `Z_p^k`-weighting of the complete digraph on `n` vertices has
/// a zero-sum cycle. Out-edges of vertex 0 are fixed to 0: reweighting a vertex
/// preserves every cycle weight, so this loses no generality.
pub fn f_exhaustive(p: u32, k: u32, n: usize, budget: u64) -> Result<FVerdict> {
    f_exhaustive_with(p, k, n, &FSearchOptions { budget, ..Default::default() }, |_| {})
}

pub fn f_exhaustive_with<F: FnMut(&Checkpoint)>(
    p: u32,
    k: u32,
    n: usize,
    opts: &FSearchOptions,
    mut progress: F,
) -> Result<FVerdict> {
    let spec = GroupSpec::new(p, k)?;
    if n < 2 {
        return Err(Error::Precondition(format!("n = {n} < 2")));
    }
    let edges = free_edges(n).len() as u32;
    let total = (spec.order() as u128).checked_pow(edges);
    let total = match total {
        Some(t) if t <= opts.budget as u128 => t as u64,
        other => {
            return Ok(FVerdict::BudgetExceeded {
                needed: other.map_or_else(|| format!("{}^{}", spec.order(), edges), |t| t.to_string()),
                budget: opts.budget,
            })
        }
    };
    let block = opts.block.max(1);
    let mut lo = opts.resume_from.min(total);
    while lo < total {
        let hi = (lo + block).min(total);
        let hit = (lo..hi).into_par_iter().find_first(|&c| {
            let g = normalized_weighting(spec, n, c).expect("n >= 2");
            search_zero_cycle(&g, false).0.is_none()
        });
        if let Some(counter) = hit {
            progress(&Checkpoint {
                p,
                k,
                n,
                range_done: [0, counter],
                verdict_so_far: "COUNTEREXAMPLE".into(),
            });
            return Ok(FVerdict::Counterexample {
                counter,
                weighting: normalized_weighting(spec, n, counter)?,
            });
        }
        progress(&Checkpoint { p, k, n, range_done: [0, hi], verdict_so_far: "ALL_HAVE_CYCLE".into() });
        lo = hi;
    }
    Ok(FVerdict::AllHaveCycle { weightings: total })
}

/// Zero-sum cycles through edge `uv`, split by the two candidate weights of `uv`.
fn zero_cycles_through(g: &WeightedDigraph, u: usize, v: usize, weights: [usize; 2]) -> [u64; 2] {
    // Histogram of weights of simple paths v -> ... -> u.
    fn walk(
        g: &WeightedDigraph,
        at: usize,
        goal: usize,
        used: &mut [bool],
        sum: usize,
        hist: &mut HashMap<usize, u64>,
    ) {
        for next in 0..g.n {
            if used[next] {
                continue;
            }
            let s = g.spec.add_idx(sum, g.weight_idx(at, next));
            if next == goal {
                *hist.entry(s).or_default() += 1;
                continue;
            }
            used[next] = true;
            walk(g, next, goal, used, s, hist);
            used[next] = false;
        }
    }
    let mut used = vec![false; g.n];
    used[v] = true;
    let mut hist = HashMap::new();
    walk(g, v, u, &mut used, 0, &mut hist);
    weights.map(|w| hist.get(&g.spec.neg_idx(w)).copied().unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtremalResult {
    pub weighting: Option<WeightedDigraph>,
    pub final_count: u64,
    pub iterations: u64,
    /// Zero-sum cycle count after every accepted move.
    pub trajectory: Vec<u64>,
}

/// Randomized hill climbing on single-edge reweightings, minimizing the number
/// of zero-sum cycles; sideways moves are accepted. Fully determined by `seed`.
pub fn extremal_local_search(p: u32, k: u32, n: usize, seed: u64, iters: u64) -> Result<ExtremalResult> {
    let spec = GroupSpec::new(p, k)?;
    if n > 12 {
        return Err(Error::BudgetExceeded { needed: n as u128, budget: 12 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = WeightedDigraph::random(spec, n, &mut rng)?;
    let mut count = count_zero_sum_cycles(&g);
    let mut trajectory = vec![count];
    let mut iterations = 0;
    while count > 0 && iterations < iters && spec.order() > 1 {
        iterations += 1;
        let u = rng.gen_range(0..n);
        let v = (u + rng.gen_range(1..n)) % n;
        let old = g.weight_idx(u, v);
        let new = (old + rng.gen_range(1..spec.order())) % spec.order();
        let [before, after] = zero_cycles_through(&g, u, v, [old, new]);
        if after <= before {
            g.set_weight_idx(u, v, new);
            count = count - before + after;
            trajectory.push(count);
        }
    }
    debug_assert_eq!(count, count_zero_sum_cycles(&g));
    Ok(ExtremalResult {
        weighting: (count == 0).then_some(g),
        final_count: count,
        iterations,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(p: u32, k: u32) -> GroupSpec {
        GroupSpec::new(p, k).unwrap()
    }

    /// Cycle count in the complete digraph: sum over lengths l of C(n,l)(l-1)!.
    fn cycle_count_formula(n: usize) -> u64 {
        let mut total = 0u64;
        for l in 2..=n {
            let mut choose = 1u64;
            for i in 0..l {
                choose = choose * (n - i) as u64 / (i + 1) as u64;
            }
            let fact: u64 = (1..l as u64).product();
            total += choose * fact;
        }
        total
    }

    #[test]
    fn enumerates_every_cycle_once() {
        for n in 2..=6 {
            let mut seen = std::collections::BTreeSet::new();
            let _ = for_each_simple_cycle(n, |c| {
                assert!(seen.insert(c.to_vec()));
                ControlFlow::Continue(())
            });
            assert_eq!(seen.len() as u64, cycle_count_formula(n));
        }
        assert_eq!(cycle_count_formula(4), 20);
    }

    #[test]
    fn two_vertices_nonzero_cycle() {
        let g = WeightedDigraph::from_fn(z(2, 1), 2, |u, _| if u == 0 { 1 } else { 0 }).unwrap();
        assert_eq!(find_zero_sum_cycle_bruteforce(&g).unwrap(), None);
    }

    #[test]
    fn zero_weighting_gives_first_two_cycle() {
        let g = WeightedDigraph::zero(z(2, 1), 3).unwrap();
        let c = find_zero_sum_cycle_bruteforce(&g).unwrap().unwrap();
        assert_eq!(c.vertices, vec![0, 1]);
        assert!(verify_cycle(&g, &c).unwrap());
    }

    #[test]
    fn verify_rejects_malformed_and_nonzero() {
        let g = WeightedDigraph::from_fn(z(3, 1), 3, |_, _| 1).unwrap();
        let rep = CycleCertificate { vertices: vec![0, 1, 0], claimed_sum: g.spec().zero() };
        assert!(matches!(verify_cycle(&g, &rep), Err(Error::MalformedCertificate(_))));
        let out = CycleCertificate { vertices: vec![0, 5], claimed_sum: g.spec().zero() };
        assert!(verify_cycle(&g, &out).is_err());
        let short = CycleCertificate { vertices: vec![0], claimed_sum: g.spec().zero() };
        assert!(verify_cycle(&g, &short).is_err());
        let nonzero = CycleCertificate::from_cycle(&g, vec![0, 1]);
        assert!(!verify_cycle(&g, &nonzero).unwrap());
        let triangle = CycleCertificate::from_cycle(&g, vec![0, 1, 2]);
        assert!(verify_cycle(&g, &triangle).unwrap());
        let lying = CycleCertificate { claimed_sum: g.spec().element_at(1), ..triangle };
        assert!(!verify_cycle(&g, &lying).unwrap());
    }

    #[test]
    fn oracle_size_limit() {
        let g = WeightedDigraph::zero(z(2, 1), 10).unwrap();
        assert!(matches!(find_zero_sum_cycle_bruteforce(&g), Err(Error::BudgetExceeded { .. })));
        assert!(find_zero_sum_cycle_bounded(&g, 10).unwrap().is_some());
    }

    #[test]
    fn constructions_are_zero_sum_free() {
        for (p, k, n) in [(2, 2, 2), (3, 2, 4), (2, 3, 3), (3, 3, 6), (5, 2, 8)] {
            let g = lower_bound_construction(p, k).unwrap();
            assert_eq!(g.n(), n);
            assert_eq!(find_zero_sum_cycle_bounded(&g, 12).unwrap(), None);
            assert_eq!(count_zero_sum_cycles(&g), 0);
        }
        let g = lower_bound_construction(2, 2).unwrap();
        assert_eq!(g.weight(0, 1), g.spec().basis(0));
        assert_eq!(g.weight(1, 0), g.spec().basis(1));
        assert!(lower_bound_construction(2, 1).is_err());
    }

    #[test]
    fn bounds_at_p2_k8() {
        let r = bounds_row(2, 8).unwrap();
        assert_eq!(r.lower, 8);
        assert!((r.upper - 600.0 * 8.0 * 4.0).abs() < 1e-9);
        assert_eq!(r.h_bound_10k, 80);
        assert!(bounds_row(4, 2).is_err());
        assert!(bounds_row(3, 2).unwrap().upper_binary.is_none());
    }

    #[test]
    fn normalized_counter_layout() {
        let spec = z(3, 1);
        let g = normalized_weighting(spec, 3, 1).unwrap();
        // Last free edge (2,1) is the least significant digit.
        assert_eq!(g.weight_idx(2, 1), 1);
        assert_eq!(g.weight_idx(0, 1), 0);
        assert_eq!(free_edges(4).len(), 9);
    }

    #[test]
    fn f_of_z2() {
        assert!(matches!(f_exhaustive(2, 1, 2, 1000).unwrap(), FVerdict::Counterexample { .. }));
        assert_eq!(f_exhaustive(2, 1, 3, 1000).unwrap(), FVerdict::AllHaveCycle { weightings: 16 });
        assert!(matches!(f_exhaustive(2, 1, 3, 10).unwrap(), FVerdict::BudgetExceeded { .. }));
    }

    #[test]
    fn checkpoints_advance_and_resume() {
        let mut marks = Vec::new();
        let opts = FSearchOptions { budget: 1 << 20, resume_from: 0, block: 5000 };
        let v = f_exhaustive_with(3, 1, 4, &opts, |c| marks.push(c.range_done[1])).unwrap();
        assert_eq!(v, FVerdict::AllHaveCycle { weightings: 19683 });
        assert_eq!(marks.last(), Some(&19683));
        assert!(marks.windows(2).all(|w| w[0] < w[1]));
        let resumed = FSearchOptions { resume_from: 15000, ..opts };
        assert_eq!(f_exhaustive_with(3, 1, 4, &resumed, |_| {}).unwrap(), v);
    }

    #[test]
    fn local_search_incremental_count_is_exact() {
        let r = extremal_local_search(3, 1, 5, 17, 200).unwrap();
        let replay = extremal_local_search(3, 1, 5, 17, 200).unwrap();
        assert_eq!(r, replay);
        if let Some(g) = &r.weighting {
            assert_eq!(count_zero_sum_cycles(g), 0);
        }
    }

    #[test]
    fn local_search_tiny_cases() {
        let r = extremal_local_search(2, 2, 2, 1, 100).unwrap();
        let g = r.weighting.expect("Z_2^2 on two vertices admits a zero-sum-free weighting");
        assert_ne!(g.spec().add_idx(g.weight_idx(0, 1), g.weight_idx(1, 0)), 0);
        for seed in 0..5 {
            assert!(extremal_local_search(2, 1, 3, seed, 200).unwrap().weighting.is_none());
        }
    }

    #[test]
    fn weighting_json_round_trip() {
        let g = lower_bound_construction(3, 2).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.starts_with(r#"{"p":3,"k":2,"n":4,"weights":[[null,[1,0]"#));
        let back: WeightedDigraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"p":2,"k":1,"n":2,"weights":[[[0],[1]],[[1],null]]}"#;
        assert!(serde_json::from_str::<WeightedDigraph>(bad).is_err());
    }
}
