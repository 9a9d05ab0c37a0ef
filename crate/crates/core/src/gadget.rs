//! Gadgets (pairs of parallel paths whose weight difference steers a cycle sum),
//! vertex reweighting, leveled gadget families with their stabilizers, and a
//! sound but incomplete zero-sum cycle solver built on them.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::digraph::{verify_cycle, CycleCertificate, WeightedDigraph};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec, Subspace};
use crate::reduced::h_bound;
use crate::sumset::{reduce_keep, stabilizer, subset_sum_witness, sumset, sumset_bits, Multiset, SumsetImage};

/// Two directed paths `P`, `Q` from `u` to `v`; the value is `w(Q) - w(P)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Gadget {
    pub u: usize,
    pub v: usize,
    pub p: Vec<usize>,
    pub q: Vec<usize>,
    pub value: GroupElement,
    pub vertex_count: usize,
}

fn check_path(g: &WeightedDigraph, path: &[usize]) -> Result<()> {
    if path.len() < 2 {
        return Err(Error::InvalidPath(format!("{path:?} has no edge")));
    }
    let mut seen = BTreeSet::new();
    for &x in path {
        if x >= g.n() {
            return Err(Error::InvalidPath(format!("vertex {x} out of range")));
        }
        if !seen.insert(x) {
            return Err(Error::InvalidPath(format!("{path:?} repeats vertex {x}")));
        }
    }
    Ok(())
}

impl Gadget {
    pub fn new(g: &WeightedDigraph, p: Vec<usize>, q: Vec<usize>) -> Result<Self> {
        check_path(g, &p)?;
        check_path(g, &q)?;
        let (u, v) = (p[0], *p.last().unwrap());
        if q[0] != u || *q.last().unwrap() != v {
            return Err(Error::InvalidPath("P and Q must share both endpoints".into()));
        }
        let value = g.spec().element_at(g.spec().sub_idx(g.path_weight_idx(&q), g.path_weight_idx(&p)));
        let vertex_count = p.iter().chain(&q).collect::<BTreeSet<_>>().len();
        Ok(Gadget { u, v, p, q, value, vertex_count })
    }

    /// The three-vertex gadget on `a -> b -> c` against the chord `a -> c`.
    pub fn triangle(g: &WeightedDigraph, a: usize, b: usize, c: usize) -> Result<Self> {
        Self::new(g, vec![a, c], vec![a, b, c])
    }

    pub fn vertices(&self) -> BTreeSet<usize> {
        self.p.iter().chain(&self.q).copied().collect()
    }
}

/// Recomputes `w(Q) - w(P)` under `g`.
pub fn gadget_value(g: &WeightedDigraph, gadget: &Gadget) -> Result<GroupElement> {
    Gadget::new(g, gadget.p.clone(), gadget.q.clone()).map(|x| x.value)
}

/// Reweights so every edge leaving `v0` has weight 0 while every cycle weight
/// and every gadget value is unchanged.
pub fn zero_out_vertex(g: &WeightedDigraph, v0: usize) -> Result<WeightedDigraph> {
    if v0 >= g.n() {
        return Err(Error::Precondition(format!("vertex {v0} out of range")));
    }
    let spec = *g.spec();
    WeightedDigraph::from_fn(spec, g.n(), |x, y| {
        if x == v0 {
            0
        } else if y == v0 {
            spec.add_idx(g.weight_idx(x, v0), g.weight_idx(v0, x))
        } else {
            spec.sub_idx(spec.add_idx(g.weight_idx(x, y), g.weight_idx(v0, x)), g.weight_idx(v0, y))
        }
    })
}

/// Strings disjoint gadgets into one cycle `R_1 v_1 u_2 R_2 ... v_m u_1`,
/// choosing `R_i = Q_i` exactly on a subset whose values cancel the rest.
pub fn cycle_from_gadgets(g: &WeightedDigraph, gadgets: &[Gadget]) -> Result<CycleCertificate> {
    if gadgets.is_empty() {
        return Err(Error::Precondition("no gadgets".into()));
    }
    let spec = *g.spec();
    let mut used = BTreeSet::new();
    let mut values = Vec::with_capacity(gadgets.len());
    for gd in gadgets {
        values.push(gadget_value(g, gd)?.index());
        for x in gd.vertices() {
            if !used.insert(x) {
                return Err(Error::Precondition(format!("gadgets share vertex {x}")));
            }
        }
    }
    let m = gadgets.len();
    let base = (0..m).fold(0, |acc, i| {
        let connector = g.weight_idx(gadgets[i].v, gadgets[(i + 1) % m].u);
        spec.add_idx(acc, spec.add_idx(g.path_weight_idx(&gadgets[i].p), connector))
    });
    let target = spec.element_at(spec.neg_idx(base));
    let witness = subset_sum_witness(&Multiset::from_indices(spec, values.iter().copied()), &target)
        .ok_or(Error::InsufficientRichness)?;
    let mut take_q = vec![false; m];
    for e in witness.elements() {
        let i = (0..m).find(|&i| !take_q[i] && values[i] == e.index()).expect("witness is a submultiset");
        take_q[i] = true;
    }
    let mut vertices = Vec::new();
    for (gd, &q) in gadgets.iter().zip(&take_q) {
        vertices.extend_from_slice(if q { &gd.q } else { &gd.p });
    }
    let cert = CycleCertificate::from_cycle(g, vertices);
    debug_assert!(cert.claimed_sum.is_zero());
    Ok(cert)
}

/// One level of a useful family: disjoint triangle gadgets whose value
/// multiset is reduced and saturated against the stabilizer of its sumset.
#[derive(Clone, Debug, Serialize)]
pub struct GadgetLevel {
    pub gadgets: Vec<Gadget>,
    pub values: Multiset,
    pub sumset: SumsetImage,
    pub stabilizer: Subspace,
    pub dim: usize,
    pub vertices: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GadgetFamilyLevels {
    pub v0: usize,
    pub levels: Vec<GadgetLevel>,
    /// Fewer levels than requested because the free pool ran dry.
    pub truncated: bool,
    /// Vertices in no level, `v0` included.
    pub free: Vec<usize>,
}

impl GadgetFamilyLevels {
    pub fn dims(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.dim).collect()
    }
}

/// Greedily saturates one level from the free pool. `None` means the level
/// would have consumed the last free vertex.
fn build_level(g: &WeightedDigraph, free: &mut BTreeSet<usize>) -> Result<Option<GadgetLevel>> {
    let spec = *g.spec();
    let mut gadgets: Vec<Gadget> = Vec::new();
    let mut pool = free.clone();
    loop {
        let mut stab = stabilizer(&sumset(&values_of(spec, &gadgets)))?;
        loop {
            let mut adopted = false;
            let snapshot: Vec<usize> = pool.iter().copied().collect();
            for &a in &snapshot {
                for &b in &snapshot {
                    for &c in &snapshot {
                        if a == b || b == c || a == c || ![a, b, c].iter().all(|x| pool.contains(x)) {
                            continue;
                        }
                        let value = spec.sub_idx(spec.add_idx(g.weight_idx(a, b), g.weight_idx(b, c)), g.weight_idx(a, c));
                        if stab.contains_idx(value) {
                            continue;
                        }
                        let gd = Gadget::triangle(g, a, b, c)?;
                        if pool.len() == 3 {
                            return Ok(None);
                        }
                        for x in [a, b, c] {
                            pool.remove(&x);
                        }
                        gadgets.push(gd);
                        stab = stabilizer(&sumset(&values_of(spec, &gadgets)))?;
                        adopted = true;
                    }
                }
            }
            if !adopted {
                break;
            }
        }
        let values: Vec<usize> = gadgets.iter().map(|gd| gd.value.index()).collect();
        let keep = reduce_keep(&spec, &values);
        if keep.iter().all(|&k| k) {
            break;
        }
        let mut kept = Vec::new();
        for (gd, k) in gadgets.into_iter().zip(keep) {
            if k {
                kept.push(gd);
            } else {
                pool.extend(gd.vertices());
            }
        }
        gadgets = kept;
    }
    let values = values_of(spec, &gadgets);
    let sumset_img = sumset(&values);
    let stab = stabilizer(&sumset_img)?;
    let vertices: Vec<usize> = gadgets.iter().flat_map(|gd| gd.vertices()).collect::<BTreeSet<_>>().into_iter().collect();
    *free = pool;
    Ok(Some(GadgetLevel {
        dim: stab.dim(),
        gadgets,
        values,
        sumset: sumset_img,
        stabilizer: stab,
        vertices,
    }))
}

fn values_of(spec: GroupSpec, gadgets: &[Gadget]) -> Multiset {
    Multiset::new(spec, gadgets.iter().map(|gd| gd.value.clone()).collect())
}

/// Up to `t` levels of pairwise vertex-disjoint triangle gadgets.
///
/// Level `i` adopts, in lexicographic order of `(a, b, c)` over still-free
/// vertices, every triangle whose value lies outside the stabilizer of the
/// current sumset, then reduces its value multiset (releasing the vertices of
/// dropped gadgets) and repeats until stable. Afterwards every free triangle
/// has value in `B_i`, so once `v0` is picked among the leftover vertices,
/// every edge between free vertices other than `v0` has reweighted value in `B_i`.
/// A level needs at least four free vertices and is discarded if it would take
/// the last one; `v0` is the least leftover vertex.
pub fn extract_useful_families(g: &WeightedDigraph, t: usize) -> Result<GadgetFamilyLevels> {
    if t == 0 {
        return Err(Error::Precondition("t must be at least 1".into()));
    }
    let mut free: BTreeSet<usize> = (0..g.n()).collect();
    let mut levels = Vec::new();
    let mut truncated = false;
    while levels.len() < t {
        if free.len() < 4 {
            truncated = true;
            break;
        }
        match build_level(g, &mut free)? {
            None => {
                truncated = true;
                break;
            }
            Some(level) => {
                let empty = level.gadgets.is_empty();
                levels.push(level);
                if empty {
                    // Every later level would be empty too.
                    break;
                }
            }
        }
    }
    let v0 = *free.iter().next().expect("a level never takes the last free vertex");
    Ok(GadgetFamilyLevels { v0, levels, truncated, free: free.into_iter().collect() })
}

/// Edges, per level `i`, between vertices outside `{v0} ∪ V_1 ∪ ... ∪ V_i`
/// whose weight after zeroing out `v0` falls outside `B_i`. Empty lists mean
/// the predicate holds.
pub fn level_predicate_violations(
    g: &WeightedDigraph,
    fam: &GadgetFamilyLevels,
) -> Result<Vec<Vec<(usize, usize)>>> {
    let norm = zero_out_vertex(g, fam.v0)?;
    let mut outside: BTreeSet<usize> = (0..g.n()).filter(|&x| x != fam.v0).collect();
    let mut out = Vec::new();
    for level in &fam.levels {
        for x in &level.vertices {
            outside.remove(x);
        }
        let mut bad = Vec::new();
        for &x in &outside {
            for &y in &outside {
                if x != y && !level.stabilizer.contains_idx(norm.weight_idx(x, y)) {
                    bad.push((x, y));
                }
            }
        }
        out.push(bad);
    }
    Ok(out)
}

/// Levels requested by the solver: `ceil(10 log2 k)`, at least 3.
pub fn default_level_count(k: u32) -> usize {
    ((10.0 * (k.max(1) as f64).log2()).ceil() as usize).max(3)
}

/// Tries to assemble a zero-sum cycle from extracted gadget levels: each level
/// alone, then all levels together, then 2-cycles among leftover vertices.
/// Every returned certificate has been replayed against `g`; `None` proves nothing.
pub fn solve_by_gadgets(g: &WeightedDigraph) -> Result<Option<CycleCertificate>> {
    let fam = extract_useful_families(g, default_level_count(g.spec().k()))?;
    let mut attempts: Vec<Vec<Gadget>> =
        fam.levels.iter().filter(|l| !l.gadgets.is_empty()).map(|l| l.gadgets.clone()).collect();
    if attempts.len() > 1 {
        attempts.push(fam.levels.iter().flat_map(|l| l.gadgets.clone()).collect());
    }
    for gadgets in &attempts {
        match cycle_from_gadgets(g, gadgets) {
            Ok(cert) if verify_cycle(g, &cert)? => return Ok(Some(cert)),
            Ok(_) => unreachable!("assembled cycles always sum to zero"),
            Err(Error::InsufficientRichness) => {}
            Err(e) => return Err(e),
        }
    }
    for (i, &a) in fam.free.iter().enumerate() {
        for &b in &fam.free[i + 1..] {
            let cert = CycleCertificate::from_cycle(g, vec![a, b]);
            if verify_cycle(g, &cert)? {
                return Ok(Some(cert));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionStepReport {
    pub k: usize,
    pub dims: Vec<usize>,
    /// Whether dims strictly decrease; the selection rule is only guaranteed to
    /// find `m` then, but the checks below are meaningful either way.
    pub hypotheses_hold: bool,
    pub m: usize,
    pub x_sizes: Vec<usize>,
    pub y_sizes: Vec<usize>,
    pub x_size_bound: usize,
    pub y_size_bound: usize,
    pub size_bounds_hold: bool,
    pub inclusions_hold: bool,
    pub inclusion_failures: Vec<usize>,
    pub z: Vec<usize>,
    /// `3 * sum_j (h(k - d_m) + h(k - d_{m-1})) + 1`.
    pub z_bound: usize,
    /// `6m * h(k - d_m)`; absent when `d_m = k`, where it degenerates to 0.
    pub z_bound_6m: Option<usize>,
    pub z_bound_holds: bool,
    pub edge_claim_holds: bool,
    pub edge_claim_violations: Vec<(usize, usize)>,
}

/// One step of the dimension-reduction recursion: picks the least `m >= 3`
/// with `k - d_m <= 10 (k - d_{m-2})`, extracts minimal gadget subsets
/// `X_j`, `Y_j` (`j <= m-2`) that keep the sumset modulo `B_m` and `B_{m-1}`,
/// forms `Z`, and checks the size bounds, the sumset inclusions, and whether
/// every edge avoiding `Z` has reweighted value in `B_{m-2}`.
pub fn recursion_step_report(g: &WeightedDigraph, fam: &GadgetFamilyLevels) -> Result<RecursionStepReport> {
    let spec = *g.spec();
    let k = spec.dim();
    let p = spec.p();
    let t = fam.levels.len();
    if t < 3 {
        return Err(Error::Precondition(format!("need at least 3 levels, got {t}")));
    }
    let dims = fam.dims();
    let hypotheses_hold = dims.windows(2).all(|w| w[0] > w[1]) && dims[0] < k;
    let d = |i: usize| dims[i - 1];
    let m = (3..=t)
        .find(|&m| k - d(m) <= 10 * (k - d(m - 2)))
        .ok_or_else(|| Error::Precondition("no level index satisfies the selection rule".into()))?;
    let level = |i: usize| &fam.levels[i - 1];
    let tau_m = level(m).stabilizer.quotient_map();
    let tau_m1 = level(m - 1).stabilizer.quotient_map();

    let minimal = |j: usize, tau: &crate::group::QuotientMap| -> Vec<&Gadget> {
        let images: Vec<usize> = level(j).gadgets.iter().map(|gd| tau.apply_idx(gd.value.index())).collect();
        let keep = reduce_keep(tau.target(), &images);
        level(j).gadgets.iter().zip(keep).filter(|(_, k)| *k).map(|(gd, _)| gd).collect()
    };

    let x_size_bound = h_bound(p, (k - d(m)) as u32);
    let y_size_bound = h_bound(p, (k - d(m - 1)) as u32);
    let mut x_sizes = Vec::new();
    let mut y_sizes = Vec::new();
    let mut inclusion_failures = Vec::new();
    let mut z: BTreeSet<usize> = BTreeSet::from([fam.v0]);
    for j in 1..=m - 2 {
        let xs = minimal(j, &tau_m);
        let ys = minimal(j, &tau_m1);
        x_sizes.push(xs.len());
        y_sizes.push(ys.len());
        let uj = &level(j).sumset;
        let with = |part: &[&Gadget], other: usize| {
            let vals = part.iter().map(|gd| gd.value.index()).chain(level(other).values.indices());
            SumsetImage::from_bits(spec, sumset_bits(&spec, vals))
        };
        if !uj.is_subset_of(&with(&xs, m)) || !uj.is_subset_of(&with(&ys, m - 1)) {
            inclusion_failures.push(j);
        }
        for gd in xs.iter().chain(&ys) {
            z.extend(gd.vertices());
        }
    }
    let size_bounds_hold =
        x_sizes.iter().all(|&s| s <= x_size_bound) && y_sizes.iter().all(|&s| s <= y_size_bound);
    let z_bound = 3 * (m - 2) * (x_size_bound + y_size_bound) + 1;
    let z_bound_6m = (d(m) < k).then(|| 6 * m * x_size_bound);
    let z_bound_holds = z.len() <= z_bound && z_bound_6m.is_none_or(|b| z.len() <= b);

    let norm = zero_out_vertex(g, fam.v0)?;
    let b = &level(m - 2).stabilizer;
    let mut edge_claim_violations = Vec::new();
    for x in (0..g.n()).filter(|x| !z.contains(x)) {
        for y in (0..g.n()).filter(|y| *y != x && !z.contains(y)) {
            if !b.contains_idx(norm.weight_idx(x, y)) {
                edge_claim_violations.push((x, y));
            }
        }
    }
    Ok(RecursionStepReport {
        k,
        dims,
        hypotheses_hold,
        m,
        x_sizes,
        y_sizes,
        x_size_bound,
        y_size_bound,
        size_bounds_hold,
        inclusions_hold: inclusion_failures.is_empty(),
        inclusion_failures,
        z: z.into_iter().collect(),
        z_bound,
        z_bound_6m,
        z_bound_holds,
        edge_claim_holds: edge_claim_violations.is_empty(),
        edge_claim_violations,
    })
}
