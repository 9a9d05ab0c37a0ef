//! Arithmetic and linear algebra in `Z_p^k`, viewed as the vector space `F_p^k`.
//!
//! Elements carry a canonical index `sum_i coords[i] * p^i` (mixed radix, little
//! endian). Every deterministic tie-break in the crate uses this index order.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::sumset::Multiset;

/// Largest group order accepted unless a caller asks for more.
pub const DEFAULT_CAPACITY: usize = 1 << 24;

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let n = n as u64;
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// Multiplicative inverse of a nonzero residue modulo a prime.
pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a as u64, p as u64 - 2, p as u64) as u32
}

/// The group `Z_p^k` for a prime `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct GroupSpec {
    p: u32,
    k: u32,
}

#[derive(Deserialize)]
struct RawSpec {
    p: u32,
    k: u32,
}

impl TryFrom<RawSpec> for GroupSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        GroupSpec::new(raw.p, raw.k)
    }
}

impl GroupSpec {
    pub fn new(p: u32, k: u32) -> Result<Self> {
        Self::with_capacity(p, k, DEFAULT_CAPACITY)
    }

    /// `k = 0` is accepted and denotes the trivial group; quotients by the
    /// whole space land there.
    pub fn with_capacity(p: u32, k: u32, capacity: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let mut order: usize = 1;
        for _ in 0..k {
            order = order
                .checked_mul(p as usize)
                .filter(|&o| o <= capacity)
                .ok_or(Error::CapacityExceeded { p, k, capacity })?;
        }
        if order > capacity {
            return Err(Error::CapacityExceeded { p, k, capacity });
        }
        Ok(GroupSpec { p, k })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.k as usize
    }

    /// `p^k`.
    pub fn order(&self) -> usize {
        (self.p as usize).pow(self.k)
    }

    pub fn coords_of(&self, mut index: usize) -> Vec<u32> {
        let p = self.p as usize;
        let mut out = Vec::with_capacity(self.dim());
        for _ in 0..self.k {
            out.push((index % p) as u32);
            index /= p;
        }
        out
    }

    /// Inverse of [`coords_of`](Self::coords_of); coordinates are reduced mod `p`.
    pub fn index_of(&self, coords: &[u32]) -> usize {
        let p = self.p as usize;
        coords
            .iter()
            .rev()
            .fold(0usize, |acc, &c| acc * p + (c % self.p) as usize)
    }

    pub fn element(&self, coords: &[u32]) -> Result<GroupElement> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        if let Some(&bad) = coords.iter().find(|&&c| c >= self.p) {
            return Err(Error::CoordinateOutOfRange { value: bad, p: self.p });
        }
        Ok(GroupElement {
            index: self.index_of(coords),
            coords: coords.to_vec(),
        })
    }

    pub fn element_at(&self, index: usize) -> GroupElement {
        assert!(index < self.order(), "index {index} outside Z_{}^{}", self.p, self.k);
        GroupElement {
            index,
            coords: self.coords_of(index),
        }
    }

    pub fn zero(&self) -> GroupElement {
        self.element_at(0)
    }

    /// The elementary basis vector `e_i` (0-based `i`).
    pub fn basis(&self, i: usize) -> GroupElement {
        assert!(i < self.dim());
        self.element_at((self.p as usize).pow(i as u32))
    }

    pub fn add_idx(&self, a: usize, b: usize) -> usize {
        let p = self.p as usize;
        let (mut a, mut b) = (a, b);
        let (mut out, mut place) = (0usize, 1usize);
        for _ in 0..self.k {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out
    }

    pub fn neg_idx(&self, a: usize) -> usize {
        let p = self.p as usize;
        let mut a = a;
        let (mut out, mut place) = (0usize, 1usize);
        for _ in 0..self.k {
            out += ((p - a % p) % p) * place;
            a /= p;
            place *= p;
        }
        out
    }

    pub fn sub_idx(&self, a: usize, b: usize) -> usize {
        self.add_idx(a, self.neg_idx(b))
    }

    pub fn scale_idx(&self, lambda: u32, a: usize) -> usize {
        let p = self.p as usize;
        let l = (lambda % self.p) as usize;
        let mut a = a;
        let (mut out, mut place) = (0usize, 1usize);
        for _ in 0..self.k {
            out += (l * (a % p) % p) * place;
            a /= p;
            place *= p;
        }
        out
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.element_at(self.add_idx(a.index, b.index))
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.element_at(self.sub_idx(a.index, b.index))
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        self.element_at(self.neg_idx(a.index))
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a GroupElement>>(&self, items: I) -> GroupElement {
        let idx = items
            .into_iter()
            .fold(0usize, |acc, e| self.add_idx(acc, e.index));
        self.element_at(idx)
    }

    /// Canonical representative of the line `<x>`: first nonzero coordinate scaled to 1.
    /// Returns 0 for the zero vector.
    pub fn direction_idx(&self, x: usize) -> usize {
        let coords = self.coords_of(x);
        match coords.iter().find(|&&c| c != 0) {
            None => 0,
            Some(&lead) => self.scale_idx(inv_mod(lead, self.p), x),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z_{}^{}", self.p, self.k)
    }
}

/// A vector of `Z_p^k` together with its canonical index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    index: usize,
    coords: Vec<u32>,
}

impl GroupElement {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.index == 0
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords.serialize(serializer)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Row-reduces `rows` in place over `F_p` and returns the pivot columns.
/// Zero rows are dropped, so `rows.len()` becomes the rank.
pub(crate) fn row_reduce(rows: &mut Vec<Vec<u32>>, p: u32, width: usize) -> Vec<usize> {
    let p64 = p as u64;
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..width {
        let Some(sel) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = inv_mod(rows[r][col], p) as u64;
        for c in rows[r].iter_mut() {
            *c = (*c as u64 * inv % p64) as u32;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col] != 0 {
                let factor = rows[i][col] as u64;
                for c in 0..width {
                    let sub = factor * rows[r][c] as u64 % p64;
                    rows[i][c] = ((rows[i][c] as u64 + p64 - sub) % p64) as u32;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// Dimension of the span of the given element indices.
pub fn rank_of_indices(spec: &GroupSpec, elements: &[usize]) -> usize {
    let mut distinct: Vec<usize> = elements.iter().copied().filter(|&e| e != 0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let mut rows: Vec<Vec<u32>> = distinct.iter().map(|&e| spec.coords_of(e)).collect();
    row_reduce(&mut rows, spec.p, spec.dim()).len()
}

/// `dim span(S)`.
pub fn rank(s: &Multiset) -> usize {
    let idx: Vec<usize> = s.elements().iter().map(|e| e.index()).collect();
    rank_of_indices(s.spec(), &idx)
}

/// A `k x k` matrix over `F_p` acting on coordinate vectors (`y = M x`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearMap {
    spec: GroupSpec,
    matrix: Vec<Vec<u32>>,
}

impl LinearMap {
    pub fn new(spec: GroupSpec, matrix: Vec<Vec<u32>>) -> Result<Self> {
        let k = spec.dim();
        if matrix.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: matrix.len() });
        }
        for row in &matrix {
            if row.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: row.len() });
            }
            if let Some(&bad) = row.iter().find(|&&c| c >= spec.p) {
                return Err(Error::CoordinateOutOfRange { value: bad, p: spec.p });
            }
        }
        Ok(LinearMap { spec, matrix })
    }

    pub fn identity(spec: GroupSpec) -> Self {
        let k = spec.dim();
        let matrix = (0..k)
            .map(|i| (0..k).map(|j| u32::from(i == j)).collect())
            .collect();
        LinearMap { spec, matrix }
    }

    pub fn matrix(&self) -> &[Vec<u32>] {
        &self.matrix
    }

    pub fn apply_idx(&self, x: usize) -> usize {
        let p = self.spec.p as u64;
        let xc = self.spec.coords_of(x);
        let y: Vec<u32> = self
            .matrix
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&xc)
                    .fold(0u64, |acc, (&a, &b)| (acc + a as u64 * b as u64) % p) as u32
            })
            .collect();
        self.spec.index_of(&y)
    }

    pub fn apply(&self, x: &GroupElement) -> GroupElement {
        self.spec.element_at(self.apply_idx(x.index()))
    }

    pub fn is_injective(&self) -> bool {
        let mut rows = self.matrix.clone();
        row_reduce(&mut rows, self.spec.p, self.spec.dim()).len() == self.spec.dim()
    }
}

/// A subspace of `F_p^k` stored by its reduced row-echelon basis, so equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    spec: GroupSpec,
    basis: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Subspace", 2)?;
        st.serialize_field("dim", &self.dim())?;
        st.serialize_field("basis", &self.basis)?;
        st.end()
    }
}

impl Subspace {
    pub fn zero(spec: GroupSpec) -> Self {
        Subspace { spec, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn whole(spec: GroupSpec) -> Self {
        Self::span(spec, (0..spec.dim()).map(|i| (spec.p as usize).pow(i as u32)))
    }

    pub fn span<I: IntoIterator<Item = usize>>(spec: GroupSpec, generators: I) -> Self {
        let mut rows: Vec<Vec<u32>> = generators
            .into_iter()
            .filter(|&g| g != 0)
            .map(|g| spec.coords_of(g))
            .collect();
        let pivots = row_reduce(&mut rows, spec.p, spec.dim());
        Subspace { spec, basis: rows, pivots }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn basis(&self) -> Vec<GroupElement> {
        self.basis.iter().map(|r| self.spec.element_at(self.spec.index_of(r))).collect()
    }

    pub fn size(&self) -> usize {
        (self.spec.p as usize).pow(self.dim() as u32)
    }

    /// Clears the pivot coordinates of `coords` using the basis rows. The result
    /// is the canonical representative of the coset `coords + B`.
    fn reduce_coords(&self, coords: &mut [u32]) {
        let p = self.spec.p as u64;
        for (row, &piv) in self.basis.iter().zip(&self.pivots) {
            let f = coords[piv] as u64;
            if f == 0 {
                continue;
            }
            for (c, &r) in coords.iter_mut().zip(row) {
                *c = ((*c as u64 + p - f * r as u64 % p) % p) as u32;
            }
        }
    }

    pub fn contains_idx(&self, x: usize) -> bool {
        let mut c = self.spec.coords_of(x);
        self.reduce_coords(&mut c);
        c.iter().all(|&v| v == 0)
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.contains_idx(x.index())
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|r| other.contains_idx(self.spec.index_of(r)))
    }

    /// All member indices in ascending order.
    pub fn element_indices(&self) -> Vec<usize> {
        let mut out = vec![0usize];
        for row in &self.basis {
            let b = self.spec.index_of(row);
            let mut next = Vec::with_capacity(out.len() * self.spec.p as usize);
            for &x in &out {
                let mut y = x;
                for _ in 0..self.spec.p {
                    next.push(y);
                    y = self.spec.add_idx(y, b);
                }
            }
            out = next;
        }
        out.sort_unstable();
        out
    }

    /// The natural projection `Z_p^k -> Z_p^k / B`, realized on the coordinates
    /// outside the pivot columns of `B`.
    pub fn quotient_map(&self) -> QuotientMap {
        let free_cols: Vec<usize> = (0..self.spec.dim())
            .filter(|c| !self.pivots.contains(c))
            .collect();
        let target = GroupSpec { p: self.spec.p, k: free_cols.len() as u32 };
        QuotientMap { source: self.clone(), free_cols, target }
    }
}

/// Surjective linear map with kernel exactly the defining subspace.
#[derive(Clone, Debug)]
pub struct QuotientMap {
    source: Subspace,
    free_cols: Vec<usize>,
    target: GroupSpec,
}

impl QuotientMap {
    pub fn target(&self) -> &GroupSpec {
        &self.target
    }

    pub fn kernel(&self) -> &Subspace {
        &self.source
    }

    pub fn apply_idx(&self, x: usize) -> usize {
        let mut c = self.source.spec.coords_of(x);
        self.source.reduce_coords(&mut c);
        let image: Vec<u32> = self.free_cols.iter().map(|&i| c[i]).collect();
        self.target.index_of(&image)
    }

    pub fn apply(&self, x: &GroupElement) -> GroupElement {
        self.target.element_at(self.apply_idx(x.index()))
    }
}
