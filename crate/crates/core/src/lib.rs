//! Exact toolkit for zero-sum cycles in complete digraphs whose edges carry
//! weights in `Z_p^k`.

pub mod digraph;
pub mod error;
pub mod gadget;
pub mod group;
pub mod matroid;
pub mod reduced;
pub mod sumset;

pub use error::{Error, Result};
pub use group::{rank, GroupElement, GroupSpec, LinearMap, QuotientMap, Subspace};
pub use sumset::{is_reduced, reduce, stabilizer, subset_sum_witness, sumset, Multiset, SumsetImage};
