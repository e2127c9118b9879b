//! Generalized `(p, q)` Wasserstein barycenters of discrete measures, the
//! clique-gadget embeddings behind their hardness, and exact solvers for
//! small instances.

// `!(x >= 1.0)` deliberately rejects NaN; index loops walk several parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bary;
pub mod chub;
pub mod embed;
pub mod error;
pub mod fpq;
pub mod graph;
pub mod lp;
pub mod qexp;
pub mod reduction;
pub mod tuples;
pub mod verify;

pub use error::{Error, Result};
