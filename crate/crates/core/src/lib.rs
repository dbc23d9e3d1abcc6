//! Connectivity-maintaining behavior mixing for multi-robot teams.
//!
//! Each timestep the team builds its proximity graph, weights every link
//! by how strongly the nominal controls push against its connectivity
//! barrier, selects the minimum connectivity constraint spanning tree
//! (MCCST) either centrally or with a distributed fragment-merging
//! protocol, and then minimally revises the nominal controls with a
//! barrier-certificate QP that enforces the tree links plus collision
//! avoidance.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI
//! and experiment drivers live in the `mccst` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod behaviors;
pub mod graph;
pub mod model;
pub mod protocol;
pub mod qp;
pub mod sim;
mod vec2;

pub use vec2::Vec2;
