//! Simulation kernels for random real trees and their subordinate structures.
//!
//! The crate is organised around a single pipeline:
//!
//! * [`coded_tree`] — deterministic trees coded by nonnegative excursion
//!   functions, genealogical queries, and subordination by a monotone
//!   function.
//! * [`snake`] — the lattice Brownian snake: a tree-indexed Gaussian label
//!   field driven by a reflected walk lifetime, with exit measures and
//!   excursion decompositions.
//! * [`levy`] — downward-skip-free walks in the stable domain of attraction,
//!   the linear-time discrete height process, level local times, and the
//!   closed-form height-tail intensity `v(h)`.
//! * [`embed`] — dyadic level-crossing skeletons of a height-like series,
//!   the embedded plane forests, and the vertex-counting time change.
//! * [`map`] — pseudo-metrics `D°`/`D*` over a snake trace, the metric net,
//!   hulls, and boundary loops of net complement components.
//! * [`looptree`] — the quotient of a height series by the facing relation,
//!   its pseudo-metrics, and the correspondence back to the snake tree.
//! * [`ltsnake`] — the snake whose spatial motion is a reflected walk
//!   carrying its local time at zero, and subordination by that local time.
//!
//! Everything is `no_std` + `alloc`: the crate does no IO and keeps all
//! randomness in explicit counter-based generators so that any result is a
//! pure function of `(parameters, seed)`.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bits;
pub mod coded_tree;
pub mod embed;
pub mod levy;
pub mod looptree;
pub mod ltsnake;
pub mod map;
pub(crate) mod math;
pub mod rmq;
pub mod rng;
pub mod snake;
pub mod stats;
