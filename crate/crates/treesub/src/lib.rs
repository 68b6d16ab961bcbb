//! IO, file formats, statistical tests, and the experiment harness wrapped
//! around the `treesub-core` kernels.

pub mod config;
pub mod experiments;
pub mod formats;
pub mod report;
pub mod stats;

pub use treesub_core as core;
