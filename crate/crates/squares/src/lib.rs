//! Squares: a counter-based middle-square random number generator.
//!
//! The i-th output is a pure function of a 64-bit counter and a 64-bit key;
//! there is no generator state. That makes streams trivially parallel: give
//! each worker a disjoint counter range (or its own key) and evaluate
//! kernels in any order. Two kernels are provided, a 4-round 32-bit output
//! and a 5-round 64-bit output.
//!
//! - [`kernel`]: the stateless transforms and reduced-width analogs.
//! - [`keys`]: the "different digits" key utility and key-file formats.
//! - [`stream`]: sequential cursors, O(1) skip, partitioning, floats, bytes.
//! - [`stats`]: a desk-scale statistical battery with p-value numerics.
//! - [`selftest`]: known-answer fixtures shared by the CLI self test.

pub mod kernel;
pub mod keys;
pub mod selftest;
pub mod stats;
pub mod stream;

pub use kernel::{squares32, squares64};
pub use keys::{key_from_index, Key, KeyFile, KeyIndex};
pub use stream::{OutputWidth, Partition, SquaresStream};
