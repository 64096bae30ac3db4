//! Benchmark harness and command-line tools for the `cdqp` solver: a plain
//! text problem and cache format, a pinned random generator for initial
//! points, the backend benchmark and the `cdqp` CLI.

pub mod bench;
pub mod cli;
pub mod io;
pub mod rng;
