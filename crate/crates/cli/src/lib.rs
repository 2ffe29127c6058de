//! Command-line front end: problem files, single solves and the benchmark
//! experiments.

pub mod args;
pub mod bench;
pub mod commands;
pub mod problem;
