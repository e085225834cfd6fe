//! Multi Expression Programming for evolving gate-level circuits.
//!
//! A chromosome is a fixed-length list of genes; each gene is either an
//! input variable or a two-input gate whose arguments point at earlier
//! genes, so every gene is itself a candidate circuit. Fitness is the
//! Hamming distance of the best gene to the target truth table, computed
//! for all genes in a single bit-parallel pass.
//!
//! The main target family is subset-sum decision tables ([`knapsack`]).

pub mod circuit;
pub mod cli;
pub mod engine;
pub mod error;
pub mod eval;
pub mod genome;
pub mod knapsack;
pub mod primitives;

pub use error::{Error, Result};
